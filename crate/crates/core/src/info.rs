//! Entropies, mutual informations and thermal discord, all in bits.
//!
//! Discord here is the one-way deficit conditioned on an explicit basis (or
//! block decomposition) of one subsystem; there is no optimization over
//! measurement bases.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::operator::ComplexOperator;
use crate::state::{BasisFamily, QuantumState};

/// Outcomes below this probability are dropped before renormalization.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-14;
const DISCORD_CLIP: f64 = 1e-10;

/// Which subsystem is measured, and in which (possibly block-degenerate) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementContext {
    basis: BasisFamily,
}

impl MeasurementContext {
    pub fn new(basis: BasisFamily) -> Self {
        Self { basis }
    }

    /// Computational basis of `label`.
    pub fn pointer(label: &str, dim: usize) -> Result<Self> {
        Ok(Self::new(BasisFamily::computational(label, dim)?))
    }

    pub fn target_label(&self) -> &str {
        self.basis.label()
    }

    pub fn basis(&self) -> &BasisFamily {
        &self.basis
    }

    fn validate(&self, state: &QuantumState) -> Result<()> {
        let dim = state.space().dim_of(self.target_label())?;
        if dim != self.basis.dim() {
            return Err(LabError::DimensionMismatch(format!(
                "basis of {} vectors does not span '{}' of dimension {dim}",
                self.basis.dim(),
                self.target_label()
            )));
        }
        if state.space().len() < 2 {
            return Err(LabError::InvalidSpace("conditioning needs a bipartite state".into()));
        }
        Ok(())
    }
}

/// All conditioned-entropy readouts for one state and context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscordReadout {
    pub mutual_information: f64,
    pub asymmetric_mutual_information: f64,
    pub discord: f64,
    pub conditional_entropy: f64,
    pub outcome_entropy: f64,
}

pub fn shannon_entropy(probabilities: &[f64]) -> f64 {
    let h: f64 = probabilities.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum();
    // Rounding on a near-unit eigenvalue can leave a tiny negative sum.
    if h > 0.0 { h } else { 0.0 }
}

/// `−Σ λ lg λ` over the clipped spectrum.
pub fn von_neumann_entropy(state: &QuantumState) -> Result<f64> {
    if state.amplitudes().is_some() {
        return Ok(0.0);
    }
    Ok(shannon_entropy(&state.spectrum()?))
}

/// `H_a + H_b − H_ab` computed from the reduced states of the two labels.
pub fn mutual_information(state: &QuantumState, label_a: &str, label_b: &str) -> Result<f64> {
    if label_a == label_b {
        return Err(LabError::LabelCollision(label_a.to_string()));
    }
    let joint = state.reduce(&[label_a, label_b])?;
    let h_a = von_neumann_entropy(&joint.reduce(&[label_a])?)?;
    let h_b = von_neumann_entropy(&joint.reduce(&[label_b])?)?;
    let h_ab = von_neumann_entropy(&joint)?;
    Ok(h_a + h_b - h_ab)
}

/// One Lüders branch: outcome block index, probability and renormalized state.
#[derive(Debug, Clone)]
pub struct Branch {
    pub block: usize,
    pub probability: f64,
    pub state: QuantumState,
}

/// Lüders update for every block of the context, skipping negligible outcomes.
pub fn luders_branches(state: &QuantumState, context: &MeasurementContext) -> Result<Vec<Branch>> {
    context.validate(state)?;
    let mut out = Vec::new();
    for (block, projector) in context.basis.block_projectors()?.into_iter().enumerate() {
        let p = projector.embed(state.space())?;
        let sandwiched = p.compose(state.density())?.compose(&p)?;
        let probability = sandwiched.trace().re;
        if probability < MIN_OUTCOME_PROBABILITY {
            continue;
        }
        let post = QuantumState::from_density_unchecked(sandwiched.scale_real(1.0 / probability))?;
        out.push(Branch { block, probability, state: post });
    }
    Ok(out)
}

/// Returns `(H_cond, H_outcomes)`: the average entropy of the unmeasured
/// remainder after a Lüders measurement of the context, and the Shannon
/// entropy of the outcome distribution.
pub fn conditional_entropy_after_measurement(
    state: &QuantumState,
    context: &MeasurementContext,
) -> Result<(f64, f64)> {
    let branches = luders_branches(state, context)?;
    let rest = state.space().complement(&[context.target_label()]);
    let mut h_cond = 0.0;
    let mut probabilities = Vec::with_capacity(branches.len());
    for branch in &branches {
        h_cond += branch.probability * von_neumann_entropy(&branch.state.reduce(&rest)?)?;
        probabilities.push(branch.probability);
    }
    Ok((h_cond, shannon_entropy(&probabilities)))
}

/// Every readout needed for `I`, `J` and `δ` in one pass.
pub fn discord_readout(state: &QuantumState, context: &MeasurementContext) -> Result<DiscordReadout> {
    context.validate(state)?;
    let target = context.target_label();
    let rest = state.space().complement(&[target]);
    let h_target = von_neumann_entropy(&state.reduce(&[target])?)?;
    let h_rest = von_neumann_entropy(&state.reduce(&rest)?)?;
    let h_joint = von_neumann_entropy(state)?;
    let (h_cond, h_outcomes) = conditional_entropy_after_measurement(state, context)?;
    let mutual_information = h_rest + h_target - h_joint;
    let asymmetric_mutual_information = h_rest + h_target - (h_cond + h_outcomes);
    let mut discord = mutual_information - asymmetric_mutual_information;
    if discord < 0.0 {
        if discord < -DISCORD_CLIP {
            return Err(LabError::InvariantViolation(format!("negative discord {discord:.3e}")));
        }
        discord = 0.0;
    }
    Ok(DiscordReadout {
        mutual_information,
        asymmetric_mutual_information,
        discord,
        conditional_entropy: h_cond,
        outcome_entropy: h_outcomes,
    })
}

/// `J = H_rest + H_target − (H_cond + H_outcomes)`.
pub fn asymmetric_mutual_information(state: &QuantumState, context: &MeasurementContext) -> Result<f64> {
    Ok(discord_readout(state, context)?.asymmetric_mutual_information)
}

/// Thermal discord `δ = I − J`, clipped at zero within rounding.
pub fn discord(state: &QuantumState, context: &MeasurementContext) -> Result<f64> {
    Ok(discord_readout(state, context)?.discord)
}

/// `H(post) − H(pre)`.
pub fn entropy_gap(pre: &QuantumState, post: &QuantumState) -> Result<f64> {
    if pre.space() != post.space() {
        return Err(LabError::SpaceMismatch(format!("{} vs {}", pre.space(), post.space())));
    }
    Ok(von_neumann_entropy(post)? - von_neumann_entropy(pre)?)
}

/// Removes all coherence between the blocks of `basis` (for a single-label state).
pub fn dephase(state: &QuantumState, basis: &BasisFamily) -> Result<QuantumState> {
    let mut rho = ComplexOperator::zeros(state.space().clone());
    for projector in basis.block_projectors()? {
        let p = projector.embed(state.space())?;
        rho = rho.add(&p.compose(state.density())?.compose(&p)?)?;
    }
    QuantumState::from_density_unchecked(rho)
}
