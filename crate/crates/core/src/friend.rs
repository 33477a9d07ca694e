//! Verifying that a record exists without reading it.
//!
//! A friend measures an observable on system ⊗ apparatus. If the observable
//! is degenerate on the "records agree" subspace, the Lüders update leaves
//! the correlated state untouched and the measurement can still be undone;
//! a non-degenerate observable reveals the outcome (or the Bell phase) and
//! blocks the reversal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_measurement_unitary, ReversalFidelities};
use crate::error::{LabError, Result};
use crate::info::MIN_OUTCOME_PROBABILITY;
use crate::operator::{ComplexOperator, ZERO};
use crate::space::LabeledSpace;
use crate::state::{mix, pure_from_amplitudes, QuantumState};
use crate::{APPARATUS, SYSTEM};

pub const DEFAULT_YES: f64 = 1.0;
pub const DEFAULT_NO: f64 = 0.0;
/// `(b⁺₌, b⁻₌, b⁺≠, b⁻≠)`.
pub const DEFAULT_BELL: [f64; 4] = [3.0, 1.0, -1.0, -3.0];

/// One eigenspace of a consensus observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    /// Symbolic eigenvalue names merged into this eigenspace.
    pub tags: Vec<String>,
    pub eigenvalue: f64,
    pub projector: ComplexOperator,
}

/// A Hermitian observable on system ⊗ apparatus with its eigenspace projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusOperator {
    operator: ComplexOperator,
    sectors: Vec<Sector>,
}

impl ConsensusOperator {
    /// Merges rank-1 terms with equal eigenvalues into shared projectors.
    fn from_terms(space: LabeledSpace, terms: Vec<(String, f64, Vec<Complex64>)>) -> Result<Self> {
        let mut sectors: Vec<Sector> = Vec::new();
        for (tag, value, vector) in terms {
            let p = ComplexOperator::outer(space.clone(), &vector)?;
            match sectors.iter_mut().find(|s| s.eigenvalue == value) {
                Some(sector) => {
                    sector.tags.push(tag);
                    sector.projector = sector.projector.add(&p)?;
                }
                None => sectors.push(Sector { tags: vec![tag], eigenvalue: value, projector: p }),
            }
        }
        let mut operator = ComplexOperator::zeros(space.clone());
        let mut completeness = ComplexOperator::zeros(space.clone());
        for sector in &sectors {
            operator = operator.add(&sector.projector.scale_real(sector.eigenvalue))?;
            completeness = completeness.add(&sector.projector)?;
        }
        let deviation = completeness.sub(&ComplexOperator::identity(space))?.max_abs();
        if deviation > 1e-12 {
            return Err(LabError::InvariantViolation(format!("projectors are not complete ({deviation:.3e})")));
        }
        Ok(Self { operator, sectors })
    }

    pub fn operator(&self) -> &ComplexOperator {
        &self.operator
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn space(&self) -> &LabeledSpace {
        self.operator.space()
    }

    /// The sector carrying `tag`, if any.
    pub fn sector(&self, tag: &str) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.tags.iter().any(|t| t == tag))
    }
}

fn basis_vector(dim: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; dim];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// `Σ_s y_s |s A_s⟩⟨s A_s| + Σ_{r≠s} n_rs |r A_s⟩⟨r A_s|` on `S(d) ⊗ A(d)`.
///
/// `no` holds either one shared value or `d(d−1)` values ordered by `(r, s)`
/// with `r ≠ s` in lexicographic order (for qubits: `n`, `n′`).
pub fn build_record_check(d: usize, yes: &[f64], no: &[f64]) -> Result<ConsensusOperator> {
    if d < 2 {
        return Err(LabError::InvalidSpace("record check needs d >= 2".into()));
    }
    if yes.len() != d {
        return Err(LabError::DimensionMismatch(format!("{} yes-eigenvalues for d = {d}", yes.len())));
    }
    let pairs = d * (d - 1);
    if no.len() != 1 && no.len() != pairs {
        return Err(LabError::DimensionMismatch(format!("need 1 or {pairs} no-eigenvalues, got {}", no.len())));
    }
    if yes.iter().chain(no).any(|v| !v.is_finite()) {
        return Err(LabError::DegenerateInput("eigenvalues must be finite".into()));
    }
    let space = LabeledSpace::new([(SYSTEM, d), (APPARATUS, d)])?;
    let dim = space.dim();
    let mut terms = Vec::with_capacity(dim);
    for (s, &y) in yes.iter().enumerate() {
        terms.push((format!("y{s}"), y, basis_vector(dim, s * d + s)));
    }
    let mut k = 0;
    for r in 0..d {
        for s in 0..d {
            if r != s {
                let value = if no.len() == 1 { no[0] } else { no[k] };
                terms.push((format!("n{r}{s}"), value, basis_vector(dim, r * d + s)));
                k += 1;
            }
        }
    }
    ConsensusOperator::from_terms(space, terms)
}

/// The consensus operator: one shared "agree" eigenvalue and one shared "error" eigenvalue.
pub fn build_consensus(d: usize) -> Result<ConsensusOperator> {
    build_record_check(d, &vec![DEFAULT_YES; d], &[DEFAULT_NO])
}

/// Two-qubit Bell observable `Σ b |β⟩⟨β|` with
/// `|β±₌⟩ = (|↑A↑⟩ ± |↓A↓⟩)/√2` and `|β±≠⟩ = (|↑A↓⟩ ± |↓A↑⟩)/√2`.
pub fn build_bell_check(eq_plus: f64, eq_minus: f64, ne_plus: f64, ne_minus: f64) -> Result<ConsensusOperator> {
    let space = LabeledSpace::new([(SYSTEM, 2), (APPARATUS, 2)])?;
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let bell = |a: usize, b: usize, sign: f64| {
        let mut v = vec![ZERO; 4];
        v[a] = h;
        v[b] = h * sign;
        v
    };
    let terms = vec![
        ("b+=".to_string(), eq_plus, bell(0, 3, 1.0)),
        ("b-=".to_string(), eq_minus, bell(0, 3, -1.0)),
        ("b+!=".to_string(), ne_plus, bell(1, 2, 1.0)),
        ("b-!=".to_string(), ne_minus, bell(1, 2, -1.0)),
    ];
    ConsensusOperator::from_terms(space, terms)
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub tags: Vec<String>,
    pub eigenvalue: f64,
    pub probability: f64,
    pub post_state: QuantumState,
}

/// Lüders measurement of `op` (extended by identity to the state's space).
pub fn projective_measure(state: &QuantumState, op: &ConsensusOperator) -> Result<Vec<MeasurementOutcome>> {
    let mut out = Vec::new();
    for sector in &op.sectors {
        let p = sector.projector.embed(state.space())?;
        let part = p.compose(state.density())?.compose(&p)?;
        let probability = part.trace().re;
        if probability < MIN_OUTCOME_PROBABILITY {
            continue;
        }
        let post_state = QuantumState::from_density_unchecked(part.scale_real(1.0 / probability))?;
        out.push(MeasurementOutcome { tags: sector.tags.clone(), eigenvalue: sector.eigenvalue, probability, post_state });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub tags: Vec<String>,
    pub eigenvalue: f64,
    pub probability: f64,
    /// Fidelity of the reversed branch with the initial `S ⊗ A` state.
    pub fidelity_joint: f64,
    /// Fidelity of the reversed branch's system with the initial superposition.
    pub fidelity_system: f64,
}

/// Measure → verify → reverse, per branch and averaged over branches.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub branches: Vec<BranchReport>,
    /// Outcome-averaged state after the reversal.
    pub unconditioned: QuantumState,
    pub fidelities: ReversalFidelities,
}

/// Runs the record-writing measurement on `Σ α_s |s⟩ ⊗ |A₀⟩`, lets the
/// friend measure `verifier`, then applies the inverse measurement.
pub fn reversal_after_verification(amplitudes: &[Complex64], verifier: &ConsensusOperator) -> Result<VerificationReport> {
    let space = verifier.space().clone();
    let d = space.dim_of(SYSTEM)?;
    if amplitudes.len() != d {
        return Err(LabError::DimensionMismatch(format!("{} amplitudes for d = {d}", amplitudes.len())));
    }
    let system = pure_from_amplitudes(LabeledSpace::single(SYSTEM, d)?, amplitudes)?;
    let ready = QuantumState::basis(LabeledSpace::single(APPARATUS, space.dim_of(APPARATUS)?)?, 0)?;
    let initial = system.tensor(&ready)?;
    let unitary = build_measurement_unitary(&space, SYSTEM, APPARATUS)?;
    let measured = initial.evolve(&unitary)?;

    let mut branches = Vec::new();
    let mut reversed_states = Vec::new();
    let mut weights = Vec::new();
    for outcome in projective_measure(&measured, verifier)? {
        let reversed = outcome.post_state.evolve(&unitary.adjoint())?;
        let f = ReversalFidelities::compare(&initial, &reversed, SYSTEM, APPARATUS)?;
        branches.push(BranchReport {
            tags: outcome.tags,
            eigenvalue: outcome.eigenvalue,
            probability: outcome.probability,
            fidelity_joint: f.joint,
            fidelity_system: f.system,
        });
        weights.push(outcome.probability);
        reversed_states.push(reversed);
    }
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let unconditioned = mix(&reversed_states, &weights)?;
    let fidelities = ReversalFidelities::compare(&initial, &unconditioned, SYSTEM, APPARATUS)?;
    Ok(VerificationReport { branches, unconditioned, fidelities })
}
