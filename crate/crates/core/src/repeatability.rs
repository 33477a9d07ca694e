//! When can a record be copied without spoiling the reversal?
//!
//! A [`RecordEnsembleSpec`] describes the post-measurement state as a mixture
//! `Σ_s p_s ρ_s` of components on system ⊗ apparatus, together with the
//! device state `|D_s⟩` that a copy would tag each component with. The checks
//! below evaluate the partial-trace condition, Hilbert–Schmidt norm
//! preservation, pairwise record orthogonality and the commutation of a copy
//! unitary with the pre-copy state.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_block_copy_unitary, build_grouped_shift, ensure_local};
use crate::error::{LabError, Result};
use crate::operator::{ComplexOperator, ZERO};
use crate::space::LabeledSpace;
use crate::state::{check_distribution, random_mixed, BasisFamily, QuantumState};

/// Off-diagonal overlaps at or below this pass.
pub const PASS_TOL: f64 = 1e-10;
/// Off-diagonal overlaps above this definitely violate orthogonality.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckStatus {
    Pass,
    Inconclusive,
    Fail,
}

impl CheckStatus {
    fn classify(worst: f64) -> Self {
        if worst <= PASS_TOL {
            CheckStatus::Pass
        } else if worst <= VIOLATION_TOL {
            CheckStatus::Inconclusive
        } else {
            CheckStatus::Fail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapScope {
    /// `Tr ρ_r^{SA} ρ_s^{SA}`.
    Joint,
    /// `Tr ρ_r^{A} ρ_s^{A}` of the apparatus reductions.
    Apparatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordEnsembleSpec {
    apparatus: String,
    device: String,
    weights: Vec<f64>,
    components: Vec<QuantumState>,
    device_states: Vec<Vec<Complex64>>,
}

impl RecordEnsembleSpec {
    /// `device_states[s]` is normalized here; components must share one space
    /// containing `apparatus` and not `device`.
    pub fn new(
        apparatus: &str,
        device: &str,
        components: Vec<(f64, QuantumState)>,
        device_states: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(LabError::InvalidDistribution("no components".into()));
        }
        if device_states.len() != components.len() {
            return Err(LabError::DimensionMismatch(format!(
                "{} device states for {} components",
                device_states.len(),
                components.len()
            )));
        }
        let (weights, components): (Vec<f64>, Vec<QuantumState>) = components.into_iter().unzip();
        check_distribution(&weights)?;
        let space = components[0].space().clone();
        if components.iter().any(|c| c.space() != &space) {
            return Err(LabError::SpaceMismatch("components live on different spaces".into()));
        }
        space.index_of(apparatus)?;
        if space.contains(device) {
            return Err(LabError::LabelCollision(device.to_string()));
        }
        let d_device = device_states[0].len();
        if d_device < 2 {
            return Err(LabError::InvalidSpace("device dimension must be >= 2".into()));
        }
        let mut normalized = Vec::with_capacity(device_states.len());
        for v in device_states {
            if v.len() != d_device {
                return Err(LabError::DimensionMismatch("device states differ in length".into()));
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(LabError::DegenerateInput("zero device state".into()));
            }
            normalized.push(v.into_iter().map(|z| z / norm).collect());
        }
        Ok(Self { apparatus: apparatus.into(), device: device.into(), weights, components, device_states: normalized })
    }

    pub fn space(&self) -> &LabeledSpace {
        self.components[0].space()
    }

    pub fn device_space(&self) -> Result<LabeledSpace> {
        LabeledSpace::single(&self.device, self.device_states[0].len())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[QuantumState] {
        &self.components
    }

    /// `ρ^{SA} = Σ_s p_s ρ_s`.
    pub fn pre_copy_state(&self) -> Result<ComplexOperator> {
        let mut rho = ComplexOperator::zeros(self.space().clone());
        for (p, c) in self.weights.iter().zip(&self.components) {
            rho = rho.add(&c.density().scale_real(*p))?;
        }
        Ok(rho)
    }

    /// `ρ^{SAD} = Σ_s p_s ρ_s ⊗ |D_s⟩⟨D_s|`.
    pub fn post_copy_state(&self) -> Result<ComplexOperator> {
        let device_space = self.device_space()?;
        let full = self.space().concat(&device_space)?;
        let mut rho = ComplexOperator::zeros(full);
        for ((p, c), d) in self.weights.iter().zip(&self.components).zip(&self.device_states) {
            let tag = ComplexOperator::outer(device_space.clone(), d)?;
            rho = rho.add(&c.density().tensor_product(&tag)?.scale_real(*p))?;
        }
        Ok(rho)
    }

    /// `|⟨D_r|D_s⟩|²`.
    pub fn device_overlap(&self, r: usize, s: usize) -> f64 {
        let inner: Complex64 =
            self.device_states[r].iter().zip(&self.device_states[s]).map(|(a, b)| a.conj() * b).sum();
        inner.norm_sqr()
    }

    fn active_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.weights.len();
        (0..n).flat_map(move |r| (0..n).map(move |s| (r, s))).filter(|&(r, s)| r != s && self.weights[r] * self.weights[s] > 0.0)
    }
}

/// Result of [`check_copy_preserves_joint`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopyCheck {
    pub holds: bool,
    /// The larger of the two residuals below.
    pub residual: f64,
    /// `‖Tr_D ρ^{SAD} − ρ^{SA}‖_F`.
    pub partial_trace_residual: f64,
    /// Hilbert–Schmidt norm mismatch that no unitary copy could produce.
    pub norm_residual: f64,
}

/// Whether the tagged mixture leaves system ⊗ apparatus untouched *and* is
/// reachable by a unitary copy (norm preservation).
pub fn check_copy_preserves_joint(spec: &RecordEnsembleSpec) -> Result<CopyCheck> {
    let labels: Vec<&str> = spec.space().labels().collect();
    let reduced = spec.post_copy_state()?.partial_trace(&labels)?;
    let partial_trace_residual = reduced.distance(&spec.pre_copy_state()?)?;
    let norm_residual = hs_identity_residual(spec)?;
    let residual = partial_trace_residual.max(norm_residual);
    Ok(CopyCheck { holds: residual <= PASS_TOL, residual, partial_trace_residual, norm_residual })
}

/// `|Tr (ρ^{SA})² − Tr (ρ^{SAD})²|`, which equals
/// `|Σ p_r p_s Tr(ρ_r ρ_s) (1 − |⟨D_r|D_s⟩|²)|`.
pub fn hs_identity_residual(spec: &RecordEnsembleSpec) -> Result<f64> {
    let before = spec.pre_copy_state()?;
    let after = spec.post_copy_state()?;
    let lhs = before.hilbert_schmidt_inner(&before)?.re;
    let rhs = after.hilbert_schmidt_inner(&after)?.re;
    Ok((lhs - rhs).abs())
}

/// Pairwise overlaps `Tr ρ_r^X ρ_s^X` and their classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub scope: OverlapScope,
    pub overlaps: Vec<Vec<f64>>,
    /// Largest off-diagonal overlap among pairs with `p_r p_s > 0`.
    pub worst_off_diagonal: f64,
    pub status: CheckStatus,
}

impl OverlapReport {
    pub fn passes(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

/// Zero-weight pairs are ignored when classifying.
pub fn pairwise_orthogonality(spec: &RecordEnsembleSpec, scope: OverlapScope) -> Result<OverlapReport> {
    let reduced: Vec<ComplexOperator> = match scope {
        OverlapScope::Joint => spec.components.iter().map(|c| c.density().clone()).collect(),
        OverlapScope::Apparatus => spec
            .components
            .iter()
            .map(|c| c.density().partial_trace(&[spec.apparatus.as_str()]))
            .collect::<Result<_>>()?,
    };
    let n = reduced.len();
    let mut overlaps = vec![vec![0.0; n]; n];
    for r in 0..n {
        for s in 0..n {
            overlaps[r][s] = reduced[r].hilbert_schmidt_inner(&reduced[s])?.re;
        }
    }
    let worst_off_diagonal = spec.active_pairs().map(|(r, s)| overlaps[r][s]).fold(0.0, f64::max);
    Ok(OverlapReport { scope, overlaps, worst_off_diagonal, status: CheckStatus::classify(worst_off_diagonal) })
}

/// Largest `‖Π_s ρ_s Π_s − ρ_s‖_F` where `Π_s` projects the apparatus onto
/// record block `s`; components are matched to blocks by position.
pub fn block_support_residual(spec: &RecordEnsembleSpec, records: &BasisFamily) -> Result<f64> {
    if records.label() != spec.apparatus {
        return Err(LabError::LabelNotFound(records.label().to_string()));
    }
    let projectors = records.block_projectors()?;
    if projectors.len() != spec.components.len() {
        return Err(LabError::DimensionMismatch(format!(
            "{} record blocks for {} components",
            projectors.len(),
            spec.components.len()
        )));
    }
    let mut worst = 0.0f64;
    for (component, projector) in spec.components.iter().zip(projectors) {
        let p = projector.embed(spec.space())?;
        let sandwiched = p.compose(component.density())?.compose(&p)?;
        worst = worst.max(sandwiched.distance(component.density())?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutationCheck {
    pub commutes: bool,
    /// `‖[U, ρ ⊗ I_D]‖_F`.
    pub residual: f64,
    /// `‖Tr_D U (ρ ⊗ |D₀⟩⟨D₀|) U† − ρ‖_F`, the direct cross-check.
    pub preservation_residual: f64,
}

/// Does the copy unitary commute with the pre-copy state?
///
/// `copy` is given on its own local space: the labels it shares with
/// `pre_copy` form the record side, the remaining labels are the device.
pub fn pointer_commutation_check(copy: &ComplexOperator, pre_copy: &QuantumState) -> Result<CommutationCheck> {
    let device_labels: Vec<&str> = copy.space().labels().filter(|l| !pre_copy.space().contains(l)).collect();
    if device_labels.is_empty() {
        return Err(LabError::LocalityViolation("copy operator has no device register".into()));
    }
    let device_space = copy.space().restrict(&device_labels)?;
    let full = pre_copy.space().concat(&device_space)?;
    let support: Vec<&str> = copy.space().labels().collect();
    ensure_local(copy, &full, &support)?;
    let u = copy.embed(&full)?;
    u.ensure_unitary()?;

    let extended = pre_copy.density().tensor_product(&ComplexOperator::identity(device_space.clone()))?;
    let residual = u.commutator(&extended)?.frobenius_norm();

    let ready = QuantumState::basis(device_space, 0)?;
    let copied = pre_copy.tensor(&ready)?.evolve(&u)?;
    let kept: Vec<&str> = pre_copy.space().labels().collect();
    let preservation_residual = copied.reduce(&kept)?.distance(pre_copy)?;
    Ok(CommutationCheck { commutes: residual <= PASS_TOL, residual, preservation_residual })
}

/// A randomly generated measurement whose records occupy orthogonal
/// apparatus blocks, with everything needed to run and check it.
#[derive(Debug, Clone)]
pub struct BlockRecordInstance {
    /// Space `S ⊗ A ⊗ D`.
    pub space: LabeledSpace,
    /// Pre-measurement `ρ^S ⊗ ρ^A ⊗ |D₀⟩⟨D₀|`.
    pub initial: QuantumState,
    /// Measurement unitary on `S ⊗ A`.
    pub measurement: ComplexOperator,
    /// Block-conditioned copy on `A ⊗ D`.
    pub copy: ComplexOperator,
    pub records: BasisFamily,
    pub spec: RecordEnsembleSpec,
}

impl BlockRecordInstance {
    /// `d_system` system levels grouped round-robin into `blocks` outcomes;
    /// the apparatus has `blocks · block_size` levels and starts mixed inside
    /// block 0; the system state is random but commutes with the groups.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, d_system: usize, blocks: usize, block_size: usize) -> Result<Self> {
        if blocks < 2 || d_system < blocks || block_size == 0 {
            return Err(LabError::InvalidSpace(format!(
                "need 2 <= blocks <= d_system and block_size >= 1 (got {blocks}, {d_system}, {block_size})"
            )));
        }
        let d_apparatus = blocks * block_size;
        let s_space = LabeledSpace::single("S", d_system)?;
        let a_space = LabeledSpace::single("A", d_apparatus.max(2))?;
        let d_space = LabeledSpace::single("D", blocks)?;
        let sa = s_space.concat(&a_space)?;
        let space = sa.concat(&d_space)?;

        let groups: Vec<usize> = (0..d_system).map(|s| s % blocks).collect();
        let group_blocks: Vec<Vec<usize>> =
            (0..blocks).map(|g| (0..d_system).filter(|s| groups[*s] == g).collect()).collect();
        let s_groups = BasisFamily::computational_blocks("S", d_system, group_blocks)?;
        let rho_s = crate::info::dephase(&random_mixed(s_space, rng), &s_groups)?;

        let rho_a = if block_size == 1 {
            QuantumState::basis(a_space.clone(), 0)?
        } else {
            let inner = random_mixed(LabeledSpace::single("A", block_size)?, rng);
            let m = inner.density().matrix();
            let rho = ComplexOperator::from_fn(a_space.clone(), |i, j| {
                if i < block_size && j < block_size {
                    m[(i, j)]
                } else {
                    ZERO
                }
            });
            QuantumState::from_density(rho)?
        };

        let measurement = build_grouped_shift(&sa, "S", &groups, "A", block_size)?;
        let record_blocks: Vec<Vec<usize>> =
            (0..blocks).map(|g| (g * block_size..(g + 1) * block_size).collect()).collect();
        let records = BasisFamily::computational_blocks("A", d_apparatus, record_blocks)?;
        let ad = space.restrict(&["A", "D"])?;
        let copy = build_block_copy_unitary(&ad, &records, "D")?;

        let pre_sa = rho_s.tensor(&rho_a)?.evolve(&measurement)?;
        let mut components = Vec::with_capacity(blocks);
        for projector in records.block_projectors()? {
            let p = projector.embed(&sa)?;
            let part = p.compose(pre_sa.density())?.compose(&p)?;
            let weight = part.trace().re;
            let state = if weight > 0.0 {
                QuantumState::from_density_unchecked(part.scale_real(1.0 / weight))?
            } else {
                QuantumState::maximally_mixed(sa.clone())
            };
            components.push((weight, state));
        }
        // Renormalize away rounding in the weights.
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        for c in components.iter_mut() {
            c.0 /= total;
        }
        let device_states = (0..blocks)
            .map(|g| (0..blocks).map(|k| Complex64::new(if k == g { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        let spec = RecordEnsembleSpec::new("A", "D", components, device_states)?;
        let initial = rho_s.tensor(&rho_a)?.tensor(&QuantumState::basis(d_space, 0)?)?;
        Ok(Self { space, initial, measurement, copy, records, spec })
    }
}

/// Two components orthogonal on `S ⊗ A` only through the system:
/// `|0⟩⟨0| ⊗ |+⟩⟨+|` and `|1⟩⟨1| ⊗ |0⟩⟨0|`.
pub fn system_orthogonal_spec() -> Result<RecordEnsembleSpec> {
    let sa = LabeledSpace::new([("S", 2), ("A", 2)])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |x: f64| Complex64::new(x, 0.0);
    let first = crate::state::pure_from_amplitudes(sa.clone(), &[c(h), c(h), c(0.0), c(0.0)])?;
    let second = QuantumState::basis(sa, 2)?;
    RecordEnsembleSpec::new("A", "D", vec![(0.5, first), (0.5, second)], vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]])
}
