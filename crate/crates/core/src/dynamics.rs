//! Measurement and copy unitaries, reversal attempts and staged transcripts.
//!
//! Every measurement unitary built here is a controlled cyclic shift: the
//! pointer register is advanced by the (group index of the) source value,
//! modulo the pointer dimension. With the pointer starting at index 0 this
//! writes the record `|s⟩|A₀⟩ → |s⟩|A_s⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::operator::ComplexOperator;
use crate::space::LabeledSpace;
use crate::state::{fidelity, BasisFamily, QuantumState, REVERSAL_TOL};

/// Fidelity above `1 - GRAY_ZONE` but below the reversal threshold is reported
/// as inconclusive rather than as a failure.
pub const GRAY_ZONE: f64 = 1e-6;
/// Tolerance for replaying a transcript step.
pub const REPLAY_TOL: f64 = 1e-10;

/// Pointer shift conditioned on a grouping of the source basis:
/// `|s⟩|p⟩ → |s⟩|p + stride·group[s] mod d_pointer⟩`, identity elsewhere.
pub fn build_grouped_shift(
    space: &LabeledSpace,
    source: &str,
    groups: &[usize],
    pointer: &str,
    stride: usize,
) -> Result<ComplexOperator> {
    let s_pos = space.index_of(source)?;
    let p_pos = space.index_of(pointer)?;
    if s_pos == p_pos {
        return Err(LabError::LabelCollision(source.to_string()));
    }
    let d_source = space.subsystems()[s_pos].dim;
    let d_pointer = space.subsystems()[p_pos].dim;
    if groups.len() != d_source {
        return Err(LabError::DimensionMismatch(format!(
            "grouping has {} entries for '{source}' of dimension {d_source}",
            groups.len()
        )));
    }
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    if n_groups * stride > d_pointer {
        return Err(LabError::RecordCapacity(format!(
            "pointer '{pointer}' of dimension {d_pointer} cannot hold {n_groups} distinct records (stride {stride})"
        )));
    }
    let perm: Vec<usize> = (0..space.dim())
        .map(|index| {
            let mut digits = space.digits(index);
            digits[p_pos] = (digits[p_pos] + stride * groups[digits[s_pos]]) % d_pointer;
            space.join(&digits)
        })
        .collect();
    ComplexOperator::permutation(space.clone(), &perm)
}

/// `Σ_{s,k} |s⟩⟨s| ⊗ |A_{k+s}⟩⟨A_k|` on `space`, identity on other labels.
pub fn build_measurement_unitary(space: &LabeledSpace, source: &str, pointer: &str) -> Result<ComplexOperator> {
    let d_source = space.dim_of(source)?;
    let d_pointer = space.dim_of(pointer)?;
    if d_pointer < d_source {
        return Err(LabError::RecordCapacity(format!(
            "pointer '{pointer}' has dimension {d_pointer} < {d_source} of '{source}'"
        )));
    }
    let groups: Vec<usize> = (0..d_source).collect();
    build_grouped_shift(space, source, &groups, pointer, 1)
}

/// Copy that shifts `device` by the block index of the record held in
/// `records.label()`. With singleton blocks this is the plain shift copy.
pub fn build_block_copy_unitary(space: &LabeledSpace, records: &BasisFamily, device: &str) -> Result<ComplexOperator> {
    let d_record = space.dim_of(records.label())?;
    if d_record != records.dim() {
        return Err(LabError::DimensionMismatch(format!(
            "record basis has {} vectors for '{}' of dimension {d_record}",
            records.dim(),
            records.label()
        )));
    }
    let is_computational = records.vectors().iter().enumerate().all(|(i, v)| {
        v.iter().enumerate().all(|(j, z)| (z.re - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12 && z.im.abs() < 1e-12)
    });
    let shift = build_grouped_shift(space, records.label(), &records.block_of(), device, 1)?;
    if is_computational {
        return Ok(shift);
    }
    // Rotate into the record basis, shift, rotate back.
    let local = LabeledSpace::single(records.label(), d_record)?;
    let change = ComplexOperator::from_fn(local, |i, j| records.vectors()[j][i]).embed(space)?;
    change.compose(&shift)?.compose(&change.adjoint())
}

/// `U ρ U†` for a unitary on the state's space (or on a subset of its labels).
pub fn measure(state: &QuantumState, unitary: &ComplexOperator) -> Result<QuantumState> {
    state.evolve(unitary)
}

/// Applies a copy unitary that may only act on `support`.
///
/// An operator on a subset of the state's labels is extended by identity; an
/// operator on the full space must factor as `I ⊗ V` with `V` on `support`.
pub fn copy_record(state: &QuantumState, copy: &ComplexOperator, support: &[&str]) -> Result<QuantumState> {
    ensure_local(copy, state.space(), support)?;
    state.evolve(copy)
}

pub(crate) fn ensure_local(op: &ComplexOperator, full: &LabeledSpace, support: &[&str]) -> Result<()> {
    for label in support {
        full.index_of(label)?;
    }
    if let Some(outside) = op.space().labels().find(|l| !support.contains(l)) {
        if op.space() != full {
            return Err(LabError::LocalityViolation(format!(
                "copy operator acts on '{outside}', outside its support {support:?}"
            )));
        }
    }
    if op.space() == full && support.len() < full.len() {
        let rest = full.complement(support);
        let rest_dim: usize = rest.iter().map(|l| full.dim_of(l).unwrap_or(1)).product();
        let local = op.partial_trace(support)?.scale_real(1.0 / rest_dim as f64);
        let rebuilt = local.embed(full)?;
        let residual = rebuilt.sub(op)?.max_abs();
        if residual > 1e-10 {
            return Err(LabError::LocalityViolation(format!(
                "copy operator touches {rest:?} (factorization residual {residual:.3e})"
            )));
        }
    }
    Ok(())
}

/// Applies the adjoint of the measurement unitary.
pub fn attempt_reversal(state: &QuantumState, measurement: &ComplexOperator) -> Result<QuantumState> {
    state.evolve(&measurement.adjoint())
}

/// Outcome of a reversal attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Reversed,
    Partial,
    NotReversed,
    Inconclusive,
}

impl Verdict {
    /// Overall verdict from the joint and apparatus restoration fidelities.
    pub fn from_fidelities(joint: f64, apparatus: f64, tol: f64) -> Verdict {
        if joint >= 1.0 - tol {
            Verdict::Reversed
        } else if joint >= 1.0 - GRAY_ZONE {
            Verdict::Inconclusive
        } else if apparatus >= 1.0 - tol {
            Verdict::Partial
        } else {
            Verdict::NotReversed
        }
    }

    /// Verdict for a single subsystem.
    pub fn from_fidelity(value: f64, tol: f64) -> Verdict {
        if value >= 1.0 - tol {
            Verdict::Reversed
        } else if value >= 1.0 - GRAY_ZONE {
            Verdict::Inconclusive
        } else {
            Verdict::NotReversed
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Reversed => "REVERSED",
            Verdict::Partial => "PARTIAL",
            Verdict::NotReversed => "NOT_REVERSED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What produced a transcript step.
#[derive(Debug, Clone)]
pub enum StepAction {
    Prepare,
    Unitary { id: String, operator: ComplexOperator },
    /// Non-selective Lüders measurement `Σ_k Π_k ρ Π_k`.
    Measurement { id: String, projectors: Vec<ComplexOperator> },
}

impl StepAction {
    pub fn id(&self) -> &str {
        match self {
            StepAction::Prepare => "prepare",
            StepAction::Unitary { id, .. } | StepAction::Measurement { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolStep {
    pub name: String,
    pub acting_labels: Vec<String>,
    pub action: StepAction,
    pub state: QuantumState,
}

/// Staged states of one protocol run.
#[derive(Debug, Clone, Default)]
pub struct ProtocolTranscript {
    pub steps: Vec<ProtocolStep>,
}

impl ProtocolTranscript {
    pub fn new(initial: QuantumState) -> Self {
        let acting_labels = initial.space().labels().map(String::from).collect();
        Self {
            steps: vec![ProtocolStep {
                name: "prepare".into(),
                acting_labels,
                action: StepAction::Prepare,
                state: initial,
            }],
        }
    }

    pub fn last(&self) -> &QuantumState {
        &self.steps.last().expect("transcript always has a preparation step").state
    }

    pub fn initial(&self) -> &QuantumState {
        &self.steps[0].state
    }

    /// Applies a unitary acting on `acting` labels and records the result.
    pub fn apply_unitary(&mut self, name: &str, id: &str, operator: &ComplexOperator, acting: &[&str]) -> Result<&QuantumState> {
        let state = self.last().evolve(operator)?;
        self.push(name, acting, StepAction::Unitary { id: id.into(), operator: operator.clone() }, state);
        Ok(self.last())
    }

    /// Copy step with a locality check on `support`.
    pub fn apply_copy(&mut self, name: &str, id: &str, operator: &ComplexOperator, support: &[&str]) -> Result<&QuantumState> {
        let state = copy_record(self.last(), operator, support)?;
        self.push(name, support, StepAction::Unitary { id: id.into(), operator: operator.clone() }, state);
        Ok(self.last())
    }

    /// Non-selective projective measurement with the given projectors.
    pub fn apply_measurement(&mut self, name: &str, id: &str, projectors: &[ComplexOperator], acting: &[&str]) -> Result<&QuantumState> {
        let state = dephase_with(self.last(), projectors)?;
        self.push(name, acting, StepAction::Measurement { id: id.into(), projectors: projectors.to_vec() }, state);
        Ok(self.last())
    }

    fn push(&mut self, name: &str, acting: &[&str], action: StepAction, state: QuantumState) {
        self.steps.push(ProtocolStep {
            name: name.into(),
            acting_labels: acting.iter().map(|s| s.to_string()).collect(),
            action,
            state,
        });
    }

    /// Replays every recorded step from its recorded predecessor and returns
    /// the largest Frobenius discrepancy.
    pub fn replay_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for pair in self.steps.windows(2) {
            let (prev, next) = (&pair[0].state, &pair[1]);
            let replayed = match &next.action {
                StepAction::Prepare => continue,
                StepAction::Unitary { operator, .. } => prev.evolve(operator)?,
                StepAction::Measurement { projectors, .. } => dephase_with(prev, projectors)?,
            };
            worst = worst.max(replayed.distance(&next.state)?);
        }
        Ok(worst)
    }

    pub fn verify(&self) -> Result<()> {
        let residual = self.replay_residual()?;
        if residual > REPLAY_TOL {
            return Err(LabError::InvariantViolation(format!(
                "transcript replay residual {residual:.3e} exceeds {REPLAY_TOL:e}"
            )));
        }
        Ok(())
    }
}

pub(crate) fn dephase_with(state: &QuantumState, projectors: &[ComplexOperator]) -> Result<QuantumState> {
    let mut rho = ComplexOperator::zeros(state.space().clone());
    for projector in projectors {
        let p = projector.embed(state.space())?;
        rho = rho.add(&p.compose(state.density())?.compose(&p)?)?;
    }
    QuantumState::from_density_unchecked(rho)
}

/// Fidelities of a reversal attempt against the pre-measurement state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalFidelities {
    pub joint: f64,
    pub system: f64,
    pub apparatus: f64,
}

impl ReversalFidelities {
    /// Compares `initial` and `final_state` on `system ⊗ apparatus` and on
    /// each label separately.
    pub fn compare(initial: &QuantumState, final_state: &QuantumState, system: &str, apparatus: &str) -> Result<Self> {
        let joint_initial = initial.reduce(&[system, apparatus])?;
        let joint_final = final_state.reduce(&[system, apparatus])?;
        Ok(Self {
            joint: fidelity(&joint_initial, &joint_final)?,
            system: fidelity(&initial.reduce(&[system])?, &final_state.reduce(&[system])?)?,
            apparatus: fidelity(&initial.reduce(&[apparatus])?, &final_state.reduce(&[apparatus])?)?,
        })
    }

    pub fn verdict(&self, tol: f64) -> Verdict {
        Verdict::from_fidelities(self.joint, self.apparatus, tol)
    }
}

/// True when `value` counts as an exact restoration at the default threshold.
pub fn is_restored(value: f64) -> bool {
    value >= 1.0 - REVERSAL_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{pure_from_amplitudes, random_pure_seeded};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sa(ds: usize, da: usize) -> LabeledSpace {
        LabeledSpace::new([("S", ds), ("A", da)]).unwrap()
    }

    /// Enumerates the shift rule on digits directly.
    fn shift_oracle(da: usize, s: usize, a: usize) -> usize {
        s * da + (a + s) % da
    }

    #[test]
    fn qubit_measurement_unitary_enumeration() {
        let u = build_measurement_unitary(&sa(2, 2), "S", "A").unwrap();
        let expected = [(0, 0), (1, 1), (2, 3), (3, 2)];
        for (from, to) in expected {
            assert_eq!(u.get(to, from), c(1.0));
        }
        assert!(u.is_unitary(1e-12));
        assert!(u.compose(&u.adjoint()).unwrap().sub(&ComplexOperator::identity(sa(2, 2))).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn shift_matches_oracle_for_all_small_dims() {
        for ds in 2..=4 {
            for da in ds..=5 {
                let u = build_measurement_unitary(&sa(ds, da), "S", "A").unwrap();
                assert!(u.is_unitary(1e-12));
                for s in 0..ds {
                    for a in 0..da {
                        assert_eq!(u.get(shift_oracle(da, s, a), s * da + a), c(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn applying_twice_doubles_the_record() {
        let space = sa(3, 4);
        let u = build_measurement_unitary(&space, "S", "A").unwrap();
        for s in 0..3 {
            let ready = QuantumState::basis(space.clone(), s * 4).unwrap();
            let twice = measure(&measure(&ready, &u).unwrap(), &u).unwrap();
            let expected = QuantumState::basis(space.clone(), s * 4 + (2 * s) % 4).unwrap();
            assert!(twice.distance(&expected).unwrap() < 1e-15);
        }
    }

    #[test]
    fn pointer_too_small() {
        assert!(matches!(build_measurement_unitary(&sa(3, 2), "S", "A"), Err(LabError::RecordCapacity(_))));
    }

    #[test]
    fn measuring_basis_state_writes_record() {
        let space = sa(2, 2);
        let u = build_measurement_unitary(&space, "S", "A").unwrap();
        let up = QuantumState::basis(space.clone(), 0).unwrap();
        assert_eq!(fidelity(&measure(&up, &u).unwrap(), &up).unwrap(), 1.0);
        let down = QuantumState::basis(space.clone(), 2).unwrap();
        let recorded = QuantumState::basis(space.clone(), 3).unwrap();
        assert!((fidelity(&measure(&down, &u).unwrap(), &recorded).unwrap() - 1.0).abs() < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = pure_from_amplitudes(space.clone(), &[c(h), c(0.0), c(h), c(0.0)]).unwrap();
        let bell = pure_from_amplitudes(space, &[c(h), c(0.0), c(0.0), c(h)]).unwrap();
        assert!((fidelity(&measure(&plus, &u).unwrap(), &bell).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn copy_must_not_touch_system() {
        let space = LabeledSpace::new([("S", 2), ("A", 2), ("D", 2)]).unwrap();
        let state = random_pure_seeded(space.clone(), 3);
        let bad = build_measurement_unitary(&space, "S", "D").unwrap();
        assert!(matches!(copy_record(&state, &bad, &["A", "D"]), Err(LabError::LocalityViolation(_))));
        let good = build_measurement_unitary(&space, "A", "D").unwrap();
        assert!(copy_record(&state, &good, &["A", "D"]).is_ok());
        let local = build_measurement_unitary(&sa(2, 2).restrict(&["A"]).unwrap().concat(&LabeledSpace::single("D", 2).unwrap()).unwrap(), "A", "D").unwrap();
        let via_local = copy_record(&state, &local, &["A", "D"]).unwrap();
        assert!(via_local.distance(&copy_record(&state, &good, &["A", "D"]).unwrap()).unwrap() < 1e-15);
        let on_s = build_measurement_unitary(&sa(2, 2), "S", "A").unwrap();
        assert!(matches!(copy_record(&state, &on_s, &["A", "D"]), Err(LabError::LocalityViolation(_))));
    }

    #[test]
    fn trivial_copy_leaves_state_unchanged() {
        let space = LabeledSpace::new([("S", 2), ("A", 2), ("D", 2)]).unwrap();
        let state = random_pure_seeded(space.clone(), 9);
        let id = ComplexOperator::identity(space.restrict(&["A", "D"]).unwrap());
        assert_eq!(copy_record(&state, &id, &["A", "D"]).unwrap().density(), state.density());
    }

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::from_fidelities(1.0, 1.0, REVERSAL_TOL), Verdict::Reversed);
        assert_eq!(Verdict::from_fidelities(1.0 - 1e-7, 1.0, REVERSAL_TOL), Verdict::Inconclusive);
        assert_eq!(Verdict::from_fidelities(0.5, 1.0, REVERSAL_TOL), Verdict::Partial);
        assert_eq!(Verdict::from_fidelities(0.5, 0.5, REVERSAL_TOL), Verdict::NotReversed);
        assert_eq!(serde_json::to_string(&Verdict::NotReversed).unwrap(), "\"NOT_REVERSED\"");
    }

    #[test]
    fn transcript_replays() {
        let space = LabeledSpace::new([("S", 2), ("A", 2), ("D", 2)]).unwrap();
        let u = build_measurement_unitary(&space.restrict(&["S", "A"]).unwrap(), "S", "A").unwrap();
        let copy = build_measurement_unitary(&space.restrict(&["A", "D"]).unwrap(), "A", "D").unwrap();
        let s = random_pure_seeded(LabeledSpace::single("S", 2).unwrap(), 5);
        let ready = QuantumState::basis(space.restrict(&["A", "D"]).unwrap(), 0).unwrap();
        let mut t = ProtocolTranscript::new(s.tensor(&ready).unwrap());
        t.apply_unitary("measure", "U_SA", &u, &["S", "A"]).unwrap();
        t.apply_copy("copy", "U_AD", &copy, &["A", "D"]).unwrap();
        t.apply_unitary("reverse", "U_SA^dagger", &u.adjoint(), &["S", "A"]).unwrap();
        assert!(t.replay_residual().unwrap() < 1e-12);
        t.verify().unwrap();
    }
}
