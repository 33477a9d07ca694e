//! Registered gedankenexperiments, their configuration files and reports.
//!
//! Configurations and reports are JSON documents carrying
//! `"schema_version": 1`; see `docs/CONFIG.md` for the annotated schema.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{
    classical_copy, classical_fidelity, classical_measure, classical_mutual_information, classical_reverse,
    marginal, ClassicalEnsemble, ReversibleMap,
};
use crate::dynamics::{build_measurement_unitary, ProtocolTranscript, ReversalFidelities, Verdict};
use crate::error::{LabError, Result};
use crate::friend::{
    build_bell_check, build_record_check, reversal_after_verification, BranchReport, ConsensusOperator,
    DEFAULT_BELL, DEFAULT_NO, DEFAULT_YES,
};
use crate::info::{
    discord_readout, entropy_gap, luders_branches, mutual_information, shannon_entropy, von_neumann_entropy,
    MeasurementContext,
};
use crate::operator::ComplexOperator;
use crate::repeatability::{
    check_copy_preserves_joint, hs_identity_residual, pairwise_orthogonality, pointer_commutation_check,
    CommutationCheck, CopyCheck, OverlapReport, OverlapScope, RecordEnsembleSpec,
};
use crate::space::LabeledSpace;
use crate::state::{pure_from_amplitudes, random_distribution, random_mixed, random_pure, QuantumState, REVERSAL_TOL};
use crate::{APPARATUS, DEVICE, SYSTEM};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_INPUT_TOL: f64 = 1e-9;
pub const TOLERANCE_KEYS: [&str; 2] = ["input", "reversal"];
pub const SWEEP_PARAMETERS: [&str; 4] = ["alpha_up_sq", "seed", "w01", "weight_0"];

/// One registry entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub protocol: &'static str,
    pub description: &'static str,
}

/// All registered scenarios, alphabetized.
pub const REGISTRY: [ScenarioInfo; 9] = [
    ScenarioInfo {
        name: "classical-baseline",
        protocol: "(Σ w_s s) A₀ D₀ → E_SA → E_AD → E⁻¹_SA",
        description: "classical measure, copy and reverse; the SA marginal is restored while D keeps the record",
    },
    ScenarioInfo {
        name: "friend-bell",
        protocol: "Σ α_s |s A_s⟩ → measure B̂ (Bell basis) → U†_SA",
        description: "friend verifies entanglement with the Bell observable before the reversal",
    },
    ScenarioInfo {
        name: "friend-consensus",
        protocol: "Σ α_s |s A_s⟩ → measure Ĉ (agree/error) → U†_SA",
        description: "friend confirms a record exists without learning it; reversal still succeeds",
    },
    ScenarioInfo {
        name: "friend-nondegenerate",
        protocol: "Σ α_s |s A_s⟩ → measure Â (y_s distinct) → U†_SA",
        description: "friend's check reveals the outcome; the reversal leaves S dephased",
    },
    ScenarioInfo {
        name: "mixture-no-copy",
        protocol: "Σ w_rs |r⟩⟨s| ⊗ |A₀⟩⟨A₀| → U_SA → U†_SA",
        description: "mixed system measured and reversed with no copy made",
    },
    ScenarioInfo {
        name: "mixture-with-copy",
        protocol: "Σ w_rs |r A_r⟩⟨s A_s| ⊗ |D₀⟩⟨D₀| → U_AD → U†_SA",
        description: "mixed system; copying the record leaves S diagonal in the measured basis",
    },
    ScenarioInfo {
        name: "pure-no-copy",
        protocol: "(Σ α_s |s⟩)|A₀⟩ → U_SA → U†_SA",
        description: "pure superposition measured and reversed with no copy made",
    },
    ScenarioInfo {
        name: "pure-with-copy",
        protocol: "Σ α_s |s A_s⟩|D₀⟩ → U_AD → U†_SA",
        description: "copying the record before reversal leaves S entangled with D",
    },
    ScenarioInfo {
        name: "quasiclassical-with-copy",
        protocol: "|s⟩|A₀⟩|D₀⟩ → U_SA → U_AD → U†_SA",
        description: "system diagonal in the measured basis; reversal succeeds despite the copy",
    },
];

pub fn list_scenarios() -> &'static [ScenarioInfo] {
    &REGISTRY
}

pub fn lookup(name: &str) -> Result<&'static ScenarioInfo> {
    REGISTRY.iter().find(|s| s.name == name).ok_or_else(|| LabError::UnknownScenario(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimensions {
    #[serde(default = "two")]
    pub system: usize,
    #[serde(default = "two")]
    pub apparatus: usize,
    #[serde(default = "two")]
    pub device: usize,
}

fn two() -> usize {
    2
}

impl Default for Dimensions {
    fn default() -> Self {
        Self { system: 2, apparatus: 2, device: 2 }
    }
}

/// A complex number written either as a bare real or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn to_complex(self) -> Complex64 {
        match self {
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    /// System amplitudes `α_s`.
    Amplitudes(Vec<ComplexValue>),
    /// System density matrix entries `w_rs`, row by row.
    Density(Vec<Vec<ComplexValue>>),
    /// Probabilities over system values (classical or diagonal quantum).
    Weights(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VerifierSpec {
    /// Record check with "agree" eigenvalues per outcome and "error" eigenvalues.
    Record { yes: Vec<f64>, no: Vec<f64> },
    /// Bell observable eigenvalues `[b+=, b-=, b+!=, b-!=]`.
    Bell([f64; 4]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: String,
    #[serde(default)]
    pub dimensions: Dimensions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verifier: Option<VerifierSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

impl ScenarioConfig {
    pub fn new(scenario: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.to_string(),
            dimensions: Dimensions::default(),
            input: None,
            verifier: None,
            seed: None,
            tolerances: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(match key {
            "reversal" => REVERSAL_TOL,
            _ => DEFAULT_INPUT_TOL,
        })
    }

    /// Schema, registry and dimension checks that need no numerics.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        lookup(&self.scenario)?;
        for (key, value) in &self.tolerances {
            if !TOLERANCE_KEYS.contains(&key.as_str()) {
                return Err(LabError::Config(format!("unknown tolerance '{key}'")));
            }
            if !value.is_finite() || *value <= 0.0 {
                return Err(LabError::Config(format!("tolerance '{key}' must be positive")));
            }
        }
        let d = self.dimensions;
        for (name, dim) in [("system", d.system), ("apparatus", d.apparatus), ("device", d.device)] {
            if dim < 2 {
                return Err(LabError::Config(format!("dimension '{name}' must be >= 2 (got {dim})")));
            }
        }
        if d.apparatus < d.system {
            return Err(LabError::RecordCapacity(format!(
                "apparatus dimension {} is smaller than system dimension {}",
                d.apparatus, d.system
            )));
        }
        if uses_device(&self.scenario) && d.device < d.apparatus {
            return Err(LabError::RecordCapacity(format!(
                "device dimension {} is smaller than apparatus dimension {}",
                d.device, d.apparatus
            )));
        }
        if self.scenario.starts_with("friend-") && d.system != d.apparatus {
            return Err(LabError::Config("friend scenarios need equal system and apparatus dimensions".into()));
        }
        if self.scenario == "friend-bell" && d.system != 2 {
            return Err(LabError::Config("friend-bell is defined for a qubit pair only".into()));
        }
        Ok(())
    }
}

fn uses_device(scenario: &str) -> bool {
    matches!(scenario, "classical-baseline" | "pure-with-copy" | "quasiclassical-with-copy" | "mixture-with-copy")
}

/// Purity and entropies of one transcript stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub name: String,
    pub acting_labels: Vec<String>,
    pub operation: String,
    pub purity: f64,
    pub entropy_bits: f64,
    pub system_entropy_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoReadout {
    /// `I(S:A)` of the post-measurement, pre-copy state.
    pub mutual_information: f64,
    /// `J(S;A)` conditioned on the apparatus pointer basis.
    pub asymmetric_mutual_information: f64,
    /// `δ = I − J`.
    pub discord: f64,
    pub conditional_entropy: f64,
    pub outcome_entropy: f64,
    /// `H(S_final) − H(S_initial)`.
    pub entropy_gap: f64,
    /// `I(S:D)` after the reversal, when a device is present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system_device_mutual_information: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReadout {
    pub system_weights: Vec<f64>,
    pub weight_entropy: f64,
    pub system_device_mutual_information: f64,
    pub joint_entropy_initial: f64,
    pub joint_entropy_final: f64,
    /// Largest probability difference between initial and final SA marginals.
    pub marginal_max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReadout {
    pub copy_preserves_joint: CopyCheck,
    pub hs_identity_residual: f64,
    pub joint_orthogonality: OverlapReport,
    pub apparatus_orthogonality: OverlapReport,
    pub commutation: CommutationCheck,
    /// `‖ρ^{SA} − Σ_k Π_k ρ^{SA} Π_k‖_F`: coherence between record blocks.
    pub record_coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriendReadout {
    pub verifier: String,
    pub sectors: Vec<Vec<String>>,
    pub branches: Vec<BranchReport>,
}

/// Machine-readable result of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: String,
    pub config: ScenarioConfig,
    pub steps: Vec<StepSummary>,
    /// Joint verdict: `REVERSED` iff the SA fidelity reaches `1 − tol`,
    /// `PARTIAL` iff only the apparatus is restored.
    pub verdict: Verdict,
    pub system_verdict: Verdict,
    pub apparatus_verdict: Verdict,
    pub reversal_tolerance: f64,
    pub fidelities: ReversalFidelities,
    pub info: InfoReadout,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalReadout>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<CheckReadout>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub friend: Option<FriendReadout>,
    pub duration_ms: f64,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the duration zeroed, for reproducibility comparisons.
    pub fn to_canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.duration_ms = 0.0;
        copy.to_json()
    }

    /// Recomputes the verdicts from the recorded fidelities.
    pub fn recomputed_verdicts(&self) -> (Verdict, Verdict, Verdict) {
        let tol = self.reversal_tolerance;
        (
            Verdict::from_fidelities(self.fidelities.joint, self.fidelities.apparatus, tol),
            Verdict::from_fidelity(self.fidelities.system, tol),
            Verdict::from_fidelity(self.fidelities.apparatus, tol),
        )
    }

    fn check_finite(&self) -> Result<()> {
        let json = serde_json::to_value(self).map_err(|e| LabError::InvariantViolation(e.to_string()))?;
        fn walk(v: &serde_json::Value, path: &str) -> Result<()> {
            match v {
                // serde_json writes non-finite floats as null.
                serde_json::Value::Null => Err(LabError::InvariantViolation(format!("non-finite readout at {path}"))),
                serde_json::Value::Array(items) => {
                    items.iter().enumerate().try_for_each(|(i, x)| walk(x, &format!("{path}[{i}]")))
                }
                serde_json::Value::Object(map) => map.iter().try_for_each(|(k, x)| walk(x, &format!("{path}.{k}"))),
                _ => Ok(()),
            }
        }
        walk(&json, "report")
    }
}

/// A finished run: the report and, for quantum scenarios, the staged states.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub transcript: ProtocolTranscript,
    pub report: ScenarioReport,
}

struct Spaces {
    s: LabeledSpace,
    a: LabeledSpace,
    d: LabeledSpace,
}

impl Spaces {
    fn new(dims: Dimensions) -> Result<Self> {
        Ok(Self {
            s: LabeledSpace::single(SYSTEM, dims.system)?,
            a: LabeledSpace::single(APPARATUS, dims.apparatus)?,
            d: LabeledSpace::single(DEVICE, dims.device)?,
        })
    }

    fn sa(&self) -> Result<LabeledSpace> {
        self.s.concat(&self.a)
    }

    fn ad(&self) -> Result<LabeledSpace> {
        self.a.concat(&self.d)
    }
}

fn amplitudes_from(values: &[ComplexValue], dim: usize, tol: f64) -> Result<Vec<Complex64>> {
    if values.len() != dim {
        return Err(LabError::Config(format!("{} amplitudes for system dimension {dim}", values.len())));
    }
    let amps: Vec<Complex64> = values.iter().map(|v| v.to_complex()).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > tol {
        return Err(LabError::Config(format!("amplitudes have norm {norm}, expected 1")));
    }
    Ok(amps)
}

fn weights_from(weights: &[f64], dim: usize, tol: f64) -> Result<Vec<f64>> {
    if weights.len() != dim {
        return Err(LabError::Config(format!("{} weights for system dimension {dim}", weights.len())));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(LabError::InvalidDistribution("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(LabError::InvalidDistribution(format!("weights sum to {total}")));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

fn density_from(rows: &[Vec<ComplexValue>], space: &LabeledSpace, tol: f64) -> Result<QuantumState> {
    let dim = space.dim();
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(LabError::Config(format!("density matrix must be {dim}x{dim}")));
    }
    let rho = ComplexOperator::from_fn(space.clone(), |i, j| rows[i][j].to_complex());
    let trace = rho.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(LabError::Config(format!("density matrix has trace {trace}")));
    }
    QuantumState::from_density(rho.scale_real(1.0 / trace))
}

/// Pure-state input for amplitude-driven scenarios.
fn resolve_amplitudes(config: &ScenarioConfig, spaces: &Spaces, rng: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
    let dim = config.dimensions.system;
    match &config.input {
        None => Ok(random_pure(spaces.s.clone(), rng).amplitudes().expect("pure").to_vec()),
        Some(InputSpec::Amplitudes(values)) => amplitudes_from(values, dim, config.tolerance("input")),
        Some(_) => Err(LabError::Config(format!("scenario '{}' takes amplitude input", config.scenario))),
    }
}

/// Density-matrix input for mixture scenarios (weights give a diagonal state).
fn resolve_density(config: &ScenarioConfig, spaces: &Spaces, rng: &mut ChaCha8Rng) -> Result<QuantumState> {
    let tol = config.tolerance("input");
    match &config.input {
        None => Ok(random_mixed(spaces.s.clone(), rng)),
        Some(InputSpec::Density(rows)) => density_from(rows, &spaces.s, tol),
        Some(InputSpec::Weights(w)) => QuantumState::diagonal(spaces.s.clone(), &weights_from(w, spaces.s.dim(), tol)?),
        Some(InputSpec::Amplitudes(values)) => {
            pure_from_amplitudes(spaces.s.clone(), &amplitudes_from(values, spaces.s.dim(), tol)?)
        }
    }
}

/// Runs a registered scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun> {
    let started = Instant::now();
    config.validate()?;
    let mut config = config.clone();
    config.seed = Some(config.seed());
    let mut run = match config.scenario.as_str() {
        "classical-baseline" => run_classical(&config)?,
        "pure-no-copy" | "pure-with-copy" | "mixture-no-copy" | "mixture-with-copy" | "quasiclassical-with-copy" => {
            run_record_protocol(&config)?
        }
        "friend-consensus" | "friend-nondegenerate" | "friend-bell" => run_friend(&config)?,
        other => return Err(LabError::UnknownScenario(other.to_string())),
    };
    run.transcript.verify()?;
    run.report.check_finite()?;
    run.report.duration_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(run)
}

fn summarize(transcript: &ProtocolTranscript) -> Result<Vec<StepSummary>> {
    transcript
        .steps
        .iter()
        .map(|step| {
            Ok(StepSummary {
                name: step.name.clone(),
                acting_labels: step.acting_labels.clone(),
                operation: step.action.id().to_string(),
                purity: step.state.purity(),
                entropy_bits: von_neumann_entropy(&step.state)?,
                system_entropy_bits: von_neumann_entropy(&step.state.reduce(&[SYSTEM])?)?,
            })
        })
        .collect()
}

fn info_readout(
    post_measurement: &QuantumState,
    initial: &QuantumState,
    final_state: &QuantumState,
    with_device: bool,
) -> Result<InfoReadout> {
    let sa = post_measurement.reduce(&[SYSTEM, APPARATUS])?;
    let context = MeasurementContext::pointer(APPARATUS, sa.space().dim_of(APPARATUS)?)?;
    let d = discord_readout(&sa, &context)?;
    let gap = entropy_gap(&initial.reduce(&[SYSTEM])?, &final_state.reduce(&[SYSTEM])?)?;
    let system_device_mutual_information =
        if with_device { Some(mutual_information(final_state, SYSTEM, DEVICE)?) } else { None };
    Ok(InfoReadout {
        mutual_information: d.mutual_information,
        asymmetric_mutual_information: d.asymmetric_mutual_information,
        discord: d.discord,
        conditional_entropy: d.conditional_entropy,
        outcome_entropy: d.outcome_entropy,
        entropy_gap: gap,
        system_device_mutual_information,
    })
}

fn build_report(
    config: &ScenarioConfig,
    transcript: &ProtocolTranscript,
    fidelities: ReversalFidelities,
    info: InfoReadout,
) -> Result<ScenarioReport> {
    let tol = config.tolerance("reversal");
    Ok(ScenarioReport {
        schema_version: SCHEMA_VERSION,
        scenario: config.scenario.clone(),
        config: config.clone(),
        steps: summarize(transcript)?,
        verdict: Verdict::from_fidelities(fidelities.joint, fidelities.apparatus, tol),
        system_verdict: Verdict::from_fidelity(fidelities.system, tol),
        apparatus_verdict: Verdict::from_fidelity(fidelities.apparatus, tol),
        reversal_tolerance: tol,
        fidelities,
        info,
        classical: None,
        checks: None,
        friend: None,
        duration_ms: 0.0,
    })
}

/// pure-*, mixture-* and quasiclassical-with-copy.
fn run_record_protocol(config: &ScenarioConfig) -> Result<ScenarioRun> {
    let spaces = Spaces::new(config.dimensions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
    let with_copy = config.scenario.ends_with("with-copy");
    let system = match config.scenario.as_str() {
        "pure-no-copy" | "pure-with-copy" => {
            pure_from_amplitudes(spaces.s.clone(), &resolve_amplitudes(config, &spaces, &mut rng)?)?
        }
        "quasiclassical-with-copy" => {
            let state = match &config.input {
                None => QuantumState::diagonal(spaces.s.clone(), &random_distribution(spaces.s.dim(), &mut rng))?,
                Some(_) => resolve_density(config, &spaces, &mut rng)?,
            };
            let coherence = (0..state.dim())
                .flat_map(|i| (0..state.dim()).filter(move |j| *j != i).map(move |j| (i, j)))
                .map(|(i, j)| state.density().get(i, j).norm())
                .fold(0.0, f64::max);
            if coherence > config.tolerance("input") {
                return Err(LabError::Config(format!(
                    "quasiclassical input must be diagonal in the measured basis (coherence {coherence:.3e})"
                )));
            }
            state
        }
        _ => resolve_density(config, &spaces, &mut rng)?,
    };

    let sa = spaces.sa()?;
    let mut rest = QuantumState::basis(spaces.a.clone(), 0)?;
    if with_copy {
        rest = rest.tensor(&QuantumState::basis(spaces.d.clone(), 0)?)?;
    }
    let initial = system.tensor(&rest)?;
    let measurement = build_measurement_unitary(&sa, SYSTEM, APPARATUS)?;

    let mut transcript = ProtocolTranscript::new(initial.clone());
    let post_measurement = transcript.apply_unitary("measure", "U_SA", &measurement, &[SYSTEM, APPARATUS])?.clone();
    let mut checks = None;
    if with_copy {
        let copy = build_measurement_unitary(&spaces.ad()?, APPARATUS, DEVICE)?;
        checks = Some(record_checks(&post_measurement.reduce(&[SYSTEM, APPARATUS])?, &copy, &spaces)?);
        transcript.apply_copy("copy", "U_AD", &copy, &[APPARATUS, DEVICE])?;
    }
    let final_state =
        transcript.apply_unitary("reverse", "U_SA^dagger", &measurement.adjoint(), &[SYSTEM, APPARATUS])?.clone();

    let fidelities = ReversalFidelities::compare(&initial, &final_state, SYSTEM, APPARATUS)?;
    let info = info_readout(&post_measurement, &initial, &final_state, with_copy)?;
    let mut report = build_report(config, &transcript, fidelities, info)?;
    report.checks = checks;
    Ok(ScenarioRun { transcript, report })
}

/// Repeatability checks on the actual pre-copy state and the shift copy.
fn record_checks(pre_copy: &QuantumState, copy: &ComplexOperator, spaces: &Spaces) -> Result<CheckReadout> {
    let context = MeasurementContext::pointer(APPARATUS, spaces.a.dim())?;
    let branches = luders_branches(pre_copy, &context)?;
    let d_device = spaces.d.dim();
    let components: Vec<(f64, QuantumState)> = branches.iter().map(|b| (b.probability, b.state.clone())).collect();
    let device_states = branches
        .iter()
        .map(|b| {
            (0..d_device)
                .map(|k| Complex64::new(if k == b.block % d_device { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    let mut block_mixture = ComplexOperator::zeros(pre_copy.space().clone());
    for (p, c) in &components {
        block_mixture = block_mixture.add(&c.density().scale_real(*p))?;
    }
    let record_coherence = block_mixture.distance(pre_copy.density())?;
    let total: f64 = components.iter().map(|(p, _)| p).sum();
    let components = components.into_iter().map(|(p, c)| (p / total, c)).collect();
    let spec = RecordEnsembleSpec::new(APPARATUS, DEVICE, components, device_states)?;
    Ok(CheckReadout {
        copy_preserves_joint: check_copy_preserves_joint(&spec)?,
        hs_identity_residual: hs_identity_residual(&spec)?,
        joint_orthogonality: pairwise_orthogonality(&spec, OverlapScope::Joint)?,
        apparatus_orthogonality: pairwise_orthogonality(&spec, OverlapScope::Apparatus)?,
        commutation: pointer_commutation_check(copy, pre_copy)?,
        record_coherence,
    })
}

fn resolve_verifier(config: &ScenarioConfig) -> Result<(String, ConsensusOperator)> {
    let d = config.dimensions.system;
    match (config.scenario.as_str(), &config.verifier) {
        ("friend-bell", None) => {
            let [a, b, c, e] = DEFAULT_BELL;
            Ok(("bell".into(), build_bell_check(a, b, c, e)?))
        }
        ("friend-bell", Some(VerifierSpec::Bell([a, b, c, e]))) => Ok(("bell".into(), build_bell_check(*a, *b, *c, *e)?)),
        ("friend-bell", Some(_)) => Err(LabError::Config("friend-bell needs a bell verifier".into())),
        (_, Some(VerifierSpec::Bell(_))) => {
            Err(LabError::Config(format!("scenario '{}' needs a record verifier", config.scenario)))
        }
        (name, spec) => {
            let (yes, no) = match spec {
                Some(VerifierSpec::Record { yes, no }) => (yes.clone(), no.clone()),
                None if name == "friend-consensus" => (vec![DEFAULT_YES; d], vec![DEFAULT_NO]),
                None => ((1..=d).map(|k| k as f64).collect(), vec![DEFAULT_NO]),
                Some(VerifierSpec::Bell(_)) => unreachable!("bell verifiers are matched above"),
            };
            let degenerate = yes.windows(2).all(|w| w[0] == w[1]);
            if name == "friend-consensus" && !degenerate {
                return Err(LabError::Config("friend-consensus needs equal yes eigenvalues".into()));
            }
            if name == "friend-nondegenerate" && degenerate {
                return Err(LabError::Config("friend-nondegenerate needs distinct yes eigenvalues".into()));
            }
            let op = build_record_check(d, &yes, &no).map_err(|e| LabError::Config(e.to_string()))?;
            Ok((if degenerate { "consensus" } else { "record" }.into(), op))
        }
    }
}

fn run_friend(config: &ScenarioConfig) -> Result<ScenarioRun> {
    let spaces = Spaces::new(config.dimensions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
    let amplitudes = resolve_amplitudes(config, &spaces, &mut rng)?;
    let (verifier_name, verifier) = resolve_verifier(config)?;

    let initial = pure_from_amplitudes(spaces.s.clone(), &amplitudes)?.tensor(&QuantumState::basis(spaces.a.clone(), 0)?)?;
    let measurement = build_measurement_unitary(&spaces.sa()?, SYSTEM, APPARATUS)?;
    let projectors: Vec<ComplexOperator> = verifier.sectors().iter().map(|s| s.projector.clone()).collect();

    let mut transcript = ProtocolTranscript::new(initial.clone());
    let post_measurement = transcript.apply_unitary("measure", "U_SA", &measurement, &[SYSTEM, APPARATUS])?.clone();
    transcript.apply_measurement("verify", &verifier_name, &projectors, &[SYSTEM, APPARATUS])?;
    let final_state =
        transcript.apply_unitary("reverse", "U_SA^dagger", &measurement.adjoint(), &[SYSTEM, APPARATUS])?.clone();

    let verification = reversal_after_verification(&amplitudes, &verifier)?;
    let fidelities = ReversalFidelities::compare(&initial, &final_state, SYSTEM, APPARATUS)?;
    let drift = verification.unconditioned.distance(&final_state)?;
    if drift > 1e-10 {
        return Err(LabError::InvariantViolation(format!(
            "branch-averaged reversal differs from the transcript by {drift:.3e}"
        )));
    }
    let info = info_readout(&post_measurement, &initial, &final_state, false)?;
    let mut report = build_report(config, &transcript, fidelities, info)?;
    report.friend = Some(FriendReadout {
        verifier: verifier_name,
        sectors: verifier.sectors().iter().map(|s| s.tags.clone()).collect(),
        branches: verification.branches,
    });
    Ok(ScenarioRun { transcript, report })
}

fn run_classical(config: &ScenarioConfig) -> Result<ScenarioRun> {
    let spaces = Spaces::new(config.dimensions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
    let d_s = config.dimensions.system;
    let weights = match &config.input {
        None => random_distribution(d_s, &mut rng),
        Some(InputSpec::Weights(w)) => weights_from(w, d_s, config.tolerance("input"))?,
        Some(_) => return Err(LabError::Config("classical-baseline takes weights input".into())),
    };
    let full = spaces.s.concat(&spaces.a)?.concat(&spaces.d)?;
    let system = ClassicalEnsemble::new(spaces.s.clone(), weights.clone())?;
    let ready = ClassicalEnsemble::point(spaces.ad()?, &[0, 0])?;
    let initial = system.product(&ready)?;
    let measured = classical_measure(&initial, SYSTEM, APPARATUS)?;
    let copied = classical_copy(&measured, APPARATUS, DEVICE)?;
    let reversed = classical_reverse(&copied, SYSTEM, APPARATUS)?;

    // Mirror the run as diagonal density operators so the transcript can be replayed.
    let measure_map = ReversibleMap::controlled_shift(&full, SYSTEM, APPARATUS)?;
    let copy_map = ReversibleMap::controlled_shift(&full, APPARATUS, DEVICE)?;
    let measure_op = ComplexOperator::permutation(full.clone(), measure_map.image())?;
    let copy_op = ComplexOperator::permutation(full.clone(), copy_map.image())?;
    let reverse_op = ComplexOperator::permutation(full.clone(), measure_map.inverse().image())?;
    let mut transcript = ProtocolTranscript::new(initial.to_quantum()?);
    let post_measurement = transcript.apply_unitary("measure", "E_SA", &measure_op, &[SYSTEM, APPARATUS])?.clone();
    transcript.apply_copy("copy", "E_AD", &copy_op, &[APPARATUS, DEVICE])?;
    let final_state = transcript.apply_unitary("reverse", "E_SA^-1", &reverse_op, &[SYSTEM, APPARATUS])?.clone();
    let mirrored = final_state.distance(&reversed.to_quantum()?)?;
    if mirrored > 1e-12 {
        return Err(LabError::InvariantViolation(format!("classical mirror drifted by {mirrored:.3e}")));
    }

    let sa_initial = marginal(&initial, &[SYSTEM, APPARATUS])?;
    let sa_final = marginal(&reversed, &[SYSTEM, APPARATUS])?;
    let fidelities = ReversalFidelities {
        joint: classical_fidelity(&sa_initial, &sa_final)?,
        system: classical_fidelity(&marginal(&initial, &[SYSTEM])?, &marginal(&reversed, &[SYSTEM])?)?,
        apparatus: classical_fidelity(&marginal(&initial, &[APPARATUS])?, &marginal(&reversed, &[APPARATUS])?)?,
    };
    let info = info_readout(&post_measurement, &transcript.initial().clone(), &final_state, true)?;
    let mut report = build_report(config, &transcript, fidelities, info)?;
    report.classical = Some(ClassicalReadout {
        weight_entropy: shannon_entropy(&weights),
        system_weights: weights,
        system_device_mutual_information: classical_mutual_information(&reversed, SYSTEM, DEVICE)?,
        joint_entropy_initial: initial.entropy(),
        joint_entropy_final: reversed.entropy(),
        marginal_max_error: sa_initial.max_difference(&sa_final)?,
    });
    Ok(ScenarioRun { transcript, report })
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub verdict: Verdict,
    pub fidelity_joint: f64,
    pub fidelity_system: f64,
    pub fidelity_apparatus: f64,
    pub mutual_information: f64,
    pub discord: f64,
    pub entropy_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub scenario: String,
    pub parameter: String,
    pub config: ScenarioConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes")
    }
}

/// Returns a copy of `config` with the sweepable `parameter` set to `value`.
pub fn apply_parameter(config: &ScenarioConfig, parameter: &str, value: f64) -> Result<ScenarioConfig> {
    let mut out = config.clone();
    let d_s = config.dimensions.system;
    match parameter {
        "alpha_up_sq" | "weight_0" => {
            if !(0.0..=1.0).contains(&value) {
                return Err(LabError::Config(format!("{parameter} = {value} is outside [0, 1]")));
            }
            if d_s != 2 {
                return Err(LabError::Config(format!("{parameter} needs a two-level system")));
            }
            out.input = Some(if parameter == "alpha_up_sq" {
                InputSpec::Amplitudes(vec![ComplexValue::Real(value.sqrt()), ComplexValue::Real((1.0 - value).sqrt())])
            } else {
                InputSpec::Weights(vec![value, 1.0 - value])
            });
        }
        "w01" => {
            if d_s != 2 {
                return Err(LabError::Config("w01 needs a two-level system".into()));
            }
            let (p0, p1) = match &config.input {
                Some(InputSpec::Weights(w)) if w.len() == 2 => (w[0], w[1]),
                Some(InputSpec::Density(rows)) if rows.len() == 2 => {
                    (rows[0][0].to_complex().re, rows[1][1].to_complex().re)
                }
                _ => (0.5, 0.5),
            };
            let r = ComplexValue::Real;
            out.input = Some(InputSpec::Density(vec![vec![r(p0), r(value)], vec![r(value), r(p1)]]));
        }
        "seed" => {
            if value < 0.0 || value.fract() != 0.0 || value > u64::MAX as f64 {
                return Err(LabError::Config(format!("seed must be a nonnegative integer (got {value})")));
            }
            out.seed = Some(value as u64);
        }
        other => return Err(LabError::UnknownParameter(other.to_string())),
    }
    Ok(out)
}

/// Runs the scenario once per grid value; rows follow grid order.
pub fn sweep(config: &ScenarioConfig, parameter: &str, grid: &[f64], jobs: usize) -> Result<SweepReport> {
    if !SWEEP_PARAMETERS.contains(&parameter) {
        return Err(LabError::UnknownParameter(parameter.to_string()));
    }
    config.validate()?;
    let points: Vec<ScenarioConfig> =
        grid.iter().map(|&v| apply_parameter(config, parameter, v)).collect::<Result<_>>()?;
    let results = crate::par::map_with_jobs(&points, jobs, run_scenario);
    let mut rows = Vec::with_capacity(grid.len());
    for (value, result) in grid.iter().zip(results) {
        let report = result?.report;
        rows.push(SweepRow {
            value: *value,
            verdict: report.verdict,
            fidelity_joint: report.fidelities.joint,
            fidelity_system: report.fidelities.system,
            fidelity_apparatus: report.fidelities.apparatus,
            mutual_information: report.info.mutual_information,
            discord: report.info.discord,
            entropy_gap: report.info.entropy_gap,
        });
    }
    let mut echo = config.clone();
    echo.seed = Some(config.seed());
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        scenario: config.scenario.clone(),
        parameter: parameter.to_string(),
        config: echo,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_amplitudes() -> Option<InputSpec> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Some(InputSpec::Amplitudes(vec![ComplexValue::Real(h), ComplexValue::Real(h)]))
    }

    #[test]
    fn registry_is_alphabetized_and_complete() {
        let names: Vec<&str> = list_scenarios().iter().map(|s| s.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(names.len(), 9);
        assert!(list_scenarios().iter().all(|s| !s.protocol.is_empty()));
    }

    #[test]
    fn config_parses_both_complex_forms() {
        let text = r#"{"schema_version": 1, "scenario": "pure-no-copy",
            "input": {"amplitudes": [0.6, [0.0, 0.8]]}, "seed": 3}"#;
        let cfg = ScenarioConfig::from_json(text).unwrap();
        match cfg.input.unwrap() {
            InputSpec::Amplitudes(a) => assert_eq!(a[1].to_complex(), Complex64::new(0.0, 0.8)),
            other => panic!("unexpected input {other:?}"),
        }
    }

    #[test]
    fn config_errors() {
        let bad_dims = r#"{"schema_version": 1, "scenario": "pure-no-copy", "dimensions": {"system": 3, "apparatus": 2}}"#;
        assert!(matches!(ScenarioConfig::from_json(bad_dims), Err(LabError::RecordCapacity(_))));
        let unknown = r#"{"schema_version": 1, "scenario": "nope"}"#;
        assert!(matches!(ScenarioConfig::from_json(unknown), Err(LabError::UnknownScenario(_))));
        let version = r#"{"schema_version": 2, "scenario": "pure-no-copy"}"#;
        assert!(matches!(ScenarioConfig::from_json(version), Err(LabError::Config(_))));
        let extra = r#"{"schema_version": 1, "scenario": "pure-no-copy", "bogus": 1}"#;
        assert!(matches!(ScenarioConfig::from_json(extra), Err(LabError::Config(_))));
        let tol = r#"{"schema_version": 1, "scenario": "pure-no-copy", "tolerances": {"speed": 1.0}}"#;
        assert!(matches!(ScenarioConfig::from_json(tol), Err(LabError::Config(_))));
    }

    #[test]
    fn pure_no_copy_reverses() {
        let mut cfg = ScenarioConfig::new("pure-no-copy");
        cfg.input = uniform_amplitudes();
        let report = run_scenario(&cfg).unwrap().report;
        assert_eq!(report.verdict, Verdict::Reversed);
        assert!(report.fidelities.joint >= 1.0 - 1e-12);
    }

    #[test]
    fn pure_with_copy_leaves_one_bit() {
        let mut cfg = ScenarioConfig::new("pure-with-copy");
        cfg.input = uniform_amplitudes();
        let report = run_scenario(&cfg).unwrap().report;
        assert_eq!(report.verdict, Verdict::Partial);
        assert_eq!(report.system_verdict, Verdict::NotReversed);
        assert_eq!(report.apparatus_verdict, Verdict::Reversed);
        assert!((report.info.discord - 1.0).abs() < 1e-9);
        assert!((report.info.entropy_gap - 1.0).abs() < 1e-9);
        assert!((report.fidelities.system - 0.5).abs() < 1e-9);
        let checks = report.checks.unwrap();
        assert!(checks.apparatus_orthogonality.passes());
        assert!(!checks.commutation.commutes);
        assert!(checks.record_coherence > 0.1);
    }

    #[test]
    fn mixture_with_copy_dephases_system() {
        let mut cfg = ScenarioConfig::new("mixture-with-copy");
        let r = ComplexValue::Real;
        cfg.input = Some(InputSpec::Density(vec![vec![r(0.5), r(0.35)], vec![r(0.35), r(0.5)]]));
        let run = run_scenario(&cfg).unwrap();
        let final_s = run.transcript.last().reduce(&[SYSTEM]).unwrap();
        assert!(final_s.density().get(0, 1).norm() < 1e-12);
        assert_ne!(run.report.verdict, Verdict::Reversed);
        assert!((run.report.info.discord - run.report.info.entropy_gap).abs() < 1e-9);
    }

    #[test]
    fn quasiclassical_rejects_coherent_input() {
        let mut cfg = ScenarioConfig::new("quasiclassical-with-copy");
        cfg.input = uniform_amplitudes();
        assert!(matches!(run_scenario(&cfg), Err(LabError::Config(_))));
    }

    #[test]
    fn friend_verifier_validation() {
        let mut cfg = ScenarioConfig::new("friend-consensus");
        cfg.verifier = Some(VerifierSpec::Record { yes: vec![1.0, 2.0], no: vec![0.0] });
        assert!(matches!(run_scenario(&cfg), Err(LabError::Config(_))));
        let mut cfg = ScenarioConfig::new("friend-nondegenerate");
        cfg.verifier = Some(VerifierSpec::Bell([1.0, 1.0, 0.0, 0.0]));
        assert!(matches!(run_scenario(&cfg), Err(LabError::Config(_))));
    }

    #[test]
    fn verdicts_are_recomputable() {
        for info in list_scenarios() {
            let report = run_scenario(&ScenarioConfig::new(info.name)).unwrap().report;
            assert_eq!(report.recomputed_verdicts(), (report.verdict, report.system_verdict, report.apparatus_verdict));
        }
    }

    #[test]
    fn sweep_rejects_unknown_parameter() {
        let cfg = ScenarioConfig::new("friend-nondegenerate");
        assert!(matches!(sweep(&cfg, "temperature", &[0.0], 1), Err(LabError::UnknownParameter(_))));
        assert!(sweep(&cfg, "alpha_up_sq", &[1.5], 1).is_err());
    }

    #[test]
    fn classical_baseline_keeps_record() {
        let mut cfg = ScenarioConfig::new("classical-baseline");
        cfg.input = Some(InputSpec::Weights(vec![0.3, 0.7]));
        let report = run_scenario(&cfg).unwrap().report;
        assert_eq!(report.verdict, Verdict::Reversed);
        let classical = report.classical.unwrap();
        assert!((classical.system_device_mutual_information - shannon_entropy(&[0.3, 0.7])).abs() < 1e-12);
        assert_eq!(classical.marginal_max_error, 0.0);
    }
}
