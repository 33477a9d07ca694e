//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reversal_lab::classical::{
    classical_copy, classical_measure, classical_reverse, marginal, ClassicalEnsemble,
};
use reversal_lab::dynamics::ProtocolTranscript;
use reversal_lab::friend::{build_consensus, build_record_check, reversal_after_verification};
use reversal_lab::par;
use reversal_lab::repeatability::{
    hs_identity_residual, pairwise_orthogonality, pointer_commutation_check, system_orthogonal_spec,
    BlockRecordInstance, CheckStatus, OverlapScope, RecordEnsembleSpec,
};
use reversal_lab::scenario::{list_scenarios, run_scenario, sweep, ComplexValue, Dimensions, InputSpec, ScenarioConfig};
use reversal_lab::state::{fidelity, random_amplitudes, random_distribution, random_mixed, random_pure};
use reversal_lab::{LabeledSpace, QuantumState};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn config(scenario: &str, d: usize, input: Option<InputSpec>) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(scenario);
    cfg.dimensions = Dimensions { system: d, apparatus: d, device: d };
    cfg.input = input;
    cfg
}

fn amplitude_input(amps: &[Complex64]) -> InputSpec {
    InputSpec::Amplitudes(amps.iter().map(|a| ComplexValue::Pair([a.re, a.im])).collect())
}

fn max_entry_diff(a: &QuantumState, b: &QuantumState) -> f64 {
    let (ma, mb) = (a.density().matrix(), b.density().matrix());
    ma.iter().zip(mb.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn shannon_bits(p: &[f64]) -> f64 {
    p.iter().filter(|x| **x > 0.0).map(|x| -x * x.log2()).sum()
}

/// Amplitude samples for every dimension in `dims`, `per_dim` each.
fn amplitude_suite(dims: &[usize], per_dim: usize, seed: u64) -> Vec<(usize, Vec<Complex64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dims.iter().flat_map(|&d| (0..per_dim).map(move |_| d)).map(|d| (d, random_amplitudes(d, &mut rng))).collect()
}

fn no_copy_reversal() -> Outcome {
    let suite = amplitude_suite(&[2, 3, 4], 100, 101);
    let fids = par::map(&suite, |(d, amps)| {
        let run = run_scenario(&config("pure-no-copy", *d, Some(amplitude_input(amps)))).unwrap();
        fidelity(run.transcript.initial(), run.transcript.last()).unwrap()
    });
    let worst = fids.iter().cloned().fold(1.0, f64::min);
    outcome(worst >= 1.0 - 1e-9, format!("{} inputs, min SA fidelity {worst:.15}", fids.len()))
}

fn copy_blocks_reversal() -> Outcome {
    let suite = amplitude_suite(&[2, 3, 4], 100, 202);
    let residuals = par::map(&suite, |(d, amps)| {
        let run = run_scenario(&config("pure-with-copy", *d, Some(amplitude_input(amps)))).unwrap();
        let last = run.transcript.last();
        let a = last.reduce(&["A"]).unwrap();
        let ready = QuantumState::basis(a.space().clone(), 0).unwrap();
        let s = last.reduce(&["S"]).unwrap();
        let probs: Vec<f64> = amps.iter().map(|x| x.norm_sqr()).collect();
        let dephased = QuantumState::diagonal(s.space().clone(), &probs).unwrap();
        (max_entry_diff(&a, &ready), max_entry_diff(&s, &dephased))
    });
    let a_worst = residuals.iter().map(|r| r.0).fold(0.0, f64::max);
    let s_worst = residuals.iter().map(|r| r.1).fold(0.0, f64::max);

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let uniform = [Complex64::new(h, 0.0), Complex64::new(h, 0.0)];
    let run = run_scenario(&config("pure-with-copy", 2, Some(amplitude_input(&uniform)))).unwrap();
    let s_final = run.transcript.last().reduce(&["S"]).unwrap();
    let half = QuantumState::maximally_mixed(s_final.space().clone());
    let s_initial = run.transcript.initial().reduce(&["S"]).unwrap();
    let uniform_fid = fidelity(&s_initial, &s_final).unwrap();
    let passed = a_worst <= 1e-10
        && s_worst <= 1e-10
        && max_entry_diff(&s_final, &half) <= 1e-10
        && (uniform_fid - 0.5).abs() <= 1e-9;
    outcome(
        passed,
        format!("A residual {a_worst:.2e}, S-dephasing residual {s_worst:.2e}, uniform-qubit fidelity {uniform_fid:.12}"),
    )
}

fn quasiclassical_exception() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let suite: Vec<(usize, Vec<f64>)> = [2, 3, 4]
        .iter()
        .flat_map(|&d| (0..100).map(move |_| d))
        .map(|d| (d, random_distribution(d, &mut rng)))
        .collect();
    let results = par::map(&suite, |(d, w)| {
        let run = run_scenario(&config("quasiclassical-with-copy", *d, Some(InputSpec::Weights(w.clone())))).unwrap();
        let initial = run.transcript.initial().reduce(&["S", "A"]).unwrap();
        let last = run.transcript.last();
        let restored = max_entry_diff(&initial, &last.reduce(&["S", "A"]).unwrap());
        // Classical S–D joint from the diagonal of the final reduced state.
        let sd = last.reduce(&["S", "D"]).unwrap();
        let joint: Vec<f64> = (0..sd.dim()).map(|i| sd.density().get(i, i).re).collect();
        let p_s: Vec<f64> = (0..*d).map(|s| (0..*d).map(|k| joint[s * d + k]).sum()).collect();
        let p_d: Vec<f64> = (0..*d).map(|k| (0..*d).map(|s| joint[s * d + k]).sum()).collect();
        let mi = shannon_bits(&p_s) + shannon_bits(&p_d) - shannon_bits(&joint);
        (restored, (mi - shannon_bits(w)).abs())
    });
    let restored = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let mi_err = results.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(
        restored <= 1e-10 && mi_err <= 1e-9,
        format!("{} inputs, SA residual {restored:.2e}, |I(S:D) - H(w)| {mi_err:.2e}", results.len()),
    )
}

fn discord_equals_entropy_gap() -> Outcome {
    let seeds: Vec<(usize, u64)> = [2, 3, 4].iter().flat_map(|&d| (0..100).map(move |k| (d, 4000 + k))).collect();
    let gaps = par::map(&seeds, |(d, seed)| {
        let mut cfg = config("mixture-with-copy", *d, None);
        cfg.seed = Some(*seed);
        let report = run_scenario(&cfg).unwrap().report;
        (report.info.discord - report.info.entropy_gap).abs()
    });
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    outcome(worst <= 1e-9, format!("{} mixed inputs, max |discord - gap| {worst:.2e}", gaps.len()))
}

fn hilbert_schmidt_identity() -> Outcome {
    let shapes = [(2, 2, 1), (3, 2, 2), (4, 2, 2), (3, 3, 1), (4, 4, 1)];
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_copy: f64 = 0.0;
    for k in 0..50 {
        let (ds, blocks, size) = shapes[k % shapes.len()];
        let inst = BlockRecordInstance::random(&mut rng, ds, blocks, size).unwrap();
        // Purities before and after the unitary copy on S ⊗ A ⊗ D.
        let measured = inst.initial.evolve(&inst.measurement).unwrap();
        let copied = measured.evolve(&inst.copy).unwrap();
        let before = measured.reduce(&["S", "A"]).unwrap().purity();
        worst_copy = worst_copy.max((before - copied.purity()).abs());
        worst_copy = worst_copy.max(hs_identity_residual(&inst.spec).unwrap());
    }

    // Overlapping components with partially distinguishable devices.
    let sa = LabeledSpace::new([("S", 2), ("A", 2)]).unwrap();
    let mut worst_violation: f64 = 0.0;
    let mut min_residual = f64::INFINITY;
    for _ in 0..20 {
        let r1 = random_mixed(sa.clone(), &mut rng);
        let r2 = random_pure(sa.clone(), &mut rng);
        let p: f64 = rng.random_range(0.1..0.9);
        let theta: f64 = rng.random_range(0.2..1.4);
        let devices = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)],
        ];
        let overlap = (r1.density().matrix() * r2.density().matrix()).trace().re;
        let oracle = 2.0 * p * (1.0 - p) * overlap * (1.0 - theta.cos().powi(2));
        let spec =
            RecordEnsembleSpec::new("A", "D", vec![(p, r1), (1.0 - p, r2)], devices).unwrap();
        let residual = hs_identity_residual(&spec).unwrap();
        min_residual = min_residual.min(residual);
        worst_violation = worst_violation.max((residual - oracle).abs());
    }
    outcome(
        worst_copy <= 1e-10 && worst_violation <= 1e-9 && min_residual > 0.0,
        format!(
            "50 copies max residual {worst_copy:.2e}; violations min residual {min_residual:.3e}, max |residual - closed form| {worst_violation:.2e}"
        ),
    )
}

fn record_orthogonality() -> Outcome {
    let shapes = [(2, 2, 1), (3, 2, 2), (4, 2, 2), (3, 3, 1), (4, 2, 1)];
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut all_pass = true;
    let mut worst_commutator: f64 = 0.0;
    let mut worst_fidelity: f64 = 1.0;
    for k in 0..40 {
        let (ds, blocks, size) = shapes[k % shapes.len()];
        let inst = BlockRecordInstance::random(&mut rng, ds, blocks, size).unwrap();
        all_pass &= pairwise_orthogonality(&inst.spec, OverlapScope::Apparatus).unwrap().passes();
        let measured = inst.initial.evolve(&inst.measurement).unwrap();
        let pre_copy = measured.reduce(&["S", "A"]).unwrap();
        worst_commutator = worst_commutator.max(pointer_commutation_check(&inst.copy, &pre_copy).unwrap().residual);

        let mut transcript = ProtocolTranscript::new(inst.initial.clone());
        transcript.apply_unitary("measure", "U", &inst.measurement, &["S", "A"]).unwrap();
        transcript.apply_copy("copy", "C", &inst.copy, &["A", "D"]).unwrap();
        let last = transcript.apply_unitary("reverse", "U+", &inst.measurement.adjoint(), &["S", "A"]).unwrap();
        let f = fidelity(&inst.initial.reduce(&["S", "A"]).unwrap(), &last.reduce(&["S", "A"]).unwrap()).unwrap();
        worst_fidelity = worst_fidelity.min(f);
    }
    let distinction = system_orthogonal_spec().unwrap();
    let joint = pairwise_orthogonality(&distinction, OverlapScope::Joint).unwrap();
    let apparatus = pairwise_orthogonality(&distinction, OverlapScope::Apparatus).unwrap();
    let distinguished = joint.status == CheckStatus::Pass && apparatus.status == CheckStatus::Fail;
    outcome(
        all_pass && worst_commutator <= 1e-10 && worst_fidelity >= 1.0 - 1e-9 && distinguished,
        format!(
            "40 block specs: commutator {worst_commutator:.2e}, min fidelity {worst_fidelity:.12}; joint-only spec {:?}/{:?}",
            joint.status, apparatus.status
        ),
    )
}

fn friend_consensus() -> Outcome {
    let suite = amplitude_suite(&[2], 100, 707);
    let consensus = build_consensus(2).unwrap();
    let record = build_record_check(2, &[1.0, 2.0], &[0.0]).unwrap();
    let results = par::map(&suite, |(_, amps)| {
        let c = reversal_after_verification(amps, &consensus).unwrap().fidelities.joint;
        let a = reversal_after_verification(amps, &record).unwrap().fidelities.joint;
        let oracle: f64 = amps.iter().map(|x| x.norm_sqr().powi(2)).sum();
        (c, (a - oracle).abs())
    });
    let consensus_min = results.iter().map(|r| r.0).fold(1.0, f64::min);
    let record_err = results.iter().map(|r| r.1).fold(0.0, f64::max);

    let expected = [1.0, 0.625, 0.5, 0.625, 1.0];
    let table = sweep(&ScenarioConfig::new("friend-nondegenerate"), "alpha_up_sq", &[0.0, 0.25, 0.5, 0.75, 1.0], 2).unwrap();
    let sweep_err = table.rows.iter().zip(expected).map(|(r, e)| (r.fidelity_joint - e).abs()).fold(0.0, f64::max);
    let curve: Vec<String> = table.rows.iter().map(|r| format!("{:.6}", r.fidelity_joint)).collect();
    outcome(
        consensus_min >= 1.0 - 1e-9 && record_err <= 1e-9 && sweep_err <= 1e-9,
        format!(
            "consensus min fidelity {consensus_min:.12}, |F - Σ|α|⁴| {record_err:.2e}, sweep [{}]",
            curve.join(", ")
        ),
    )
}

fn classical_contrast() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut cases = 0usize;
    let mut failures = Vec::new();
    for ds in 2..=4 {
        for da in ds..=4 {
            for dd in da..=4 {
                let space = LabeledSpace::new([("S", ds), ("A", da), ("D", dd)]).unwrap();
                let mut inputs: Vec<Vec<f64>> =
                    (0..ds).map(|s| (0..ds).map(|k| if k == s { 1.0 } else { 0.0 }).collect()).collect();
                inputs.extend((0..5).map(|_| random_distribution(ds, &mut rng)));
                for w in inputs {
                    cases += 1;
                    let mut probs = vec![0.0; space.dim()];
                    for (s, ws) in w.iter().enumerate() {
                        probs[s * da * dd] = *ws;
                    }
                    let initial = ClassicalEnsemble::new(space.clone(), probs).unwrap();
                    let measured = classical_measure(&initial, "S", "A").unwrap();
                    let copied = classical_copy(&measured, "A", "D").unwrap();
                    let reversed = classical_reverse(&copied, "S", "A").unwrap();
                    let sa_before = marginal(&initial, &["S", "A"]).unwrap();
                    let sa_after = marginal(&reversed, &["S", "A"]).unwrap();
                    let exact = sa_before.probabilities() == sa_after.probabilities();
                    let sd = marginal(&reversed, &["S", "D"]).unwrap();
                    let correlated = (0..ds).all(|s| {
                        (0..dd).all(|k| sd.probability(&[s, k]) == if k == s { w[s] } else { 0.0 })
                    });
                    if !(exact && correlated) {
                        failures.push(format!("({ds},{da},{dd})"));
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{cases} cases, SA marginal exact and S-D perfectly correlated; failures {failures:?}"),
    )
}

fn determinism() -> Outcome {
    let mut mismatches = Vec::new();
    for info in list_scenarios() {
        for seed in [0u64, 17, 123456789] {
            let mut cfg = ScenarioConfig::new(info.name);
            cfg.seed = Some(seed);
            let first = run_scenario(&cfg).unwrap().report.to_canonical_json();
            let second = run_scenario(&cfg).unwrap().report.to_canonical_json();
            if first != second {
                mismatches.push(format!("{}@{seed}", info.name));
            }
        }
    }
    let cfg = ScenarioConfig::new("mixture-with-copy");
    let grid: Vec<f64> = (0..16).map(|k| k as f64).collect();
    let serial = sweep(&cfg, "seed", &grid, 1).unwrap().to_json();
    let threaded = sweep(&cfg, "seed", &grid, 4).unwrap().to_json();
    if serial != threaded {
        mismatches.push("sweep jobs=1 vs jobs=4".into());
    }
    outcome(
        mismatches.is_empty(),
        format!("{} scenarios x 3 seeds plus a threaded sweep; mismatches {mismatches:?}", list_scenarios().len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("no-copy reversal", no_copy_reversal),
        ("copy blocks reversal", copy_blocks_reversal),
        ("quasiclassical exception", quasiclassical_exception),
        ("discord equals entropy gap", discord_equals_entropy_gap),
        ("Hilbert-Schmidt identity", hilbert_schmidt_identity),
        ("record orthogonality", record_orthogonality),
        ("friend consensus", friend_consensus),
        ("classical contrast", classical_contrast),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        if !result.passed {
            failed += 1;
        }
        println!("{} [{}] {name}: {}", if result.passed { "PASS" } else { "FAIL" }, k + 1, result.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
