use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use reversal_lab::scenario::{list_scenarios, run_scenario, sweep, ScenarioConfig, ScenarioReport, SweepReport};
use reversal_lab::LabError;

const SEED_ENV: &str = "REVERSAL_LAB_SEED";

#[derive(Parser)]
#[command(name = "reversal-lab", version, about = "Measure, copy and reverse small quantum systems")]
struct Cli {
    /// Worker threads for sweeps (1 runs sequentially).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario configuration.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// List registered scenarios.
    List {
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Run a scenario over a grid of one parameter.
    Sweep {
        config: PathBuf,
        /// One of alpha_up_sq, seed, w01, weight_0.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 0,0.25,0.5.
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(clap::Args)]
struct Output {
    /// Write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Seed used when the configuration has none (overrides $REVERSAL_LAB_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_config_error() { 2 } else { 3 })
        }
    }
}

fn execute(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::List { format } => {
            if format != Format::Machine {
                print!("{}", render_list());
            }
            if format != Format::Human {
                println!("{}", serde_json::to_string_pretty(list_scenarios()).expect("registry serializes"));
            }
            Ok(())
        }
        Command::Run { config, output } => {
            let config = load_config(&config, output.seed)?;
            let report = run_scenario(&config)?.report;
            emit(&output, &render_report(&report), &report.to_json())
        }
        Command::Sweep { config, param, grid, output } => {
            let config = load_config(&config, output.seed)?;
            let grid = parse_grid(&grid)?;
            let report = sweep(&config, &param, &grid, cli.jobs)?;
            emit(&output, &render_sweep(&report), &report.to_json())
        }
    }
}

fn load_config(path: &Path, seed_flag: Option<u64>) -> Result<ScenarioConfig, LabError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = ScenarioConfig::from_json(&text)?;
    if config.seed.is_none() {
        config.seed = match seed_flag {
            Some(seed) => Some(seed),
            None => env_seed()?,
        };
    }
    Ok(config)
}

fn env_seed() -> Result<Option<u64>, LabError> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| LabError::Config(format!("{SEED_ENV}='{raw}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn parse_grid(raw: &str) -> Result<Vec<f64>, LabError> {
    let values: Vec<f64> = raw
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| LabError::Config(format!("bad grid value '{v}'"))))
        .collect::<Result<_, _>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Config("grid values must be finite".into()));
    }
    Ok(values)
}

fn emit(output: &Output, human: &str, json: &str) -> Result<(), LabError> {
    if let Some(path) = &output.report {
        std::fs::write(path, format!("{json}\n"))
            .map_err(|e| LabError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    if output.format != Format::Machine {
        print!("{human}");
    }
    if output.format != Format::Human {
        println!("{json}");
    }
    Ok(())
}

fn render_list() -> String {
    let width = list_scenarios().iter().map(|s| s.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for info in list_scenarios() {
        let _ = writeln!(out, "{:width$}  {}", info.name, info.description);
        let _ = writeln!(out, "{:width$}  {}", "", info.protocol);
    }
    out
}

fn render_report(report: &ScenarioReport) -> String {
    let mut out = String::new();
    let cfg = &report.config;
    let d = cfg.dimensions;
    let has_device = report.steps.first().is_some_and(|s| s.acting_labels.iter().any(|l| l == "D"));
    let device = if has_device { format!(" d_D={}", d.device) } else { String::new() };
    let _ = writeln!(
        out,
        "scenario {}  (d_S={} d_A={}{device} seed={})",
        report.scenario,
        d.system,
        d.apparatus,
        cfg.seed()
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<10} {:<14} {:<8} {:>10} {:>12} {:>12}", "step", "operation", "acting", "purity", "H[bits]", "H_S[bits]");
    for step in &report.steps {
        let _ = writeln!(
            out,
            "{:<10} {:<14} {:<8} {:>10.6} {:>12.6} {:>12.6}",
            step.name,
            step.operation,
            step.acting_labels.join(""),
            step.purity,
            step.entropy_bits,
            step.system_entropy_bits
        );
    }
    let _ = writeln!(out);
    let f = report.fidelities;
    let _ = writeln!(out, "{:<12} {:>16} {}", "fidelity SA", format!("{:.12}", f.joint), report.verdict);
    let _ = writeln!(out, "{:<12} {:>16} {}", "fidelity S", format!("{:.12}", f.system), report.system_verdict);
    let _ = writeln!(out, "{:<12} {:>16} {}", "fidelity A", format!("{:.12}", f.apparatus), report.apparatus_verdict);
    let _ = writeln!(out);
    let i = report.info;
    let rows = [
        ("I(S:A)", i.mutual_information),
        ("J(S;A)", i.asymmetric_mutual_information),
        ("discord", i.discord),
        ("H(S|A)", i.conditional_entropy),
        ("H(A)", i.outcome_entropy),
        ("dH(S)", i.entropy_gap),
    ];
    for (name, value) in rows {
        let _ = writeln!(out, "{name:<12} {value:>16.12}");
    }
    if let Some(mi) = i.system_device_mutual_information {
        let _ = writeln!(out, "{:<12} {mi:>16.12}", "I(S:D)");
    }
    if let Some(checks) = &report.checks {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<24} {:>12} {}", "copy preserves SA", format!("{:.3e}", checks.copy_preserves_joint.residual), checks.copy_preserves_joint.holds);
        let _ = writeln!(out, "{:<24} {:>12} {:?}", "record overlap (SA)", format!("{:.3e}", checks.joint_orthogonality.worst_off_diagonal), checks.joint_orthogonality.status);
        let _ = writeln!(out, "{:<24} {:>12} {:?}", "record overlap (A)", format!("{:.3e}", checks.apparatus_orthogonality.worst_off_diagonal), checks.apparatus_orthogonality.status);
        let _ = writeln!(out, "{:<24} {:>12} {}", "copy commutes", format!("{:.3e}", checks.commutation.residual), checks.commutation.commutes);
        let _ = writeln!(out, "{:<24} {:>12}", "record coherence", format!("{:.3e}", checks.record_coherence));
    }
    if let Some(friend) = &report.friend {
        let _ = writeln!(out);
        let _ = writeln!(out, "verifier {}", friend.verifier);
        let _ = writeln!(out, "{:<16} {:>10} {:>12} {:>12} {:>12}", "outcome", "value", "prob", "F_SA", "F_S");
        for b in &friend.branches {
            let _ = writeln!(
                out,
                "{:<16} {:>10.4} {:>12.6} {:>12.6} {:>12.6}",
                b.tags.join(","),
                b.eigenvalue,
                b.probability,
                b.fidelity_joint,
                b.fidelity_system
            );
        }
    }
    if let Some(c) = &report.classical {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:>16.12}", "H(w)", c.weight_entropy);
        let _ = writeln!(out, "{:<16} {:>16.12}", "I(S:D) final", c.system_device_mutual_information);
        let _ = writeln!(out, "{:<16} {:>16.3e}", "SA marginal err", c.marginal_max_error);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "verdict {}", report.verdict);
    out
}

fn render_sweep(report: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sweep {} over {}", report.scenario, report.parameter);
    let _ = writeln!(
        out,
        "{:>12} {:<14} {:>14} {:>14} {:>14} {:>12} {:>12} {:>12}",
        report.parameter, "verdict", "F_SA", "F_S", "F_A", "I(S:A)", "discord", "dH(S)"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:>12.6} {:<14} {:>14.10} {:>14.10} {:>14.10} {:>12.6} {:>12.6} {:>12.6}",
            r.value,
            r.verdict.as_str(),
            r.fidelity_joint,
            r.fidelity_system,
            r.fidelity_apparatus,
            r.mutual_information,
            r.discord,
            r.entropy_gap
        );
    }
    out
}
