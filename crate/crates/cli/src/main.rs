//! Command-line surface for the EIT storage/cloning simulator.
//!
//! Exit codes: 0 success, 2 configuration or validation problem,
//! 3 numerical or tolerance failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use eitsim::report::oracle::{oracle_check, OracleCheckConfig};
use eitsim::report::{
    clone_run, qnd_sweep, stirap_run, CloneRunConfig, QndSweepConfig, StirapRunConfig, Table,
};

#[derive(Parser)]
#[command(
    name = "eitsim",
    about = "Quantum storage and cloning of light in an EIT medium: sweeps, reports and cross-checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the angle-grid point count of qnd-sweep.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Override the storage-condition margin.
    #[arg(long, global = true)]
    margin: Option<f64>,

    /// Equation variant for stirap-run; `both` writes one trajectory per
    /// variant plus a diff summary.
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Printed,
    Symmetrized,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Correlation coefficients C1..C3 against the mixing angle, per medium.
    QndSweep,
    /// Clone a signal onto the polariton pair and report moments, noises,
    /// correlations and fidelity; optionally scan a condensate grid.
    CloneReport,
    /// Integrate the photoassociation mean-field equations and emit the
    /// trajectory with conservation diagnostics.
    StirapRun,
    /// Re-derive the analytic claims in a truncated Fock space and compare.
    OracleCheck,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    qnd_sweep: Option<QndSweepConfig>,
    clone: Option<CloneRunConfig>,
    stirap: Option<StirapRunConfig>,
    oracle: Option<OracleCheckConfig>,
}

enum RunError {
    Config(String),
    Numerical(String),
}

impl From<eitsim::Error> for RunError {
    fn from(e: eitsim::Error) -> Self {
        use eitsim::Error::*;
        match e {
            Stiffness { .. } | InternalDisagreement(_) | TruncationLeak { .. } => {
                RunError::Numerical(e.to_string())
            }
            _ => RunError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Config(format!("i/o: {e}"))
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, RunError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| RunError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| RunError::Config(format!("cannot parse {}: {e}", p.display())))
        }
    }
}

fn write_table(dir: &Path, table: &Table) -> Result<PathBuf, RunError> {
    let path = dir.join(format!("{}.csv", table.name));
    std::fs::write(&path, table.to_csv())?;
    Ok(path)
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| RunError::Config(format!("serialize {name}: {e}")))?;
    std::fs::write(&path, text)?;
    Ok(path)
}

fn run(cli: &Cli) -> Result<(), RunError> {
    let cfg = load_config(&cli.config)?;
    std::fs::create_dir_all(&cli.out)?;

    match cli.command {
        Command::QndSweep => {
            let mut sweep_cfg = cfg.qnd_sweep.unwrap_or_default();
            if let Some(grid) = cli.grid {
                sweep_cfg.grid = grid;
            }
            if let Some(margin) = cli.margin {
                sweep_cfg.margin = margin;
            }
            let outputs = qnd_sweep(&sweep_cfg)?;
            for out in &outputs {
                let path = write_table(&cli.out, &out.table)?;
                println!("wrote {}", path.display());
            }
            let summary: Vec<_> = outputs
                .iter()
                .map(|o| {
                    serde_json::json!({
                        "tag": o.tag,
                        "medium": o.medium,
                        "v_medium_q": o.v_medium.0,
                        "v_medium_p": o.v_medium.1,
                        "margin": o.margin,
                        "conditions_at_balanced_angle": [
                            o.conditions_at_balanced.0,
                            o.conditions_at_balanced.1,
                        ],
                    })
                })
                .collect();
            let path = write_json(&cli.out, "qnd_sweep_summary.json", &summary)?;
            println!("wrote {}", path.display());
        }
        Command::CloneReport => {
            let run_cfg = cfg.clone.unwrap_or_default();
            let out = clone_run(&run_cfg)?;
            let path = write_json(&cli.out, "clone_report.json", &out)?;
            println!("wrote {}", path.display());
            if let Some(grid) = &out.grid_table {
                let path = write_table(&cli.out, grid)?;
                println!("wrote {}", path.display());
            }
            println!(
                "medium {}: fidelity {:.12}{}",
                out.medium,
                out.report.fidelity,
                match out.report.reference_fidelity {
                    Some(f) => format!(" (quoted extremal reference {f})"),
                    None => String::new(),
                }
            );
        }
        Command::StirapRun => {
            let mut run_cfg = cfg.stirap.unwrap_or_default();
            match cli.variant {
                Some(VariantArg::Printed) => {
                    run_cfg.variant = "printed".into();
                    run_cfg.compare_variants = false;
                }
                Some(VariantArg::Symmetrized) => {
                    run_cfg.variant = "symmetrized".into();
                    run_cfg.compare_variants = false;
                }
                Some(VariantArg::Both) => run_cfg.compare_variants = true,
                None => {}
            }
            let out = stirap_run(&run_cfg)?;
            for table in &out.tables {
                let path = write_table(&cli.out, table)?;
                println!("wrote {}", path.display());
            }
            let path = write_json(&cli.out, "stirap_summary.json", &out)?;
            println!("wrote {}", path.display());
            for s in &out.summaries {
                println!(
                    "variant {}: atom-charge drift {:.3e}, field-charge drift {:.3e}, \
                     max excited fraction {:.4}, molecular fraction {:.4}",
                    s.variant,
                    s.diagnostics.charge_atoms_drift_rel,
                    s.diagnostics.charge_field_drift_rel,
                    s.diagnostics.max_excited_fraction,
                    s.diagnostics.final_molecular_fraction
                );
            }
        }
        Command::OracleCheck => {
            let check_cfg = cfg.oracle.unwrap_or_default();
            let report = oracle_check(&check_cfg)?;
            print!("{}", report.render());
            let path = write_json(&cli.out, "oracle_check.json", &report)?;
            println!("wrote {}", path.display());
            if !report.passed {
                return Err(RunError::Numerical(
                    "oracle-check found deltas above tolerance".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
