//! Batch front end: load a config, build systems and potentials, run the
//! estimators and theorem checks, and emit CSV/JSON and plot-series data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ndsp_core::config::RunConfig;
use ndsp_core::error::Error;
use ndsp_core::harness::CheckStatus;
use ndsp_core::runner::{self, RunOutputs};
use ndsp_core::span_sep::SolveKind;

#[derive(Parser)]
#[command(name = "ndsp", version, about = "Finite-resolution pressures of nonautonomous systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Greedy,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON run config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's output_dir, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the solver mode of the schedule.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Worker threads for the per-cell parallel map.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run estimators and checks; exit 0 iff all asserting checks pass.
    Run(CommonArgs),
    /// Rerun while varying one parameter; concatenated CSV output.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// One of: epsilon, power, seed.
        #[arg(long)]
        parameter: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Print the known theorem-check ids.
    ListChecks,
    /// Parse and validate a config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::IndexOutOfRange { .. } | Error::LevelMismatch(_) => 2,
        Error::InfeasibleSchedule(_) | Error::HorizonExceeded { .. } => 3,
        _ => 4,
    }
}

fn load_config(path: &Path, common: &CommonArgs) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(mode) = common.mode {
        cfg.schedule.mode.kind = match mode {
            ModeArg::Exact => SolveKind::Exact,
            ModeArg::Greedy => SolveKind::Greedy,
        };
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &CommonArgs, cfg: &RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_outputs(dir: &Path, outputs: &RunOutputs) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("estimates.csv"), outputs.estimates_csv())?;
    fs::write(dir.join("summary.json"), outputs.summary_json())?;
    fs::write(dir.join("checks.json"), outputs.checks_json())?;
    let plot_dir = dir.join("plotdata");
    fs::create_dir_all(&plot_dir)?;
    for (name, text) in outputs.plot_data() {
        fs::write(plot_dir.join(name), text)?;
    }
    Ok(())
}

fn print_check_lines(outputs: &RunOutputs) {
    for rec in &outputs.checks {
        let status = match rec.check.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "n/a",
            CheckStatus::Diagnostic => "diagnostic",
        };
        println!(
            "[check] {} {} {} {} ({} comparisons, {} violations)",
            rec.check.theorem_id,
            rec.system,
            rec.potential,
            status,
            rec.check.comparisons,
            rec.check.violations
        );
    }
}

fn run_cmd(common: &CommonArgs) -> Result<u8, Error> {
    let cfg = load_config(&common.config, common)?;
    cfg.validate()?;
    let outputs = runner::run_config(&cfg)?;
    let dir = out_dir(common, &cfg);
    write_outputs(&dir, &outputs)
        .map_err(|e| Error::Config(format!("cannot write outputs: {e}")))?;
    print_check_lines(&outputs);
    println!("wrote {}", dir.display());
    Ok(if outputs.all_checks_pass() { 0 } else { 1 })
}

fn sweep_cmd(common: &CommonArgs, parameter: &str, values: &[f64]) -> Result<u8, Error> {
    let cfg = load_config(&common.config, common)?;
    cfg.validate()?;
    let results = runner::sweep_config(&cfg, parameter, values)?;
    let dir = out_dir(common, &cfg);
    fs::create_dir_all(&dir).map_err(|e| Error::Config(format!("cannot create out dir: {e}")))?;
    fs::write(dir.join("sweep.csv"), runner::sweep_csv(&results))
        .map_err(|e| Error::Config(format!("cannot write sweep.csv: {e}")))?;
    let summaries: Vec<_> = results.iter().flat_map(|(_, o)| o.summaries.clone()).collect();
    fs::write(
        dir.join("sweep_summary.json"),
        serde_json::to_string_pretty(&summaries).expect("summaries serialize") + "\n",
    )
    .map_err(|e| Error::Config(format!("cannot write sweep_summary.json: {e}")))?;
    for (v, o) in &results {
        println!("[sweep] {parameter}={v}: {} rows", o.rows.len());
    }
    println!("wrote {}", dir.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.cmd {
        Cmd::Run(c) | Cmd::Sweep { common: c, .. } => c.threads,
        _ => None,
    };
    if let Some(n) = threads {
        // Ignore failure: the global pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.cmd {
        Cmd::Run(common) => run_cmd(common),
        Cmd::Sweep { common, parameter, values } => sweep_cmd(common, parameter, values),
        Cmd::ListChecks => {
            for (id, about) in runner::KNOWN_CHECKS {
                println!("{id:24} {about}");
            }
            Ok(0)
        }
        Cmd::ValidateConfig { config } => {
            let text = match fs::read_to_string(config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            match RunConfig::from_json(&text).and_then(|c| c.validate().map(|_| c)) {
                Ok(_) => {
                    println!("ok");
                    Ok(0)
                }
                Err(e) => Err(e),
            }
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
