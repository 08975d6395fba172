use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rlf_core::harness::{emit_plotdata, load_record, run_experiment, ExperimentConfig, EXPERIMENTS, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "rlf-lab", version, about = "Run transport and semiclassical-limit experiments")]
#[command(after_help = format!("Relative output directories are placed under ${OUTPUT_ROOT_ENV} (default ./runs)."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    /// Exits 0 when every check passes, 2 when a check fails, 1 on error.
    Run { config: PathBuf },
    /// List the registered experiment names.
    ListExperiments,
    /// Write plot tables for a finished run into <run-dir>/plots.
    EmitPlots { run_dir: PathBuf },
}

fn run(config: PathBuf) -> anyhow::Result<u8> {
    let cfg = ExperimentConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
    let record = run_experiment(cfg)?;
    println!("output: {}", record.output_dir.display());
    for c in &record.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{verdict}  {:<24} {:>12.4e}  (threshold {:.4e})", c.name, c.value, c.threshold);
    }
    for stage in record.failed_stages() {
        println!("ERROR stage {stage} failed; see manifest.json");
    }
    println!("wall time {:.1} s", record.wall_seconds);
    Ok(record.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::ListExperiments => {
            for (name, about) in EXPERIMENTS {
                println!("{name:<22} {about}");
            }
            Ok(0)
        }
        Command::EmitPlots { run_dir } => (|| {
            let record = load_record(&run_dir).with_context(|| format!("loading run in {}", run_dir.display()))?;
            let out = run_dir.join("plots");
            let manifest = emit_plotdata(&record, &out)?;
            println!("{} files in {}", manifest.files.len(), out.display());
            for (figure, why) in &manifest.gaps {
                println!("gap: {figure}: {why}");
            }
            Ok(0)
        })(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
