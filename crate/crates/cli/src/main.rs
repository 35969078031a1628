use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use driftfit_core::harness::{estimate_path, replication_seed, run_experiment};
use driftfit_core::io::{
    read_path_file, write_kernel_samples, write_path, write_reps, write_summary,
};
use driftfit_core::{
    preset, simulate_path, ExperimentConfig, KernelKind, TruncationKernel, PRESETS,
};

#[derive(Parser)]
#[command(
    name = "driftfit",
    version,
    about = "Jump-filtered drift estimation for jump-diffusions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write it as `t,x` CSV.
    Simulate {
        #[command(flatten)]
        source: ConfigSource,
        /// Replication index; the path matches replication `rep` of `experiment`.
        #[arg(long, default_value_t = 0)]
        rep: usize,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the drift parameters of an observed path.
    Estimate {
        /// Path CSV with `t` and `x` columns.
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment and write reps.csv and summary.csv.
    Experiment {
        #[command(flatten)]
        source: ConfigSource,
        /// Overrides the replication count of the configuration.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to the available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        /// Run presets with 5000 replications instead of 500.
        #[arg(long)]
        full: bool,
    },
    /// Sample a truncation kernel as `x,phi` CSV.
    KernelDump {
        #[arg(long, value_enum)]
        kind: DumpKind,
        #[arg(long, default_value_t = 1)]
        l: u32,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset name (see `driftfit presets`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpKind {
    Osc,
    Phi0,
}

const CI_REPS: usize = 500;
const FULL_REPS: usize = 5000;

impl ConfigSource {
    fn load(&self, full: bool) -> Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)
                .with_context(|| format!("reading config {}", path.display())),
            (None, Some(name)) => Ok(preset(name, if full { FULL_REPS } else { CI_REPS })?),
            (None, None) => bail!("either --config or --preset is required"),
        }
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { source, rep, out } => {
            let cfg = source.load(false)?;
            let model = cfg.model()?;
            let grid = cfg.grid()?;
            let seed = replication_seed(cfg.mc.seed, rep);
            let path = simulate_path(
                &model,
                cfg.theta0(),
                cfg.sampling.x0,
                &grid,
                cfg.scheme(),
                seed,
            )?;
            write_path(&path, sink(out.as_deref())?)?;
        }
        Command::Estimate { path, source, out } => {
            let cfg = source.load(false)?;
            let model = cfg.model()?;
            let observed = read_path_file(&path)
                .with_context(|| format!("reading path {}", path.display()))?;
            let est = estimate_path(&cfg, &model, &observed)?;
            let mut json = serde_json::json!({
                "theta1": est.theta.theta1,
                "theta2": est.theta.theta2,
                "contrast": est.contrast,
                "kept_fraction": est.kept_fraction,
                "converged": est.converged,
            });
            if let Some(e) = est.theta2_euler {
                json["theta2_euler"] = e.into();
            }
            let mut w = sink(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &json)?;
            writeln!(w)?;
        }
        Command::Experiment {
            source,
            reps,
            out,
            workers,
            full,
        } => {
            let mut cfg = source.load(full)?;
            if let Some(r) = reps {
                cfg.mc.replications = r;
            }
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let result = run_experiment(&cfg, workers)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write_reps(
                &result.rows,
                BufWriter::new(File::create(out.join("reps.csv"))?),
            )?;
            write_summary(
                &result.summaries,
                BufWriter::new(File::create(out.join("summary.csv"))?),
            )?;
            for s in &result.summaries {
                eprintln!(
                    "{}: theta1 {:.4} ({:.4}), theta2 {:.4} ({:.4}), {} reps, {} failed, {:.1}s",
                    s.label,
                    s.mean[0],
                    s.std[0],
                    s.mean[1],
                    s.std[1],
                    s.reps,
                    s.failed,
                    s.runtime_s
                );
            }
        }
        Command::KernelDump {
            kind,
            l,
            d,
            points,
            out,
        } => {
            let kernel = TruncationKernel::new(match kind {
                DumpKind::Osc => KernelKind::Oscillating { l, d },
                DumpKind::Phi0 => KernelKind::Phi0,
            })?;
            write_kernel_samples(&kernel, points, sink(out.as_deref())?)?;
        }
        Command::Presets => {
            for name in PRESETS {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    run(Cli::parse())
}
