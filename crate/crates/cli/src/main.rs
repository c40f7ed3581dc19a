//! `xlirs`: run estimation experiments and evaluate closed-form bounds.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use xlirs::analysis::{complexity_estimate, crlb, CrlbInputs};
use xlirs::harness::{emit_results, load_config, run_experiment, write_results, write_traces, ExperimentConfig, Preset};

#[derive(Parser)]
#[command(name = "xlirs", version, about = "Near-field XL-IRS cascaded channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Parameter preset filling unspecified fields.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// Master seed, overriding the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file. `run` writes CSV, the other commands plain text.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Also write per-iteration objective traces as CSV.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form Cramér–Rao bound summed over subcarriers.
    Crlb {
        /// Noise power σ².
        #[arg(long, default_value_t = 1.0)]
        noise_power: f64,
        /// Pilot length P, overriding the preset.
        #[arg(long)]
        pilots: Option<usize>,
        /// Optional config file supplying the system parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Per-iteration and total operation counts of the estimator.
    Complexity {
        /// Mode ranks G_z,G_r,G_y; defaults to the full HOSVD ranks.
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        /// Outer iteration count, overriding the config.
        #[arg(long)]
        t_max: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: xlirs::Error| e.to_string())
}

fn base_config(config: Option<&PathBuf>, preset: Option<Preset>) -> Result<ExperimentConfig> {
    match config {
        Some(path) => load_config(path, preset).with_context(|| format!("loading {}", path.display())),
        None => Ok(ExperimentConfig::preset(preset.unwrap_or(Preset::Paper))),
    }
}

fn emit_text(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, traces, common } => {
            let mut cfg = load_config(&config, common.preset).with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let out = common.out.or_else(|| cfg.output.clone());
            let result = run_experiment(&cfg)?;
            for (row, msg) in &result.failures {
                eprintln!("warning: row {row} failed: {msg}");
            }
            match out {
                Some(path) => {
                    emit_results(&result.rows, &path).with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("wrote {} rows to {}", result.rows.len(), path.display());
                }
                None => write_results(&result.rows, std::io::stdout().lock())?,
            }
            if let Some(path) = traces {
                let file = std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
                write_traces(&result.rows, &result.traces, std::io::BufWriter::new(file))?;
            }
            if !result.rows.is_empty() && result.failures.len() == result.rows.len() {
                bail!("every trial failed");
            }
            Ok(())
        }
        Command::Crlb { noise_power, pilots, config, common } => {
            let mut cfg = base_config(config.as_ref(), common.preset)?;
            if let Some(p) = pilots {
                cfg.system.pilots = p;
            }
            if !(noise_power >= 0.0) {
                bail!("noise power must be non-negative");
            }
            let inp = CrlbInputs::from_config(&cfg.system, noise_power);
            inp.validate()?;
            let text = format!(
                "noise_power = {}\nsubcarriers = {}\nn_z = {}\nn_y = {}\nn_r = {}\npilots = {}\ncrlb = {}\n",
                noise_power,
                inp.subcarriers,
                inp.n_z,
                inp.n_y,
                inp.n_r,
                inp.pilots,
                xlirs::harness::format_number(crlb(&inp)),
            );
            emit_text(&text, common.out.as_ref())
        }
        Command::Complexity { ranks, t_max, config, common } => {
            let mut cfg = base_config(config.as_ref(), common.preset)?;
            if let Some(r) = ranks {
                if r.len() != 3 {
                    bail!("--ranks takes three comma-separated values, got {}", r.len());
                }
                cfg.hyper.mode_ranks = Some([r[0], r[1], r[2]]);
            }
            if let Some(t) = t_max {
                cfg.hyper.t_max = t;
            }
            let rep = complexity_estimate(&cfg.system, &cfg.hyper);
            let f = xlirs::harness::format_number;
            let text = format!(
                "mode_ranks = {:?}\nt_max = {}\nhosvd = {}\ncore = {}\nfactors = {}\nrecovery = {}\ntotal = {}\nlog10_total = {}\n",
                rep.mode_ranks,
                cfg.hyper.t_max,
                f(rep.hosvd),
                f(rep.core),
                f(rep.factors),
                f(rep.recovery),
                f(rep.total),
                f(rep.log10_total),
            );
            emit_text(&text, common.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
