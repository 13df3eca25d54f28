use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use hyperwalk::config::RunConfig;
use hyperwalk::pipeline::{self, Command, Context};
use hyperwalk::{Error, Result};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "hyperwalk", version, about = "Drift, entropy and CLT variance of random walks on hyperbolic groups")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; sweeps default to CSV, everything else to JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Green function G(x, y) with its tail bound.
    Green {
        #[arg(long, default_value = "e")]
        x: String,
        #[arg(long, default_value = "e")]
        y: String,
    },
    /// Ancona ratio for a triple, or the strong Ancona trend when no triple is given.
    Ancona {
        #[arg(long, requires_all = ["y", "z"])]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        z: Option<String>,
        /// Allowed Gromov distance of z from the geodesic.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Geodesics per length for the trend.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Spectrum of the transfer operator, stationary measure and Doeblin–Fortet fit.
    Spectrum,
    /// Drift from the stationary measure.
    Drift,
    /// Entropy from the Martin kernel.
    Entropy {
        /// Also report exact convolution entropies up to this power.
        #[arg(long, default_value_t = 0)]
        exact: usize,
    },
    /// CLT variance from the Poisson equation and from the perturbed eigenvalue.
    Variance,
    /// Martin kernel fixed point and its convergence report.
    Fixedpoint {
        /// Dump the kernel for x within this radius.
        #[arg(long, default_value_t = 2)]
        dump_radius: usize,
    },
    /// Monte Carlo drift and variance.
    Mc,
    /// Kolmogorov–Smirnov distance of normalized walk lengths to the normal law.
    Clt {
        /// Variance to test against; the spectral variance when absent.
        #[arg(long)]
        sigma2: Option<f64>,
    },
    /// Drift, entropy and variance along the configured family.
    Sweep {
        /// Order of the smoothness probe (JSON output only).
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
}

impl Cmd {
    fn to_command(&self) -> Command {
        match self {
            Cmd::Green { x, y } => Command::Green {
                x: x.clone(),
                y: y.clone(),
            },
            Cmd::Ancona { x, y, z, k, samples } => Command::Ancona {
                triple: match (x, y, z) {
                    (Some(x), Some(y), Some(z)) => Some((x.clone(), y.clone(), z.clone())),
                    _ => None,
                },
                k: *k,
                samples: *samples,
            },
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Drift => Command::Drift,
            Cmd::Entropy { exact } => Command::Entropy { exact: *exact },
            Cmd::Variance => Command::Variance,
            Cmd::Fixedpoint { dump_radius } => Command::FixedPoint {
                dump_radius: *dump_radius,
            },
            Cmd::Mc => Command::Mc,
            Cmd::Clt { sigma2 } => Command::Clt { sigma2: *sigma2 },
            Cmd::Sweep { order } => Command::Sweep { order: *order },
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Malformed("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// `key,value` lines for every scalar in the result, with dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Number(n) => {
            let s = match n.as_f64() {
                Some(f) if n.is_f64() => pipeline::format_float(f),
                _ => n.to_string(),
            };
            out.push((prefix.to_string(), s));
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null | Value::Array(_) => {}
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let command = cli.command.to_command();
    let is_sweep = matches!(command, Command::Sweep { .. });
    let format = cli.format.unwrap_or(if is_sweep { Format::Csv } else { Format::Json });
    let mut buf = Vec::new();
    match (format, is_sweep) {
        (Format::Csv, true) => {
            let ctx = Context::new(&cfg)?;
            pipeline::write_sweep_csv(&pipeline::sweep(&ctx)?, &mut buf)?;
        }
        (Format::Json, _) => {
            let doc = pipeline::run(&cfg, &command)?;
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
        (Format::Csv, false) => {
            let doc = pipeline::run(&cfg, &command)?;
            let mut rows = Vec::new();
            flatten("", &doc["result"], &mut rows);
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["field", "value"])?;
            for (k, v) in rows {
                w.write_record([k, v])?;
            }
            w.flush()?;
        }
    }
    match &cli.out {
        Some(path) => std::fs::write(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_NUMERICAL })
        }
    }
}
