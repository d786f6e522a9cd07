//! `ttmdl` command-line tool.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a numerical
//! routine fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ttmdl_core::decomp::tt_mdl;
use ttmdl_core::estimate::{estimate, EstimateOptions};
use ttmdl_core::harness::{
    ra_axes, ra_profile, rd_axes, rd_profile, run_benchmark, save_profile_csv, AngleAxis, BenchmarkSpec,
};
use ttmdl_core::sim::{add_noise, ingest_adc, synthesize, NoiseSpec, Scenario};
use ttmdl_core::tensor::{read_cten_file, write_cten_file};

#[derive(Debug, Parser)]
#[command(name = "ttmdl", version, about = "TT-MDL denoising and tensor ESPRIT estimation for FMCW MIMO radar")]
struct Cli {
    /// RNG seed (noise seed for `simulate`, base seed for `bench`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON configuration: a scenario, or a benchmark spec for `bench`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a data cube from a scenario.
    Simulate {
        /// Input SNR in dB; overrides the scenario's noise block.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        /// Write the noiseless cube only.
        #[arg(long, conflicts_with = "snr")]
        noiseless: bool,
    },
    /// TT-MDL denoising of a CTEN1 tensor.
    Denoise {
        #[arg(long)]
        input: PathBuf,
    },
    /// Estimate target parameters from a CTEN1 tensor.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Smoothing windows, one per mode.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<usize>>,
        /// Model order.
        #[arg(long)]
        order: Option<usize>,
        /// Run TT-MDL first and estimate on the denoised tensor.
        #[arg(long)]
        denoise: bool,
    },
    /// Range-Doppler or range-angle profile as a CSV grid.
    Profile {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ProfileKind::Rd)]
        kind: ProfileKind,
    },
    /// Monte-Carlo benchmark.
    Bench {
        /// Override the number of trials per grid point.
        #[arg(long)]
        trials: Option<usize>,
        /// Fill the timing columns of metrics.csv.
        #[arg(long)]
        timings: bool,
        /// Also report the range-Doppler peak SNR.
        #[arg(long)]
        peak_snr: bool,
    },
    /// Convert a raw ADC capture into a CTEN1 tensor.
    Ingest {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        sidecar: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileKind {
    /// Range-Doppler.
    Rd,
    /// Range-azimuth.
    Az,
    /// Range-elevation.
    El,
}

/// Marks errors caused by how the tool was invoked.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                eprintln!("\nFor more information, try '--help'.");
            }
            let numeric = e.chain().any(|c| c.downcast_ref::<ttmdl_core::Error>().is_some_and(|x| x.is_numeric()));
            ExitCode::from(if numeric { 2 } else { 1 })
        }
    }
}

fn out_dir(cli_out: &Option<PathBuf>) -> anyhow::Result<PathBuf> {
    let dir = cli_out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn scenario(config: &Option<PathBuf>) -> anyhow::Result<Scenario> {
    match config {
        Some(p) => Scenario::load(p).with_context(|| format!("reading scenario {}", p.display())),
        None => Ok(Scenario::desk()),
    }
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { snr, noiseless } => {
            let sc = scenario(&cli.config)?;
            let dir = out_dir(&cli.out)?;
            let clean = synthesize(&sc.radar, &sc.targets)?;
            let noise = match (noiseless, snr, sc.noise) {
                (true, ..) => None,
                (false, Some(s), base) => Some(NoiseSpec { input_snr_db: s, seed: base.map_or(0, |n| n.seed) }),
                (false, None, base) => base,
            }
            .map(|n| NoiseSpec { seed: cli.seed.unwrap_or(n.seed), ..n });
            let tensor = match &noise {
                Some(n) => add_noise(&clean, n)?.0,
                None => clean.clone(),
            };
            write_cten_file(&tensor, dir.join("tensor.cten"))?;
            write_cten_file(&clean, dir.join("clean.cten"))?;
            write_json(
                &dir.join("manifest.json"),
                &json!({
                    "version": 1,
                    "dims": tensor.dims(),
                    "noise": noise,
                    "files": { "tensor": "tensor.cten", "clean": "clean.cten" },
                    "scenario": sc,
                }),
            )?;
            println!("wrote {:?} tensor to {}", tensor.dims(), dir.display());
        }
        Command::Denoise { input } => {
            let y = read_cten_file(&input).with_context(|| format!("reading {}", input.display()))?;
            let dir = out_dir(&cli.out)?;
            let res = tt_mdl(&y)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            write_cten_file(&res.denoised, dir.join("denoised.cten"))?;
            write_json(
                &dir.join("denoise.json"),
                &json!({
                    "status": res.status,
                    "ranks": res.model.ranks(),
                    "truncation_energy": res.truncation_energy,
                    "energy_identity_error": res.energy_identity_error(&y),
                    "mdl": res.diagnostics,
                    "warnings": res.warnings,
                }),
            )?;
            println!("status {:?}, TT ranks {:?}", res.status, res.model.ranks());
        }
        Command::Estimate { input, windows, order, denoise } => {
            let Some(cfg_path) = &cli.config else {
                return Err(usage("estimate needs --config <scenario.json> for the radar parameters"));
            };
            let sc = scenario(&Some(cfg_path.clone()))?;
            let mut y = read_cten_file(&input).with_context(|| format!("reading {}", input.display()))?;
            if denoise {
                y = tt_mdl(&y)?.denoised;
            }
            let mut res = estimate(&y, &sc.radar, &EstimateOptions { windows, order, bond_ranks: None })?;
            let score = res.score(&sc.targets);
            let dir = out_dir(&cli.out)?;
            res.save(dir.join("estimate.json"))?;
            for t in &res.targets {
                println!(
                    "range {} m, velocity {} m/s, azimuth {} deg, elevation {} deg",
                    show(t.range_m),
                    show(t.vel_mps),
                    show(t.az_rad.map(f64::to_degrees)),
                    show(t.el_rad.map(f64::to_degrees))
                );
            }
            println!("joint NMSE vs scenario targets: {:.3e}", score.mean_with_penalty());
        }
        Command::Profile { input, kind } => {
            let sc = scenario(&cli.config)?;
            let y = read_cten_file(&input).with_context(|| format!("reading {}", input.display()))?;
            let dir = out_dir(&cli.out)?;
            let (m, name) = match kind {
                ProfileKind::Rd => (rd_profile(&y)?, "profile_rd.csv"),
                ProfileKind::Az => (ra_profile(&y, AngleAxis::Azimuth)?, "profile_az.csv"),
                ProfileKind::El => (ra_profile(&y, AngleAxis::Elevation)?, "profile_el.csv"),
            };
            let axes = match kind {
                ProfileKind::Rd => rd_axes(&sc.radar, &m),
                ProfileKind::Az => ra_axes(&sc.radar, &m, AngleAxis::Azimuth),
                ProfileKind::El => ra_axes(&sc.radar, &m, AngleAxis::Elevation),
            };
            save_profile_csv(dir.join(name), &m, &axes)?;
            println!("wrote {}", dir.join(name).display());
        }
        Command::Bench { trials, timings, peak_snr } => {
            let Some(path) = &cli.config else {
                return Err(usage("bench needs --config <bench.json>"));
            };
            let mut spec = BenchmarkSpec::load(path).with_context(|| format!("reading {}", path.display()))?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(s) = cli.seed {
                spec.base_seed = s;
            }
            if let Some(o) = &cli.out {
                spec.output_dir = o.clone();
            }
            spec.record_timings |= timings;
            spec.peak_snr |= peak_snr;
            let report = run_benchmark(&spec)?;
            println!("{:<16}{:>10}{:>14}{:>10}{:>12}{:>10}", "method", "input dB", "output dB", "std", "NMSE", "failed");
            for r in &report.rows {
                println!(
                    "{:<16}{:>10.1}{:>14.2}{:>10.2}{:>12.3e}{:>10}",
                    r.method.name(),
                    r.input_snr_db,
                    r.output_snr_db_mean,
                    r.output_snr_db_std,
                    r.nmse_mean,
                    r.failures
                );
            }
            println!("\n{:<16}{:>12}{:>12}{:>12}", "method", "denoise ms", "smooth ms", "estimate ms");
            for t in &report.timing {
                println!("{:<16}{:>12.2}{:>12.2}{:>12.2}", t.method.name(), t.denoise_ms, t.smooth_ms, t.estimate_ms);
            }
            println!("\nwrote {}", spec.output_dir.display());
        }
        Command::Ingest { raw, sidecar } => {
            if !raw.exists() {
                bail!("{} does not exist", raw.display());
            }
            let y = ingest_adc(&raw, &sidecar)?;
            let dir = out_dir(&cli.out)?;
            write_cten_file(&y, dir.join("tensor.cten"))?;
            println!("wrote {:?} tensor to {}", y.dims(), dir.join("tensor.cten").display());
        }
    }
    Ok(())
}
