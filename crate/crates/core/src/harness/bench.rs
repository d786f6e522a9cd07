//! Monte-Carlo comparison of denoisers and estimators over an input-SNR grid.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decomp::{cpd_als_with, cpd_to_tt, tt_mdl, tt_recompress, AlsOptions};
use crate::error::{Error, Result};
use crate::estimate::{estimate_stage, smooth_stage, EstimationResult, SmoothingPlan, MISS_PENALTY};
use crate::sim::{add_noise, synthesize, NoiseSpec, Scenario};
use crate::tensor::ComplexTensor;

use super::baseline::fft_estimate;
use super::metrics::{output_snr, peak_snr};

/// Normative header of the metrics CSV.
pub const METRICS_HEADER: &str =
    "method,input_snr_db,output_snr_db_mean,output_snr_db_std,nmse_mean,nmse_std,denoise_ms,smooth_ms,estimate_ms,trials";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TtMdl,
    CpdRecompress,
    CpdAls,
    FftBaseline,
    None,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::TtMdl => "tt_mdl",
            Method::CpdRecompress => "cpd_recompress",
            Method::CpdAls => "cpd_als",
            Method::FftBaseline => "fft_baseline",
            Method::None => "none",
        }
    }

    pub fn all() -> [Method; 5] {
        [Method::TtMdl, Method::CpdRecompress, Method::CpdAls, Method::FftBaseline, Method::None]
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::all()
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

fn default_bench_als() -> AlsOptions {
    AlsOptions { max_iters: 50, tol: 1e-8, restarts: 1 }
}

fn default_epsilon() -> f64 {
    0.1
}

/// Benchmark description, usually read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    /// Scenario JSON; relative paths resolve against the spec file.
    pub scenario: PathBuf,
    pub methods: Vec<Method>,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Fill the timing columns of the metrics CSV. Off by default so the
    /// file is reproducible byte for byte.
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default = "default_bench_als")]
    pub als: AlsOptions,
    /// Tolerance of the TT recompression of the CPD fit.
    #[serde(default = "default_epsilon")]
    pub recompress_epsilon: f64,
    /// Also score each trial with the range-Doppler peak SNR and write
    /// `peak_snr.csv`.
    #[serde(default)]
    pub peak_snr: bool,
}

impl BenchmarkSpec {
    pub fn new(scenario: impl Into<PathBuf>, methods: Vec<Method>, snr_grid_db: Vec<f64>, trials: usize) -> Self {
        Self {
            scenario: scenario.into(),
            methods,
            snr_grid_db,
            trials,
            base_seed: 0,
            output_dir: PathBuf::from("bench_out"),
            record_timings: false,
            als: default_bench_als(),
            recompress_epsilon: default_epsilon(),
            peak_snr: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("method list is empty"));
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return Err(Error::invalid("method list has duplicates"));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR grid must be non-empty and finite"));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("SNR grid must be strictly increasing"));
        }
        if !(0.0..1.0).contains(&self.recompress_epsilon) {
            return Err(Error::invalid("recompression tolerance must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Reads a spec and resolves its scenario path against the file's
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec: BenchmarkSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if spec.scenario.is_relative() {
            if let Some(dir) = path.parent() {
                spec.scenario = dir.join(&spec.scenario);
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Aggregate over the trials of one `(method, input SNR)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub input_snr_db: f64,
    pub output_snr_db_mean: f64,
    pub output_snr_db_std: f64,
    pub nmse_mean: f64,
    pub nmse_std: f64,
    pub denoise_ms: f64,
    pub smooth_ms: f64,
    pub estimate_ms: f64,
    pub trials: usize,
    /// Trials whose processing step failed (excluded from the SNR mean).
    pub failures: usize,
}

/// One trial of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub input_snr_db: f64,
    pub trial: usize,
    pub output_snr_db: Option<f64>,
    /// Mean over targets of the range-Doppler peak SNR, when requested.
    pub peak_snr_db: Option<f64>,
    pub raw_snr_db: f64,
    pub nmse: f64,
    pub denoise_ms: f64,
    pub smooth_ms: f64,
    pub estimate_ms: f64,
    /// TT-SVD energy identity error (TT-MDL only).
    pub energy_identity_error: Option<f64>,
    /// `‖denoised‖ > ‖noisy‖` (TT-MDL only).
    pub energy_increased: bool,
    pub error: Option<String>,
}

/// Mean per-stage wall clock over every trial of a method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub denoise_ms: f64,
    pub smooth_ms: f64,
    pub estimate_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<MetricsRow>,
    pub timing: Vec<TimingRow>,
    pub records: Vec<TrialRecord>,
}

impl BenchReport {
    pub fn row(&self, method: Method, snr: f64) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.method == method && r.input_snr_db == snr)
    }

    pub fn max_energy_identity_error(&self) -> f64 {
        self.records.iter().filter_map(|r| r.energy_identity_error).fold(0.0, f64::max)
    }

    pub fn metrics_csv(&self) -> String {
        let mut s = String::from(METRICS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.method.name(),
                r.input_snr_db,
                r.output_snr_db_mean,
                r.output_snr_db_std,
                r.nmse_mean,
                r.nmse_std,
                r.denoise_ms,
                r.smooth_ms,
                r.estimate_ms,
                r.trials
            );
        }
        s
    }

    /// Per-stage timings, one row per method.
    pub fn timing_csv(&self) -> String {
        let mut s = String::from("method,denoise_ms,smooth_ms,estimate_ms,total_ms\n");
        for t in &self.timing {
            let _ = writeln!(
                s,
                "{},{:.3},{:.3},{:.3},{:.3}",
                t.method.name(),
                t.denoise_ms,
                t.smooth_ms,
                t.estimate_ms,
                t.denoise_ms + t.smooth_ms + t.estimate_ms
            );
        }
        s
    }

    /// Mean and sample std of the peak SNR per `(method, snr)`; `None` when
    /// no trial carried it.
    pub fn peak_snr_csv(&self) -> Option<String> {
        if self.records.iter().all(|r| r.peak_snr_db.is_none()) {
            return None;
        }
        let mut s = String::from("method,input_snr_db,peak_snr_db_mean,peak_snr_db_std\n");
        for row in &self.rows {
            let v: Vec<f64> = self
                .records
                .iter()
                .filter(|r| r.method == row.method && r.input_snr_db == row.input_snr_db)
                .filter_map(|r| r.peak_snr_db)
                .collect();
            let (m, sd) = mean_std(&v);
            let _ = writeln!(s, "{},{},{},{}", row.method.name(), row.input_snr_db, m, sd);
        }
        Some(s)
    }

    /// Writes `metrics.csv`, `timing.csv` and, if present, `peak_snr.csv`
    /// into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        std::fs::write(dir.join("timing.csv"), self.timing_csv())?;
        if let Some(p) = self.peak_snr_csv() {
            std::fs::write(dir.join("peak_snr.csv"), p)?;
        }
        Ok(())
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

struct Processed {
    tensor: ComplexTensor,
    energy_identity_error: Option<f64>,
    energy_increased: bool,
}

fn process(method: Method, noisy: &ComplexTensor, order: usize, spec: &BenchmarkSpec, seed: u64) -> Result<Processed> {
    let plain = |t: ComplexTensor| Processed { tensor: t, energy_identity_error: None, energy_increased: false };
    match method {
        Method::None | Method::FftBaseline => Ok(plain(noisy.clone())),
        Method::TtMdl => {
            let res = tt_mdl(noisy)?;
            let err = res.energy_identity_error(noisy);
            let increased = res.denoised.norm_sqr() > noisy.norm_sqr() * (1.0 + 1e-12);
            Ok(Processed { tensor: res.denoised, energy_identity_error: Some(err), energy_increased: increased })
        }
        Method::CpdAls => Ok(plain(cpd_als_with(noisy, order, &spec.als, seed)?.model.reconstruct())),
        Method::CpdRecompress => {
            let fit = cpd_als_with(noisy, order + 1, &spec.als, seed)?;
            let tt = tt_recompress(&cpd_to_tt(&fit.model)?, spec.recompress_epsilon)?;
            Ok(plain(tt.reconstruct()))
        }
    }
}

/// Estimation shared by every method: windows `max(2, R)` on all modes and
/// model order `R`, the scenario's target count.
fn run_estimate(
    method: Method,
    processed: &ComplexTensor,
    scenario: &Scenario,
) -> (Result<EstimationResult>, f64, f64) {
    let r = scenario.targets.len();
    if method == Method::FftBaseline {
        let t = Instant::now();
        let res = fft_estimate(processed, &scenario.radar, r);
        return (res, 0.0, ms(t));
    }
    let t = Instant::now();
    let staged = SmoothingPlan::new(vec![r.max(2); processed.order()]).and_then(|plan| smooth_stage(processed, &plan));
    let smooth = ms(t);
    let t = Instant::now();
    let res = staged.and_then(|(yfb, _)| estimate_stage(&yfb, &scenario.radar, r));
    (res, smooth, ms(t))
}

/// Runs the benchmark on an in-memory scenario. Trial `k` at every grid
/// point draws its noise with seed `base_seed + k`, and all methods see the
/// same noisy tensor.
pub fn run_benchmark_with(scenario: &Scenario, spec: &BenchmarkSpec) -> Result<BenchReport> {
    spec.validate()?;
    scenario.validate()?;
    let clean = synthesize(&scenario.radar, &scenario.targets)?;
    let order = scenario.targets.len();
    let mut records = Vec::new();
    for &snr in &spec.snr_grid_db {
        for trial in 0..spec.trials {
            let seed = spec.base_seed + trial as u64;
            let (noisy, _) = add_noise(&clean, &NoiseSpec { input_snr_db: snr, seed })?;
            let raw = output_snr(&clean, &noisy)?;
            for &method in &spec.methods {
                let t = Instant::now();
                let processed = process(method, &noisy, order, spec, seed);
                let denoise_ms = ms(t);
                let mut rec = TrialRecord {
                    method,
                    input_snr_db: snr,
                    trial,
                    output_snr_db: None,
                    peak_snr_db: None,
                    raw_snr_db: raw,
                    nmse: MISS_PENALTY,
                    denoise_ms,
                    smooth_ms: 0.0,
                    estimate_ms: 0.0,
                    energy_identity_error: None,
                    energy_increased: false,
                    error: None,
                };
                match processed {
                    Err(e) => {
                        log::warn!("{} at {snr} dB, trial {trial}: {e}", method.name());
                        rec.error = Some(e.to_string());
                    }
                    Ok(p) => {
                        rec.output_snr_db = Some(output_snr(&clean, &p.tensor)?);
                        if spec.peak_snr {
                            let peaks = peak_snr(&clean, &p.tensor, order)?;
                            rec.peak_snr_db = Some(peaks.iter().sum::<f64>() / peaks.len().max(1) as f64);
                        }
                        rec.energy_identity_error = p.energy_identity_error;
                        rec.energy_increased = p.energy_increased;
                        let (est, smooth_ms, estimate_ms) = run_estimate(method, &p.tensor, scenario);
                        rec.smooth_ms = smooth_ms;
                        rec.estimate_ms = estimate_ms;
                        match est {
                            Ok(mut e) => rec.nmse = e.score(&scenario.targets).mean_with_penalty(),
                            Err(e) => {
                                log::debug!("{} estimation at {snr} dB, trial {trial}: {e}", method.name());
                            }
                        }
                    }
                }
                records.push(rec);
            }
        }
    }
    Ok(aggregate(records, spec))
}

fn aggregate(records: Vec<TrialRecord>, spec: &BenchmarkSpec) -> BenchReport {
    let mut methods = spec.methods.clone();
    methods.sort();
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for &method in &methods {
        let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.method == method).collect();
        let n = mine.len().max(1) as f64;
        timing.push(TimingRow {
            method,
            denoise_ms: mine.iter().map(|r| r.denoise_ms).sum::<f64>() / n,
            smooth_ms: mine.iter().map(|r| r.smooth_ms).sum::<f64>() / n,
            estimate_ms: mine.iter().map(|r| r.estimate_ms).sum::<f64>() / n,
        });
        for &snr in &spec.snr_grid_db {
            let cell: Vec<&&TrialRecord> = mine.iter().filter(|r| r.input_snr_db == snr).collect();
            let snrs: Vec<f64> = cell.iter().filter_map(|r| r.output_snr_db).collect();
            let nmses: Vec<f64> = cell.iter().map(|r| r.nmse).collect();
            let (os_mean, os_std) = mean_std(&snrs);
            let (nm_mean, nm_std) = mean_std(&nmses);
            let k = cell.len().max(1) as f64;
            let time = |f: fn(&TrialRecord) -> f64| {
                if spec.record_timings { cell.iter().map(|r| f(r)).sum::<f64>() / k } else { 0.0 }
            };
            rows.push(MetricsRow {
                method,
                input_snr_db: snr,
                output_snr_db_mean: os_mean,
                output_snr_db_std: os_std,
                nmse_mean: nm_mean,
                nmse_std: nm_std,
                denoise_ms: time(|r| r.denoise_ms),
                smooth_ms: time(|r| r.smooth_ms),
                estimate_ms: time(|r| r.estimate_ms),
                trials: cell.len(),
                failures: cell.len() - snrs.len(),
            });
        }
    }
    BenchReport { rows, timing, records }
}

/// Loads the scenario named by `spec`, runs the benchmark and writes the CSV
/// files into the spec's output directory.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchReport> {
    let scenario = Scenario::load(&spec.scenario)?;
    let report = run_benchmark_with(&scenario, spec)?;
    report.write(&spec.output_dir)?;
    Ok(report)
}
