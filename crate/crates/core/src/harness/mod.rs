//! Metrics, spectral profiles, the DFT baseline and the Monte-Carlo runner.

mod baseline;
mod bench;
mod metrics;
mod spectrum;

pub use baseline::{fft_estimate, FFT_MIN_LEN, FFT_PAD_FACTOR};
pub use bench::{
    run_benchmark, run_benchmark_with, BenchReport, BenchmarkSpec, Method, MetricsRow, TimingRow, TrialRecord,
    METRICS_HEADER,
};
pub use metrics::{output_snr, peak_snr, SNR_CAP_DB};
pub use spectrum::{
    dft_modes, peak_bins, ra_axes, ra_profile, rd_axes, rd_power, rd_profile, save_profile_csv, shifted_frequency,
    write_profile_csv, zero_pad, AngleAxis, ProfileAxes, PROFILE_DFT_LEN, PROFILE_FLOOR_DB,
};
