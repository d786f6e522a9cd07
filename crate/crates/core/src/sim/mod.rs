//! Forward model of the sampled FMCW MIMO beat signal.
//!
//! A point target contributes `α · a_1 ∘ a_2 ∘ a_3 ∘ a_4` where each `a_n` is a
//! Vandermonde steering vector `e^{−j2πν(m + offset)}`, `m = 0, 1, …`:
//!
//! | mode | length | frequency | offset |
//! |------|--------|-----------|--------|
//! | 1 (azimuth aperture)   | `K_Ta·K_Ra` | `Θ = (d/λ) cosφ sinθ` | 0 |
//! | 2 (elevation aperture) | `K_Te·K_Re` | `Φ = (d/λ) sinφ sinθ` | 0 |
//! | 3 (fast time)          | samples/chirp | `η = 2 Δf R T_s / c` | 1 |
//! | 4 (slow time)          | chirps/frame  | `μ = 2 v T / λ`      | 0 |

mod adc;
mod scenario;

pub use adc::{export_adc, ingest_adc, ingest_adc_bytes, AdcSidecar, IqOrder};
pub use scenario::Scenario;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, ComplexTensor, C64};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Radar front-end and frame geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub carrier_hz: f64,
    pub slope_hz_per_s: f64,
    pub bandwidth_hz: f64,
    pub chirp_duration_s: f64,
    pub sample_interval_s: f64,
    /// Virtual element spacing; half a wavelength when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_spacing_m: Option<f64>,
    pub k_ta: usize,
    pub k_te: usize,
    pub k_ra: usize,
    pub k_re: usize,
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
}

impl RadarConfig {
    /// Full-size simulation setup: 77 GHz, 85.17 MHz/µs, 2.51 GHz,
    /// 6.3 Msps, 9 × 25 virtual elements, 256 samples, 128 chirps.
    pub fn full_size() -> Self {
        let slope = 85.17e12;
        let bandwidth = 2.51e9;
        Self {
            carrier_hz: 77e9,
            slope_hz_per_s: slope,
            bandwidth_hz: bandwidth,
            chirp_duration_s: bandwidth / slope,
            sample_interval_s: 1.0 / 6.3e6,
            element_spacing_m: None,
            k_ta: 3,
            k_te: 5,
            k_ra: 3,
            k_re: 5,
            samples_per_chirp: 256,
            chirps_per_frame: 128,
        }
    }

    /// Desk-scale setup: same chirp as [`RadarConfig::full_size`], 40 Msps
    /// sampling (so a 24 m target sits below the fast-time Nyquist limit),
    /// 4 × 4 virtual elements, 64 samples, 32 chirps.
    pub fn desk() -> Self {
        Self {
            sample_interval_s: 1.0 / 40e6,
            k_ta: 2,
            k_te: 2,
            k_ra: 2,
            k_re: 2,
            samples_per_chirp: 64,
            chirps_per_frame: 32,
            ..Self::full_size()
        }
    }

    /// Same timing as [`RadarConfig::desk`] with the full 9 × 25 × 256 × 128
    /// frame.
    pub fn full_size_unaliased() -> Self {
        Self { sample_interval_s: 1.0 / 40e6, ..Self::full_size() }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn spacing(&self) -> f64 {
        self.element_spacing_m.unwrap_or(self.wavelength() / 2.0)
    }

    /// Tensor dims `[I_1, I_2, I_3, I_4]`.
    pub fn dims(&self) -> [usize; 4] {
        [self.k_ta * self.k_ra, self.k_te * self.k_re, self.samples_per_chirp, self.chirps_per_frame]
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("slope_hz_per_s", self.slope_hz_per_s),
            ("bandwidth_hz", self.bandwidth_hz),
            ("chirp_duration_s", self.chirp_duration_s),
            ("sample_interval_s", self.sample_interval_s),
            ("element_spacing_m", self.spacing()),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ScenarioInvalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let counts = [
            ("k_ta", self.k_ta),
            ("k_te", self.k_te),
            ("k_ra", self.k_ra),
            ("k_re", self.k_re),
            ("samples_per_chirp", self.samples_per_chirp),
            ("chirps_per_frame", self.chirps_per_frame),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::ScenarioInvalid(format!("{name} must be at least 1")));
            }
        }
        if self.slope_hz_per_s * self.chirp_duration_s > self.bandwidth_hz * (1.0 + 1e-9) {
            return Err(Error::ScenarioInvalid(format!(
                "slope × chirp duration ({:e} Hz) exceeds the bandwidth ({:e} Hz)",
                self.slope_hz_per_s * self.chirp_duration_s,
                self.bandwidth_hz
            )));
        }
        Ok(())
    }
}

/// One point target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub azimuth_rad: f64,
    pub elevation_rad: f64,
    /// Complex amplitude, serialized as `[re, im]`.
    #[serde(default = "unit_amplitude")]
    pub amplitude: C64,
}

fn unit_amplitude() -> C64 {
    C64::new(1.0, 0.0)
}

impl TargetParams {
    pub fn new(range_m: f64, velocity_mps: f64, azimuth_rad: f64, elevation_rad: f64, amplitude: C64) -> Self {
        Self { range_m, velocity_mps, azimuth_rad, elevation_rad, amplitude }
    }

    /// Convenience constructor with angles in degrees.
    pub fn from_degrees(range_m: f64, velocity_mps: f64, azimuth_deg: f64, elevation_deg: f64, amplitude: C64) -> Self {
        Self::new(range_m, velocity_mps, azimuth_deg.to_radians(), elevation_deg.to_radians(), amplitude)
    }
}

/// The two same-range targets used throughout the coherent-range study:
/// (24 m, 12 m/s, 17.5°, 56.3°) and (24 m, −13 m/s, −36.8°, 36.9°), the
/// second 6 dB weaker.
pub fn coherent_pair() -> Vec<TargetParams> {
    vec![
        TargetParams::from_degrees(24.0, 12.0, 17.5, 56.3, C64::new(1.0, 0.0)),
        TargetParams::from_degrees(24.0, -13.0, -36.8, 36.9, C64::new(0.5, 0.0)),
    ]
}

/// Normalized frequencies (cycles per index step) of one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialFrequencies {
    pub theta: f64,
    pub phi: f64,
    pub eta: f64,
    pub mu: f64,
}

impl SpatialFrequencies {
    pub fn as_array(&self) -> [f64; 4] {
        [self.theta, self.phi, self.eta, self.mu]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self { theta: v[0], phi: v[1], eta: v[2], mu: v[3] }
    }
}

/// Frequency maps without any aliasing check.
pub fn raw_frequencies(cfg: &RadarConfig, tgt: &TargetParams) -> SpatialFrequencies {
    let ratio = cfg.spacing() / cfg.wavelength();
    let (s_el, _) = tgt.elevation_rad.sin_cos();
    let (s_az, c_az) = tgt.azimuth_rad.sin_cos();
    SpatialFrequencies {
        theta: ratio * c_az * s_el,
        phi: ratio * s_az * s_el,
        eta: 2.0 * cfg.slope_hz_per_s * tgt.range_m * cfg.sample_interval_s / SPEED_OF_LIGHT,
        mu: 2.0 * tgt.velocity_mps * cfg.chirp_duration_s / cfg.wavelength(),
    }
}

/// Frequency maps with the no-aliasing requirement `|ν| < 0.5` enforced.
pub fn spatial_frequencies(cfg: &RadarConfig, tgt: &TargetParams) -> Result<SpatialFrequencies> {
    if !(tgt.range_m.is_finite() && tgt.range_m > 0.0) {
        return Err(Error::ScenarioInvalid(format!("range must be positive, got {}", tgt.range_m)));
    }
    if !(tgt.velocity_mps.is_finite() && tgt.azimuth_rad.is_finite() && tgt.elevation_rad.is_finite()) {
        return Err(Error::ScenarioInvalid("non-finite target parameter".into()));
    }
    if !(tgt.amplitude.re.is_finite() && tgt.amplitude.im.is_finite()) {
        return Err(Error::ScenarioInvalid("non-finite target amplitude".into()));
    }
    let f = raw_frequencies(cfg, tgt);
    for (name, v) in [("theta (azimuth aperture)", f.theta), ("phi (elevation aperture)", f.phi), ("eta (range)", f.eta), ("mu (Doppler)", f.mu)] {
        if v.abs() >= 0.5 {
            return Err(Error::ScenarioInvalid(format!("spatial frequency {name} = {v:.6} aliases (|ν| ≥ 0.5)")));
        }
    }
    Ok(f)
}

/// `[e^{−j2πν·offset}, e^{−j2πν(1+offset)}, …]` of length `len`.
pub fn steering_vector(nu: f64, len: usize, phase_offset: u32) -> Vec<C64> {
    (0..len)
        .map(|m| {
            let arg = -2.0 * std::f64::consts::PI * nu * (m as f64 + phase_offset as f64);
            C64::from_polar(1.0, arg)
        })
        .collect()
}

/// Exponent offset of each mode's steering vector.
pub const MODE_PHASE_OFFSETS: [u32; 4] = [0, 0, 1, 0];

/// Factor matrices `U_1..U_4` (one column per target) and weights `α`.
pub fn steering_factors(cfg: &RadarConfig, targets: &[TargetParams]) -> Result<(Vec<CMatrix>, Vec<C64>)> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(Error::ScenarioInvalid("at least one target is required".into()));
    }
    let dims = cfg.dims();
    let mut factors: Vec<CMatrix> = dims.iter().map(|&d| CMatrix::zeros(d, targets.len())).collect();
    for (r, tgt) in targets.iter().enumerate() {
        let f = spatial_frequencies(cfg, tgt)?.as_array();
        for n in 0..4 {
            let v = steering_vector(f[n], dims[n], MODE_PHASE_OFFSETS[n]);
            factors[n].set_column(r, &nalgebra::DVector::from_vec(v));
        }
    }
    Ok((factors, targets.iter().map(|t| t.amplitude).collect()))
}

/// Clean noiseless data tensor `Σ_r α_r a_{r,1} ∘ a_{r,2} ∘ a_{r,3} ∘ a_{r,4}`.
pub fn synthesize(cfg: &RadarConfig, targets: &[TargetParams]) -> Result<ComplexTensor> {
    let (factors, alpha) = steering_factors(cfg, targets)?;
    let dims = cfg.dims();
    let mut out = ComplexTensor::zeros(&dims);
    let (i1, i2, i3, i4) = (dims[0], dims[1], dims[2], dims[3]);
    let buf = out.data_mut();
    for (r, &a) in alpha.iter().enumerate() {
        let u: Vec<Vec<C64>> = factors.iter().map(|f| f.column(r).iter().copied().collect()).collect();
        let mut pos = 0;
        for &w4 in &u[3] {
            let s4 = a * w4;
            for &w3 in &u[2] {
                let s3 = s4 * w3;
                for &w2 in &u[1] {
                    let s2 = s3 * w2;
                    for &w1 in &u[0] {
                        buf[pos] += s2 * w1;
                        pos += 1;
                    }
                }
            }
        }
        debug_assert_eq!(pos, i1 * i2 * i3 * i4);
    }
    Ok(out)
}

/// Additive noise requested as an input SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub input_snr_db: f64,
    pub seed: u64,
}

/// Adds circular complex Gaussian noise, rescaled so that the realized
/// `10 log10(‖clean‖² / ‖noise‖²)` equals the requested SNR. The stream
/// comes from ChaCha20 seeded with `seed`. An infinite SNR (or an all-zero
/// clean tensor) gives zero noise. Returns `(noisy, noise)`.
pub fn add_noise(clean: &ComplexTensor, spec: &NoiseSpec) -> Result<(ComplexTensor, ComplexTensor)> {
    if spec.input_snr_db.is_nan() {
        return Err(Error::invalid("input SNR is NaN"));
    }
    if clean.data().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::invalid("clean tensor has non-finite entries"));
    }
    let zero = ComplexTensor::zeros(clean.dims());
    let signal = clean.norm_sqr();
    if spec.input_snr_db == f64::INFINITY || signal == 0.0 {
        return Ok((clean.clone(), zero));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let raw = ComplexTensor::from_fn(clean.dims(), |_| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let target = signal / 10f64.powf(spec.input_snr_db / 10.0);
    let noise = raw.scale(C64::new((target / raw.norm_sqr()).sqrt(), 0.0));
    let noisy = clean.add(&noise)?;
    Ok((noisy, noise))
}
