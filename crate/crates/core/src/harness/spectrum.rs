//! Zero-padded multidimensional DFTs and the range-Doppler / range-angle
//! magnitude maps built on them.

use std::io::Write;
use std::path::Path;

use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{RadarConfig, SPEED_OF_LIGHT};
use crate::tensor::{ComplexTensor, RMatrix, C64};

/// Minimum DFT length of the profile axes.
pub const PROFILE_DFT_LEN: usize = 256;
/// Floor of the normalized dB maps.
pub const PROFILE_FLOOR_DB: f64 = -120.0;

/// Copies `y` into the leading corner of a zero tensor of dims `padded`.
pub fn zero_pad(y: &ComplexTensor, padded: &[usize]) -> Result<ComplexTensor> {
    if padded.len() != y.order() || padded.iter().zip(y.dims()).any(|(p, d)| p < d) {
        return Err(Error::shape(format!("cannot pad {:?} to {padded:?}", y.dims())));
    }
    let mut out = ComplexTensor::zeros(padded);
    let dims = y.dims();
    let row = dims[0];
    let mut idx = vec![0usize; dims.len()];
    let src = y.data();
    let dst = out.data_mut();
    for chunk in src.chunks_exact(row) {
        let mut off = 0;
        let mut stride = 1;
        for (k, &p) in padded.iter().enumerate() {
            off += idx[k] * stride;
            stride *= p;
        }
        dst[off..off + row].copy_from_slice(chunk);
        crate::tensor::increment(&mut idx[1..], &dims[1..]);
    }
    Ok(out)
}

/// In-place unnormalized DFT of every fiber along `mode`.
fn dft_mode(t: &mut ComplexTensor, mode: usize, direction: FftDirection, planner: &mut FftPlanner<f64>) {
    let dims = t.dims().to_vec();
    let len = dims[mode];
    if len == 1 {
        return;
    }
    let left: usize = dims[..mode].iter().product();
    let right: usize = dims[mode + 1..].iter().product();
    let fft = planner.plan_fft(len, direction);
    let mut buf = vec![C64::new(0.0, 0.0); len];
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let data = t.data_mut();
    for r in 0..right {
        let base = r * left * len;
        for l in 0..left {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = data[base + l + k * left];
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, b) in buf.iter().enumerate() {
                data[base + l + k * left] = *b;
            }
        }
    }
}

/// DFT along several modes with kernel `e^{+j2πkm/K}`, which places the peak
/// of a generator `e^{−j2πνm}` at bin `k ≡ ν K (mod K)`.
pub fn dft_modes(t: &mut ComplexTensor, modes: &[usize]) {
    let mut planner = FftPlanner::new();
    for &m in modes {
        dft_mode(t, m, FftDirection::Inverse, &mut planner);
    }
}

/// Bin `k` of a shifted axis of length `K` corresponds to `ν = (k − K/2)/K`.
pub fn shifted_frequency(k: usize, len: usize) -> f64 {
    (k as f64 - (len / 2) as f64) / len as f64
}

fn shifted_index(k: usize, len: usize) -> usize {
    (k + len / 2) % len
}

fn to_db(power: RMatrix) -> RMatrix {
    let top = power.iter().copied().fold(0.0, f64::max);
    power.map(|p| if top > 0.0 && p > 0.0 { (10.0 * (p / top).log10()).max(PROFILE_FLOOR_DB) } else { PROFILE_FLOOR_DB })
}

/// Mean `|DFT|²` over the two `averaged` modes of the padded spectrum, laid
/// out as rows = `row_mode` bins, cols = `col_mode` bins, both centred.
fn profile_power(y: &ComplexTensor, row_mode: usize, col_mode: usize) -> Result<RMatrix> {
    if y.order() != 4 {
        return Err(Error::shape(format!("profiles need a 4-order tensor, got {:?}", y.dims())));
    }
    let mut padded_dims = y.dims().to_vec();
    for m in [row_mode, col_mode] {
        padded_dims[m] = padded_dims[m].max(PROFILE_DFT_LEN);
    }
    let mut spec = zero_pad(y, &padded_dims)?;
    dft_modes(&mut spec, &[row_mode, col_mode]);
    let (kr, kc) = (padded_dims[row_mode], padded_dims[col_mode]);
    let avg_count = spec.len() / (kr * kc);
    let mut power = RMatrix::zeros(kr, kc);
    let mut idx = vec![0usize; 4];
    for z in spec.data() {
        let (r, c) = (shifted_index(idx[row_mode], kr), shifted_index(idx[col_mode], kc));
        power[(r, c)] += z.norm_sqr();
        crate::tensor::increment(&mut idx, &padded_dims);
    }
    Ok(power / avg_count as f64)
}

/// Range-Doppler magnitude in dB relative to the maximum: rows are range
/// bins, columns Doppler bins, both centred on zero frequency.
pub fn rd_profile(y: &ComplexTensor) -> Result<RMatrix> {
    Ok(to_db(profile_power(y, 2, 3)?))
}

/// Linear power of the range-Doppler map (same layout as [`rd_profile`]).
pub fn rd_power(y: &ComplexTensor) -> Result<RMatrix> {
    profile_power(y, 2, 3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleAxis {
    Azimuth,
    Elevation,
}

impl AngleAxis {
    fn mode(self) -> usize {
        match self {
            AngleAxis::Azimuth => 0,
            AngleAxis::Elevation => 1,
        }
    }
}

/// Range-angle magnitude in dB: rows are range bins, columns bins of the
/// chosen virtual-array axis.
pub fn ra_profile(y: &ComplexTensor, axis: AngleAxis) -> Result<RMatrix> {
    Ok(to_db(profile_power(y, 2, axis.mode())?))
}

/// Physical axis labels for a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileAxes {
    pub row_label: String,
    pub col_label: String,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
}

fn range_axis(cfg: &RadarConfig, len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| shifted_frequency(k, len) * SPEED_OF_LIGHT / (2.0 * cfg.slope_hz_per_s * cfg.sample_interval_s))
        .collect()
}

pub fn rd_axes(cfg: &RadarConfig, profile: &RMatrix) -> ProfileAxes {
    let lambda = cfg.wavelength();
    ProfileAxes {
        row_label: "range_m".into(),
        col_label: "velocity_mps".into(),
        rows: range_axis(cfg, profile.nrows()),
        cols: (0..profile.ncols())
            .map(|k| shifted_frequency(k, profile.ncols()) * lambda / (2.0 * cfg.chirp_duration_s))
            .collect(),
    }
}

/// Column labels are `asin(ν λ / d)` in degrees (NaN where `|ν λ/d| > 1`).
pub fn ra_axes(cfg: &RadarConfig, profile: &RMatrix, axis: AngleAxis) -> ProfileAxes {
    let ratio = cfg.wavelength() / cfg.spacing();
    ProfileAxes {
        row_label: "range_m".into(),
        col_label: match axis {
            AngleAxis::Azimuth => "azimuth_deg".into(),
            AngleAxis::Elevation => "elevation_deg".into(),
        },
        rows: range_axis(cfg, profile.nrows()),
        cols: (0..profile.ncols()).map(|k| (shifted_frequency(k, profile.ncols()) * ratio).asin().to_degrees()).collect(),
    }
}

/// Grid CSV: a header row `row_label\col_label,<col values…>` followed by one
/// row per bin starting with its row value.
pub fn write_profile_csv<W: Write>(mut w: W, profile: &RMatrix, axes: &ProfileAxes) -> Result<()> {
    write!(w, "{}\\{}", axes.row_label, axes.col_label)?;
    for c in &axes.cols {
        write!(w, ",{c}")?;
    }
    writeln!(w)?;
    for (r, rv) in axes.rows.iter().enumerate() {
        write!(w, "{rv}")?;
        for c in 0..profile.ncols() {
            write!(w, ",{}", profile[(r, c)])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_profile_csv(path: impl AsRef<Path>, profile: &RMatrix, axes: &ProfileAxes) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_profile_csv(f, profile, axes)
}

/// Positions of the `count` largest local maxima (8-neighbourhood, wrapping).
pub fn peak_bins(m: &RMatrix, count: usize) -> Vec<(usize, usize)> {
    let (nr, nc) = m.shape();
    let mut peaks = Vec::new();
    for r in 0..nr {
        for c in 0..nc {
            let v = m[(r, c)];
            let mut is_max = true;
            'nb: for dr in [nr - 1, 0, 1] {
                for dc in [nc - 1, 0, 1] {
                    if (dr, dc) == (0, 0) {
                        continue;
                    }
                    let o = m[((r + dr) % nr, (c + dc) % nc)];
                    if o > v || (o == v && ((r + dr) % nr, (c + dc) % nc) < (r, c)) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                peaks.push((v, r, c));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    peaks.into_iter().take(count).map(|(_, r, c)| (r, c)).collect()
}
