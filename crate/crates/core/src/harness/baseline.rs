//! Classical 4D DFT peak-picking estimator, used as the no-denoising
//! reference.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::estimate::{invert_parameters, EstimationResult};
use crate::sim::RadarConfig;
use crate::tensor::ComplexTensor;

use super::spectrum::{dft_modes, zero_pad};

/// Each mode is zero padded to `max(FFT_MIN_LEN, FFT_PAD_FACTOR · I_n)`.
pub const FFT_PAD_FACTOR: usize = 2;
pub const FFT_MIN_LEN: usize = 16;

/// Picks the `targets` strongest peaks of the zero-padded 4D power
/// spectrum. After each pick a box of one main-lobe half-width per mode is
/// suppressed. Bin positions are converted to frequencies and inverted like
/// the subspace estimates.
pub fn fft_estimate(y: &ComplexTensor, cfg: &RadarConfig, targets: usize) -> Result<EstimationResult> {
    if y.order() != 4 {
        return Err(Error::shape(format!("expected a 4-order tensor, got {:?}", y.dims())));
    }
    if targets == 0 {
        return Err(Error::invalid("at least one target must be sought"));
    }
    let dims = y.dims().to_vec();
    let padded: Vec<usize> = dims.iter().map(|&d| (FFT_PAD_FACTOR * d).max(FFT_MIN_LEN)).collect();
    let mut spec = zero_pad(y, &padded)?;
    dft_modes(&mut spec, &[0, 1, 2, 3]);
    let mut power: Vec<f64> = spec.data().iter().map(|z| z.norm_sqr()).collect();
    let lobe: Vec<usize> = padded.iter().zip(&dims).map(|(&p, &d)| p.div_ceil(d)).collect();

    let mut tuples = Vec::with_capacity(targets);
    for _ in 0..targets {
        let (best, &top) = power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty spectrum");
        if top <= 0.0 {
            break;
        }
        let idx = crate::tensor::multi_index(&padded, best);
        let nus: Vec<f64> = idx
            .iter()
            .zip(&padded)
            .map(|(&k, &len)| {
                let f = k as f64 / len as f64;
                if f >= 0.5 { f - 1.0 } else { f }
            })
            .collect();
        tuples.push(nus.iter().map(|nu| Some((PI * nu).tan())).collect::<Vec<_>>());
        suppress(&mut power, &padded, &idx, &lobe);
    }
    invert_parameters(&tuples, cfg)
}

fn suppress(power: &mut [f64], dims: &[usize], centre: &[usize], half: &[usize]) {
    let spans: Vec<usize> = half.iter().zip(dims).map(|(&h, &d)| (2 * h + 1).min(d)).collect();
    let mut off = vec![0usize; dims.len()];
    let total: usize = spans.iter().product();
    for _ in 0..total {
        let idx: Vec<usize> = (0..dims.len())
            .map(|n| (centre[n] + dims[n] + off[n] - spans[n] / 2) % dims[n])
            .collect();
        power[crate::tensor::flat_index(dims, &idx)] = 0.0;
        crate::tensor::increment(&mut off, &spans);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::joint_nmse;
    use crate::sim::{coherent_pair, synthesize, TargetParams};
    use crate::C64;

    #[test]
    fn on_grid_target_is_recovered() {
        let cfg = RadarConfig::desk();
        let tgt = TargetParams::from_degrees(18.0, 6.0, 20.0, 30.0, C64::new(1.0, 0.0));
        let y = synthesize(&cfg, std::slice::from_ref(&tgt)).unwrap();
        let est = fft_estimate(&y, &cfg, 1).unwrap();
        let nmse = joint_nmse(&est, std::slice::from_ref(&tgt));
        // grid-limited, not exact
        assert!(nmse.per_truth[0].unwrap() < 0.1, "{:?}", nmse.per_truth);
    }

    #[test]
    fn coherent_pair_gives_two_distinct_peaks() {
        let cfg = RadarConfig::desk();
        let truth = coherent_pair();
        let y = synthesize(&cfg, &truth).unwrap();
        let est = fft_estimate(&y, &cfg, 2).unwrap();
        assert_eq!(est.targets.len(), 2);
        let s = joint_nmse(&est, &truth);
        assert!(s.per_truth.iter().all(|v| v.unwrap() < 0.5), "{:?}", s.per_truth);
    }
}
