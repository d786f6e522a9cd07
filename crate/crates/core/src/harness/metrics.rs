//! Output-SNR metrics.

use crate::error::{Error, Result};
use crate::tensor::ComplexTensor;

use super::spectrum::{peak_bins, rd_power};

/// Value reported when the processed tensor matches the clean one exactly.
pub const SNR_CAP_DB: f64 = 300.0;

/// `10 log10(‖clean‖² / ‖processed − clean‖²)`, capped at [`SNR_CAP_DB`].
pub fn output_snr(clean: &ComplexTensor, processed: &ComplexTensor) -> Result<f64> {
    if clean.dims() != processed.dims() {
        return Err(Error::shape(format!("{:?} vs {:?}", clean.dims(), processed.dims())));
    }
    let err: f64 = clean.data().iter().zip(processed.data()).map(|(a, b)| (a - b).norm_sqr()).sum();
    if err == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (clean.norm_sqr() / err).log10()).min(SNR_CAP_DB))
}

/// Per-target SNR in the range-Doppler map: power of `processed` at each of
/// the `targets` strongest peaks of the clean map over the mean power of the
/// residual `processed − clean` across all bins.
pub fn peak_snr(clean: &ComplexTensor, processed: &ComplexTensor, targets: usize) -> Result<Vec<f64>> {
    let residual = processed.sub(clean)?;
    let peaks = peak_bins(&rd_power(clean)?, targets);
    let power = rd_power(processed)?;
    let err = rd_power(&residual)?;
    let floor = err.mean();
    Ok(peaks
        .into_iter()
        .map(|(r, c)| if floor > 0.0 { (10.0 * (power[(r, c)] / floor).log10()).min(SNR_CAP_DB) } else { SNR_CAP_DB })
        .collect())
}
