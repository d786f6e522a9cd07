//! Fixtures shared by the criterion benches.

use ttmdl_core::sim::{add_noise, synthesize, NoiseSpec, Scenario};
use ttmdl_core::ComplexTensor;

/// Desk scenario data cube at `snr_db` input SNR, noise seed 0.
pub fn desk_cube(snr_db: f64) -> (Scenario, ComplexTensor) {
    let sc = Scenario::desk();
    let clean = synthesize(&sc.radar, &sc.targets).expect("desk scenario is valid");
    let (noisy, _) = add_noise(&clean, &NoiseSpec { input_snr_db: snr_db, seed: 0 }).expect("finite SNR");
    (sc, noisy)
}
