//! Joint range, velocity and angle estimation: spatial smoothing,
//! forward-backward averaging, real-valued shift invariance and parameter
//! inversion.

mod assign;
mod esprit;
mod fba;
mod smoothing;

pub use assign::min_cost_assignment;
pub use esprit::{
    joint_eigs, selection_pair, signal_subspace, solve_upsilon, JointEigs, UpsilonSet, SSD_MAX_SWEEPS, SSD_TOL,
    SUBSPACE_RANK_TOL, UPSILON_RCOND,
};
pub use fba::{exchange, fba, unitary_q, FBA_RESIDUE_TOL};
pub use smoothing::{spatial_smooth, SmoothingPlan};

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decomp::tt_mdl;
use crate::error::{Error, Result};
use crate::sim::{RadarConfig, TargetParams, SPEED_OF_LIGHT};
use crate::tensor::{ComplexTensor, RMatrix};

/// NMSE charged for a true target that received no estimate.
pub const MISS_PENALTY: f64 = 4.0;

/// Dense real tensor, column-major like [`ComplexTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl RealTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::invalid(format!("invalid dims {dims:?}")));
        }
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!("dims {dims:?} need {n} entries, got {}", data.len())));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `(∏ leading dims) × last dim` matrix view.
    pub fn unfold_last(&self) -> RMatrix {
        let cols = self.dims[self.dims.len() - 1];
        RMatrix::from_column_slice(self.data.len() / cols, cols, &self.data)
    }

    /// Mode product with a real matrix (0-based mode).
    pub fn mode_product(&self, m: &RMatrix, mode: usize) -> Result<Self> {
        if mode >= self.dims.len() || m.ncols() != self.dims[mode] {
            return Err(Error::shape(format!(
                "cannot apply a {}×{} matrix to mode {mode} of {:?}",
                m.nrows(),
                m.ncols(),
                self.dims
            )));
        }
        let left: usize = self.dims[..mode].iter().product();
        let right: usize = self.dims[mode + 1..].iter().product();
        let (i_n, j_n) = (self.dims[mode], m.nrows());
        let mut out = vec![0.0; left * j_n * right];
        for r in 0..right {
            let src = &self.data[r * left * i_n..(r + 1) * left * i_n];
            let dst = &mut out[r * left * j_n..(r + 1) * left * j_n];
            for i in 0..i_n {
                let s = &src[i * left..(i + 1) * left];
                for j in 0..j_n {
                    let w = m[(j, i)];
                    if w != 0.0 {
                        for (d, x) in dst[j * left..(j + 1) * left].iter_mut().zip(s) {
                            *d += w * x;
                        }
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims[mode] = j_n;
        Self::new(dims, out)
    }
}

/// Per-target anomalies reported instead of dropping the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetFlag {
    /// `(λ/d)·√(Θ² + Φ²) > 1`; elevation clamped to π/2.
    ElevationUnresolvable,
    RangeNonPositive,
    RangeUnobservable,
    VelocityUnobservable,
    AngleUnobservable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub range_m: Option<f64>,
    pub vel_mps: Option<f64>,
    pub az_rad: Option<f64>,
    pub el_rad: Option<f64>,
    #[serde(default)]
    pub flags: Vec<TargetFlag>,
    /// Recovered `[Θ, Φ, η, μ]`.
    pub frequencies: [Option<f64>; 4],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimationDiagnostics {
    pub windows: Vec<usize>,
    pub order: usize,
    pub bond_ranks: Option<Vec<usize>>,
    pub fba_residue: f64,
    pub singular_values: Vec<f64>,
    pub upsilon_residuals: Vec<Option<f64>>,
    pub regularized_modes: Vec<usize>,
    pub unobservable_modes: Vec<usize>,
    pub ssd_sweeps: usize,
    pub ssd_converged: bool,
    pub ssd_residual: f64,
    /// Set when the estimate and the ground truth differ in target count.
    pub cardinality_mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub targets: Vec<TargetEstimate>,
    /// Joint NMSE per true target once scored; `None` where unmatched.
    #[serde(default)]
    pub nmse: Vec<Option<f64>>,
    #[serde(default)]
    pub diagnostics: EstimationDiagnostics,
}

impl EstimationResult {
    /// Scores against ground truth, filling `nmse` and the mismatch flag.
    pub fn score(&mut self, truth: &[TargetParams]) -> NmseScore {
        let s = joint_nmse(self, truth);
        self.nmse = s.per_truth.clone();
        self.diagnostics.cardinality_mismatch = s.cardinality_mismatch;
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Maps joint eigenvalue tuples `[λ_Θ, λ_Φ, λ_η, λ_μ]` back to physical
/// parameters through `ν = arctan(λ)/π`. Angles come back in the canonical
/// form `el ∈ [0, π/2]`, `az ∈ (−π, π]`; `(az, −el)` and `(az + π, el)` give
/// the same steering vectors.
pub fn invert_parameters(tuples: &[Vec<Option<f64>>], cfg: &RadarConfig) -> Result<EstimationResult> {
    cfg.validate()?;
    let wavelength = cfg.wavelength();
    let ratio = wavelength / cfg.spacing();
    let mut targets = Vec::with_capacity(tuples.len());
    for t in tuples {
        if t.len() != 4 {
            return Err(Error::shape(format!("eigenvalue tuple has {} entries, expected 4", t.len())));
        }
        if t.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite joint eigenvalue"));
        }
        let nu: Vec<Option<f64>> = t.iter().map(|l| l.map(|l| l.atan() / PI)).collect();
        let mut flags = Vec::new();
        let range_m = nu[2].map(|eta| eta * SPEED_OF_LIGHT / (2.0 * cfg.slope_hz_per_s * cfg.sample_interval_s));
        match range_m {
            None => flags.push(TargetFlag::RangeUnobservable),
            Some(r) if r <= 0.0 => flags.push(TargetFlag::RangeNonPositive),
            _ => {}
        }
        let vel_mps = nu[3].map(|mu| mu * wavelength / (2.0 * cfg.chirp_duration_s));
        if vel_mps.is_none() {
            flags.push(TargetFlag::VelocityUnobservable);
        }
        let (az_rad, el_rad) = match (nu[0], nu[1]) {
            (Some(th), Some(ph)) => {
                let s = ratio * th.hypot(ph);
                let el = if s > 1.0 {
                    flags.push(TargetFlag::ElevationUnresolvable);
                    FRAC_PI_2
                } else {
                    s.asin()
                };
                let az = if th == 0.0 && ph == 0.0 { 0.0 } else { ph.atan2(th) };
                (Some(az), Some(el))
            }
            _ => {
                flags.push(TargetFlag::AngleUnobservable);
                (None, None)
            }
        };
        targets.push(TargetEstimate { range_m, vel_mps, az_rad, el_rad, flags, frequencies: [nu[0], nu[1], nu[2], nu[3]] });
    }
    Ok(EstimationResult { targets, nmse: Vec::new(), diagnostics: EstimationDiagnostics::default() })
}

/// Joint NMSE of every true target against its assigned estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct NmseScore {
    /// Indexed like the truth list.
    pub per_truth: Vec<Option<f64>>,
    /// Estimate index assigned to each true target.
    pub assignment: Vec<Option<usize>>,
    pub cardinality_mismatch: bool,
}

impl NmseScore {
    /// Mean over true targets, charging [`MISS_PENALTY`] for unmatched ones.
    pub fn mean_with_penalty(&self) -> f64 {
        if self.per_truth.is_empty() {
            return 0.0;
        }
        self.per_truth.iter().map(|v| v.unwrap_or(MISS_PENALTY)).sum::<f64>() / self.per_truth.len() as f64
    }
}

fn rel_sq(est: Option<f64>, truth: f64) -> f64 {
    match est {
        None => 1.0,
        Some(e) if truth == 0.0 => (e - truth).powi(2),
        Some(e) => ((e - truth) / truth).powi(2),
    }
}

/// Sum of the four normalized squared errors for one estimate/truth pair.
pub fn target_nmse(est: &TargetEstimate, truth: &TargetParams) -> f64 {
    rel_sq(est.range_m, truth.range_m)
        + rel_sq(est.vel_mps, truth.velocity_mps)
        + rel_sq(est.az_rad, truth.azimuth_rad)
        + rel_sq(est.el_rad, truth.elevation_rad)
}

/// Matches estimates to true targets by minimum total NMSE and scores the
/// matched pairs.
pub fn joint_nmse(est: &EstimationResult, truth: &[TargetParams]) -> NmseScore {
    let cost: Vec<Vec<f64>> =
        truth.iter().map(|t| est.targets.iter().map(|e| target_nmse(e, t)).collect()).collect();
    let assignment = if est.targets.is_empty() { vec![None; truth.len()] } else { min_cost_assignment(&cost) };
    let per_truth = assignment.iter().enumerate().map(|(i, a)| a.map(|j| cost[i][j])).collect();
    NmseScore { per_truth, assignment, cardinality_mismatch: est.targets.len() != truth.len() }
}

/// Overrides for the estimation pipeline. Unset fields follow the tensor
/// train ranks of the input.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub windows: Option<Vec<usize>>,
    pub order: Option<usize>,
    pub bond_ranks: Option<Vec<usize>>,
}

/// Smoothing plan, model order and the bond ranks they came from.
pub fn plan_for(y: &ComplexTensor, opts: &EstimateOptions) -> Result<(SmoothingPlan, usize, Option<Vec<usize>>)> {
    let need_ranks = opts.windows.is_none() || opts.order.is_none();
    let ranks = match (&opts.bond_ranks, need_ranks) {
        (Some(r), _) => Some(r.clone()),
        (None, true) => Some(tt_mdl(y)?.model.bond_ranks()),
        (None, false) => None,
    };
    let plan = match &opts.windows {
        Some(w) => SmoothingPlan::new(w.clone())?,
        None => SmoothingPlan::from_tt_ranks(ranks.as_deref().unwrap_or(&[]), y.dims())?,
    };
    plan.validate(y.dims())?;
    let order = match opts.order {
        Some(r) => r,
        None => {
            let min_rank = ranks.as_ref().and_then(|r| r.iter().copied().min()).unwrap_or(1);
            let min_window = plan.windows().iter().copied().min().unwrap_or(1);
            min_rank.min(min_window).max(1)
        }
    };
    Ok((plan, order, ranks))
}

/// Smoothing followed by forward-backward averaging; also returns the
/// relative imaginary residue dropped by the real cast.
pub fn smooth_stage(y: &ComplexTensor, plan: &SmoothingPlan) -> Result<(RealTensor, f64)> {
    let ss = spatial_smooth(y, plan)?;
    let (out, residue) = fba::fba_complex(&ss)?;
    let rel = residue / out.norm().max(f64::MIN_POSITIVE);
    if rel > FBA_RESIDUE_TOL {
        return Err(Error::NumericFailure { what: format!("fba imaginary residue {rel:.3e}"), iterations: 0 });
    }
    Ok((RealTensor::new(out.dims().to_vec(), out.data().iter().map(|z| z.re).collect())?, rel))
}

/// Subspace, invariance solves, joint eigenvalues and inversion.
pub fn estimate_stage(yfb: &RealTensor, cfg: &RadarConfig, order: usize) -> Result<EstimationResult> {
    if yfb.dims().len() != 5 {
        return Err(Error::shape(format!("expected a 5-order smoothed tensor, got {:?}", yfb.dims())));
    }
    let (g, sigma) = signal_subspace(yfb, order)?;
    let ups = solve_upsilon(&g)?;
    let je = joint_eigs(&ups)?;
    let mut res = invert_parameters(&je.tuples, cfg)?;
    let d = &mut res.diagnostics;
    d.order = order;
    d.singular_values = sigma.into_iter().take(order + 2).collect();
    d.upsilon_residuals = ups.residuals.clone();
    d.regularized_modes = ups.regularized.iter().enumerate().filter(|(_, r)| **r).map(|(n, _)| n).collect();
    d.unobservable_modes = ups.unobservable_modes();
    d.ssd_sweeps = je.sweeps;
    d.ssd_converged = je.converged;
    d.ssd_residual = je.residual;
    Ok(res)
}

/// Full pipeline on a 4-order data tensor.
pub fn estimate(y: &ComplexTensor, cfg: &RadarConfig, opts: &EstimateOptions) -> Result<EstimationResult> {
    if y.order() != 4 {
        return Err(Error::shape(format!("expected a 4-order data tensor, got {:?}", y.dims())));
    }
    let (plan, order, ranks) = plan_for(y, opts)?;
    let (yfb, residue) = smooth_stage(y, &plan)?;
    let mut res = estimate_stage(&yfb, cfg, order)?;
    res.diagnostics.windows = plan.windows().to_vec();
    res.diagnostics.bond_ranks = ranks;
    res.diagnostics.fba_residue = residue;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{coherent_pair, raw_frequencies, spatial_frequencies, synthesize};

    fn tuple_for(cfg: &RadarConfig, t: &TargetParams) -> Vec<Option<f64>> {
        raw_frequencies(cfg, t).as_array().iter().map(|nu| Some((PI * nu).tan())).collect()
    }

    #[test]
    fn broadside_maps_to_zero_angles() {
        let cfg = RadarConfig::desk();
        let res = invert_parameters(&[vec![Some(0.0), Some(0.0), Some(0.1), Some(0.0)]], &cfg).unwrap();
        let t = &res.targets[0];
        assert_eq!(t.az_rad, Some(0.0));
        assert_eq!(t.el_rad, Some(0.0));
        assert!(t.flags.is_empty());
    }

    #[test]
    fn inversion_round_trips_the_forward_maps() {
        let cfg = RadarConfig::desk();
        for t in coherent_pair() {
            let res = invert_parameters(&[tuple_for(&cfg, &t)], &cfg).unwrap();
            let e = &res.targets[0];
            assert!((e.range_m.unwrap() - t.range_m).abs() < 1e-9 * t.range_m);
            assert!((e.vel_mps.unwrap() - t.velocity_mps).abs() < 1e-9 * t.velocity_mps.abs());
            assert!((e.az_rad.unwrap() - t.azimuth_rad).abs() < 1e-9);
            assert!((e.el_rad.unwrap() - t.elevation_rad).abs() < 1e-9);
        }
    }

    #[test]
    fn inversion_is_monotone_up_to_the_aliasing_edge() {
        let cfg = RadarConfig::desk();
        let mut prev = f64::NEG_INFINITY;
        let steps = 2001;
        for k in 0..steps {
            let nu = -0.5 + 1e-6 + (1.0 - 2e-6) * k as f64 / (steps - 1) as f64;
            let lam = (PI * nu).tan();
            let res = invert_parameters(&[vec![Some(0.0), Some(0.0), Some(0.0), Some(lam)]], &cfg).unwrap();
            let got = res.targets[0].frequencies[3].unwrap();
            assert!(got > prev, "wraparound at ν = {nu}");
            assert!((got - nu).abs() < 1e-9);
            prev = got;
        }
    }

    #[test]
    fn out_of_gate_targets_are_flagged() {
        let cfg = RadarConfig::desk();
        let big = (PI * 0.49).tan();
        let res = invert_parameters(&[vec![Some(big), Some(big), Some(-0.2), None]], &cfg).unwrap();
        let t = &res.targets[0];
        assert!(t.flags.contains(&TargetFlag::ElevationUnresolvable));
        assert!(t.flags.contains(&TargetFlag::RangeNonPositive));
        assert!(t.flags.contains(&TargetFlag::VelocityUnobservable));
        assert_eq!(t.el_rad, Some(FRAC_PI_2));
        assert_eq!(t.vel_mps, None);
    }

    #[test]
    fn nmse_arithmetic() {
        let truth = coherent_pair();
        let t = &truth[0];
        let est = TargetEstimate {
            range_m: Some(t.range_m * 1.01),
            vel_mps: Some(t.velocity_mps * 1.01),
            az_rad: Some(t.azimuth_rad * 1.01),
            el_rad: Some(t.elevation_rad * 1.01),
            flags: vec![],
            frequencies: [None; 4],
        };
        assert!((target_nmse(&est, t) - 4e-4).abs() < 1e-15);
        let exact = TargetEstimate {
            range_m: Some(t.range_m),
            vel_mps: Some(t.velocity_mps),
            az_rad: Some(t.azimuth_rad),
            el_rad: Some(t.elevation_rad),
            ..est
        };
        assert_eq!(target_nmse(&exact, t), 0.0);
    }

    #[test]
    fn nmse_ignores_labeling_and_flags_cardinality() {
        let cfg = RadarConfig::desk();
        let truth = coherent_pair();
        let tuples: Vec<_> = truth.iter().map(|t| tuple_for(&cfg, t)).collect();
        let fwd = invert_parameters(&tuples, &cfg).unwrap();
        let rev = invert_parameters(&[tuples[1].clone(), tuples[0].clone()], &cfg).unwrap();
        let (a, b) = (joint_nmse(&fwd, &truth), joint_nmse(&rev, &truth));
        assert_eq!(a.assignment, vec![Some(0), Some(1)]);
        assert_eq!(b.assignment, vec![Some(1), Some(0)]);
        for (x, y) in a.per_truth.iter().zip(&b.per_truth) {
            assert!(x.unwrap() < 1e-18 && y.unwrap() < 1e-18);
        }
        let one = invert_parameters(&tuples[1..], &cfg).unwrap();
        let s = joint_nmse(&one, &truth);
        assert!(s.cardinality_mismatch);
        assert_eq!(s.per_truth[0], None);
        assert!((s.mean_with_penalty() - MISS_PENALTY / 2.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_desk_pipeline_recovers_the_pair() {
        let cfg = RadarConfig::desk();
        let truth = coherent_pair();
        let y = synthesize(&cfg, &truth).unwrap();
        let mut res = estimate(&y, &cfg, &EstimateOptions::default()).unwrap();
        assert_eq!(res.diagnostics.windows, vec![2, 2, 2, 2]);
        assert_eq!(res.diagnostics.order, 2);
        let score = res.score(&truth);
        for v in &score.per_truth {
            assert!(v.unwrap() < 1e-12, "{:?}", score.per_truth);
        }
        let json = res.to_json().unwrap();
        let back: EstimationResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.targets.len(), 2);
        let _ = spatial_frequencies(&cfg, &truth[0]).unwrap();
    }

    #[test]
    fn real_tensor_mode_product_matches_complex() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
        let c = crate::testutil::random_tensor(&mut rng, &[3, 4, 2]);
        let r = RealTensor::new(c.dims().to_vec(), c.data().iter().map(|z| z.re).collect()).unwrap();
        let m = RMatrix::from_fn(5, 4, |i, j| (i as f64) - 0.5 * j as f64);
        let got = r.mode_product(&m, 1).unwrap();
        let want = c.map(|z| crate::C64::new(z.re, 0.0)).mode_product(&crate::linalg::to_complex(&m), 1).unwrap();
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b.re).abs() < 1e-12);
        }
    }
}
