//! Analytic wave-front detection from the decay of |Tu(x₀, tω)| along rays.
//!
//! Each verdict tests a single ray. Open cones are approximated by the finite
//! direction lists handed to [`wfa_scan`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fbi::{fbi_transform_detailed, AnalyticityHint, FbiError, FbiParams, SampledFunction};
use crate::model1d::airy_solution;
use crate::numerics::{fit_decay, DecayFit, DecayModel, FitError, R2_THRESHOLD};
use crate::phase_space::PhaseSpacePoint;
use crate::weights::chi;

pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WfaError {
    #[error(transparent)]
    Fbi(#[from] FbiError),
    #[error("need at least {MIN_SAMPLES} resolved samples, got {0}")]
    InsufficientSamples(usize),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("invalid scan: {0}")]
    InvalidScan(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaySample {
    pub t: f64,
    pub magnitude: f64,
    /// L¹ mass of the transform integrand, including the prefactor.
    pub l1: f64,
    /// Whether the magnitude clears the roundoff floor.
    pub resolved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Verdict {
    NotInWFa { rate: f64 },
    InWFa,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WfaVerdict {
    /// (x₀, ω) with |ω| = 1.
    pub point: PhaseSpacePoint,
    pub verdict: Verdict,
    pub fit: DecayFit,
    pub resolved_samples: usize,
    /// Directions tested around ω; always 1, the cone is not sampled.
    pub rays: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub t_grid: Vec<f64>,
    pub b_min: f64,
    /// Samples with |Tu| below `noise_floor · L¹` are dropped.
    pub noise_floor: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { t_grid: geometric_grid(2.0, 128.0, 24), b_min: 0.01, noise_floor: 1e-13 }
    }
}

pub const DEFAULT_H: f64 = 0.25;

pub fn default_params(n: usize) -> Result<FbiParams, FbiError> {
    FbiParams::new(DEFAULT_H, n)
}

pub fn geometric_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![t0];
    }
    let r = (t1 / t0).ln() / (count - 1) as f64;
    (0..count).map(|i| t0 * (r * i as f64).exp()).collect()
}

fn unit(omega: &[f64; 2], dim: usize) -> Result<[f64; 2], WfaError> {
    let norm = if dim == 1 { omega[0].abs() } else { omega[0].hypot(omega[1]) };
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(WfaError::InvalidScan(format!("direction {omega:?} has no length")));
    }
    Ok(if dim == 1 { [omega[0] / norm, 0.0] } else { [omega[0] / norm, omega[1] / norm] })
}

/// |Tu(x₀, tω)| over the t grid.
pub fn ray_scan(
    u: &SampledFunction,
    x0: &[f64; 2],
    omega: &[f64; 2],
    p: &FbiParams,
    t_grid: &[f64],
    noise_floor: f64,
) -> Result<Vec<RaySample>, WfaError> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.first().is_some_and(|&t| t <= 0.0) {
        return Err(WfaError::InvalidScan("t grid must be positive and increasing".into()));
    }
    if t_grid.last().is_some_and(|&t| t > 1e3) {
        return Err(WfaError::InvalidScan("t grid exceeds 1e3".into()));
    }
    let w = unit(omega, p.n)?;
    t_grid
        .iter()
        .map(|&t| {
            let rho = PhaseSpacePoint { x: *x0, xi: [t * w[0], t * w[1]], dim: p.n };
            let v = fbi_transform_detailed(u, &rho, p)?;
            let magnitude = v.value.norm();
            Ok(RaySample { t, magnitude, l1: v.l1, resolved: magnitude > noise_floor * v.l1 })
        })
        .collect()
}

/// Fits the resolved samples and maps the decay model to a verdict.
pub fn classify(point: PhaseSpacePoint, samples: &[RaySample], b_min: f64) -> Result<WfaVerdict, WfaError> {
    let pts: Vec<(f64, f64)> = samples.iter().filter(|s| s.resolved).map(|s| (s.t, s.magnitude)).collect();
    if pts.len() < MIN_SAMPLES {
        return Err(WfaError::InsufficientSamples(pts.len()));
    }
    let fit = fit_decay(&pts)?;
    let verdict = match fit.model {
        DecayModel::Exponential if fit.rate >= b_min && fit.r_squared >= R2_THRESHOLD => Verdict::NotInWFa { rate: fit.rate },
        DecayModel::Exponential => Verdict::Inconclusive,
        DecayModel::Polynomial => Verdict::InWFa,
        DecayModel::Flat if fit.log_range < 1.0 => Verdict::InWFa,
        DecayModel::Flat => Verdict::Inconclusive,
    };
    Ok(WfaVerdict { point, verdict, fit, resolved_samples: pts.len(), rays: 1 })
}

/// Scans one ray; when the magnitudes hit the floor before enough samples are
/// resolved, the ray is re-sampled on a denser grid below the cutoff.
pub fn scan_ray(
    u: &SampledFunction,
    x0: &[f64; 2],
    omega: &[f64; 2],
    p: &FbiParams,
    config: &ScanConfig,
) -> Result<WfaVerdict, WfaError> {
    let w = unit(omega, p.n)?;
    let point = PhaseSpacePoint { x: *x0, xi: w, dim: p.n };
    let samples = ray_scan(u, x0, &w, p, &config.t_grid, config.noise_floor)?;
    let resolved = samples.iter().filter(|s| s.resolved).count();
    if resolved >= MIN_SAMPLES {
        return classify(point, &samples, config.b_min);
    }
    let cut = samples.iter().position(|s| !s.resolved).unwrap_or(samples.len());
    if cut >= 2 && cut < samples.len() {
        let dense = geometric_grid(samples[0].t, samples[cut].t, 2 * MIN_SAMPLES);
        let samples = ray_scan(u, x0, &w, p, &dense, config.noise_floor)?;
        return classify(point, &samples, config.b_min);
    }
    Err(WfaError::InsufficientSamples(resolved))
}

/// Verdicts for every (x₀, ω) pair, x₀-major.
pub fn wfa_scan(
    u: &SampledFunction,
    x_grid: &[[f64; 2]],
    directions: &[[f64; 2]],
    p: &FbiParams,
    config: &ScanConfig,
) -> Result<Vec<WfaVerdict>, WfaError> {
    let pairs: Vec<([f64; 2], [f64; 2])> =
        x_grid.iter().flat_map(|x| directions.iter().map(move |w| (*x, *w))).collect();
    pairs.par_iter().map(|(x, w)| scan_ray(u, x, w, p, config)).collect()
}

/// Unit directions at angles ω ± k·step, k = 1..=count, around ω in the plane.
pub fn direction_fan(omega: &[f64; 2], step: f64, count: usize) -> Vec<[f64; 2]> {
    let base = omega[1].atan2(omega[0]);
    let mut out = vec![[base.cos(), base.sin()]];
    for k in 1..=count {
        for s in [-1.0, 1.0] {
            let a = base + s * step * k as f64;
            out.push([a.cos(), a.sin()]);
        }
    }
    out
}

/// |y|e^{−y²}, with a kink at 0.
pub fn abs_gaussian() -> SampledFunction {
    SampledFunction::new(1, |y| Complex64::new(y[0].abs() * (-y[0] * y[0]).exp(), 0.0))
        .with_hint(AnalyticityHint::SingularAt(vec![[0.0, 0.0]]))
}

/// 1_{y>0}e^{−y²}.
pub fn step_gaussian() -> SampledFunction {
    SampledFunction::new(1, |y| Complex64::new(if y[0] > 0.0 { (-y[0] * y[0]).exp() } else { 0.0 }, 0.0))
        .with_hint(AnalyticityHint::SingularAt(vec![[0.0, 0.0]]))
}

/// x₁ ↦ u(x₁, x₂)e^{−x₁²/2} for the Airy-built solution, on |x₁| ≤ 10.
pub fn airy_profile(x2: f64) -> SampledFunction {
    SampledFunction::new(1, move |y| {
        let x = y[0];
        if x.abs() > 10.0 {
            return Complex64::new(0.0, 0.0);
        }
        airy_solution(x, x2).unwrap_or(Complex64::new(f64::NAN, f64::NAN)) * (-0.5 * x * x).exp()
    })
    .with_hint(AnalyticityHint::SingularAt(vec![[0.0, 0.0]]))
}

/// u·χ(y − c): equal to u on [c − 1, c + 1] and zero outside [c − 2, c + 2].
pub fn plateau_window(u: SampledFunction, center: f64) -> SampledFunction {
    let mut pts = match &u.hint {
        AnalyticityHint::SingularAt(p) => p.clone(),
        _ => Vec::new(),
    };
    pts.extend([-2.0, -1.0, 1.0, 2.0].map(|d| [center + d, 0.0]));
    let inner = u.clone();
    SampledFunction::new(u.dim, move |y| inner.eval(y) * chi(y[0] - center)).with_hint(AnalyticityHint::SingularAt(pts))
}

/// c·u.
pub fn scaled(u: SampledFunction, c: Complex64) -> SampledFunction {
    let hint = u.hint.clone();
    SampledFunction::new(u.dim, move |y| c * u.eval(y)).with_hint(hint)
}
