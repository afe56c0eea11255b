//! The one-dimensional model P = x₁D² + D²_{x₂} + aD restricted to
//! u = e^{iτx₂}v(x₁), and the Airy-built solution of the Tricomi operator.
//!
//! Fourier conventions: v̂(ξ) = ∫ e^{−ixξ} v(x) dx, L²(ξ) with dξ/(2π).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::airy::AI0;
use crate::numerics::{airy_ai, integrate_decaying, Domain, QuadError, QuadratureSpec};
use crate::weights::{chi, chi_prime, q_eps, q_eps_prime};

/// Default grid for the frequency march.
pub const DEFAULT_N: usize = 4096;
pub const DEFAULT_L: f64 = 20.0;
/// Box for the weighted energy identity: e^{G_ε}v̂ carries the non-analytic
/// cutoff χ, so v_ε decays slower than any exponential and needs L = 320 to
/// fall below 1e−12 at the edge.
pub const ENERGY_N: usize = 32768;
pub const ENERGY_L: f64 = 320.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("e^G·|v̂| overflows at ξ = {xi}")]
    Overflow { xi: f64 },
    #[error("spatial samples at ±L reach {ratio:e} of the maximum")]
    BoundaryLeak { ratio: f64 },
    #[error("frequency solver diverged: {0}")]
    SolverDiverged(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Samples of v on x_j = −L + j·2L/N together with v̂ at ξ_k = kπ/L (FFT order).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGrid {
    pub n: usize,
    pub l: f64,
    pub values: Vec<Complex64>,
    pub hat: Vec<Complex64>,
}

fn check_dims(n: usize, l: f64) -> Result<(), ModelError> {
    if !n.is_power_of_two() || n < 8 {
        return Err(ModelError::InvalidParams(format!("N = {n} is not a power of two ≥ 8")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(ModelError::InvalidParams(format!("L = {l}")));
    }
    Ok(())
}

/// e^{iLξ_k} = (−1)^k.
fn shift_sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl FourierGrid {
    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.l
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.l + j as f64 * self.dx()
    }

    pub fn xi(&self, k: usize) -> f64 {
        frequency(self.n, self.l, k)
    }

    pub fn from_values(n: usize, l: f64, values: Vec<Complex64>) -> Result<Self, ModelError> {
        check_dims(n, l)?;
        if values.len() != n {
            return Err(ModelError::InvalidParams(format!("{} samples for N = {n}", values.len())));
        }
        let mut hat = values.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut hat);
        let dx = 2.0 * l / n as f64;
        for (k, h) in hat.iter_mut().enumerate() {
            *h *= dx * shift_sign(k);
        }
        Ok(Self { n, l, values, hat })
    }

    pub fn from_hat(n: usize, l: f64, hat: Vec<Complex64>) -> Result<Self, ModelError> {
        check_dims(n, l)?;
        if hat.len() != n {
            return Err(ModelError::InvalidParams(format!("{} coefficients for N = {n}", hat.len())));
        }
        let values = synthesize(n, l, &hat);
        Ok(Self { n, l, values, hat })
    }

    /// Grid whose v̂ is sampled from a closed form.
    pub fn from_hat_fn(n: usize, l: f64, f: impl Fn(f64) -> Complex64) -> Result<Self, ModelError> {
        check_dims(n, l)?;
        let hat = (0..n).map(|k| f(frequency(n, l, k))).collect();
        Self::from_hat(n, l, hat)
    }

    pub fn norm_x(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx()).sqrt()
    }

    /// ‖v̂‖ with dξ/(2π).
    pub fn norm_xi(&self) -> f64 {
        (self.hat.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dxi() / (2.0 * PI)).sqrt()
    }

    /// Spatial samples of the inverse transform of m(ξ)·v̂.
    pub fn synthesize_with(&self, m: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let h: Vec<Complex64> = self.hat.iter().enumerate().map(|(k, v)| m(self.xi(k)) * v).collect();
        synthesize(self.n, self.l, &h)
    }

    fn boundary_ratio(&self) -> f64 {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        // x = −L and the last sample before +L.
        self.values[0].norm().max(self.values[self.n - 1].norm()) / peak
    }
}

fn frequency(n: usize, l: f64, k: usize) -> f64 {
    let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    kk * PI / l
}

fn synthesize(n: usize, l: f64, hat: &[Complex64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = hat.iter().enumerate().map(|(k, h)| h * shift_sign(k)).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let s = 1.0 / (2.0 * l);
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Multiplies v̂ by e^{G(ξ_k)} and re-synthesizes.
pub fn apply_multiplier(grid: &FourierGrid, g: impl Fn(f64) -> f64) -> Result<FourierGrid, ModelError> {
    let mut hat = Vec::with_capacity(grid.n);
    for (k, v) in grid.hat.iter().enumerate() {
        let xi = grid.xi(k);
        if *v == ZERO {
            hat.push(ZERO);
            continue;
        }
        let w = (g(xi) + v.norm().ln()).exp();
        if !w.is_finite() {
            return Err(ModelError::Overflow { xi });
        }
        hat.push(v * (g(xi).exp()));
        if !hat[k].is_finite() {
            return Err(ModelError::Overflow { xi });
        }
    }
    FourierGrid::from_hat(grid.n, grid.l, hat)
}

/// Which half line the weight acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightSide {
    Positive,
    /// The mirror image G(−ξ).
    Negative,
}

/// Radial profile of the model weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WeightProfile {
    Zero,
    /// q_ε.
    Finite(f64),
    /// The ε → 0 limit, q = ξ.
    Limit,
}

/// G_ε(ξ) = (1 − χ(ξ))·q_ε(ξ) for ξ > 0 and 0 otherwise, or its mirror image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelWeight {
    pub profile: WeightProfile,
    pub side: WeightSide,
}

impl ModelWeight {
    pub fn new(eps: f64) -> Self {
        Self { profile: WeightProfile::Finite(eps), side: WeightSide::Positive }
    }

    pub fn limit() -> Self {
        Self { profile: WeightProfile::Limit, side: WeightSide::Positive }
    }

    pub fn zero() -> Self {
        Self { profile: WeightProfile::Zero, side: WeightSide::Positive }
    }

    pub fn mirrored(self) -> Self {
        Self { side: WeightSide::Negative, ..self }
    }

    /// (G, G').
    pub fn eval(&self, xi: f64) -> (f64, f64) {
        let (t, s) = match self.side {
            WeightSide::Positive => (xi, 1.0),
            WeightSide::Negative => (-xi, -1.0),
        };
        if t <= 1.0 {
            return (0.0, 0.0);
        }
        let (q, dq) = match self.profile {
            WeightProfile::Zero => return (0.0, 0.0),
            WeightProfile::Finite(e) => (q_eps(t, e), q_eps_prime(t, e)),
            WeightProfile::Limit => (t, 1.0),
        };
        let c = chi(t);
        ((1.0 - c) * q, s * (-chi_prime(t) * q + (1.0 - c) * dq))
    }

    pub fn value(&self, xi: f64) -> f64 {
        self.eval(xi).0
    }
}

/// v(x) = e^{−x²/2 + ikx}, the Schwartz function behind the manufactured f = Pv.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSource {
    pub k: f64,
}

impl Default for ModelSource {
    /// Centred above the first ε transitions so the table shows the climb to the plateau.
    fn default() -> Self {
        Self { k: 6.0 }
    }
}

impl ModelSource {
    pub fn v_hat(&self, xi: f64) -> Complex64 {
        let d = xi - self.k;
        Complex64::new((2.0 * PI).sqrt() * (-0.5 * d * d).exp(), 0.0)
    }

    pub fn v(&self, x: f64) -> Complex64 {
        Complex64::from_polar((-0.5 * x * x).exp(), self.k * x)
    }

    /// f̂ for f = (xD² + aD + τ²)v.
    pub fn f_hat(&self, xi: f64, a: Complex64, tau: f64) -> Complex64 {
        (I * (2.0 * xi - xi * xi * (xi - self.k)) + a * xi + tau * tau) * self.v_hat(xi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    pub a: Complex64,
    pub tau: f64,
    pub eps_sweep: Vec<f64>,
}

impl ModelParams {
    pub fn new(a: Complex64, tau: f64, eps_sweep: Vec<f64>) -> Result<Self, ModelError> {
        let p = Self { a, tau, eps_sweep };
        if !(p.tau > 0.0) {
            return Err(ModelError::InvalidParams(format!("τ = {}", p.tau)));
        }
        let m = p.m();
        if let Some(e) = p.eps_sweep.iter().find(|&&e| !(e > 0.0 && e < 1.0 / m)) {
            return Err(ModelError::InvalidParams(format!("ε = {e} not in (0, 1/M), M = {m}")));
        }
        Ok(p)
    }

    /// Frequency beyond which ξ²G' − (Im a + 1)ξ ≥ ξ.
    pub fn m(&self) -> f64 {
        (self.a.im + 2.0).max(2.0)
    }

    pub fn default_sweep() -> Vec<f64> {
        (2..=7).map(|k| 2f64.powi(-k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyIdentity {
    /// Im⟨P_εv_ε, v_ε⟩.
    pub lhs: f64,
    /// ⟨(−ξ²G' + (Im a + 1)ξ)v̂_ε, v̂_ε⟩.
    pub rhs: f64,
    pub rel_mismatch: f64,
}

/// Both sides of the energy identity for v_ε on the grid, with the conjugated
/// operator P_ε = xD² − iG'(D)D² + aD + τ².
pub fn energy_identity(
    v_eps: &FourierGrid,
    a: Complex64,
    tau: f64,
    weight: &ModelWeight,
) -> Result<EnergyIdentity, ModelError> {
    let ratio = v_eps.boundary_ratio();
    if ratio > 1e-12 {
        return Err(ModelError::BoundaryLeak { ratio });
    }
    let pv = conjugated_operator(v_eps, a, tau, weight);
    let dx = v_eps.dx();
    let inner: Complex64 = pv.iter().zip(&v_eps.values).map(|(p, v)| p * v.conj()).sum::<Complex64>() * dx;
    let lhs = inner.im;
    let rhs = v_eps
        .hat
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let xi = v_eps.xi(k);
            let dg = weight.eval(xi).1;
            (-xi * xi * dg + (a.im + 1.0) * xi) * h.norm_sqr()
        })
        .sum::<f64>()
        * v_eps.dxi()
        / (2.0 * PI);
    let rel_mismatch = (lhs - rhs).abs() / (rhs.abs() + 1.0);
    Ok(EnergyIdentity { lhs, rhs, rel_mismatch })
}

/// Spatial samples of P_εv_ε.
pub fn conjugated_operator(v_eps: &FourierGrid, a: Complex64, tau: f64, weight: &ModelWeight) -> Vec<Complex64> {
    let d2 = v_eps.synthesize_with(|xi| Complex64::new(xi * xi, 0.0));
    let rest = v_eps.synthesize_with(|xi| -I * weight.eval(xi).1 * xi * xi + a * xi + tau * tau);
    (0..v_eps.n).map(|j| v_eps.x(j) * d2[j] + rest[j]).collect()
}

/// ‖P_εv_ε − e^{G(D)}f‖ / ‖e^{G(D)}f‖ in L²(ξ), with f̂ from the closed form.
pub fn conjugation_residual(
    v_eps: &FourierGrid,
    source: &ModelSource,
    a: Complex64,
    tau: f64,
    weight: &ModelWeight,
) -> Result<f64, ModelError> {
    let pv = FourierGrid::from_values(v_eps.n, v_eps.l, conjugated_operator(v_eps, a, tau, weight))?;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..v_eps.n {
        let xi = v_eps.xi(k);
        let fe = source.f_hat(xi, a, tau) * weight.value(xi).exp();
        num += (pv.hat[k] - fe).norm_sqr();
        den += fe.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Right-hand side of the frequency equation v̂' = λ(ξ)v̂ + b(ξ).
fn ode_coefficients(xi: f64, a: Complex64, tau: f64, f: Complex64) -> (Complex64, Complex64) {
    let lambda = I * tau * tau / (xi * xi) + I * (a + 2.0 * I) / xi;
    (lambda, -I * f / (xi * xi))
}

const GL_C1: f64 = 0.5 - 0.288_675_134_594_812_9;
const GL_C2: f64 = 0.5 + 0.288_675_134_594_812_9;
const GL_A12: f64 = 0.25 - 0.288_675_134_594_812_9;
const GL_A21: f64 = 0.25 + 0.288_675_134_594_812_9;

/// One 2-stage Gauss–Legendre step for the linear equation.
fn gl_step(y: Complex64, x: f64, h: f64, coef: &impl Fn(f64) -> (Complex64, Complex64)) -> Complex64 {
    let (l1, b1) = coef(x + GL_C1 * h);
    let (l2, b2) = coef(x + GL_C2 * h);
    // K_i = l_i (y + h Σ A_ij K_j) + b_i.
    let m11 = 1.0 - h * 0.25 * l1;
    let m12 = -h * GL_A12 * l1;
    let m21 = -h * GL_A21 * l2;
    let m22 = 1.0 - h * 0.25 * l2;
    let r1 = l1 * y + b1;
    let r2 = l2 * y + b2;
    let det = m11 * m22 - m12 * m21;
    let k1 = (r1 * m22 - m12 * r2) / det;
    let k2 = (m11 * r2 - m21 * r1) / det;
    y + 0.5 * h * (k1 + k2)
}

fn march_cell(
    y: Complex64,
    x0: f64,
    x1: f64,
    substeps: &mut usize,
    floor: f64,
    coef: &impl Fn(f64) -> (Complex64, Complex64),
) -> Result<Complex64, ModelError> {
    let run = |n: usize| {
        let h = (x1 - x0) / n as f64;
        (0..n).fold(y, |acc, i| gl_step(acc, x0 + i as f64 * h, h, coef))
    };
    let mut n = (*substeps / 2).max(1);
    let mut coarse = run(n);
    loop {
        let fine = run(2 * n);
        let diff = (fine - coarse).norm();
        if diff <= 1e-11 * (fine.norm() + floor) {
            *substeps = 2 * n;
            return Ok(fine + (fine - coarse) / 15.0);
        }
        if n >= 1 << 16 {
            return Err(ModelError::SolverDiverged(format!("cell [{x0}, {x1}] unresolved with {n} substeps")));
        }
        n *= 2;
        coarse = fine;
    }
}

/// Solves (xD² + aD + τ²)v = f for v̂ on the grid frequencies by marching the
/// frequency equation inward from ±ξ_max with v̂ = 0 there, and
/// v̂(0) = f̂(0)/τ².
pub fn solve_frequency_ode(
    n: usize,
    l: f64,
    a: Complex64,
    tau: f64,
    f_hat: impl Fn(f64) -> Complex64 + Sync,
) -> Result<Vec<Complex64>, ModelError> {
    check_dims(n, l)?;
    let fmax = (0..n).map(|k| f_hat(frequency(n, l, k)).norm()).fold(0.0f64, f64::max);
    let floor = 1e-18 * fmax.max(f64::MIN_POSITIVE);
    let coef = |xi: f64| ode_coefficients(xi, a, tau, f_hat(xi));
    let mut hat = vec![ZERO; n];
    hat[0] = f_hat(0.0) / (tau * tau);
    let half = n / 2;
    // Positive side: indices half−1 down to 1.
    let sides: Vec<Vec<usize>> = vec![(1..half).rev().collect(), (half..n).collect()];
    let results: Vec<Result<Vec<(usize, Complex64)>, ModelError>> = sides
        .par_iter()
        .map(|idx| {
            let mut out = Vec::with_capacity(idx.len());
            let mut y = ZERO;
            let mut substeps = 1usize;
            let mut prev = frequency(n, l, idx[0]);
            out.push((idx[0], y));
            for &k in &idx[1..] {
                let xi = frequency(n, l, k);
                y = march_cell(y, prev, xi, &mut substeps, floor, &coef)?;
                if !y.is_finite() {
                    return Err(ModelError::SolverDiverged(format!("non-finite value at ξ = {xi}")));
                }
                out.push((k, y));
                prev = xi;
            }
            Ok(out)
        })
        .collect();
    for r in results {
        for (k, v) in r? {
            hat[k] = v;
        }
    }
    Ok(hat)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub eps: f64,
    pub norm_v_hat: f64,
    pub norm_f_eps: f64,
    /// ‖v̂_ε‖ for the mirrored weight acting on ξ < 0.
    pub norm_v_hat_mirrored: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBoundTable {
    pub a: Complex64,
    pub tau: f64,
    pub m: f64,
    /// sup over ε of ‖f_ε‖, bounded by ‖e^{(1−χ(ξ))|ξ|}f̂‖.
    pub c0: f64,
    /// (|Im a| + 1)e^M‖v‖_{H¹}.
    pub c1: f64,
    /// Sup-norm mismatch of the solved v̂ against the closed form, relative to max|v̂|.
    pub solver_error: f64,
    pub rows: Vec<BoundRow>,
}

impl UniformBoundTable {
    pub fn bound(&self) -> f64 {
        self.c0 + self.c1
    }

    /// Last value relative to the value at twice the last ε.
    pub fn plateau_ratio(&self) -> f64 {
        let k = self.rows.len();
        if k < 2 {
            return f64::NAN;
        }
        self.rows[k - 1].norm_v_hat / self.rows[k - 2].norm_v_hat
    }

    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].norm_v_hat >= w[0].norm_v_hat * (1.0 - 1e-12))
    }
}

/// Solves for v from f = Pv and tabulates ‖e^{G_ε(D)}v̂‖ over the ε sweep.
pub fn uniform_bound_experiment(
    params: &ModelParams,
    source: &ModelSource,
    n: usize,
    l: f64,
) -> Result<UniformBoundTable, ModelError> {
    let (a, tau) = (params.a, params.tau);
    let hat = solve_frequency_ode(n, l, a, tau, |xi| source.f_hat(xi, a, tau))?;
    let grid = FourierGrid::from_hat(n, l, hat)?;
    let vmax = (0..n).map(|k| source.v_hat(grid.xi(k)).norm()).fold(0.0f64, f64::max);
    let solver_error = (0..n).map(|k| (grid.hat[k] - source.v_hat(grid.xi(k))).norm()).fold(0.0f64, f64::max)
        / vmax.max(f64::MIN_POSITIVE);
    if !(solver_error <= 1e-8) {
        return Err(ModelError::SolverDiverged(format!("solved v̂ differs from v̂ by {solver_error:e}")));
    }
    let measure = grid.dxi() / (2.0 * PI);
    let weighted = |w: &ModelWeight, h: &dyn Fn(usize) -> Complex64| -> f64 {
        (0..n).map(|k| (2.0 * w.value(grid.xi(k))).exp() * h(k).norm_sqr()).sum::<f64>().sqrt() * measure.sqrt()
    };
    let f_at = |k: usize| source.f_hat(grid.xi(k), a, tau);
    let v_at = |k: usize| grid.hat[k];
    let c0 = weighted(&ModelWeight::limit(), &f_at);
    let h1 = (0..n).map(|k| (1.0 + grid.xi(k).powi(2)) * grid.hat[k].norm_sqr()).sum::<f64>().sqrt() * measure.sqrt();
    let m = params.m();
    let c1 = (a.im.abs() + 1.0) * m.exp() * h1;
    let rows = params
        .eps_sweep
        .par_iter()
        .map(|&eps| {
            let w = ModelWeight::new(eps);
            BoundRow {
                eps,
                norm_v_hat: weighted(&w, &v_at),
                norm_f_eps: weighted(&w, &f_at),
                norm_v_hat_mirrored: weighted(&w.mirrored(), &v_at),
            }
        })
        .collect();
    Ok(UniformBoundTable { a, tau, m, c0, c1, solver_error, rows })
}

/// ‖e^{min(ξ, K)}v̂‖ for the cap K, on a solved or sampled grid.
pub fn capped_exponential_norm(grid: &FourierGrid, cap: f64) -> f64 {
    let s: f64 = grid
        .hat
        .iter()
        .enumerate()
        .map(|(k, v)| (2.0 * grid.xi(k).abs().min(cap)).exp() * v.norm_sqr())
        .sum();
    (s * grid.dxi() / (2.0 * PI)).sqrt()
}

/// One row of the (a, τ, ε) energy matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRow {
    pub a: Complex64,
    pub tau: f64,
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_mismatch: f64,
    pub conjugation_residual: f64,
}

/// Energy identity over every (a, τ, ε) combination.
pub fn energy_matrix(
    source: &ModelSource,
    a_values: &[Complex64],
    tau_values: &[f64],
    eps_values: &[f64],
    n: usize,
    l: f64,
) -> Result<Vec<EnergyRow>, ModelError> {
    let base = FourierGrid::from_hat_fn(n, l, |xi| source.v_hat(xi))?;
    let mut jobs = Vec::new();
    for &a in a_values {
        for &tau in tau_values {
            for &eps in eps_values {
                jobs.push((a, tau, eps));
            }
        }
    }
    jobs.par_iter()
        .map(|&(a, tau, eps)| {
            let w = ModelWeight::new(eps);
            let v_eps = apply_multiplier(&base, |xi| w.value(xi))?;
            let e = energy_identity(&v_eps, a, tau, &w)?;
            let r = conjugation_residual(&v_eps, source, a, tau, &w)?;
            Ok(EnergyRow { a, tau, eps, lhs: e.lhs, rhs: e.rhs, rel_mismatch: e.rel_mismatch, conjugation_residual: r })
        })
        .collect()
}

const AIRY_CUTOFF: f64 = 40.0;

fn airy_quad() -> QuadratureSpec {
    QuadratureSpec { rel_tol: 1e-13, abs_tol: 1e-17, max_depth: 40, floor: 1e-18 }
}

/// u(x) = ∫₀^∞ Ai(τ^{4/3}x₁) e^{iτ²x₂} e^{−τ} dτ.
pub fn airy_solution(x1: f64, x2: f64) -> Result<Complex64, ModelError> {
    if !(x1.abs() <= 10.0 && x2.abs() <= 10.0) {
        return Err(ModelError::InvalidParams(format!("({x1}, {x2}) outside [−10, 10]²")));
    }
    let f = |t: f64| airy_ai(t.powf(4.0 / 3.0) * x1) * Complex64::from_polar((-t).exp(), t * t * x2);
    Ok(integrate_decaying(f, Domain::Finite(0.0, AIRY_CUTOFF), &airy_quad())?.value)
}

#[cfg(test)]
pub(crate) fn airy_solution_panels(x1: f64, x2: f64) -> Complex64 {
    let f = |t: f64| airy_ai(t.powf(4.0 / 3.0) * x1) * Complex64::from_polar((-t).exp(), t * t * x2);
    (0..AIRY_CUTOFF as usize)
        .map(|i| integrate_decaying(f, Domain::Finite(i as f64, (i + 1) as f64), &airy_quad()).unwrap().value)
        .sum()
}

/// D^k_{x₂}u(0, 0) = Ai(0)∫₀^∞ τ^{2k}e^{−τ} dτ.
pub fn derivative_growth(k: u32) -> Result<f64, ModelError> {
    if k > 8 {
        return Err(ModelError::InvalidParams(format!("k = {k} > 8")));
    }
    let p = 2 * k as i32;
    let spec = QuadratureSpec::default().with_rel_tol(1e-13);
    let r = integrate_decaying(|t| Complex64::new(t.powi(p) * (-t).exp(), 0.0), Domain::UpperHalf(0.0), &spec)?;
    Ok(AI0 * r.value.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeGrowth {
    pub k: u32,
    pub value: f64,
    /// value / (Ai(0)(2k)!).
    pub factorial_ratio: f64,
    /// Finite-difference estimate of D^k_{x₂}u(0, 0), k ≤ 3.
    pub finite_difference: Option<Complex64>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Central differences of order k ≤ 3 in x₂ at the origin, Richardson-combined.
fn fd_derivative(k: u32, h: f64) -> Result<Complex64, ModelError> {
    let u = |x2: f64| airy_solution(0.0, x2);
    let est = |h: f64| -> Result<Complex64, ModelError> {
        Ok(match k {
            0 => u(0.0)?,
            1 => (u(h)? - u(-h)?) / (2.0 * h),
            2 => (u(h)? - 2.0 * u(0.0)? + u(-h)?) / (h * h),
            _ => (u(2.0 * h)? - 2.0 * u(h)? + 2.0 * u(-h)? - u(-2.0 * h)?) / (2.0 * h * h * h),
        })
    };
    let coarse = est(h)?;
    let fine = est(0.5 * h)?;
    let d = fine + (fine - coarse) / 3.0;
    // D^k = (−i)^k ∂^k.
    Ok(d * (-I).powu(k))
}

/// Step for the x₂ differences; (2k)! growth of the Taylor coefficients limits it.
pub const FD_STEP: f64 = 2e-3;

pub fn derivative_growth_report(k: u32) -> Result<DerivativeGrowth, ModelError> {
    let value = derivative_growth(k)?;
    let finite_difference = if k <= 3 { Some(fd_derivative(k, FD_STEP)?) } else { None };
    Ok(DerivativeGrowth { k, value, factorial_ratio: value / (AI0 * factorial(2 * k)), finite_difference })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TricomiResidual {
    pub x1: f64,
    pub x2: f64,
    /// |∂²₁u + x₁∂²₂u|.
    pub residual: f64,
    /// |∂²₁u| + |x₁∂²₂u|.
    pub scale: f64,
}

fn second_difference(f: &impl Fn(f64) -> Result<Complex64, ModelError>, h: f64) -> Result<Complex64, ModelError> {
    let five = |h: f64| -> Result<Complex64, ModelError> {
        Ok((-f(2.0 * h)? + 16.0 * f(h)? - 30.0 * f(0.0)? + 16.0 * f(-h)? - f(-2.0 * h)?) / (12.0 * h * h))
    };
    let coarse = five(h)?;
    let fine = five(0.5 * h)?;
    Ok(fine + (fine - coarse) / 15.0)
}

/// Finite-difference residual of the Tricomi operator applied to u.
pub fn tricomi_residual(x1: f64, x2: f64, h: f64) -> Result<TricomiResidual, ModelError> {
    let d11 = second_difference(&|s| airy_solution(x1 + s, x2), h)?;
    let d22 = second_difference(&|s| airy_solution(x1, x2 + s), h)?;
    Ok(TricomiResidual { x1, x2, residual: (d11 + x1 * d22).norm(), scale: d11.norm() + (x1 * d22).norm() })
}
