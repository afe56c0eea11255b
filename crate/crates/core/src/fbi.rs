//! The FBI transform T, its left inverse S, transforms on deformed phase
//! spaces Λ_G, the phase Ψ of T∘S and the effective weight ψ.
//!
//! Conventions: ⟨ζ⟩ = (1 + ζ·ζ)^{1/2} with the principal root, squares of
//! vectors are bilinear (no conjugation), n ∈ {1, 2}.

use std::cell::Cell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{integrate_decaying, Domain, QuadError, QuadratureSpec};
use crate::phase_space::PhaseSpacePoint;
use crate::weights::Weight;

/// Gaussian envelope exponent at the truncation radius, e^{−37} ≈ 1e−16.
pub const ENVELOPE_EXPONENT: f64 = 37.0;
/// Relative size of the inverse integrand on the grid boundary above which
/// the grid is rejected.
pub const GRID_FLOOR: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FbiError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("Gaussian envelope lost: Re⟨ξ⟩ = {re_bracket:e}")]
    EnvelopeLost { re_bracket: f64 },
    #[error("⟨ζ⟩² = {value} is on or across the branch cut")]
    BranchCut { value: Complex64 },
    #[error("integrand on the grid boundary is {ratio:e} of its peak")]
    GridTooNarrow { ratio: f64 },
    #[error("maximizer moved {displacement:e} from α, trust radius {radius:e}")]
    MaximizerEscaped { displacement: f64, radius: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Regularity metadata carried by test functions.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticityHint {
    Analytic,
    SingularAt(Vec<[f64; 2]>),
    Unknown,
}

type Evaluator = dyn Fn(&[f64; 2]) -> Complex64 + Send + Sync;

/// A function on ℝⁿ given by an evaluator. For n = 1 only the first
/// coordinate is read.
#[derive(Clone)]
pub struct SampledFunction {
    pub dim: usize,
    f: Arc<Evaluator>,
    pub hint: AnalyticityHint,
}

impl std::fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledFunction").field("dim", &self.dim).field("hint", &self.hint).finish()
    }
}

impl SampledFunction {
    pub fn new(dim: usize, f: impl Fn(&[f64; 2]) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f), hint: AnalyticityHint::Unknown }
    }

    pub fn with_hint(mut self, hint: AnalyticityHint) -> Self {
        self.hint = hint;
        self
    }

    pub fn eval(&self, y: &[f64; 2]) -> Complex64 {
        (self.f)(y)
    }

    /// e^{−|y|²/2}.
    pub fn gaussian(dim: usize) -> Self {
        Self::new(dim, move |y| {
            let r2 = if dim == 1 { y[0] * y[0] } else { y[0] * y[0] + y[1] * y[1] };
            Complex64::new((-0.5 * r2).exp(), 0.0)
        })
        .with_hint(AnalyticityHint::Analytic)
    }

    /// The zero function.
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, |_| Complex64::new(0.0, 0.0)).with_hint(AnalyticityHint::Analytic)
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        match &self.hint {
            AnalyticityHint::SingularAt(pts) => pts.iter().map(|p| p[axis]).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbiParams {
    pub h: f64,
    pub n: usize,
    pub quad: QuadratureSpec,
}

impl FbiParams {
    pub fn new(h: f64, n: usize) -> Result<Self, FbiError> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(FbiError::InvalidParams(format!("h = {h} outside (0, 1]")));
        }
        if !(n == 1 || n == 2) {
            return Err(FbiError::InvalidParams(format!("n = {n} not in {{1, 2}}")));
        }
        Ok(Self { h, n, quad: QuadratureSpec::default().with_rel_tol(1e-10).with_abs_tol(0.0) })
    }

    pub fn with_quad(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }
}

/// A point of ℂ²ⁿ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPoint {
    pub x: [Complex64; 2],
    pub xi: [Complex64; 2],
    pub dim: usize,
}

impl ComplexPoint {
    pub fn from_real(rho: &PhaseSpacePoint) -> Self {
        let c = |v: f64| Complex64::new(v, 0.0);
        Self { x: [c(rho.x[0]), c(rho.x[1])], xi: [c(rho.xi[0]), c(rho.xi[1])], dim: rho.dim }
    }
}

/// Gradient data of θG at a real base point; represents
/// α = (x − iθG_ξ, ξ + iθG_x) ∈ Λ_{θG}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeformedPoint {
    pub base: PhaseSpacePoint,
    pub gx: [f64; 2],
    pub gxi: [f64; 2],
}

impl DeformedPoint {
    pub fn new(base: PhaseSpacePoint, weight: &dyn Weight, theta: f64) -> Self {
        let j = weight.jet(&base);
        let mut gx = [0.0; 2];
        let mut gxi = [0.0; 2];
        for i in 0..base.dim {
            gx[i] = theta * j.dx[i];
            gxi[i] = theta * j.dxi[i];
        }
        Self { base, gx, gxi }
    }

    pub fn alpha(&self) -> ComplexPoint {
        let mut p = ComplexPoint::from_real(&self.base);
        for i in 0..self.base.dim {
            p.x[i] -= I * self.gxi[i];
            p.xi[i] += I * self.gx[i];
        }
        p
    }
}

/// ⟨ζ⟩ for complex ζ, principal branch.
pub fn bracket(xi: &[Complex64; 2], dim: usize) -> Result<Complex64, FbiError> {
    let mut v = Complex64::new(1.0, 0.0);
    for z in xi.iter().take(dim) {
        v += z * z;
    }
    if v.re <= 0.0 {
        return Err(FbiError::BranchCut { value: v });
    }
    Ok(v.sqrt())
}

fn real_bracket(xi: &[f64; 2], dim: usize) -> f64 {
    let s: f64 = xi.iter().take(dim).map(|v| v * v).sum();
    (1.0 + s).sqrt()
}

/// Value of a transform together with the L¹ mass of its integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformValue {
    pub value: Complex64,
    pub l1: f64,
    pub error: f64,
}

fn integrate_split<F>(f: F, a: f64, b: f64, breaks: &[f64], quad: &QuadratureSpec) -> Result<(Complex64, f64, f64), QuadError>
where
    F: Fn(f64) -> Complex64,
{
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().cloned().filter(|&t| t > a && t < b).collect();
    inner.sort_by(|p, q| p.total_cmp(q));
    cuts.extend(inner);
    cuts.push(b);
    let mut total = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for w in cuts.windows(2) {
        let r = integrate_decaying(&f, Domain::Finite(w[0], w[1]), quad)?;
        total.0 += r.value;
        total.1 += r.l1;
        total.2 += r.error;
    }
    Ok(total)
}

/// ∫ Π_j exp(−A(y_j − x_j)²/2 − iB_j(y_j − x_j)) u(y) dy over the window where
/// the Gaussian factor is above e^{−37}.
fn gaussian_window_integral(
    u: &SampledFunction,
    a: Complex64,
    x: &[Complex64; 2],
    b: &[Complex64; 2],
    dim: usize,
    quad: &QuadratureSpec,
) -> Result<TransformValue, FbiError> {
    if a.re <= 0.0 || !a.re.is_finite() {
        return Err(FbiError::EnvelopeLost { re_bracket: a.re });
    }
    let radius = (2.0 * ENVELOPE_EXPONENT / a.re).sqrt();
    let center = |j: usize| ((a * x[j]).re + b[j].im) / a.re;
    let factor = |j: usize, y: f64| {
        let d = y - x[j];
        (-0.5 * a * d * d - I * b[j] * d).exp()
    };
    let c0 = center(0);
    if dim == 1 {
        let (value, l1, error) = integrate_split(
            |y| factor(0, y) * u.eval(&[y, 0.0]),
            c0 - radius,
            c0 + radius,
            &u.breakpoints(0),
            quad,
        )?;
        return Ok(TransformValue { value, l1, error });
    }
    let c1 = center(1);
    let (br0, br1) = (u.breakpoints(0), u.breakpoints(1));
    let failure: Cell<Option<QuadError>> = Cell::new(None);
    let inner = |y0: f64| -> (Complex64, f64) {
        let f0 = factor(0, y0);
        match integrate_split(|y1| factor(1, y1) * u.eval(&[y0, y1]), c1 - radius, c1 + radius, &br1, quad) {
            Ok((v, l1, _)) => (f0 * v, f0.norm() * l1),
            Err(e) => {
                failure.set(Some(e));
                (Complex64::new(0.0, 0.0), 0.0)
            }
        }
    };
    let (value, _, error) = integrate_split(|y0| inner(y0).0, c0 - radius, c0 + radius, &br0, quad)?;
    if let Some(e) = failure.take() {
        return Err(e.into());
    }
    let loose = QuadratureSpec { rel_tol: 1e-3, ..*quad };
    let (l1, _, _) = integrate_split(|y0| Complex64::new(inner(y0).1, 0.0), c0 - radius, c0 + radius, &br0, &loose)?;
    if let Some(e) = failure.take() {
        return Err(e.into());
    }
    Ok(TransformValue { value, l1: l1.re, error })
}

/// Tu at a complex point (x, ξ), with the integration over real y.
pub fn fbi_transform_complex(u: &SampledFunction, point: &ComplexPoint, p: &FbiParams) -> Result<TransformValue, FbiError> {
    if u.dim != p.n || point.dim != p.n {
        return Err(FbiError::DimensionMismatch(format!("u: {}, point: {}, params: {}", u.dim, point.dim, p.n)));
    }
    let n = p.n as f64;
    let jb = bracket(&point.xi, p.n)?;
    let a = jb / p.h;
    let b = [point.xi[0] / p.h, point.xi[1] / p.h];
    let raw = gaussian_window_integral(u, a, &point.x, &b, p.n, &p.quad)?;
    let pre = p.h.powf(-0.75 * n) * jb.powf(0.25 * n);
    Ok(TransformValue { value: pre * raw.value, l1: pre.norm() * raw.l1, error: pre.norm() * raw.error })
}

pub fn fbi_transform_detailed(u: &SampledFunction, rho: &PhaseSpacePoint, p: &FbiParams) -> Result<TransformValue, FbiError> {
    fbi_transform_complex(u, &ComplexPoint::from_real(rho), p)
}

/// Tu(x, ξ) = h^{−3n/4} ∫ e^{(i/h)(⟨x−y,ξ⟩ + (i/2)⟨ξ⟩(x−y)²)} ⟨ξ⟩^{n/4} u(y) dy.
pub fn fbi_transform(u: &SampledFunction, rho: &PhaseSpacePoint, p: &FbiParams) -> Result<Complex64, FbiError> {
    fbi_transform_detailed(u, rho, p).map(|t| t.value)
}

/// The standard transform h^{−3n/4} ∫ e^{(i/h)(⟨x−y,ω⟩ + (i/2)(x−y)²)} u(y) dy.
pub fn standard_transform(
    u: &SampledFunction,
    x: [f64; 2],
    omega: [f64; 2],
    h: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64, FbiError> {
    let dim = u.dim;
    let radius = (2.0 * ENVELOPE_EXPONENT * h).sqrt();
    let kernel = |y: &[f64; 2]| {
        let mut e = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            let d = x[j] - y[j];
            e += Complex64::new(-0.5 * d * d / h, d * omega[j] / h);
        }
        e.exp() * u.eval(y)
    };
    let value = if dim == 1 {
        integrate_split(|y| kernel(&[y, 0.0]), x[0] - radius, x[0] + radius, &u.breakpoints(0), quad)?.0
    } else {
        let failure: Cell<Option<QuadError>> = Cell::new(None);
        let br1 = u.breakpoints(1);
        let v = integrate_split(
            |y0| match integrate_split(|y1| kernel(&[y0, y1]), x[1] - radius, x[1] + radius, &br1, quad) {
                Ok(r) => r.0,
                Err(e) => {
                    failure.set(Some(e));
                    Complex64::new(0.0, 0.0)
                }
            },
            x[0] - radius,
            x[0] + radius,
            &u.breakpoints(0),
            quad,
        )?
        .0;
        if let Some(e) = failure.take() {
            return Err(e.into());
        }
        v
    };
    Ok(h.powf(-0.75 * dim as f64) * value)
}

/// Tu through the rescaling Tu(x, ξ; h) = ⟨ξ⟩^{−n/2} 𝒯u(x, ξ/⟨ξ⟩; h/⟨ξ⟩).
pub fn rescaled_transform(u: &SampledFunction, rho: &PhaseSpacePoint, p: &FbiParams) -> Result<Complex64, FbiError> {
    let jb = real_bracket(&rho.xi, p.n);
    let omega = [rho.xi[0] / jb, rho.xi[1] / jb];
    let v = standard_transform(u, rho.x, omega, p.h / jb, &p.quad)?;
    Ok(jb.powf(-0.5 * p.n as f64) * v)
}

/// T_Λu(x, ξ) = Tu(x − iθG_ξ, ξ + iθG_x).
pub fn deformed_fbi(
    u: &SampledFunction,
    rho: &PhaseSpacePoint,
    weight: &dyn Weight,
    theta: f64,
    p: &FbiParams,
) -> Result<Complex64, FbiError> {
    let alpha = DeformedPoint::new(*rho, weight, theta).alpha();
    fbi_transform_complex(u, &alpha, p).map(|t| t.value)
}

/// Uniform grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn symmetric(half_width: f64, step: f64) -> Self {
        let m = (half_width / step).round() as usize;
        Self { start: -(m as f64) * step, step, len: 2 * m + 1 }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }
}

/// Samples of a function on the tensor grid x-axisⁿ × ξ-axisⁿ, stored with the
/// index order (x₁, [x₂], ξ₁, [ξ₂]), last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformGrid {
    pub n: usize,
    pub x_axis: Axis,
    pub xi_axis: Axis,
    pub values: Vec<Complex64>,
}

impl TransformGrid {
    pub fn point(&self, flat: usize) -> PhaseSpacePoint {
        let (lx, lk) = (self.x_axis.len, self.xi_axis.len);
        if self.n == 1 {
            PhaseSpacePoint::new1(self.x_axis.value(flat / lk), self.xi_axis.value(flat % lk))
        } else {
            let k2 = flat % lk;
            let k1 = (flat / lk) % lk;
            let x2 = (flat / (lk * lk)) % lx;
            let x1 = flat / (lk * lk * lx);
            PhaseSpacePoint::new2(
                [self.x_axis.value(x1), self.x_axis.value(x2)],
                [self.xi_axis.value(k1), self.xi_axis.value(k2)],
            )
        }
    }

    fn on_boundary(&self, flat: usize) -> bool {
        let (lx, lk) = (self.x_axis.len, self.xi_axis.len);
        let edge = |i: usize, l: usize| i == 0 || i + 1 == l;
        if self.n == 1 {
            edge(flat / lk, lx) || edge(flat % lk, lk)
        } else {
            edge(flat % lk, lk)
                || edge((flat / lk) % lk, lk)
                || edge((flat / (lk * lk)) % lx, lx)
                || edge(flat / (lk * lk * lx), lx)
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Tu on a tensor grid.
pub fn sample_transform(u: &SampledFunction, x_axis: Axis, xi_axis: Axis, p: &FbiParams) -> Result<TransformGrid, FbiError> {
    let total = (x_axis.len * xi_axis.len).pow(p.n as u32);
    let mut grid = TransformGrid { n: p.n, x_axis, xi_axis, values: Vec::new() };
    let values: Result<Vec<Complex64>, FbiError> =
        (0..total).into_par_iter().map(|i| fbi_transform(u, &grid.point(i), p)).collect();
    grid.values = values?;
    Ok(grid)
}

/// Sv(y) by the trapezoidal rule over the grid, with amplitude
/// 1 − (i/2)⟨x − y, ξ/⟨ξ⟩⟩.
pub fn fbi_inverse(v: &TransformGrid, y: &[f64; 2], p: &FbiParams) -> Result<Complex64, FbiError> {
    if v.n != p.n {
        return Err(FbiError::DimensionMismatch(format!("grid n = {}, params n = {}", v.n, p.n)));
    }
    let n = p.n as f64;
    let h = p.h;
    let norm = 2f64.powf(0.5 * n) * h.powf(-0.75 * n) / (2.0 * PI).powf(1.5 * n);
    let cell = (v.x_axis.step * v.xi_axis.step).powi(p.n as i32);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut peak = 0.0f64;
    let mut edge = 0.0f64;
    for (flat, val) in v.values.iter().enumerate() {
        if *val == Complex64::new(0.0, 0.0) {
            continue;
        }
        let rho = v.point(flat);
        let jb = real_bracket(&rho.xi, p.n);
        let mut lin = 0.0;
        let mut sq = 0.0;
        let mut dir = 0.0;
        for j in 0..p.n {
            let d = rho.x[j] - y[j];
            lin += d * rho.xi[j];
            sq += d * d;
            dir += d * rho.xi[j] / jb;
        }
        let kernel = Complex64::new(-0.5 * jb * sq / h, -lin / h).exp() * jb.powf(0.25 * n) * Complex64::new(1.0, -0.5 * dir);
        let term = kernel * val;
        let mag = term.norm();
        peak = peak.max(mag);
        if v.on_boundary(flat) {
            edge = edge.max(mag);
        }
        sum += term;
    }
    if peak > 0.0 && edge > GRID_FLOOR * peak {
        return Err(FbiError::GridTooNarrow { ratio: edge / peak });
    }
    Ok(norm * cell * sum)
}

/// Default inverse grid: x ∈ [−6, 6] step 0.05, ξ ∈ [−7, 7] step 0.08.
pub fn default_inverse_axes() -> (Axis, Axis) {
    (Axis::symmetric(6.0, 0.05), Axis::symmetric(7.0, 0.08))
}

/// Gaussian times {1, y, y², cos 3y, sin y}.
pub fn entire_test_family() -> Vec<(&'static str, SampledFunction)> {
    let g = |y: f64| (-0.5 * y * y).exp();
    let make = move |f: fn(f64) -> f64| {
        SampledFunction::new(1, move |y: &[f64; 2]| Complex64::new(g(y[0]) * f(y[0]), 0.0)).with_hint(AnalyticityHint::Analytic)
    };
    vec![
        ("gaussian", make(|_| 1.0)),
        ("y_gaussian", make(|y| y)),
        ("y2_gaussian", make(|y| y * y)),
        ("cos3y_gaussian", make(|y| (3.0 * y).cos())),
        ("siny_gaussian", make(|y| y.sin())),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Roundtrip {
    pub sup_error: f64,
    pub sup_norm: f64,
    pub rel_error: f64,
    pub points: usize,
}

/// sup |S(Tu) − u| over the evaluation points (n = 1).
pub fn roundtrip(u: &SampledFunction, x_axis: Axis, xi_axis: Axis, ys: &[f64], p: &FbiParams) -> Result<Roundtrip, FbiError> {
    if p.n != 1 || u.dim != 1 {
        return Err(FbiError::DimensionMismatch("roundtrip is one-dimensional".into()));
    }
    let grid = sample_transform(u, x_axis, xi_axis, p)?;
    let errs: Result<Vec<(f64, f64)>, FbiError> = ys
        .par_iter()
        .map(|&y| {
            let exact = u.eval(&[y, 0.0]);
            Ok(((fbi_inverse(&grid, &[y, 0.0], p)? - exact).norm(), exact.norm()))
        })
        .collect();
    let errs = errs?;
    let sup_error = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let sup_norm = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(Roundtrip { sup_error, sup_norm, rel_error: sup_error / sup_norm, points: ys.len() })
}

fn dot(a: &[Complex64; 2], b: &[Complex64; 2], dim: usize) -> Complex64 {
    (0..dim).map(|j| a[j] * b[j]).sum()
}

fn sub(a: &[Complex64; 2], b: &[Complex64; 2]) -> [Complex64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Ψ(α, β), the phase of the kernel of T∘S after the y integration.
pub fn phase_psi(alpha: &ComplexPoint, beta: &ComplexPoint) -> Result<Complex64, FbiError> {
    if alpha.dim != beta.dim {
        return Err(FbiError::DimensionMismatch(format!("{} vs {}", alpha.dim, beta.dim)));
    }
    let d = alpha.dim;
    let a = bracket(&alpha.xi, d)?;
    let b = bracket(&beta.xi, d)?;
    let s = a + b;
    let dxi = sub(&alpha.xi, &beta.xi);
    let dx = sub(&alpha.x, &beta.x);
    let mean = [(b * alpha.xi[0] + a * beta.xi[0]) / s, (b * alpha.xi[1] + a * beta.xi[1]) / s];
    Ok(0.5 * I * dot(&dxi, &dxi, d) / s + 0.5 * I * a * b * dot(&dx, &dx, d) / s + dot(&mean, &dx, d))
}

/// y_c(α, β) = (⟨α_ξ⟩α_x + ⟨β_ξ⟩β_x + i(β_ξ − α_ξ)) / (⟨α_ξ⟩ + ⟨β_ξ⟩).
pub fn critical_point_y(alpha: &ComplexPoint, beta: &ComplexPoint) -> Result<[Complex64; 2], FbiError> {
    let d = alpha.dim;
    let a = bracket(&alpha.xi, d)?;
    let b = bracket(&beta.xi, d)?;
    let mut y = [Complex64::new(0.0, 0.0); 2];
    for j in 0..d {
        y[j] = (a * alpha.x[j] + b * beta.x[j] + I * (beta.xi[j] - alpha.xi[j])) / (a + b);
    }
    Ok(y)
}

/// The y-phase of the T∘S kernel:
/// ⟨α_x − y, α_ξ⟩ + (i/2)⟨α_ξ⟩(α_x − y)² − ⟨β_x − y, β_ξ⟩ + (i/2)⟨β_ξ⟩(β_x − y)².
pub fn kernel_phase(alpha: &ComplexPoint, beta: &ComplexPoint, y: &[Complex64; 2]) -> Result<Complex64, FbiError> {
    let d = alpha.dim;
    let a = bracket(&alpha.xi, d)?;
    let b = bracket(&beta.xi, d)?;
    let da = sub(&alpha.x, y);
    let db = sub(&beta.x, y);
    Ok(dot(&da, &alpha.xi, d) + 0.5 * I * a * dot(&da, &da, d) - dot(&db, &beta.xi, d) + 0.5 * I * b * dot(&db, &db, d))
}

/// ∂_y of `kernel_phase`.
pub fn kernel_phase_gradient(alpha: &ComplexPoint, beta: &ComplexPoint, y: &[Complex64; 2]) -> Result<[Complex64; 2], FbiError> {
    let d = alpha.dim;
    let a = bracket(&alpha.xi, d)?;
    let b = bracket(&beta.xi, d)?;
    let mut g = [Complex64::new(0.0, 0.0); 2];
    for j in 0..d {
        g[j] = -alpha.xi[j] - I * a * (alpha.x[j] - y[j]) + beta.xi[j] - I * b * (beta.x[j] - y[j]);
    }
    Ok(g)
}

/// H = ξ·G_ξ − G.
pub fn canonical_weight(rho: &PhaseSpacePoint, weight: &dyn Weight) -> f64 {
    let j = weight.jet(rho);
    (0..rho.dim).map(|i| rho.xi[i] * j.dxi[i]).sum::<f64>() - j.value
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectivePsi {
    pub value: f64,
    pub maximizer: PhaseSpacePoint,
    /// Max-norm distance of the maximizer from α in (x, ξ/⟨α_ξ⟩).
    pub displacement: f64,
    pub trust_radius: f64,
    pub iterations: usize,
}

/// ψ(α) = max_b (−Im Ψ(α, β(b)) + H(β(b))) over the deformation
/// β(b) = (b_x + iθG_ξ(b), b_ξ − iθG_x(b)) with H = −θ(ξ·G_ξ − G), so that
/// ψ = θG + O(θ²).
pub fn effective_psi(alpha: &PhaseSpacePoint, weight: &dyn Weight, theta: f64) -> Result<EffectivePsi, FbiError> {
    let d = alpha.dim;
    let a_real = ComplexPoint::from_real(alpha);
    let jb = real_bracket(&alpha.xi, d);
    let to_point = |s: &[f64; 4]| {
        let mut b = *alpha;
        for j in 0..d {
            b.x[j] += s[j];
            b.xi[j] += s[d + j] * jb;
        }
        b
    };
    let objective = |s: &[f64; 4]| -> Result<f64, FbiError> {
        let b = to_point(s);
        let beta = DeformedPoint::new(b, weight, -theta).alpha();
        let h = -theta * canonical_weight(&b, weight);
        Ok(-phase_psi(&a_real, &beta)?.im + h)
    };
    // Probes past the branch cut of ⟨β_ξ⟩ are infeasible, not failures.
    let feasible = |s: &[f64; 4]| match objective(s) {
        Err(FbiError::BranchCut { .. }) => Ok(f64::NEG_INFINITY),
        r => r,
    };
    let j0 = weight.jet(alpha);
    let mut local = 1.0f64.max(j0.value.abs() / jb);
    for j in 0..d {
        local = local.max(j0.dxi[j].abs()).max(j0.dx[j].abs() / jb);
    }
    let radius = 4.0 * theta.abs() * local;
    let mut s = [0.0; 4];
    let mut best = objective(&s)?;
    if theta == 0.0 {
        return Ok(EffectivePsi { value: best, maximizer: *alpha, displacement: 0.0, trust_radius: 0.0, iterations: 0 });
    }

    // Hooke–Jeeves pattern search on a shrinking stencil.
    let dims = 2 * d;
    let mut step = 0.25 * radius;
    let min_step = 1e-11 * radius;
    let mut iterations = 0;
    let explore = |base: [f64; 4], base_val: f64, step: f64| -> Result<([f64; 4], f64), FbiError> {
        let mut p = base;
        let mut v = base_val;
        for k in 0..dims {
            for sign in [1.0, -1.0] {
                let mut t = p;
                t[k] += sign * step;
                let tv = feasible(&t)?;
                if tv > v {
                    p = t;
                    v = tv;
                    break;
                }
            }
        }
        Ok((p, v))
    };
    while step > min_step && iterations < 20_000 {
        iterations += 1;
        let (p, v) = explore(s, best, step)?;
        if v > best {
            // Pattern move along the successful direction.
            let mut q = [0.0; 4];
            for k in 0..dims {
                q[k] = 2.0 * p[k] - s[k];
            }
            s = p;
            best = v;
            let qv = feasible(&q)?;
            let (q2, q2v) = explore(q, qv, step)?;
            if q2v > best {
                s = q2;
                best = q2v;
            }
            let disp = s.iter().take(dims).fold(0.0f64, |m, v| m.max(v.abs()));
            if disp > 2.0 * radius {
                return Err(FbiError::MaximizerEscaped { displacement: disp, radius });
            }
        } else {
            step *= 0.5;
        }
    }
    let displacement = s.iter().take(dims).fold(0.0f64, |m, v| m.max(v.abs()));
    if displacement > radius {
        return Err(FbiError::MaximizerEscaped { displacement, radius });
    }
    Ok(EffectivePsi { value: best, maximizer: to_point(&s), displacement, trust_radius: radius, iterations })
}
