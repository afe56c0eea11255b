//! Symbols on T*ℝⁿ (n ≤ 2), their Hamiltonian vector fields and flows, and
//! the radial-Lagrangian checks for the Keldysh family.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// A point (x, ξ) of T*ℝⁿ. Unused coordinates of a one-dimensional point are
/// kept at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSpacePoint {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub dim: usize,
}

impl PhaseSpacePoint {
    pub fn new1(x: f64, xi: f64) -> Self {
        Self { x: [x, 0.0], xi: [xi, 0.0], dim: 1 }
    }

    pub fn new2(x: [f64; 2], xi: [f64; 2]) -> Self {
        Self { x, xi, dim: 2 }
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi[0].hypot(self.xi[1])
    }

    fn coords(&self) -> [f64; 4] {
        [self.x[0], self.x[1], self.xi[0], self.xi[1]]
    }

    fn shifted(&self, dx: [f64; 2], dxi: [f64; 2], s: f64) -> Self {
        let mut p = *self;
        for i in 0..self.dim {
            p.x[i] += s * dx[i];
            p.xi[i] += s * dxi[i];
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymbolKind {
    /// p = x₁ξ₁² + ξ₂²
    Keldysh,
    /// p = ξ₁² + x₁ξ₂²
    Tricomi,
    /// p = −x₁ξ₁^m
    NormalForm { order: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolSpec {
    pub kind: SymbolKind,
    /// Coefficient of the first-order term a·D_{x₁}; only the model problem uses it.
    #[serde(skip)]
    pub lower_order: Complex64,
}

impl SymbolSpec {
    pub fn keldysh() -> Self {
        Self { kind: SymbolKind::Keldysh, lower_order: Complex64::new(0.0, 0.0) }
    }

    pub fn tricomi() -> Self {
        Self { kind: SymbolKind::Tricomi, lower_order: Complex64::new(0.0, 0.0) }
    }

    pub fn normal_form(order: u32) -> Self {
        Self { kind: SymbolKind::NormalForm { order }, lower_order: Complex64::new(0.0, 0.0) }
    }
}

/// Principal symbol p(x, ξ).
pub fn eval_symbol(s: &SymbolSpec, rho: &PhaseSpacePoint) -> f64 {
    let [x1, _] = rho.x;
    let [k1, k2] = rho.xi;
    match s.kind {
        SymbolKind::Keldysh => x1 * k1 * k1 + k2 * k2,
        SymbolKind::Tricomi => k1 * k1 + x1 * k2 * k2,
        SymbolKind::NormalForm { order } => -x1 * k1.powi(order as i32),
    }
}

/// (∂_ξ p, −∂_x p).
pub fn hamiltonian_field(s: &SymbolSpec, rho: &PhaseSpacePoint) -> ([f64; 2], [f64; 2]) {
    let [x1, _] = rho.x;
    let [k1, k2] = rho.xi;
    match s.kind {
        SymbolKind::Keldysh => ([2.0 * x1 * k1, 2.0 * k2], [-k1 * k1, 0.0]),
        SymbolKind::Tricomi => ([2.0 * k1, 2.0 * x1 * k2], [-k2 * k2, 0.0]),
        SymbolKind::NormalForm { order } => {
            let m = order as i32;
            let dx1 = if m == 0 { 0.0 } else { -(m as f64) * x1 * k1.powi(m - 1) };
            ([dx1, 0.0], [k1.powi(m), 0.0])
        }
    }
}

/// (∂_x p, ∂_ξ p).
pub fn symbol_gradient(s: &SymbolSpec, rho: &PhaseSpacePoint) -> ([f64; 2], [f64; 2]) {
    let (dx, dxi) = hamiltonian_field(s, rho);
    ([-dxi[0], -dxi[1]], dx)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("flow needs at least 16 steps, got {0}")]
    TooFewSteps(usize),
    #[error("trajectory left the representable range at step {step} (t = {t})")]
    StepOverflow { step: usize, t: f64 },
}

const COORD_LIMIT: f64 = 1e12;

/// Fixed-step RK4 integration of H_p over [0, T]; returns steps + 1 samples
/// (a single sample when T = 0).
pub fn flow(s: &SymbolSpec, rho0: &PhaseSpacePoint, t_end: f64, steps: usize) -> Result<Vec<PhaseSpacePoint>, FlowError> {
    if t_end == 0.0 {
        return Ok(vec![*rho0]);
    }
    if steps < 16 {
        return Err(FlowError::TooFewSteps(steps));
    }
    let h = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut rho = *rho0;
    out.push(rho);
    for step in 1..=steps {
        let (a_x, a_k) = hamiltonian_field(s, &rho);
        let (b_x, b_k) = hamiltonian_field(s, &rho.shifted(a_x, a_k, 0.5 * h));
        let (c_x, c_k) = hamiltonian_field(s, &rho.shifted(b_x, b_k, 0.5 * h));
        let (d_x, d_k) = hamiltonian_field(s, &rho.shifted(c_x, c_k, h));
        let mut dx = [0.0; 2];
        let mut dk = [0.0; 2];
        for i in 0..2 {
            dx[i] = (a_x[i] + 2.0 * b_x[i] + 2.0 * c_x[i] + d_x[i]) / 6.0;
            dk[i] = (a_k[i] + 2.0 * b_k[i] + 2.0 * c_k[i] + d_k[i]) / 6.0;
        }
        rho = rho.shifted(dx, dk, h);
        if rho.coords().iter().any(|c| !(c.abs() <= COORD_LIMIT)) {
            return Err(FlowError::StepOverflow { step, t: step as f64 * h });
        }
        out.push(rho);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LagrangianSign {
    Plus,
    Minus,
}

/// Sample of Λ± = {x₁ = 0, ξ' = 0, ±ξ₁ > 0}.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSample {
    points: Vec<PhaseSpacePoint>,
    sign: LagrangianSign,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadialError {
    #[error("empty Lagrangian sample")]
    EmptySample,
    #[error("point {index} is not on the requested component: {reason}")]
    OffLagrangian { index: usize, reason: &'static str },
}

impl LagrangianSample {
    pub fn new(points: Vec<PhaseSpacePoint>, sign: LagrangianSign) -> Result<Self, RadialError> {
        if points.is_empty() {
            return Err(RadialError::EmptySample);
        }
        for (index, p) in points.iter().enumerate() {
            if p.x[0] != 0.0 {
                return Err(RadialError::OffLagrangian { index, reason: "x₁ ≠ 0" });
            }
            if p.dim == 2 && p.xi[1] != 0.0 {
                return Err(RadialError::OffLagrangian { index, reason: "ξ' ≠ 0" });
            }
            let ok = match sign {
                LagrangianSign::Plus => p.xi[0] > 0.0,
                LagrangianSign::Minus => p.xi[0] < 0.0,
            };
            if !ok {
                return Err(RadialError::OffLagrangian { index, reason: "wrong sign of ξ₁" });
            }
        }
        Ok(Self { points, sign })
    }

    /// Points (x₁ = 0, x₂, ±ξ₁, 0) for the given |ξ₁| values.
    pub fn on_axis(dim: usize, x2: f64, magnitudes: &[f64], sign: LagrangianSign) -> Result<Self, RadialError> {
        let s = if sign == LagrangianSign::Plus { 1.0 } else { -1.0 };
        let pts = magnitudes
            .iter()
            .map(|&m| if dim == 1 { PhaseSpacePoint::new1(0.0, s * m) } else { PhaseSpacePoint::new2([0.0, x2], [s * m, 0.0]) })
            .collect();
        Self::new(pts, sign)
    }

    pub fn points(&self) -> &[PhaseSpacePoint] {
        &self.points
    }

    pub fn sign(&self) -> LagrangianSign {
        self.sign
    }
}

/// Sign of the factor c in H_p = c·ξ·∂_ξ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Proportionality {
    Positive,
    /// Radial for −p.
    Negative,
    Mixed,
    /// H_p vanishes on the sample.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialReport {
    pub max_symbol_value: f64,
    /// max |H_p ∧ ξ·∂_ξ| / (|H_p|·|ξ|)
    pub max_non_parallelism: f64,
    pub min_dp_norm: f64,
    pub proportionality: Proportionality,
    pub contained: bool,
    pub parallel: bool,
    /// H_p is a positive multiple of ξ·∂_ξ.
    pub positivity: bool,
}

impl RadialReport {
    /// Λ ⊂ p⁻¹(0), dp ≠ 0 on Λ and H_p ∥ ξ·∂_ξ (either orientation).
    pub fn radial(&self) -> bool {
        self.contained && self.parallel && self.min_dp_norm > 0.0
    }
}

const RADIAL_TOL: f64 = 1e-12;

pub fn check_radial(s: &SymbolSpec, lambda: &LagrangianSample) -> Result<RadialReport, RadialError> {
    if lambda.points.is_empty() {
        return Err(RadialError::EmptySample);
    }
    let mut max_p = 0.0f64;
    let mut max_wedge = 0.0f64;
    let mut min_dp = f64::INFINITY;
    let mut pos = 0usize;
    let mut neg = 0usize;
    for rho in &lambda.points {
        max_p = max_p.max(eval_symbol(s, rho).abs());
        let (gx, gk) = symbol_gradient(s, rho);
        min_dp = min_dp.min((gx[0] * gx[0] + gx[1] * gx[1] + gk[0] * gk[0] + gk[1] * gk[1]).sqrt());
        let (hx, hk) = hamiltonian_field(s, rho);
        let v = [hx[0], hx[1], hk[0], hk[1]];
        let w = [0.0, 0.0, rho.xi[0], rho.xi[1]];
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let ww: f64 = w.iter().map(|a| a * a).sum();
        let vw: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        if vv == 0.0 {
            continue;
        }
        let wedge = (vv * ww - vw * vw).max(0.0).sqrt() / (vv * ww).sqrt();
        max_wedge = max_wedge.max(wedge);
        if vw > 0.0 {
            pos += 1;
        } else if vw < 0.0 {
            neg += 1;
        }
    }
    let proportionality = match (pos, neg) {
        (0, 0) => Proportionality::Degenerate,
        (_, 0) => Proportionality::Positive,
        (0, _) => Proportionality::Negative,
        _ => Proportionality::Mixed,
    };
    Ok(RadialReport {
        max_symbol_value: max_p,
        max_non_parallelism: max_wedge,
        min_dp_norm: min_dp,
        proportionality,
        contained: max_p <= RADIAL_TOL,
        parallel: max_wedge <= RADIAL_TOL,
        positivity: proportionality == Proportionality::Positive,
    })
}

/// Angles θ ∈ [0, 2π) with p(x₁, (cos θ, sin θ)) = 0 for the Keldysh or
/// Tricomi symbol; empty when x₁ > 0.
pub fn characteristic_angles(kind: SymbolKind, x1: f64) -> Vec<f64> {
    if x1 > 0.0 {
        return Vec::new();
    }
    let base = match kind {
        // x₁cos²θ + sin²θ = 0  ⇔  tan²θ = −x₁
        SymbolKind::Keldysh => (-x1).sqrt().atan(),
        // cos²θ + x₁sin²θ = 0  ⇔  cot²θ = −x₁
        SymbolKind::Tricomi => FRAC_PI_2 - (-x1).sqrt().atan(),
        SymbolKind::NormalForm { .. } => return Vec::new(),
    };
    let mut out = vec![base, PI - base, PI + base, 2.0 * PI - base];
    for a in out.iter_mut() {
        *a = a.rem_euclid(2.0 * PI);
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    out
}

/// (dθ/dt, dx₁/dt) of the Hamiltonian field at (x₁, ξ = (cos θ, sin θ)),
/// the picture drawn on the cylinder ℝ_{x₁} × S¹.
pub fn cylinder_field(kind: SymbolKind, x1: f64, theta: f64) -> (f64, f64) {
    let rho = PhaseSpacePoint::new2([x1, 0.0], [theta.cos(), theta.sin()]);
    let (dx, dk) = hamiltonian_field(&SymbolSpec { kind, lower_order: Complex64::new(0.0, 0.0) }, &rho);
    let dtheta = rho.xi[0] * dk[1] - rho.xi[1] * dk[0];
    (dtheta, dx[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_examples() {
        assert_eq!(eval_symbol(&SymbolSpec::keldysh(), &PhaseSpacePoint::new2([0.0, 0.3], [2.0, 0.0])), 0.0);
        assert_eq!(eval_symbol(&SymbolSpec::tricomi(), &PhaseSpacePoint::new2([-1.0, 0.0], [1.0, 1.0])), 0.0);
        assert_eq!(eval_symbol(&SymbolSpec::normal_form(1), &PhaseSpacePoint::new1(2.0, 3.0)), -6.0);
    }

    #[test]
    fn field_examples() {
        let (dx, dk) = hamiltonian_field(&SymbolSpec::keldysh(), &PhaseSpacePoint::new2([0.0, 0.0], [3.0, 0.0]));
        assert_eq!((dx, dk), ([0.0, 0.0], [-9.0, 0.0]));
        let (dx, dk) = hamiltonian_field(&SymbolSpec::normal_form(1), &PhaseSpacePoint::new1(1.5, -2.0));
        assert_eq!((dx[0], dk[0]), (-1.5, -2.0));
        let (dx, dk) = hamiltonian_field(&SymbolSpec::tricomi(), &PhaseSpacePoint::new2([0.0, 0.0], [0.0, 1.0]));
        assert_eq!((dx, dk), ([0.0, 0.0], [-1.0, 0.0]));
    }

    #[test]
    fn zero_time_flow_is_identity() {
        let rho = PhaseSpacePoint::new2([0.2, 0.1], [1.0, -0.4]);
        for s in [SymbolSpec::keldysh(), SymbolSpec::tricomi(), SymbolSpec::normal_form(2)] {
            assert_eq!(flow(&s, &rho, 0.0, 100).unwrap(), vec![rho]);
        }
    }

    #[test]
    fn flow_rejects_few_steps_and_blowup() {
        let rho = PhaseSpacePoint::new2([0.0, 0.0], [1.0, 0.0]);
        assert_eq!(flow(&SymbolSpec::keldysh(), &rho, 1.0, 8), Err(FlowError::TooFewSteps(8)));
        // ξ₁(t) = −1/(1 − t) blows up at t = 1.
        let rho = PhaseSpacePoint::new2([0.0, 0.0], [-1.0, 0.0]);
        assert!(matches!(flow(&SymbolSpec::keldysh(), &rho, 2.0, 4000), Err(FlowError::StepOverflow { .. })));
    }

    #[test]
    fn sample_validation() {
        let bad = vec![PhaseSpacePoint::new2([0.1, 0.0], [1.0, 0.0])];
        assert!(matches!(LagrangianSample::new(bad, LagrangianSign::Plus), Err(RadialError::OffLagrangian { .. })));
        assert_eq!(LagrangianSample::new(vec![], LagrangianSign::Plus), Err(RadialError::EmptySample));
        let wrong_sign = vec![PhaseSpacePoint::new2([0.0, 0.0], [-1.0, 0.0])];
        assert!(LagrangianSample::new(wrong_sign, LagrangianSign::Plus).is_err());
    }

    #[test]
    fn keldysh_radial_with_negative_orientation() {
        for sign in [LagrangianSign::Plus, LagrangianSign::Minus] {
            let lam = LagrangianSample::on_axis(2, 0.0, &[1.0, 2.0, 4.0, 8.0], sign).unwrap();
            let r = check_radial(&SymbolSpec::keldysh(), &lam).unwrap();
            assert!(r.radial());
            // −ξ₁²∂_{ξ₁} = −ξ₁·(ξ·∂_ξ) on Λ₊ and +|ξ₁|·(ξ·∂_ξ) on Λ₋.
            let expect = if sign == LagrangianSign::Plus { Proportionality::Negative } else { Proportionality::Positive };
            assert_eq!(r.proportionality, expect);
        }
    }

    #[test]
    fn tricomi_not_contained() {
        let lam = LagrangianSample::on_axis(2, 0.0, &[1.0, 2.0, 4.0, 8.0], LagrangianSign::Plus).unwrap();
        let r = check_radial(&SymbolSpec::tricomi(), &lam).unwrap();
        assert!(!r.contained);
        assert_eq!(r.max_symbol_value, 64.0);
    }

    #[test]
    fn normal_form_positive() {
        let mags: Vec<f64> = (1..=8).map(|t| t as f64).collect();
        let lam = LagrangianSample::on_axis(1, 0.0, &mags, LagrangianSign::Plus).unwrap();
        let r = check_radial(&SymbolSpec::normal_form(1), &lam).unwrap();
        assert!(r.radial() && r.positivity);
        assert_eq!(r.max_non_parallelism, 0.0);
    }

    #[test]
    fn angles() {
        assert_eq!(characteristic_angles(SymbolKind::Keldysh, 0.0), vec![0.0, PI]);
        let t = characteristic_angles(SymbolKind::Tricomi, 0.0);
        assert_eq!(t.len(), 2);
        assert!((t[0] - FRAC_PI_2).abs() < 1e-15 && (t[1] - 1.5 * PI).abs() < 1e-15);
        assert!(characteristic_angles(SymbolKind::Tricomi, 0.5).is_empty());
        assert!(characteristic_angles(SymbolKind::Keldysh, 0.5).is_empty());
        for th in characteristic_angles(SymbolKind::Tricomi, -1.0) {
            let (c, s) = (th.cos(), th.sin());
            assert!((c * c - s * s).abs() < 1e-14);
        }
        for th in characteristic_angles(SymbolKind::Keldysh, -2.0) {
            let (c, s) = (th.cos(), th.sin());
            assert!((-2.0 * c * c + s * s).abs() < 1e-14);
        }
    }

    #[test]
    fn cylinder_field_on_keldysh_lagrangians() {
        for th in [0.0, PI] {
            let (_, dx1) = cylinder_field(SymbolKind::Keldysh, 0.0, th);
            assert_eq!(dx1, 0.0);
        }
    }
}
