//! Escape weights G_ε = Φ·q_ε for the normal form p = −x₁ξ₁ near (0, e₁).
//!
//! Φ localizes to a narrow cone around the positive ξ₁ axis, q_ε grows like
//! ξ₁ up to 1/ε and logarithmically afterwards. `verify_escape` samples the
//! inequalities the construction is built to satisfy.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{integrate_decaying, Domain, QuadratureSpec};
use crate::phase_space::{PhaseSpacePoint, SymbolKind, SymbolSpec};

fn s(r: f64) -> f64 {
    if r > 0.0 {
        (-1.0 / r).exp()
    } else {
        0.0
    }
}

fn s_prime(r: f64) -> f64 {
    if r > 0.0 {
        (-1.0 / r).exp() / (r * r)
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on [−1, 1], 0 outside (−2, 2), monotone in |t|.
pub fn chi(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let u = s(2.0 - a);
        u / (u + s(a - 1.0))
    }
}

pub fn chi_prime(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 || a >= 2.0 {
        return 0.0;
    }
    let (p, q) = (2.0 - a, a - 1.0);
    let (sp, sq) = (s(p), s(q));
    let den = sp + sq;
    let d = -(s_prime(p) * sq + sp * s_prime(q)) / (den * den);
    d * t.signum()
}

/// φ(t) = χ(t/δ).
pub fn phi(t: f64, delta: f64) -> f64 {
    chi(t / delta)
}

pub fn phi_prime(t: f64, delta: f64) -> f64 {
    chi_prime(t / delta) / delta
}

/// Integrand of q_ε in the scaled variable r = εs.
fn q_integrand(r: f64) -> f64 {
    let c = chi(r);
    c + (1.0 - c) / r
}

fn band_integral(u: f64) -> f64 {
    let spec = QuadratureSpec::default().with_rel_tol(1e-15).with_abs_tol(1e-17);
    integrate_decaying(|r| Complex64::new(q_integrand(r), 0.0), Domain::Finite(1.0, u), &spec)
        .map(|r| r.value.re)
        .expect("smooth integrand on [1, 2]")
}

/// J(2) = ∫₁² [χ + (1 − χ)/r] dr.
fn band_total() -> f64 {
    static J2: OnceLock<f64> = OnceLock::new();
    *J2.get_or_init(|| band_integral(2.0))
}

/// q_ε(t) = ∫₀ᵗ [χ(εs) + (1 − χ(εs))(εs)⁻¹] ds.
pub fn q_eps(t: f64, eps: f64) -> f64 {
    let u = eps * t.abs();
    let v = if u <= 1.0 {
        t.abs()
    } else if u < 2.0 {
        (1.0 + band_integral(u)) / eps
    } else {
        (1.0 + band_total() + (u / 2.0).ln()) / eps
    };
    v.copysign(t)
}

/// ∂_t q_ε.
pub fn q_eps_prime(t: f64, eps: f64) -> f64 {
    let u = eps * t.abs();
    if u <= 1.0 {
        1.0
    } else {
        q_integrand(u)
    }
}

/// ∂²_t q_ε.
pub fn q_eps_second(t: f64, eps: f64) -> f64 {
    let u = eps * t.abs();
    if u <= 1.0 {
        return 0.0;
    }
    let c = chi(u);
    let dc = chi_prime(u);
    eps * (dc * (1.0 - 1.0 / u) - (1.0 - c) / (u * u)) * t.signum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightParams {
    pub eps: f64,
    pub delta: f64,
}

impl WeightParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self, WeightError> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(WeightError::InvalidParams(format!("ε = {eps} outside (0, 1]")));
        }
        if !(delta > 0.0 && delta <= 0.25) {
            return Err(WeightError::InvalidParams(format!("δ = {delta} outside (0, 1/4]")));
        }
        Ok(Self { eps, delta })
    }

    /// ξ₁ below which ψ = 1 − φ((ξ₁)₊) vanishes.
    pub fn support_floor(&self) -> f64 {
        self.delta
    }

    /// ξ₁ above which ψ = 1.
    pub fn plateau_start(&self) -> f64 {
        2.0 * self.delta
    }
}

/// Value and first derivatives of a function on T*ℝⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jet {
    pub value: f64,
    pub dx: [f64; 2],
    pub dxi: [f64; 2],
}

/// Φ = φ(x₁)·φ(|ξ'|/ξ₁)·φ(|x'|)·(1 − φ((ξ₁)₊)).
pub fn weight_phi(rho: &PhaseSpacePoint, delta: f64) -> f64 {
    phi_jet(rho, delta).value
}

pub fn phi_jet(rho: &PhaseSpacePoint, delta: f64) -> Jet {
    let zero = Jet { value: 0.0, dx: [0.0; 2], dxi: [0.0; 2] };
    let [x1, x2] = rho.x;
    let [k1, k2] = rho.xi;
    if k1 <= delta {
        return zero;
    }
    let f1 = phi(x1, delta);
    let d1 = phi_prime(x1, delta);
    let f4 = 1.0 - phi(k1, delta);
    let d4 = -phi_prime(k1, delta);
    if rho.dim == 1 {
        return Jet { value: f1 * f4, dx: [d1 * f4, 0.0], dxi: [f1 * d4, 0.0] };
    }
    let r = k2 / k1;
    let f2 = phi(r, delta);
    let d2 = phi_prime(r, delta);
    let f3 = phi(x2, delta);
    let d3 = phi_prime(x2, delta);
    Jet {
        value: f1 * f2 * f3 * f4,
        dx: [d1 * f2 * f3 * f4, f1 * f2 * d3 * f4],
        dxi: [f1 * f3 * (-d2 * r / k1 * f4 + f2 * d4), f1 * f3 * f4 * d2 / k1],
    }
}

/// The three terms of H_pΦ for H_p = ξ₁∂_{ξ₁} − x₁∂_{x₁}; each is ≥ 0.
pub fn hp_phi_terms(rho: &PhaseSpacePoint, delta: f64) -> [f64; 3] {
    let [x1, x2] = rho.x;
    let [k1, k2] = rho.xi;
    if k1 <= delta {
        return [0.0; 3];
    }
    let f1 = phi(x1, delta);
    let f4 = 1.0 - phi(k1, delta);
    let (f2, f3, r) = if rho.dim == 1 { (1.0, 1.0, 0.0) } else { (phi(k2 / k1, delta), phi(x2, delta), k2 / k1) };
    let d2 = if rho.dim == 1 { 0.0 } else { phi_prime(r, delta) };
    [
        -x1 * phi_prime(x1, delta) * f2 * f3 * f4,
        -r * d2 * f1 * f3 * f4,
        -f1 * f2 * f3 * k1 * phi_prime(k1, delta),
    ]
}

/// G_ε = Φ·q_ε(ξ₁).
pub fn weight_g(rho: &PhaseSpacePoint, params: &WeightParams) -> f64 {
    let p = weight_phi(rho, params.delta);
    if p == 0.0 {
        0.0
    } else {
        p * q_eps(rho.xi[0], params.eps)
    }
}

pub fn weight_g_jet(rho: &PhaseSpacePoint, params: &WeightParams) -> Jet {
    let q = q_eps(rho.xi[0], params.eps);
    g_jet_with_q(rho, params, q, q_eps_prime(rho.xi[0], params.eps))
}

fn g_jet_with_q(rho: &PhaseSpacePoint, params: &WeightParams, q: f64, dq: f64) -> Jet {
    let p = phi_jet(rho, params.delta);
    Jet {
        value: p.value * q,
        dx: [p.dx[0] * q, p.dx[1] * q],
        dxi: [p.dxi[0] * q + p.value * dq, p.dxi[1] * q],
    }
}

/// A weight on T*ℝⁿ with its first derivatives.
pub trait Weight: Sync {
    fn jet(&self, rho: &PhaseSpacePoint) -> Jet;
}

impl Weight for WeightParams {
    fn jet(&self, rho: &PhaseSpacePoint) -> Jet {
        weight_g_jet(rho, self)
    }
}

/// G ≡ 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroWeight;

impl Weight for ZeroWeight {
    fn jet(&self, _rho: &PhaseSpacePoint) -> Jet {
        Jet { value: 0.0, dx: [0.0; 2], dxi: [0.0; 2] }
    }
}

/// H_pG_ε for p = −x₁ξ₁.
pub fn hp_g(rho: &PhaseSpacePoint, params: &WeightParams) -> f64 {
    let j = weight_g_jet(rho, params);
    rho.xi[0] * j.dxi[0] - rho.x[0] * j.dx[0]
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("invalid weight parameters: {0}")]
    InvalidParams(String),
    #[error("escape certification only covers the normal form of order 1, got {0:?}")]
    UnsupportedSymbol(SymbolKind),
    #[error("certification failed at {point:?}: {reason}")]
    CertificationFailed { point: PhaseSpacePoint, reason: String },
}

/// Tensor grid over supp Φ: ξ₁ log-spaced, ξ₂/ξ₁, x₁, x₂ uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeGrid {
    pub xi1: Vec<f64>,
    pub slope: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl EscapeGrid {
    /// ξ₁ ∈ [δ, xi_max] with `n_xi` log-spaced values; the other axes take
    /// `n_side` values across [−2.2δ, 2.2δ], slightly wider than supp Φ.
    pub fn log_spaced(delta: f64, xi_max: f64, n_xi: usize, n_side: usize) -> Self {
        let lo = delta.ln();
        let hi = xi_max.ln();
        let xi1 = (0..n_xi).map(|i| (lo + (hi - lo) * i as f64 / (n_xi - 1).max(1) as f64).exp()).collect();
        let side: Vec<f64> = (0..n_side)
            .map(|i| if n_side == 1 { 0.0 } else { -2.2 * delta + 4.4 * delta * i as f64 / (n_side - 1) as f64 })
            .collect();
        Self { xi1, slope: side.clone(), x1: side.clone(), x2: side }
    }

    pub fn len(&self) -> usize {
        self.xi1.len() * self.slope.len() * self.x1.len() * self.x2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parameters of the polynomial-growth certificate
/// H_pG e^{γG} + M₂⟨ξ⟩^K ≥ M₁ e^{γG}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCertificateSpec {
    pub m1: f64,
    pub gamma: f64,
    pub k_step: f64,
    pub k_max: f64,
}

impl Default for GrowthCertificateSpec {
    fn default() -> Self {
        Self { m1: 10.0, gamma: 1.0, k_step: 0.5, k_max: 60.0 }
    }
}

impl GrowthCertificateSpec {
    /// M₁e^{2γM₁}, the largest M₂ the certificate may use.
    pub fn m2_cap(&self) -> f64 {
        self.m1 * (2.0 * self.gamma * self.m1).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightReport {
    pub eps: f64,
    pub delta: f64,
    pub grid_size: usize,
    /// min of H_pG / (⟨ξ⟩|∂_ξG|² + ⟨ξ⟩⁻¹|∂_xG|²), 0/0 counted as +∞.
    pub min_escape_ratio: f64,
    pub min_hp_g: f64,
    /// max G / (ε⁻¹ log⟨ξ⟩).
    pub log_bound_const: f64,
    pub m2: f64,
    pub k_exp: f64,
    /// min Φ / (ξ₁²|∂_ξΦ|² + |∂_xΦ|²) over points with nonzero gradient.
    pub phi_ineq_const: f64,
    /// Smallest of the three H_pΦ terms (≥ 0 up to rounding).
    pub min_hp_phi_term: f64,
    /// Largest relative mismatch of the closed-form gradient against central differences.
    pub fd_max_rel_error: f64,
    pub support_in_cone: bool,
    /// max over the grid of |∂^α_x∂^β_ξ G|⟨ξ⟩^{|β|−1}, keyed "a1a2b1b2".
    pub seminorms: BTreeMap<String, f64>,
}

/// The configured cone Γ = {|x| ≤ 4δ, |ξ'| ≤ 4δξ₁, ξ₁ > 0}.
pub fn in_cone(rho: &PhaseSpacePoint, delta: f64) -> bool {
    rho.x[0].hypot(rho.x[1]) <= 4.0 * delta && rho.xi[1].abs() <= 4.0 * delta * rho.xi[0] && rho.xi[0] > 0.0
}

struct PointStats {
    ratio: f64,
    hpg: f64,
    log_bound: f64,
    phi_ratio: f64,
    min_term: f64,
    in_cone: bool,
    // (log(M₁ − H_pG)₊ + γG, log⟨ξ⟩); None when no constraint arises.
    growth: Option<(f64, f64)>,
}

fn japanese(rho: &PhaseSpacePoint) -> f64 {
    (1.0 + rho.xi[0] * rho.xi[0] + rho.xi[1] * rho.xi[1]).sqrt()
}

fn point_stats(rho: &PhaseSpacePoint, params: &WeightParams, q: f64, dq: f64, cert: &GrowthCertificateSpec) -> PointStats {
    let jet = g_jet_with_q(rho, params, q, dq);
    let pj = phi_jet(rho, params.delta);
    let jb = japanese(rho);
    let hpg = rho.xi[0] * jet.dxi[0] - rho.x[0] * jet.dx[0];
    let den = jb * (jet.dxi[0].powi(2) + jet.dxi[1].powi(2)) + (jet.dx[0].powi(2) + jet.dx[1].powi(2)) / jb;
    let ratio = if den == 0.0 { f64::INFINITY } else { hpg / den };
    let pden = rho.xi[0].powi(2) * (pj.dxi[0].powi(2) + pj.dxi[1].powi(2)) + pj.dx[0].powi(2) + pj.dx[1].powi(2);
    let phi_ratio = if pden == 0.0 { f64::INFINITY } else { pj.value / pden };
    let terms = hp_phi_terms(rho, params.delta);
    let deficit = cert.m1 - hpg;
    let growth = (deficit > 0.0).then(|| (deficit.ln() + cert.gamma * jet.value, jb.ln()));
    PointStats {
        ratio,
        hpg,
        log_bound: jet.value / (jb.ln() / params.eps),
        phi_ratio,
        min_term: terms.iter().cloned().fold(f64::INFINITY, f64::min),
        in_cone: pj.value == 0.0 || in_cone(rho, params.delta),
        growth,
    }
}

fn fd_gradient_error(rho: &PhaseSpacePoint, params: &WeightParams) -> f64 {
    let jet = weight_g_jet(rho, params);
    let mut worst = 0.0f64;
    let hx = 1e-6 * params.delta;
    let hk = 1e-6 * rho.xi[0];
    let scale = jet.value.abs() / params.delta + jet.dxi[0].abs() + 1e-12;
    let at = |dx: [f64; 2], dk: [f64; 2]| {
        let mut p = *rho;
        for i in 0..2 {
            p.x[i] += dx[i];
            p.xi[i] += dk[i];
        }
        weight_g(&p, params)
    };
    for i in 0..rho.dim {
        let mut e = [0.0; 2];
        e[i] = hx;
        let fd = (at(e, [0.0; 2]) - at([-e[0], -e[1]], [0.0; 2])) / (2.0 * hx);
        worst = worst.max((fd - jet.dx[i]).abs() / scale);
        let mut e = [0.0; 2];
        e[i] = hk;
        let fd = (at([0.0; 2], e) - at([0.0; 2], [-e[0], -e[1]])) / (2.0 * hk);
        worst = worst.max((fd - jet.dxi[i]).abs() / scale);
    }
    worst
}

/// Finite-difference proxies for |∂^α_x∂^β_ξ G|⟨ξ⟩^{|β|−1}, |α| + |β| ≤ 2, in
/// the (x₁, ξ₁) variables and the mixed (x₁, x₂), (ξ₁, ξ₂) pairs.
fn seminorm_proxies(rho: &PhaseSpacePoint, params: &WeightParams) -> Vec<(String, f64)> {
    let jb = japanese(rho);
    let hx = 1e-4 * params.delta;
    let hk = 1e-4 * rho.xi[0];
    let g = |dx1: f64, dx2: f64, dk1: f64, dk2: f64| {
        let mut p = *rho;
        p.x[0] += dx1;
        p.x[1] += dx2;
        p.xi[0] += dk1;
        p.xi[1] += dk2;
        weight_g(&p, params)
    };
    let g0 = g(0.0, 0.0, 0.0, 0.0);
    let mut out = vec![("0000".to_string(), g0.abs() / jb)];
    let jet = weight_g_jet(rho, params);
    out.push(("1000".into(), jet.dx[0].abs() / jb));
    out.push(("0010".into(), jet.dxi[0].abs()));
    out.push(("2000".into(), ((g(hx, 0.0, 0.0, 0.0) - 2.0 * g0 + g(-hx, 0.0, 0.0, 0.0)) / (hx * hx)).abs() / jb));
    out.push(("0020".into(), ((g(0.0, 0.0, hk, 0.0) - 2.0 * g0 + g(0.0, 0.0, -hk, 0.0)) / (hk * hk)).abs() * jb));
    let mixed = (g(hx, 0.0, hk, 0.0) - g(hx, 0.0, -hk, 0.0) - g(-hx, 0.0, hk, 0.0) + g(-hx, 0.0, -hk, 0.0)) / (4.0 * hx * hk);
    out.push(("1010".into(), mixed.abs()));
    if rho.dim == 2 {
        out.push(("0100".into(), jet.dx[1].abs() / jb));
        out.push(("0001".into(), jet.dxi[1].abs()));
        let m = (g(hx, hx, 0.0, 0.0) - g(hx, -hx, 0.0, 0.0) - g(-hx, hx, 0.0, 0.0) + g(-hx, -hx, 0.0, 0.0)) / (4.0 * hx * hx);
        out.push(("1100".into(), m.abs() / jb));
        let m = (g(0.0, 0.0, hk, hk) - g(0.0, 0.0, hk, -hk) - g(0.0, 0.0, -hk, hk) + g(0.0, 0.0, -hk, -hk)) / (4.0 * hk * hk);
        out.push(("0011".into(), m.abs() * jb));
    }
    out
}

/// Samples the escape inequalities on `grid` for the normal form −x₁ξ₁.
pub fn verify_escape(
    symbol: &SymbolSpec,
    params: &WeightParams,
    grid: &EscapeGrid,
    cert: &GrowthCertificateSpec,
) -> Result<WeightReport, WeightError> {
    match symbol.kind {
        SymbolKind::NormalForm { order: 1 } => {}
        other => return Err(WeightError::UnsupportedSymbol(other)),
    }
    let per_xi: Vec<_> = grid
        .xi1
        .par_iter()
        .map(|&k1| {
            let q = q_eps(k1, params.eps);
            let dq = q_eps_prime(k1, params.eps);
            let mut stats = Vec::with_capacity(grid.slope.len() * grid.x1.len() * grid.x2.len());
            for &r in &grid.slope {
                for &x1 in &grid.x1 {
                    for &x2 in &grid.x2 {
                        let rho = PhaseSpacePoint::new2([x1, x2], [k1, r * k1]);
                        stats.push((rho, point_stats(&rho, params, q, dq, cert)));
                    }
                }
            }
            stats
        })
        .collect();

    let mut min_ratio = f64::INFINITY;
    let mut min_hpg = f64::INFINITY;
    let mut log_bound: f64 = 0.0;
    let mut phi_c1 = f64::INFINITY;
    let mut min_term = f64::INFINITY;
    let mut support_ok = true;
    let mut constraints = Vec::new();
    let mut worst_point = None;
    for (rho, st) in per_xi.iter().flatten() {
        if st.ratio < min_ratio {
            min_ratio = st.ratio;
            worst_point = Some(*rho);
        }
        min_hpg = min_hpg.min(st.hpg);
        log_bound = log_bound.max(st.log_bound);
        phi_c1 = phi_c1.min(st.phi_ratio);
        min_term = min_term.min(st.min_term);
        support_ok &= st.in_cone;
        if let Some(c) = st.growth {
            constraints.push(c);
        }
    }
    let hp_tol = 1e-12;
    if min_hpg < -hp_tol {
        let (rho, _) = per_xi.iter().flatten().find(|(_, s)| s.hpg < -hp_tol).expect("witness exists");
        return Err(WeightError::CertificationFailed { point: *rho, reason: format!("H_pG = {min_hpg:e} < 0") });
    }
    if !(min_ratio > 0.0) {
        return Err(WeightError::CertificationFailed {
            point: worst_point.unwrap_or(PhaseSpacePoint::new2([0.0; 2], [0.0; 2])),
            reason: format!("escape ratio {min_ratio:e} not positive"),
        });
    }

    // Smallest K on the lattice whose required M₂ stays below the cap.
    let log_cap = cert.m2_cap().ln();
    let mut found = None;
    let steps = (cert.k_max / cert.k_step).round() as usize;
    for i in 0..=steps {
        let k = i as f64 * cert.k_step;
        let need = constraints.iter().map(|(a, lj)| a - k * lj).fold(f64::NEG_INFINITY, f64::max);
        if need <= log_cap {
            found = Some((k, need.exp()));
            break;
        }
    }
    let Some((k_exp, m2)) = found else {
        return Err(WeightError::CertificationFailed {
            point: PhaseSpacePoint::new2([0.0; 2], [grid.xi1.last().copied().unwrap_or(0.0), 0.0]),
            reason: format!("no K ≤ {} with M₂ ≤ {:e}", cert.k_max, cert.m2_cap()),
        });
    };

    // Cross-checks on a thinned subset; the stride must not alias with the
    // inner axes or every kept point lands on the same edge.
    let sides = [grid.slope.len(), grid.x1.len(), grid.x2.len()];
    let stride = [7, 11, 13, 17, 19].into_iter().find(|p| sides.iter().all(|s| s % p != 0)).unwrap_or(23);
    let sub: Vec<PhaseSpacePoint> = per_xi
        .iter()
        .flatten()
        .map(|(rho, _)| *rho)
        .enumerate()
        .filter(|(i, rho)| i % stride == 0 && weight_phi(rho, params.delta) > 0.0)
        .map(|(_, rho)| rho)
        .collect();
    let fd_errors: Vec<f64> = sub.par_iter().map(|rho| fd_gradient_error(rho, params)).collect();
    let fd_max = fd_errors.into_iter().fold(0.0, f64::max);
    let proxies: Vec<Vec<(String, f64)>> = sub.par_iter().map(|rho| seminorm_proxies(rho, params)).collect();
    let mut seminorms = BTreeMap::new();
    for (key, v) in proxies.into_iter().flatten() {
        let e = seminorms.entry(key).or_insert(0.0f64);
        *e = e.max(v);
    }

    Ok(WeightReport {
        eps: params.eps,
        delta: params.delta,
        grid_size: grid.len(),
        min_escape_ratio: min_ratio,
        min_hp_g: min_hpg,
        log_bound_const: log_bound,
        m2,
        k_exp,
        phi_ineq_const: phi_c1,
        min_hp_phi_term: min_term,
        fd_max_rel_error: fd_max,
        support_in_cone: support_ok,
        seminorms,
    })
}

/// Largest violations of the scalar inequalities for q_ε on a log grid, each
/// measured relative to max(1, |rhs|). Nonpositive means the inequality held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QInequalities {
    pub eps: f64,
    pub samples: usize,
    /// Lower and upper logarithmic sandwich of q_ε.
    pub sandwich: f64,
    /// ξ₁q' ≥ min(ξ₁, 1/ε).
    pub lower_line: f64,
    /// ξ₁q' ≥ ¼ξ₁⁻¹q².
    pub quadratic: f64,
}

impl QInequalities {
    pub fn worst(&self) -> f64 {
        self.sandwich.max(self.lower_line).max(self.quadratic)
    }
}

/// Samples the q_ε inequalities at `n` log-spaced ξ₁ in [xi_min, xi_max].
pub fn check_q_inequalities(eps: f64, xi_min: f64, xi_max: f64, n: usize) -> QInequalities {
    let (lo, hi) = (xi_min.ln(), xi_max.ln());
    let mut out = QInequalities {
        eps,
        samples: n,
        sandwich: f64::NEG_INFINITY,
        lower_line: f64::NEG_INFINITY,
        quadratic: f64::NEG_INFINITY,
    };
    let viol = |lhs: f64, rhs: f64| (rhs - lhs) / rhs.abs().max(1.0);
    for i in 0..n {
        let t = (lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).exp();
        let q = q_eps(t, eps);
        let tq = t * q_eps_prime(t, eps);
        let (below, above) = if eps * t <= 1.0 {
            (t, t)
        } else {
            let l = (eps * t).ln();
            ((1.0 + l) / eps, (2.0 + l) / eps)
        };
        out.sandwich = out.sandwich.max(viol(q, below)).max(viol(above, q));
        out.lower_line = out.lower_line.max(viol(tq, t.min(1.0 / eps)));
        out.quadratic = out.quadratic.max(viol(tq, 0.25 * q * q / t));
    }
    out
}

/// Reports across an ε sweep together with the cross-ε spreads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub reports: Vec<WeightReport>,
    pub failures: Vec<(f64, String)>,
    /// max/min of min_escape_ratio over the certified ε.
    pub escape_ratio_spread: f64,
    /// Largest max/min over ε among the seminorm proxies.
    pub seminorm_spread: f64,
    pub smallest_certified_eps: Option<f64>,
}

pub fn verify_sweep(
    eps_values: &[f64],
    delta: f64,
    grid: &EscapeGrid,
    cert: &GrowthCertificateSpec,
) -> Result<SweepReport, WeightError> {
    let symbol = SymbolSpec::normal_form(1);
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for &eps in eps_values {
        let params = WeightParams::new(eps, delta)?;
        match verify_escape(&symbol, &params, grid, cert) {
            Ok(r) => reports.push(r),
            Err(e @ WeightError::CertificationFailed { .. }) => failures.push((eps, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let spread = |vals: Vec<f64>| {
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if vals.is_empty() { f64::NAN } else { hi / lo }
    };
    let escape_ratio_spread = spread(reports.iter().map(|r| r.min_escape_ratio).collect());
    let keys: Vec<String> = reports.first().map(|r| r.seminorms.keys().cloned().collect()).unwrap_or_default();
    let seminorm_spread = keys
        .iter()
        .map(|k| spread(reports.iter().map(|r| r.seminorms[k]).collect()))
        .fold(if keys.is_empty() { f64::NAN } else { 1.0 }, f64::max);
    let smallest_certified_eps = reports.iter().map(|r| r.eps).fold(None, |a: Option<f64>, e| Some(a.map_or(e, |a| a.min(e))));
    Ok(SweepReport { reports, failures, escape_ratio_spread, seminorm_spread, smallest_certified_eps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(-1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(-2.5), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        for i in 0..400 {
            let t = -2.5 + 5.0 * i as f64 / 399.0;
            assert!((0.0..=1.0).contains(&chi(t)));
            assert!(t * chi_prime(t) <= 0.0);
        }
    }

    #[test]
    fn chi_prime_matches_differences() {
        for i in 1..50 {
            let t = 1.0 + i as f64 / 50.0;
            for t in [t, -t] {
                let h = 1e-6;
                let fd = (chi(t + h) - chi(t - h)) / (2.0 * h);
                assert!((fd - chi_prime(t)).abs() < 1e-7, "t = {t}");
            }
        }
    }

    #[test]
    fn q_linear_below_cutoff() {
        for eps in [0.5, 0.125, 1.0 / 1024.0] {
            assert_eq!(q_eps(0.0, eps), 0.0);
            for t in [0.1, 1.0, 0.5 / eps, 1.0 / eps] {
                assert_eq!(q_eps(t, eps), t);
                assert_eq!(q_eps(-t, eps), -t);
            }
        }
    }

    #[test]
    fn q_log_sandwich_at_ten() {
        for eps in [0.25, 0.01] {
            let q = q_eps(10.0 / eps, eps);
            let l = 10f64.ln();
            assert!(q >= (1.0 + l) / eps && q <= (2.0 + l) / eps);
        }
    }

    #[test]
    fn q_continuous_across_band() {
        let eps = 0.1;
        for u in [1.0, 2.0] {
            let t = u / eps;
            let a = q_eps(t * (1.0 - 1e-12), eps);
            let b = q_eps(t * (1.0 + 1e-12), eps);
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn q_derivatives_match_differences() {
        let eps = 0.2;
        for i in 0..60 {
            let t = 3.0 + i as f64 * 0.2;
            let h = 1e-5;
            let fd = (q_eps(t + h, eps) - q_eps(t - h, eps)) / (2.0 * h);
            assert!((fd - q_eps_prime(t, eps)).abs() < 1e-7, "q' at {t}");
            let fd2 = (q_eps_prime(t + h, eps) - q_eps_prime(t - h, eps)) / (2.0 * h);
            assert!((fd2 - q_eps_second(t, eps)).abs() < 1e-6, "q'' at {t}");
        }
    }

    #[test]
    fn phi_examples() {
        let d = 0.1;
        for t in [0.2, 1.0, 50.0] {
            assert_eq!(weight_phi(&PhaseSpacePoint::new2([0.0; 2], [t, 0.0]), d), 1.0);
        }
        assert_eq!(weight_phi(&PhaseSpacePoint::new2([0.2, 0.0], [5.0, 0.0]), d), 0.0);
        assert_eq!(weight_phi(&PhaseSpacePoint::new2([-0.25, 0.0], [5.0, 0.0]), d), 0.0);
        let rho = PhaseSpacePoint::new2([0.1 * 1.5, 0.0], [0.4, 0.0]);
        let v = weight_phi(&rho, d);
        assert!(v > 0.0 && v <= 1.0);
        assert!(hp_phi_terms(&rho, d).iter().all(|t| *t >= 0.0));
    }

    #[test]
    fn g_examples() {
        let p = WeightParams::new(1.0 / 64.0, 0.1).unwrap();
        for t in [0.2, 1.0, 10.0, 64.0] {
            assert_eq!(weight_g(&PhaseSpacePoint::new2([0.0; 2], [t, 0.0]), &p), t);
        }
        let g = weight_g(&PhaseSpacePoint::new2([0.0; 2], [std::f64::consts::E.powi(2) / p.eps, 0.0]), &p);
        assert!(g >= 3.0 / p.eps && g <= 4.0 / p.eps);
        assert_eq!(weight_g(&PhaseSpacePoint::new2([0.3, 0.0], [10.0, 0.0]), &p), 0.0);
    }

    #[test]
    fn hp_g_vanishes_where_g_is_linear() {
        // Where Φ ≡ 1 and q = ξ₁, ξ·G_ξ − G = 0 and H_pG = ξ₁.
        let p = WeightParams::new(0.01, 0.1).unwrap();
        let rho = PhaseSpacePoint::new2([0.05, 0.0], [30.0, 0.0]);
        let j = weight_g_jet(&rho, &p);
        assert_eq!(rho.xi[0] * j.dxi[0] + rho.xi[1] * j.dxi[1] - j.value, 0.0);
        assert_eq!(hp_g(&rho, &p), 30.0);
    }

    #[test]
    fn q_inequalities_hold() {
        for eps in [0.125, 1.0 / 1024.0] {
            let r = check_q_inequalities(eps, 0.1, 1e6, 200);
            assert!(r.worst() <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(WeightParams::new(0.0, 0.1).is_err());
        assert!(WeightParams::new(2.0, 0.1).is_err());
        assert!(WeightParams::new(0.1, 0.0).is_err());
    }

    #[test]
    fn verify_rejects_other_symbols() {
        let p = WeightParams::new(0.125, 0.1).unwrap();
        let g = EscapeGrid::log_spaced(0.1, 1e3, 8, 3);
        let c = GrowthCertificateSpec::default();
        assert!(matches!(verify_escape(&SymbolSpec::keldysh(), &p, &g, &c), Err(WeightError::UnsupportedSymbol(_))));
        assert!(matches!(
            verify_escape(&SymbolSpec::normal_form(2), &p, &g, &c),
            Err(WeightError::UnsupportedSymbol(_))
        ));
    }
}
