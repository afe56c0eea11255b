//! Airy function Ai on the real line.
//!
//! Maclaurin series on the middle range, Poincaré asymptotics on both tails.

use std::f64::consts::{FRAC_PI_4, PI};

/// Ai(0).
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// −Ai'(0).
const AIP0: f64 = 0.258_819_403_792_806_8;

const SERIES_MIN: f64 = -7.0;
const SERIES_MAX: f64 = 5.0;
const LOW_ACCURACY_BELOW: f64 = -30.0;

/// Value of Ai together with an accuracy flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValue {
    pub value: f64,
    /// Set when the argument lies below −30, where only the leading asymptotic
    /// terms are reliable.
    pub low_accuracy: bool,
}

/// Ai(t), the solution of y'' = t·y decaying as t → +∞.
pub fn airy_ai(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t > SERIES_MAX {
        asymptotic_positive(t)
    } else if t < SERIES_MIN {
        asymptotic_negative(-t)
    } else {
        series(t)
    }
}

/// Ai(t) with the low-accuracy flag for the far oscillatory tail.
pub fn airy_ai_flagged(t: f64) -> AiryValue {
    AiryValue {
        value: airy_ai(t),
        low_accuracy: t < LOW_ACCURACY_BELOW,
    }
}

/// Ai(−t), the solution of y'' + t·y = 0 with y(0) = Ai(0).
pub fn airy_ai_reflected(t: f64) -> f64 {
    airy_ai(-t)
}

fn series(z: f64) -> f64 {
    let z3 = z * z * z;
    let mut f_term = 1.0;
    let mut g_term = z;
    let mut f = f_term;
    let mut g = g_term;
    for k in 1..200 {
        let kf = k as f64;
        f_term *= z3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        g_term *= z3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        f += f_term;
        g += g_term;
        if f_term.abs() <= 1e-18 * f.abs().max(1e-300) && g_term.abs() <= 1e-18 * g.abs().max(1e-300) {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

/// u_k coefficients of the Airy asymptotic series.
fn u_coeffs(n: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(n);
    u.push(1.0);
    for k in 1..n {
        let kf = k as f64;
        let prev = u[k - 1];
        u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf));
    }
    u
}

fn asymptotic_positive(z: f64) -> f64 {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let u = u_coeffs(60);
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut p = 1.0;
    for (k, uk) in u.iter().enumerate() {
        let term = uk * p;
        if term.abs() > last {
            break;
        }
        sum += if k % 2 == 0 { term } else { -term };
        last = term.abs();
        if last < 1e-17 * sum.abs() {
            break;
        }
        p /= zeta;
    }
    (-zeta).exp() / (2.0 * PI.sqrt() * z.powf(0.25)) * sum
}

fn asymptotic_negative(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let u = u_coeffs(80);
    let mut even = 0.0;
    let mut odd = 0.0;
    let mut last = f64::INFINITY;
    let mut p = 1.0;
    for (k, uk) in u.iter().enumerate() {
        let term = uk * p;
        if term.abs() > last {
            break;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            even += sign * term;
        } else {
            odd += sign * term;
        }
        last = term.abs();
        if last < 1e-17 {
            break;
        }
        p /= zeta;
    }
    let phase = zeta - FRAC_PI_4;
    (phase.cos() * even + phase.sin() * odd) / (PI.sqrt() * x.powf(0.25))
}
