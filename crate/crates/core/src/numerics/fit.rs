//! Log-linear versus log-log regression of decaying magnitudes.

use serde::Serialize;
use thiserror::Error;

/// Minimum r² for a model to be accepted.
pub const R2_THRESHOLD: f64 = 0.98;
const MAGNITUDE_FLOOR: f64 = 1e-300;
const MIN_SAMPLES: usize = 8;
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayModel {
    Exponential,
    Polynomial,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// b of e^{−bt} (exponential) or P of t^{−P} (polynomial); for Flat, the
    /// exponential slope estimate.
    pub rate: f64,
    /// r² of the reported model; for Flat, the better of the two.
    pub r_squared: f64,
    pub sample_count: usize,
    pub r2_exponential: f64,
    pub r2_polynomial: f64,
    /// max − min of log magnitude over the samples.
    pub log_range: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    InsufficientSamples(usize),
    #[error("invalid sample {index}: {reason}")]
    InvalidSamples { index: usize, reason: &'static str },
}

struct Line {
    slope: f64,
    r2: f64,
}

fn regress(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    // A constant response carries no trend to explain.
    let r2 = if syy <= 1e-24 * (1.0 + my * my) * n {
        0.0
    } else {
        let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| {
            let e = y - (my + slope * (x - mx));
            e * e
        }).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Line { slope, r2 }
}

/// Fits `(t, |Tu|)` samples to e^{−bt} and t^{−P} and keeps the better model.
///
/// Ties go to the polynomial model, so analyticity is never certified on a
/// coin flip.
pub fn fit_decay(samples: &[(f64, f64)]) -> Result<DecayFit, FitError> {
    if samples.len() < MIN_SAMPLES {
        return Err(FitError::InsufficientSamples(samples.len()));
    }
    for (i, &(t, m)) in samples.iter().enumerate() {
        if !(t.is_finite() && t > 0.0) {
            return Err(FitError::InvalidSamples { index: i, reason: "t must be finite and positive" });
        }
        if !(m.is_finite() && m >= 0.0) {
            return Err(FitError::InvalidSamples { index: i, reason: "magnitude must be finite and non-negative" });
        }
        if i > 0 && t <= samples[i - 1].0 {
            return Err(FitError::InvalidSamples { index: i, reason: "t must be strictly increasing" });
        }
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let log_ts: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let logs: Vec<f64> = samples.iter().map(|s| s.1.max(MAGNITUDE_FLOOR).ln()).collect();
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let exp = regress(&ts, &logs);
    let poly = regress(&log_ts, &logs);
    let exp_ok = exp.r2 >= R2_THRESHOLD && -exp.slope > 0.0;
    let poly_ok = poly.r2 >= R2_THRESHOLD;
    let poly_wins = poly.r2 + TIE >= exp.r2;

    let (model, rate, r2) = if poly_ok && (poly_wins || !exp_ok) {
        (DecayModel::Polynomial, -poly.slope, poly.r2)
    } else if exp_ok {
        (DecayModel::Exponential, -exp.slope, exp.r2)
    } else {
        (DecayModel::Flat, -exp.slope, exp.r2.max(poly.r2))
    };
    Ok(DecayFit {
        model,
        rate,
        r_squared: r2,
        sample_count: samples.len(),
        r2_exponential: exp.r2,
        r2_polynomial: poly.r2,
        log_range: hi - lo,
    })
}
