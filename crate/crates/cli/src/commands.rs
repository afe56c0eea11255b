//! One driver per subcommand. Each writes its artifacts and returns one check
//! per acceptance criterion it covers.

use std::f64::consts::PI;

use microlocal::fbi::{
    effective_psi, entire_test_family, roundtrip, sample_transform, Axis, FbiParams, SampledFunction,
};
use microlocal::model1d::{
    derivative_growth, energy_matrix, uniform_bound_experiment, ModelParams, ModelSource, ENERGY_L, ENERGY_N,
};
use microlocal::numerics::airy::AI0;
use microlocal::phase_space::{characteristic_angles, cylinder_field, SymbolKind};
use microlocal::weights::{check_q_inequalities, verify_sweep, weight_g, EscapeGrid, GrowthCertificateSpec, WeightParams};
use microlocal::wfa::{abs_gaussian, airy_profile, default_params, step_gaussian, wfa_scan, ScanConfig, Verdict};
use microlocal::phase_space::PhaseSpacePoint;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{key, Key, Kind, Params};
use crate::output::{num, Artifacts};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn from(name: &str, outcome: Result<String, String>) -> Self {
        match outcome {
            Ok(detail) => Self { name: name.into(), pass: true, detail },
            Err(detail) => Self { name: name.into(), pass: false, detail },
        }
    }
}

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lin(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn eps_range(lo_exp: usize, hi_exp: usize) -> Vec<f64> {
    (lo_exp..=hi_exp).map(|k| 2f64.powi(-(k as i32))).collect()
}

// figure1

pub const FIGURE1_KEYS: &[Key] = &[
    key("x1_min", Kind::Real, "-2"),
    key("x1_max", Kind::Real, "2"),
    key("n_x1", Kind::Count, "81"),
    key("n_theta", Kind::Count, "72"),
];

fn operator_name(kind: SymbolKind) -> &'static str {
    match kind {
        SymbolKind::Keldysh => "keldysh",
        SymbolKind::Tricomi => "tricomi",
        SymbolKind::NormalForm { .. } => "normal_form",
    }
}

pub fn figure1(p: &Params, out: &mut Artifacts) -> std::io::Result<Vec<Check>> {
    let xs = lin(p.real("x1_min"), p.real("x1_max"), p.count("n_x1"));
    let kinds = [SymbolKind::Keldysh, SymbolKind::Tricomi];
    let header = ["operator", "x1", "theta", "dtheta_dt", "dx1_dt"];
    let row = |kind: SymbolKind, x1: f64, th: f64| {
        let (dth, dx1) = cylinder_field(kind, x1, th);
        vec![operator_name(kind).to_string(), num(x1), num(th), num(dth), num(dx1)]
    };
    let mut curves = Vec::new();
    for kind in kinds {
        for &x1 in &xs {
            for th in characteristic_angles(kind, x1) {
                curves.push(row(kind, x1, th));
            }
        }
    }
    out.csv("figure1_characteristic.csv", &[], &header, &curves)?;
    let n_theta = p.count("n_theta").max(1);
    let mut arrows = Vec::new();
    for kind in kinds {
        for &x1 in &xs {
            for j in 0..n_theta {
                arrows.push(row(kind, x1, 2.0 * PI * j as f64 / n_theta as f64));
            }
        }
    }
    out.csv("figure1_field.csv", &[], &header, &arrows)?;

    let outcome = (|| -> Outcome {
        let at_zero = characteristic_angles(SymbolKind::Keldysh, 0.0);
        ensure(!at_zero.is_empty() && at_zero.iter().all(|t| *t == 0.0 || *t == PI), || {
            format!("Keldysh angles at x₁ = 0: {at_zero:?}")
        })?;
        let bad = xs.iter().find(|&&x| x > 0.0 && !characteristic_angles(SymbolKind::Tricomi, x).is_empty());
        ensure(bad.is_none(), || format!("Tricomi characteristic set nonempty at x₁ = {}", bad.unwrap()))?;
        for th in [0.0, PI] {
            let (_, dx1) = cylinder_field(SymbolKind::Keldysh, 0.0, th);
            ensure(dx1 == 0.0, || format!("Keldysh flow leaves Λ at θ = {th}: dx₁/dt = {dx1}"))?;
        }
        Ok(format!("{} characteristic rows, {} field rows", curves.len(), arrows.len()))
    })();
    Ok(vec![Check::from("figure1", outcome)])
}

// airy-moments

pub const AIRY_KEYS: &[Key] = &[key("k_max", Kind::Count, "6")];

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Writes the (k, D^k u(0), step ratio, factorial ratio) table.
fn derivative_table(k_max: usize, out: &mut Artifacts) -> std::io::Result<Outcome> {
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    for k in 0..=k_max as u32 {
        match derivative_growth(k) {
            Ok(v) => vals.push(v),
            Err(e) => return Ok(Err(format!("k = {k}: {e}"))),
        }
        let v = vals[k as usize];
        let step = if k == 0 { String::new() } else { num(v / vals[k as usize - 1]) };
        rows.push(vec![k.to_string(), num(v), step, num(v / (AI0 * factorial(2 * k)))]);
    }
    out.csv("derivative_growth.csv", &[], &["k", "Dk_u0", "ratio", "factorial_ratio"], &rows)?;
    Ok((|| -> Outcome {
        for (k, v) in vals.iter().enumerate() {
            let k = k as u32;
            let r = v / (AI0 * factorial(2 * k));
            ensure((r - 1.0).abs() <= 1e-6, || format!("k = {k}: factorial ratio {r}"))?;
            if k > 0 {
                let step = v / vals[k as usize - 1];
                let want = (2 * k * (2 * k - 1)) as f64;
                ensure((step / want - 1.0).abs() <= 1e-6, || format!("k = {k}: ratio {step}, expected {want}"))?;
            }
        }
        Ok(format!("{0}/{0} ratios within tolerance", vals.len()))
    })())
}

pub fn airy_moments(p: &Params, out: &mut Artifacts) -> std::io::Result<Vec<Check>> {
    Ok(vec![Check::from("derivative_growth", derivative_table(p.count("k_max"), out)?)])
}

// weights-verify

pub const WEIGHT_KEYS: &[Key] = &[
    key("delta", Kind::Real, "0.1"),
    key("eps_exp_min", Kind::Count, "3"),
    key("eps_exp_max", Kind::Count, "10"),
    key("n_xi", Kind::Count, "200"),
    key("n_side", Kind::Count, "7"),
    key("xi_max", Kind::Real, "1e5"),
    key("m1", Kind::Real, "10"),
    key("gamma", Kind::Real, "1"),
    key("psi_eps", Kind::Real, "0.015625"),
    key("theta", Kind::Real, "0.1"),
];

/// Plateau and q_ε-band points where θ|∇G| stays small.
const PSI_POINTS: [(f64, f64); 5] = [(0.0, 1.0), (0.05, 2.0), (-0.05, 8.0), (0.0, 30.0), (0.0, 90.0)];

pub fn weights_verify(p: &Params, out: &mut Artifacts) -> std::io::Result<Vec<Check>> {
    let eps = eps_range(p.count("eps_exp_min"), p.count("eps_exp_max"));
    let delta = p.real("delta");
    let cert = GrowthCertificateSpec { m1: p.real("m1"), gamma: p.real("gamma"), ..GrowthCertificateSpec::default() };
    let grid = EscapeGrid::log_spaced(delta, p.real("xi_max"), p.count("n_xi"), p.count("n_side"));
    let q: Vec<_> = eps.iter().map(|&e| check_q_inequalities(e, 1e-2, 1e3 / e, 200)).collect();
    let rows: Vec<Vec<String>> =
        q.iter().map(|r| vec![num(r.eps), num(r.sandwich), num(r.lower_line), num(r.quadratic)]).collect();
    out.csv("q_inequalities.csv", &[], &["eps", "sandwich", "lower_line", "quadratic"], &rows)?;
    let sweep = verify_sweep(&eps, delta, &grid, &cert);
    if let Ok(s) = &sweep {
        out.json("weights_report.json", &s.reports)?;
    }
    let cert_outcome = (|| -> Outcome {
        for r in &q {
            ensure(r.worst() <= 1e-12, || format!("q_ε inequalities at ε = {}: worst {:e}", r.eps, r.worst()))?;
        }
        let s = sweep.as_ref().map_err(|e| e.to_string())?;
        ensure(s.failures.is_empty(), || format!("uncertified ε: {:?}", s.failures))?;
        ensure(!s.reports.is_empty(), || "no ε in the sweep".into())?;
        for r in &s.reports {
            ensure(r.min_hp_g >= 0.0, || format!("ε = {}: min H_pG = {:e}", r.eps, r.min_hp_g))?;
            ensure(r.min_escape_ratio > 0.0, || format!("ε = {}: min_escape_ratio = {:e}", r.eps, r.min_escape_ratio))?;
            ensure(r.k_exp <= 1.5 * cert.gamma * cert.m1, || format!("ε = {}: K = {}", r.eps, r.k_exp))?;
        }
        ensure(s.escape_ratio_spread <= 2.0, || format!("min_escape_ratio varies by {}", s.escape_ratio_spread))?;
        let k = s.reports.iter().map(|r| r.k_exp).fold(0.0, f64::max);
        Ok(format!("{} ε certified, min_escape_ratio spread {:.4}, max K {k}", s.reports.len(), s.escape_ratio_spread))
    })();

    let theta = p.real("theta");
    let mut psi_rows = Vec::new();
    let psi_outcome = (|| -> Outcome {
        let w = WeightParams::new(p.real("psi_eps"), delta).map_err(|e| e.to_string())?;
        for (x, xi) in PSI_POINTS {
            let rho = PhaseSpacePoint::new1(x, xi);
            let g = weight_g(&rho, &w);
            let r = |t: f64| -> Result<f64, String> {
                Ok((effective_psi(&rho, &w, t).map_err(|e| format!("({x}, {xi}): {e}"))?.value - t * g).abs())
            };
            let (full, half) = (r(theta)?, r(0.5 * theta)?);
            psi_rows.push(vec![num(x), num(xi), num(g), num(full), num(half), num(half / full)]);
            let q = half / full;
            ensure((0.15..=0.45).contains(&q), || format!("({x}, {xi}): r(θ/2)/r(θ) = {q}"))?;
        }
        Ok(format!("{0}/{0} points with r(θ/2)/r(θ) in [0.15, 0.45]", PSI_POINTS.len()))
    })();
    out.csv("effective_weight.csv", &[], &["x", "xi", "G", "r_theta", "r_half_theta", "ratio"], &psi_rows)?;
    Ok(vec![Check::from("weight_certification", cert_outcome), Check::from("effective_weight", psi_outcome)])
}

// model1d

pub const MODEL_KEYS: &[Key] = &[
    key("a_re", Kind::Real, "1"),
    key("a_im", Kind::Real, "1"),
    key("tau", Kind::Real, "2"),
    key("k", Kind::Real, "6"),
    key("n", Kind::Count, "4096"),
    key("l", Kind::Real, "20"),
    key("eps_exp_min", Kind::Count, "2"),
    key("eps_exp_max", Kind::Count, "7"),
    key("energy_k", Kind::Real, "1"),
    key("k_max", Kind::Count, "6"),
];

pub fn model1d(p: &Params, out: &mut Artifacts) -> std::io::Result<Vec<Check>> {
    let eps = eps_range(p.count("eps_exp_min"), p.count("eps_exp_max"));
    let a_values = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(0.0, -2.0)];
    let matrix = energy_matrix(&ModelSource { k: p.real("energy_k") }, &a_values, &[1.0, 2.0], &eps, ENERGY_N, ENERGY_L);
    if let Ok(rows) = &matrix {
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![num(r.a.re), num(r.a.im), num(r.tau), num(r.eps), num(r.lhs), num(r.rhs), num(r.rel_mismatch), num(r.conjugation_residual)]
            })
            .collect();
        let header = ["a_re", "a_im", "tau", "eps", "lhs", "rhs", "rel_mismatch", "conjugation_residual"];
        out.csv("energy_matrix.csv", &[], &header, &csv_rows)?;
    }
    let energy = (|| -> Outcome {
        let rows = matrix.as_ref().map_err(|e| e.to_string())?;
        let worst = rows.iter().map(|r| r.rel_mismatch).fold(0.0, f64::max);
        ensure(worst <= 1e-6, || format!("relative mismatch {worst:e} over {} configurations", rows.len()))?;
        Ok(format!("{} configurations, worst relative mismatch {worst:.2e}", rows.len()))
    })();

    let table = ModelParams::new(Complex64::new(p.real("a_re"), p.real("a_im")), p.real("tau"), eps.clone())
        .and_then(|params| uniform_bound_experiment(&params, &ModelSource { k: p.real("k") }, p.count("n"), p.real("l")));
    if let Ok(t) = &table {
        let rows: Vec<Vec<String>> = t.rows.iter().map(|r| vec![num(r.eps), num(r.norm_v_hat), num(t.bound())]).collect();
        let pre = [format!("a={} tau={} M={} C0={} C1={}", t.a, t.tau, num(t.m), num(t.c0), num(t.c1))];
        out.csv("uniform_bound.csv", &pre, &["eps", "norm_v_hat", "bound_C0_plus_C1"], &rows)?;
    }
    let bound = (|| -> Outcome {
        let t = table.as_ref().map_err(|e| e.to_string())?;
        ensure((t.plateau_ratio() - 1.0).abs() <= 0.05, || format!("plateau ratio {}", t.plateau_ratio()))?;
        let top = t.rows.iter().map(|r| r.norm_v_hat).fold(0.0, f64::max);
        ensure(top <= t.bound(), || format!("max ‖v̂_ε‖ = {top} exceeds C₀ + C₁ = {}", t.bound()))?;
        Ok(format!("plateau ratio {:.6}, max {top:.6e} ≤ C₀ + C₁ = {:.6e}", t.plateau_ratio(), t.bound()))
    })();
    let growth = derivative_table(p.count("k_max"), out)?;
    Ok(vec![
        Check::from("energy_identity", energy),
        Check::from("uniform_bound", bound),
        Check::from("derivative_growth", growth),
    ])
}

// wfa-scan

pub const WFA_KEYS: &[Key] = &[
    key("function", Kind::Text, "gaussian"),
    key("x_min", Kind::Real, "-1"),
    key("x_max", Kind::Real, "1"),
    key("n_x", Kind::Count, "5"),
    key("b_min", Kind::Real, "0.01"),
    key("airy_x2", Kind::Real, "0"),
];

#[derive(Serialize)]
struct WfaRow {
    x0: f64,
    omega: f64,
    verdict: &'static str,
    rate: f64,
    r2: f64,
}

pub fn wfa(p: &Params, out: &mut Artifacts) -> std::io::Result<Vec<Check>> {
    let name = p.text("function").to_string();
    let u: SampledFunction = match name.as_str() {
        "gaussian" => SampledFunction::gaussian(1),
        "abs" => abs_gaussian(),
        "step" => step_gaussian(),
        "airy" => airy_profile(p.real("airy_x2")),
        other => {
            let detail = format!("unknown function {other:?} (gaussian, abs, step, airy)");
            return Ok(vec![Check { name: "wave_front_dichotomy".into(), pass: false, detail }]);
        }
    };
    let xs: Vec<[f64; 2]> = lin(p.real("x_min"), p.real("x_max"), p.count("n_x")).into_iter().map(|x| [x, 0.0]).collect();
    let config = ScanConfig { b_min: p.real("b_min"), ..ScanConfig::default() };
    let scanned = default_params(1)
        .map_err(|e| e.to_string())
        .and_then(|fp| wfa_scan(&u, &xs, &[[1.0, 0.0], [-1.0, 0.0]], &fp, &config).map_err(|e| e.to_string()));
    if let Ok(vs) = &scanned {
        let rows: Vec<WfaRow> = vs
            .iter()
            .map(|v| WfaRow {
                x0: v.point.x[0],
                omega: v.point.xi[0],
                verdict: match v.verdict {
                    Verdict::NotInWFa { .. } => "NotInWFa",
                    Verdict::InWFa => "InWFa",
                    Verdict::Inconclusive => "Inconclusive",
                },
                rate: v.fit.rate,
                r2: v.fit.r_squared,
            })
            .collect();
        out.json("wfa_report.json", &rows)?;
    }
    let outcome = (|| -> Outcome {
        let vs = scanned.as_ref().map_err(|e| e.clone())?;
        for v in vs {
            let x = v.point.x[0];
            let not_in = matches!(v.verdict, Verdict::NotInWFa { .. });
            match name.as_str() {
                "gaussian" => ensure(not_in, || format!("Gaussian at x₀ = {x}: {:?}", v.verdict))?,
                "abs" | "step" => {
                    let inside = v.verdict == Verdict::InWFa;
                    ensure(inside == (x == 0.0), || format!("{name} at x₀ = {x}: {:?}", v.verdict))?
                }
                _ => ensure(x != 0.0 || !not_in, || format!("Airy profile at the characteristic point: {:?}", v.verdict))?,
            }
        }
        Ok(format!("{name}: {} rays consistent", vs.len()))
    })();
    Ok(vec![Check::from("wave_front_dichotomy", outcome)])
}

// fbi-roundtrip

pub const FBI_KEYS: &[Key] = &[
    key("h", Kind::Real, "0.1"),
    key("y_min", Kind::Real, "-3"),
    key("y_max", Kind::Real, "3"),
    key("n_y", Kind::Count, "13"),
    key("x_half", Kind::Real, "6"),
    key("x_step", Kind::Real, "0.05"),
    key("xi_half", Kind::Real, "7"),
    key("xi_step", Kind::Real, "0.08"),
    key("dump_grid", Kind::Count, "1"),
];

pub fn fbi_roundtrip(p: &Params, out: &mut Artifacts) -> std::io::Result<Vec<Check>> {
    let x_axis = Axis::symmetric(p.real("x_half"), p.real("x_step"));
    let xi_axis = Axis::symmetric(p.real("xi_half"), p.real("xi_step"));
    let ys = lin(p.real("y_min"), p.real("y_max"), p.count("n_y"));
    let h = p.real("h");
    let fp = match FbiParams::new(h, 1) {
        Ok(fp) => fp,
        Err(e) => return Ok(vec![Check { name: "fbi_left_inverse".into(), pass: false, detail: e.to_string() }]),
    };
    let mut rows = Vec::new();
    let mut first_err = None;
    for (name, u) in entire_test_family() {
        match roundtrip(&u, x_axis, xi_axis, &ys, &fp) {
            Ok(r) => rows.push(vec![name.to_string(), num(r.sup_error), num(r.sup_norm), num(r.rel_error), r.points.to_string()]),
            Err(e) => {
                first_err.get_or_insert(format!("{name}: {e}"));
            }
        }
    }
    out.csv("roundtrip.csv", &[], &["function", "sup_error", "sup_norm", "rel_error", "points"], &rows)?;
    if p.count("dump_grid") != 0 {
        if let Ok(g) = sample_transform(&SampledFunction::gaussian(1), x_axis, xi_axis, &fp) {
            let grid_rows: Vec<Vec<String>> = (0..g.len())
                .map(|i| {
                    let rho = g.point(i);
                    let v = g.values[i];
                    vec![num(rho.x[0]), num(rho.xi[0]), num(v.re), num(v.im), num(v.norm())]
                })
                .collect();
            out.csv("transform_grid.csv", &[format!("h={h} n=1 theta=0")], &["x", "xi", "re", "im", "abs"], &grid_rows)?;
        }
    }
    let outcome = (|| -> Outcome {
        if let Some(e) = &first_err {
            return Err(e.clone());
        }
        let mut worst = 0.0f64;
        for r in &rows {
            let e: f64 = r[1].parse().unwrap_or(f64::INFINITY);
            worst = worst.max(e);
            ensure(e <= 1e-5, || format!("{}: sup error {e:e}", r[0]))?;
        }
        Ok(format!("{} functions, worst sup error {worst:.2e}", rows.len()))
    })();
    Ok(vec![Check::from("fbi_left_inverse", outcome)])
}
