//! One PASS/FAIL line per acceptance criterion, with wall-clock time against
//! its budget. Run with `--nocapture` to see the lines.

use std::time::{Duration, Instant};

use microlocal::fbi::{default_inverse_axes, effective_psi, entire_test_family, roundtrip, FbiParams, SampledFunction};
use microlocal::model1d::{
    derivative_growth, energy_matrix, tricomi_residual, uniform_bound_experiment, ModelParams, ModelSource, DEFAULT_L,
    DEFAULT_N, ENERGY_L, ENERGY_N,
};
use microlocal::numerics::airy::AI0;
use microlocal::phase_space::{eval_symbol, flow, PhaseSpacePoint, SymbolSpec};
use microlocal::weights::{check_q_inequalities, verify_sweep, weight_g, EscapeGrid, GrowthCertificateSpec, WeightParams};
use microlocal::wfa::{abs_gaussian, airy_profile, default_params, scan_ray, wfa_scan, ScanConfig, Verdict};
use num_complex::Complex64;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn derivative_growth_check() -> Check {
    let vals: Vec<f64> = (0..=7).map(|k| derivative_growth(k).map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    let mut worst = 0.0f64;
    for k in 0..=6u32 {
        let r = vals[k as usize] / (AI0 * factorial(2 * k));
        worst = worst.max((r - 1.0).abs());
        ensure((r - 1.0).abs() <= 1e-6, || format!("k = {k}: ratio {r}"))?;
        let step = vals[k as usize + 1] / vals[k as usize];
        let want = ((2 * k + 2) * (2 * k + 1)) as f64;
        worst = worst.max((step / want - 1.0).abs());
        ensure((step / want - 1.0).abs() <= 1e-6, || format!("k = {k}: step ratio {step} vs {want}"))?;
    }
    Ok(format!("7/7 factorial ratios, worst rel {worst:.1e}"))
}

fn tricomi_check() -> Check {
    let mut worst = 0.0f64;
    for (x1, x2) in [(0.5, 0.2), (-0.5, 0.1), (1.0, -0.3), (-1.5, 0.4), (2.0, 1.0)] {
        let r = tricomi_residual(x1, x2, 0.02).map_err(|e| e.to_string())?;
        worst = worst.max(r.residual / r.scale);
        ensure(r.residual <= 1e-4 * r.scale, || format!("({x1}, {x2}): residual {:e}, scale {:e}", r.residual, r.scale))?;
    }
    Ok(format!("5/5 points, worst residual/scale {worst:.1e}"))
}

fn roundtrip_check() -> Check {
    let p = FbiParams::new(0.1, 1).map_err(|e| e.to_string())?;
    let (xa, ka) = default_inverse_axes();
    let ys: Vec<f64> = (0..=12).map(|i| -3.0 + 0.5 * i as f64).collect();
    let mut worst = 0.0f64;
    for (name, u) in entire_test_family() {
        let r = roundtrip(&u, xa, ka, &ys, &p).map_err(|e| format!("{name}: {e}"))?;
        worst = worst.max(r.sup_error);
        ensure(r.sup_error <= 1e-5, || format!("{name}: sup error {:e}", r.sup_error))?;
    }
    Ok(format!("5/5 functions, worst sup error {worst:.1e}"))
}

fn weights_check() -> Check {
    let eps: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
    for &e in &eps {
        let q = check_q_inequalities(e, 1e-2, 1e3 / e, 200);
        ensure(q.worst() <= 1e-12, || format!("q inequalities at ε = {e}: {q:?}"))?;
    }
    let cert = GrowthCertificateSpec::default();
    let grid = EscapeGrid::log_spaced(0.1, 1e5, 200, 7);
    let s = verify_sweep(&eps, 0.1, &grid, &cert).map_err(|e| e.to_string())?;
    ensure(s.failures.is_empty(), || format!("uncertified: {:?}", s.failures))?;
    ensure(s.escape_ratio_spread <= 2.0, || format!("escape ratio spread {}", s.escape_ratio_spread))?;
    let mut k_max = 0.0f64;
    for r in &s.reports {
        ensure(r.min_hp_g >= 0.0, || format!("ε = {}: H_pG = {:e}", r.eps, r.min_hp_g))?;
        ensure(r.min_escape_ratio > 0.0, || format!("ε = {}: escape ratio {:e}", r.eps, r.min_escape_ratio))?;
        ensure(r.k_exp <= 1.5 * cert.gamma * cert.m1, || format!("ε = {}: K = {}", r.eps, r.k_exp))?;
        k_max = k_max.max(r.k_exp);
    }
    Ok(format!("{} ε certified, escape spread {:.4}, max K {k_max}", s.reports.len(), s.escape_ratio_spread))
}

fn effective_weight_check() -> Check {
    let w = WeightParams::new(1.0 / 64.0, 0.1).map_err(|e| e.to_string())?;
    let mut qs = Vec::new();
    for (x, xi) in [(0.0, 1.0), (0.05, 2.0), (-0.05, 8.0), (0.0, 30.0), (0.0, 90.0)] {
        let rho = PhaseSpacePoint::new1(x, xi);
        let g = weight_g(&rho, &w);
        let r = |theta: f64| -> Result<f64, String> {
            Ok((effective_psi(&rho, &w, theta).map_err(|e| e.to_string())?.value - theta * g).abs())
        };
        let q = r(0.05)? / r(0.1)?;
        ensure((0.15..=0.45).contains(&q), || format!("({x}, {xi}): r(θ/2)/r(θ) = {q}"))?;
        qs.push(q);
    }
    let lo = qs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = qs.iter().cloned().fold(0.0, f64::max);
    Ok(format!("5/5 points, ratios in [{lo:.3}, {hi:.3}]"))
}

fn energy_check() -> Check {
    let a = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(0.0, -2.0)];
    let rows = energy_matrix(&ModelSource { k: 1.0 }, &a, &[1.0, 2.0], &ModelParams::default_sweep(), ENERGY_N, ENERGY_L)
        .map_err(|e| e.to_string())?;
    ensure(rows.len() == 36, || format!("{} configurations", rows.len()))?;
    let worst = rows.iter().map(|r| r.rel_mismatch).fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("energy mismatch {worst:e}"))?;
    let p = ModelParams::new(Complex64::new(1.0, 1.0), 2.0, ModelParams::default_sweep()).map_err(|e| e.to_string())?;
    let t = uniform_bound_experiment(&p, &ModelSource::default(), DEFAULT_N, DEFAULT_L).map_err(|e| e.to_string())?;
    ensure((t.plateau_ratio() - 1.0).abs() <= 0.05, || format!("plateau ratio {}", t.plateau_ratio()))?;
    let top = t.rows.iter().map(|r| r.norm_v_hat).fold(0.0, f64::max);
    ensure(top <= t.bound(), || format!("‖v̂_ε‖ = {top} above C₀ + C₁ = {}", t.bound()))?;
    Ok(format!("36/36 mismatch ≤ {worst:.1e}, plateau ratio {:.6}, max {top:.2} ≤ {:.3e}", t.plateau_ratio(), t.bound()))
}

fn wave_front_check() -> Check {
    let p = default_params(1).map_err(|e| e.to_string())?;
    let c = ScanConfig::default();
    let dirs = [[1.0, 0.0], [-1.0, 0.0]];
    let probes: Vec<[f64; 2]> = [-1.3, -0.4, 0.0, 0.6, 1.7].iter().map(|&x| [x, 0.0]).collect();
    for v in wfa_scan(&SampledFunction::gaussian(1), &probes, &dirs, &p, &c).map_err(|e| e.to_string())? {
        ensure(matches!(v.verdict, Verdict::NotInWFa { .. }), || format!("Gaussian at {:?}: {:?}", v.point, v.verdict))?;
    }
    let xs: Vec<[f64; 2]> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|&x| [x, 0.0]).collect();
    for v in wfa_scan(&abs_gaussian(), &xs, &dirs, &p, &c).map_err(|e| e.to_string())? {
        let at_zero = v.point.x[0] == 0.0;
        ensure((v.verdict == Verdict::InWFa) == at_zero, || format!("|y|·Gaussian at {:?}: {:?}", v.point, v.verdict))?;
    }
    let airy = airy_profile(0.0);
    let mut seen = Vec::new();
    for w in dirs {
        let v = scan_ray(&airy, &[0.0, 0.0], &w, &p, &c).map_err(|e| e.to_string())?;
        ensure(!matches!(v.verdict, Verdict::NotInWFa { .. }), || format!("Airy profile along {w:?}: {:?}", v.verdict))?;
        seen.push(format!("{:?}", v.verdict));
    }
    Ok(format!("Gaussian 10/10 NotInWFa, |y|·Gaussian InWFa only at 0, Airy profile {}", seen.join("/")))
}

fn flow_check() -> Check {
    let keldysh = SymbolSpec::keldysh();
    let steps = 4096;
    let traj = flow(&keldysh, &PhaseSpacePoint::new2([0.0, 0.0], [1.0, 0.0]), 10.0, steps).map_err(|e| e.to_string())?;
    for (i, q) in traj.iter().enumerate() {
        let t = 10.0 * i as f64 / steps as f64;
        ensure(q.x[0].abs().max(q.xi[1].abs()) <= 1e-10, || format!("left Λ₊ at t = {t}"))?;
        ensure((q.xi[0] * (1.0 + t) - 1.0).abs() <= 1e-8, || format!("ξ₁({t}) = {}", q.xi[0]))?;
    }
    let minus = flow(&keldysh, &PhaseSpacePoint::new2([0.0, 0.0], [-1.0, 0.0]), 0.9, steps).map_err(|e| e.to_string())?;
    ensure(minus.iter().all(|q| q.x[0].abs().max(q.xi[1].abs()) <= 1e-10), || "left Λ₋".into())?;
    let tri = flow(&SymbolSpec::tricomi(), &PhaseSpacePoint::new2([-1.0, 0.0], [1.0, 1.0]), 4.0, steps)
        .map_err(|e| e.to_string())?;
    ensure(tri.iter().any(|q| q.x[0] >= 0.0), || "Tricomi trajectory stays in x₁ < 0".into())?;
    ensure(tri.iter().any(|q| q.xi[0] < 0.0), || "ξ₁ keeps its sign".into())?;
    let starts = [
        (keldysh, PhaseSpacePoint::new2([-0.5, 0.1], [0.8, -0.3])),
        (SymbolSpec::tricomi(), PhaseSpacePoint::new2([0.7, 0.0], [-0.4, 0.9])),
        (SymbolSpec::normal_form(1), PhaseSpacePoint::new2([0.3, 0.0], [1.2, 0.0])),
    ];
    for (s, rho) in starts {
        let traj = flow(&s, &rho, 10.0, 4096).map_err(|e| e.to_string())?;
        let p0 = eval_symbol(&s, &rho);
        for q in &traj {
            ensure((eval_symbol(&s, q) - p0).abs() <= 1e-8 * p0.abs().max(1.0), || format!("{:?}: p drifted", s.kind))?;
        }
    }
    Ok("Λ± invariant, ξ₁ = 1/(1+t), Tricomi crosses x₁ = 0, p conserved".into())
}

#[test]
fn acceptance() {
    let criteria: [(&str, u64, fn() -> Check); 8] = [
        ("1 Airy derivative growth", 5, derivative_growth_check),
        ("2 Tricomi annihilation", 30, tricomi_check),
        ("3 FBI left inverse", 60, roundtrip_check),
        ("4 weight certification", 20, weights_check),
        ("5 effective weight", 120, effective_weight_check),
        ("6 energy identity and uniform bound", 60, energy_check),
        ("7 wave-front dichotomy", 120, wave_front_check),
        ("8 flows and radiality", 5, flow_check),
    ];
    let mut failed = Vec::new();
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let over = took > Duration::from_secs(budget);
        match (&outcome, over) {
            (Ok(detail), false) => println!("PASS {name}: {detail} ({:.2} s / {budget} s)", took.as_secs_f64()),
            (Ok(detail), true) => println!("FAIL {name}: over budget, {detail} ({:.2} s / {budget} s)", took.as_secs_f64()),
            (Err(why), _) => println!("FAIL {name}: {why} ({:.2} s / {budget} s)", took.as_secs_f64()),
        }
        if outcome.is_err() || over {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
