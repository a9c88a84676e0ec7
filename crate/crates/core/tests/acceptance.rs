//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any FAIL.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use hippo_legs::harness::{convergence_study, fit_slope, ExperimentConfig, RateReport};
use hippo_legs::oracle::diagonal_cross_check;
use hippo_legs::reconstruct::reconstruction_error;
use hippo_legs::{
    closed_form_state, corpus_signal, exact_state, extract_weights, initial_derivative, limit_weight_function,
    lte_probe, run, run_samples, shifted_legendre, weight_deviation, LegSSystem, Mesh, Scheme, Signal, StartRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn system_identities() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for n in [1, 2, 4, 8, 16] {
        let sys = LegSSystem::new(n).unwrap();
        let b: Vec<f64> = sys.b().iter().copied().collect();
        let x = sys.solve_a(&b);
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        worst.0 = worst.0.max(sys.eigen_residual());
        worst.1 = worst.1.max(sys.inverse_residual());
        worst.2 = worst.2.max(max_diff(&x, &e1));
    }
    outcome(
        worst.0 < 1e-12 && worst.1 < 1e-12 && worst.2 < 1e-12,
        format!("max |AV-VD| {:.1e}, |V Vinv - I| {:.1e}, |A^-1 B - e1| {:.1e}", worst.0, worst.1, worst.2),
    )
}

fn oracle_consistency() -> Outcome {
    let sys = LegSSystem::new(8).unwrap();
    let mut worst = 0.0f64;
    for name in ["smooth1", "smooth2"] {
        let s = corpus_signal(name).unwrap();
        for t in [0.5, 1.0, 2.0] {
            worst = worst.max(diagonal_cross_check(&sys, &s, t, 1e-12).unwrap());
        }
    }
    outcome(worst < 1e-10, format!("max |V c~ - c| {worst:.1e}"))
}

fn initial_derivative_check() -> Outcome {
    let sys = LegSSystem::new(8).unwrap();
    let mut want = vec![0.0; 8];
    want[0] = 0.5;
    want[1] = 1.0 / (2.0 * 3f64.sqrt());
    let err = max_diff(&initial_derivative(&sys, 1.0), &want);
    outcome(err < 1e-14, format!("deviation {err:.1e}"))
}

fn weight_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut worst = 0.0f64;
    for dim in [1, 4, 8] {
        let sys = LegSSystem::new(dim).unwrap();
        for n in [8, 64, 256] {
            let mesh = Mesh::new(n, 1.0).unwrap();
            for scheme in Scheme::ALL {
                let table = extract_weights(&sys, scheme, n).unwrap();
                for _ in 0..3 {
                    let f: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let direct = run_samples(&sys, scheme, mesh, &f, StartRule::ZeroOut).unwrap();
                    worst = worst.max(max_diff(&table.apply(&f).unwrap(), direct.terminal()));
                }
            }
        }
    }
    outcome(worst < 1e-12, format!("max |weights . f - run| {worst:.1e} over 135 cases"))
}

fn closed_form_agreement() -> Outcome {
    let sys = LegSSystem::new(8).unwrap();
    let mesh = Mesh::new(128, 2.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for scheme in Scheme::ALL {
        let mut worst = 0.0f64;
        for name in ["smooth1", "smooth2"] {
            let s = corpus_signal(name).unwrap();
            let a = closed_form_state(&sys, &s, scheme, &mesh).unwrap();
            let b = run(&sys, &s, scheme, mesh).unwrap();
            worst = worst.max(max_diff(&a, b.terminal()));
        }
        let limit = if scheme == Scheme::Bilinear { 1e-10 } else { 1e-12 };
        pass &= worst < limit;
        parts.push(format!("{scheme} {worst:.1e}"));
    }
    outcome(pass, parts.join(", "))
}

fn weight_limit() -> Outcome {
    let sys = LegSSystem::new(8).unwrap();
    let mut grid_err = 0.0f64;
    for i in 0..=1000 {
        let x = i as f64 / 1000.0;
        let f = limit_weight_function(&sys, x);
        for (j, fj) in f.iter().enumerate() {
            grid_err = grid_err.max((fj - ((2 * j + 1) as f64).sqrt() * shifted_legendre(j, x)).abs());
        }
    }
    let mut pass = grid_err < 1e-12;
    let mut parts = vec![format!("|F - scaled Legendre| {grid_err:.1e}")];
    let meshes = [64usize, 128, 256, 512, 1024];
    for scheme in Scheme::ALL {
        let devs: Vec<(usize, f64)> =
            meshes.iter().map(|&n| (n, weight_deviation(&sys, scheme, n).unwrap())).collect();
        let slope = fit_slope(&devs[2..]).unwrap_or(f64::NAN);
        let all = fit_slope(&devs).unwrap_or(f64::NAN);
        let window = if scheme == Scheme::Bilinear { (-2.2, -1.8) } else { (-1.2, -0.8) };
        pass &= slope >= window.0 && slope <= window.1;
        parts.push(format!("{scheme} slope {slope:.3} (all meshes {all:.3})"));
    }
    outcome(pass, parts.join(", "))
}

fn slope_in(report: &RateReport, scheme: Scheme, window: (f64, f64)) -> (bool, String) {
    let slope = report.slope(scheme).unwrap_or(f64::NAN);
    let ok = slope >= window.0 && slope <= window.1;
    (ok, format!("{}/{scheme} {slope:.3}{}", report.signal, if ok { "" } else { " (out of window)" }))
}

fn figure_one() -> Outcome {
    let cfg = ExperimentConfig::from_path(&config_path("figure1.json")).unwrap();
    let reports = convergence_study(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &reports {
        match r.signal.as_str() {
            "smooth1" | "smooth2" | "bv_sqrt" => {
                for scheme in Scheme::ALL {
                    let window = match (r.signal.as_str(), scheme) {
                        ("bv_sqrt", _) => (-1.2, -0.8),
                        (_, Scheme::Bilinear) => (-2.2, -1.8),
                        _ => (-1.15, -0.85),
                    };
                    let (ok, text) = slope_in(r, scheme, window);
                    pass &= ok;
                    parts.push(text);
                }
            }
            "riemann_osc" => {
                for s in &r.schemes {
                    let (e7, e14) = (s.error_at(128).unwrap(), s.error_at(16384).unwrap());
                    let ok = s.monotone_violations == 0 && e14 < 0.5 * e7;
                    pass &= ok;
                    parts.push(format!(
                        "riemann_osc/{} e(2^14)/e(2^7) {:.3}, {} non-decreasing doublings, slope {:.3}",
                        s.scheme,
                        e14 / e7,
                        s.monotone_violations,
                        s.fitted_slope.unwrap_or(f64::NAN)
                    ));
                }
            }
            other => parts.push(format!("{other}: not scored")),
        }
    }
    outcome(pass, parts.join("; "))
}

fn tightness() -> Outcome {
    let cfg = ExperimentConfig::from_path(&config_path("tightness.json")).unwrap();
    let reports = convergence_study(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &reports {
        for scheme in Scheme::ALL {
            let window = match (r.signal.as_str(), scheme) {
                ("poly2", Scheme::Bilinear) => continue,
                ("poly2", _) => (-1.1, -0.9),
                ("poly3", Scheme::Bilinear) => (-2.1, -1.9),
                _ => continue,
            };
            let (ok, text) = slope_in(r, scheme, window);
            pass &= ok;
            parts.push(text);
        }
    }
    outcome(pass, parts.join(", "))
}

fn lte_pathology() -> Outcome {
    let sys = LegSSystem::new(1).unwrap();
    let mut worst = 0.0f64;
    for a in [1.0, -2.0, 10.0] {
        let s = Signal::polynomial("ramp", vec![0.0, a]);
        for n in [16, 256] {
            let t0 = lte_probe(&sys, &s, Scheme::ApproxBilinear, n, 2.0, 0).unwrap()[0];
            worst = worst.max((t0 + a / 6.0).abs());
        }
    }
    outcome(worst < 1e-12, format!("max |T_0 + a/6| {worst:.1e}"))
}

fn reconstruction() -> Outcome {
    let sys = LegSSystem::new(8).unwrap();
    let t = 2.0;
    let polys = [
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        vec![1.0, -2.0, 0.5, 0.25, -0.125, 0.0625, -0.03125, 0.015625],
    ];
    let mut worst_poly = 0.0f64;
    for coeffs in polys {
        let s = Signal::polynomial("degree7", coeffs);
        let c = exact_state(&sys, &s, t, 1e-12).unwrap().c;
        worst_poly = worst_poly.max(reconstruction_error(&sys, &s, &c, t, 1e-14).unwrap().l2_error);
    }
    let one = corpus_signal("const1").unwrap();
    let c = exact_state(&sys, &one, t, 1e-12).unwrap().c;
    let r = reconstruction_error(&sys, &one, &c, t, 1e-12).unwrap();
    let const_err = r.l2_error.max(r.sup_grid_error);
    outcome(
        worst_poly < 1e-8 && const_err < 1e-12,
        format!("degree-7 l2 {worst_poly:.1e}, constant {const_err:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("system identities", system_identities),
        ("oracle cross-consistency", oracle_consistency),
        ("initial derivative", initial_derivative_check),
        ("quadrature-weight identity", weight_identity),
        ("closed form vs recurrence", closed_form_agreement),
        ("weight limit and deviation rates", weight_limit),
        ("figure 1 rates", figure_one),
        ("rate tightness", tightness),
        ("approximate bilinear LTE", lte_pathology),
        ("reconstruction", reconstruction),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name} [{:.2}s]: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
