use hippo_legs::quadrature::PanelQuadrature;
use hippo_legs::signal::SinusoidTerm;
use hippo_legs::{
    corpus_signal, exact_state, extract_weights, limit_weight_function, local_truncation_error, reconstruction_error,
    run, run_samples, shifted_legendre, LegSSystem, Mesh, Regularity, Scheme, Signal, SignalDescriptor, StartRule,
};
use proptest::prelude::*;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn scaled_legendre_is_orthonormal_under_normalized_measure() {
    let t = 1.6;
    let quad = PanelQuadrature::default();
    for i in 1..=8usize {
        for j in 1..=8usize {
            let r = quad
                .integrate(
                    1,
                    |s, out| {
                        let x = s / t;
                        out[0] = ((2 * i - 1) as f64).sqrt()
                            * shifted_legendre(i - 1, x)
                            * ((2 * j - 1) as f64).sqrt()
                            * shifted_legendre(j - 1, x)
                            / t;
                    },
                    0.0,
                    t,
                    &[],
                    1e-13,
                )
                .unwrap();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((r.value[0] - want).abs() < 1e-12, "i={i} j={j}");
        }
    }
}

#[test]
fn observables_ignore_eigenvector_scaling() {
    let sys = LegSSystem::new(8).unwrap();
    let scaled = sys.with_rescaled_eigenvectors(&[1.0, 2.0, 0.5, 3.0, 1.0, -2.0, 7.0, 0.25]).unwrap();
    let s = corpus_signal("smooth2").unwrap();
    let mesh = Mesh::new(64, 2.0).unwrap();
    for scheme in Scheme::ALL {
        let a = run(&sys, &s, scheme, mesh).unwrap();
        let b = run(&scaled, &s, scheme, mesh).unwrap();
        assert!(max_diff(a.terminal(), b.terminal()) < 1e-12, "{scheme}");
        let wa = extract_weights(&sys, scheme, 32).unwrap();
        let wb = extract_weights(&scaled, scheme, 32).unwrap();
        for (x, y) in wa.weights.iter().zip(&wb.weights) {
            assert!(max_diff(x, y) < 1e-12, "{scheme}");
        }
    }
    for x in [0.0, 0.3, 0.77, 1.0] {
        assert!(max_diff(&limit_weight_function(&sys, x), &limit_weight_function(&scaled, x)) < 1e-12);
    }
}

#[test]
fn step_count_and_horizon_separate() {
    let sys = LegSSystem::new(6).unwrap();
    let g = corpus_signal("smooth1").unwrap();
    let g_fast = Signal::new("g(2t)", Regularity::Smooth, move |t| g.evaluate(2.0 * t));
    let g = corpus_signal("smooth1").unwrap();
    for scheme in Scheme::ALL {
        let a = run(&sys, &g_fast, scheme, Mesh::new(64, 1.0).unwrap()).unwrap();
        let b = run(&sys, &g, scheme, Mesh::new(64, 2.0).unwrap()).unwrap();
        assert_eq!(a.states, b.states, "{scheme}");
    }
}

#[test]
fn constants_are_preserved() {
    let sys = LegSSystem::new(8).unwrap();
    let k = Signal::new("k", Regularity::Smooth, |_| 0.6);
    let mut e = vec![0.0; 8];
    e[0] = 0.6;
    for scheme in Scheme::ALL {
        let tr = run(&sys, &k, scheme, Mesh::new(100, 2.0).unwrap()).unwrap();
        assert!(tr.states.iter().all(|c| max_diff(c, &e) < 1e-12), "{scheme}");
    }
}

#[test]
fn errors_shrink_under_refinement() {
    let sys = LegSSystem::new(8).unwrap();
    let meshes: Vec<usize> = (7..=15).map(|p| 1 << p).collect();
    for name in ["smooth1", "smooth2", "bv_sqrt", "poly3", "riemann_osc"] {
        let s = corpus_signal(name).unwrap();
        let tol = s.regularity().default_tolerance();
        let exact = exact_state(&sys, &s, 2.0, tol).unwrap();
        for scheme in Scheme::ALL {
            let errs: Vec<f64> = meshes
                .iter()
                .map(|&n| l2(run(&sys, &s, scheme, Mesh::new(n, 2.0).unwrap()).unwrap().terminal(), &exact.c))
                .collect();
            if name == "riemann_osc" {
                // sampling sin(1/t) aliases, so only overall decay is claimed
                assert!(errs[errs.len() - 1] < 0.5 * errs[0], "{name}/{scheme}: {errs:?}");
            } else if !(name == "poly3" && scheme == Scheme::Bilinear) || errs[0] > 1e-10 {
                assert!(errs.windows(2).all(|w| w[1] < w[0]), "{name}/{scheme}: {errs:?}");
            }
        }
    }
}

#[test]
fn nonac_stress_input_converges() {
    let sys = LegSSystem::new(8).unwrap();
    let s = corpus_signal("nonac").unwrap();
    let exact = exact_state(&sys, &s, 0.5, 1e-6).unwrap();
    for scheme in Scheme::ALL {
        let coarse = l2(run(&sys, &s, scheme, Mesh::new(128, 0.5).unwrap()).unwrap().terminal(), &exact.c);
        let fine = l2(run(&sys, &s, scheme, Mesh::new(16384, 0.5).unwrap()).unwrap().terminal(), &exact.c);
        assert!(fine < coarse, "{scheme}: {coarse} -> {fine}");
    }
}

#[test]
fn weights_stay_uniformly_bounded() {
    let sys = LegSSystem::new(8).unwrap();
    let bound = 1.05 * 15f64.sqrt();
    for scheme in Scheme::ALL {
        for p in 6..=12 {
            let m = extract_weights(&sys, scheme, 1 << p).unwrap().max_abs();
            assert!(m < bound, "{scheme} n=2^{p}: {m}");
        }
    }
}

#[test]
fn high_degree_projection_matches_analytic_components() {
    let sys = LegSSystem::new(4).unwrap();
    let s = Signal::polynomial("deg10", vec![0.5, -1.0, 0.0, 2.0, 0.0, 0.0, -0.3, 0.0, 0.0, 0.0, 0.1]);
    let c = exact_state(&sys, &s, 1.4, 1e-12).unwrap();
    assert!(max_diff(&c.c, &s.analytic_state(1.4, 4).unwrap()) < 1e-12);
}

#[test]
fn oracle_is_linear() {
    let sys = LegSSystem::new(8).unwrap();
    let f = corpus_signal("smooth1").unwrap();
    let g = corpus_signal("smooth2").unwrap();
    let (a, b) = (1.5, -0.25);
    let (f2, g2) = (f.clone(), g.clone());
    let mix = Signal::new("mix", Regularity::Smooth, move |t| a * f2.evaluate(t) + b * g2.evaluate(t));
    let t = 1.7;
    let cf = exact_state(&sys, &f, t, 1e-12).unwrap().c;
    let cg = exact_state(&sys, &g, t, 1e-12).unwrap().c;
    let cm = exact_state(&sys, &mix, t, 1e-12).unwrap().c;
    let combo: Vec<f64> = cf.iter().zip(&cg).map(|(x, y)| a * x + b * y).collect();
    assert!(max_diff(&cm, &combo) < 1e-11);
}

#[test]
fn reconstruction_is_an_orthogonal_projection() {
    let sys = LegSSystem::new(8).unwrap();
    let t = 2.0;
    for name in ["smooth1", "smooth2"] {
        let s = corpus_signal(name).unwrap();
        let c = exact_state(&sys, &s, t, 1e-12).unwrap().c;
        let base = reconstruction_error(&sys, &s, &c, t, 1e-13).unwrap().l2_error.powi(2);
        let eps = 1e-3;
        for j in 0..8 {
            for sign in [1.0, -1.0] {
                let mut p = c.clone();
                p[j] += sign * eps;
                let e = reconstruction_error(&sys, &s, &p, t, 1e-13).unwrap().l2_error.powi(2);
                assert!((e - base - eps * eps).abs() < 1e-8, "{name} j={j}");
            }
        }
        let small = LegSSystem::new(4).unwrap();
        let c4 = exact_state(&small, &s, t, 1e-12).unwrap().c;
        let e4 = reconstruction_error(&small, &s, &c4, t, 1e-13).unwrap().l2_error;
        assert!(base.sqrt() <= e4, "{name}");
    }
}

#[test]
fn truncation_errors() {
    let sys = LegSSystem::new(4).unwrap();
    let zero = Signal::new("zero", Regularity::Smooth, |_| 0.0);
    let mesh = Mesh::new(32, 1.0).unwrap();
    for scheme in Scheme::ALL {
        for k in [0, 5, 31] {
            let t = local_truncation_error(&sys, &zero, scheme, &mesh, k).unwrap();
            assert!(t.iter().all(|v| *v == 0.0));
        }
    }

    let sys8 = LegSSystem::new(8).unwrap();
    let s = corpus_signal("smooth2").unwrap();
    let lte: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            let t = local_truncation_error(&sys8, &s, Scheme::ForwardEuler, &Mesh::new(n, 2.0).unwrap(), n / 2).unwrap();
            t.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    for w in lte.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..=2.3).contains(&ratio), "{lte:?}");
    }

    let one = LegSSystem::new(1).unwrap();
    let ramp = Signal::polynomial("ramp", vec![0.0, 3.0]);
    let t1: Vec<f64> = [16usize, 256, 4096]
        .iter()
        .map(|&n| local_truncation_error(&one, &ramp, Scheme::Bilinear, &Mesh::new(n, 1.0).unwrap(), 1).unwrap()[0].abs())
        .collect();
    assert!(t1.iter().all(|v| *v < 1e-12), "{t1:?}");
}

#[test]
fn descriptor_signals_flow_through_runs() {
    let sig = SignalDescriptor::Sinusoids {
        label: None,
        terms: vec![SinusoidTerm { amplitude: 0.5, frequency: 3.0, phase: 0.2 }],
    }
    .to_signal()
    .unwrap();
    let sys = LegSSystem::new(4).unwrap();
    let exact = exact_state(&sys, &sig, 1.0, 1e-12).unwrap();
    let tr = run(&sys, &sig, Scheme::Bilinear, Mesh::new(512, 1.0).unwrap()).unwrap();
    assert!(l2(tr.terminal(), &exact.c) < 1e-4);
}

fn samples(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn runs_are_linear_in_the_samples(
        f in samples(24),
        g in samples(24),
        lambda in -5.0f64..5.0,
        idx in 0usize..5,
        dim in 1usize..=8,
    ) {
        let scheme = Scheme::ALL[idx];
        let sys = LegSSystem::new(dim).unwrap();
        let mesh = Mesh::new(24, 1.0).unwrap();
        let go = |s: &[f64]| run_samples(&sys, scheme, mesh, s, StartRule::ZeroOut).unwrap();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = f.iter().map(|a| lambda * a).collect();
        let (rf, rg) = (go(&f), go(&g));
        for k in 0..=24 {
            let add: Vec<f64> = rf.states[k].iter().zip(&rg.states[k]).map(|(a, b)| a + b).collect();
            prop_assert!(max_diff(&go(&sum).states[k], &add) < 1e-12 * 1e3);
            let mul: Vec<f64> = rf.states[k].iter().map(|a| lambda * a).collect();
            prop_assert!(max_diff(&go(&scaled).states[k], &mul) < 1e-12 * 1e3);
        }
    }
}
