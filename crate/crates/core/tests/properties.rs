//! Randomized invariants of the discretization, the source, the quadrature
//! and the fitting routines.

use blowup_core::analysis::{
    estimate_blowup_time_in, fit_rate_in, FitWindow, GFunction, GrowthLaw, RunTrace, TraceMeta,
};
use blowup_core::grid::{radial_laplacian, BoundaryClosure, NodalField, RadialGrid};
use blowup_core::problem::{
    eval_f, eval_f_prime, solve_neumann_curvature, validate_neumann_ic, InitialData, InitialFamily,
    ProblemKind, ProblemSpec,
};
use blowup_core::solver::{integrate, SolverConfig, StopReason};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

fn meta(p: f64) -> TraceMeta {
    TraceMeta { kind: ProblemKind::DirichletSource, p, u_stop: 100.0, radius: 1.0, blew_up: true }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_exact_on_quadratics(
        n in 1usize..=5,
        m in 8usize..200,
        radius in 0.1f64..5.0,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let grid = RadialGrid::new(n, radius, m).unwrap();
        let field = NodalField::from_fn(grid, |r| a + b * r * r).unwrap();
        let expected = 2.0 * n as f64 * b;
        let tol = 1e-12 * (1.0 + b.abs()) * (m * m) as f64 / radius.min(1.0);
        let neu = radial_laplacian(&field, BoundaryClosure::Neumann { flux: 2.0 * b * radius });
        for v in neu.values() {
            prop_assert!((v - expected).abs() <= tol, "{v} vs {expected}");
        }
        let dir = radial_laplacian(&field, BoundaryClosure::Dirichlet { value: a + b * radius * radius });
        for v in &dir.values()[..m] {
            prop_assert!((v - expected).abs() <= tol);
        }
    }

    #[test]
    fn source_is_increasing_and_convex(p in 1.01f64..4.0, u in 0.0f64..2.5, du in 1e-3f64..0.5) {
        let (f0, f1) = (eval_f(u, p).unwrap(), eval_f(u + du, p).unwrap());
        prop_assert!(f0 >= 1.0);
        prop_assert!(f1 > f0);
        prop_assert!(eval_f_prime(u + du, p).unwrap() >= eval_f_prime(u, p).unwrap());
    }

    #[test]
    fn g_at_zero_matches_gamma_identity(delta in 0.05f64..0.95, p in 1.1f64..5.0) {
        let g = GFunction::new(delta, p).unwrap();
        let exact = delta.powf(-1.0 / p) * gamma(1.0 + 1.0 / p);
        let got = g.value(0.0).unwrap();
        prop_assert!((got - exact).abs() <= 1e-10 * exact, "{got} vs {exact}");
    }

    #[test]
    fn g_is_decreasing(delta in 0.05f64..0.95, p in 1.1f64..5.0, s in 0.0f64..3.0, ds in 1e-3f64..1.0) {
        let g = GFunction::new(delta, p).unwrap();
        prop_assert!(g.value(s + ds).unwrap() < g.value(s).unwrap());
    }

    #[test]
    fn g_derivative_is_minus_the_integrand(delta in 0.05f64..0.95, p in 1.1f64..5.0, s in 0.5f64..3.0) {
        let g = GFunction::new(delta, p).unwrap();
        let v = |x: f64| g.value(x).unwrap();
        // fourth-order central difference
        let h = 2e-3;
        let fd = (8.0 * (v(s + h) - v(s - h)) - (v(s + 2.0 * h) - v(s - 2.0 * h))) / (12.0 * h);
        let exact = -(-delta * s.powf(p)).exp();
        prop_assert!((fd - exact).abs() <= 1e-8, "{fd} vs {exact}");
    }

    #[test]
    fn rate_fitter_recovers_synthetic_laws(
        b in 0.05f64..2.0,
        c in -2.0f64..2.0,
        t_blow in 0.1f64..10.0,
    ) {
        let series: Vec<_> = (0..120)
            .map(|k| {
                let t = t_blow * (1.0 - 0.5f64.powf(1.0 + 10.0 * k as f64 / 119.0));
                (t, c - b * (t_blow - t).ln())
            })
            .collect();
        let trace = RunTrace::from_series(meta(2.0), &series).unwrap();
        let window = FitWindow::new(&trace, 0, series.len()).unwrap();
        let fit = fit_rate_in(&trace, window, t_blow, None).unwrap();
        prop_assert!((fit.slope - b).abs() <= 1e-8);
        prop_assert!((fit.intercept - c).abs() <= 1e-8 * (1.0 + b * 10.0));
    }

    #[test]
    fn regression_estimator_recovers_exponential_law(rate in 0.5f64..4.0, t_blow in 0.1f64..5.0) {
        // u = -(1/κ) log(κ (T - t)) makes exp(-κu) = κ (T - t) exactly linear
        let series: Vec<_> = (0..100)
            .map(|k| {
                let t = t_blow * (1.0 - 0.5f64.powf(1.0 + 8.0 * k as f64 / 99.0));
                (t, -(rate * (t_blow - t)).ln() / rate)
            })
            .collect();
        let trace = RunTrace::from_series(meta(2.0), &series).unwrap();
        let window = FitWindow::new(&trace, 0, 95).unwrap();
        let est = estimate_blowup_time_in(&trace, window, GrowthLaw::Exponential { rate }).unwrap();
        prop_assert!((est.t_hat - t_blow).abs() <= 1e-8 * t_blow);
    }

    #[test]
    fn compatible_neumann_roots(alpha in 0.0f64..0.5, radius in 0.2f64..0.8) {
        match solve_neumann_curvature(alpha, radius, 2.0) {
            Ok(beta) => {
                let residual = 2.0 * beta * radius - (alpha + beta * radius * radius).powi(2).exp();
                prop_assert!(residual.abs() <= 1e-8);
                let grid = RadialGrid::new(1, radius, 32).unwrap();
                let family = InitialFamily::QuadraticNeumann { center_value: alpha, curvature: beta };
                let data = InitialData::realize(family, grid).unwrap();
                prop_assert!(validate_neumann_ic(&data, 2.0).unwrap().passed);
            }
            Err(_) => {
                // independent scan of 2x/R - exp((α + x)²) over x = βR²
                let best = (1..=200_000)
                    .map(|k| {
                        let x = 5.0 * k as f64 / 200_000.0;
                        2.0 * x / radius - (alpha + x).powi(2).exp()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(best < 0.0, "solver missed a root (max residual {best})");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pure_diffusion_obeys_the_maximum_principle(
        n in 1usize..=3,
        amplitude in 0.1f64..3.0,
        shape in 1u32..=3,
        m in 10usize..40,
    ) {
        let grid = RadialGrid::new(n, 1.0, m).unwrap();
        let family = InitialFamily::PolynomialBump { amplitude, shape };
        let spec = ProblemSpec::unvalidated(ProblemKind::DirichletSource, 2.0, grid, family)
            .unwrap()
            .without_forcing();
        let cfg = SolverConfig { t_max: 0.05, ..SolverConfig::for_exponent(2.0) };
        let run = integrate(&spec, &cfg).unwrap();
        prop_assert_eq!(run.stop_reason, StopReason::TMaxReached);
        let mut prev = f64::INFINITY;
        for u in &run.snapshots {
            let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(max <= prev + 1e-14);
            prop_assert!(u.iter().all(|&v| v >= 0.0));
            prev = max;
        }
    }
}
