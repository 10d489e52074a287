use kaalab::dichotomy::{
    delta2_uc_probe, green_eval, hull_shift_experiment, verify_dichotomy, GreenFunction, GreenGrid,
    GreenKernel, HullOptions, Projection, DEFAULT_MARGIN,
};
use kaalab::linsys::{integrate_fundamental, SolverOptions};
use kaalab::signal::MatrixSignal;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rk4() -> SolverOptions {
    SolverOptions {
        exact_constant: false,
        ..SolverOptions::default()
    }
}

/// `diag(-a - e sin(w t), b)` with `P = diag(1, 0)`.
fn periodic_green(a: f64, e: f64, w: f64, b: f64) -> GreenFunction {
    let sys = MatrixSignal::diagonal(&[format!("-{a:?} - {e:?}*sin({w:?}*t)"), format!("{b:?}")])
        .unwrap();
    let pair = integrate_fundamental(&sys, (-3.0, 3.0), 0.0, &rk4()).unwrap();
    GreenFunction::new(pair, Projection::diagonal(&[1.0, 0.0]).unwrap()).unwrap()
}

/// Upper triangular `[[-a, c], [0, b]]`.
fn hyperbolic(a: f64, b: f64, c: f64) -> (MatrixSignal, DMatrix<f64>) {
    let sys = MatrixSignal::parse_rows(&[
        vec![format!("-{a:?}"), format!("{c:?}")],
        vec!["0".to_string(), format!("{b:?}")],
    ])
    .unwrap();
    let m = sys.eval(0.0);
    (sys, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn larger_k_never_fails(
        a in 0.5f64..2.0, e in 0.0f64..0.4, w in 0.5f64..3.0, b in 0.5f64..2.0,
        alpha in 0.1f64..0.5, k1 in 0.5f64..3.0, dk in 0.0f64..2.0,
    ) {
        let g = periodic_green(a, e, w, b);
        let grid = GreenGrid::square(-3.0, 3.0, 21);
        let c1 = verify_dichotomy(&g, alpha, k1, &grid, DEFAULT_MARGIN).unwrap();
        let c2 = verify_dichotomy(&g, alpha, k1 + dk, &grid, DEFAULT_MARGIN).unwrap();
        prop_assert_eq!(c1.verdict.passed(), c1.observed_max <= k1 * (1.0 + DEFAULT_MARGIN));
        if c1.verdict.passed() {
            prop_assert!(c2.verdict.passed());
        }
    }

    #[test]
    fn diagonal_tie_takes_stable_branch(
        a in 0.5f64..2.0, e in 0.0f64..0.4, w in 0.5f64..3.0, b in 0.5f64..2.0, t in -3.0f64..3.0,
    ) {
        let g = periodic_green(a, e, w, b);
        let pair = g.pair();
        let direct = pair.phi(t).unwrap() * g.projection().matrix() * pair.phi_inv(t).unwrap();
        prop_assert_eq!(g.green(t, t).unwrap(), direct.clone());
        prop_assert_eq!(green_eval(pair, g.projection(), t, t).unwrap(), direct);
    }

    #[test]
    fn spectral_projection_is_idempotent(a in 0.2f64..3.0, b in 0.2f64..3.0, c in -3.0f64..3.0) {
        let (_, m) = hyperbolic(a, b, c);
        let p = Projection::spectral(&m).unwrap();
        prop_assert!(p.defect() <= 1e-8);
    }

    #[test]
    fn autonomous_shift_continuity_is_exact(
        a in 0.2f64..2.0, b in 0.2f64..2.0, c in -2.0f64..2.0, k in 1i32..6,
    ) {
        let (sys, m) = hyperbolic(a, b, c);
        let p = Projection::spectral(&m).unwrap();
        let pair = integrate_fundamental(&sys, (-8.0, 12.0), 0.0, &SolverOptions::default()).unwrap();
        let g = GreenFunction::new(pair, p).unwrap();
        let base = [(0.0, 0.0), (1.0, -1.0), (-2.0, 1.5), (2.5, 0.5), (-1.0, -3.0)];
        let d = 2f64.powi(-k);
        let seq: Vec<(f64, f64)> = (1..=4).map(|i| (i as f64, i as f64 + d * i as f64)).collect();
        let r = delta2_uc_probe(&g, &base, &seq, 1e-3).unwrap();
        let worst = r.table.iter().flatten().copied().fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12, "{worst:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn autonomous_hull_is_flat(a in 0.5f64..1.5, b in 0.5f64..1.5, c in -1.0f64..1.0) {
        let (sys, m) = hyperbolic(a, b, c);
        let p = Projection::spectral(&m).unwrap();
        let r = hull_shift_experiment(&sys, &p, &[1.0, 2.0, 3.0], (-1.0, 1.0), 0.1, 10.0, &HullOptions::default()).unwrap();
        for e in &r.entries {
            prop_assert!(e.projection.as_ref().unwrap().defect() <= 1e-8);
            let disc = e.discrepancy.unwrap();
            prop_assert!(disc <= 1e-12, "{disc:e}");
        }
    }
}
