use std::f64::consts::SQRT_2;

use kaalab::almostauto::{
    aa_probe, find_near_periods, AaOptions, NearPeriodOptions, ShiftSequence,
};
use kaalab::signal::{signal_bounds, ScalarSignal};
use proptest::prelude::*;

/// `c + a sin(t + p) + b sin(sqrt2 t + q)`.
fn quasi_periodic() -> impl Strategy<Value = ScalarSignal> {
    (
        -1.0f64..1.0,
        -1.0f64..1.0,
        0.0f64..6.3,
        -1.0f64..1.0,
        0.0f64..6.3,
    )
        .prop_map(|(c, a, p, b, q)| {
            ScalarSignal::parse(&format!(
                "{c:?} + {a:?}*sin(t + {p:?}) + {b:?}*sin({SQRT_2:?}*t + {q:?})"
            ))
            .unwrap()
        })
}

fn shifts() -> ShiftSequence {
    find_near_periods(&[1.0, SQRT_2], 5, 0.05, &NearPeriodOptions::default()).unwrap()
}

fn dyadic(points: usize) -> AaOptions {
    AaOptions {
        grid_points: points,
        ..AaOptions::default()
    }
}

fn sup_abs(s: &ScalarSignal) -> f64 {
    let b = signal_bounds(s, None);
    b.lo.abs().max(b.hi.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_symmetry(f in quasi_periodic()) {
        let s = shifts();
        let fwd = aa_probe(&|t| f.eval(t), &s, (-4.0, 4.0), &dyadic(1025)).unwrap();
        let rev = aa_probe(&|t: f64| f.eval(-t), &s.negated(), (-4.0, 4.0), &dyadic(1025)).unwrap();
        prop_assert_eq!(fwd.e_fwd, rev.e_fwd);
        prop_assert_eq!(fwd.e_bwd, rev.e_bwd);
    }

    #[test]
    fn wider_window_never_lowers_errors(f in quasi_periodic()) {
        let s = shifts();
        let inner = aa_probe(&|t| f.eval(t), &s, (0.0, 4.0), &dyadic(513)).unwrap();
        let outer = aa_probe(&|t| f.eval(t), &s, (-4.0, 4.0), &dyadic(1025)).unwrap();
        for (a, b) in inner.e_fwd.iter().zip(&outer.e_fwd) {
            prop_assert!(b >= a);
        }
        for (a, b) in inner.e_bwd.iter().zip(&outer.e_bwd) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn products_of_passing_functions_pass(f in quasi_periodic(), g in quasi_periodic()) {
        let s = shifts();
        let tol = 0.2;
        let opts = AaOptions { tol, ..AaOptions::default() };
        let window = (0.0, 10.0);
        let pf = aa_probe(&|t| f.eval(t), &s, window, &opts).unwrap();
        let pg = aa_probe(&|t| g.eval(t), &s, window, &opts).unwrap();
        prop_assume!(pf.verdict.passed() && pg.verdict.passed());
        let widened = tol * (sup_abs(&f) + sup_abs(&g) + tol);
        let fg = aa_probe(&|t| f.eval(t) * g.eval(t), &s, window, &AaOptions { tol: widened, ..opts }).unwrap();
        prop_assert!(fg.verdict.passed(), "tails {} {} vs {widened}", fg.tail_fwd, fg.tail_bwd);
    }

    #[test]
    fn passing_signals_have_bounded_range(f in quasi_periodic()) {
        let p = aa_probe(&|t| f.eval(t), &shifts(), (0.0, 10.0), &AaOptions::default()).unwrap();
        if p.verdict.passed() {
            let b = signal_bounds(&f, None);
            prop_assert!(b.lo.is_finite() && b.hi.is_finite());
        }
    }
}
