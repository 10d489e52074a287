//! Acceptance criteria, one PASS/FAIL line each.
//!
//! ```text
//! cargo test -p kaalab --test acceptance -- --nocapture
//! ```

use std::f64::consts::{SQRT_2, TAU};
use std::time::Instant;

use kaalab::almostauto::{
    aa_probe, find_near_periods, uc_probe, AaOptions, NearPeriodOptions, UcOptions,
};
use kaalab::biomodel::{
    check_hypotheses, integrate_dde, invariant_region_check, permanence_bounds, picard_solve,
    BioModelSpec, GammaStrategy, HarvestSpec, History, NonlinearitySpec, PicardOptions,
};
use kaalab::convolution::{g1_convolve, g2_convolve, ConvolveOptions};
use kaalab::dichotomy::{
    delta2_uc_probe, fit_dichotomy_constants, hull_shift_experiment, verify_dichotomy,
    GreenFunction, GreenGrid, HullOptions, Projection, SegmentedGreen, DEFAULT_MARGIN,
};
use kaalab::linsys::{
    integrate_fundamental, linspace, op_norm, residual_linear, DenseSolution, Shape, SolverOptions,
};
use kaalab::signal::{MatrixSignal, ScalarSignal};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QP_ALPHA: &str = "-1 - 0.2*sin(t) - 0.2*sin(1.4142135623730951*t)";

const C1_OBSERVED_SLACK: f64 = 1e-6;
const C1_FIT_TOL: f64 = 0.01;
const C1_SECONDS: f64 = 5.0;
const C2_SECONDS: f64 = 10.0;
const C3_SECONDS: f64 = 60.0;
const C4_AUTONOMOUS_TOL: f64 = 1e-12;
const C4_TAIL_TOL: f64 = 0.05;
const C4_TAIL_GAP: f64 = 1e-3;
const C5_MATCH_TOL: f64 = 1e-6;
const C5_RESIDUAL_TOL: f64 = 1e-5;
const C6_AA_TOL: f64 = 0.05;
const C6_DELTA: f64 = 0.01;
const C7_ARITH_TOL: f64 = 1e-6;
const C7_KAPPA_TOL: f64 = 1e-12;
/// The quoted window bound and gamma1 are rounded versions of slightly
/// different arithmetic; see the decisions ledger.
const C7_QUOTED_TOL: f64 = 5e-4;
const C8_TOL: f64 = 1e-3;
const C8_SECONDS: f64 = 60.0;
const C9_SLACK: f64 = 0.05;
const C9_RUNS: usize = 20;
const C10_AA_TOL: f64 = 0.05;
const C11_MIN_RATIO: f64 = 8.0;
const RATIO_SLACK: f64 = 0.05;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Debug>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

fn run(id: usize, name: &str, limit: Option<f64>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut r = f();
    let secs = start.elapsed().as_secs_f64();
    if let (Ok(_), Some(l)) = (&r, limit) {
        if secs >= l {
            r = Err(format!("took {secs:.2} s, limit {l} s"));
        }
    }
    let passed = r.is_ok();
    let detail = r.unwrap_or_else(|e| e);
    println!(
        "{} [{id:>2}] {name} ({secs:.2} s): {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    passed
}

fn green(a: &MatrixSignal, p: &[f64], span: (f64, f64)) -> Result<GreenFunction, String> {
    let pair = ok(integrate_fundamental(
        a,
        span,
        0.0,
        &SolverOptions::default(),
    ))?;
    ok(GreenFunction::new(pair, ok(Projection::diagonal(p))?))
}

fn qp_system() -> MatrixSignal {
    MatrixSignal::diagonal(&[QP_ALPHA, "1"]).unwrap()
}

fn nicholson(alpha: ScalarSignal, beta: f64, b: f64) -> BioModelSpec {
    let c = ScalarSignal::constant;
    BioModelSpec::new(
        alpha,
        c(b),
        c(0.5),
        vec![(c(beta), c(1.0), c(1.0), NonlinearitySpec::nicholson())],
        HarvestSpec::constant(1.0),
    )
}

fn equilibrium_root() -> f64 {
    let g = |u: f64| u * (1.0 - (-u).exp()) - 1.0;
    let (mut a, mut b) = (1.3, 1.4);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(a) * g(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn c1() -> Outcome {
    let g = green(
        &MatrixSignal::diagonal(&["-1", "1"]).unwrap(),
        &[1.0, 0.0],
        (-5.0, 5.0),
    )?;
    let grid = GreenGrid::square(-5.0, 5.0, 41);
    let cert = ok(verify_dichotomy(&g, 1.0, 1.0, &grid, DEFAULT_MARGIN))?;
    ensure!(cert.verdict.passed(), "certificate failed: {cert:?}");
    ensure!(
        cert.observed_max <= 1.0 + C1_OBSERVED_SLACK,
        "observed max {}",
        cert.observed_max
    );
    let (alpha, k) = ok(fit_dichotomy_constants(&g, &grid))?;
    ensure!((alpha - 1.0).abs() <= C1_FIT_TOL, "fitted alpha {alpha}");
    ensure!((k - 1.0).abs() <= C1_FIT_TOL, "fitted K {k}");
    Ok(format!(
        "observed {:.9}, fit alpha {alpha:.6}, K {k:.6}",
        cert.observed_max
    ))
}

fn c2() -> Outcome {
    let g = green(&qp_system(), &[1.0, 0.0], (-5.0, 5.0))?;
    let grid = GreenGrid::square(-5.0, 5.0, 41);
    let k = 0.8f64.exp();
    let pass = ok(verify_dichotomy(&g, 1.0, k, &grid, DEFAULT_MARGIN))?;
    ensure!(
        pass.verdict.passed(),
        "K = e^0.8 rejected, observed {}",
        pass.observed_max
    );
    let fail = ok(verify_dichotomy(&g, 1.0, 1.5, &grid, DEFAULT_MARGIN))?;
    ensure!(
        !fail.verdict.passed(),
        "K = 1.5 accepted, observed {}",
        fail.observed_max
    );
    Ok(format!(
        "K = {k:.4} passes (observed {:.4}), K = 1.5 fails",
        pass.observed_max
    ))
}

fn c3() -> Outcome {
    let shifts: Vec<f64> = [5.0, 12.0, 29.0, 70.0].iter().map(|q| TAU * q).collect();
    let p = ok(Projection::diagonal(&[1.0, 0.0]))?;
    let r = ok(hull_shift_experiment(
        &qp_system(),
        &p,
        &shifts,
        (-5.0, 5.0),
        1.0,
        0.8f64.exp(),
        &HullOptions::default(),
    ))?;
    ensure!(r.all_certified, "not every shifted system certified");
    ensure!(
        r.gaps_monotone_from == Some(0),
        "projection gaps {:?}",
        r.successive_gap
    );
    let disc: Vec<f64> = r
        .entries
        .iter()
        .map(|e| e.discrepancy.unwrap_or(f64::NAN))
        .collect();
    ensure!(
        r.discrepancy_monotone_from == Some(0),
        "discrepancies {disc:?}"
    );
    Ok(format!("discrepancies {disc:.4?}"))
}

fn c4() -> Outcome {
    let base = [
        (0.0, 0.0),
        (1.0, -1.0),
        (-2.0, 1.5),
        (2.5, 0.5),
        (-1.0, -3.0),
    ];
    let gaps = [0.5, 0.125, 2f64.powi(-7), 2f64.powi(-10), 2f64.powi(-14)];

    let a = MatrixSignal::parse_rows(&[vec!["-1", "2"], vec!["0", "1"]]).unwrap();
    let p = ok(Projection::spectral(&a.eval(0.0)))?;
    let pair = ok(integrate_fundamental(
        &a,
        (-10.0, 20.0),
        0.0,
        &SolverOptions::default(),
    ))?;
    let g = ok(GreenFunction::new(pair, p))?;
    let seq: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .map(|(i, d)| (i as f64 + 1.0, i as f64 + 1.0 + d))
        .collect();
    let auto = ok(delta2_uc_probe(&g, &base, &seq, C4_TAIL_GAP))?;
    let worst = auto.table.iter().flatten().copied().fold(0.0, f64::max);
    ensure!(
        worst <= C4_AUTONOMOUS_TOL,
        "autonomous discrepancy {worst:e}"
    );

    let qp = ok(SegmentedGreen::build(
        &qp_system(),
        &ok(Projection::diagonal(&[1.0, 0.0]))?,
        (-10.0, 460.0),
        20.0,
        &SolverOptions::default(),
    ))?;
    let seq: Vec<(f64, f64)> = [5.0, 12.0, 29.0, 70.0, 70.0]
        .iter()
        .zip([0.1, 1e-2, 1e-3, 1e-4, 1e-6])
        .map(|(q, d)| (TAU * q, TAU * q + d))
        .collect();
    let r = ok(delta2_uc_probe(&qp, &base, &seq, C4_TAIL_GAP))?;
    let tail = r.overall_tail_max();
    ensure!(tail <= C4_TAIL_TOL, "quasi-periodic tail {tail}");
    for row in &r.table {
        ensure!(
            row.last() < row.first(),
            "no decrease along the sequence: {row:?}"
        );
    }
    Ok(format!(
        "autonomous max {worst:e}, quasi-periodic tail {tail:.2e}"
    ))
}

fn c5() -> Outcome {
    let a = MatrixSignal::diagonal(&["-1"]).unwrap();
    let g = green(&a, &[1.0], (-40.0, 60.0))?;
    let u = |t: f64| DVector::from_vec(vec![t.sin()]);
    let opts = ConvolveOptions {
        tol: 1e-8,
        sup_u: Some(1.0),
        max_freq: 1.0,
        step: None,
    };
    let ts = linspace(0.0, 20.0, 101);
    let (x, _) = ok(g2_convolve(&g, 1.0, 1.0, &u, &ts, &opts))?;
    let err = ts
        .iter()
        .zip(&x)
        .map(|(t, v)| (v[0] - (t.sin() - t.cos()) / 2.0).abs())
        .fold(0.0, f64::max);
    ensure!(err <= C5_MATCH_TOL, "G2 error {err:e}");

    let fine = linspace(0.0, 20.0, 2001);
    let (x1, _) = ok(g1_convolve(&g, 1.0, 1.0, &u, &fine, &opts))?;
    let sol = ok(DenseSolution::from_samples(
        Shape::Vector(1),
        fine.clone(),
        x1.iter().map(|v| v[0]).collect(),
    ))?;
    let f = [ScalarSignal::parse("sin(t)").unwrap()];
    let res = ok(residual_linear(&a, &f, &sol, &fine[2..fine.len() - 2]))?;
    ensure!(res <= C5_RESIDUAL_TOL, "G1 residual {res:e}");
    Ok(format!("G2 error {err:.2e}, G1 residual {res:.2e}"))
}

fn c6() -> Outcome {
    let shifts = ok(find_near_periods(
        &[1.0, SQRT_2],
        5,
        C6_AA_TOL,
        &NearPeriodOptions::default(),
    ))?;
    let u = |t: f64| t.sin() + (SQRT_2 * t).sin();
    let window = (0.0, 10.0);
    let aa = AaOptions {
        grid_points: 501,
        tol: C6_AA_TOL,
        ..AaOptions::default()
    };
    let du = ok(aa_probe(&u, &shifts, window, &aa))?;
    ensure!(du.verdict.passed(), "input fails the probe: {:?}", du.e_fwd);

    let (alpha, k) = (1.0, 0.8f64.exp());
    let opts = ConvolveOptions {
        tol: 1e-4,
        sup_u: Some(2.0),
        max_freq: SQRT_2,
        step: None,
    };
    let p = ok(Projection::diagonal(&[1.0, 0.0]))?;
    let hi = window.1 + shifts.last() + 1.0;
    let g = ok(SegmentedGreen::build(
        &qp_system(),
        &p,
        (-20.0, hi),
        20.0,
        &SolverOptions::default(),
    ))?;
    let uv = |t: f64| DVector::from_vec(vec![u(t), u(t)]);
    let x = |t: f64| {
        g2_convolve(&g, alpha, k, &uv, &[t], &opts)
            .map(|(v, _)| v[0][0])
            .unwrap_or(f64::NAN)
    };
    let tol_x = C6_AA_TOL * k / alpha * 1.1;
    let dx = ok(aa_probe(
        &x,
        &shifts,
        window,
        &AaOptions { tol: tol_x, ..aa },
    ))?;
    ensure!(
        dx.verdict.passed(),
        "G2 u fails at tol {tol_x}: fwd {:?} bwd {:?}",
        dx.e_fwd,
        dx.e_bwd
    );
    let uc = ok(uc_probe(
        &x,
        window,
        &[C6_DELTA],
        &UcOptions {
            grid_points: 1001,
            ..UcOptions::default()
        },
    ))?;
    let bound = 2.0 * (k / alpha * C6_DELTA + k * C6_DELTA * 2.0);
    ensure!(
        uc.modulus[0] <= bound,
        "modulus {} > {bound}",
        uc.modulus[0]
    );
    Ok(format!(
        "tail {:.4} <= {tol_x:.4}, modulus {:.4} <= {bound:.4}",
        dx.tail_fwd.max(dx.tail_bwd),
        uc.modulus[0]
    ))
}

fn c7() -> Outcome {
    let st = GammaStrategy::default();
    let e_inv = (-1f64).exp();
    let r = ok(check_hypotheses(
        &nicholson(ScalarSignal::constant(1.0), 1.0, 1.0),
        &st,
    ))?;
    let g2 = (e_inv + 1.0) * 1.02;
    let upper = g2 * (-g2).exp() + 1.0;
    let g1 = 0.5 * (1.0 + upper);
    ensure!((r.gamma2 - g2).abs() <= C7_ARITH_TOL, "gamma2 {}", r.gamma2);
    ensure!(
        (r.gamma2 - 1.3953).abs() <= C7_QUOTED_TOL,
        "gamma2 vs quoted {}",
        r.gamma2
    );
    ensure!(
        (r.gamma1_window.0 - 1.0).abs() <= C7_ARITH_TOL,
        "window {:?}",
        r.gamma1_window
    );
    ensure!(
        (r.gamma1_window.1 - upper).abs() <= C7_ARITH_TOL,
        "window {:?}",
        r.gamma1_window
    );
    ensure!(
        (r.gamma1_window.1 - 1.3460).abs() <= C7_QUOTED_TOL,
        "window vs quoted"
    );
    let got_g1 = r.gamma1.ok_or("infeasible")?;
    ensure!((got_g1 - g1).abs() <= C7_ARITH_TOL, "gamma1 {got_g1}");
    ensure!(
        (got_g1 - 1.1730).abs() <= C7_QUOTED_TOL,
        "gamma1 vs quoted {got_g1}"
    );
    ensure!(
        (r.kappa - (-2f64).exp()).abs() <= C7_KAPPA_TOL,
        "kappa {}",
        r.kappa
    );
    ensure!(r.all_hold(), "violated {:?}", r.violated);

    let strong = nicholson(ScalarSignal::constant(1.0), 8.0, 0.0);
    let r8 = ok(check_hypotheses(&strong, &st))?;
    ensure!(
        (r8.kappa - 8.0 * (-2f64).exp()).abs() <= C7_ARITH_TOL,
        "kappa {}",
        r8.kappa
    );
    ensure!(
        (r8.kappa - 1.0827).abs() <= 1e-4,
        "kappa vs quoted {}",
        r8.kappa
    );
    match picard_solve(&strong, (0.0, 10.0), &PicardOptions::default()) {
        Err(kaalab::Error::Refused { violated }) if violated.contains("kappa < 1") => {}
        other => return Err(format!("beta = 8 not refused: {:?}", other.map(|_| ()))),
    }

    let r2 = ok(check_hypotheses(
        &nicholson(ScalarSignal::constant(1.0), 2.0, 0.0),
        &st,
    ))?;
    let g2b = 2.0 * e_inv * 1.02;
    ensure!(!r2.a5.holds, "beta = 2, b = 0 reported feasible");
    ensure!(
        (r2.gamma1_window.1 - 2.0 * g2b * (-g2b).exp()).abs() <= C7_ARITH_TOL,
        "upper {}",
        r2.gamma1_window.1
    );
    Ok(format!(
        "gamma2 {:.6}, window (1, {:.6}), gamma1 {:.6}, kappa {:.12}; beta=8 kappa {:.6} refused; beta=2 upper {:.4} < 1",
        r.gamma2, r.gamma1_window.1, got_g1, r.kappa, r8.kappa, r2.gamma1_window.1
    ))
}

fn c8() -> Outcome {
    let spec = nicholson(ScalarSignal::constant(1.0), 1.0, 1.0);
    let root = equilibrium_root();
    let (u, state) = ok(picard_solve(
        &spec,
        (0.0, 20.0),
        &PicardOptions {
            n_points: 401,
            ..PicardOptions::default()
        },
    ))?;
    ensure!(
        state.converged,
        "no convergence after {} iterations",
        state.iteration
    );
    let limit = state.kappa + RATIO_SLACK;
    ensure!(
        state.ratios.iter().all(|&r| r <= limit),
        "ratios {:?}",
        state.ratios
    );
    let dev = u
        .values
        .iter()
        .map(|v| (v - root).abs())
        .fold(0.0, f64::max);
    ensure!(dev <= C8_TOL, "fixed point off the equilibrium by {dev}");
    let ustar = u.eval(10.0);
    let traj = ok(integrate_dde(
        &spec,
        &ok(History::constant(1.2, 1.0))?,
        0.0,
        100.0,
        0.01,
    ))?;
    let x50 = ok(traj.eval(50.0))?;
    ensure!((x50 - ustar).abs() <= C8_TOL, "x(50) = {x50}, u* = {ustar}");
    let exit = invariant_region_check(&traj, state.gamma.0, state.gamma.1);
    ensure!(exit.is_none(), "left the invariant region at {exit:?}");
    Ok(format!(
        "u* = {ustar:.6} (root {root:.6}), x(50) = {x50:.6}, ratios {:.4?}",
        state.ratios
    ))
}

fn c9() -> Outcome {
    let spec = nicholson(ScalarSignal::constant(1.0), 1.0, 1.0);
    let (lower, upper) = ok(permanence_bounds(&spec))?;
    let (g1, g2) = ok(check_hypotheses(&spec, &GammaStrategy::default()))?
        .gammas()
        .ok_or("infeasible")?;
    let (lo, hi) = (lower - C9_SLACK, upper + C9_SLACK);
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let (mut seen_lo, mut seen_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..C9_RUNS {
        let c = rng.random_range(g1 + 0.02..g2 - 0.02);
        let amp = rng.random_range(0.0..0.9) * (c - g1).min(g2 - c);
        let w = rng.random_range(0.5..5.0);
        let ph = rng.random_range(0.0..TAU);
        let hist = ok(History::parse(
            &format!("{c} + {amp}*sin({w}*t + {ph})"),
            1.0,
        ))?;
        ensure!(
            hist.admissible && hist.min_value > g1,
            "history left Omega_0"
        );
        let traj = ok(integrate_dde(&spec, &hist, 0.0, 100.0, 0.01))?;
        for (t, x) in traj.knots().iter().zip(traj.values()) {
            if *t >= 50.0 {
                seen_lo = seen_lo.min(x);
                seen_hi = seen_hi.max(x);
            }
        }
    }
    ensure!(
        seen_lo >= lo && seen_hi <= hi,
        "tail range [{seen_lo}, {seen_hi}] outside [{lo}, {hi}]"
    );
    Ok(format!(
        "tail range [{seen_lo:.5}, {seen_hi:.5}] inside [{lo:.4}, {hi:.4}]"
    ))
}

fn c10() -> Outcome {
    let alpha = ScalarSignal::parse("1 + 0.1*sin(t) + 0.1*sin(1.4142135623730951*t)").unwrap();
    let freqs = alpha.frequencies().to_vec();
    let spec = nicholson(alpha, 1.0, 1.0);
    let report = ok(check_hypotheses(&spec, &GammaStrategy::default()))?;
    ensure!(report.all_hold(), "hypotheses fail: {:?}", report.violated);
    let shifts = ok(find_near_periods(
        &freqs,
        5,
        C10_AA_TOL,
        &NearPeriodOptions::default(),
    ))?;
    let window = (0.0, 10.0);
    let hi = window.1 + shifts.last() + 5.0;
    let (lo_w, hi_w) = (-40.0, hi.ceil());
    let n_points = ((hi_w - lo_w) / 0.05).round() as usize + 1;
    let (u, state) = ok(picard_solve(
        &spec,
        (lo_w, hi_w),
        &PicardOptions {
            n_points,
            ..PicardOptions::default()
        },
    ))?;
    ensure!(
        state.converged,
        "no convergence after {} iterations",
        state.iteration
    );
    let (g1, g2) = state.gamma;
    for it in &state.iterates {
        ensure!(
            it.values.iter().all(|&v| v >= g1 && v <= g2),
            "iterate left [{g1}, {g2}]"
        );
    }
    let limit = state.kappa + RATIO_SLACK;
    ensure!(
        state.ratios.iter().all(|&r| r <= limit),
        "ratios {:?}",
        state.ratios
    );
    let f = |t: f64| u.eval(t);
    let d = ok(aa_probe(
        &f,
        &shifts,
        window,
        &AaOptions {
            tol: C10_AA_TOL,
            domain: Some((lo_w, hi_w)),
            ..AaOptions::default()
        },
    ))?;
    ensure!(
        d.verdict.passed(),
        "fixed point fails the probe: {:?}",
        d.e_fwd
    );
    Ok(format!(
        "{} iterations, kappa {:.4}, tail {:.4}",
        state.iteration,
        state.kappa,
        d.tail_fwd.max(d.tail_bwd)
    ))
}

fn c11() -> Outcome {
    let a = MatrixSignal::parse_rows(&[
        vec!["-1 - 0.2*sin(t)", "0.3*cos(t)"],
        vec!["0", "1 + 0.1*sin(1.4142135623730951*t)"],
    ])
    .unwrap();
    let phi_end = |h: f64| -> Result<nalgebra::DMatrix<f64>, String> {
        let opts = SolverOptions {
            h_max: h,
            n_min: 1,
            tol_id: 1e-2,
            exact_constant: false,
        };
        ok(ok(integrate_fundamental(&a, (0.0, 6.0), 0.0, &opts))?.phi(6.0))
    };
    let reference = phi_end(0.2 / 32.0)?;
    let e1 = op_norm(&(phi_end(0.2)? - &reference));
    let e2 = op_norm(&(phi_end(0.1)? - &reference));
    ensure!(
        e1 / e2 >= C11_MIN_RATIO,
        "fundamental matrix ratio {}",
        e1 / e2
    );

    let spec = nicholson(ScalarSignal::constant(1.0), 1.0, 1.0);
    let hist = ok(History::parse("1.2 + 0.1*sin(3*t)", 1.0))?;
    let x_end = |h: f64| -> Result<f64, String> {
        ok(ok(integrate_dde(&spec, &hist, 0.0, 10.0, h))?.eval(10.0))
    };
    let xr = x_end(0.1 / 64.0)?;
    let d1 = (x_end(0.1)? - xr).abs();
    let d2 = (x_end(0.05)? - xr).abs();
    ensure!(d1 / d2 >= C11_MIN_RATIO, "DDE ratio {}", d1 / d2);
    Ok(format!(
        "fundamental ratio {:.1}, DDE ratio {:.1}",
        e1 / e2,
        d1 / d2
    ))
}

#[test]
fn acceptance() {
    let results = [
        run(
            1,
            "exact dichotomy certificate and fit",
            Some(C1_SECONDS),
            c1,
        ),
        run(2, "quasi-periodic dichotomy", Some(C2_SECONDS), c2),
        run(3, "hull shift experiment", Some(C3_SECONDS), c3),
        run(4, "Green function shift continuity", None, c4),
        run(5, "convolution oracle", None, c5),
        run(6, "invariance transfer through G2", None, c6),
        run(7, "hypothesis arithmetic", None, c7),
        run(8, "fixed point against equilibrium", Some(C8_SECONDS), c8),
        run(9, "permanence", None, c9),
        run(10, "time-varying fixed point", None, c10),
        run(11, "solver orders", None, c11),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, &p)| !p)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
