use kaalab::almostauto::{
    aa_probe, find_near_periods, uc_probe, AaDiagnostic, AaOptions, NearPeriodOptions,
    ShiftSequence, UcOptions, UcReport,
};
use kaalab::biomodel::{
    check_hypotheses, integrate_dde, invariant_region_check, permanence_bounds, picard_solve,
    GammaStrategy, GridFunction, History, HypothesisReport, PicardOptions, PicardState,
};
use kaalab::convolution::{
    g1_convolve, g2_convolve, two_sided_horizon, ConvolveOptions, TruncationPlan,
};
use kaalab::dichotomy::{
    delta2_uc_probe, fit_dichotomy_constants, hull_shift_experiment, verify_dichotomy,
    DichotomyCertificate, GreenFunction, GreenGrid, GreenKernel, HullOptions, Projection,
    SegmentedGreen, DEFAULT_MARGIN,
};
use kaalab::linsys::{
    integrate_fundamental, linspace, op_norm, residual_linear, DenseSolution, Shape, SolverOptions,
};
use kaalab::signal::{MatrixSignal, ScalarSignal};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{header, Output};
use crate::CliError;

/// Longest span on which a constant system is handled by one exact pair.
const EXACT_SPAN: f64 = 200.0;
const PERMANENCE_SLACK: f64 = 0.05;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a Output,
    pub seed: u64,
}

#[derive(Serialize)]
pub struct Meta {
    pub command: &'static str,
    pub seed: u64,
    pub version: &'static str,
}

fn num(e: kaalab::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn solver(cfg: &RunConfig) -> SolverOptions {
    match cfg.run.h_max {
        Some(h) => SolverOptions::default().with_h_max(h),
        None => SolverOptions::default(),
    }
}

fn margin(cfg: &RunConfig) -> f64 {
    cfg.run.margin.unwrap_or(DEFAULT_MARGIN)
}

fn segment(cfg: &RunConfig) -> f64 {
    cfg.run.segment.unwrap_or(20.0)
}

fn window(cfg: &RunConfig, default: (f64, f64)) -> (f64, f64) {
    cfg.probe
        .as_ref()
        .and_then(|p| p.window)
        .map_or(default, |[a, b]| (a, b))
}

fn contains_anchor(span: (f64, f64)) -> Result<(), CliError> {
    if span.0 <= 0.0 && 0.0 <= span.1 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "span [{}, {}] must contain the anchor 0",
            span.0, span.1
        )))
    }
}

/// One exact or integrated pair when the span allows it, segments otherwise.
fn kernel(
    cfg: &RunConfig,
    a: &MatrixSignal,
    p: &Projection,
    span: (f64, f64),
) -> Result<Box<dyn GreenKernel>, CliError> {
    contains_anchor(span)?;
    let opts = solver(cfg);
    let len = span.1 - span.0;
    if (a.is_constant() && len <= EXACT_SPAN) || len <= segment(cfg) {
        let pair = integrate_fundamental(a, span, 0.0, &opts).map_err(num)?;
        Ok(Box::new(GreenFunction::new(pair, p.clone()).map_err(num)?))
    } else {
        Ok(Box::new(
            SegmentedGreen::build(a, p, span, segment(cfg), &opts).map_err(num)?,
        ))
    }
}

fn matrix_frequencies(a: &MatrixSignal) -> Vec<f64> {
    let mut f: Vec<f64> = (0..a.dim())
        .flat_map(|i| (0..a.dim()).map(move |j| (i, j)))
        .flat_map(|(i, j)| a.entry(i, j).frequencies().to_vec())
        .collect();
    f.sort_by(f64::total_cmp);
    f.dedup();
    f
}

/// Configured shifts, or near periods of the configured or detected
/// frequencies.
fn shifts(cfg: &RunConfig, detected: &[f64]) -> Result<ShiftSequence, CliError> {
    let p = cfg.probe()?;
    if let Some(s) = &p.shifts {
        return ShiftSequence::new(s.clone(), "configured")
            .map_err(|e| CliError::Config(e.to_string()));
    }
    let freqs = p.frequencies.clone().unwrap_or_else(|| detected.to_vec());
    if freqs.is_empty() {
        return Err(CliError::Config(
            "probe.shifts or probe.frequencies is required (no frequency detected)".into(),
        ));
    }
    let opts = NearPeriodOptions {
        cap: p.cap.unwrap_or(NearPeriodOptions::default().cap),
    };
    find_near_periods(&freqs, p.count.unwrap_or(5), p.tol.unwrap_or(0.05), &opts).map_err(num)
}

#[derive(Serialize)]
struct DichotomyReport {
    fitted: bool,
    certificate: DichotomyCertificate,
}

pub fn dichotomy(ctx: &Ctx) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    let a = cfg.matrix()?;
    let p = cfg.projection(&a)?;
    let span = cfg.span();
    let g = kernel(cfg, &a, &p, span)?;
    let grid = GreenGrid::square(span.0, span.1, cfg.run.grid_points.unwrap_or(41));
    let sys = cfg.system()?;
    let (alpha, k, fitted) = match (sys.alpha, sys.k) {
        (Some(al), Some(k)) => (al, k, false),
        _ => {
            let (al, k) = fit_dichotomy_constants(g.as_ref(), &grid).map_err(num)?;
            (al, k, true)
        }
    };
    let cert = verify_dichotomy(g.as_ref(), alpha, k, &grid, margin(cfg)).map_err(num)?;
    let passed = cert.verdict.passed();
    let rows = grid
        .points()
        .into_iter()
        .map(|(t, s)| {
            let norm = g.green(t, s).map(|m| op_norm(&m)).unwrap_or(f64::NAN);
            vec![t, s, norm, k * (-alpha * (t - s).abs()).exp()]
        })
        .collect::<Vec<_>>();
    ctx.out
        .csv("green.csv", &header(&["t", "s", "norm", "bound"]), &rows)?;
    ctx.out.say(format!(
        "dichotomy: alpha = {alpha}, K = {k}{}, observed max {:.6e}: {}",
        if fitted { " (fitted)" } else { "" },
        cert.observed_max,
        verdict(passed)
    ));
    ctx.out.json(
        "certificate.json",
        &DichotomyReport {
            fitted,
            certificate: cert,
        },
    )?;
    Ok(passed)
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

fn require(key: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Config(format!("{key} is required")))
}

pub fn hull(ctx: &Ctx) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    let a = cfg.matrix()?;
    let p = cfg.projection(&a)?;
    let sys = cfg.system()?;
    let (alpha, k) = (
        require("system.alpha", sys.alpha)?,
        require("system.K", sys.k)?,
    );
    let seq = shifts(cfg, &matrix_frequencies(&a))?;
    let opts = HullOptions {
        grid_points: cfg.run.grid_points.unwrap_or(41),
        margin: margin(cfg),
        segment_len: segment(cfg),
        solver: solver(cfg),
    };
    let r = hull_shift_experiment(
        &a,
        &p,
        &seq.shifts,
        window(cfg, (-5.0, 5.0)),
        alpha,
        k,
        &opts,
    )
    .map_err(num)?;
    let rows = r
        .entries
        .iter()
        .map(|e| {
            vec![
                e.shift,
                e.gap_to_last.unwrap_or(f64::NAN),
                e.discrepancy.unwrap_or(f64::NAN),
                e.certificate.as_ref().map_or(f64::NAN, |c| c.observed_max),
            ]
        })
        .collect::<Vec<_>>();
    ctx.out.csv(
        "hull.csv",
        &header(&["shift", "gap_to_last", "discrepancy", "observed_max"]),
        &rows,
    )?;
    ctx.out.say(format!(
        "hull: {} shifts, certified: {}, gaps monotone from {:?}, discrepancy monotone from {:?}",
        r.shifts.len(),
        r.all_certified,
        r.gaps_monotone_from,
        r.discrepancy_monotone_from
    ));
    let passed = r.all_certified;
    ctx.out.json("hull.json", &r)?;
    Ok(passed)
}

#[derive(Serialize)]
struct Delta2Out {
    span: (f64, f64),
    tol: f64,
    overall_tail_max: f64,
    report: kaalab::dichotomy::Delta2Report,
}

pub fn delta2(ctx: &Ctx) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    let a = cfg.matrix()?;
    let p = cfg.projection(&a)?;
    let probe = cfg.probe()?;
    let pairs: Vec<(f64, f64)> = probe
        .pairs
        .as_ref()
        .ok_or_else(|| CliError::Config("probe.pairs is required".into()))?
        .iter()
        .map(|&[t, s]| (t, s))
        .collect();
    let base: Vec<(f64, f64)> = probe.base_points.as_ref().map_or_else(
        || vec![(0.0, 0.0), (1.0, -1.0), (-1.0, 1.0)],
        |b| b.iter().map(|&[t, s]| (t, s)).collect(),
    );
    let span = match cfg.run.span {
        Some([lo, hi]) => (lo, hi),
        None => {
            let mut lo = 0.0f64;
            let mut hi = 0.0f64;
            for &(bt, bs) in &base {
                for &(tn, sn) in &pairs {
                    for x in [bt + tn, bs + tn, bt + sn, bs + sn] {
                        lo = lo.min(x);
                        hi = hi.max(x);
                    }
                }
            }
            (lo - 1.0, hi + 1.0)
        }
    };
    let g = kernel(cfg, &a, &p, span)?;
    let tol = probe.tol.unwrap_or(0.05);
    let r =
        delta2_uc_probe(g.as_ref(), &base, &pairs, probe.tail_gap.unwrap_or(1e-3)).map_err(num)?;
    let mut cols = vec!["t_n".to_string(), "s_n".to_string()];
    cols.extend((0..base.len()).map(|b| format!("base_{b}")));
    let rows = pairs
        .iter()
        .enumerate()
        .map(|(n, &(t, s))| {
            let mut row = vec![t, s];
            row.extend(r.table.iter().map(|b| b[n]));
            row
        })
        .collect::<Vec<_>>();
    ctx.out.csv("delta2.csv", &cols, &rows)?;
    let tail = r.overall_tail_max();
    let passed = tail <= tol;
    ctx.out.say(format!(
        "delta2: tail max {tail:.6e} vs tol {tol}: {}",
        verdict(passed)
    ));
    ctx.out.json(
        "delta2.json",
        &Delta2Out {
            span,
            tol,
            overall_tail_max: tail,
            report: r,
        },
    )?;
    Ok(passed)
}

#[derive(Serialize)]
struct AaOut {
    signal: String,
    shifts: ShiftSequence,
    aa: AaDiagnostic,
    uc: Option<UcReport>,
}

pub fn aa(ctx: &Ctx) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    let probe = cfg.probe()?;
    let text = probe
        .signal
        .as_ref()
        .ok_or_else(|| CliError::Config("probe.signal is required".into()))?
        .text();
    let f =
        ScalarSignal::parse(&text).map_err(|e| CliError::Config(format!("probe.signal: {e}")))?;
    let seq = shifts(cfg, f.frequencies())?;
    let w = window(cfg, (0.0, 10.0));
    let grid_points = probe.grid_points.unwrap_or(2001);
    let eval = |t: f64| f.eval(t);
    let opts = AaOptions {
        grid_points,
        tol: probe.tol.unwrap_or(0.05),
        ..AaOptions::default()
    };
    let d = aa_probe(&eval, &seq, w, &opts).map_err(num)?;
    let uc = match &probe.deltas {
        Some(deltas) => Some(
            uc_probe(
                &eval,
                w,
                deltas,
                &UcOptions {
                    grid_points,
                    tol_uc: probe.tol_uc.unwrap_or(0.01),
                    ..UcOptions::default()
                },
            )
            .map_err(|e| CliError::Config(e.to_string()))?,
        ),
        None => None,
    };
    let passed = d.verdict.passed() && uc.as_ref().is_none_or(|u| u.verdict.passed());
    let rows = seq
        .shifts
        .iter()
        .zip(d.e_fwd.iter().zip(&d.e_bwd))
        .map(|(&s, (&f, &b))| vec![s, f, b])
        .collect::<Vec<_>>();
    ctx.out
        .csv("aa.csv", &header(&["shift", "e_fwd", "e_bwd"]), &rows)?;
    ctx.out.say(format!(
        "aa: tail {:.6e} / {:.6e} vs tol {}{}: {}",
        d.tail_fwd,
        d.tail_bwd,
        d.tol,
        uc.as_ref()
            .map(|u| format!(
                ", modulus {:.6e} vs {}",
                u.modulus.last().copied().unwrap_or(0.0),
                u.tol_uc
            ))
            .unwrap_or_default(),
        verdict(passed)
    ));
    ctx.out.json(
        "aa.json",
        &AaOut {
            signal: text,
            shifts: seq,
            aa: d,
            uc,
        },
    )?;
    Ok(passed)
}

#[derive(Serialize)]
struct ConvolveOut {
    operator: String,
    alpha: f64,
    #[serde(rename = "K")]
    k: f64,
    tol: f64,
    sup_u: f64,
    plan: TruncationPlan,
    /// Residual of the bounded solution on interior grid points (`g1` only).
    residual: Option<f64>,
}

pub fn convolve(ctx: &Ctx) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    let a = cfg.matrix()?;
    let p = cfg.projection(&a)?;
    let sys = cfg.system()?;
    let (alpha, k) = (
        require("system.alpha", sys.alpha)?,
        require("system.K", sys.k)?,
    );
    let probe = cfg.probe()?;
    let input = probe
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("probe.input is required".into()))?;
    if input.len() != a.dim() {
        return Err(CliError::Config(format!(
            "probe.input has {} entries for a system of dimension {}",
            input.len(),
            a.dim()
        )));
    }
    let u: Vec<ScalarSignal> = input
        .iter()
        .map(|v| {
            ScalarSignal::parse(&v.text())
                .map_err(|e| CliError::Config(format!("probe.input: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let sup_u = match probe.sup_u {
        Some(s) => s,
        None => u
            .iter()
            .map(|s| {
                let b = s.bounds(None);
                b.lo.abs().max(b.hi.abs()).powi(2)
            })
            .sum::<f64>()
            .sqrt(),
    };
    if !sup_u.is_finite() {
        return Err(CliError::Config(
            "probe.input is unbounded; set probe.sup_u".into(),
        ));
    }
    let max_freq = u
        .iter()
        .flat_map(|s| s.frequencies().to_vec())
        .fold(0.0, f64::max);
    let tol = probe.conv_tol.unwrap_or(1e-6);
    let op = probe.operator.clone().unwrap_or_else(|| "g2".into());
    let w = window(cfg, (0.0, 10.0));
    let ts = linspace(w.0, w.1, probe.grid_points.unwrap_or(201));
    let reach = if sup_u > 0.0 {
        two_sided_horizon(alpha, k, sup_u, tol).map_err(num)? + 1.0
    } else {
        1.0
    };
    let span = cfg.run.span.map_or(
        ((w.0 - reach).min(0.0), (w.1 + reach).max(0.0)),
        |[lo, hi]| (lo, hi),
    );
    let g = kernel(cfg, &a, &p, span)?;
    let opts = ConvolveOptions {
        tol,
        sup_u: Some(sup_u),
        max_freq,
        step: None,
    };
    let uf = |t: f64| DVector::from_iterator(u.len(), u.iter().map(|s| s.eval(t)));
    let (x, plan) = if op == "g1" {
        g1_convolve(g.as_ref(), alpha, k, &uf, &ts, &opts)
    } else {
        g2_convolve(g.as_ref(), alpha, k, &uf, &ts, &opts)
    }
    .map_err(num)?;
    let residual = if op == "g1" && ts.len() >= 5 {
        let flat: Vec<f64> = x.iter().flat_map(|v| v.iter().copied()).collect();
        let sol =
            DenseSolution::from_samples(Shape::Vector(a.dim()), ts.clone(), flat).map_err(num)?;
        Some(residual_linear(&a, &u, &sol, &ts[2..ts.len() - 2]).map_err(num)?)
    } else {
        None
    };
    let passed = residual.is_none_or(|r| r <= 10.0 * tol);
    let mut cols = vec!["t".to_string()];
    cols.extend((0..a.dim()).map(|i| format!("x_{i}")));
    let rows = ts
        .iter()
        .zip(&x)
        .map(|(&t, v)| std::iter::once(t).chain(v.iter().copied()).collect())
        .collect::<Vec<_>>();
    ctx.out.csv("convolve.csv", &cols, &rows)?;
    ctx.out.say(format!(
        "convolve {op}: {} points, horizon {:.4}, step {:.4e}{}: {}",
        ts.len(),
        plan.horizon,
        plan.step,
        residual
            .map(|r| format!(", residual {r:.3e}"))
            .unwrap_or_default(),
        verdict(passed)
    ));
    ctx.out.json(
        "convolve.json",
        &ConvolveOut {
            operator: op,
            alpha,
            k,
            tol,
            sup_u,
            plan,
            residual,
        },
    )?;
    Ok(passed)
}

#[derive(Serialize)]
struct RandomRuns {
    seed: u64,
    runs: usize,
    tail: (f64, f64),
    tail_min: f64,
    tail_max: f64,
    bounds: (f64, f64),
    passed: bool,
}

#[derive(Serialize)]
struct DdeOut {
    t0: f64,
    #[serde(rename = "T")]
    t_end: f64,
    step: f64,
    knots: usize,
    x_end: f64,
    min: f64,
    max: f64,
    negative_at: Option<f64>,
    gamma: Option<(f64, f64)>,
    /// First exit from `(gamma1, gamma2)`, when the history starts inside.
    invariant_exit: Option<f64>,
    permanence: Option<(f64, f64)>,
    random: Option<RandomRuns>,
}

pub fn dde(ctx: &Ctx) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    let spec = cfg.model_spec()?;
    let m = cfg.model()?;
    let hist = cfg.history(&spec)?;
    let t0 = m.t0.unwrap_or(0.0);
    let t_end = m.t_end.unwrap_or(t0 + 100.0);
    let step = m
        .step
        .unwrap_or_else(|| 0.01f64.min(spec.delay_lower_bound() / 4.0));
    let traj = integrate_dde(&spec, &hist, t0, t_end, step).map_err(num)?;
    let values = traj.values();
    let report = check_hypotheses(&spec, &GammaStrategy::default()).map_err(num)?;
    let gamma = report.gammas();
    let inside = |h: &History, (g1, g2): (f64, f64)| {
        linspace(-h.tau, 0.0, 201).iter().all(|&th| {
            let v = h.eval(th);
            g1 < v && v < g2
        })
    };
    let invariant_exit = gamma
        .filter(|&g| inside(&hist, g))
        .and_then(|(g1, g2)| invariant_region_check(&traj, g1, g2));
    let permanence = permanence_bounds(&spec).ok();
    let random = match (m.random_histories, gamma, permanence) {
        (Some(runs), Some((g1, g2)), Some((lo, hi))) if runs > 0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let tail = (0.5 * (t0 + t_end), t_end);
            let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for _ in 0..runs {
                let c = g1 + (g2 - g1) * rng.random_range(0.1..0.9);
                let amp = rng.random_range(0.0..0.9) * (c - g1).min(g2 - c);
                let w = rng.random_range(0.5..5.0);
                let ph = rng.random_range(0.0..std::f64::consts::TAU);
                let h = History::parse(
                    &format!("{c:?} + {amp:?}*sin({w:?}*t + {ph:?})"),
                    spec.max_delay(),
                )
                .map_err(num)?;
                let tr = integrate_dde(&spec, &h, t0, t_end, step).map_err(num)?;
                for (t, x) in tr.knots().iter().zip(tr.values()) {
                    if *t >= tail.0 {
                        tmin = tmin.min(x);
                        tmax = tmax.max(x);
                    }
                }
            }
            let passed = tmin >= lo - PERMANENCE_SLACK && tmax <= hi + PERMANENCE_SLACK;
            Some(RandomRuns {
                seed: ctx.seed,
                runs,
                tail,
                tail_min: tmin,
                tail_max: tmax,
                bounds: (lo, hi),
                passed,
            })
        }
        (Some(runs), _, _) if runs > 0 => {
            return Err(CliError::Numerical(
                "random histories need feasible hypotheses and permanence bounds".into(),
            ))
        }
        _ => None,
    };
    let passed = traj.negative_at.is_none()
        && invariant_exit.is_none()
        && random.as_ref().is_none_or(|r| r.passed);
    let rows = traj
        .knots()
        .iter()
        .zip(&values)
        .map(|(&t, &x)| vec![t, x])
        .collect::<Vec<_>>();
    ctx.out.csv("trajectory.csv", &header(&["t", "x"]), &rows)?;
    let out = DdeOut {
        t0,
        t_end,
        step: traj.step,
        knots: values.len(),
        x_end: *values.last().expect("non-empty"),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        negative_at: traj.negative_at,
        gamma,
        invariant_exit,
        permanence,
        random,
    };
    ctx.out.say(format!(
        "dde: x({t_end}) = {:.10}, range [{:.6}, {:.6}]: {}",
        out.x_end,
        out.min,
        out.max,
        verdict(passed)
    ));
    ctx.out.json("dde.json", &out)?;
    Ok(passed)
}

#[derive(Serialize)]
struct PicardOut {
    converged: bool,
    violated: Option<String>,
    error: Option<String>,
    kappa: f64,
    state: Option<PicardState>,
}

pub fn picard(ctx: &Ctx) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    let spec = cfg.model_spec()?;
    let m = cfg.model()?;
    let opts = PicardOptions {
        n_points: m.n_points.unwrap_or(401),
        tol: m.tol.unwrap_or(1e-6),
        max_iter: m.max_iter.unwrap_or(100),
        ..PicardOptions::default()
    };
    let report = check_hypotheses(&spec, &opts.strategy).map_err(num)?;
    ctx.out.json("hypotheses.json", &report)?;
    let w = m.window.map_or((0.0, 20.0), |[a, b]| (a, b));
    let failed = |violated: Option<String>, error: Option<String>| PicardOut {
        converged: false,
        violated,
        error,
        kappa: report.kappa,
        state: None,
    };
    let (u, state) = match picard_solve(&spec, w, &opts) {
        Ok(r) => r,
        Err(kaalab::Error::Refused { violated }) => {
            ctx.out
                .say(format!("picard: refused, violated: {violated}"));
            ctx.out.json("picard.json", &failed(Some(violated), None))?;
            return Ok(false);
        }
        Err(e @ (kaalab::Error::NonContraction { .. } | kaalab::Error::OmegaExit { .. })) => {
            ctx.out.say(format!("picard: {e}"));
            ctx.out
                .json("picard.json", &failed(None, Some(e.to_string())))?;
            return Ok(false);
        }
        Err(e) => return Err(num(e)),
    };
    write_iterates(ctx.out, &u, &state.iterates)?;
    let passed = state.converged;
    ctx.out.say(format!(
        "picard: {} iterations, kappa {:.6}, last delta {:.3e}, u* in [{:.8}, {:.8}]: {}",
        state.iteration,
        state.kappa,
        state.deltas.last().copied().unwrap_or(0.0),
        u.values.iter().copied().fold(f64::INFINITY, f64::min),
        u.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        verdict(passed)
    ));
    ctx.out.json(
        "picard.json",
        &PicardOut {
            converged: passed,
            violated: None,
            error: None,
            kappa: state.kappa,
            state: Some(state),
        },
    )?;
    Ok(passed)
}

fn write_iterates(
    out: &Output,
    u: &GridFunction,
    iterates: &[GridFunction],
) -> Result<(), CliError> {
    let fixed = u
        .grid
        .iter()
        .zip(&u.values)
        .map(|(&t, &v)| vec![t, v])
        .collect::<Vec<_>>();
    out.csv("fixed_point.csv", &header(&["t", "u"]), &fixed)?;
    let mut cols = vec!["t".to_string()];
    cols.extend((0..iterates.len()).map(|i| format!("u_{i}")));
    let rows = (0..u.grid.len())
        .map(|i| {
            std::iter::once(u.grid[i])
                .chain(iterates.iter().map(|it| it.values[i]))
                .collect()
        })
        .collect::<Vec<_>>();
    out.csv("iterates.csv", &cols, &rows)
}

pub fn check(ctx: &Ctx) -> Result<bool, CliError> {
    let spec = ctx.cfg.model_spec()?;
    let report: HypothesisReport =
        check_hypotheses(&spec, &GammaStrategy::default()).map_err(num)?;
    let passed = report.all_hold();
    ctx.out.say(format!(
        "check: kappa {:.6}, gamma {:?}, violated {:?}: {}",
        report.kappa,
        report.gammas(),
        report.violated,
        verdict(passed)
    ));
    ctx.out.json("hypotheses.json", &report)?;
    Ok(passed)
}
