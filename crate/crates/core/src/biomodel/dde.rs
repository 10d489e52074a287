use serde::Serialize;

use super::picard::GridFunction;
use super::{apply_n, BioModelSpec};
use crate::error::{Error, Result};
use crate::linsys::{linspace, DenseSolution, Shape};
use crate::signal::ScalarSignal;

const HISTORY_CHECK_POINTS: usize = 1001;

const BREAK_LEVELS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum HistoryFn {
    Constant(f64),
    /// Expression in `t` on `[-tau, 0]`.
    Expr(ScalarSignal),
    /// Samples in absolute time, read through `t0 + theta`.
    Grid(GridFunction),
}

/// Initial function on `[-tau, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub f: HistoryFn,
    pub tau: f64,
    /// Smallest value on the check grid.
    pub min_value: f64,
    /// `phi >= 0` on the check grid and `phi(0) > 0`.
    pub admissible: bool,
    grid_origin: f64,
}

impl History {
    pub fn new(f: HistoryFn, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "history length {tau} must be positive"
            )));
        }
        let mut h = History {
            f,
            tau,
            min_value: 0.0,
            admissible: false,
            grid_origin: 0.0,
        };
        h.record();
        Ok(h)
    }

    pub fn constant(c: f64, tau: f64) -> Result<Self> {
        History::new(HistoryFn::Constant(c), tau)
    }

    pub fn parse(text: &str, tau: f64) -> Result<Self> {
        History::new(HistoryFn::Expr(ScalarSignal::parse(text)?), tau)
    }

    /// History read from samples of a solution, so that `phi(theta)` is
    /// `g(t0 + theta)`.
    pub fn from_grid(g: GridFunction, t0: f64, tau: f64) -> Result<Self> {
        let mut h = History::new(HistoryFn::Grid(g), tau)?;
        h.grid_origin = t0;
        h.record();
        Ok(h)
    }

    fn record(&mut self) {
        let thetas = linspace(-self.tau, 0.0, HISTORY_CHECK_POINTS);
        self.min_value = thetas
            .iter()
            .map(|&th| self.eval(th))
            .fold(f64::INFINITY, f64::min);
        self.admissible = self.min_value >= 0.0 && self.eval(0.0) > 0.0;
    }

    /// `phi(theta)` for `theta` in `[-tau, 0]`.
    pub fn eval(&self, theta: f64) -> f64 {
        match &self.f {
            HistoryFn::Constant(c) => *c,
            HistoryFn::Expr(e) => e.eval(theta),
            HistoryFn::Grid(g) => g.eval(self.grid_origin + theta),
        }
    }
}

/// Forward solution together with the history it started from.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub t0: f64,
    /// Nominal step; the mesh also holds the breaking points.
    pub step: f64,
    #[serde(skip)]
    pub history: History,
    pub solution: DenseSolution,
    /// First knot where the solution is negative.
    pub negative_at: Option<f64>,
}

impl Trajectory {
    /// `x(t)` on `[t0 - tau, T]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < self.t0 {
            if t < self.t0 - self.history.tau {
                let (_, hi) = self.solution.span();
                return Err(Error::OutOfSpan {
                    t,
                    lo: self.t0 - self.history.tau,
                    hi,
                });
            }
            Ok(self.history.eval(t - self.t0))
        } else {
            self.solution.eval_scalar(t)
        }
    }

    pub fn knots(&self) -> &[f64] {
        self.solution.knots()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.knots().len())
            .map(|i| self.solution.knot_value(i)[0])
            .collect()
    }

    pub fn end(&self) -> f64 {
        self.solution.span().1
    }
}

struct Partial<'a> {
    t0: f64,
    h: f64,
    history: &'a History,
    knots: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl Partial<'_> {
    /// Solution value at a time already covered by history or knots.
    fn lookup(&self, s: f64) -> Result<f64> {
        if s < self.t0 {
            return Ok(self.history.eval(s - self.t0));
        }
        let last = self.values.len() - 1;
        let t_last = self.knots[last];
        if s >= t_last {
            if s <= t_last + 1e-12 * self.h {
                return Ok(self.values[last]);
            }
            return Err(Error::StepBound {
                step: self.h,
                tau_low: f64::NAN,
            });
        }
        let k = self.knots[..=last].partition_point(|&x| x <= s) - 1;
        let w = self.knots[k + 1] - self.knots[k];
        let th = (s - self.knots[k]) / w;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.derivs[k] * w, self.derivs[k + 1] * w);
        let th2 = th * th;
        let th3 = th2 * th;
        Ok((2.0 * th3 - 3.0 * th2 + 1.0) * y0
            + (th3 - 2.0 * th2 + th) * d0
            + (-2.0 * th3 + 3.0 * th2) * y1
            + (th3 - th2) * d1)
    }
}

/// Times where the derivative jump of the solution at `t0` resurfaces in
/// a derivative of order at most `BREAK_LEVELS + 1`.
fn breaking_points(spec: &BioModelSpec, t0: f64, t_end: f64, h: f64) -> Vec<f64> {
    let delays: Vec<&ScalarSignal> = spec
        .tau
        .iter()
        .chain(std::iter::once(&spec.sigma))
        .collect();
    let mut all = Vec::new();
    let mut level = vec![t0];
    for _ in 0..BREAK_LEVELS {
        let mut next = Vec::new();
        for &xi in &level {
            for d in &delays {
                if d.is_constant() {
                    let t = xi + d.eval(xi);
                    if t < t_end {
                        next.push(t);
                    }
                    continue;
                }
                // Roots of `t - d(t) = xi`, bracketed on a scan of spacing h / 4.
                let g = |t: f64| t - d.eval(t) - xi;
                let mut a = xi;
                let mut ga = g(a);
                while a < t_end {
                    let b = (a + 0.25 * h).min(t_end);
                    let gb = g(b);
                    if ga < 0.0 && gb >= 0.0 {
                        let (mut lo, mut hi) = (a, b);
                        for _ in 0..60 {
                            let m = 0.5 * (lo + hi);
                            if g(m) < 0.0 {
                                lo = m;
                            } else {
                                hi = m;
                            }
                        }
                        if hi < t_end {
                            next.push(hi);
                        }
                    }
                    a = b;
                    ga = gb;
                }
            }
        }
        next.sort_by(f64::total_cmp);
        next.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * h);
        all.extend_from_slice(&next);
        level = next;
    }
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * h);
    all
}

/// Uniform knots of spacing `h` with the breaking points inserted; uniform
/// knots within `h / 4` of a breaking point are dropped.
fn mesh(uniform: Vec<f64>, breaks: &[f64], h: f64) -> Vec<f64> {
    let n = uniform.len() - 1;
    let mut knots: Vec<f64> = uniform
        .into_iter()
        .enumerate()
        .filter(|&(i, t)| i == 0 || i == n || breaks.iter().all(|b| (b - t).abs() >= 0.25 * h))
        .map(|(_, t)| t)
        .collect();
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    knots.extend(
        breaks
            .iter()
            .filter(|&&b| b > lo + 0.25 * h && b < hi - 0.25 * h),
    );
    knots.sort_by(f64::total_cmp);
    knots
}

fn rhs(spec: &BioModelSpec, p: &Partial, t: f64, x: f64) -> Result<f64> {
    for d in spec.tau.iter().chain(std::iter::once(&spec.sigma)) {
        let delay = d.eval(t);
        if !(delay > 0.0) {
            return Err(Error::NegativeDelay { t, delay });
        }
    }
    let mut failure = None;
    let look = |s: f64| match p.lookup(s) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    // `apply_n` takes `Fn`; route errors through a cell.
    let cell = std::cell::RefCell::new(look);
    let n = apply_n(spec, &|s| (cell.borrow_mut())(s), t);
    if let Some(e) = failure {
        return Err(e);
    }
    let v = -spec.alpha.eval(t) * x + n;
    if !v.is_finite() {
        return Err(Error::Integration {
            t,
            reason: "non-finite right-hand side".into(),
        });
    }
    Ok(v)
}

/// Method of steps with classical RK4 and cubic Hermite interpolation of
/// the delayed terms. `step` is shrunk so that it divides `t_end - t0`, and
/// the breaking points propagated from `t0` are added to the mesh.
pub fn integrate_dde(
    spec: &BioModelSpec,
    history: &History,
    t0: f64,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    spec.validate()?;
    if !(t_end > t0) {
        return Err(Error::InvalidArgument(format!(
            "empty interval [{t0}, {t_end}]"
        )));
    }
    let tau_low = spec.delay_lower_bound();
    if !(step > 0.0 && tau_low > 0.0 && step <= tau_low / 4.0) {
        return Err(Error::StepBound { step, tau_low });
    }
    let tau = spec.max_delay();
    if history.tau < tau * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "history covers {} but the largest delay is {tau}",
            history.tau
        )));
    }
    let n = ((t_end - t0) / step).ceil() as usize;
    let h = (t_end - t0) / n as f64;
    let breaks = breaking_points(spec, t0, t_end, h);
    let knots = mesh(linspace(t0, t_end, n + 1), &breaks, h);
    let mut p = Partial {
        t0,
        h,
        history,
        knots: knots.clone(),
        values: Vec::with_capacity(knots.len()),
        derivs: Vec::with_capacity(knots.len()),
    };
    let x0 = history.eval(0.0);
    p.values.push(x0);
    p.derivs.push(0.0);
    p.derivs[0] = rhs(spec, &p, t0, x0)?;
    let mut negative_at = (x0 < 0.0).then_some(t0);
    for k in 0..knots.len() - 1 {
        let (t, t1) = (knots[k], knots[k + 1]);
        let w = t1 - t;
        let x = p.values[k];
        let k1 = p.derivs[k];
        let k2 = rhs(spec, &p, t + 0.5 * w, x + 0.5 * w * k1)?;
        let k3 = rhs(spec, &p, t + 0.5 * w, x + 0.5 * w * k2)?;
        let k4 = rhs(spec, &p, t1, x + w * k3)?;
        let x1 = x + w / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        p.values.push(x1);
        p.derivs.push(0.0);
        p.derivs[k + 1] = rhs(spec, &p, t1, x1)?;
        if x1 < 0.0 && negative_at.is_none() {
            negative_at = Some(t1);
        }
    }
    let solution = DenseSolution::from_hermite(Shape::Scalar, knots, p.values, p.derivs)?;
    Ok(Trajectory {
        t0,
        step: h,
        history: history.clone(),
        solution,
        negative_at,
    })
}

/// First time the trajectory leaves the open band `(gamma1, gamma2)`,
/// scanning at ten points per integration step.
pub fn invariant_region_check(traj: &Trajectory, gamma1: f64, gamma2: f64) -> Option<f64> {
    if !(gamma1 < gamma2) {
        return Some(traj.t0);
    }
    let knots = traj.knots();
    let inside = |t: f64| {
        traj.solution
            .eval_scalar(t)
            .map(|x| gamma1 < x && x < gamma2)
            .unwrap_or(false)
    };
    if !inside(knots[0]) {
        return Some(knots[0]);
    }
    for w in knots.windows(2) {
        for j in 1..=10 {
            let t = if j == 10 {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * j as f64 / 10.0
            };
            if !inside(t) {
                return Some(t);
            }
        }
    }
    None
}
