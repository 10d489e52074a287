use serde::{Deserialize, Serialize};

use super::dde::Trajectory;
use super::{apply_n, check_hypotheses, BioModelSpec, GammaStrategy, HypothesisReport};
use crate::convolution::{scalar_kernel_convolve, KernelOptions, TruncationPlan};
use crate::error::{Error, Result};
use crate::linsys::{linspace, DenseSolution, Shape};

/// Samples on an increasing grid, interpolated by cubic Hermite with
/// five-point derivatives and continued by the boundary values outside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(skip)]
    interp: DenseSolution,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let interp = DenseSolution::from_samples(Shape::Scalar, grid.clone(), values.clone())?;
        Ok(GridFunction {
            grid,
            values,
            interp,
        })
    }

    pub fn constant(grid: Vec<f64>, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        GridFunction::new(grid, values)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().expect("non-empty"))
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.span();
        if t <= lo {
            self.values[0]
        } else if t >= hi {
            *self.values.last().expect("non-empty")
        } else {
            self.interp.eval_scalar(t).expect("inside span")
        }
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MReport {
    pub values: GridFunction,
    pub plan: TruncationPlan,
    /// Bound on the error committed by continuing `u` as a constant to the
    /// left of its grid: `sup N e^{-alpha_low T_covered} / alpha_low`.
    pub extension_error: f64,
}

/// `(M u)(t) = int_{-inf}^t exp(-int_s^t alpha) N(u)(s) ds` on `n_points`
/// of `window`.
pub fn apply_m(
    spec: &BioModelSpec,
    u: &GridFunction,
    window: (f64, f64),
    n_points: usize,
    tol: f64,
) -> Result<MReport> {
    let (w0, w1) = window;
    if !(w0 < w1) || n_points < 5 {
        return Err(Error::Domain(format!(
            "window [{w0}, {w1}] with {n_points} points is too small"
        )));
    }
    let (g0, g1) = u.span();
    if g1 < w1 - 1e-9 * (1.0 + w1.abs()) {
        return Err(Error::Domain(format!(
            "input known up to {g1}, window ends at {w1}"
        )));
    }
    let bars = spec.bars();
    let alpha_low = bars.alpha.lo;
    let sup_n = (0..spec.n())
        .map(|i| bars.beta[i].hi.abs() * spec.nonlinearities[i].f_max)
        .sum::<f64>()
        + bars.b.hi.abs() * bars.h.hi;
    let grid = linspace(w0, w1, n_points);
    let opts = KernelOptions {
        tol,
        sup_u: Some(sup_n),
        ..KernelOptions::default()
    };
    let integrand = |s: f64| apply_n(spec, &|r| u.eval(r), s);
    let (values, plan) = scalar_kernel_convolve(&spec.alpha, &integrand, &grid, &opts)?;
    let covered = (w0 - (g0 + bars.tau_max)).max(0.0);
    let extension_error = if alpha_low > 0.0 {
        sup_n * (-alpha_low * covered).exp() / alpha_low
    } else {
        f64::INFINITY
    };
    Ok(MReport {
        values: GridFunction::new(grid, values)?,
        plan,
        extension_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    pub n_points: usize,
    /// Target accuracy of the fixed point.
    pub tol: f64,
    pub max_iter: usize,
    /// Allowed excess of an observed ratio over `kappa`.
    pub ratio_slack: f64,
    pub strategy: GammaStrategy,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            n_points: 2001,
            tol: 1e-6,
            max_iter: 100,
            ratio_slack: 0.05,
            strategy: GammaStrategy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardState {
    pub iteration: usize,
    pub window: (f64, f64),
    pub gamma: (f64, f64),
    pub kappa: f64,
    /// `sup |u_{n+1} - u_n|` per iteration.
    pub deltas: Vec<f64>,
    /// `deltas[n + 1] / deltas[n]`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub extension_error: f64,
    pub hypotheses: HypothesisReport,
    /// Every iterate, starting with `u_0`.
    #[serde(skip)]
    pub iterates: Vec<GridFunction>,
}

/// Iterates `u_{n+1} = M u_n` from the midpoint of `[gamma1, gamma2]` until
/// `sup |u_{n+1} - u_n| <= tol (1 - kappa) / kappa`.
pub fn picard_solve(
    spec: &BioModelSpec,
    window: (f64, f64),
    opts: &PicardOptions,
) -> Result<(GridFunction, PicardState)> {
    let report = check_hypotheses(spec, &opts.strategy)?;
    if !report.all_hold() {
        return Err(Error::Refused {
            violated: report.violated.join(", "),
        });
    }
    let (g1, g2) = report.gammas().expect("A5 holds");
    let kappa = report.kappa;
    let stop = if kappa > 0.0 {
        opts.tol * (1.0 - kappa) / kappa
    } else {
        opts.tol
    };
    let quad_tol = 0.1 * opts.tol;
    let grid = linspace(window.0, window.1, opts.n_points);
    let mut u = GridFunction::constant(grid, 0.5 * (g1 + g2))?;
    let mut state = PicardState {
        iteration: 0,
        window,
        gamma: (g1, g2),
        kappa,
        deltas: Vec::new(),
        ratios: Vec::new(),
        converged: false,
        extension_error: 0.0,
        hypotheses: report,
        iterates: vec![u.clone()],
    };
    while state.iteration < opts.max_iter {
        let m = apply_m(spec, &u, window, opts.n_points, quad_tol)?;
        state.iteration += 1;
        state.extension_error = m.extension_error;
        let next = m.values;
        if let Some((t, v)) = next
            .grid
            .iter()
            .zip(&next.values)
            .find(|(_, &v)| !(v >= g1 - quad_tol && v <= g2 + quad_tol))
        {
            return Err(Error::OmegaExit {
                iteration: state.iteration,
                t: *t,
                value: *v,
                gamma1: g1,
                gamma2: g2,
            });
        }
        let delta = next.sup_distance(&u);
        if let Some(&prev) = state.deltas.last() {
            let ratio = if prev > 0.0 { delta / prev } else { 0.0 };
            state.ratios.push(ratio);
            let limit = kappa + opts.ratio_slack;
            if ratio > limit {
                return Err(Error::NonContraction {
                    iteration: state.iteration,
                    ratio,
                    limit,
                });
            }
        }
        state.deltas.push(delta);
        state.iterates.push(next.clone());
        u = next;
        if delta <= stop {
            state.converged = true;
            break;
        }
    }
    Ok((u, state))
}

/// `sup |x(t) - u*(t)|` over the grid points of `fixed` inside `tail`.
pub fn compare_attractor(traj: &Trajectory, fixed: &GridFunction, tail: (f64, f64)) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut any = false;
    for (&t, &v) in fixed.grid.iter().zip(&fixed.values) {
        if t >= tail.0 && t <= tail.1 {
            worst = worst.max((traj.eval(t)? - v).abs());
            any = true;
        }
    }
    if !any {
        return Err(Error::Domain(format!(
            "no grid point of the fixed point lies in [{}, {}]",
            tail.0, tail.1
        )));
    }
    Ok(worst)
}
