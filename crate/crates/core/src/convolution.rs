//! Bounded-solution operators of dichotomic systems and the scalar
//! exponential kernel.
//!
//! ```text
//! G1 u(t) = int_R        G(t, s) u(s) ds
//! G2 u(t) = int_{-inf}^t G(t, s) u(s) ds
//! K_a u(t) = int_{-inf}^t exp(-int_s^t a) u(s) ds
//! ```
//!
//! Infinite ranges are cut at a horizon `T` where the exponential tail is
//! at most `tol / 2`; the other half of `tol` is left to composite Simpson.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dichotomy::{Branch, GreenKernel};
use crate::error::{Error, Result};
use crate::linsys::{antiderivative, linspace, SolverOptions};
use crate::signal::ScalarSignal;

/// Upper limit on the Simpson step.
pub const MAX_QUAD_STEP: f64 = 0.05;

/// Samples used to estimate `sup |u|` when it is not supplied.
const SUP_SAMPLES: usize = 20_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub horizon: f64,
    /// Bound on the discarded tail: `K sup|u| e^{-alpha T} / alpha`, doubled
    /// when both sides are cut.
    pub tail_bound: f64,
    pub step: f64,
    pub two_sided: bool,
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {x}"
        )))
    }
}

/// Smallest `T >= 0` with `(K sup_u / alpha) e^{-alpha T} <= tol / 2`.
pub fn tail_truncation_horizon(alpha: f64, k: f64, sup_u: f64, tol: f64) -> Result<f64> {
    horizon(alpha, 2.0 * k, sup_u, tol)
}

/// Two-sided variant: both tails together stay within `tol / 2`.
pub fn two_sided_horizon(alpha: f64, k: f64, sup_u: f64, tol: f64) -> Result<f64> {
    horizon(alpha, 4.0 * k, sup_u, tol)
}

fn horizon(alpha: f64, k2: f64, sup_u: f64, tol: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("K", k2)?;
    check_positive("tol", tol)?;
    if !(sup_u >= 0.0) || !sup_u.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sup of the input must be finite and non-negative, got {sup_u}"
        )));
    }
    if sup_u == 0.0 {
        return Ok(0.0);
    }
    Ok(((k2 * sup_u / (alpha * tol)).ln() / alpha).max(0.0))
}

/// Simpson step for integrands with frequencies up to `max_freq`.
pub fn quadrature_step(max_freq: f64) -> f64 {
    if max_freq > 0.0 {
        MAX_QUAD_STEP.min(1.0 / (10.0 * max_freq))
    } else {
        MAX_QUAD_STEP
    }
}

/// Largest step whose Simpson error on `K sup e^{-rate r}` modulated at
/// `max_freq` stays within `tol / 2`.
pub fn budget_step(rate: f64, k: f64, sup_u: f64, max_freq: f64, tol: f64) -> f64 {
    let scale = k * sup_u * (rate + max_freq).powi(4) / rate;
    if scale > 0.0 {
        (90.0 * tol / scale).powf(0.25)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolveOptions {
    pub tol: f64,
    /// `sup |u|`; estimated by sampling over the kernel span when absent.
    pub sup_u: Option<f64>,
    /// Largest frequency present in the integrand.
    pub max_freq: f64,
    /// Overrides the Simpson step rule.
    pub step: Option<f64>,
}

impl Default for ConvolveOptions {
    fn default() -> Self {
        ConvolveOptions {
            tol: 1e-6,
            sup_u: None,
            max_freq: 0.0,
            step: None,
        }
    }
}

impl ConvolveOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn step(&self, alpha: f64, k: f64, sup_u: f64) -> f64 {
        self.step.unwrap_or_else(|| {
            quadrature_step(self.max_freq).min(budget_step(
                alpha,
                k,
                sup_u,
                self.max_freq,
                self.tol,
            ))
        })
    }
}

/// Composite Simpson on `[a, b]` with at most `h_max` per sub-interval.
fn simpson<F, V>(a: f64, b: f64, h_max: f64, f: F) -> Result<V>
where
    F: Fn(f64) -> Result<V>,
    V: std::ops::Add<Output = V> + std::ops::Mul<f64, Output = V>,
{
    let len = b - a;
    let mut n = ((len / h_max).ceil() as usize).max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = len / n as f64;
    let mut acc = f(a)? + f(b)? * 1.0;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc = acc + f(a + h * i as f64)? * w;
    }
    Ok(acc * (h / 3.0))
}

fn sup_norm_estimate<U>(u: &U, lo: f64, hi: f64, dim: usize) -> f64
where
    U: Fn(f64) -> DVector<f64> + Sync + ?Sized,
{
    let ts = linspace(lo, hi, SUP_SAMPLES);
    ts.par_iter()
        .map(|&t| {
            let v = u(t);
            debug_assert_eq!(v.len(), dim);
            v.norm()
        })
        .reduce(|| 0.0, f64::max)
}

fn grid_range(t_grid: &[f64]) -> Result<(f64, f64)> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation grid".into()));
    }
    let lo = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

fn require_span(span: (f64, f64), need: (f64, f64)) -> Result<()> {
    if span.0 <= need.0 && need.1 <= span.1 {
        Ok(())
    } else {
        Err(Error::SpanInsufficient {
            lo: span.0,
            hi: span.1,
            need_lo: need.0,
            need_hi: need.1,
        })
    }
}

fn convolve<U>(
    g: &dyn GreenKernel,
    alpha: f64,
    k: f64,
    u: &U,
    t_grid: &[f64],
    opts: &ConvolveOptions,
    two_sided: bool,
) -> Result<(Vec<DVector<f64>>, TruncationPlan)>
where
    U: Fn(f64) -> DVector<f64> + Sync + ?Sized,
{
    check_positive("alpha", alpha)?;
    check_positive("K", k)?;
    check_positive("tol", opts.tol)?;
    let n = g.dim();
    let (t_lo, t_hi) = grid_range(t_grid)?;
    let span = g.span();
    let sup = match opts.sup_u {
        Some(s) => s,
        None => sup_norm_estimate(u, span.0, span.1, n) * 1.1,
    };
    let horizon = if two_sided {
        two_sided_horizon(alpha, k, sup, opts.tol)?
    } else {
        tail_truncation_horizon(alpha, k, sup, opts.tol)?
    };
    let need = (
        t_lo - horizon,
        if two_sided { t_hi + horizon } else { t_hi },
    );
    require_span(span, need)?;
    let step = opts.step(alpha, k, sup);
    let plan = TruncationPlan {
        horizon,
        tail_bound: (if two_sided { 2.0 } else { 1.0 }) * k * sup * (-alpha * horizon).exp()
            / alpha,
        step,
        two_sided,
    };
    let out = t_grid
        .par_iter()
        .map(|&t| {
            let mut x = DVector::zeros(n);
            if horizon > 0.0 {
                x += simpson(t - horizon, t, step, |s| {
                    Ok(g.green_branch(t, s, Branch::Stable)? * u(s))
                })?;
                if two_sided {
                    x += simpson(t, t + horizon, step, |s| {
                        Ok(g.green_branch(t, s, Branch::Unstable)? * u(s))
                    })?;
                }
            }
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, plan))
}

/// `G1 u` at every point of `t_grid`.
pub fn g1_convolve<U>(
    g: &dyn GreenKernel,
    alpha: f64,
    k: f64,
    u: &U,
    t_grid: &[f64],
    opts: &ConvolveOptions,
) -> Result<(Vec<DVector<f64>>, TruncationPlan)>
where
    U: Fn(f64) -> DVector<f64> + Sync + ?Sized,
{
    convolve(g, alpha, k, u, t_grid, opts, true)
}

/// `G2 u` at every point of `t_grid`; only the `t >= s` branch enters.
pub fn g2_convolve<U>(
    g: &dyn GreenKernel,
    alpha: f64,
    k: f64,
    u: &U,
    t_grid: &[f64],
    opts: &ConvolveOptions,
) -> Result<(Vec<DVector<f64>>, TruncationPlan)>
where
    U: Fn(f64) -> DVector<f64> + Sync + ?Sized,
{
    convolve(g, alpha, k, u, t_grid, opts, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub tol: f64,
    /// `sup |u|`; estimated by sampling over the needed range when absent.
    pub sup_u: Option<f64>,
    pub max_freq: f64,
    pub step: Option<f64>,
    pub solver: SolverOptions,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            tol: 1e-6,
            sup_u: None,
            max_freq: 0.0,
            step: None,
            solver: SolverOptions::default(),
        }
    }
}

/// `int_{-inf}^t exp(-int_s^t a) u(s) ds` on `t_grid`.
///
/// `inf a` is taken over the whole line and must be positive. On an
/// ascending grid the integral is marched from point to point,
/// `v(t') = e^{-(I(t') - I(t))} v(t) + int_t^{t'} e^{-(I(t') - I(s))} u(s) ds`,
/// so only the first point pays for the full horizon.
pub fn scalar_kernel_convolve<U>(
    a: &ScalarSignal,
    u: &U,
    t_grid: &[f64],
    opts: &KernelOptions,
) -> Result<(Vec<f64>, TruncationPlan)>
where
    U: Fn(f64) -> f64 + Sync + ?Sized,
{
    let a_low = a.bounds(None).lo;
    if !(a_low > 0.0) {
        return Err(Error::A2Violation(format!(
            "inf of the kernel coefficient {a} is not positive (lower bound {a_low})"
        )));
    }
    check_positive("tol", opts.tol)?;
    let (t_lo, t_hi) = grid_range(t_grid)?;
    let max_freq = a
        .frequencies()
        .iter()
        .copied()
        .fold(opts.max_freq, |m, w| m.max(w.abs()));
    let sup = match opts.sup_u {
        Some(s) => s,
        None => {
            // Provisional horizon from a local estimate, then re-estimate
            // over the range actually integrated.
            let local = linspace(t_lo, t_hi, SUP_SAMPLES)
                .par_iter()
                .map(|&t| u(t).abs())
                .reduce(|| 0.0, f64::max);
            let h = tail_truncation_horizon(a_low, 1.0, local.max(1e-300), opts.tol)?;
            linspace(t_lo - 2.0 * h - 1.0, t_hi, SUP_SAMPLES)
                .par_iter()
                .map(|&t| u(t).abs())
                .reduce(|| 0.0, f64::max)
                * 1.1
        }
    };
    let horizon = tail_truncation_horizon(a_low, 1.0, sup, opts.tol)?;
    let a_high = a.bounds(None).hi;
    let step = opts.step.unwrap_or_else(|| {
        quadrature_step(max_freq).min(budget_step(
            a_low,
            1.0,
            sup,
            a_high - a_low + max_freq,
            opts.tol,
        ))
    });
    let plan = TruncationPlan {
        horizon,
        tail_bound: sup * (-a_low * horizon).exp() / a_low,
        step,
        two_sided: false,
    };
    let lo = t_lo - horizon;
    let anchor = 0f64.clamp(lo, t_hi);
    let span = if t_hi > lo {
        (lo, t_hi)
    } else {
        (lo, lo + 1.0)
    };
    let ia = antiderivative(a, anchor, span, &opts.solver)?;
    let big_i = |t: f64| ia.eval_scalar(t);
    let direct = |t: f64| -> Result<f64> {
        if horizon == 0.0 {
            return Ok(0.0);
        }
        let it = big_i(t)?;
        simpson(t - horizon, t, step, |s| Ok((big_i(s)? - it).exp() * u(s)))
    };
    let ascending = t_grid.windows(2).all(|w| w[1] > w[0]);
    let values = if ascending && t_grid.len() > 1 {
        // The local integrals are independent; only the recursion is serial.
        let pieces = t_grid
            .par_windows(2)
            .map(|w| {
                let (t0, t1) = (w[0], w[1]);
                let i1 = big_i(t1)?;
                let decay = (big_i(t0)? - i1).exp();
                let local = simpson(t0, t1, step, |s| Ok((big_i(s)? - i1).exp() * u(s)))?;
                Ok((decay, local))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let mut out = Vec::with_capacity(t_grid.len());
        let mut v = direct(t_grid[0])?;
        out.push(v);
        for (decay, local) in pieces {
            v = decay * v + local;
            out.push(v);
        }
        out
    } else {
        t_grid
            .par_iter()
            .map(|&t| direct(t))
            .collect::<Result<Vec<_>>>()?
    };
    Ok((values, plan))
}
