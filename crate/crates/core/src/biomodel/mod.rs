//! Scalar delay model with production terms and harvesting:
//!
//! ```text
//! u'(t) = -alpha(t) u(t)
//!         + sum_i beta_i(t) f_i(lambda_i(t) u(t - tau_i(t)))
//!         + b(t) H(u(t - sigma(t)))
//! ```
//!
//! [`check_hypotheses`] evaluates the standing assumptions A1 to A6 and the
//! contraction constant, [`integrate_dde`] runs the model forward and
//! [`picard_solve`] iterates the integral operator `M` to its fixed point.

mod dde;
mod nonlinearity;
mod picard;

pub use dde::{integrate_dde, invariant_region_check, History, HistoryFn, Trajectory};
pub use nonlinearity::{HarvestSpec, NonlinearityKind, NonlinearitySpec};
pub use picard::{
    apply_m, compare_attractor, picard_solve, GridFunction, MReport, PicardOptions, PicardState,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Interval, ScalarSignal};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BioModelSpec {
    pub alpha: ScalarSignal,
    pub b: ScalarSignal,
    pub sigma: ScalarSignal,
    pub beta: Vec<ScalarSignal>,
    pub lambda: Vec<ScalarSignal>,
    pub tau: Vec<ScalarSignal>,
    pub nonlinearities: Vec<NonlinearitySpec>,
    pub harvest: HarvestSpec,
    /// Positive lower bound on every delay; defaults to the smallest delay
    /// infimum.
    pub tau_low: Option<f64>,
}

impl BioModelSpec {
    pub fn new(
        alpha: ScalarSignal,
        b: ScalarSignal,
        sigma: ScalarSignal,
        terms: Vec<(ScalarSignal, ScalarSignal, ScalarSignal, NonlinearitySpec)>,
        harvest: HarvestSpec,
    ) -> Self {
        let mut spec = BioModelSpec {
            alpha,
            b,
            sigma,
            beta: Vec::new(),
            lambda: Vec::new(),
            tau: Vec::new(),
            nonlinearities: Vec::new(),
            harvest,
            tau_low: None,
        };
        for (beta, lambda, tau, f) in terms {
            spec.beta.push(beta);
            spec.lambda.push(lambda);
            spec.tau.push(tau);
            spec.nonlinearities.push(f);
        }
        spec
    }

    /// One production term with constant coefficients.
    #[allow(clippy::too_many_arguments)]
    pub fn constant(
        alpha: f64,
        beta: f64,
        lambda: f64,
        tau: f64,
        b: f64,
        sigma: f64,
        f: NonlinearitySpec,
        harvest: HarvestSpec,
    ) -> Self {
        let c = ScalarSignal::constant;
        BioModelSpec::new(
            c(alpha),
            c(b),
            c(sigma),
            vec![(c(beta), c(lambda), c(tau), f)],
            harvest,
        )
    }

    pub fn with_tau_low(mut self, tau_low: f64) -> Self {
        self.tau_low = Some(tau_low);
        self
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.lambda.len() != n || self.tau.len() != n || self.nonlinearities.len() != n {
            return Err(Error::Dimension(format!(
                "{} beta, {} lambda, {} tau and {} nonlinearities",
                n,
                self.lambda.len(),
                self.tau.len(),
                self.nonlinearities.len()
            )));
        }
        Ok(())
    }

    /// Largest delay `max(max_i sup tau_i, sup sigma)`.
    pub fn max_delay(&self) -> f64 {
        self.tau
            .iter()
            .map(|t| t.bounds(None).hi)
            .fold(self.sigma.bounds(None).hi, f64::max)
    }

    /// Configured lower delay bound, or the smallest delay infimum.
    pub fn delay_lower_bound(&self) -> f64 {
        self.tau_low.unwrap_or_else(|| {
            self.tau
                .iter()
                .map(|t| t.bounds(None).lo)
                .fold(self.sigma.bounds(None).lo, f64::min)
        })
    }

    pub fn bars(&self) -> Bars {
        let b = |s: &ScalarSignal| s.bounds(None);
        let lambda: Vec<Interval> = self.lambda.iter().map(b).collect();
        Bars {
            alpha: b(&self.alpha),
            b: b(&self.b),
            sigma: b(&self.sigma),
            beta: self.beta.iter().map(b).collect(),
            lambda_bar: lambda
                .iter()
                .map(|l| l.hi)
                .fold(f64::NEG_INFINITY, f64::max),
            lambda_low: lambda.iter().map(|l| l.lo).fold(f64::INFINITY, f64::min),
            lambda,
            tau: self.tau.iter().map(b).collect(),
            h: Interval::new(self.harvest.h_min, self.harvest.h_max),
            m_star_bar: self
                .nonlinearities
                .iter()
                .map(|f| f.m_star.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max),
            tau_max: self.max_delay(),
        }
    }
}

/// Enclosures of every coefficient over the whole line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bars {
    pub alpha: Interval,
    pub b: Interval,
    pub sigma: Interval,
    pub beta: Vec<Interval>,
    pub lambda: Vec<Interval>,
    pub tau: Vec<Interval>,
    pub h: Interval,
    /// `max_i m*_i`, infinite when some maximum is not attained.
    pub m_star_bar: f64,
    /// `max_i sup lambda_i`.
    pub lambda_bar: f64,
    /// `min_i inf lambda_i`.
    pub lambda_low: f64,
    pub tau_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaStrategy {
    /// `gamma2` is placed at `(1 + eps)` times its lower admissible bound.
    pub eps: f64,
}

impl Default for GammaStrategy {
    fn default() -> Self {
        GammaStrategy { eps: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn from(r: std::result::Result<(), String>) -> Self {
        match r {
            Ok(()) => Check {
                holds: true,
                detail: None,
            },
            Err(d) => Check {
                holds: false,
                detail: Some(d),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    #[serde(rename = "A1")]
    pub a1: Check,
    #[serde(rename = "A2")]
    pub a2: Check,
    #[serde(rename = "A3")]
    pub a3: Check,
    #[serde(rename = "A4")]
    pub a4: Check,
    #[serde(rename = "A5")]
    pub a5: Check,
    #[serde(rename = "A6")]
    pub a6: Check,
    pub bars: Bars,
    pub gamma2: f64,
    /// Open interval `gamma1` must lie in.
    pub gamma1_window: (f64, f64),
    pub gamma1: Option<f64>,
    /// `ell_i` on `[m*_bar, inf)`.
    pub ell: Vec<f64>,
    pub kappa: f64,
    pub contraction: bool,
    /// Names of the failed conditions, e.g. `"A5"` or `"kappa < 1"`.
    pub violated: Vec<String>,
}

impl HypothesisReport {
    pub fn gammas(&self) -> Option<(f64, f64)> {
        self.gamma1.map(|g1| (g1, self.gamma2))
    }

    pub fn all_hold(&self) -> bool {
        self.violated.is_empty()
    }
}

fn positive(name: &str, iv: Interval) -> std::result::Result<(), String> {
    if iv.lo > 0.0 {
        Ok(())
    } else {
        Err(format!("inf {name} = {} is not positive", iv.lo))
    }
}

/// Evaluates A1 to A6, chooses `(gamma1, gamma2)` and computes `kappa`.
/// Infeasibility is reported, never raised.
pub fn check_hypotheses(spec: &BioModelSpec, strategy: &GammaStrategy) -> Result<HypothesisReport> {
    spec.validate()?;
    let bars = spec.bars();
    let n = spec.n();

    let a1 = {
        let mut r = positive("alpha", bars.alpha)
            .and_then(|_| positive("sigma", bars.sigma))
            .and_then(|_| {
                if bars.b.lo >= 0.0 {
                    Ok(())
                } else {
                    Err(format!("inf b = {} is negative", bars.b.lo))
                }
            });
        for i in 0..n {
            r = r
                .and_then(|_| positive(&format!("beta_{}", i + 1), bars.beta[i]))
                .and_then(|_| positive(&format!("lambda_{}", i + 1), bars.lambda[i]))
                .and_then(|_| positive(&format!("tau_{}", i + 1), bars.tau[i]));
        }
        Check::from(r)
    };
    let a2 = {
        let mut r = positive("alpha", bars.alpha);
        for i in 0..n {
            r = r
                .and_then(|_| positive(&format!("beta_{}", i + 1), bars.beta[i]))
                .and_then(|_| positive(&format!("lambda_{}", i + 1), bars.lambda[i]));
        }
        Check::from(r)
    };
    let a3 = Check::from(spec.harvest.check_a3());
    let a4 = Check::from(
        spec.nonlinearities
            .iter()
            .enumerate()
            .try_for_each(|(i, f)| f.check_a4().map_err(|e| format!("f_{}: {e}", i + 1))),
    );

    let upper_sum: f64 = (0..n)
        .map(|i| bars.beta[i].hi * spec.nonlinearities[i].f_max)
        .sum::<f64>()
        + bars.b.hi * bars.h.hi;
    let gamma2 = upper_sum / bars.alpha.lo * (1.0 + strategy.eps);
    let lower_sum: f64 = (0..n)
        .map(|i| bars.beta[i].lo * spec.nonlinearities[i].eval(bars.lambda_bar * gamma2))
        .sum::<f64>()
        + bars.b.lo * bars.h.lo;
    let w_lo = if n == 0 {
        0.0
    } else {
        bars.m_star_bar / bars.lambda_low
    };
    let w_hi = lower_sum / bars.alpha.hi;
    let feasible =
        bars.alpha.lo > 0.0 && gamma2 > 0.0 && gamma2.is_finite() && w_lo >= 0.0 && w_lo < w_hi;
    let gamma1 = feasible.then_some(0.5 * (w_lo + w_hi));
    let a5 = Check::from(if feasible {
        Ok(())
    } else {
        Err(format!(
            "m*_bar / lambda_low = {w_lo} < gamma1 < {w_hi} has no solution (gamma2 = {gamma2})"
        ))
    });

    let ell: Vec<f64> = spec
        .nonlinearities
        .iter()
        .map(|f| f.lipschitz_from(bars.m_star_bar))
        .collect();
    let a6 = Check::from(
        match ell.iter().position(|l| !(l.is_finite() && *l >= 0.0)) {
            Some(i) => Err(format!(
                "no finite Lipschitz constant for f_{} on [m*_bar, inf)",
                i + 1
            )),
            None => Ok(()),
        },
    );
    let kappa = ((0..n)
        .map(|i| bars.beta[i].hi * bars.lambda[i].hi * ell[i])
        .sum::<f64>()
        + bars.b.hi * spec.harvest.l_h)
        / bars.alpha.lo;
    let contraction = kappa < 1.0 && bars.alpha.lo > 0.0;

    let mut violated = Vec::new();
    for (name, c) in [
        ("A1", &a1),
        ("A2", &a2),
        ("A3", &a3),
        ("A4", &a4),
        ("A5", &a5),
        ("A6", &a6),
    ] {
        if !c.holds {
            violated.push(name.to_string());
        }
    }
    if !contraction {
        violated.push("kappa < 1".to_string());
    }
    Ok(HypothesisReport {
        a1,
        a2,
        a3,
        a4,
        a5,
        a6,
        bars,
        gamma2,
        gamma1_window: (w_lo, w_hi),
        gamma1,
        ell,
        kappa,
        contraction,
        violated,
    })
}

/// Lower and upper asymptotic bounds shared by every admissible solution.
pub fn permanence_bounds(spec: &BioModelSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let bars = spec.bars();
    let n = spec.n();
    let lower = ((0..n)
        .map(|i| bars.beta[i].lo * spec.nonlinearities[i].f_min)
        .sum::<f64>()
        + bars.b.lo * bars.h.lo)
        / bars.alpha.hi;
    let upper = ((0..n)
        .map(|i| bars.beta[i].hi * spec.nonlinearities[i].f_max)
        .sum::<f64>()
        + bars.b.hi * bars.h.hi)
        / bars.alpha.lo;
    Ok((lower, upper))
}

/// `N(u)(s)`, the production and harvesting terms along `u`.
pub fn apply_n<U: Fn(f64) -> f64 + ?Sized>(spec: &BioModelSpec, u: &U, s: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..spec.n() {
        let z = spec.lambda[i].eval(s) * u(s - spec.tau[i].eval(s));
        acc += spec.beta[i].eval(s) * spec.nonlinearities[i].eval(z);
    }
    acc + spec.b.eval(s) * spec.harvest.eval(u(s - spec.sigma.eval(s)))
}
