use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::linspace;
use crate::signal::{Interval, ScalarSignal};

/// Right end of the sampled range for numerically analysed functions.
pub const SAMPLE_MAX: f64 = 200.0;
const SAMPLES: usize = 200_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `z e^{-z}`
    Nicholson,
    /// `e^{-z}`
    LasotaWazewska,
    /// `z / (1 + z^m)`
    MackeyGlass { m: f64 },
    /// Expression in `z`.
    Custom,
}

/// Production function `f: [0, inf) -> [0, inf)` with its extremal
/// constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearitySpec {
    #[serde(flatten)]
    pub kind: NonlinearityKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<ScalarSignal>,
    /// Location of the maximum, `None` when the supremum is not attained.
    pub m_star: Option<f64>,
    pub f_max: f64,
    /// Infimum over `[0, inf)`.
    pub f_min: f64,
    /// Lipschitz constant on `[0, inf)`.
    pub l_global: f64,
    /// True when the constants come from sampling rather than calculus.
    pub sampled: bool,
}

/// Largest value of `g` on `[a, b]`: dense sampling, then golden-section
/// refinement around the best sample.
pub(crate) fn sampled_max(g: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (f64, f64) {
    let xs = linspace(a, b, n);
    let (mut best, mut arg) = (f64::NEG_INFINITY, a);
    for &x in &xs {
        let v = g(x);
        if v > best {
            best = v;
            arg = x;
        }
    }
    let h = (b - a) / (n - 1) as f64;
    let (mut lo, mut hi) = ((arg - h).max(a), (arg + h).min(b));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if g(x1) >= g(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let x = 0.5 * (lo + hi);
    let v = g(x);
    if v > best {
        (x, v)
    } else {
        (arg, best)
    }
}

impl NonlinearitySpec {
    pub fn nicholson() -> Self {
        NonlinearitySpec {
            kind: NonlinearityKind::Nicholson,
            expr: None,
            m_star: Some(1.0),
            f_max: 1.0 / E,
            f_min: 0.0,
            l_global: 1.0,
            sampled: false,
        }
    }

    pub fn lasota_wazewska() -> Self {
        NonlinearitySpec {
            kind: NonlinearityKind::LasotaWazewska,
            expr: None,
            m_star: Some(0.0),
            f_max: 1.0,
            f_min: 0.0,
            l_global: 1.0,
            sampled: false,
        }
    }

    /// For `m <= 1` the supremum is not attained, which fails A4 downstream.
    pub fn mackey_glass(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidExponent(m));
        }
        let mut s = NonlinearitySpec {
            kind: NonlinearityKind::MackeyGlass { m },
            expr: None,
            m_star: None,
            f_max: f64::INFINITY,
            f_min: 0.0,
            l_global: 1.0,
            sampled: false,
        };
        if m > 1.0 {
            let ms = (m - 1.0).powf(-1.0 / m);
            s.m_star = Some(ms);
            s.f_max = ms * (m - 1.0) / m;
            // f'(0) = 1 is the steepest slope for m >= 1 on the rising side;
            // the falling side is sampled.
            s.l_global = 1f64.max(s.lipschitz_from(ms));
        } else if m == 1.0 {
            s.f_max = 1.0;
        }
        Ok(s)
    }

    /// Custom production function given as an expression in `z`.
    pub fn custom(text: &str) -> Result<Self> {
        let expr = ScalarSignal::parse_with(text, "z", Interval::new(0.0, f64::INFINITY))?;
        let g = |z: f64| expr.eval(z);
        let (arg, f_max) = sampled_max(&g, 0.0, SAMPLE_MAX, SAMPLES);
        let (_, neg_min) = sampled_max(&|z| -g(z), 0.0, SAMPLE_MAX, SAMPLES);
        let h = SAMPLE_MAX / (SAMPLES - 1) as f64;
        let mut s = NonlinearitySpec {
            kind: NonlinearityKind::Custom,
            m_star: (arg < SAMPLE_MAX - h).then_some(arg),
            f_max,
            f_min: -neg_min,
            l_global: 0.0,
            sampled: true,
            expr: Some(expr),
        };
        s.l_global = s.lipschitz_from(0.0);
        Ok(s)
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Nicholson => z * (-z).exp(),
            NonlinearityKind::LasotaWazewska => (-z).exp(),
            NonlinearityKind::MackeyGlass { m } => z / (1.0 + z.powf(m)),
            NonlinearityKind::Custom => self.expr.as_ref().expect("custom has expr").eval(z),
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Nicholson => (1.0 - z) * (-z).exp(),
            NonlinearityKind::LasotaWazewska => -(-z).exp(),
            NonlinearityKind::MackeyGlass { m } => {
                let zm = z.powf(m);
                (1.0 + (1.0 - m) * zm) / ((1.0 + zm) * (1.0 + zm))
            }
            NonlinearityKind::Custom => {
                let h = 1e-6 * (1.0 + z.abs());
                let lo = (z - h).max(0.0);
                (self.eval(z + h) - self.eval(lo)) / (z + h - lo)
            }
        }
    }

    /// Lipschitz constant of `f` on `[a, inf)`.
    pub fn lipschitz_from(&self, a: f64) -> f64 {
        let a = a.max(0.0);
        match self.kind {
            NonlinearityKind::Nicholson => {
                // |f'| = |1 - z| e^{-z} peaks at z = 2 on [1, inf).
                let at_a = (1.0 - a).abs() * (-a).exp();
                if a < 2.0 {
                    at_a.max((-2f64).exp())
                } else {
                    at_a
                }
            }
            NonlinearityKind::LasotaWazewska => (-a).exp(),
            _ => {
                let g = |z: f64| self.derivative(z).abs();
                sampled_max(&g, a, a + SAMPLE_MAX, SAMPLES).1
            }
        }
    }

    /// A4 on samples: `f >= 0`, maximum attained, non-increasing past `m*`.
    pub fn check_a4(&self) -> std::result::Result<(), String> {
        let Some(ms) = self.m_star else {
            return Err("maximum not attained".into());
        };
        let zs = linspace(0.0, ms + SAMPLE_MAX, 20_001);
        if let Some(z) = zs.iter().find(|&&z| !(self.eval(z) >= 0.0)) {
            return Err(format!("f({z}) < 0"));
        }
        let tail: Vec<f64> = zs.iter().copied().filter(|&z| z > ms).collect();
        for w in tail.windows(2) {
            let (f0, f1) = (self.eval(w[0]), self.eval(w[1]));
            if f1 > f0 + 1e-14 * f0.abs().max(1.0) {
                return Err(format!(
                    "f increases on [{}, {}] beyond m* = {ms}",
                    w[0], w[1]
                ));
            }
        }
        Ok(())
    }
}

/// Bounded Lipschitz harvesting function `H: [0, inf) -> [0, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarvestSpec {
    pub expr: ScalarSignal,
    pub h_max: f64,
    pub h_min: f64,
    pub l_h: f64,
    /// True when the bounds come from sampling `[0, SAMPLE_MAX]`.
    pub sampled: bool,
}

impl HarvestSpec {
    /// `text` is an expression in `u`; `l_h` is the declared Lipschitz
    /// constant.
    pub fn new(text: &str, l_h: f64) -> Result<Self> {
        if !(l_h >= 0.0 && l_h.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "L_H must be finite and >= 0, got {l_h}"
            )));
        }
        let expr = ScalarSignal::parse_with(text, "u", Interval::new(0.0, f64::INFINITY))?;
        let enc = expr.bounds(None);
        let (h_min, h_max, sampled) = if enc.lo.is_finite() && enc.hi.is_finite() {
            (enc.lo, enc.hi, false)
        } else {
            let g = |u: f64| expr.eval(u);
            let (_, hi) = sampled_max(&g, 0.0, SAMPLE_MAX, SAMPLES);
            let (_, neg) = sampled_max(&|u| -g(u), 0.0, SAMPLE_MAX, SAMPLES);
            (-neg, hi, true)
        };
        Ok(HarvestSpec {
            expr,
            h_max,
            h_min,
            l_h,
            sampled,
        })
    }

    pub fn constant(c: f64) -> Self {
        HarvestSpec::new(&format!("{c:e}"), 0.0).expect("numeric literal parses")
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.expr.eval(u)
    }

    /// A3 on samples: `H >= 0`, bounded, and `L_H` dominates the observed
    /// difference quotients.
    pub fn check_a3(&self) -> std::result::Result<(), String> {
        if !(self.h_max.is_finite()) {
            return Err("H is unbounded".into());
        }
        if self.h_min < 0.0 {
            return Err(format!("H takes negative values (inf {})", self.h_min));
        }
        let us = linspace(0.0, SAMPLE_MAX, 20_001);
        for w in us.windows(2) {
            let q = (self.eval(w[1]) - self.eval(w[0])).abs() / (w[1] - w[0]);
            if q > self.l_h * (1.0 + 1e-9) + 1e-12 {
                return Err(format!(
                    "difference quotient {q} on [{}, {}] exceeds L_H = {}",
                    w[0], w[1], self.l_h
                ));
            }
        }
        Ok(())
    }
}
