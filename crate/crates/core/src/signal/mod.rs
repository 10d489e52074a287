//! Time-varying coefficients as small expression trees.
//!
//! A [`ScalarSignal`] is parsed from text such as
//! `"1 + 0.1*sin(t) + 0.1*sin(1.4142135623730951*t)"`, evaluated exactly by
//! walking the tree, and bounded by [`signal_bounds`]. Division is only
//! accepted when the denominator is provably bounded away from zero, so every
//! accepted signal is total on its domain.

mod bounds;
mod expr;
mod interval;
mod parse;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use expr::Expr;
pub use interval::Interval;

use crate::error::{Error, Result};

/// Number of sub-windows used when bounding a signal over a finite window.
pub const DEFAULT_BOUND_PIECES: usize = 10_000;

/// A scalar coefficient function of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSignal {
    expr: Expr,
    var: String,
    domain: Interval,
    frequencies: Vec<f64>,
}

/// Parses a signal in the time variable `t` over the whole real line.
pub fn parse_signal(text: &str) -> Result<ScalarSignal> {
    ScalarSignal::parse(text)
}

pub fn eval_signal(s: &ScalarSignal, t: f64) -> f64 {
    s.eval(t)
}

/// Interval guaranteed to contain the range of `s` over `window`, or over the
/// signal's whole domain when `window` is `None`.
pub fn signal_bounds(s: &ScalarSignal, window: Option<(f64, f64)>) -> Interval {
    s.bounds(window)
}

impl ScalarSignal {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, "t", Interval::ENTIRE)
    }

    /// Parses with a custom variable name (e.g. `u` for harvesting functions)
    /// over `domain`. Totality of divisions is checked over `domain`.
    pub fn parse_with(text: &str, var: &str, domain: Interval) -> Result<Self> {
        let expr = parse::parse(text, var, domain)?;
        let frequencies = bounds::affine_frequencies(&expr);
        Ok(ScalarSignal {
            expr,
            var: var.to_string(),
            domain,
            frequencies,
        })
    }

    pub fn constant(c: f64) -> Self {
        ScalarSignal {
            expr: Expr::Num(c),
            var: "t".to_string(),
            domain: Interval::ENTIRE,
            frequencies: Vec::new(),
        }
    }

    /// Replaces the frequencies (angular, in rad per unit time) used by
    /// near-period searches and quadrature step rules. Parsing fills them
    /// from every sinusoid with an affine argument.
    pub fn with_frequencies(mut self, frequencies: Vec<f64>) -> Self {
        self.frequencies = frequencies;
        self
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.expr.eval(t)
    }

    pub fn is_constant(&self) -> bool {
        !self.expr.has_var()
    }

    pub fn bounds(&self, window: Option<(f64, f64)>) -> Interval {
        self.bounds_with(window, DEFAULT_BOUND_PIECES)
    }

    pub fn bounds_with(&self, window: Option<(f64, f64)>, pieces: usize) -> Interval {
        match window {
            Some((a, b)) if a.is_finite() && b.is_finite() => {
                let (a, b) = (a.min(b), a.max(b));
                let local = bounds::enclose_window(&self.expr, a, b, pieces);
                let global = bounds::enclose_on(&self.expr, self.domain);
                bounds::intersect(local, global)
            }
            _ => bounds::enclose_on(&self.expr, self.domain),
        }
    }

    /// The signal `t -> self(t + s)`.
    pub fn shifted(&self, s: f64) -> Self {
        ScalarSignal {
            expr: self.expr.shifted(s),
            var: self.var.clone(),
            domain: self.domain,
            frequencies: self.frequencies.clone(),
        }
    }
}

impl fmt::Display for ScalarSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.render(&self.var).fmt(f)
    }
}

impl std::str::FromStr for ScalarSignal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScalarSignal::parse(s)
    }
}

impl Serialize for ScalarSignal {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScalarSignal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        ScalarSignal::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Square matrix of scalar signals, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSignal {
    dim: usize,
    entries: Vec<ScalarSignal>,
}

impl MatrixSignal {
    pub fn new(dim: usize, entries: Vec<ScalarSignal>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("matrix dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} entries given for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(MatrixSignal { dim, entries })
    }

    /// Builds from rows of expression strings.
    pub fn parse_rows<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension(format!(
                    "row of length {} in a {dim}x{dim} matrix",
                    row.len()
                )));
            }
            for e in row {
                entries.push(ScalarSignal::parse(e.as_ref())?);
            }
        }
        MatrixSignal::new(dim, entries)
    }

    /// Diagonal matrix with the given diagonal expressions.
    pub fn diagonal<S: AsRef<str>>(diag: &[S]) -> Result<Self> {
        let n = diag.len();
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            diag[i].as_ref().to_string()
                        } else {
                            "0".to_string()
                        }
                    })
                    .collect()
            })
            .collect();
        MatrixSignal::parse_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarSignal {
        &self.entries[i * self.dim + j]
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.dim, self.dim, self.entries.iter().map(|e| e.eval(t)))
    }

    /// Row-major evaluation into `out` (length `dim * dim`).
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.entries) {
            *o = e.eval(t);
        }
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(ScalarSignal::is_constant)
    }

    pub fn shifted(&self, s: f64) -> Self {
        MatrixSignal {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.shifted(s)).collect(),
        }
    }

    /// Upper bound on `sup_t ||A(t)||_2` via the Frobenius norm of the
    /// entrywise magnitude bounds.
    pub fn sup_norm_bound(&self, window: Option<(f64, f64)>) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let b = e.bounds(window);
                b.lo.abs().max(b.hi.abs()).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}
