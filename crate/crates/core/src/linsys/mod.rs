//! Fundamental matrices, antiderivatives and residuals for `x' = A(t) x`.
//!
//! All integration is classical fourth-order Runge-Kutta on a fixed step
//! `h = min(h_max, span / n_min)` with cubic Hermite dense output. The inverse
//! fundamental matrix is integrated from the adjoint equation `Y' = -Y A(t)`.
//! When `A` is constant the pair is evaluated through the matrix exponential
//! instead, which is exact up to rounding at any time.

mod dense;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use dense::{DenseSolution, Shape};

use crate::error::{Error, Result};
use crate::signal::{MatrixSignal, ScalarSignal};

/// Step counts beyond this are treated as step-size underflow.
const MAX_STEPS: usize = 50_000_000;

/// Number of points on which the identity defect of a pair is checked.
const DEFECT_GRID: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub h_max: f64,
    pub n_min: usize,
    pub tol_id: f64,
    /// Use the matrix exponential when `A` is constant.
    pub exact_constant: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            h_max: 0.01,
            n_min: 100,
            tol_id: 1e-8,
            exact_constant: true,
        }
    }
}

impl SolverOptions {
    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Step used on a span of length `len`.
    pub fn step_for(&self, len: f64) -> f64 {
        let h = self.h_max.min(len / self.n_min.max(1) as f64);
        if h > 0.0 {
            h
        } else {
            self.h_max
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h_max > 0.0) || !self.h_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "h_max must be positive, got {}",
                self.h_max
            )));
        }
        if !(self.tol_id > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol_id must be positive, got {}",
                self.tol_id
            )));
        }
        Ok(())
    }
}

/// Operator 2-norm (largest singular value).
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].abs(),
        _ => m.singular_values().max(),
    }
}

/// Fixed-step RK4 from `t0` to `t1` (either direction). Returns knots in the
/// order visited together with values and right-hand-side derivatives.
fn rk4_march<F>(y0: &[f64], t0: f64, t1: f64, h_max: f64, rhs: F) -> Result<Marched>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let w = y0.len();
    let len = (t1 - t0).abs();
    let steps = if len == 0.0 {
        0
    } else {
        let s = (len / h_max).ceil();
        if !s.is_finite() || s > MAX_STEPS as f64 {
            return Err(Error::Integration {
                t: t0,
                reason: format!("step-size underflow: {s} steps needed on a span of {len}"),
            });
        }
        (s as usize).max(1)
    };
    let h = if steps == 0 {
        0.0
    } else {
        (t1 - t0) / steps as f64
    };
    let mut knots = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity((steps + 1) * w);
    let mut derivs = Vec::with_capacity((steps + 1) * w);
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; w];
    let mut k2 = vec![0.0; w];
    let mut k3 = vec![0.0; w];
    let mut k4 = vec![0.0; w];
    let mut tmp = vec![0.0; w];
    rhs(t0, &y, &mut k1);
    knots.push(t0);
    values.extend_from_slice(&y);
    derivs.extend_from_slice(&k1);
    for i in 0..steps {
        let t = t0 + h * i as f64;
        for c in 0..w {
            tmp[c] = y[c] + 0.5 * h * k1[c];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for c in 0..w {
            tmp[c] = y[c] + 0.5 * h * k2[c];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for c in 0..w {
            tmp[c] = y[c] + h * k3[c];
        }
        let tn = if i + 1 == steps {
            t1
        } else {
            t0 + h * (i + 1) as f64
        };
        rhs(tn, &tmp, &mut k4);
        for c in 0..w {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                t: tn,
                reason: "solution is no longer finite".into(),
            });
        }
        rhs(tn, &y, &mut k1);
        knots.push(tn);
        values.extend_from_slice(&y);
        derivs.extend_from_slice(&k1);
    }
    Ok(Marched {
        width: w,
        knots,
        values,
        derivs,
    })
}

struct Marched {
    width: usize,
    knots: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl Marched {
    fn reversed(self) -> Marched {
        let w = self.width;
        let n = self.knots.len();
        let mut values = Vec::with_capacity(self.values.len());
        let mut derivs = Vec::with_capacity(self.derivs.len());
        for i in (0..n).rev() {
            values.extend_from_slice(&self.values[i * w..(i + 1) * w]);
            derivs.extend_from_slice(&self.derivs[i * w..(i + 1) * w]);
        }
        let mut knots = self.knots;
        knots.reverse();
        Marched {
            width: w,
            knots,
            values,
            derivs,
        }
    }
}

/// Integrates from `anchor` out to both ends of `span` and joins the two
/// halves into one ascending dense solution.
fn integrate_both_ways<F>(
    shape: Shape,
    y0: &[f64],
    anchor: f64,
    span: (f64, f64),
    h: f64,
    rhs: F,
) -> Result<DenseSolution>
where
    F: Fn(f64, &[f64], &mut [f64]) + Copy,
{
    let (lo, hi) = span;
    let left = rk4_march(y0, anchor, lo, h, rhs)?.reversed();
    let right = rk4_march(y0, anchor, hi, h, rhs)?;
    let w = shape.width();
    let mut knots = left.knots;
    let mut values = left.values;
    let mut derivs = left.derivs;
    // Drop the duplicated anchor knot.
    knots.pop();
    values.truncate(values.len() - w);
    derivs.truncate(derivs.len() - w);
    knots.extend_from_slice(&right.knots);
    values.extend_from_slice(&right.values);
    derivs.extend_from_slice(&right.derivs);
    DenseSolution::from_hermite(shape, knots, values, derivs)
}

fn check_span(span: (f64, f64), anchor: f64) -> Result<()> {
    let (lo, hi) = span;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "span [{lo}, {hi}] must be finite and non-degenerate"
        )));
    }
    if !(lo <= anchor && anchor <= hi) {
        return Err(Error::InvalidArgument(format!(
            "anchor {anchor} outside span [{lo}, {hi}]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum PairKind {
    /// `Phi(t) = exp(A (t - anchor))`.
    Exact { a: DMatrix<f64> },
    Dense {
        forward: DenseSolution,
        inverse: DenseSolution,
    },
}

/// A fundamental matrix `Phi` with `Phi(anchor) = I` and its inverse.
#[derive(Debug, Clone)]
pub struct FundamentalPair {
    dim: usize,
    anchor: f64,
    span: (f64, f64),
    kind: PairKind,
    identity_defect: f64,
}

impl FundamentalPair {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    /// Largest `||Phi(t) Phi^{-1}(t) - I||` seen on the check grid.
    pub fn identity_defect(&self) -> f64 {
        self.identity_defect
    }

    /// `true` when the pair is evaluated through the matrix exponential.
    pub fn is_exact(&self) -> bool {
        matches!(self.kind, PairKind::Exact { .. })
    }

    /// Dense forward solution; `None` for exact pairs.
    pub fn forward(&self) -> Option<&DenseSolution> {
        match &self.kind {
            PairKind::Dense { forward, .. } => Some(forward),
            PairKind::Exact { .. } => None,
        }
    }

    pub fn inverse(&self) -> Option<&DenseSolution> {
        match &self.kind {
            PairKind::Dense { inverse, .. } => Some(inverse),
            PairKind::Exact { .. } => None,
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.span;
        if t >= lo && t <= hi {
            Ok(())
        } else {
            Err(Error::OutOfSpan { t, lo, hi })
        }
    }

    /// The constant generator `A` of an exact pair.
    pub fn generator(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            PairKind::Exact { a } => Some(a),
            PairKind::Dense { .. } => None,
        }
    }

    pub fn phi(&self, t: f64) -> Result<DMatrix<f64>> {
        self.check(t)?;
        match &self.kind {
            PairKind::Exact { a } => Ok(expm(a, t - self.anchor)),
            PairKind::Dense { forward, .. } => forward.eval_matrix(t),
        }
    }

    pub fn phi_inv(&self, t: f64) -> Result<DMatrix<f64>> {
        self.check(t)?;
        match &self.kind {
            PairKind::Exact { a } => Ok(expm(a, self.anchor - t)),
            PairKind::Dense { inverse, .. } => inverse.eval_matrix(t),
        }
    }

    /// Transition matrix `Phi(t) Phi^{-1}(s)`.
    pub fn transition(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        match &self.kind {
            PairKind::Exact { a } => {
                self.check(t)?;
                self.check(s)?;
                Ok(expm(a, t - s))
            }
            PairKind::Dense { .. } => Ok(self.phi(t)? * self.phi_inv(s)?),
        }
    }

    /// Records the identity defect and returns the largest amount by which
    /// it exceeds `tol` plus the rounding floor `n eps ||Phi|| ||Phi^{-1}||`
    /// of the check product itself.
    fn measure_defect(&mut self, tol: f64) -> Result<f64> {
        let (lo, hi) = self.span;
        let eye = DMatrix::<f64>::identity(self.dim, self.dim);
        let mut worst = 0.0f64;
        let mut excess = f64::NEG_INFINITY;
        for t in linspace(lo, hi, DEFECT_GRID) {
            let (phi, inv) = (self.phi(t)?, self.phi_inv(t)?);
            let d = op_norm(&(&phi * &inv - &eye));
            let floor = self.dim as f64 * f64::EPSILON * op_norm(&phi) * op_norm(&inv);
            worst = worst.max(d);
            excess = excess.max(d - tol - floor);
        }
        self.identity_defect = worst;
        Ok(excess)
    }
}

/// Fundamental pair of `x' = A(t) x` over `span` with `Phi(anchor) = I`.
pub fn integrate_fundamental(
    a: &MatrixSignal,
    span: (f64, f64),
    anchor: f64,
    opts: &SolverOptions,
) -> Result<FundamentalPair> {
    opts.validate()?;
    check_span(span, anchor)?;
    let n = a.dim();
    let kind = if opts.exact_constant && a.is_constant() {
        PairKind::Exact { a: a.eval(0.0) }
    } else {
        let h = opts.step_for(span.1 - span.0);
        let eye: Vec<f64> = DMatrix::<f64>::identity(n, n).as_slice().to_vec();
        let forward = integrate_both_ways(Shape::Matrix(n), &eye, anchor, span, h, |t, y, out| {
            matrix_rhs(a, t, y, out, false)
        })?;
        let inverse = integrate_both_ways(Shape::Matrix(n), &eye, anchor, span, h, |t, y, out| {
            matrix_rhs(a, t, y, out, true)
        })?;
        PairKind::Dense { forward, inverse }
    };
    let mut pair = FundamentalPair {
        dim: n,
        anchor,
        span,
        kind,
        identity_defect: 0.0,
    };
    let excess = pair.measure_defect(opts.tol_id)?;
    if !(excess <= 0.0) {
        return Err(Error::IdentityDefect {
            defect: pair.identity_defect,
            tol: opts.tol_id,
        });
    }
    Ok(pair)
}

/// `out = A(t) Y` or, for the adjoint, `out = -Y A(t)`, on row-major `n x n`
/// buffers. The identity is symmetric, so row- and column-major starts agree.
fn matrix_rhs(a: &MatrixSignal, t: f64, y: &[f64], out: &mut [f64], adjoint: bool) {
    let n = a.dim();
    let mut am = vec![0.0; n * n];
    a.eval_into(t, &mut am);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += if adjoint {
                    -y[i * n + k] * am[k * n + j]
                } else {
                    am[i * n + k] * y[k * n + j]
                };
            }
            out[i * n + j] = acc;
        }
    }
}

/// `I(t) = int_anchor^t a`, so that `int_s^t a = I(t) - I(s)`.
pub fn antiderivative(
    a: &ScalarSignal,
    anchor: f64,
    span: (f64, f64),
    opts: &SolverOptions,
) -> Result<DenseSolution> {
    opts.validate()?;
    check_span(span, anchor)?;
    let h = opts.step_for(span.1 - span.0);
    integrate_both_ways(Shape::Scalar, &[0.0], anchor, span, h, |t, _, out| {
        out[0] = a.eval(t)
    })
}

/// Solution of `x' = A(t) x + f(t)` with `x(t0) = x0` over `span`.
pub fn integrate_linear(
    a: &MatrixSignal,
    f: &[ScalarSignal],
    x0: &[f64],
    t0: f64,
    span: (f64, f64),
    opts: &SolverOptions,
) -> Result<DenseSolution> {
    opts.validate()?;
    check_span(span, t0)?;
    let n = a.dim();
    if f.len() != n || x0.len() != n {
        return Err(Error::Dimension(format!(
            "system of dimension {n} with forcing of length {} and initial value of length {}",
            f.len(),
            x0.len()
        )));
    }
    let h = opts.step_for(span.1 - span.0);
    integrate_both_ways(Shape::Vector(n), x0, t0, span, h, |t, x, out| {
        linear_rhs(a, f, t, x, out)
    })
}

fn linear_rhs(a: &MatrixSignal, f: &[ScalarSignal], t: f64, x: &[f64], out: &mut [f64]) {
    let n = a.dim();
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = f[i].eval(t);
        for (j, xj) in x.iter().enumerate() {
            acc += a.entry(i, j).eval(t) * xj;
        }
        *o = acc;
    }
}

/// `exp(a h)`, with a scalar shortcut for `1 x 1`.
fn expm(a: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    if a.nrows() == 1 {
        DMatrix::from_element(1, 1, (a[(0, 0)] * h).exp())
    } else {
        (a * h).exp()
    }
}

/// Largest Euclidean norm of `x'(t) - A(t) x(t) - f(t)` over `grid`, using
/// the Hermite derivative of `x`.
pub fn residual_linear(
    a: &MatrixSignal,
    f: &[ScalarSignal],
    x: &DenseSolution,
    grid: &[f64],
) -> Result<f64> {
    let n = a.dim();
    if x.shape().width() != n || f.len() != n {
        return Err(Error::Dimension(format!(
            "residual of a dimension-{n} system against a {:?} solution and {} forcing terms",
            x.shape(),
            f.len()
        )));
    }
    let mut worst = 0.0f64;
    let mut xv = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for &t in grid {
        x.eval_into(t, &mut xv)?;
        x.deriv_into(t, &mut dv)?;
        linear_rhs(a, f, t, &xv, &mut rhs);
        let r = dv
            .iter()
            .zip(&rhs)
            .map(|(d, r)| (d - r).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `n` equally spaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
