use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layout of the value stored at each knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Scalar,
    Vector(usize),
    /// `n x n`, row-major.
    Matrix(usize),
}

impl Shape {
    pub fn width(self) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::Matrix(n) => n * n,
        }
    }
}

/// Piecewise cubic Hermite interpolant through knot values and derivatives.
///
/// Values are stored once per knot, so adjacent pieces agree exactly at
/// their shared knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSolution {
    shape: Shape,
    knots: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl DenseSolution {
    /// Builds from knot values and derivatives (flattened, `width` per knot).
    pub fn from_hermite(
        shape: Shape,
        knots: Vec<f64>,
        values: Vec<f64>,
        derivs: Vec<f64>,
    ) -> Result<Self> {
        let w = shape.width();
        if knots.len() < 2 {
            return Err(Error::InvalidArgument("need at least two knots".into()));
        }
        if values.len() != knots.len() * w || derivs.len() != knots.len() * w {
            return Err(Error::Dimension(format!(
                "{} knots of width {w} need {} values and derivatives",
                knots.len(),
                knots.len() * w
            )));
        }
        if knots.windows(2).any(|k| !(k[1] > k[0])) {
            return Err(Error::InvalidArgument(
                "knots must be strictly increasing".into(),
            ));
        }
        Ok(DenseSolution {
            shape,
            knots,
            values,
            derivs,
        })
    }

    /// Builds from samples alone; knot derivatives come from five-point
    /// finite differences (one-sided at the ends) on the sample grid.
    pub fn from_samples(shape: Shape, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let w = shape.width();
        let n = knots.len();
        if n < 5 {
            return Err(Error::InvalidArgument(
                "need at least five samples for finite-difference derivatives".into(),
            ));
        }
        if values.len() != n * w {
            return Err(Error::Dimension(format!("{n} knots need {} values", n * w)));
        }
        let mut derivs = vec![0.0; n * w];
        for i in 0..n {
            // Lagrange derivative on the five nearest knots.
            let start = i.saturating_sub(2).min(n - 5);
            let idx: Vec<usize> = (start..start + 5).collect();
            let x = knots[i];
            let weights: Vec<f64> = idx
                .iter()
                .map(|&j| lagrange_derivative_weight(&knots, &idx, j, x))
                .collect();
            for c in 0..w {
                derivs[i * w + c] = idx
                    .iter()
                    .zip(&weights)
                    .map(|(&j, wt)| wt * values[j * w + c])
                    .sum();
            }
        }
        DenseSolution::from_hermite(shape, knots, values, derivs)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn span(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().expect("non-empty"))
    }

    pub fn knot_value(&self, i: usize) -> &[f64] {
        let w = self.shape.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn knot_deriv(&self, i: usize) -> &[f64] {
        let w = self.shape.width();
        &self.derivs[i * w..(i + 1) * w]
    }

    /// Mutable access to knot values; used by tests that perturb a solution.
    pub fn knot_value_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.shape.width();
        &mut self.values[i * w..(i + 1) * w]
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
        let k = self.knots.partition_point(|&x| x <= t);
        Ok(k.saturating_sub(1).min(self.knots.len() - 2))
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let i = self.locate(t)?;
        let w = self.shape.width();
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        if t == a {
            out.copy_from_slice(&self.values[i * w..(i + 1) * w]);
            return Ok(());
        }
        let h = b - a;
        let s = (t - a) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        for c in 0..w {
            out[c] = h00 * self.values[i * w + c]
                + h10 * h * self.derivs[i * w + c]
                + h01 * self.values[(i + 1) * w + c]
                + h11 * h * self.derivs[(i + 1) * w + c];
        }
        Ok(())
    }

    pub fn deriv_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let i = self.locate(t)?;
        let w = self.shape.width();
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        let h = b - a;
        let s = (t - a) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        for c in 0..w {
            out[c] = d00 * self.values[i * w + c]
                + d10 * self.derivs[i * w + c]
                + d01 * self.values[(i + 1) * w + c]
                + d11 * self.derivs[(i + 1) * w + c];
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.shape.width()];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn deriv(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.shape.width()];
        self.deriv_into(t, &mut out)?;
        Ok(out)
    }

    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        let mut out = [0.0];
        self.eval_into(t, &mut out)?;
        Ok(out[0])
    }

    pub fn eval_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let n = match self.shape {
            Shape::Matrix(n) => n,
            other => {
                return Err(Error::Dimension(format!(
                    "matrix evaluation of a {other:?} solution"
                )))
            }
        };
        let v = self.eval(t)?;
        Ok(DMatrix::from_row_slice(n, n, &v))
    }
}

fn lagrange_derivative_weight(knots: &[f64], idx: &[usize], j: usize, x: f64) -> f64 {
    // d/dx of the Lagrange basis polynomial attached to knot j.
    let xj = knots[j];
    let mut total = 0.0;
    for &m in idx {
        if m == j {
            continue;
        }
        let mut term = 1.0 / (xj - knots[m]);
        for &k in idx {
            if k == j || k == m {
                continue;
            }
            term *= (x - knots[k]) / (xj - knots[k]);
        }
        total += term;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic_solution() -> DenseSolution {
        let knots: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let values = knots.iter().map(|&t| t * t * t - t).collect();
        let derivs = knots.iter().map(|&t| 3.0 * t * t - 1.0).collect();
        DenseSolution::from_hermite(Shape::Scalar, knots, values, derivs).unwrap()
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let d = cubic_solution();
        for t in [0.0, 0.05, 0.77, 1.5, 2.99, 3.0] {
            let v = d.eval_scalar(t).unwrap();
            assert!((v - (t * t * t - t)).abs() < 1e-12, "t={t}");
            let dv = d.deriv(t).unwrap()[0];
            assert!((dv - (3.0 * t * t - 1.0)).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn outside_span_is_an_error() {
        let d = cubic_solution();
        assert!(matches!(d.eval_scalar(-0.01), Err(Error::OutOfSpan { .. })));
        assert!(matches!(d.eval_scalar(3.01), Err(Error::OutOfSpan { .. })));
        assert!(d.eval_scalar(f64::NAN).is_err());
    }

    #[test]
    fn continuity_at_knots_is_exact() {
        let d = cubic_solution();
        for (i, &k) in d.knots().iter().enumerate() {
            assert_eq!(d.eval_scalar(k).unwrap(), d.knot_value(i)[0]);
        }
    }

    #[test]
    fn finite_difference_derivatives_are_fourth_order() {
        let knots: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = knots.iter().map(|t| t.sin()).collect();
        let d = DenseSolution::from_samples(Shape::Scalar, knots.clone(), values).unwrap();
        for (i, t) in knots.iter().enumerate() {
            assert!((d.knot_deriv(i)[0] - t.cos()).abs() < 2e-6, "i={i}");
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(
            DenseSolution::from_hermite(Shape::Scalar, vec![0.0], vec![0.0], vec![0.0]).is_err()
        );
        assert!(DenseSolution::from_hermite(
            Shape::Scalar,
            vec![0.0, 0.0],
            vec![0.0; 2],
            vec![0.0; 2]
        )
        .is_err());
    }
}
