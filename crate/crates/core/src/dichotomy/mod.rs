//! Green functions of dichotomic linear systems and grid certificates for
//! the bound `||G(t, s)|| <= K exp(-alpha |t - s|)`.
//!
//! ```text
//! G(t, s) =  Phi(t) P Phi^{-1}(s)          t >= s
//! G(t, s) = -Phi(t) (I - P) Phi^{-1}(s)    t <  s
//! ```
//!
//! Norms are operator 2-norms throughout.

mod hull;
mod segmented;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use hull::{
    delta2_uc_probe, hull_shift_experiment, lambda_bound_check, Delta2Report, HullOptions,
    HullReport,
};
pub use segmented::SegmentedGreen;

use crate::error::{Error, Result};
use crate::linsys::{linspace, op_norm, FundamentalPair};

/// Largest tolerated `||P^2 - P||`.
pub const PROJECTION_TOL: f64 = 1e-8;

/// Default relative slack of a certificate verdict.
pub const DEFAULT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    m: DMatrix<f64>,
}

impl Projection {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "projection must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = op_norm(&(&m * &m - &m));
        if !(defect <= PROJECTION_TOL) {
            return Err(Error::NotProjection { defect });
        }
        Ok(Projection { m })
    }

    /// Snaps an almost idempotent matrix onto a nearby projection with the
    /// iteration `P <- 3P^2 - 2P^3`, then validates it.
    pub fn nearest(m: DMatrix<f64>) -> Result<Self> {
        let mut p = m;
        for _ in 0..8 {
            let p2 = &p * &p;
            let next = &p2 * 3.0 - &p2 * &p * 2.0;
            let step = op_norm(&(&next - &p));
            p = next;
            if step <= 4.0 * f64::EPSILON * op_norm(&p).max(1.0) {
                break;
            }
        }
        Projection::new(p)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(
                "projection rows must form a square".into(),
            ));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Projection::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Projection::new(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(diag),
        ))
    }

    /// Spectral projection of a constant hyperbolic matrix onto its stable
    /// subspace, `(I - sign(A)) / 2`, with `sign` from the Newton iteration
    /// `S <- (S + S^{-1}) / 2`.
    pub fn spectral(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() || n == 0 {
            return Err(Error::Dimension(
                "spectral projection needs a square matrix".into(),
            ));
        }
        let mut s = a.clone();
        for _ in 0..200 {
            let inv = s.clone().try_inverse().ok_or_else(|| {
                Error::InvalidArgument("matrix has an eigenvalue on the imaginary axis".into())
            })?;
            let next = (&s + inv) * 0.5;
            let step = op_norm(&(&next - &s));
            s = next;
            if step <= 1e-14 * op_norm(&s).max(1.0) {
                let eye = DMatrix::<f64>::identity(n, n);
                return Projection::new((eye - s) * 0.5);
            }
        }
        Err(Error::InvalidArgument(
            "sign iteration did not converge; matrix is not hyperbolic".into(),
        ))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn complement(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) - &self.m
    }

    pub fn defect(&self) -> f64 {
        op_norm(&(&self.m * &self.m - &self.m))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.m)
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl Serialize for Projection {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Projection {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        Projection::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Which half of the case split to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `Phi(t) P Phi^{-1}(s)`, the `t >= s` case.
    Stable,
    /// `-Phi(t) (I - P) Phi^{-1}(s)`, the `t < s` case.
    Unstable,
}

/// A Green function with an explicit branch selector.
pub trait GreenKernel: Sync {
    fn dim(&self) -> usize;

    /// Times at which the kernel can be evaluated.
    fn span(&self) -> (f64, f64);

    /// Projection at the kernel's anchor time.
    fn projection(&self) -> &Projection;

    fn green_branch(&self, t: f64, s: f64, branch: Branch) -> Result<DMatrix<f64>>;

    fn green(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        let b = if t >= s {
            Branch::Stable
        } else {
            Branch::Unstable
        };
        self.green_branch(t, s, b)
    }
}

/// Green function of one fundamental pair and a projection at its anchor.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    pair: FundamentalPair,
    p: Projection,
    q: DMatrix<f64>,
    /// Exact pair whose generator commutes with `p`: then
    /// `G(t, s) = exp(A (t - s)) P` depends on `t - s` alone.
    commuting: bool,
}

impl GreenFunction {
    pub fn new(pair: FundamentalPair, p: Projection) -> Result<Self> {
        if pair.dim() != p.dim() {
            return Err(Error::Dimension(format!(
                "projection of size {} for a system of dimension {}",
                p.dim(),
                pair.dim()
            )));
        }
        let q = p.complement();
        let commuting = pair.generator().is_some_and(|a| {
            let m = p.matrix();
            op_norm(&(a * m - m * a)) <= 1e-13 * (1.0 + op_norm(a))
        });
        Ok(GreenFunction {
            pair,
            p,
            q,
            commuting,
        })
    }

    pub fn pair(&self) -> &FundamentalPair {
        &self.pair
    }
}

impl GreenKernel for GreenFunction {
    fn projection(&self) -> &Projection {
        &self.p
    }

    fn dim(&self) -> usize {
        self.pair.dim()
    }

    fn span(&self) -> (f64, f64) {
        self.pair.span()
    }

    fn green_branch(&self, t: f64, s: f64, branch: Branch) -> Result<DMatrix<f64>> {
        if self.commuting {
            let tr = self.pair.transition(t, s)?;
            return Ok(match branch {
                Branch::Stable => tr * self.p.matrix(),
                Branch::Unstable => -(tr * &self.q),
            });
        }
        let phi = self.pair.phi(t)?;
        let inv = self.pair.phi_inv(s)?;
        Ok(match branch {
            Branch::Stable => phi * self.p.matrix() * inv,
            Branch::Unstable => -(phi * &self.q * inv),
        })
    }
}

/// `G(t, s)` for a pair and projection.
pub fn green_eval(pair: &FundamentalPair, p: &Projection, t: f64, s: f64) -> Result<DMatrix<f64>> {
    let phi = pair.phi(t)?;
    let inv = pair.phi_inv(s)?;
    Ok(if t >= s {
        phi * p.matrix() * inv
    } else {
        -(phi * p.complement() * inv)
    })
}

/// Rectangular `(t, s)` grid, optionally restricted to `|t - s| <= max_gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenGrid {
    pub t_range: (f64, f64),
    pub s_range: (f64, f64),
    pub n_t: usize,
    pub n_s: usize,
    pub max_gap: Option<f64>,
}

impl GreenGrid {
    /// `n x n` grid over the square `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        GreenGrid {
            t_range: (lo, hi),
            s_range: (lo, hi),
            n_t: n,
            n_s: n,
            max_gap: None,
        }
    }

    pub fn with_max_gap(mut self, gap: f64) -> Self {
        self.max_gap = Some(gap);
        self
    }

    /// Grid points in row-major `(t, s)` order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ts = linspace(self.t_range.0, self.t_range.1, self.n_t);
        let ss = linspace(self.s_range.0, self.s_range.1, self.n_s);
        let mut out = Vec::with_capacity(ts.len() * ss.len());
        for &t in &ts {
            for &s in &ss {
                if self.max_gap.is_none_or(|g| (t - s).abs() <= g) {
                    out.push((t, s));
                }
            }
        }
        out
    }
}

impl Default for GreenGrid {
    fn default() -> Self {
        GreenGrid::square(-5.0, 5.0, 41)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyCertificate {
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "P")]
    pub p: Projection,
    pub grid: GreenGrid,
    pub margin: f64,
    /// Largest `||G(t, s)|| exp(alpha |t - s|)` over the grid.
    pub observed_max: f64,
    pub verdict: Verdict,
    pub worst_t: f64,
    pub worst_s: f64,
}

/// Grid check of `||G(t, s)|| <= K exp(-alpha |t - s|)` with relative slack
/// `margin`.
pub fn verify_dichotomy(
    g: &dyn GreenKernel,
    alpha: f64,
    k: f64,
    grid: &GreenGrid,
    margin: f64,
) -> Result<DichotomyCertificate> {
    if !(alpha > 0.0 && k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha and K must be positive, got alpha = {alpha}, K = {k}"
        )));
    }
    let mut observed = f64::NEG_INFINITY;
    let (mut wt, mut ws) = (f64::NAN, f64::NAN);
    for (t, s) in grid.points() {
        let r = op_norm(&g.green(t, s)?) * (alpha * (t - s).abs()).exp();
        if r > observed || r.is_nan() {
            observed = r;
            wt = t;
            ws = s;
        }
    }
    let verdict = Verdict::from_bool(observed <= k * (1.0 + margin));
    Ok(DichotomyCertificate {
        alpha,
        k,
        p: g.projection().clone(),
        grid: *grid,
        margin,
        observed_max: observed,
        verdict,
        worst_t: wt,
        worst_s: ws,
    })
}

/// Fits `(alpha, K)` to the upper envelope of `log ||G||` binned by `|t - s|`,
/// then raises `K` to the observed envelope so that the same grid certifies.
pub fn fit_dichotomy_constants(g: &dyn GreenKernel, grid: &GreenGrid) -> Result<(f64, f64)> {
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (t, s) in grid.points() {
        samples.push(((t - s).abs(), op_norm(&g.green(t, s)?)));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Bin maxima, grouping gaps equal up to rounding.
    let mut bins: Vec<(f64, f64)> = Vec::new();
    for &(r, v) in &samples {
        match bins.last_mut() {
            Some(last) if (r - last.0).abs() <= 1e-9 * (1.0 + r.abs()) => last.1 = last.1.max(v),
            _ => bins.push((r, v)),
        }
    }
    let pts: Vec<(f64, f64)> = bins
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|&(r, v)| (r, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::NoDecay { rate: 0.0 });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::NoDecay { rate: 0.0 });
    }
    let alpha = -sxy / sxx;
    if !(alpha > 0.0) {
        return Err(Error::NoDecay { rate: alpha });
    }
    let k = samples
        .iter()
        .map(|&(r, v)| v * (alpha * r).exp())
        .fold(0.0f64, f64::max);
    Ok((alpha, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::{integrate_fundamental, SolverOptions};
    use crate::signal::MatrixSignal;

    fn green(diag: &[&str], p: &[f64], span: (f64, f64)) -> GreenFunction {
        let a = MatrixSignal::diagonal(diag).unwrap();
        let pair = integrate_fundamental(&a, span, 0.0, &SolverOptions::default()).unwrap();
        GreenFunction::new(pair, Projection::diagonal(p).unwrap()).unwrap()
    }

    #[test]
    fn green_examples() {
        let g = green(&["-1", "1"], &[1.0, 0.0], (-5.0, 5.0));
        let e = (-1f64).exp();
        let g10 = g.green(1.0, 0.0).unwrap();
        assert!((g10[(0, 0)] - e).abs() < 1e-15 && g10[(1, 1)] == 0.0);
        let g01 = g.green(0.0, 1.0).unwrap();
        assert!(g01[(0, 0)] == 0.0 && (g01[(1, 1)] + e).abs() < 1e-15);
        let g22 = g.green(2.0, 2.0).unwrap();
        assert!(op_norm(&(g22 - g.projection().matrix())) < 1e-15);
    }

    #[test]
    fn tie_uses_stable_branch() {
        let g = green(&["-1 - 0.2*sin(t)", "1"], &[1.0, 0.0], (-5.0, 5.0));
        for t in [-2.0, 0.0, 3.3] {
            assert_eq!(
                g.green(t, t).unwrap(),
                g.green_branch(t, t, Branch::Stable).unwrap()
            );
            assert_eq!(
                g.green(t, t).unwrap(),
                green_eval(g.pair(), g.projection(), t, t).unwrap()
            );
        }
    }

    #[test]
    fn projection_rejects_non_idempotent() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        assert!(matches!(
            Projection::new(m),
            Err(Error::NotProjection { .. })
        ));
    }

    #[test]
    fn spectral_projection_of_triangular_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 3.0, 0.0, 2.0]);
        let p = Projection::spectral(&a).unwrap();
        // P commutes with A and annihilates the unstable eigenvector (1, 1).
        assert!(op_norm(&(&a * p.matrix() - p.matrix() * &a)) < 1e-12);
        let v = p.matrix() * nalgebra::DVector::from_vec(vec![1.0, 1.0]);
        assert!(v.norm() < 1e-12);
        assert!(Projection::spectral(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn exact_certificate() {
        let g = green(&["-1", "1"], &[1.0, 0.0], (-5.0, 5.0));
        let c = verify_dichotomy(&g, 1.0, 1.0, &GreenGrid::default(), DEFAULT_MARGIN).unwrap();
        assert!(c.verdict.passed());
        assert!((c.observed_max - 1.0).abs() < 1e-12);
        let c = verify_dichotomy(&g, 1.2, 1.0, &GreenGrid::default(), DEFAULT_MARGIN).unwrap();
        assert!(!c.verdict.passed());
    }

    #[test]
    fn certificate_json_field_names() {
        let g = green(&["-1", "1"], &[1.0, 0.0], (-5.0, 5.0));
        let c = verify_dichotomy(&g, 1.0, 1.0, &GreenGrid::square(-1.0, 1.0, 5), 1e-6).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        for key in [
            "alpha",
            "K",
            "P",
            "observed_max",
            "verdict",
            "worst_t",
            "worst_s",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["verdict"], "pass");
        let back: DichotomyCertificate = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn fit_examples() {
        let grid = GreenGrid::default();
        let g = green(&["-1", "1"], &[1.0, 0.0], (-5.0, 5.0));
        let (a, k) = fit_dichotomy_constants(&g, &grid).unwrap();
        assert!((a - 1.0).abs() < 0.01 && (k - 1.0).abs() < 0.01, "{a} {k}");
        let g = green(&["-2", "3"], &[1.0, 0.0], (-5.0, 5.0));
        let (a, _) = fit_dichotomy_constants(&g, &grid).unwrap();
        assert!((a - 2.0).abs() < 0.01, "{a}");
        let g = green(&["-1", "1"], &[1.0, 1.0], (-5.0, 5.0));
        assert!(matches!(
            fit_dichotomy_constants(&g, &grid),
            Err(Error::NoDecay { .. })
        ));
    }

    #[test]
    fn fitted_constants_certify_on_same_grid() {
        let g = green(
            &["-1 - 0.2*sin(t)", "1 + 0.3*cos(t)"],
            &[1.0, 0.0],
            (-5.0, 5.0),
        );
        let grid = GreenGrid::default();
        let (a, k) = fit_dichotomy_constants(&g, &grid).unwrap();
        let c = verify_dichotomy(&g, a, k, &grid, DEFAULT_MARGIN).unwrap();
        assert!(c.verdict.passed());
    }
}
