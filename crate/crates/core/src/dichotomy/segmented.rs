use nalgebra::DMatrix;

use super::{Branch, GreenKernel, Projection};
use crate::error::{Error, Result};
use crate::linsys::{integrate_fundamental, FundamentalPair, SolverOptions};
use crate::signal::MatrixSignal;

/// Green function over a long span, built from short fundamental pairs.
///
/// Segment `k` covers `[c_k, c_{k+1}]` with a pair anchored at `c_k`, and the
/// projection is carried across segment boundaries by conjugation. Products
/// spanning several segments re-apply the projection at every boundary, so
/// no single matrix ever holds the full growth of the unstable directions.
#[derive(Debug, Clone)]
pub struct SegmentedGreen {
    bounds: Vec<f64>,
    pairs: Vec<FundamentalPair>,
    /// Projection at each segment's left end.
    projections: Vec<DMatrix<f64>>,
    complements: Vec<DMatrix<f64>>,
    p0: Projection,
}

impl SegmentedGreen {
    /// `p` is the projection at time `0`, which must lie in `span`. Segment
    /// boundaries sit at integer multiples of `segment_len`.
    pub fn build(
        a: &MatrixSignal,
        p: &Projection,
        span: (f64, f64),
        segment_len: f64,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let (lo, hi) = span;
        if !(lo <= 0.0 && 0.0 <= hi && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "span [{lo}, {hi}] must contain 0"
            )));
        }
        if !(segment_len > 0.0) {
            return Err(Error::InvalidArgument(
                "segment length must be positive".into(),
            ));
        }
        if p.dim() != a.dim() {
            return Err(Error::Dimension(
                "projection and system sizes differ".into(),
            ));
        }
        let k_lo = (lo / segment_len).floor() as i64;
        let k_hi = (hi / segment_len).ceil() as i64;
        let mut bounds: Vec<f64> = (k_lo..=k_hi)
            .map(|k| (k as f64 * segment_len).clamp(lo, hi))
            .collect();
        bounds.dedup();
        let pairs = bounds
            .windows(2)
            .map(|w| integrate_fundamental(a, (w[0], w[1]), w[0], opts))
            .collect::<Result<Vec<_>>>()?;
        let zero = bounds
            .iter()
            .position(|&c| c == 0.0)
            .ok_or_else(|| Error::InvalidArgument("no segment boundary at 0".into()))?;
        let mut projections = vec![DMatrix::zeros(0, 0); pairs.len()];
        // Forward: P_{k+1} = Phi_k(c_{k+1}) P_k Phi_k^{-1}(c_{k+1}).
        let mut cur = p.matrix().clone();
        for k in zero..pairs.len() {
            projections[k] = cur.clone();
            if k + 1 < pairs.len() {
                let c = bounds[k + 1];
                cur = Projection::nearest(pairs[k].phi(c)? * &cur * pairs[k].phi_inv(c)?)?
                    .matrix()
                    .clone();
            }
        }
        // Backward: P_k = Phi_k^{-1}(c_{k+1}) P_{k+1} Phi_k(c_{k+1}).
        let mut cur = p.matrix().clone();
        for k in (0..zero).rev() {
            let c = bounds[k + 1];
            cur = Projection::nearest(pairs[k].phi_inv(c)? * &cur * pairs[k].phi(c)?)?
                .matrix()
                .clone();
            projections[k] = cur.clone();
        }
        let n = a.dim();
        let complements = projections
            .iter()
            .map(|m| DMatrix::identity(n, n) - m)
            .collect();
        Ok(SegmentedGreen {
            bounds,
            pairs,
            projections,
            complements,
            p0: p.clone(),
        })
    }

    fn segment(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
        let k = self.bounds.partition_point(|&c| c <= t);
        Ok(k.saturating_sub(1).min(self.pairs.len() - 1))
    }

    /// Projection at time `t`.
    pub fn projection_at(&self, t: f64) -> Result<Projection> {
        let k = self.segment(t)?;
        let pair = &self.pairs[k];
        Projection::nearest(pair.phi(t)? * &self.projections[k] * pair.phi_inv(t)?)
    }

    /// `Phi(t) R Phi^{-1}(s)` where `R` is the projection family selected by
    /// `stable`, re-applied at every segment boundary crossed.
    fn chain(&self, t: f64, s: f64, stable: bool) -> Result<DMatrix<f64>> {
        let proj = if stable {
            &self.projections
        } else {
            &self.complements
        };
        let (kt, ks) = (self.segment(t)?, self.segment(s)?);
        if kt == ks {
            let pair = &self.pairs[kt];
            return Ok(pair.phi(t)? * &proj[kt] * pair.phi_inv(s)?);
        }
        if kt > ks {
            let mut m =
                self.pairs[ks].phi(self.bounds[ks + 1])? * &proj[ks] * self.pairs[ks].phi_inv(s)?;
            for k in ks + 1..kt {
                m = self.pairs[k].phi(self.bounds[k + 1])? * &proj[k] * m;
            }
            Ok(self.pairs[kt].phi(t)? * &proj[kt] * m)
        } else {
            let mut m =
                self.pairs[kt].phi(t)? * &proj[kt] * self.pairs[kt].phi_inv(self.bounds[kt + 1])?;
            for k in kt + 1..ks {
                m = m * &proj[k] * self.pairs[k].phi_inv(self.bounds[k + 1])?;
            }
            Ok(m * &proj[ks] * self.pairs[ks].phi_inv(s)?)
        }
    }
}

impl GreenKernel for SegmentedGreen {
    fn dim(&self) -> usize {
        self.p0.dim()
    }

    fn span(&self) -> (f64, f64) {
        (
            self.bounds[0],
            *self.bounds.last().expect("at least two bounds"),
        )
    }

    fn projection(&self) -> &Projection {
        &self.p0
    }

    fn green_branch(&self, t: f64, s: f64, branch: Branch) -> Result<DMatrix<f64>> {
        match branch {
            Branch::Stable => self.chain(t, s, true),
            Branch::Unstable => Ok(-self.chain(t, s, false)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dichotomy::GreenFunction;
    use crate::linsys::op_norm;

    #[test]
    fn agrees_with_single_pair_on_short_span() {
        let a = MatrixSignal::parse_rows(&[
            vec!["-1 - 0.2*sin(t)", "0.3*cos(t)"],
            vec!["0", "1 + 0.1*sin(1.4142135623730951*t)"],
        ])
        .unwrap();
        let p = Projection::diagonal(&[1.0, 0.0]).unwrap();
        let opts = SolverOptions {
            exact_constant: false,
            ..SolverOptions::default()
        };
        let seg = SegmentedGreen::build(&a, &p, (-6.0, 6.0), 2.5, &opts).unwrap();
        let pair = integrate_fundamental(&a, (-6.0, 6.0), 0.0, &opts).unwrap();
        let single = GreenFunction::new(pair, p).unwrap();
        for (t, s) in [
            (1.0, -3.0),
            (-4.0, 5.5),
            (5.9, -5.9),
            (0.3, 0.3),
            (2.5, 2.4),
        ] {
            let d = op_norm(&(seg.green(t, s).unwrap() - single.green(t, s).unwrap()));
            assert!(d < 1e-8, "({t}, {s}): {d}");
        }
    }

    #[test]
    fn handles_spans_beyond_exponent_range() {
        let a = MatrixSignal::diagonal(&["-1 - 0.2*sin(t)", "1"]).unwrap();
        let p = Projection::diagonal(&[1.0, 0.0]).unwrap();
        let seg = SegmentedGreen::build(&a, &p, (-10.0, 1200.0), 20.0, &SolverOptions::default())
            .unwrap();
        let g = seg.green(1190.0, 1185.0).unwrap();
        assert!(g[(0, 0)] > 0.0 && g[(0, 0)] < (-5.0f64 * 0.6).exp());
        let g = seg.green(1185.0, 1190.0).unwrap();
        assert!(((g[(1, 1)]) + (-5.0f64).exp()).abs() < 1e-9);
        assert!(op_norm(&(seg.projection_at(1000.0).unwrap().matrix() - p.matrix())) < 1e-12);
    }
}
