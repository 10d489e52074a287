use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    verify_dichotomy, DichotomyCertificate, GreenFunction, GreenGrid, GreenKernel, Projection,
    SegmentedGreen, DEFAULT_MARGIN,
};
use crate::error::{Error, Result};
use crate::linsys::{integrate_fundamental, op_norm, SolverOptions};
use crate::signal::MatrixSignal;

/// Absolute slack when judging a sequence non-increasing.
const MONOTONE_SLACK: f64 = 1e-12;

type ShiftOutcome = (Projection, DichotomyCertificate, Vec<DMatrix<f64>>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullOptions {
    pub grid_points: usize,
    pub margin: f64,
    /// Segment length of the base integration out to the shifts.
    pub segment_len: f64,
    pub solver: SolverOptions,
}

impl Default for HullOptions {
    fn default() -> Self {
        HullOptions {
            grid_points: 41,
            margin: DEFAULT_MARGIN,
            segment_len: 20.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEntry {
    pub shift: f64,
    #[serde(rename = "P")]
    pub projection: Option<Projection>,
    /// `||P_n - P_last||`.
    pub gap_to_last: Option<f64>,
    pub certificate: Option<DichotomyCertificate>,
    /// Sup over the window grid of `||G(t + s_n, s + s_n) - G(t + s_last, s + s_last)||`.
    pub discrepancy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullReport {
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub window: (f64, f64),
    pub shifts: Vec<f64>,
    pub entries: Vec<ShiftEntry>,
    /// `||P_{n+1} - P_n||`.
    pub successive_gap: Vec<Option<f64>>,
    /// First index from which `successive_gap` is non-increasing.
    pub gaps_monotone_from: Option<usize>,
    /// First index from which `discrepancy` is non-increasing.
    pub discrepancy_monotone_from: Option<usize>,
    pub all_certified: bool,
}

/// First index from which `xs` is non-increasing, or `None` if any entry is
/// missing.
fn monotone_from(xs: &[Option<f64>]) -> Option<usize> {
    let v: Option<Vec<f64>> = xs.iter().copied().collect();
    let v = v?;
    let mut from = v.len().saturating_sub(1);
    while from > 0 && v[from] <= v[from - 1] + MONOTONE_SLACK {
        from -= 1;
    }
    Some(if v.is_empty() { 0 } else { from })
}

/// Certifies every shifted system `x' = A(t + s_n) x` on `window` against the
/// same `(alpha, K)`, with `P_n` carried out to `s_n` along the base system,
/// and compares shifted Green functions with the one of the last shift.
pub fn hull_shift_experiment(
    a: &MatrixSignal,
    p: &Projection,
    shifts: &[f64],
    window: (f64, f64),
    alpha: f64,
    k: f64,
    opts: &HullOptions,
) -> Result<HullReport> {
    if shifts.is_empty() {
        return Err(Error::InvalidArgument("shift list is empty".into()));
    }
    let (w0, w1) = window;
    if !(w0.is_finite() && w1.is_finite() && w0 < w1) {
        return Err(Error::InvalidArgument(format!(
            "window [{w0}, {w1}] is not compact"
        )));
    }
    let anchor = 0f64.clamp(w0, w1);
    let grid = GreenGrid::square(w0, w1, opts.grid_points);
    let base = if a.is_constant() {
        None
    } else {
        let lo = shifts.iter().fold(0f64, |m, &s| m.min(s + anchor)) - 1.0;
        let hi = shifts.iter().fold(0f64, |m, &s| m.max(s + anchor)) + 1.0;
        Some(SegmentedGreen::build(
            a,
            p,
            (lo, hi),
            opts.segment_len,
            &opts.solver,
        )?)
    };

    let per_shift: Vec<Result<ShiftOutcome>> = shifts
        .par_iter()
        .map(|&s| {
            let pn = match &base {
                None => p.clone(),
                Some(b) => b.projection_at(s + anchor)?,
            };
            let pair = integrate_fundamental(&a.shifted(s), window, anchor, &opts.solver)?;
            let g = GreenFunction::new(pair, pn.clone())?;
            let cert = verify_dichotomy(&g, alpha, k, &grid, opts.margin)?;
            let values = grid
                .points()
                .into_iter()
                .map(|(t, s)| g.green(t, s))
                .collect::<Result<Vec<_>>>()?;
            Ok((pn, cert, values))
        })
        .collect();

    let last = per_shift.last().expect("non-empty");
    let (p_last, g_last) = match last {
        Ok((pl, _, gl)) => (Some(pl.clone()), Some(gl)),
        Err(_) => (None, None),
    };
    let mut entries = Vec::with_capacity(shifts.len());
    for (&s, r) in shifts.iter().zip(&per_shift) {
        entries.push(match r {
            Ok((pn, cert, values)) => ShiftEntry {
                shift: s,
                projection: Some(pn.clone()),
                gap_to_last: p_last
                    .as_ref()
                    .map(|pl| op_norm(&(pn.matrix() - pl.matrix()))),
                certificate: Some(cert.clone()),
                discrepancy: g_last.map(|gl| {
                    values
                        .iter()
                        .zip(gl)
                        .map(|(x, y)| op_norm(&(x - y)))
                        .fold(0.0, f64::max)
                }),
                error: None,
            },
            Err(e) => ShiftEntry {
                shift: s,
                projection: None,
                gap_to_last: None,
                certificate: None,
                discrepancy: None,
                error: Some(e.to_string()),
            },
        });
    }
    let successive_gap: Vec<Option<f64>> = entries
        .windows(2)
        .map(|w| match (&w[0].projection, &w[1].projection) {
            (Some(a), Some(b)) => Some(op_norm(&(b.matrix() - a.matrix()))),
            _ => None,
        })
        .collect();
    let discrepancies: Vec<Option<f64>> = entries.iter().map(|e| e.discrepancy).collect();
    let all_certified = entries
        .iter()
        .all(|e| e.certificate.as_ref().is_some_and(|c| c.verdict.passed()));
    Ok(HullReport {
        alpha,
        k,
        window,
        shifts: shifts.to_vec(),
        gaps_monotone_from: monotone_from(&successive_gap),
        discrepancy_monotone_from: monotone_from(&discrepancies),
        successive_gap,
        entries,
        all_certified,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Report {
    pub base_points: Vec<(f64, f64)>,
    pub seq_pairs: Vec<(f64, f64)>,
    /// `table[b][n] = ||G(t_b + t_n, s_b + t_n) - G(t_b + s_n, s_b + s_n)||`.
    pub table: Vec<Vec<f64>>,
    /// Per base point, the max over the tail `|t_n - s_n| <= tail_gap` (the
    /// last entry alone when no pair is that close).
    pub tail_max: Vec<f64>,
    pub tail_gap: f64,
}

impl Delta2Report {
    pub fn overall_tail_max(&self) -> f64 {
        self.tail_max.iter().copied().fold(0.0, f64::max)
    }
}

/// Discrepancies of the Green function under diagonal shifts `(t_n, s_n)`
/// whose gap shrinks.
pub fn delta2_uc_probe(
    g: &dyn GreenKernel,
    base_points: &[(f64, f64)],
    seq_pairs: &[(f64, f64)],
    tail_gap: f64,
) -> Result<Delta2Report> {
    if seq_pairs.is_empty() {
        return Err(Error::InvalidArgument("sequence of pairs is empty".into()));
    }
    let table = base_points
        .par_iter()
        .map(|&(t, s)| {
            seq_pairs
                .iter()
                .map(|&(tn, sn)| {
                    let d = g.green(t + tn, s + tn)? - g.green(t + sn, s + sn)?;
                    Ok(op_norm(&d))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let in_tail: Vec<bool> = seq_pairs
        .iter()
        .map(|&(tn, sn)| (tn - sn).abs() <= tail_gap)
        .collect();
    let any_tail = in_tail.iter().any(|&b| b);
    let tail_max = table
        .iter()
        .map(|row| {
            if any_tail {
                row.iter()
                    .zip(&in_tail)
                    .filter(|(_, &b)| b)
                    .map(|(v, _)| *v)
                    .fold(0.0, f64::max)
            } else {
                *row.last().expect("non-empty")
            }
        })
        .collect();
    Ok(Delta2Report {
        base_points: base_points.to_vec(),
        seq_pairs: seq_pairs.to_vec(),
        table,
        tail_max,
        tail_gap,
    })
}

/// Max over shifts `tau` and grid points of `||G(t + tau, s + tau)|| exp(alpha |t - s|) / K`.
pub fn lambda_bound_check(
    g: &dyn GreenKernel,
    alpha: f64,
    k: f64,
    shifts: &[f64],
    grid: &GreenGrid,
) -> Result<f64> {
    if !(alpha > 0.0 && k > 0.0) {
        return Err(Error::InvalidArgument(
            "alpha and K must be positive".into(),
        ));
    }
    let points = grid.points();
    let per_shift = shifts
        .par_iter()
        .map(|&tau| {
            points.iter().try_fold(0.0f64, |m, &(t, s)| {
                let r = op_norm(&g.green(t + tau, s + tau)?) * (alpha * (t - s).abs()).exp() / k;
                Ok(m.max(r))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_shift.into_iter().fold(0.0, f64::max))
}
