//! Finite-data diagnostics for compact almost automorphy.
//!
//! The limit function of a shift sequence is never formed. Its stand-in is
//! the translate by the last shift, `f~(t) ~ f(t + s_last)`, and limits become
//! Cauchy-style error tables against that reference.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dichotomy::Verdict;
use crate::error::{Error, Result};
use crate::linsys::linspace;
use crate::signal::ScalarSignal;

/// Default number of grid points per window.
pub const DEFAULT_GRID: usize = 2001;

/// Strictly monotone list of shifts with a note on where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSequence {
    pub shifts: Vec<f64>,
    pub provenance: String,
    /// Largest `dist(omega s, 2 pi Z)` over the frequencies, per shift; empty
    /// when the sequence was supplied by hand.
    pub phase_errors: Vec<f64>,
}

impl ShiftSequence {
    /// Accepts strictly increasing or strictly decreasing finite shifts.
    pub fn new(shifts: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::InvalidArgument("shift sequence is empty".into()));
        }
        if shifts.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("shifts must be finite".into()));
        }
        let up = shifts.windows(2).all(|w| w[1] > w[0]);
        let down = shifts.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::InvalidArgument(
                "shifts must be strictly monotone".into(),
            ));
        }
        Ok(ShiftSequence {
            shifts,
            provenance: provenance.into(),
            phase_errors: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.shifts.last().expect("non-empty by construction")
    }

    pub fn negated(&self) -> Self {
        ShiftSequence {
            shifts: self.shifts.iter().map(|s| -s).collect(),
            provenance: format!("negated {}", self.provenance),
            phase_errors: self.phase_errors.clone(),
        }
    }
}

/// Distance from `x` to the nearest integer multiple of `2 pi`.
fn phase_distance(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    r.min(TAU - r)
}

/// Continued-fraction convergents `(p, q)` of `x` with `q <= cap`.
fn convergents(x: f64, cap: u64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (1.0f64, 0.0f64, x.floor(), 1.0f64);
    out.push((p1, q1));
    let mut rest = x - x.floor();
    for _ in 0..64 {
        if rest.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / rest;
        let a = inv.floor();
        rest = inv - a;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > cap as f64 {
            break;
        }
        out.push((p2, q2));
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (x - p2 / q2).abs() <= 1e-12 * x.abs().max(1.0) {
            break;
        }
    }
    out
}

/// Smallest denominator `q <= cap` with `|r - p/q|` at rounding level.
fn rational_denominator(r: f64, cap: u64) -> Option<u64> {
    convergents(r, cap)
        .into_iter()
        .find(|&(p, q)| (r - p / q).abs() <= 1e-12 * r.abs().max(1.0))
        .map(|(_, q)| q as u64)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearPeriodOptions {
    /// Largest `q` tried by the brute-force scan.
    pub cap: u64,
}

impl Default for NearPeriodOptions {
    fn default() -> Self {
        NearPeriodOptions { cap: 100_000 }
    }
}

/// Shifts `s = 2 pi q / omega_1` that nearly return every frequency to phase
/// zero.
///
/// * One frequency, or all ratios `omega_i / omega_1` rational: exact periods.
/// * Two frequencies with an irrational ratio: `count` consecutive
///   continued-fraction denominators of the ratio, ending at the second one
///   whose phase error is within `tol`, so the reference shift is finer than
///   the shifts it is compared with.
/// * Otherwise a scan over `q = 1..=cap` keeping every `q` within `tol`.
pub fn find_near_periods(
    frequencies: &[f64],
    count: usize,
    tol: f64,
    opts: &NearPeriodOptions,
) -> Result<ShiftSequence> {
    let w1 = frequencies
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("no frequencies given".into()))?
        .abs();
    if !(w1 > 0.0) || frequencies.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument(
            "frequencies must be finite and the first one non-zero".into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(
            "phase tolerance must be positive".into(),
        ));
    }
    let ratios: Vec<f64> = frequencies[1..].iter().map(|w| w.abs() / w1).collect();
    let error_of = |q: f64| {
        ratios
            .iter()
            .map(|r| phase_distance(TAU * q * r))
            .fold(0.0, f64::max)
    };
    let build = |qs: Vec<f64>, note: String| {
        let mut seq = ShiftSequence::new(qs.iter().map(|q| TAU * q / w1).collect(), note)?;
        seq.phase_errors = qs.iter().map(|&q| error_of(q)).collect();
        Ok(seq)
    };

    let dens: Vec<Option<u64>> = ratios
        .iter()
        .map(|&r| rational_denominator(r, opts.cap))
        .collect();
    if dens.iter().all(Option::is_some) {
        let l = dens.iter().flatten().fold(1u64, |l, &d| l / gcd(l, d) * d);
        let qs = (1..=count as u64).map(|k| (k * l) as f64).collect();
        return build(qs, format!("exact periods, q = {l} k"));
    }

    if ratios.len() == 1 {
        let r = ratios[0];
        let qs: Vec<f64> = convergents(r, u64::MAX >> 11)
            .into_iter()
            .map(|(_, q)| q)
            .filter(|&q| q >= 1.0)
            .collect();
        let mut qs_dedup: Vec<f64> = Vec::new();
        for q in qs {
            if qs_dedup.last() != Some(&q) {
                qs_dedup.push(q);
            }
        }
        let hits: Vec<usize> = qs_dedup
            .iter()
            .enumerate()
            .filter(|(_, &q)| error_of(q) <= tol)
            .map(|(i, _)| i)
            .collect();
        if hits.len() >= 2 {
            let end = hits[1].max(count - 1);
            if end < qs_dedup.len() {
                let qs = qs_dedup[end + 1 - count..=end].to_vec();
                return build(qs, format!("continued-fraction denominators of {r}"));
            }
        }
    }

    let mut qs = Vec::with_capacity(count);
    for q in 1..=opts.cap {
        if error_of(q as f64) <= tol {
            qs.push(q as f64);
            if qs.len() == count {
                return build(qs, format!("scan up to q = {q}"));
            }
        }
    }
    Err(Error::CapExhausted {
        found: qs.len(),
        requested: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AaOptions {
    pub grid_points: usize,
    pub tol: f64,
    /// Number of entries just before the reference that form the tail.
    pub tail_len: usize,
    /// Where `f` may be evaluated, if restricted.
    pub domain: Option<(f64, f64)>,
}

impl Default for AaOptions {
    fn default() -> Self {
        AaOptions {
            grid_points: DEFAULT_GRID,
            tol: 0.05,
            tail_len: 1,
            domain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AaDiagnostic {
    pub window: (f64, f64),
    pub grid_points: usize,
    pub shifts: Vec<f64>,
    pub reference_shift: f64,
    /// `sup_t |f(t + s_n) - f(t + s_last)|`.
    pub e_fwd: Vec<f64>,
    /// `sup_t |f(t - s_n + s_last) - f(t)|`.
    pub e_bwd: Vec<f64>,
    pub tol: f64,
    pub tail_fwd: f64,
    pub tail_bwd: f64,
    pub verdict: Verdict,
}

fn sample<F>(f: &F, ts: &[f64]) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    ts.par_iter().map(|&t| f(t)).collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, |m, d| if d.is_nan() { f64::NAN } else { m.max(d) })
}

fn check_window(window: (f64, f64)) -> Result<()> {
    let (a, b) = window;
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "window [{a}, {b}] is not compact"
        )))
    }
}

/// Forward and backward shift-limit errors of `f` on `window`.
pub fn aa_probe<F>(
    f: &F,
    shifts: &ShiftSequence,
    window: (f64, f64),
    opts: &AaOptions,
) -> Result<AaDiagnostic>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    check_window(window)?;
    let last = shifts.last();
    if let Some((lo, hi)) = opts.domain {
        let extremes = shifts.shifts.iter().flat_map(|&s| {
            [
                window.0 + s,
                window.1 + s,
                window.0 - s + last,
                window.1 - s + last,
            ]
        });
        for x in extremes {
            if x < lo || x > hi {
                return Err(Error::Domain(format!(
                    "probe needs f at {x}, outside its domain [{lo}, {hi}]"
                )));
            }
        }
    }
    let ts = linspace(window.0, window.1, opts.grid_points);
    let shifted = |d: f64| ts.iter().map(|t| t + d).collect::<Vec<_>>();
    let base = sample(f, &ts);
    let reference = sample(f, &shifted(last));
    let mut e_fwd = Vec::with_capacity(shifts.len());
    let mut e_bwd = Vec::with_capacity(shifts.len());
    for &s in &shifts.shifts {
        e_fwd.push(sup_diff(&sample(f, &shifted(s)), &reference));
        e_bwd.push(sup_diff(&sample(f, &shifted(last - s)), &base));
    }
    let m = shifts.len();
    let tail = if m == 1 {
        0..1
    } else {
        (m - 1).saturating_sub(opts.tail_len.max(1))..m - 1
    };
    let tail_fwd = e_fwd[tail.clone()].iter().copied().fold(0.0, f64::max);
    let tail_bwd = e_bwd[tail].iter().copied().fold(0.0, f64::max);
    let verdict = Verdict::from_bool(tail_fwd <= opts.tol && tail_bwd <= opts.tol);
    Ok(AaDiagnostic {
        window,
        grid_points: opts.grid_points,
        shifts: shifts.shifts.clone(),
        reference_shift: last,
        e_fwd,
        e_bwd,
        tol: opts.tol,
        tail_fwd,
        tail_bwd,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcOptions {
    pub grid_points: usize,
    pub tol_uc: f64,
    /// Sub-grid offsets `theta * delta` tried from every grid point.
    pub substeps: usize,
}

impl Default for UcOptions {
    fn default() -> Self {
        UcOptions {
            grid_points: DEFAULT_GRID,
            tol_uc: 0.01,
            substeps: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcReport {
    pub window: (f64, f64),
    pub deltas: Vec<f64>,
    /// `omega(delta)` per entry of `deltas`.
    pub modulus: Vec<f64>,
    pub tol_uc: f64,
    pub verdict: Verdict,
}

/// Modulus of continuity on `window`, sampled at grid pairs and at offsets
/// `k delta / substeps` from every grid point.
pub fn uc_probe<F>(f: &F, window: (f64, f64), deltas: &[f64], opts: &UcOptions) -> Result<UcReport>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    check_window(window)?;
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("deltas must be positive".into()));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("deltas must be decreasing".into()));
    }
    let ts = linspace(window.0, window.1, opts.grid_points);
    let vals = sample(f, &ts);
    let h = if ts.len() > 1 {
        ts[1] - ts[0]
    } else {
        f64::INFINITY
    };
    let modulus = deltas
        .iter()
        .map(|&delta| {
            let reach = (delta / h + 1e-9).floor() as usize;
            let mut w = 0.0f64;
            for i in 0..ts.len() {
                for j in i + 1..ts.len().min(i + reach + 1) {
                    w = w.max((vals[i] - vals[j]).abs());
                }
            }
            let subs = opts.substeps.max(1);
            let off: f64 = (0..ts.len())
                .into_par_iter()
                .map(|i| {
                    let mut m = 0.0f64;
                    for k in 1..=subs {
                        let t2 = ts[i] + delta * k as f64 / subs as f64;
                        if t2 <= window.1 {
                            m = m.max((f(t2) - vals[i]).abs());
                        }
                    }
                    m
                })
                .reduce(|| 0.0, f64::max);
            w.max(off)
        })
        .collect::<Vec<f64>>();
    let last = *modulus.last().expect("non-empty");
    Ok(UcReport {
        window,
        deltas: deltas.to_vec(),
        tol_uc: opts.tol_uc,
        verdict: Verdict::from_bool(last <= opts.tol_uc),
        modulus,
    })
}

/// `t -> f(t - a(t))`.
pub fn delayed_composition<'a, F>(f: F, a: &'a ScalarSignal) -> impl Fn(f64) -> f64 + Sync + 'a
where
    F: Fn(f64) -> f64 + Sync + 'a,
{
    move |t| f(t - a.eval(t))
}

/// `| sup |f| - sup |f~| |` on the window grid, with `f~ = f(. + s_last)`.
pub fn sup_norm_compare<F>(
    f: &F,
    shifts: &ShiftSequence,
    window: (f64, f64),
    grid_points: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    check_window(window)?;
    let ts = linspace(window.0, window.1, grid_points);
    let last = shifts.last();
    let sup = |v: Vec<f64>| v.into_iter().map(f64::abs).fold(0.0, f64::max);
    let a = sup(sample(f, &ts));
    let b = sup(sample(f, &ts.iter().map(|t| t + last).collect::<Vec<_>>()));
    Ok((a - b).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn single_frequency_gives_exact_periods() {
        let s = find_near_periods(&[1.0], 4, 1e-3, &NearPeriodOptions::default()).unwrap();
        assert_eq!(s.shifts, vec![TAU, 2.0 * TAU, 3.0 * TAU, 4.0 * TAU]);
        assert!(s.phase_errors.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn commensurate_pair_gives_exact_periods() {
        let s = find_near_periods(&[1.0, 2.0], 3, 1e-3, &NearPeriodOptions::default()).unwrap();
        assert_eq!(s.shifts, vec![TAU, 2.0 * TAU, 3.0 * TAU]);
        let s = find_near_periods(&[2.0, 3.0], 2, 1e-3, &NearPeriodOptions::default()).unwrap();
        // Common period of sin(2t) and sin(3t).
        assert!((s.shifts[0] - TAU).abs() < 1e-12);
        assert!(s.phase_errors.iter().all(|&e| e < 1e-9));
    }

    #[test]
    fn sqrt_two_convergents() {
        let s = find_near_periods(&[1.0, SQRT2], 5, 0.05, &NearPeriodOptions::default()).unwrap();
        let qs: Vec<f64> = s.shifts.iter().map(|x| (x / TAU).round()).collect();
        assert_eq!(qs, vec![5.0, 12.0, 29.0, 70.0, 169.0]);
        // Oracle: 2 pi |q sqrt 2 - p| for the convergents p/q.
        for (q, p, e) in [
            (70.0, 99.0, &s.phase_errors[3]),
            (29.0, 41.0, &s.phase_errors[2]),
        ] {
            let exact = TAU * (q * SQRT2 - p).abs();
            assert!((e - exact).abs() < 1e-9, "{e} vs {exact}");
        }
        assert!((s.phase_errors[3] - 0.0317).abs() < 1e-4);
    }

    #[test]
    fn brute_force_and_cap() {
        let s = find_near_periods(
            &[1.0, SQRT2, 3f64.sqrt()],
            2,
            0.3,
            &NearPeriodOptions::default(),
        )
        .unwrap();
        assert!(s.phase_errors.iter().all(|&e| e <= 0.3));
        let r = find_near_periods(
            &[1.0, SQRT2, 3f64.sqrt()],
            50,
            1e-6,
            &NearPeriodOptions { cap: 100 },
        );
        assert!(matches!(r, Err(Error::CapExhausted { requested: 50, .. })));
    }

    #[test]
    fn probe_of_periodic_signal_is_exact() {
        let seq = ShiftSequence::new((1..=4).map(|k| TAU * k as f64).collect(), "periods").unwrap();
        let d = aa_probe(
            &|t: f64| t.sin(),
            &seq,
            (-10.0, 10.0),
            &AaOptions::default(),
        )
        .unwrap();
        assert!(d.e_fwd.iter().chain(&d.e_bwd).all(|&e| e < 1e-12));
        assert!(d.verdict.passed());
    }

    #[test]
    fn probe_of_linear_drift_fails() {
        let seq = ShiftSequence::new(vec![10.0, 20.0, 30.0], "hand").unwrap();
        let d = aa_probe(&|t: f64| t, &seq, (0.0, 1.0), &AaOptions::default()).unwrap();
        assert!((d.e_fwd[1] - 10.0).abs() < 1e-12);
        assert!(!d.verdict.passed());
    }

    #[test]
    fn probe_respects_domain() {
        let seq = ShiftSequence::new(vec![10.0], "hand").unwrap();
        let opts = AaOptions {
            domain: Some((0.0, 5.0)),
            ..AaOptions::default()
        };
        assert!(matches!(
            aa_probe(&|t: f64| t, &seq, (0.0, 1.0), &opts),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn quasi_periodic_probe_tracks_phase_error() {
        let f = |t: f64| t.sin() + (SQRT2 * t).sin();
        let seq = find_near_periods(&[1.0, SQRT2], 5, 0.05, &NearPeriodOptions::default()).unwrap();
        let d = aa_probe(&f, &seq, (-10.0, 10.0), &AaOptions::default()).unwrap();
        // |sin(x + a) - sin(x + b)| <= |a - b|: phase offsets against q = 169.
        for n in 0..seq.len() {
            let bound = (seq.phase_errors[n] + seq.phase_errors[4]) * 1.0001;
            assert!(d.e_fwd[n] <= bound, "{n}: {} > {bound}", d.e_fwd[n]);
        }
        assert!(d.e_fwd[3] <= 0.05);
        assert!(d.verdict.passed());
    }

    #[test]
    fn uc_examples() {
        let opts = UcOptions::default();
        let r = uc_probe(&|t: f64| t.sin(), (0.0, 20.0), &[0.1, 0.01], &opts).unwrap();
        assert!((r.modulus[1] - 0.01).abs() < 1e-4, "{:?}", r.modulus);
        assert!(r.verdict.passed());
        let r = uc_probe(&|t: f64| (t * t).sin(), (0.0, 100.0), &[0.01], &opts).unwrap();
        assert!(r.modulus[0] > 1.5, "{:?}", r.modulus);
        assert!(!r.verdict.passed());
        let r = uc_probe(&|_: f64| 3.0, (0.0, 1.0), &[0.5, 0.01], &opts).unwrap();
        assert_eq!(r.modulus, vec![0.0, 0.0]);
        assert!(uc_probe(&|t: f64| t, (0.0, 1.0), &[0.01, 0.1], &opts).is_err());
    }

    #[test]
    fn delayed_composition_examples() {
        let zero = ScalarSignal::constant(0.0);
        let g = delayed_composition(|t: f64| t.sin(), &zero);
        assert_eq!(g(0.7), 0.7f64.sin());
        let quarter = ScalarSignal::constant(std::f64::consts::FRAC_PI_2);
        let g = delayed_composition(|t: f64| t.sin(), &quarter);
        for t in [0.0, 1.0, -2.5] {
            assert!((g(t) + t.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn sup_norm_gap() {
        let seq = ShiftSequence::new(vec![TAU, 2.0 * TAU], "periods").unwrap();
        let gap = sup_norm_compare(&|t: f64| t.cos(), &seq, (0.0, 10.0), 2001).unwrap();
        assert!(gap < 1e-12);
        let gap = sup_norm_compare(&|_: f64| 2.0, &seq, (0.0, 10.0), 11).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn shift_sequence_validation() {
        assert!(ShiftSequence::new(vec![], "x").is_err());
        assert!(ShiftSequence::new(vec![1.0, 1.0], "x").is_err());
        assert!(ShiftSequence::new(vec![3.0, 2.0], "x").is_ok());
        assert!(ShiftSequence::new(vec![1.0, 3.0, 2.0], "x").is_err());
    }
}
