//! Range enclosures for expression trees.
//!
//! Two refinements sit on top of the natural interval extension:
//!
//! * on a finite window the window is cut into pieces and the enclosures of
//!   the pieces are merged;
//! * on an unbounded domain, every `sin`/`cos` node whose argument is affine in
//!   the variable is rewritten as a sinusoid of an independent angle on the
//!   circle. The range over the real line is contained in the range over the
//!   resulting torus, which is then bracketed by branch and bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use super::expr::Expr;
use super::interval::Interval;

/// Sound enclosure over `domain`; the tightest of the available strategies.
pub(crate) fn enclose_on(expr: &Expr, domain: Interval) -> Interval {
    if !expr.has_var() {
        return Interval::point(expr.eval(0.0));
    }
    if domain.lo.is_finite() && domain.hi.is_finite() {
        return enclose_window(expr, domain.lo, domain.hi, 64);
    }
    let plain = expr.enclose(domain);
    match torus_enclosure(expr) {
        Some(t) => intersect(plain, t),
        None => plain,
    }
}

/// Merged enclosures over `pieces` equal sub-windows of `[lo, hi]`.
pub(crate) fn enclose_window(expr: &Expr, lo: f64, hi: f64, pieces: usize) -> Interval {
    if !expr.has_var() {
        return Interval::point(expr.eval(0.0));
    }
    if lo == hi {
        return Interval::point(expr.eval(lo));
    }
    let pieces = pieces.max(1);
    let h = (hi - lo) / pieces as f64;
    let mut acc: Option<Interval> = None;
    for i in 0..pieces {
        let a = lo + h * i as f64;
        let b = if i + 1 == pieces {
            hi
        } else {
            lo + h * (i + 1) as f64
        };
        let piece = expr.enclose(Interval::new(a.min(b), a.max(b)));
        acc = Some(match acc {
            Some(r) => r.hull(&piece),
            None => piece,
        });
    }
    acc.expect("at least one piece")
}

pub(crate) fn intersect(a: Interval, b: Interval) -> Interval {
    let lo = a.lo.max(b.lo);
    let hi = a.hi.min(b.hi);
    if lo <= hi {
        Interval::new(lo, hi)
    } else {
        // Both are sound, so an empty intersection can only come from
        // rounding at a degenerate range.
        a.hull(&b)
    }
}

#[derive(Debug, Clone)]
enum Lifted {
    Const(f64),
    Wave {
        cos: bool,
        angle: usize,
        sign: f64,
        phase: f64,
    },
    Neg(Box<Lifted>),
    Add(Box<Lifted>, Box<Lifted>),
    Sub(Box<Lifted>, Box<Lifted>),
    Mul(Box<Lifted>, Box<Lifted>),
    Div(Box<Lifted>, Box<Lifted>),
    Sin(Box<Lifted>),
    Cos(Box<Lifted>),
    Exp(Box<Lifted>),
}

fn lift(expr: &Expr, freqs: &mut Vec<f64>) -> Option<Lifted> {
    if !expr.has_var() {
        return Some(Lifted::Const(expr.eval(0.0)));
    }
    let bx = |e: &Expr, freqs: &mut Vec<f64>| lift(e, freqs).map(Box::new);
    Some(match expr {
        Expr::Num(_) | Expr::Var => return None,
        Expr::Sin(arg) | Expr::Cos(arg) => {
            let cos = matches!(expr, Expr::Cos(_));
            match arg.affine() {
                Some((c, d)) if c != 0.0 && c.is_finite() && d.is_finite() => {
                    let w = c.abs();
                    let angle = match freqs.iter().position(|&f| f == w) {
                        Some(k) => k,
                        None => {
                            freqs.push(w);
                            freqs.len() - 1
                        }
                    };
                    Lifted::Wave {
                        cos,
                        angle,
                        sign: c.signum(),
                        phase: d,
                    }
                }
                _ => {
                    let inner = bx(arg, freqs)?;
                    if cos {
                        Lifted::Cos(inner)
                    } else {
                        Lifted::Sin(inner)
                    }
                }
            }
        }
        Expr::Neg(a) => Lifted::Neg(bx(a, freqs)?),
        Expr::Exp(a) => Lifted::Exp(bx(a, freqs)?),
        Expr::Add(a, b) => Lifted::Add(bx(a, freqs)?, bx(b, freqs)?),
        Expr::Sub(a, b) => Lifted::Sub(bx(a, freqs)?, bx(b, freqs)?),
        Expr::Mul(a, b) => Lifted::Mul(bx(a, freqs)?, bx(b, freqs)?),
        Expr::Div(a, b) => Lifted::Div(bx(a, freqs)?, bx(b, freqs)?),
    })
}

impl Lifted {
    fn eval(&self, th: &[f64]) -> f64 {
        match self {
            Lifted::Const(c) => *c,
            Lifted::Wave {
                cos,
                angle,
                sign,
                phase,
            } => {
                let x = sign * th[*angle] + phase;
                if *cos {
                    x.cos()
                } else {
                    x.sin()
                }
            }
            Lifted::Neg(a) => -a.eval(th),
            Lifted::Add(a, b) => a.eval(th) + b.eval(th),
            Lifted::Sub(a, b) => a.eval(th) - b.eval(th),
            Lifted::Mul(a, b) => a.eval(th) * b.eval(th),
            Lifted::Div(a, b) => a.eval(th) / b.eval(th),
            Lifted::Sin(a) => a.eval(th).sin(),
            Lifted::Cos(a) => a.eval(th).cos(),
            Lifted::Exp(a) => a.eval(th).exp(),
        }
    }

    fn enclose(&self, bx: &[Interval]) -> Interval {
        match self {
            Lifted::Const(c) => Interval::point(*c),
            Lifted::Wave {
                cos,
                angle,
                sign,
                phase,
            } => {
                let x = Interval::point(*sign)
                    .mul(bx[*angle])
                    .add(Interval::point(*phase));
                if *cos {
                    x.cos()
                } else {
                    x.sin()
                }
            }
            Lifted::Neg(a) => a.enclose(bx).neg(),
            Lifted::Add(a, b) => a.enclose(bx).add(b.enclose(bx)),
            Lifted::Sub(a, b) => a.enclose(bx).sub(b.enclose(bx)),
            Lifted::Mul(a, b) => a.enclose(bx).mul(b.enclose(bx)),
            Lifted::Div(a, b) => a.enclose(bx).div(b.enclose(bx)),
            Lifted::Sin(a) => a.enclose(bx).sin(),
            Lifted::Cos(a) => a.enclose(bx).cos(),
            Lifted::Exp(a) => a.enclose(bx).exp(),
        }
    }
}

struct Cell {
    key: f64,
    bx: Vec<Interval>,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    // Max-heap on the negated key gives the smallest lower bound first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key)
    }
}

const BB_TOL: f64 = 1e-6;
const BB_BUDGET: usize = 20_000;

/// Lower bound of the minimum (or, with `maximize`, upper bound of the
/// maximum) of the lifted function over the torus.
fn extreme(l: &Lifted, dims: usize, maximize: bool) -> f64 {
    let sgn = if maximize { -1.0 } else { 1.0 };
    let key_of = |bx: &[Interval]| {
        let r = l.enclose(bx);
        let k = if maximize { -r.hi } else { r.lo };
        if k.is_nan() {
            f64::NEG_INFINITY
        } else {
            k
        }
    };
    let sample = |bx: &[Interval]| {
        let c: Vec<f64> = bx.iter().map(|i| i.mid()).collect();
        let v = sgn * l.eval(&c);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let root = vec![Interval::new(0.0, TAU); dims];
    let mut best = sample(&root);
    let mut heap = BinaryHeap::new();
    heap.push(Cell {
        key: key_of(&root),
        bx: root,
    });
    let mut evals = 0;
    while let Some(cell) = heap.pop() {
        let scale = 1.0 + best.abs().min(1e300);
        if best - cell.key <= BB_TOL * scale || evals >= BB_BUDGET || !cell.key.is_finite() {
            return sgn * cell.key;
        }
        let (k, _) = cell
            .bx
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.width().total_cmp(&b.1.width()))
            .expect("non-empty box");
        let m = cell.bx[k].mid();
        for half in [
            Interval::new(cell.bx[k].lo, m),
            Interval::new(m, cell.bx[k].hi),
        ] {
            let mut bx = cell.bx.clone();
            bx[k] = half;
            best = best.min(sample(&bx));
            let key = key_of(&bx).max(cell.key);
            heap.push(Cell { key, bx });
            evals += 1;
        }
    }
    unreachable!("heap never drains: every pop pushes two cells")
}

/// Frequencies `|c|` of every `sin(c t + d)` or `cos(c t + d)` in `expr`,
/// in order of first appearance.
pub(crate) fn affine_frequencies(expr: &Expr) -> Vec<f64> {
    fn walk(e: &Expr, out: &mut Vec<f64>) {
        match e {
            Expr::Num(_) | Expr::Var => {}
            Expr::Sin(a) | Expr::Cos(a) => match a.affine() {
                Some((c, _)) if c != 0.0 && c.is_finite() => {
                    if !out.contains(&c.abs()) {
                        out.push(c.abs());
                    }
                }
                _ => walk(a, out),
            },
            Expr::Neg(a) | Expr::Exp(a) => walk(a, out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                walk(a, out);
                walk(b, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(expr, &mut out);
    out
}

/// Torus enclosure, or `None` when the variable occurs outside sinusoids of
/// affine arguments.
fn torus_enclosure(expr: &Expr) -> Option<Interval> {
    let mut freqs = Vec::new();
    let l = lift(expr, &mut freqs)?;
    let dims = freqs.len();
    if dims == 0 {
        return Some(Interval::point(l.eval(&[])));
    }
    let lo = extreme(&l, dims, false);
    let hi = extreme(&l, dims, true);
    Some(Interval::new(lo.min(hi), hi.max(lo)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::parse::parse;

    fn p(s: &str) -> Expr {
        parse(s, "t", Interval::ENTIRE).unwrap()
    }

    #[test]
    fn torus_tightens_squared_sine() {
        let r = enclose_on(&p("sin(t)*sin(t)"), Interval::ENTIRE);
        assert!(r.lo <= 0.0 && r.lo > -1e-3, "{r:?}");
        assert!(r.hi >= 1.0 && r.hi < 1.0 + 1e-3, "{r:?}");
    }

    #[test]
    fn bare_variable_falls_back_to_plain_extension() {
        let r = enclose_on(&p("t"), Interval::ENTIRE);
        assert_eq!(r, Interval::ENTIRE);
        let r = enclose_on(&p("exp(t)"), Interval::ENTIRE);
        assert_eq!(r.lo, 0.0);
        assert_eq!(r.hi, f64::INFINITY);
    }

    #[test]
    fn frequency_detection() {
        assert_eq!(
            affine_frequencies(&p("1 + sin(2*t) * cos(-t + 1) + sin(2*t)")),
            vec![2.0, 1.0]
        );
        assert!(affine_frequencies(&p("sin(t*t)")).is_empty());
    }

    #[test]
    fn affine_detection() {
        assert_eq!(p("2*(t+0.5)").affine(), Some((2.0, 1.0)));
        assert_eq!(p("t/4 - 1").affine(), Some((0.25, -1.0)));
        assert_eq!(p("t*t").affine(), None);
        assert_eq!(p("sin(t)").affine(), None);
    }

    #[test]
    fn window_subdivision_is_tight_for_smooth_products() {
        let r = enclose_window(&p("sin(t)*sin(t)"), 0.0, 6.3, 10_000);
        assert!(r.lo > -2e-3 && r.hi < 1.0 + 2e-3, "{r:?}");
    }
}
