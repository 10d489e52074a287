//! Closed intervals over the extended reals with outward rounding.
//!
//! Operations on two point intervals are evaluated with the same `f64`
//! arithmetic the tree evaluator uses, so constant sub-expressions get exact
//! (degenerate) enclosures. Every other result is widened by one ulp on each
//! side.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

/// Product of two interval endpoints where `0 * inf` is `0`: endpoints stand
/// for real numbers, and an exact zero annihilates any real factor.
fn endpoint_mul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

#[allow(clippy::should_implement_trait)]
impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            0.5 * (self.lo + self.hi)
        } else if self.lo.is_finite() {
            self.lo
        } else if self.hi.is_finite() {
            self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    fn widened(lo: f64, hi: f64) -> Interval {
        Interval {
            lo: down(lo),
            hi: up(hi),
        }
    }

    pub fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn add(self, o: Interval) -> Interval {
        if self.is_point() && o.is_point() {
            return Interval::point(self.lo + o.lo);
        }
        Interval::widened(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(self, o: Interval) -> Interval {
        if self.is_point() && o.is_point() {
            return Interval::point(self.lo - o.lo);
        }
        Interval::widened(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn mul(self, o: Interval) -> Interval {
        if self.is_point() && o.is_point() {
            return Interval::point(self.lo * o.lo);
        }
        let c = [
            endpoint_mul(self.lo, o.lo),
            endpoint_mul(self.lo, o.hi),
            endpoint_mul(self.hi, o.lo),
            endpoint_mul(self.hi, o.hi),
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::widened(lo, hi)
    }

    pub fn div(self, o: Interval) -> Interval {
        if self.is_point() && o.is_point() && o.lo != 0.0 {
            return Interval::point(self.lo / o.lo);
        }
        if o.contains(0.0) {
            return Interval::ENTIRE;
        }
        let recip = Interval::widened(1.0 / o.hi, 1.0 / o.lo);
        self.mul(recip)
    }

    pub fn exp(self) -> Interval {
        if self.is_point() {
            return Interval::point(self.lo.exp());
        }
        let lo = down(self.lo.exp()).max(0.0);
        Interval {
            lo,
            hi: up(self.hi.exp()),
        }
    }

    pub fn sin(self) -> Interval {
        if self.is_point() {
            return Interval::point(self.lo.sin());
        }
        trig_range(self, FRAC_PI_2, f64::sin)
    }

    pub fn cos(self) -> Interval {
        if self.is_point() {
            return Interval::point(self.lo.cos());
        }
        trig_range(self, 0.0, f64::cos)
    }
}

/// Range of a unit sinusoid whose maxima sit at `peak + 2kπ` and minima at
/// `peak + π + 2kπ`.
fn trig_range(x: Interval, peak: f64, f: fn(f64) -> f64) -> Interval {
    let full = Interval::new(-1.0, 1.0);
    if !x.lo.is_finite() || !x.hi.is_finite() || x.width() >= TAU {
        return full;
    }
    // Containment tests are slackened so that rounding can only enlarge the
    // enclosure.
    let slack = 1e-12 * (1.0 + x.lo.abs().max(x.hi.abs()));
    let (lo, hi) = (x.lo - slack, x.hi + slack);
    let hits = |center: f64| {
        let k = ((lo - center) / TAU).ceil();
        center + k * TAU <= hi
    };
    let (a, b) = (f(x.lo), f(x.hi));
    let mut out_lo = a.min(b);
    let mut out_hi = a.max(b);
    if hits(peak) {
        out_hi = 1.0;
    }
    if hits(peak + PI) {
        out_lo = -1.0;
    }
    Interval {
        lo: down(out_lo).max(-1.0),
        hi: up(out_hi).min(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_range_detects_interior_extrema() {
        let r = Interval::new(0.0, PI).sin();
        assert_eq!(r.hi, 1.0);
        assert!(r.lo <= 0.0 && r.lo > -1e-12);
        let r = Interval::new(0.1, 0.2).sin();
        assert!(r.lo <= 0.1f64.sin() && r.hi >= 0.2f64.sin());
        assert!(r.hi < 0.3);
    }

    #[test]
    fn cos_range_detects_interior_extrema() {
        let r = Interval::new(-0.5, 0.5).cos();
        assert_eq!(r.hi, 1.0);
        let r = Interval::new(3.0, 3.5).cos();
        assert_eq!(r.lo, -1.0);
    }

    #[test]
    fn zero_annihilates_unbounded_factor() {
        let r = Interval::point(0.0).mul(Interval::ENTIRE);
        assert!(r.lo <= 0.0 && r.lo > -1e-300);
        assert!(r.hi >= 0.0 && r.hi < 1e-300);
    }

    #[test]
    fn division_by_interval_straddling_zero_is_entire() {
        let r = Interval::point(1.0).div(Interval::new(-1.0, 1.0));
        assert_eq!(r, Interval::ENTIRE);
    }

    #[test]
    fn point_ops_match_float_arithmetic() {
        let a = Interval::point(0.1);
        let b = Interval::point(0.2);
        assert_eq!(a.add(b).lo, 0.1 + 0.2);
        assert!(a.add(b).is_point());
    }
}
