use std::fmt;

use super::interval::Interval;

/// Expression tree over a single real variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var => x,
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Natural interval extension: encloses `{ eval(x) : x in dom }`.
    pub fn enclose(&self, dom: Interval) -> Interval {
        match self {
            Expr::Num(c) => Interval::point(*c),
            Expr::Var => dom,
            Expr::Neg(a) => a.enclose(dom).neg(),
            Expr::Add(a, b) => a.enclose(dom).add(b.enclose(dom)),
            Expr::Sub(a, b) => a.enclose(dom).sub(b.enclose(dom)),
            Expr::Mul(a, b) => a.enclose(dom).mul(b.enclose(dom)),
            Expr::Div(a, b) => a.enclose(dom).div(b.enclose(dom)),
            Expr::Sin(a) => a.enclose(dom).sin(),
            Expr::Cos(a) => a.enclose(dom).cos(),
            Expr::Exp(a) => a.enclose(dom).exp(),
        }
    }

    pub fn has_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var => true,
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.has_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.has_var() || b.has_var()
            }
        }
    }

    /// `Some((c, d))` when the tree is syntactically `c*x + d`.
    pub(crate) fn affine(&self) -> Option<(f64, f64)> {
        if !self.has_var() {
            return Some((0.0, self.eval(0.0)));
        }
        match self {
            Expr::Var => Some((1.0, 0.0)),
            Expr::Neg(a) => a.affine().map(|(c, d)| (-c, -d)),
            Expr::Add(a, b) => {
                let (c1, d1) = a.affine()?;
                let (c2, d2) = b.affine()?;
                Some((c1 + c2, d1 + d2))
            }
            Expr::Sub(a, b) => {
                let (c1, d1) = a.affine()?;
                let (c2, d2) = b.affine()?;
                Some((c1 - c2, d1 - d2))
            }
            Expr::Mul(a, b) => {
                let (c1, d1) = a.affine()?;
                let (c2, d2) = b.affine()?;
                if c1 == 0.0 {
                    Some((d1 * c2, d1 * d2))
                } else if c2 == 0.0 {
                    Some((c1 * d2, d1 * d2))
                } else {
                    None
                }
            }
            Expr::Div(a, b) => {
                let (c1, d1) = a.affine()?;
                if b.has_var() {
                    return None;
                }
                let den = b.eval(0.0);
                Some((c1 / den, d1 / den))
            }
            _ => None,
        }
    }

    /// Replaces the variable `x` by `x + s`.
    pub fn shifted(&self, s: f64) -> Expr {
        match self {
            Expr::Num(c) => Expr::Num(*c),
            Expr::Var => Expr::Add(Box::new(Expr::Var), Box::new(Expr::Num(s))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.shifted(s))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.shifted(s)), Box::new(b.shifted(s))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.shifted(s)), Box::new(b.shifted(s))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.shifted(s)), Box::new(b.shifted(s))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.shifted(s)), Box::new(b.shifted(s))),
            Expr::Sin(a) => Expr::Sin(Box::new(a.shifted(s))),
            Expr::Cos(a) => Expr::Cos(Box::new(a.shifted(s))),
            Expr::Exp(a) => Expr::Exp(Box::new(a.shifted(s))),
        }
    }

    /// Fully parenthesised rendering that parses back to a tree with
    /// bit-identical evaluation.
    pub fn render<'a>(&'a self, var: &'a str) -> Render<'a> {
        Render { expr: self, var }
    }
}

pub struct Render<'a> {
    expr: &'a Expr,
    var: &'a str,
}

impl fmt::Display for Render<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = self.var;
        let bin = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr| {
            write!(f, "({} {} {})", a.render(var), op, b.render(var))
        };
        match self.expr {
            Expr::Num(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var => f.write_str(var),
            Expr::Neg(a) => write!(f, "(-{})", a.render(var)),
            Expr::Add(a, b) => bin(f, a, "+", b),
            Expr::Sub(a, b) => bin(f, a, "-", b),
            Expr::Mul(a, b) => bin(f, a, "*", b),
            Expr::Div(a, b) => bin(f, a, "/", b),
            Expr::Sin(a) => write!(f, "sin({})", a.render(var)),
            Expr::Cos(a) => write!(f, "cos({})", a.render(var)),
            Expr::Exp(a) => write!(f, "exp({})", a.render(var)),
        }
    }
}
