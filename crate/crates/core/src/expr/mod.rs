//! Arithmetic expressions in `x`, `y` and named parameters.
//!
//! Grammar (standard precedence, left associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := base ('^' ['-'] number)?
//! base   := number | ident | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`. Exponents are
//! numeric literals only, and there is no implicit multiplication (`2x` is a
//! syntax error). `x` and `y` are the state variables; every other identifier
//! is a parameter.

mod diff;
mod parse;

pub use parse::{parse, ParseError};

use crate::geometry::{Matrix2, Point2, Rect};
use crate::map::{MapError, PlanarMap, SINGULARITY_TOL};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a constant exponent.
    Pow(Box<Expr>, f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("division by a vanishing denominator")]
    Singularity,
    #[error("result is not a finite real number")]
    NonFinite,
}

pub type Params = BTreeMap<String, f64>;

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::Var(Var::Y)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn pow(e: Expr, n: f64) -> Expr {
        Expr::Pow(Box::new(e), n)
    }

    pub fn eval(&self, x: f64, y: f64, params: &Params) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Param(name) => *params
                .get(name)
                .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?,
            Expr::Neg(e) => -e.eval(x, y, params)?,
            Expr::Binary(op, l, r) => {
                let (a, b) = (l.eval(x, y, params)?, r.eval(x, y, params)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.abs() < SINGULARITY_TOL {
                            return Err(EvalError::Singularity);
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(base, n) => {
                let b = base.eval(x, y, params)?;
                if *n < 0.0 && b.abs() < SINGULARITY_TOL {
                    return Err(EvalError::Singularity);
                }
                power(b, *n)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Parameter names referenced by the expression.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Param(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(e) | Expr::Pow(e, _) => e.collect_params(out),
            Expr::Binary(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
            Expr::Const(_) | Expr::Var(_) => {}
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => 1,
            Expr::Neg(e) | Expr::Pow(e, _) => 1 + e.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Folds constant subtrees and drops neutral elements (`e + 0`, `1 * e`,
    /// `0 * e`, `e ^ 1`, ...). Divisions by a vanishing constant are kept so
    /// that evaluation still reports the singularity.
    pub fn fold(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(e) => match e.fold() {
                Expr::Const(c) => Expr::Const(-c),
                Expr::Neg(inner) => *inner,
                f => Expr::neg(f),
            },
            Expr::Pow(b, n) => {
                let b = b.fold();
                match (&b, *n) {
                    (_, n) if n == 1.0 => b,
                    (_, n) if n == 0.0 => Expr::Const(1.0),
                    (Expr::Const(c), n) if !(n < 0.0 && c.abs() < SINGULARITY_TOL) => {
                        let v = power(*c, n);
                        if v.is_finite() {
                            Expr::Const(v)
                        } else {
                            Expr::pow(b, n)
                        }
                    }
                    _ => Expr::pow(b, *n),
                }
            }
            Expr::Binary(op, l, r) => fold_binary(*op, l.fold(), r.fold()),
        }
    }
}

fn power(b: f64, n: f64) -> f64 {
    if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 {
        b.powi(n as i32)
    } else {
        b.powf(n)
    }
}

fn fold_binary(op: BinOp, l: Expr, r: Expr) -> Expr {
    use Expr::Const;
    match (op, &l, &r) {
        (BinOp::Div, _, Const(b)) if b.abs() < SINGULARITY_TOL => Expr::binary(op, l, r),
        (_, Const(a), Const(b)) => Const(match op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }),
        (BinOp::Add, Const(a), _) if *a == 0.0 => r,
        (BinOp::Add | BinOp::Sub, _, Const(b)) if *b == 0.0 => l,
        (BinOp::Sub, Const(a), _) if *a == 0.0 => Expr::neg(r).fold(),
        (BinOp::Mul, Const(a), _) | (BinOp::Mul, _, Const(a)) if *a == 0.0 => Const(0.0),
        (BinOp::Mul, Const(a), _) if *a == 1.0 => r,
        (BinOp::Mul | BinOp::Div, _, Const(b)) if *b == 1.0 => l,
        (BinOp::Div, Const(a), _) if *a == 0.0 => Const(0.0),
        _ => Expr::binary(op, l, r),
    }
}

// Binding strength used by the printer: atoms 5, powers 4, negation 3.
fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_sign_negative() => 3,
        Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => 5,
        Expr::Pow(..) => 4,
        Expr::Neg(_) => 3,
        Expr::Binary(op, ..) => op.precedence(),
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{}` prints the shortest representation that parses back exactly
    write!(f, "{v}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(c) => write_number(f, *c),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Param(n) => write!(f, "{n}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                wrap(f, e, strength(e) < 3)
            }
            Expr::Pow(b, n) => {
                wrap(f, b, strength(b) < 5)?;
                write!(f, "^")?;
                write_number(f, *n)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                wrap(f, l, strength(l) < p)?;
                write!(f, " {} ", op.symbol())?;
                wrap(f, r, strength(r) <= p)
            }
        }
    }
}

/// Builds a [`PlanarMap`] from component expressions, with the exact Jacobian
/// obtained by symbolic differentiation.
pub fn map_from_exprs(
    name: impl Into<String>,
    f: &Expr,
    g: &Expr,
    params: Params,
    domain: Rect,
) -> Result<PlanarMap, EvalError> {
    let mut needed = f.parameters();
    needed.extend(g.parameters());
    if let Some(missing) = needed.iter().find(|n| !params.contains_key(*n)) {
        return Err(EvalError::UnboundParameter(missing.clone()));
    }
    let lift = |e: EvalError, at: Point2| match e {
        EvalError::UnboundParameter(n) => MapError::UnboundParameter(n),
        EvalError::Singularity => MapError::Singularity { at },
        EvalError::NonFinite => MapError::NonFinite { at },
    };
    let (fe, ge, pe) = (f.fold(), g.fold(), params.clone());
    let eval = move |p: Point2| -> Result<Point2, MapError> {
        Ok(Point2::new(
            fe.eval(p.x, p.y, &pe).map_err(|e| lift(e, p))?,
            ge.eval(p.x, p.y, &pe).map_err(|e| lift(e, p))?,
        ))
    };
    let partials = [
        f.differentiate(Var::X),
        f.differentiate(Var::Y),
        g.differentiate(Var::X),
        g.differentiate(Var::Y),
    ];
    let pj = params.clone();
    let jac = move |p: Point2| -> Result<Matrix2, MapError> {
        let v = |e: &Expr| e.eval(p.x, p.y, &pj).map_err(|err| lift(err, p));
        Ok(Matrix2::new(
            v(&partials[0])?,
            v(&partials[1])?,
            v(&partials[2])?,
            v(&partials[3])?,
        ))
    };
    Ok(PlanarMap::new(name, domain, eval)
        .with_jacobian(jac)
        .with_params(params))
}

#[cfg(test)]
pub(crate) mod testgen {
    use super::*;
    use proptest::prelude::*;

    /// Random expressions of depth ≤ 5 over `x`, `y` and the parameter `c`.
    pub fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-4i32..5).prop_map(|k| Expr::Const(k as f64 * 0.5)),
            Just(Expr::x()),
            Just(Expr::y()),
            Just(Expr::param("c")),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Expr::neg),
                (inner.clone(), 1u8..4).prop_map(|(e, n)| Expr::pow(e, n as f64)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::binary(BinOp::Add, l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::binary(BinOp::Sub, l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::binary(BinOp::Mul, l, r)),
                (inner.clone(), inner).prop_map(|(l, r)| Expr::binary(BinOp::Div, l, r)),
            ]
        })
    }
}
