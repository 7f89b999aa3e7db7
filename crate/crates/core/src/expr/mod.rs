//! Real-valued scalar expressions in up to three variables.
//!
//! Expressions are immutable trees shared through [`Arc`], so cloning is
//! cheap and evaluation is re-entrant. Values and exact first derivatives
//! come from forward-mode dual numbers ([`Expr::eval_grad`]); symbolic
//! derivatives ([`Expr::derivative`]) are themselves expressions, which is
//! what the surface code uses for second fundamental forms.
//!
//! Grammar (precedence low to high, `^` right-associative):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" unary)?
//! atom   := number | name | func "(" expr ")" | "atan2(" expr "," expr ")" | "(" expr ")"
//! func   := sqrt | sin | cos | exp | log | abs | sign
//! ```
//!
//! Plane expressions use the variables `x`, `y` (aliases `u`, `v`). Ambient
//! expressions additionally accept `z`; `X`, `Y`, `Z` are aliases for the
//! three ambient coordinates. The constants `pi` and `e` are predefined.

mod diff;
mod display;
mod eval;
mod parser;

use std::sync::Arc;

pub use eval::{Dual, Program};
pub use parser::ParseError;

use thiserror::Error;

/// Tolerance on the argument of `abs`, `sqrt` and `sign` below which a
/// derivative request is reported as non-differentiable.
pub const NONSMOOTH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Const(f64),
    Var(u8),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Func(Func, Expr),
    Atan2(Expr, Expr),
}

/// An immutable expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(pub(crate) Arc<Node>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {what} in `{expr}`")]
    Domain { what: &'static str, expr: String },
    #[error("derivative requested at a non-smooth point of `{expr}`")]
    NonDifferentiable { expr: String },
    #[error("expression uses variable index {index} but only {available} values were supplied")]
    MissingVariable { index: u8, available: usize },
}

impl Expr {
    pub(crate) fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    /// Parses a plane expression in `x`, `y` (or `u`, `v`).
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parser::parse(source, 2)
    }

    /// Parses an expression in the ambient coordinates `x`, `y`, `z`.
    pub fn parse_ambient(source: &str) -> Result<Expr, ParseError> {
        parser::parse(source, 3)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::from_node(Node::Const(c))
    }

    pub fn var(index: u8) -> Expr {
        assert!(index < 3, "at most three variables are supported");
        Expr::from_node(Node::Var(index))
    }

    pub fn x() -> Expr {
        Expr::var(0)
    }

    pub fn y() -> Expr {
        Expr::var(1)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// True when the expression contains no variables.
    pub fn is_constant(&self) -> bool {
        self.max_var().is_none()
    }

    /// Highest variable index used, if any.
    pub fn max_var(&self) -> Option<u8> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Func(_, a) => a.max_var(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b)
            | Node::Atan2(a, b) => match (a.max_var(), b.max_var()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }

    /// Value at `point` (one entry per variable).
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        eval::eval_tree(self, point, false).map(|d| d.v)
    }

    /// Value and exact partial derivatives at `(x, y)`.
    pub fn eval_grad(&self, x: f64, y: f64) -> Result<(f64, f64, f64), EvalError> {
        let d = eval::eval_tree(self, &[x, y], true)?;
        Ok((d.v, d.d[0], d.d[1]))
    }

    /// Value and gradient with respect to every supplied variable.
    pub fn eval_dual(&self, point: &[f64]) -> Result<Dual, EvalError> {
        eval::eval_tree(self, point, true)
    }

    /// Symbolic partial derivative with respect to variable `index`.
    pub fn derivative(&self, index: u8) -> Expr {
        diff::derivative(self, index)
    }

    /// Replaces variables by expressions (`subs[i]` for variable `i`).
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => subs.get(*i as usize).cloned().unwrap_or_else(|| self.clone()),
            Node::Neg(a) => -a.substitute(subs),
            Node::Add(a, b) => a.substitute(subs) + b.substitute(subs),
            Node::Sub(a, b) => a.substitute(subs) - b.substitute(subs),
            Node::Mul(a, b) => a.substitute(subs) * b.substitute(subs),
            Node::Div(a, b) => a.substitute(subs) / b.substitute(subs),
            Node::Pow(a, b) => a.substitute(subs).pow(b.substitute(subs)),
            Node::Func(f, a) => a.substitute(subs).apply(*f),
            Node::Atan2(a, b) => Expr::atan2(a.substitute(subs), b.substitute(subs)),
        }
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        diff::pow(self, exponent)
    }

    pub fn powi(self, n: i32) -> Expr {
        diff::pow(self, Expr::constant(n as f64))
    }

    pub fn apply(self, f: Func) -> Expr {
        diff::func(f, self)
    }

    pub fn sqrt(self) -> Expr {
        self.apply(Func::Sqrt)
    }

    pub fn atan2(y: Expr, x: Expr) -> Expr {
        Expr::from_node(Node::Atan2(y, x))
    }

    /// Number of nodes counted as a tree (shared subtrees counted each time).
    pub fn tree_size(&self) -> usize {
        1 + match self.node() {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Neg(a) | Node::Func(_, a) => a.tree_size(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b)
            | Node::Atan2(a, b) => a.tree_size() + b.tree_size(),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        diff::add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        diff::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        diff::mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        diff::div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        diff::neg(self)
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        self.clone() + rhs.clone()
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self.clone() - rhs.clone()
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        self.clone() * rhs.clone()
    }
}

impl std::ops::Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        self.clone() / rhs.clone()
    }
}
