use std::collections::HashMap;
use std::sync::Arc;

use super::{EvalError, Expr, Func, Node, NONSMOOTH_TOL};

/// A value with its gradient with respect to (up to) three variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; 3] }
    }

    fn scale(self, value: f64, k: f64) -> Dual {
        Dual {
            v: value,
            d: [k * self.d[0], k * self.d[1], k * self.d[2]],
        }
    }
}

fn combine(v: f64, a: &Dual, ka: f64, b: &Dual, kb: f64) -> Dual {
    Dual {
        v,
        d: [
            ka * a.d[0] + kb * b.d[0],
            ka * a.d[1] + kb * b.d[1],
            ka * a.d[2] + kb * b.d[2],
        ],
    }
}

fn domain(what: &'static str, at: &Expr) -> EvalError {
    EvalError::Domain {
        what,
        expr: at.to_string(),
    }
}

fn nonsmooth(at: &Expr) -> EvalError {
    EvalError::NonDifferentiable {
        expr: at.to_string(),
    }
}

fn is_small_integer(c: f64) -> bool {
    c.fract() == 0.0 && c.abs() < 2f64.powi(31)
}

pub(super) fn div(a: Dual, b: Dual, at: &Expr) -> Result<Dual, EvalError> {
    if b.v == 0.0 {
        return Err(domain("division by zero", at));
    }
    let q = a.v / b.v;
    Ok(combine(q, &a, 1.0 / b.v, &b, -q / b.v))
}

pub(super) fn pow_const(base: Dual, c: f64, grad: bool, at: &Expr) -> Result<Dual, EvalError> {
    if is_small_integer(c) {
        let n = c as i32;
        if base.v == 0.0 && n < 0 {
            return Err(domain("division by zero", at));
        }
        let v = base.v.powi(n);
        let k = if n == 0 { 0.0 } else { c * base.v.powi(n - 1) };
        return Ok(base.scale(v, k));
    }
    if base.v <= 0.0 {
        return Err(domain("non-integer power of a non-positive base", at));
    }
    let v = base.v.powf(c);
    let k = if grad { c * v / base.v } else { 0.0 };
    Ok(base.scale(v, k))
}

pub(super) fn pow_general(base: Dual, e: Dual, at: &Expr) -> Result<Dual, EvalError> {
    if base.v <= 0.0 {
        return Err(domain("variable power of a non-positive base", at));
    }
    let ln = base.v.ln();
    let v = (e.v * ln).exp();
    Ok(combine(v, &e, v * ln, &base, v * e.v / base.v))
}

pub(super) fn func(f: Func, a: Dual, grad: bool, at: &Expr) -> Result<Dual, EvalError> {
    Ok(match f {
        Func::Sqrt => {
            if a.v < -NONSMOOTH_TOL {
                return Err(domain("square root of a negative number", at));
            }
            if grad && a.v.abs() <= NONSMOOTH_TOL {
                return Err(nonsmooth(at));
            }
            let v = a.v.max(0.0).sqrt();
            a.scale(v, if grad { 0.5 / v } else { 0.0 })
        }
        Func::Sin => a.scale(a.v.sin(), a.v.cos()),
        Func::Cos => a.scale(a.v.cos(), -a.v.sin()),
        Func::Exp => {
            let v = a.v.exp();
            a.scale(v, v)
        }
        Func::Log => {
            if a.v <= 0.0 {
                return Err(domain("logarithm of a non-positive number", at));
            }
            a.scale(a.v.ln(), 1.0 / a.v)
        }
        Func::Abs => {
            if grad && a.v.abs() <= NONSMOOTH_TOL {
                return Err(nonsmooth(at));
            }
            a.scale(a.v.abs(), if a.v < 0.0 { -1.0 } else { 1.0 })
        }
        Func::Sign => {
            if grad && a.v.abs() <= NONSMOOTH_TOL {
                return Err(nonsmooth(at));
            }
            let s = if a.v > 0.0 {
                1.0
            } else if a.v < 0.0 {
                -1.0
            } else {
                0.0
            };
            Dual::constant(s)
        }
    })
}

pub(super) fn atan2(y: Dual, x: Dual, at: &Expr) -> Result<Dual, EvalError> {
    let r2 = x.v * x.v + y.v * y.v;
    if r2 == 0.0 {
        return Err(domain("atan2 of the origin", at));
    }
    Ok(combine(y.v.atan2(x.v), &y, x.v / r2, &x, -y.v / r2))
}

fn var(i: u8, point: &[f64]) -> Result<Dual, EvalError> {
    let v = *point.get(i as usize).ok_or(EvalError::MissingVariable {
        index: i,
        available: point.len(),
    })?;
    let mut d = Dual::constant(v);
    d.d[i as usize] = 1.0;
    Ok(d)
}

pub(super) fn eval_tree(e: &Expr, point: &[f64], grad: bool) -> Result<Dual, EvalError> {
    Ok(match e.node() {
        Node::Const(c) => Dual::constant(*c),
        Node::Var(i) => var(*i, point)?,
        Node::Neg(a) => {
            let a = eval_tree(a, point, grad)?;
            a.scale(-a.v, -1.0)
        }
        Node::Add(a, b) => {
            let (a, b) = (eval_tree(a, point, grad)?, eval_tree(b, point, grad)?);
            combine(a.v + b.v, &a, 1.0, &b, 1.0)
        }
        Node::Sub(a, b) => {
            let (a, b) = (eval_tree(a, point, grad)?, eval_tree(b, point, grad)?);
            combine(a.v - b.v, &a, 1.0, &b, -1.0)
        }
        Node::Mul(a, b) => {
            let (a, b) = (eval_tree(a, point, grad)?, eval_tree(b, point, grad)?);
            combine(a.v * b.v, &a, b.v, &b, a.v)
        }
        Node::Div(a, b) => div(eval_tree(a, point, grad)?, eval_tree(b, point, grad)?, e)?,
        Node::Pow(b, x) => {
            let base = eval_tree(b, point, grad)?;
            if x.is_constant() {
                let c = eval_tree(x, point, false)?.v;
                pow_const(base, c, grad, e)?
            } else {
                pow_general(base, eval_tree(x, point, grad)?, e)?
            }
        }
        Node::Func(f, a) => func(*f, eval_tree(a, point, grad)?, grad, e)?,
        Node::Atan2(y, x) => atan2(eval_tree(y, point, grad)?, eval_tree(x, point, grad)?, e)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Const(u64),
    Var(u8),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    PowConst(usize, u64),
    Pow(usize, usize),
    Func(Func, usize),
    Atan2(usize, usize),
}

/// Several expressions compiled into one straight-line program with common
/// subexpressions merged. Used wherever the same expressions are evaluated
/// many times (fiber coefficients, surface derivatives).
#[derive(Clone)]
pub struct Program {
    ops: Vec<Op>,
    sources: Vec<Expr>,
    outputs: Vec<usize>,
    arity: usize,
}

impl std::fmt::Debug for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Program")
            .field("ops", &self.ops.len())
            .field("outputs", &self.outputs.len())
            .finish()
    }
}

struct Compiler {
    ops: Vec<Op>,
    sources: Vec<Expr>,
    cse: HashMap<Op, usize>,
    seen: HashMap<*const Node, usize>,
}

impl Compiler {
    fn push(&mut self, op: Op, src: &Expr) -> usize {
        if let Some(&slot) = self.cse.get(&op) {
            return slot;
        }
        let slot = self.ops.len();
        self.ops.push(op);
        self.sources.push(src.clone());
        self.cse.insert(op, slot);
        slot
    }

    fn compile(&mut self, e: &Expr) -> usize {
        let key = Arc::as_ptr(&e.0);
        if let Some(&slot) = self.seen.get(&key) {
            return slot;
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(c.to_bits()),
            Node::Var(i) => Op::Var(*i),
            Node::Neg(a) => Op::Neg(self.compile(a)),
            Node::Add(a, b) => Op::Add(self.compile(a), self.compile(b)),
            Node::Sub(a, b) => Op::Sub(self.compile(a), self.compile(b)),
            Node::Mul(a, b) => Op::Mul(self.compile(a), self.compile(b)),
            Node::Div(a, b) => Op::Div(self.compile(a), self.compile(b)),
            Node::Pow(a, b) => {
                let base = self.compile(a);
                match b.is_constant().then(|| b.eval(&[])).and_then(Result::ok) {
                    Some(c) => Op::PowConst(base, c.to_bits()),
                    None => Op::Pow(base, self.compile(b)),
                }
            }
            Node::Func(f, a) => Op::Func(*f, self.compile(a)),
            Node::Atan2(a, b) => Op::Atan2(self.compile(a), self.compile(b)),
        };
        let slot = self.push(op, e);
        self.seen.insert(key, slot);
        slot
    }
}

impl Program {
    pub fn compile(exprs: &[Expr]) -> Program {
        let mut c = Compiler {
            ops: Vec::new(),
            sources: Vec::new(),
            cse: HashMap::new(),
            seen: HashMap::new(),
        };
        let outputs = exprs.iter().map(|e| c.compile(e)).collect();
        let arity = exprs
            .iter()
            .filter_map(Expr::max_var)
            .max()
            .map_or(0, |m| m as usize + 1);
        Program {
            ops: c.ops,
            sources: c.sources,
            outputs,
            arity,
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Number of variables the program reads.
    pub fn arity(&self) -> usize {
        self.arity
    }

    fn run(&self, point: &[f64], grad: bool) -> Result<Vec<Dual>, EvalError> {
        let mut slots: Vec<Dual> = Vec::with_capacity(self.ops.len());
        for (k, op) in self.ops.iter().enumerate() {
            let at = &self.sources[k];
            let d = match *op {
                Op::Const(bits) => Dual::constant(f64::from_bits(bits)),
                Op::Var(i) => var(i, point)?,
                Op::Neg(a) => {
                    let a = slots[a];
                    a.scale(-a.v, -1.0)
                }
                Op::Add(a, b) => {
                    let (a, b) = (slots[a], slots[b]);
                    combine(a.v + b.v, &a, 1.0, &b, 1.0)
                }
                Op::Sub(a, b) => {
                    let (a, b) = (slots[a], slots[b]);
                    combine(a.v - b.v, &a, 1.0, &b, -1.0)
                }
                Op::Mul(a, b) => {
                    let (a, b) = (slots[a], slots[b]);
                    combine(a.v * b.v, &a, b.v, &b, a.v)
                }
                Op::Div(a, b) => div(slots[a], slots[b], at)?,
                Op::PowConst(a, bits) => pow_const(slots[a], f64::from_bits(bits), grad, at)?,
                Op::Pow(a, b) => pow_general(slots[a], slots[b], at)?,
                Op::Func(f, a) => func(f, slots[a], grad, at)?,
                Op::Atan2(a, b) => atan2(slots[a], slots[b], at)?,
            };
            slots.push(d);
        }
        Ok(self.outputs.iter().map(|&o| slots[o]).collect())
    }

    /// Values of every output at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok(self.run(point, false)?.into_iter().map(|d| d.v).collect())
    }

    /// Values and exact gradients of every output at `point`.
    pub fn eval_grad(&self, point: &[f64]) -> Result<Vec<Dual>, EvalError> {
        self.run(point, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn program_matches_tree_evaluation() {
        let exprs: Vec<Expr> = ["x*y + sin(x*y)", "(x*y)^2 - atan2(y, x)", "exp(x*y)/(1+x^2)"]
            .iter()
            .map(|s| Expr::parse(s).unwrap())
            .collect();
        let p = Program::compile(&exprs);
        // x*y shared between the three outputs
        let tree_ops: usize = exprs.iter().map(Expr::tree_size).sum();
        assert!(p.len() < tree_ops);
        for &(x, y) in &[(0.5, 0.25), (-1.25, 2.0)] {
            let got = p.eval_grad(&[x, y]).unwrap();
            for (e, d) in exprs.iter().zip(&got) {
                let t = e.eval_dual(&[x, y]).unwrap();
                assert_eq!(t.v, d.v);
                assert_eq!(t.d, d.d);
            }
        }
    }

    #[test]
    fn program_reports_domain_errors() {
        let p = Program::compile(&[Expr::parse("log(x)").unwrap()]);
        assert!(p.eval(&[-1.0, 0.0]).is_err());
        assert!(p.eval(&[1.0, 0.0]).is_ok());
    }
}
