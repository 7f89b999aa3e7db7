//! Folding constructors and symbolic differentiation.

use super::{Expr, Func, Node};

fn fold(value: f64) -> Option<Expr> {
    value.is_finite().then(|| Expr::constant(value))
}

pub(super) fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(p), Some(q)) => fold(p + q).unwrap_or_else(|| Expr::from_node(Node::Add(a, b))),
        (Some(p), _) if p == 0.0 => b,
        (_, Some(q)) if q == 0.0 => a,
        _ => Expr::from_node(Node::Add(a, b)),
    }
}

pub(super) fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(p), Some(q)) => fold(p - q).unwrap_or_else(|| Expr::from_node(Node::Sub(a, b))),
        (Some(p), _) if p == 0.0 => neg(b),
        (_, Some(q)) if q == 0.0 => a,
        _ => Expr::from_node(Node::Sub(a, b)),
    }
}

pub(super) fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(p), Some(q)) => fold(p * q).unwrap_or_else(|| Expr::from_node(Node::Mul(a, b))),
        (Some(p), _) | (_, Some(p)) if p == 0.0 => Expr::constant(0.0),
        (Some(p), _) if p == 1.0 => b,
        (_, Some(q)) if q == 1.0 => a,
        (Some(p), _) if p == -1.0 => neg(b),
        (_, Some(q)) if q == -1.0 => neg(a),
        _ => Expr::from_node(Node::Mul(a, b)),
    }
}

pub(super) fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(p), Some(q)) if q != 0.0 => {
            fold(p / q).unwrap_or_else(|| Expr::from_node(Node::Div(a, b)))
        }
        (Some(p), _) if p == 0.0 => Expr::constant(0.0),
        (_, Some(q)) if q == 1.0 => a,
        _ => Expr::from_node(Node::Div(a, b)),
    }
}

pub(super) fn neg(a: Expr) -> Expr {
    match a.node() {
        Node::Const(c) => Expr::constant(-c),
        Node::Neg(inner) => inner.clone(),
        _ => Expr::from_node(Node::Neg(a)),
    }
}

pub(super) fn pow(base: Expr, exponent: Expr) -> Expr {
    match (base.as_const(), exponent.as_const()) {
        (_, Some(c)) if c == 1.0 => base,
        (_, Some(c)) if c == 0.0 => Expr::constant(1.0),
        (Some(b), Some(c)) if b > 0.0 || c.fract() == 0.0 => {
            fold(b.powf(c)).unwrap_or_else(|| Expr::from_node(Node::Pow(base, exponent)))
        }
        _ => Expr::from_node(Node::Pow(base, exponent)),
    }
}

pub(super) fn func(f: Func, a: Expr) -> Expr {
    if let Some(c) = a.as_const() {
        let e = Expr::from_node(Node::Func(f, Expr::constant(c)));
        if let Some(v) = e.eval(&[]).ok().and_then(fold) {
            return v;
        }
        return e;
    }
    Expr::from_node(Node::Func(f, a))
}

pub(super) fn derivative(e: &Expr, index: u8) -> Expr {
    let d = |x: &Expr| derivative(x, index);
    match e.node() {
        Node::Const(_) => Expr::constant(0.0),
        Node::Var(i) => Expr::constant(if *i == index { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(d(a)),
        Node::Add(a, b) => add(d(a), d(b)),
        Node::Sub(a, b) => sub(d(a), d(b)),
        Node::Mul(a, b) => add(mul(d(a), b.clone()), mul(a.clone(), d(b))),
        Node::Div(a, b) => {
            let num = sub(mul(d(a), b.clone()), mul(a.clone(), d(b)));
            div(num, pow(b.clone(), Expr::constant(2.0)))
        }
        Node::Pow(b, x) if x.is_constant() => {
            let db = d(b);
            if db.as_const() == Some(0.0) {
                return Expr::constant(0.0);
            }
            let lowered = sub(x.clone(), Expr::constant(1.0));
            mul(mul(x.clone(), pow(b.clone(), lowered)), db)
        }
        Node::Pow(b, x) => {
            let ln = func(Func::Log, b.clone());
            let inner = add(mul(d(x), ln), div(mul(x.clone(), d(b)), b.clone()));
            mul(e.clone(), inner)
        }
        Node::Func(f, a) => {
            let da = d(a);
            if da.as_const() == Some(0.0) {
                return Expr::constant(0.0);
            }
            let outer = match f {
                Func::Sqrt => div(Expr::constant(0.5), e.clone()),
                Func::Sin => func(Func::Cos, a.clone()),
                Func::Cos => neg(func(Func::Sin, a.clone())),
                Func::Exp => e.clone(),
                Func::Log => div(Expr::constant(1.0), a.clone()),
                Func::Abs => func(Func::Sign, a.clone()),
                Func::Sign => return Expr::constant(0.0),
            };
            mul(outer, da)
        }
        Node::Atan2(y, x) => {
            let num = sub(mul(x.clone(), d(y)), mul(y.clone(), d(x)));
            let den = add(
                pow(x.clone(), Expr::constant(2.0)),
                pow(y.clone(), Expr::constant(2.0)),
            );
            div(num, den)
        }
    }
}
