//! Canonical printer. The output re-parses to an expression with the same
//! tree shape, so `parse(print(e))` evaluates identically to `e`.

use std::fmt;

use super::{Expr, Node};

const P_SUM: u8 = 1;
const P_PRODUCT: u8 = 2;
const P_UNARY: u8 = 3;
const P_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) if c.is_sign_negative() => P_UNARY,
        Node::Const(_) | Node::Var(_) | Node::Func(..) | Node::Atan2(..) => P_ATOM,
        Node::Add(..) | Node::Sub(..) => P_SUM,
        Node::Mul(..) | Node::Div(..) => P_PRODUCT,
        Node::Neg(_) => P_UNARY,
        Node::Pow(..) => 4,
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    const NAMES: [&str; 3] = ["x", "y", "z"];
    match e.node() {
        Node::Const(c) => write_const(f, *c),
        Node::Var(i) => write!(f, "{}", NAMES[*i as usize]),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, P_UNARY)
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write_at(f, a, P_SUM)?;
            let op = if matches!(e.node(), Node::Add(..)) { "+" } else { "-" };
            write!(f, " {op} ")?;
            write_at(f, b, P_PRODUCT)
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write_at(f, a, P_PRODUCT)?;
            let op = if matches!(e.node(), Node::Mul(..)) { "*" } else { "/" };
            write!(f, " {op} ")?;
            write_at(f, b, P_UNARY)
        }
        Node::Pow(a, b) => {
            write_at(f, a, P_ATOM)?;
            write!(f, "^")?;
            write_at(f, b, P_UNARY)
        }
        Node::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
        Node::Atan2(a, b) => {
            write!(f, "atan2(")?;
            write_expr(f, a)?;
            write!(f, ", ")?;
            write_expr(f, b)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::super::Expr;

    #[test]
    fn prints_minimal_parentheses() {
        for src in [
            "x - (y - 1)",
            "-x^2",
            "(-2)^x",
            "x / (y * 3)",
            "x^y^2",
            "(x^y)^2",
            "atan2(y, x) * sqrt(x + 1)",
            "-(x + y)",
            "x * -y",
            "2^-1",
            "1e-7 * x",
        ] {
            let e = Expr::parse(src).unwrap();
            assert_eq!(e.to_string(), src);
        }
    }
}
