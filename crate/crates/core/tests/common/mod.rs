#![allow(dead_code)]

use std::path::PathBuf;

use branchidx::cli::problem::ProblemFile;
use branchidx::expr::Expr;
use branchidx::fiber::{
    find_singularities, BinaryForm, CircleRelation, ComplexExpr, FiberSystem, Quotient, Rect, SingularPoint, SystemKind,
};
use branchidx::index::{index_report, PointIndexReport};
use branchidx::monodromy::{LoopSpec, Orientation};
use proptest::prelude::*;

pub fn problem_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

pub fn load(name: &str) -> ProblemFile {
    ProblemFile::load(&problem_path(name)).expect("shipped problem parses")
}

/// A random system with one isolated singular point at the origin whose
/// monodromy and windings are known in closed form.
#[derive(Debug, Clone)]
pub struct Case {
    pub family: Family,
    /// Winding of `F = c·z^j·g` (or its conjugate) around the origin.
    pub j: i64,
    pub conj: bool,
    pub c: (f64, f64),
    /// Nonvanishing factor `g = 1 + p·x + q·y` with complex `p, q`.
    pub p: (f64, f64),
    pub q: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `A dx² + 2B dx dy − A dy²` with `A + iB = F`.
    Traceless,
    /// `w^n = F/|F|`.
    Circle(u32),
}

fn fmt(v: f64) -> String {
    format!("({v:e})")
}

impl Case {
    /// Real and imaginary parts of `F` as expression strings.
    pub fn field(&self) -> (String, String) {
        let (mut zr, mut zi) = ("1".to_string(), "0".to_string());
        let y = if self.conj { "(-y)" } else { "y" };
        for _ in 0..self.j {
            let nr = format!("({zr}*x - {zi}*{y})");
            let ni = format!("({zr}*{y} + {zi}*x)");
            zr = nr;
            zi = ni;
        }
        let gr = format!("(1 + {}*x + {}*y)", fmt(self.p.0), fmt(self.q.0));
        let gi = format!("({}*x + {}*y)", fmt(self.p.1), fmt(self.q.1));
        let (cr, ci) = (fmt(self.c.0), fmt(self.c.1));
        // c·z^j
        let ar = format!("({cr}*{zr} - {ci}*{zi})");
        let ai = format!("({cr}*{zi} + {ci}*{zr})");
        (format!("({ar}*{gr} - {ai}*{gi})"), format!("({ar}*{gi} + {ai}*{gr})"))
    }

    pub fn system(&self) -> FiberSystem {
        let (re, im) = self.field();
        let domain = Rect::new((-1.0, 1.0), (-1.0, 1.0));
        match self.family {
            Family::Traceless => {
                let form = BinaryForm::parse(&[&re, &format!("2*{im}"), &format!("-{re}")]).unwrap();
                FiberSystem::projective(form, domain)
            }
            Family::Circle(n) => {
                let rel = CircleRelation::new(n, ComplexExpr::parse(&re, &im).unwrap(), Quotient::None).unwrap();
                FiberSystem::new(SystemKind::Circle(rel), domain)
            }
        }
    }

    fn winding(&self) -> i64 {
        if self.conj {
            -self.j
        } else {
            self.j
        }
    }

    /// Expected sorted `(k, m)` pairs for a positive loop.
    pub fn expected_signature(&self) -> Vec<(usize, i64)> {
        let w = self.winding();
        match self.family {
            // the two lines solve 2φ ≡ π/2 + arg F, so each turns by wπ
            Family::Traceless => vec![(1, w), (1, w)],
            Family::Circle(n) => {
                let n = n as i64;
                let g = gcd(w.abs(), n);
                let k = (n / g) as usize;
                vec![(k, w / g); g as usize]
            }
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub struct Analysed {
    pub sys: FiberSystem,
    pub point: SingularPoint,
}

pub fn analyse(case: &Case) -> Result<Analysed, String> {
    let sys = case.system();
    let pts = find_singularities(&sys, 17, 1e-12).map_err(|e| e.to_string())?;
    if pts.len() != 1 || pts[0].position.norm() >= 1e-6 {
        return Err(format!("expected one singular point at the origin, found {pts:?}"));
    }
    Ok(Analysed { sys, point: pts[0] })
}

pub fn report(sys: &FiberSystem, sp: &SingularPoint, lp: &LoopSpec) -> Result<PointIndexReport, String> {
    index_report(sys, sp, lp).map_err(|e| format!("{e} (loop {lp:?})"))
}

/// Outcome of the invariance checks on one case; `Err` describes the first
/// violated property.
pub fn check_invariances(case: &Case, start_angle: f64, scale: &str) -> Result<(), String> {
    let Analysed { sys, point } = analyse(case)?;
    let r = 0.5 * point.isolation_radius;
    let lp = LoopSpec::for_system(&sys, point.position, r).with_start_angle(start_angle);
    let base = report(&sys, &point, &lp)?;
    let expect = case.expected_signature();
    if base.signature() != expect {
        return Err(format!("signature {:?}, expected {:?}", base.signature(), expect));
    }

    let small = report(&sys, &point, &lp.with_radius(r / 3.0))?;
    if small.signature() != base.signature() || small.permutation.cycle_type() != base.permutation.cycle_type() {
        return Err("radius changed (σ, m)".into());
    }

    let rev = report(&sys, &point, &lp.with_orientation(Orientation::Negative))?;
    if rev.permutation != base.permutation.inverse() {
        return Err(format!("reversal gave {:?}, not σ⁻¹ of {:?}", rev.permutation, base.permutation));
    }
    let negated: Vec<(usize, i64)> = {
        let mut v: Vec<_> = base.signature().iter().map(|&(k, m)| (k, -m)).collect();
        v.sort_unstable();
        v
    };
    if rev.signature() != negated {
        return Err("reversal did not negate m".into());
    }

    let dense = report(&sys, &point, &lp.with_samples(2 * lp.samples))?;
    if dense.permutation != base.permutation || dense.signature() != base.signature() {
        return Err("doubling samples changed the result".into());
    }

    let moved = report(&sys, &point, &lp.with_start_angle(start_angle + 2.0))?;
    if moved.signature() != base.signature() {
        return Err("base point changed the orbit data".into());
    }

    if let Some(form) = sys.form() {
        let factor = Expr::parse(scale).unwrap();
        let scaled = FiberSystem::projective(form.scaled(&factor), sys.domain);
        let s = report(&scaled, &point, &lp)?;
        if s.permutation != base.permutation || s.signature() != base.signature() || s.total_index != base.total_index {
            return Err("positive rescaling changed the report".into());
        }
    }
    Ok(())
}

/// Smooth expressions in `x, y` that are finite and differentiable on the
/// whole plane.
pub fn smooth_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-3.0..3.0_f64).prop_map(|c| format!("({c:.4})")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (2 + cos({b})))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("log(2 + ({a})^2)")),
            (inner.clone(), 2i32..=3).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.prop_map(|a| format!("-{a}")),
        ]
    })
}

/// Compares forward-mode partial derivatives with central differences;
/// each must agree within `max(1e-6, 1e-6·|∂f|)`.
pub fn gradient_vs_differences(src: &str, x: f64, y: f64) -> Result<(), String> {
    let e = Expr::parse(src).map_err(|e| e.to_string())?;
    let (_, dx, dy) = e.eval_grad(x, y).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let f = |a: f64, b: f64| e.eval(&[a, b]).map_err(|e| e.to_string());
    let fx = (f(x + h, y)? - f(x - h, y)?) / (2.0 * h);
    let fy = (f(x, y + h)? - f(x, y - h)?) / (2.0 * h);
    for (ad, fd, name) in [(dx, fx, "x"), (dy, fy, "y")] {
        if (ad - fd).abs() > 1e-6_f64.max(1e-6 * ad.abs()) {
            return Err(format!("{src} at ({x}, {y}): d/d{name} {ad} vs difference {fd}"));
        }
    }
    Ok(())
}
