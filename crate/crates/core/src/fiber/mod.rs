//! Branched sections as fiber systems over a planar domain.
//!
//! Three fiber types are supported: the projective line (binary differential
//! equations and antipodal quotients of circle relations), the circle, and
//! the punctured complex plane. Further fiber types would be added as new
//! [`SystemKind`] variants together with a [`FiberKind`] metric and lift.

mod singular;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{Dual, EvalError, Expr, Program};
use crate::poly;

pub use singular::{find_singularities, SingularPoint};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Rect {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Rect { x, y }
    }

    pub fn contains(&self, p: Point, slack: f64) -> bool {
        p.x >= self.x.0 - slack
            && p.x <= self.x.1 + slack
            && p.y >= self.y.0 - slack
            && p.y <= self.y.1 + slack
    }

    /// Distance from an interior point to the nearest edge (negative outside).
    pub fn margin(&self, p: Point) -> f64 {
        (p.x - self.x.0)
            .min(self.x.1 - p.x)
            .min(p.y - self.y.0)
            .min(self.y.1 - p.y)
    }

    pub fn width(&self) -> f64 {
        self.x.1 - self.x.0
    }

    pub fn height(&self) -> f64 {
        self.y.1 - self.y.0
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Residual below which a base point is singular.
    pub singular: f64,
    /// Minimum fiber distance between distinct roots.
    pub separation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            singular: 1e-10,
            separation: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiberError {
    #[error("fiber over ({}, {}) is singular", .at.x, .at.y)]
    SingularFiber { at: Point },
    #[error("only {found} of {expected} fiber roots over ({}, {}) are real", .at.x, .at.y)]
    ComplexRoots {
        at: Point,
        found: usize,
        expected: usize,
    },
    #[error("fiber roots over ({}, {}) are {separation:e} apart", .at.x, .at.y)]
    IllConditioned { at: Point, separation: f64 },
    #[error("roots of different fiber types")]
    MixedVariants,
    #[error("zero set near ({}, {}) is not isolated", .at.x, .at.y)]
    NonIsolatedZero { at: Point },
    #[error("refinement near ({}, {}) did not converge", .at.x, .at.y)]
    NoConvergence { at: Point },
    #[error("declared singular point ({}, {}) was not confirmed", .at.x, .at.y)]
    DeclaredNotSingular { at: Point },
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A binary differential form `Σ a_i dx^(n-i) dy^i`.
#[derive(Debug, Clone)]
pub struct BinaryForm {
    coeffs: Vec<Expr>,
    program: Program,
}

impl BinaryForm {
    pub fn new(coeffs: Vec<Expr>) -> Result<Self, FiberError> {
        if coeffs.len() < 2 {
            return Err(FiberError::Invalid(
                "a binary form needs degree at least 1 (two or more coefficients)".into(),
            ));
        }
        if coeffs.iter().any(|c| c.max_var().is_some_and(|v| v > 1)) {
            return Err(FiberError::Invalid(
                "form coefficients may only use x and y".into(),
            ));
        }
        let program = Program::compile(&coeffs);
        Ok(BinaryForm { coeffs, program })
    }

    pub fn parse(sources: &[&str]) -> Result<Self, FiberError> {
        let coeffs = sources
            .iter()
            .map(|s| Expr::parse(s).map_err(|e| FiberError::Invalid(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        BinaryForm::new(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn eval(&self, p: Point) -> Result<Vec<f64>, EvalError> {
        self.program.eval(&[p.x, p.y])
    }

    pub fn eval_grad(&self, p: Point) -> Result<Vec<Dual>, EvalError> {
        self.program.eval_grad(&[p.x, p.y])
    }

    /// The form multiplied by `factor`.
    pub fn scaled(&self, factor: &Expr) -> BinaryForm {
        let coeffs = self.coeffs.iter().map(|c| factor * c).collect();
        BinaryForm::new(coeffs).expect("scaling preserves validity")
    }
}

/// A complex-valued function of the base point given by its real and
/// imaginary parts.
#[derive(Debug, Clone)]
pub struct ComplexExpr {
    pub re: Expr,
    pub im: Expr,
}

impl ComplexExpr {
    pub fn parse(re: &str, im: &str) -> Result<Self, FiberError> {
        let p = |s: &str| Expr::parse(s).map_err(|e| FiberError::Invalid(e.to_string()));
        Ok(ComplexExpr {
            re: p(re)?,
            im: p(im)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quotient {
    None,
    /// Identify `w` with `-w`, giving a projective-line fiber.
    Antipodal,
}

/// `w^m = u(z) / |u(z)|` with `|w| = 1`; singular where `u` vanishes.
#[derive(Debug, Clone)]
pub struct CircleRelation {
    exponent: u32,
    u: ComplexExpr,
    quotient: Quotient,
    program: Program,
}

impl CircleRelation {
    pub fn new(exponent: u32, u: ComplexExpr, quotient: Quotient) -> Result<Self, FiberError> {
        if exponent == 0 {
            return Err(FiberError::Invalid("circle exponent must be positive".into()));
        }
        if quotient == Quotient::Antipodal && !exponent.is_multiple_of(2) {
            return Err(FiberError::Invalid(
                "the antipodal quotient needs an even exponent".into(),
            ));
        }
        let program = Program::compile(&[u.re.clone(), u.im.clone()]);
        Ok(CircleRelation {
            exponent,
            u,
            quotient,
            program,
        })
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn u(&self) -> &ComplexExpr {
        &self.u
    }

    pub fn quotient(&self) -> Quotient {
        self.quotient
    }
}

/// `Σ c_j(z) w^j = 0` with `w ∈ ℂ*`; coefficients ascending in `w`.
#[derive(Debug, Clone)]
pub struct PolyRelation {
    coeffs: Vec<ComplexExpr>,
    program: Program,
}

impl PolyRelation {
    pub fn new(coeffs: Vec<ComplexExpr>) -> Result<Self, FiberError> {
        if coeffs.len() < 2 {
            return Err(FiberError::Invalid(
                "relation must have degree at least 1 in w".into(),
            ));
        }
        let flat: Vec<Expr> = coeffs
            .iter()
            .flat_map(|c| [c.re.clone(), c.im.clone()])
            .collect();
        let program = Program::compile(&flat);
        Ok(PolyRelation { coeffs, program })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[ComplexExpr] {
        &self.coeffs
    }

    pub(crate) fn eval(&self, p: Point) -> Result<Vec<Complex64>, EvalError> {
        let v = self.program.eval(&[p.x, p.y])?;
        Ok(v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }
}

#[derive(Debug, Clone)]
pub enum SystemKind {
    Projective(BinaryForm),
    Circle(CircleRelation),
    PuncturedPlane(PolyRelation),
}

/// The standard fiber of a system, with its metric and lift period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiberKind {
    Rp1,
    S1,
    CStar,
}

impl FiberKind {
    /// Period of the lifted angle coordinate for the generator of π₁(F).
    pub fn period(self) -> f64 {
        match self {
            FiberKind::Rp1 => PI,
            FiberKind::S1 | FiberKind::CStar => TAU,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FiberKind::Rp1 => "RP1",
            FiberKind::S1 => "S1",
            FiberKind::CStar => "C*",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiberSystem {
    pub kind: SystemKind,
    pub domain: Rect,
    pub declared_singular: Vec<Point>,
    pub tolerances: Tolerances,
}

impl FiberSystem {
    pub fn new(kind: SystemKind, domain: Rect) -> Self {
        FiberSystem {
            kind,
            domain,
            declared_singular: Vec::new(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn projective(form: BinaryForm, domain: Rect) -> Self {
        FiberSystem::new(SystemKind::Projective(form), domain)
    }

    pub fn fiber_kind(&self) -> FiberKind {
        match &self.kind {
            SystemKind::Projective(_) => FiberKind::Rp1,
            SystemKind::Circle(c) if c.quotient == Quotient::Antipodal => FiberKind::Rp1,
            SystemKind::Circle(_) => FiberKind::S1,
            SystemKind::PuncturedPlane(_) => FiberKind::CStar,
        }
    }

    /// Number of fiber points over a non-singular base point.
    pub fn sheets(&self) -> usize {
        match &self.kind {
            SystemKind::Projective(f) => f.degree(),
            SystemKind::Circle(c) => match c.quotient {
                Quotient::None => c.exponent as usize,
                Quotient::Antipodal => c.exponent as usize / 2,
            },
            SystemKind::PuncturedPlane(r) => r.degree(),
        }
    }

    pub fn form(&self) -> Option<&BinaryForm> {
        match &self.kind {
            SystemKind::Projective(f) => Some(f),
            _ => None,
        }
    }
}

/// A point of the fiber over some base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiberRoot {
    /// Line direction angle in `[0, π)`.
    Rp1Angle(f64),
    /// Circle angle in `[0, 2π)`.
    CircleAngle(f64),
    ComplexPoint { re: f64, im: f64 },
}

/// Reduces an angle into `[0, period)`, snapping values within rounding of
/// the period back to zero.
pub fn canonical_angle(a: f64, period: f64) -> f64 {
    let r = a.rem_euclid(period);
    if period - r < 1e-12 {
        0.0
    } else {
        r
    }
}

impl FiberRoot {
    pub fn kind(&self) -> FiberKind {
        match self {
            FiberRoot::Rp1Angle(_) => FiberKind::Rp1,
            FiberRoot::CircleAngle(_) => FiberKind::S1,
            FiberRoot::ComplexPoint { .. } => FiberKind::CStar,
        }
    }

    /// The angle coordinate: φ, ψ, or the argument in `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        match *self {
            FiberRoot::Rp1Angle(a) | FiberRoot::CircleAngle(a) => a,
            FiberRoot::ComplexPoint { re, im } => canonical_angle(im.atan2(re), TAU),
        }
    }

    pub fn modulus(&self) -> f64 {
        match *self {
            FiberRoot::ComplexPoint { re, im } => re.hypot(im),
            _ => 1.0,
        }
    }

    pub fn complex(&self) -> Complex64 {
        match *self {
            FiberRoot::ComplexPoint { re, im } => Complex64::new(re, im),
            FiberRoot::Rp1Angle(a) | FiberRoot::CircleAngle(a) => Complex64::from_polar(1.0, a),
        }
    }

    /// Fiber metric; `None` for roots of different types.
    pub fn distance(&self, other: &FiberRoot) -> Option<f64> {
        match (*self, *other) {
            (FiberRoot::Rp1Angle(a), FiberRoot::Rp1Angle(b)) => {
                let d = (a - b).rem_euclid(PI);
                Some(d.min(PI - d))
            }
            (FiberRoot::CircleAngle(a), FiberRoot::CircleAngle(b)) => {
                let d = (a - b).rem_euclid(TAU);
                Some(d.min(TAU - d))
            }
            (FiberRoot::ComplexPoint { re, im }, FiberRoot::ComplexPoint { re: r2, im: i2 }) => {
                Some((re - r2).hypot(im - i2))
            }
            _ => None,
        }
    }

    fn sort_key(&self) -> (f64, f64) {
        (self.angle(), self.modulus())
    }
}

/// Minimum pairwise fiber distance; `+∞` for a single root.
pub fn min_root_separation(roots: &[FiberRoot]) -> Result<f64, FiberError> {
    let mut best = f64::INFINITY;
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            best = best.min(a.distance(b).ok_or(FiberError::MixedVariants)?);
        }
    }
    Ok(best)
}

fn sorted(mut roots: Vec<FiberRoot>) -> Vec<FiberRoot> {
    roots.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    roots
}

const IMAG_TOL: f64 = 1e-7;

fn solve_projective(form: &BinaryForm, base: Point, tol: &Tolerances) -> Result<Vec<FiberRoot>, FiberError> {
    let a = form.eval(base)?;
    let n = form.degree();
    let residual: f64 = a.iter().map(|c| c * c).sum();
    if residual <= tol.singular {
        return Err(FiberError::SingularFiber { at: base });
    }
    let scale = a.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let a: Vec<f64> = a.iter().map(|c| c / scale).collect();
    // chart t = q/p when |a_n| >= |a_0|, else s = p/q
    let t_chart = a[n].abs() >= a[0].abs();
    let mut poly: Vec<f64> = if t_chart {
        a.clone()
    } else {
        a.iter().rev().copied().collect()
    };
    let mut at_infinity = 0;
    while poly.len() > 1 && poly.last().is_some_and(|c| c.abs() <= 1e-14) {
        poly.pop();
        at_infinity += 1;
    }
    let finite = if poly.len() > 1 {
        poly::real_roots(&poly, IMAG_TOL).unwrap_or_default()
    } else {
        Vec::new()
    };
    let mut roots: Vec<FiberRoot> = finite
        .iter()
        .map(|&r| {
            let phi = if t_chart { r.atan() } else { 1.0_f64.atan2(r) };
            FiberRoot::Rp1Angle(canonical_angle(phi, PI))
        })
        .collect();
    let infinite_angle = if t_chart { PI / 2.0 } else { 0.0 };
    roots.extend((0..at_infinity).map(|_| FiberRoot::Rp1Angle(infinite_angle)));
    if roots.len() < n {
        return Err(FiberError::ComplexRoots {
            at: base,
            found: roots.len(),
            expected: n,
        });
    }
    finish(roots, base, tol)
}

fn solve_circle(rel: &CircleRelation, base: Point, tol: &Tolerances) -> Result<Vec<FiberRoot>, FiberError> {
    let u = rel.program.eval(&[base.x, base.y])?;
    if u[0] * u[0] + u[1] * u[1] <= tol.singular {
        return Err(FiberError::SingularFiber { at: base });
    }
    let theta = u[1].atan2(u[0]);
    let m = rel.exponent as usize;
    let roots = match rel.quotient {
        Quotient::None => (0..m)
            .map(|j| FiberRoot::CircleAngle(canonical_angle((theta + TAU * j as f64) / m as f64, TAU)))
            .collect(),
        Quotient::Antipodal => (0..m / 2)
            .map(|j| FiberRoot::Rp1Angle(canonical_angle((theta + TAU * j as f64) / m as f64, PI)))
            .collect(),
    };
    finish(roots, base, tol)
}

fn solve_punctured(rel: &PolyRelation, base: Point, tol: &Tolerances) -> Result<Vec<FiberRoot>, FiberError> {
    let c = rel.eval(base)?;
    let d = rel.degree();
    if c[0].norm_sqr() <= tol.singular || c[d].norm_sqr() <= tol.singular {
        return Err(FiberError::SingularFiber { at: base });
    }
    let roots = poly::roots(&c).ok_or(FiberError::SingularFiber { at: base })?;
    let roots = roots
        .into_iter()
        .map(|w| FiberRoot::ComplexPoint { re: w.re, im: w.im })
        .collect();
    finish(roots, base, tol)
}

fn finish(roots: Vec<FiberRoot>, base: Point, tol: &Tolerances) -> Result<Vec<FiberRoot>, FiberError> {
    let roots = sorted(roots);
    let separation = min_root_separation(&roots)?;
    if separation <= tol.separation {
        return Err(FiberError::IllConditioned { at: base, separation });
    }
    Ok(roots)
}

/// All fiber roots over `base`, pairwise distinct and canonically ordered
/// (by angle, then modulus).
pub fn solve_fiber(sys: &FiberSystem, base: Point) -> Result<Vec<FiberRoot>, FiberError> {
    match &sys.kind {
        SystemKind::Projective(f) => solve_projective(f, base, &sys.tolerances),
        SystemKind::Circle(c) => solve_circle(c, base, &sys.tolerances),
        SystemKind::PuncturedPlane(r) => solve_punctured(r, base, &sys.tolerances),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn lemon() -> FiberSystem {
        let form = BinaryForm::parse(&["y", "-2*x", "-y"]).unwrap();
        FiberSystem::projective(form, Rect::new((-2.0, 2.0), (-2.0, 2.0)))
    }

    pub(crate) fn cube_root() -> FiberSystem {
        let rel = PolyRelation::new(vec![
            ComplexExpr::parse("-(x^2 - y^2)", "-2*x*y").unwrap(),
            ComplexExpr::parse("0", "0").unwrap(),
            ComplexExpr::parse("0", "0").unwrap(),
            ComplexExpr::parse("1", "0").unwrap(),
        ])
        .unwrap();
        FiberSystem::new(SystemKind::PuncturedPlane(rel), Rect::new((-2.0, 2.0), (-2.0, 2.0)))
    }

    #[test]
    fn lemon_fiber_at_unit_x() {
        let sys = lemon();
        let a = sys.form().unwrap().eval(Point::new(1.0, 0.0)).unwrap();
        assert_eq!(a, vec![0.0, -2.0, 0.0]);
        let roots = solve_fiber(&sys, Point::new(1.0, 0.0)).unwrap();
        assert_eq!(roots, vec![FiberRoot::Rp1Angle(0.0), FiberRoot::Rp1Angle(PI / 2.0)]);
    }

    #[test]
    fn lemon_origin_is_singular() {
        assert!(matches!(
            solve_fiber(&lemon(), Point::new(0.0, 0.0)),
            Err(FiberError::SingularFiber { .. })
        ));
    }

    #[test]
    fn cube_root_cube_roots() {
        let roots = solve_fiber(&cube_root(), Point::new(1.0, 0.0)).unwrap();
        let eps = Complex64::from_polar(1.0, TAU / 3.0);
        let expect = [Complex64::new(1.0, 0.0), eps, eps * eps];
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip(expect) {
            assert!((r.complex() - e).norm() < 1e-14, "{r:?} vs {e}");
        }
    }

    #[test]
    fn separation_examples() {
        let two = [FiberRoot::Rp1Angle(0.0), FiberRoot::Rp1Angle(PI / 2.0)];
        assert!((min_root_separation(&two).unwrap() - PI / 2.0).abs() < 1e-15);
        let roots = solve_fiber(&cube_root(), Point::new(1.0, 0.0)).unwrap();
        assert!((min_root_separation(&roots).unwrap() - 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(
            min_root_separation(&[FiberRoot::CircleAngle(1.0)]).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            min_root_separation(&[FiberRoot::CircleAngle(1.0), FiberRoot::Rp1Angle(1.0)]),
            Err(FiberError::MixedVariants)
        ));
        // wrap-around in RP1
        let wrap = [FiberRoot::Rp1Angle(0.01), FiberRoot::Rp1Angle(PI - 0.01)];
        assert!((min_root_separation(&wrap).unwrap() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn complex_roots_are_rejected() {
        // dx^2 + dy^2 has no real directions
        let form = BinaryForm::parse(&["1", "0", "1"]).unwrap();
        let sys = FiberSystem::projective(form, Rect::new((-1.0, 1.0), (-1.0, 1.0)));
        assert!(matches!(
            solve_fiber(&sys, Point::new(0.3, 0.2)),
            Err(FiberError::ComplexRoots { found: 0, expected: 2, .. })
        ));
    }

    #[test]
    fn repeated_roots_are_ill_conditioned() {
        // (dx - dy)^2
        let form = BinaryForm::parse(&["1", "-2", "1"]).unwrap();
        let sys = FiberSystem::projective(form, Rect::new((-1.0, 1.0), (-1.0, 1.0)));
        assert!(matches!(
            solve_fiber(&sys, Point::new(0.3, 0.2)),
            Err(FiberError::IllConditioned { .. })
        ));
    }

    #[test]
    fn cubic_form_with_three_directions() {
        // dx * dy * (dx - dy)
        let form = BinaryForm::parse(&["0", "1", "-1", "0"]).unwrap();
        let sys = FiberSystem::projective(form, Rect::new((-1.0, 1.0), (-1.0, 1.0)));
        let roots = solve_fiber(&sys, Point::new(0.1, 0.1)).unwrap();
        let angles: Vec<f64> = roots.iter().map(FiberRoot::angle).collect();
        let expect = [0.0, PI / 4.0, PI / 2.0];
        for (a, e) in angles.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12, "{angles:?}");
        }
    }

    #[test]
    fn circle_relation_roots() {
        let rel = CircleRelation::new(2, ComplexExpr::parse("x", "y").unwrap(), Quotient::None).unwrap();
        let sys = FiberSystem::new(SystemKind::Circle(rel), Rect::new((-1.0, 1.0), (-1.0, 1.0)));
        let roots = solve_fiber(&sys, Point::new(0.0, 1.0)).unwrap();
        assert_eq!(
            roots,
            vec![FiberRoot::CircleAngle(PI / 4.0), FiberRoot::CircleAngle(PI / 4.0 + PI)]
        );
        assert!(CircleRelation::new(3, ComplexExpr::parse("x", "y").unwrap(), Quotient::Antipodal).is_err());
    }

    #[test]
    fn scaled_form_keeps_roots() {
        let sys = lemon();
        let lambda = Expr::parse("1 + x^2 + exp(y)").unwrap();
        let scaled = FiberSystem::projective(sys.form().unwrap().scaled(&lambda), sys.domain);
        let p = Point::new(0.4, -1.1);
        let a = solve_fiber(&sys, p).unwrap();
        let b = solve_fiber(&scaled, p).unwrap();
        for (r, s) in a.iter().zip(&b) {
            assert!(r.distance(s).unwrap() < 1e-12);
        }
    }
}
