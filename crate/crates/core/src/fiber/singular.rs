//! Locating and certifying the singular set Σ.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{solve_fiber, FiberError, FiberSystem, Point, SystemKind};
use crate::poly;

/// A certified isolated point of Σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPoint {
    pub position: Point,
    /// Radius of a circle about the point on which every probed fiber is
    /// regular with full root count.
    pub isolation_radius: f64,
    /// Squared residual of the degeneracy condition at the point.
    pub residual: f64,
}

const PROBES: usize = 64;
const RADIUS_HALVINGS: usize = 8;
const MAX_GN_ITERS: usize = 200;

/// Residual vector whose common zeros are Σ, with its Jacobian.
struct Residual<'a> {
    sys: &'a FiberSystem,
}

impl Residual<'_> {
    fn value(&self, p: Point) -> Option<Vec<f64>> {
        match &self.sys.kind {
            SystemKind::Projective(f) => f.eval(p).ok(),
            SystemKind::Circle(c) => c.program.eval(&[p.x, p.y]).ok(),
            SystemKind::PuncturedPlane(r) => {
                let c = r.eval(p).ok()?;
                let h = punctured_degeneracy(&c);
                Some(vec![h.re, h.im])
            }
        }
    }

    fn sq(&self, p: Point) -> f64 {
        self.value(p)
            .map(|r| r.iter().map(|v| v * v).sum::<f64>())
            .filter(|v| v.is_finite())
            .unwrap_or(f64::INFINITY)
    }

    /// Jacobian rows `[∂r/∂x, ∂r/∂y]`; `h` is the difference step used when
    /// no exact gradient is available.
    fn jacobian(&self, p: Point, h: f64) -> Option<Vec<[f64; 2]>> {
        match &self.sys.kind {
            SystemKind::Projective(f) => {
                Some(f.eval_grad(p).ok()?.iter().map(|d| [d.d[0], d.d[1]]).collect())
            }
            SystemKind::Circle(c) => Some(
                c.program
                    .eval_grad(&[p.x, p.y])
                    .ok()?
                    .iter()
                    .map(|d| [d.d[0], d.d[1]])
                    .collect(),
            ),
            SystemKind::PuncturedPlane(_) => {
                let fx = self.value(Point::new(p.x + h, p.y))?;
                let bx = self.value(Point::new(p.x - h, p.y))?;
                let fy = self.value(Point::new(p.x, p.y + h))?;
                let by = self.value(Point::new(p.x, p.y - h))?;
                Some(
                    (0..fx.len())
                        .map(|i| [(fx[i] - bx[i]) / (2.0 * h), (fy[i] - by[i]) / (2.0 * h)])
                        .collect(),
                )
            }
        }
    }
}

/// `c_0 · Res_w(P, ∂P/∂w)`: vanishes when a root reaches 0, escapes to
/// infinity, or two roots collide.
fn punctured_degeneracy(c: &[Complex64]) -> Complex64 {
    c[0] * poly::resultant(c, &poly::derivative(c))
}

/// Damped Gauss-Newton on the residual vector starting from `start`.
fn refine(res: &Residual, start: Point, scale: f64) -> (Point, f64) {
    let mut p = start;
    let mut r2 = res.sq(p);
    let mut lambda = 0.0;
    let mut last_step = scale;
    for _ in 0..MAX_GN_ITERS {
        if r2 == 0.0 {
            break;
        }
        let h = (1e-3 * last_step).max(1e-12 * (1.0 + p.norm()));
        let (Some(r), Some(j)) = (res.value(p), res.jacobian(p, h)) else {
            break;
        };
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ri, ji) in r.iter().zip(&j) {
            a11 += ji[0] * ji[0];
            a12 += ji[0] * ji[1];
            a22 += ji[1] * ji[1];
            g1 += ji[0] * ri;
            g2 += ji[1] * ri;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let damp = lambda * (a11 + a22).max(1e-300);
            let (b11, b22) = (a11 + damp, a22 + damp);
            let det = b11 * b22 - a12 * a12;
            if det == 0.0 || !det.is_finite() {
                lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
                continue;
            }
            let dx = -(b22 * g1 - a12 * g2) / det;
            let dy = -(b11 * g2 - a12 * g1) / det;
            let q = Point::new(p.x + dx, p.y + dy);
            let q2 = res.sq(q);
            if q2 <= r2 {
                last_step = dx.hypot(dy);
                p = q;
                r2 = q2;
                lambda *= 0.1;
                if lambda < 1e-12 {
                    lambda = 0.0;
                }
                accepted = true;
                break;
            }
            lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
        }
        if !accepted || last_step <= 1e-15 * (1.0 + p.norm()) {
            break;
        }
    }
    (p, r2)
}

enum Probe {
    Regular,
    HitsZero,
    Failed(FiberError),
}

fn probe_circle(sys: &FiberSystem, center: Point, r: f64) -> Probe {
    let n = sys.sheets();
    let mut first_failure = None;
    for k in 0..PROBES {
        let a = TAU * k as f64 / PROBES as f64;
        let p = Point::new(center.x + r * a.cos(), center.y + r * a.sin());
        match solve_fiber(sys, p) {
            Ok(roots) if roots.len() == n => {}
            Ok(roots) => {
                first_failure.get_or_insert(FiberError::ComplexRoots {
                    at: p,
                    found: roots.len(),
                    expected: n,
                });
            }
            Err(FiberError::SingularFiber { .. }) => return Probe::HitsZero,
            Err(e) => {
                first_failure.get_or_insert(e);
            }
        }
    }
    match first_failure {
        None => Probe::Regular,
        Some(e) => Probe::Failed(e),
    }
}

/// Scans the domain for isolated zeros of the degeneracy residual,
/// refines them by Gauss-Newton and certifies each by probing a circle
/// around it. Declared singular points of `sys` must all be recovered.
pub fn find_singularities(
    sys: &FiberSystem,
    grid_density: usize,
    tol: f64,
) -> Result<Vec<SingularPoint>, FiberError> {
    if grid_density < 8 {
        return Err(FiberError::Invalid("grid density must be at least 8".into()));
    }
    let res = Residual { sys };
    let dom = sys.domain;
    let n = grid_density;
    let hx = dom.width() / n as f64;
    let hy = dom.height() / n as f64;
    let h = hx.max(hy);
    let node = |i: usize, j: usize| Point::new(dom.x.0 + hx * i as f64, dom.y.0 + hy * j as f64);
    let values: Vec<Vec<f64>> = (0..=n)
        .map(|i| (0..=n).map(|j| res.sq(node(i, j))).collect())
        .collect();

    let mut candidates = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let v = values[i][j];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a > n as i64 || b > n as i64 {
                        continue;
                    }
                    if values[a as usize][b as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                candidates.push((v, node(i, j)));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let dedup = (10.0 * tol).max(1e-7 * dom.diameter());
    let mut zeros: Vec<(Point, f64)> = Vec::new();
    for &(_, start) in &candidates {
        let (p, r2) = refine(&res, start, h);
        if !dom.contains(p, 1e-9 * dom.diameter()) {
            continue;
        }
        if r2 > tol {
            if r2 <= tol.sqrt() && start.dist(p) < 2.0 * h {
                return Err(FiberError::NoConvergence { at: p });
            }
            continue;
        }
        if zeros.iter().any(|(q, _)| q.dist(p) <= dedup) {
            continue;
        }
        // a zero set that is a curve or region shows up as a zero on every
        // small circle around the point
        certify(sys, p, h, &zeros)?;
        zeros.push((p, r2));
    }

    let mut out = Vec::with_capacity(zeros.len());
    for (k, &(p, r2)) in zeros.iter().enumerate() {
        let nearest = zeros
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, (q, _))| q.dist(p))
            .fold(f64::INFINITY, f64::min);
        let radius = certify_with_neighbour(sys, p, h, nearest)?;
        out.push(SingularPoint {
            position: p,
            isolation_radius: radius,
            residual: r2,
        });
    }
    out.sort_by(|a, b| {
        a.position
            .x
            .total_cmp(&b.position.x)
            .then(a.position.y.total_cmp(&b.position.y))
    });

    for &d in &sys.declared_singular {
        if !out.iter().any(|s| s.position.dist(d) <= 1e-6 * (1.0 + d.norm())) {
            return Err(FiberError::DeclaredNotSingular { at: d });
        }
    }
    Ok(out)
}

fn certify(sys: &FiberSystem, p: Point, h: f64, known: &[(Point, f64)]) -> Result<f64, FiberError> {
    let nearest = known
        .iter()
        .map(|(q, _)| q.dist(p))
        .fold(f64::INFINITY, f64::min);
    certify_with_neighbour(sys, p, h, nearest)
}

fn certify_with_neighbour(sys: &FiberSystem, p: Point, h: f64, nearest: f64) -> Result<f64, FiberError> {
    let mut r = (2.0 * h).min(0.5 * nearest);
    let mut last = None;
    let mut hit_zero = false;
    for _ in 0..=RADIUS_HALVINGS {
        match probe_circle(sys, p, r) {
            Probe::Regular => return Ok(r),
            Probe::HitsZero => hit_zero = true,
            Probe::Failed(e) => last = Some(e),
        }
        r *= 0.5;
    }
    if hit_zero {
        return Err(FiberError::NonIsolatedZero { at: p });
    }
    Err(last.unwrap_or(FiberError::NonIsolatedZero { at: p }))
}
