//! Parametric surface patches, their fundamental forms, curvature-line
//! equations and curvature integrals.

pub mod quadrature;
pub mod theorem;

use thiserror::Error;

use crate::expr::{EvalError, Expr, ParseError, Program};
use crate::fiber::{BinaryForm, FiberError, Point, Rect};
use crate::index::IndexError;

pub use theorem::{verify_index_theorem, BdeSource, LocatedPoint, TheoremOptions, TheoremReport};

/// Relative agreement required between the two curvature routes.
pub const CURVATURE_AGREEMENT: f64 = 1e-6;
/// Allowed deviation of the partition weights from 1.
pub const PARTITION_TOL: f64 = 1e-8;

const PROBE_GRID: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("patch {patch}: degenerate immersion at ({}, {})", .at.x, .at.y)]
    DegenerateImmersion { patch: String, at: Point },
    #[error("patch {patch}: curvature routes disagree at ({}, {}): {shape} vs {normal}", .at.x, .at.y)]
    CurvatureMismatch { patch: String, at: Point, shape: f64, normal: f64 },
    #[error("partition weights sum to {sum} at ambient point {at:?}")]
    WeightsNotPartition { at: [f64; 3], sum: f64 },
    #[error("singular point at ambient {at:?} lies on the boundary of patch {patch}")]
    SingularPointOnPatchBoundary { patch: String, at: [f64; 3] },
    #[error("invalid surface: {0}")]
    Invalid(String),
    #[error("patch {patch}: {source}")]
    Parse { patch: String, source: ParseError },
    #[error("patch {patch}: {source}")]
    Fiber { patch: String, source: FiberError },
    #[error("patch {patch}: {source}")]
    Index { patch: String, source: IndexError },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// First and second fundamental forms at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    /// `(LN − M²)/(EG − F²)`.
    pub k: f64,
    /// Gaussian curvature from the derivative of the unit normal.
    pub k_normal: f64,
    /// `√(EG − F²)`.
    pub area_element: f64,
}

/// A parametrized piece `(u, v) ↦ (X, Y, Z)` of a surface.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    name: String,
    coords: [Expr; 3],
    pub rect: Rect,
    weight: Option<Expr>,
    /// position, first and second derivatives: 18 outputs
    jet: Program,
    unit_normal: Program,
    weight_uv: Option<Program>,
    weight_ambient: Option<Program>,
}

/// Offsets of `X_u, X_v, X_uu, X_uv, X_vv` in the jet program, which
/// starts with the position.
const DU: usize = 3;
const DV: usize = 6;
const DUU: usize = 9;
const DUV: usize = 12;
const DVV: usize = 15;

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross_expr(a: &[Expr; 3], b: &[Expr; 3]) -> [Expr; 3] {
    [
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn dot_expr(a: &[Expr; 3], b: &[Expr; 3]) -> Expr {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

fn partials(c: &[Expr; 3], var: u8) -> [Expr; 3] {
    [c[0].derivative(var), c[1].derivative(var), c[2].derivative(var)]
}

impl SurfacePatch {
    /// Builds a patch from coordinate expressions in `u, v` and an optional
    /// partition weight written in ambient `x, y, z`.
    pub fn new(name: impl Into<String>, coords: [Expr; 3], rect: Rect, weight: Option<Expr>) -> Result<Self, GeometryError> {
        let name = name.into();
        if coords.iter().any(|c| c.max_var().is_some_and(|v| v > 1)) {
            return Err(GeometryError::Invalid(format!("patch {name}: coordinates may only use u and v")));
        }
        if !(rect.width() > 0.0 && rect.height() > 0.0) {
            return Err(GeometryError::Invalid(format!("patch {name}: empty parameter rectangle")));
        }
        let du = partials(&coords, 0);
        let dv = partials(&coords, 1);
        let duu = partials(&du, 0);
        let duv = partials(&du, 1);
        let dvv = partials(&dv, 1);
        let jet: Vec<Expr> = [&coords, &du, &dv, &duu, &duv, &dvv]
            .into_iter()
            .flat_map(|c| c.iter().cloned())
            .collect();
        let normal = cross_expr(&du, &dv);
        let len = dot_expr(&normal, &normal).sqrt();
        let unit: Vec<Expr> = normal.iter().map(|c| c / &len).collect();
        let weight_uv = weight.as_ref().map(|w| Program::compile(&[w.substitute(&coords)]));
        let weight_ambient = weight.as_ref().map(|w| Program::compile(std::slice::from_ref(w)));
        Ok(SurfacePatch {
            name,
            jet: Program::compile(&jet),
            unit_normal: Program::compile(&unit),
            coords,
            rect,
            weight,
            weight_uv,
            weight_ambient,
        })
    }

    /// Parses coordinate strings (variables `u`, `v`) and an ambient weight
    /// (variables `x`, `y`, `z`).
    pub fn parse(name: &str, coords: [&str; 3], rect: Rect, weight: Option<&str>) -> Result<Self, GeometryError> {
        let parse_err = |source| GeometryError::Parse { patch: name.to_string(), source };
        let c = [
            Expr::parse(coords[0]).map_err(parse_err)?,
            Expr::parse(coords[1]).map_err(parse_err)?,
            Expr::parse(coords[2]).map_err(parse_err)?,
        ];
        let w = weight.map(Expr::parse_ambient).transpose().map_err(parse_err)?;
        SurfacePatch::new(name, c, rect, w)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coords(&self) -> &[Expr; 3] {
        &self.coords
    }

    pub fn weight(&self) -> Option<&Expr> {
        self.weight.as_ref()
    }

    pub fn position(&self, p: Point) -> Result<[f64; 3], EvalError> {
        let c = &self.coords;
        let at = [p.x, p.y];
        Ok([c[0].eval(&at)?, c[1].eval(&at)?, c[2].eval(&at)?])
    }

    /// Partition weight at a parameter point (1 when none is declared).
    pub fn weight_at(&self, p: Point) -> Result<f64, EvalError> {
        match &self.weight_uv {
            Some(w) => Ok(w.eval(&[p.x, p.y])?[0]),
            None => Ok(1.0),
        }
    }

    /// Partition weight at an ambient point (1 when none is declared).
    pub fn weight_at_ambient(&self, x: [f64; 3]) -> Result<f64, EvalError> {
        match &self.weight_ambient {
            Some(w) => Ok(w.eval(&x)?[0]),
            None => Ok(1.0),
        }
    }

    fn degenerate(&self, at: Point) -> GeometryError {
        GeometryError::DegenerateImmersion { patch: self.name.clone(), at }
    }

    pub fn fundamental_forms(&self, p: Point) -> Result<FundamentalForms, GeometryError> {
        let j = self.jet.eval(&[p.x, p.y])?;
        let v = |k: usize| [j[k], j[k + 1], j[k + 2]];
        let (xu, xv) = (v(DU), v(DV));
        let (e, f, g) = (dot(xu, xu), dot(xu, xv), dot(xv, xv));
        let det1 = e * g - f * f;
        if !(det1 > 1e-14 * (e + g) * (e + g)) {
            return Err(self.degenerate(p));
        }
        let area = det1.sqrt();
        let n = cross(xu, xv);
        let unit = [n[0] / area, n[1] / area, n[2] / area];
        let (l, m, nn) = (dot(v(DUU), unit), dot(v(DUV), unit), dot(v(DVV), unit));
        let k = (l * nn - m * m) / det1;

        let d = self.unit_normal.eval_grad(&[p.x, p.y])?;
        let nu = [d[0].d[0], d[1].d[0], d[2].d[0]];
        let nv = [d[0].d[1], d[1].d[1], d[2].d[1]];
        let k_normal = dot(cross(nu, nv), n) / det1;
        Ok(FundamentalForms {
            e,
            f,
            g,
            l,
            m,
            n: nn,
            k,
            k_normal,
            area_element: area,
        })
    }

    /// Interior probe points on a regular grid.
    pub fn probe_points(&self, per_side: usize) -> Vec<Point> {
        let r = &self.rect;
        let mut out = Vec::with_capacity(per_side * per_side);
        for i in 0..per_side {
            for j in 0..per_side {
                let s = (i as f64 + 0.5) / per_side as f64;
                let t = (j as f64 + 0.5) / per_side as f64;
                out.push(Point::new(r.x.0 + s * r.width(), r.y.0 + t * r.height()));
            }
        }
        out
    }

    /// Checks the immersion condition and the agreement of the two
    /// curvature routes at probe points.
    pub fn validate(&self) -> Result<(), GeometryError> {
        for p in self.probe_points(PROBE_GRID) {
            let ff = self.fundamental_forms(p)?;
            let scale = ff.k.abs().max(ff.k_normal.abs());
            if (ff.k - ff.k_normal).abs() > CURVATURE_AGREEMENT * scale + 1e-12 {
                return Err(GeometryError::CurvatureMismatch {
                    patch: self.name.clone(),
                    at: p,
                    shape: ff.k,
                    normal: ff.k_normal,
                });
            }
        }
        Ok(())
    }

    /// `weight · K · √(EG − F²)` at a parameter point.
    pub fn curvature_density(&self, p: Point) -> Result<f64, GeometryError> {
        let w = self.weight_at(p)?;
        if w == 0.0 {
            return Ok(0.0);
        }
        let ff = self.fundamental_forms(p)?;
        Ok(w * ff.k * ff.area_element)
    }
}

/// The quadratic form in `(du, dv)` whose roots are the principal
/// directions; it vanishes exactly at umbilics.
///
/// Uses `(EM − FL, EN − GL, FN − GM)` with the second fundamental form
/// taken against the unnormalized normal and the whole form divided by
/// `(E + G)³`, a positive factor that leaves the directions unchanged and
/// makes the coefficients scale like curvature.
pub fn curvature_line_bde(patch: &SurfacePatch) -> Result<BinaryForm, GeometryError> {
    let c = &patch.coords;
    let du = partials(c, 0);
    let dv = partials(c, 1);
    let n = cross_expr(&du, &dv);
    let l = dot_expr(&partials(&du, 0), &n);
    let m = dot_expr(&partials(&du, 1), &n);
    let nn = dot_expr(&partials(&dv, 1), &n);
    let e = dot_expr(&du, &du);
    let f = dot_expr(&du, &dv);
    let g = dot_expr(&dv, &dv);
    let scale = (&e + &g).powi(3);
    let coeffs = vec![
        (&e * &m - &f * &l) / scale.clone(),
        (&e * &nn - &g * &l) / scale.clone(),
        (&f * &nn - &g * &m) / scale.clone(),
    ];
    BinaryForm::new(coeffs).map_err(|source| GeometryError::Fiber { patch: patch.name.clone(), source })
}

/// Σ over patches of `∫∫ weight·K dA`, with the summed error estimate.
pub fn integrate_gauss_curvature(
    patches: &[SurfacePatch],
    order: usize,
    cells: usize,
) -> Result<(f64, f64), GeometryError> {
    check_partition(patches)?;
    let mut value = 0.0;
    let mut error = 0.0;
    for patch in patches {
        let (v, e) = quadrature::integrate_with_estimate(&patch.rect, order, cells, |p| patch.curvature_density(p))?;
        value += v;
        error += e;
    }
    Ok((value, error))
}

/// Verifies that the weights of all patches sum to 1 at probe points of
/// every patch.
pub fn check_partition(patches: &[SurfacePatch]) -> Result<(), GeometryError> {
    for patch in patches {
        for p in patch.probe_points(7) {
            let x = patch.position(p)?;
            let mut sum = 0.0;
            for other in patches {
                sum += other.weight_at_ambient(x)?;
            }
            if !((sum - 1.0).abs() <= PARTITION_TOL) {
                return Err(GeometryError::WeightsNotPartition { at: x, sum });
            }
        }
    }
    Ok(())
}
