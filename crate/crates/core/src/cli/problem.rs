//! JSON problem files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiber::{
    BinaryForm, CircleRelation, ComplexExpr, FiberError, FiberSystem, Point, PolyRelation, Quotient, Rect, SystemKind,
    Tolerances,
};
use crate::geometry::{BdeSource, GeometryError, SurfacePatch};

pub const PROBLEM_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported problem version {0}")]
    Version(u32),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub singular_points: Vec<[f64; 2]>,
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub r#loop: LoopParams,
    #[serde(default)]
    pub grid_density: Option<usize>,
    #[serde(default)]
    pub claims: Vec<Claim>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// Coefficients of `dx^(n-i) dy^i`, in order.
    Projective {
        #[serde(default)]
        degree: Option<usize>,
        coefficients: Vec<String>,
    },
    /// `w^exponent = u/|u|`.
    Circle {
        exponent: u32,
        u: ComplexSpec,
        #[serde(default)]
        quotient: QuotientSpec,
    },
    /// `Σ c_j w^j = 0`, coefficients ascending in `w`.
    PuncturedPlane { coefficients: Vec<ComplexSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub re: String,
    #[serde(default = "zero")]
    pub im: String,
}

fn zero() -> String {
    "0".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotientSpec {
    #[default]
    None,
    Antipodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl DomainSpec {
    pub fn rect(&self) -> Rect {
        Rect::new((self.x[0], self.x[1]), (self.y[0], self.y[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub patches: Vec<PatchSpec>,
    pub bde: BdeSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub name: String,
    /// `X, Y, Z` in the parameters `u, v`.
    pub coords: [String; 3],
    pub u: [f64; 2],
    pub v: [f64; 2],
    /// Partition weight in ambient `x, y, z`.
    #[serde(default)]
    pub weight: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BdeSpec {
    CurvatureLines,
    /// One coefficient list per patch.
    Explicit(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_cells")]
    pub cells: usize,
}

fn default_order() -> usize {
    8
}

fn default_cells() -> usize {
    16
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { order: default_order(), cells: default_cells() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default)]
    pub singular: Option<f64>,
    #[serde(default)]
    pub separation: Option<f64>,
}

impl ToleranceSpec {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            singular: self.singular.unwrap_or(d.singular),
            separation: self.separation.unwrap_or(d.separation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusSpec {
    Policy(RadiusPolicy),
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusPolicy {
    Auto,
}

impl Default for RadiusSpec {
    fn default() -> Self {
        RadiusSpec::Policy(RadiusPolicy::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopParams {
    #[serde(default)]
    pub radius: RadiusSpec,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub max_depth: Option<u32>,
}

/// An expected property of the computed result, checked and reported as a
/// discrepancy when it fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Claim {
    pub description: String,
    /// Singular point the claim is about; every point when absent.
    #[serde(default)]
    pub point: Option<[f64; 2]>,
    pub expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    NontrivialMonodromy(bool),
    OrbitSizes(Vec<usize>),
    TotalIndex { num: i64, den: i64 },
}

pub const DEFAULT_GRID_DENSITY: usize = 32;
pub const DEFAULT_SURFACE_GRID_DENSITY: usize = 48;

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let p: ProblemFile = serde_json::from_str(text)?;
        if p.version != PROBLEM_VERSION {
            return Err(ProblemError::Version(p.version));
        }
        match (&p.system, &p.surface) {
            (Some(_), Some(_)) => {
                return Err(ProblemError::Invalid("give either a system or a surface, not both".into()))
            }
            (None, None) => return Err(ProblemError::Invalid("a system or a surface is required".into())),
            (Some(_), None) if p.domain.is_none() => {
                return Err(ProblemError::Invalid("a system needs a domain".into()))
            }
            _ => {}
        }
        if let Some(d) = p.grid_density {
            if d < 8 {
                return Err(ProblemError::Invalid("grid_density must be at least 8".into()));
            }
        }
        if let RadiusSpec::Explicit(r) = p.r#loop.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ProblemError::Invalid("loop radius must be positive".into()));
            }
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ProblemFile::from_json(&text)
    }

    pub fn grid_density(&self) -> usize {
        self.grid_density.unwrap_or(if self.surface.is_some() {
            DEFAULT_SURFACE_GRID_DENSITY
        } else {
            DEFAULT_GRID_DENSITY
        })
    }

    /// Builds the fiber system of a `system` problem.
    pub fn fiber_system(&self) -> Result<FiberSystem, ProblemError> {
        let spec = self
            .system
            .as_ref()
            .ok_or_else(|| ProblemError::Invalid("problem has no system section".into()))?;
        let domain = self
            .domain
            .ok_or_else(|| ProblemError::Invalid("a system needs a domain".into()))?
            .rect();
        if !(domain.width() > 0.0 && domain.height() > 0.0) {
            return Err(ProblemError::Invalid("empty domain".into()));
        }
        let kind = match spec {
            SystemSpec::Projective { degree, coefficients } => {
                if let Some(n) = degree {
                    if *n + 1 != coefficients.len() {
                        return Err(ProblemError::Invalid(format!(
                            "degree {n} needs {} coefficients, got {}",
                            n + 1,
                            coefficients.len()
                        )));
                    }
                }
                let refs: Vec<&str> = coefficients.iter().map(String::as_str).collect();
                SystemKind::Projective(BinaryForm::parse(&refs)?)
            }
            SystemSpec::Circle { exponent, u, quotient } => {
                let q = match quotient {
                    QuotientSpec::None => Quotient::None,
                    QuotientSpec::Antipodal => Quotient::Antipodal,
                };
                SystemKind::Circle(CircleRelation::new(*exponent, complex(u)?, q)?)
            }
            SystemSpec::PuncturedPlane { coefficients } => {
                let c = coefficients.iter().map(complex).collect::<Result<Vec<_>, _>>()?;
                SystemKind::PuncturedPlane(PolyRelation::new(c)?)
            }
        };
        let mut sys = FiberSystem::new(kind, domain);
        sys.declared_singular = self.singular_points.iter().map(|p| Point::new(p[0], p[1])).collect();
        sys.tolerances = self.tolerances.resolve();
        Ok(sys)
    }

    /// Builds the patches and equation source of a `surface` problem.
    pub fn surface(&self) -> Result<(Vec<SurfacePatch>, BdeSource), ProblemError> {
        let spec = self
            .surface
            .as_ref()
            .ok_or_else(|| ProblemError::Invalid("problem has no surface section".into()))?;
        if spec.patches.is_empty() {
            return Err(ProblemError::Invalid("surface has no patches".into()));
        }
        let patches = spec
            .patches
            .iter()
            .map(|p| {
                let coords = [p.coords[0].as_str(), p.coords[1].as_str(), p.coords[2].as_str()];
                let rect = Rect::new((p.u[0], p.u[1]), (p.v[0], p.v[1]));
                SurfacePatch::parse(&p.name, coords, rect, p.weight.as_deref())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let source = match &spec.bde {
            BdeSpec::CurvatureLines => BdeSource::CurvatureLines,
            BdeSpec::Explicit(forms) => BdeSource::Explicit(
                forms
                    .iter()
                    .map(|f| {
                        let refs: Vec<&str> = f.iter().map(String::as_str).collect();
                        BinaryForm::parse(&refs)
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        Ok((patches, source))
    }
}

fn complex(c: &ComplexSpec) -> Result<ComplexExpr, ProblemError> {
    Ok(ComplexExpr::parse(&c.re, &c.im)?)
}
