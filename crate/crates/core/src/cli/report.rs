//! Machine-readable reports. Rationals are `{num, den}` objects and reals
//! are decimal strings with a fixed number of significant digits, so a
//! report is byte-identical across runs and survives a JSON round trip.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::fiber::{FiberError, FiberKind, Point, SingularPoint, Tolerances};
use crate::geometry::{GeometryError, LocatedPoint, TheoremReport};
use crate::index::{alternative_normalizations, IndexError, OrbitIndexReport, PointIndexReport};
use crate::monodromy::{LoopSpec, MonodromyError, Orientation};

pub const ANALYSIS_SCHEMA: &str = "branchidx.analysis/1";
pub const THEOREM_SCHEMA: &str = "branchidx.theorem/1";

/// Significant digits after the leading one in printed reals.
pub const FLOAT_DIGITS: usize = 12;

/// Canonical decimal form of a real.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{:.*e}", FLOAT_DIGITS, x)
}

/// Reads back a real written by [`real`].
pub fn parse_real(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl From<Rational64> for Ratio {
    fn from(r: Rational64) -> Self {
        Ratio { num: *r.numer(), den: *r.denom() }
    }
}

impl From<Ratio> for Rational64 {
    fn from(r: Ratio) -> Self {
        Rational64::new(r.num, r.den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

pub fn fiber_error_kind(e: &FiberError) -> &'static str {
    match e {
        FiberError::SingularFiber { .. } => "SingularFiber",
        FiberError::ComplexRoots { .. } => "ComplexRoots",
        FiberError::IllConditioned { .. } => "IllConditioned",
        FiberError::MixedVariants => "MixedVariants",
        FiberError::NonIsolatedZero { .. } => "NonIsolatedZero",
        FiberError::NoConvergence { .. } => "NoConvergence",
        FiberError::DeclaredNotSingular { .. } => "DeclaredNotSingular",
        FiberError::Invalid(_) => "InvalidSystem",
        FiberError::Eval(_) => "EvaluationError",
    }
}

pub fn monodromy_error_kind(e: &MonodromyError) -> &'static str {
    match e {
        MonodromyError::SingularOnLoop { .. } => "SingularOnLoop",
        MonodromyError::StepCollapse { .. } => "StepCollapse",
        MonodromyError::AmbiguousMatching { .. } => "AmbiguousMatching",
        MonodromyError::NotClosed { .. } => "NotClosed",
        MonodromyError::InvalidLoop(_) => "InvalidLoop",
        MonodromyError::NotAnOrbit(_) => "NotAnOrbit",
        MonodromyError::Fiber(f) => fiber_error_kind(f),
    }
}

pub fn index_error_kind(e: &IndexError) -> &'static str {
    match e {
        IndexError::OpenPath { .. } => "OpenPath",
        IndexError::ClosureDefectTooLarge { .. } => "ClosureDefectTooLarge",
        IndexError::WrongFiber(_) => "WrongFiber",
        IndexError::LoopMismatch(_) => "LoopMismatch",
        IndexError::Monodromy(m) => monodromy_error_kind(m),
    }
}

pub fn geometry_error_kind(e: &GeometryError) -> &'static str {
    match e {
        GeometryError::DegenerateImmersion { .. } => "DegenerateImmersion",
        GeometryError::CurvatureMismatch { .. } => "CurvatureMismatch",
        GeometryError::WeightsNotPartition { .. } => "WeightsNotPartition",
        GeometryError::SingularPointOnPatchBoundary { .. } => "SingularPointOnPatchBoundary",
        GeometryError::Invalid(_) => "InvalidSurface",
        GeometryError::Parse { .. } => "ParseError",
        GeometryError::Fiber { source, .. } => fiber_error_kind(source),
        GeometryError::Index { source, .. } => index_error_kind(source),
        GeometryError::Eval(_) => "EvaluationError",
    }
}

impl ErrorRecord {
    pub fn new(kind: &str, err: &dyn std::fmt::Display) -> Self {
        ErrorRecord { kind: kind.to_string(), message: err.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceRecord {
    pub singular: String,
    pub separation: String,
}

impl From<Tolerances> for ToleranceRecord {
    fn from(t: Tolerances) -> Self {
        ToleranceRecord { singular: real(t.singular), separation: real(t.separation) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub order: usize,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub tolerances: ToleranceRecord,
    pub grid_density: usize,
    /// Initial loop samples, when overridden.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Deepest step bisection used by any loop.
    pub max_depth_reached: u32,
    pub quadrature: Option<QuadratureRecord>,
}

impl Provenance {
    pub fn new(tolerances: Tolerances, grid_density: usize, samples: Option<usize>, seed: Option<u64>) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            tolerances: tolerances.into(),
            grid_density,
            samples,
            seed,
            max_depth_reached: 0,
            quadrature: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub kind: String,
    pub fiber: String,
    pub sheets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub center: [String; 2],
    pub radius: String,
    pub orientation: String,
    pub start_angle: String,
    pub samples: usize,
    pub max_depth: u32,
}

impl From<&LoopSpec> for LoopRecord {
    fn from(l: &LoopSpec) -> Self {
        LoopRecord {
            center: point(l.center),
            radius: real(l.radius),
            orientation: match l.orientation {
                Orientation::Positive => "positive",
                Orientation::Negative => "negative",
            }
            .into(),
            start_angle: real(l.start_angle),
            samples: l.samples,
            max_depth: l.max_depth,
        }
    }
}

pub fn point(p: Point) -> [String; 2] {
    [real(p.x), real(p.y)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeRecord {
    pub classical_line_index: Ratio,
    /// `[k, m]` of each unit-vector orbit above this orbit.
    pub s1_cover_orbits: Vec<[i64; 2]>,
    pub s1_cover_index: Ratio,
    pub fukui_index: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub orbit: Vec<usize>,
    pub k: usize,
    pub m: i64,
    pub normalized_index: Ratio,
    pub classical_line_index: Option<Ratio>,
    pub closure_defect: String,
    pub alternative: Option<AlternativeRecord>,
}

impl OrbitRecord {
    pub fn new(o: &OrbitIndexReport, sheets: usize) -> Self {
        let alternative = (o.fiber == FiberKind::Rp1)
            .then(|| alternative_normalizations(o, sheets).ok())
            .flatten()
            .map(|a| AlternativeRecord {
                classical_line_index: a.classical_line_index.into(),
                s1_cover_orbits: a.s1_cover_orbits.iter().map(|&(k, m)| [k as i64, m]).collect(),
                s1_cover_index: a.s1_cover_index.into(),
                fukui_index: a.fukui_index.into(),
            });
        OrbitRecord {
            orbit: o.orbit.clone(),
            k: o.size,
            m: o.winding,
            normalized_index: o.normalized_index.into(),
            classical_line_index: o.classical_line_index.map(Into::into),
            closure_defect: real(o.closure_defect),
            alternative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub permutation: Vec<usize>,
    pub cycles: Vec<Vec<usize>>,
    pub orbits: Vec<OrbitRecord>,
    pub total_index: Ratio,
    pub uniform_orbit_size: Option<usize>,
    pub max_depth_reached: u32,
    pub steps: usize,
}

impl IndexRecord {
    pub fn new(r: &PointIndexReport, sheets: usize) -> Self {
        IndexRecord {
            permutation: r.permutation.images().to_vec(),
            cycles: r.permutation.cycles(),
            orbits: r.orbits.iter().map(|o| OrbitRecord::new(o, sheets)).collect(),
            total_index: r.total_index.into(),
            uniform_orbit_size: r.uniform_orbit_size,
            max_depth_reached: r.max_depth_reached,
            steps: r.steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub position: [String; 2],
    pub isolation_radius: String,
    pub residual: String,
    pub r#loop: Option<LoopRecord>,
    pub index: Option<IndexRecord>,
    pub error: Option<ErrorRecord>,
}

impl PointRecord {
    pub fn new(sp: &SingularPoint) -> Self {
        PointRecord {
            position: point(sp.position),
            isolation_radius: real(sp.isolation_radius),
            residual: real(sp.residual),
            r#loop: None,
            index: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub description: String,
    pub point: Option<[String; 2]>,
    pub expected: String,
    pub computed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub problem: Option<String>,
    pub provenance: Provenance,
    pub system: SystemRecord,
    pub singular_points: Vec<PointRecord>,
    pub discrepancies: Vec<Discrepancy>,
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremPointRecord {
    pub patch: String,
    pub ambient: [String; 3],
    pub parameter: [String; 2],
    pub weight: String,
    pub isolation_radius: String,
    pub r#loop: LoopRecord,
    /// Common orbit size N(x).
    pub orbit_size: Option<usize>,
    pub index: IndexRecord,
}

impl TheoremPointRecord {
    pub fn new(p: &LocatedPoint, sheets: usize) -> Self {
        TheoremPointRecord {
            patch: p.patch_name.clone(),
            ambient: [real(p.ambient[0]), real(p.ambient[1]), real(p.ambient[2])],
            parameter: point(p.report.point.position),
            weight: real(p.weight),
            isolation_radius: real(p.report.point.isolation_radius),
            r#loop: (&p.report.loop_spec).into(),
            orbit_size: p.report.uniform_orbit_size,
            index: IndexRecord::new(&p.report, sheets),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReportFile {
    pub schema: String,
    pub problem: Option<String>,
    pub provenance: Provenance,
    pub sheets: Option<usize>,
    pub points: Vec<TheoremPointRecord>,
    pub rhs: Option<Ratio>,
    pub lhs: Option<String>,
    pub lhs_error: Option<String>,
    pub curvature_integral: Option<String>,
    pub difference: Option<String>,
    pub tolerance: Option<String>,
    pub hypothesis_ok: Option<bool>,
    pub euler_characteristic_estimate: Option<String>,
    pub orientation_note: Option<String>,
    pub holds: bool,
    pub error: Option<ErrorRecord>,
}

impl TheoremReportFile {
    pub fn empty(problem: Option<String>, provenance: Provenance) -> Self {
        TheoremReportFile {
            schema: THEOREM_SCHEMA.into(),
            problem,
            provenance,
            sheets: None,
            points: Vec::new(),
            rhs: None,
            lhs: None,
            lhs_error: None,
            curvature_integral: None,
            difference: None,
            tolerance: None,
            hypothesis_ok: None,
            euler_characteristic_estimate: None,
            orientation_note: None,
            holds: false,
            error: None,
        }
    }

    pub fn fill(&mut self, r: &TheoremReport) {
        self.sheets = Some(r.sheets);
        self.points = r.points.iter().map(|p| TheoremPointRecord::new(p, r.sheets)).collect();
        self.rhs = r.rhs.map(Into::into);
        self.lhs = Some(real(r.lhs));
        self.lhs_error = Some(real(r.lhs_error));
        self.curvature_integral = Some(real(r.curvature_integral));
        self.difference = r.difference.map(real);
        self.tolerance = Some(real(r.tolerance));
        self.hypothesis_ok = Some(r.hypothesis_ok);
        self.euler_characteristic_estimate = Some(real(r.euler_characteristic_estimate));
        self.orientation_note = r.orientation_note.clone();
        self.holds = r.holds();
        self.provenance.max_depth_reached = r
            .points
            .iter()
            .map(|p| p.report.max_depth_reached)
            .max()
            .unwrap_or(0);
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
