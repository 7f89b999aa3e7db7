//! The `analyze`, `verify-theorem` and `plot` commands.

use std::f64::consts::TAU;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{Claim, Expectation, ProblemError, ProblemFile, RadiusSpec};
use super::report::{
    fiber_error_kind, geometry_error_kind, index_error_kind, point, AnalysisReport, Discrepancy, ErrorRecord,
    IndexRecord, PointRecord, Provenance, QuadratureRecord, SystemRecord, TheoremReportFile, ANALYSIS_SCHEMA,
};
use crate::fiber::{find_singularities, FiberSystem, Point, SingularPoint, SystemKind};
use crate::geometry::{verify_index_theorem, TheoremOptions};
use crate::index::{index_report, PointIndexReport};
use crate::monodromy::LoopSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

/// Command-line overrides shared by all commands.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlobalOptions {
    pub tol_singular: Option<f64>,
    pub samples: Option<usize>,
    /// Seeds the random choice of loop base points.
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct Outcome<R> {
    pub exit_code: i32,
    pub report: R,
}

fn system_with_overrides(problem: &ProblemFile, opts: &GlobalOptions) -> Result<FiberSystem, ProblemError> {
    let mut sys = problem.fiber_system()?;
    if let Some(t) = opts.tol_singular {
        sys.tolerances.singular = t;
    }
    Ok(sys)
}

fn system_record(sys: &FiberSystem) -> SystemRecord {
    SystemRecord {
        kind: match sys.kind {
            SystemKind::Projective(_) => "projective",
            SystemKind::Circle(_) => "circle",
            SystemKind::PuncturedPlane(_) => "punctured_plane",
        }
        .into(),
        fiber: sys.fiber_kind().name().into(),
        sheets: sys.sheets(),
    }
}

/// Finds the singular set and the index of every point. Input errors are
/// returned as `Err`; numerical failures produce a partial report with exit
/// code 2.
pub fn analyze(problem: &ProblemFile, opts: &GlobalOptions) -> Result<Outcome<AnalysisReport>, ProblemError> {
    let sys = system_with_overrides(problem, opts)?;
    let grid = problem.grid_density();
    let samples = opts.samples.or(problem.r#loop.samples);
    let mut report = AnalysisReport {
        schema: ANALYSIS_SCHEMA.into(),
        problem: problem.name.clone(),
        provenance: Provenance::new(sys.tolerances, grid, samples, opts.seed),
        system: system_record(&sys),
        singular_points: Vec::new(),
        discrepancies: Vec::new(),
        error: None,
    };

    let points = match find_singularities(&sys, grid, sys.tolerances.singular) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("singular set search failed: {e}");
            report.error = Some(ErrorRecord::new(fiber_error_kind(&e), &e));
            return Ok(Outcome { exit_code: EXIT_NUMERICAL, report });
        }
    };
    log::info!("found {} singular point(s)", points.len());

    let mut rng = opts.seed.map(ChaCha8Rng::seed_from_u64);
    let mut computed: Vec<(SingularPoint, Option<PointIndexReport>)> = Vec::new();
    let mut failed = false;
    for sp in &points {
        let radius = match problem.r#loop.radius {
            RadiusSpec::Explicit(r) => r,
            RadiusSpec::Policy(_) => 0.5 * sp.isolation_radius,
        };
        let mut lp = LoopSpec::for_system(&sys, sp.position, radius);
        if let Some(s) = samples {
            lp = lp.with_samples(s);
        }
        if let Some(d) = problem.r#loop.max_depth {
            lp.max_depth = d;
        }
        if let Some(rng) = rng.as_mut() {
            lp = lp.with_start_angle(rng.gen_range(0.0..TAU));
        }
        let mut rec = PointRecord::new(sp);
        rec.r#loop = Some((&lp).into());
        match index_report(&sys, sp, &lp) {
            Ok(r) => {
                rec.index = Some(IndexRecord::new(&r, sys.sheets()));
                report.provenance.max_depth_reached = report.provenance.max_depth_reached.max(r.max_depth_reached);
                computed.push((*sp, Some(r)));
            }
            Err(e) => {
                log::warn!("index at ({}, {}) failed: {e}", sp.position.x, sp.position.y);
                rec.error = Some(ErrorRecord::new(index_error_kind(&e), &e));
                failed = true;
                computed.push((*sp, None));
            }
        }
        report.singular_points.push(rec);
    }

    for claim in &problem.claims {
        report.discrepancies.extend(check_claim(claim, &computed));
    }
    if failed {
        report.error = Some(ErrorRecord {
            kind: "PartialFailure".into(),
            message: "the index of at least one singular point could not be computed".into(),
        });
    }
    Ok(Outcome { exit_code: if failed { EXIT_NUMERICAL } else { EXIT_OK }, report })
}

fn ratio_text(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Compares a claim with the computed results; every failure becomes a
/// discrepancy entry.
fn check_claim(claim: &Claim, computed: &[(SingularPoint, Option<PointIndexReport>)]) -> Vec<Discrepancy> {
    let targets: Vec<&(SingularPoint, Option<PointIndexReport>)> = match claim.point {
        Some([x, y]) => {
            let want = Point::new(x, y);
            computed
                .iter()
                .filter(|(sp, _)| sp.position.dist(want) <= 1e-6 * (1.0 + want.norm()))
                .collect()
        }
        None => computed.iter().collect(),
    };
    let expected = match &claim.expect {
        Expectation::NontrivialMonodromy(b) => format!("nontrivial monodromy: {b}"),
        Expectation::OrbitSizes(s) => {
            let mut s = s.clone();
            s.sort_unstable();
            format!("orbit sizes {s:?}")
        }
        Expectation::TotalIndex { num, den } => {
            if *den == 0 {
                return vec![Discrepancy {
                    description: claim.description.clone(),
                    point: None,
                    expected: "total index with zero denominator".into(),
                    computed: "claim is malformed".into(),
                }];
            }
            format!("total index {}", ratio_text(Rational64::new(*num, *den)))
        }
    };
    if targets.is_empty() {
        return vec![Discrepancy {
            description: claim.description.clone(),
            point: claim.point.map(|[x, y]| point(Point::new(x, y))),
            expected,
            computed: "no singular point found there".into(),
        }];
    }
    let mut out = Vec::new();
    for (sp, rep) in targets {
        let Some(rep) = rep else { continue };
        let computed = match &claim.expect {
            Expectation::NontrivialMonodromy(_) => {
                format!("nontrivial monodromy: {}", !rep.permutation.is_identity())
            }
            Expectation::OrbitSizes(_) => {
                let mut s: Vec<usize> = rep.orbits.iter().map(|o| o.size).collect();
                s.sort_unstable();
                format!("orbit sizes {s:?}")
            }
            Expectation::TotalIndex { .. } => format!("total index {}", ratio_text(rep.total_index)),
        };
        if computed != expected {
            out.push(Discrepancy {
                description: claim.description.clone(),
                point: Some(point(sp.position)),
                expected: expected.clone(),
                computed,
            });
        }
    }
    out
}

/// Runs the curvature-versus-index check on a surface problem.
pub fn verify_theorem(problem: &ProblemFile, opts: &GlobalOptions) -> Result<Outcome<TheoremReportFile>, ProblemError> {
    let (patches, source) = problem.surface()?;
    let spec = problem.surface.as_ref().expect("surface() succeeded");
    let mut tolerances = problem.tolerances.resolve();
    if let Some(t) = opts.tol_singular {
        tolerances.singular = t;
    }
    let samples = opts.samples.or(problem.r#loop.samples);
    let topts = TheoremOptions {
        quadrature_order: spec.quadrature.order,
        quadrature_cells: spec.quadrature.cells,
        grid_density: problem.grid_density(),
        tolerances,
        samples,
        max_depth: problem.r#loop.max_depth,
    };
    if topts.quadrature_order == 0 || topts.quadrature_cells == 0 {
        return Err(ProblemError::Invalid("quadrature order and cells must be positive".into()));
    }
    let mut provenance = Provenance::new(tolerances, topts.grid_density, samples, opts.seed);
    provenance.quadrature = Some(QuadratureRecord { order: topts.quadrature_order, cells: topts.quadrature_cells });
    let mut report = TheoremReportFile::empty(problem.name.clone(), provenance);
    match verify_index_theorem(&patches, &source, &topts) {
        Ok(r) => {
            report.fill(&r);
            let code = if r.holds() { EXIT_OK } else { EXIT_VIOLATION };
            if code != EXIT_OK {
                log::warn!("identity check failed: lhs {} rhs {:?}", r.lhs, r.rhs);
            }
            Ok(Outcome { exit_code: code, report })
        }
        Err(e) => {
            log::warn!("theorem check failed: {e}");
            report.error = Some(ErrorRecord::new(geometry_error_kind(&e), &e));
            Ok(Outcome { exit_code: EXIT_NUMERICAL, report })
        }
    }
}

/// Renders the line web of a projective problem as SVG.
pub fn plot(problem: &ProblemFile, grid: usize, opts: &GlobalOptions) -> Result<String, ProblemError> {
    if grid == 0 {
        return Err(ProblemError::Invalid("grid must be positive".into()));
    }
    let sys = system_with_overrides(problem, opts)?;
    if sys.form().is_none() {
        return Err(ProblemError::Invalid("plotting needs a projective system".into()));
    }
    let singular: Vec<Point> = match find_singularities(&sys, problem.grid_density(), sys.tolerances.singular) {
        Ok(p) => p.iter().map(|s| s.position).collect(),
        Err(e) => {
            log::warn!("singular points not marked: {e}");
            Vec::new()
        }
    };
    Ok(super::plot::render_svg(&sys, grid, &singular))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(text: &str) -> ProblemFile {
        ProblemFile::from_json(text).unwrap()
    }

    const LEMON: &str = r#"{
        "version": 1, "name": "lemon",
        "system": {"kind": "projective", "coefficients": ["y", "-2*x", "-y"]},
        "domain": {"x": [-1, 1], "y": [-1, 1]}
    }"#;

    #[test]
    fn analyze_lemon() {
        let out = analyze(&problem(LEMON), &GlobalOptions::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        let r = out.report;
        assert_eq!(r.singular_points.len(), 1);
        let idx = r.singular_points[0].index.as_ref().unwrap();
        assert_eq!((idx.total_index.num, idx.total_index.den), (2, 1));
        assert_eq!(idx.orbits.len(), 2);
        assert!(r.discrepancies.is_empty() && r.error.is_none());
    }

    #[test]
    fn seeded_runs_agree_on_indices() {
        let a = analyze(&problem(LEMON), &GlobalOptions { seed: Some(7), ..Default::default() }).unwrap();
        let b = analyze(&problem(LEMON), &GlobalOptions { seed: Some(7), ..Default::default() }).unwrap();
        assert_eq!(a.report, b.report);
        let c = analyze(&problem(LEMON), &GlobalOptions { seed: Some(8), ..Default::default() }).unwrap();
        let ia = a.report.singular_points[0].index.as_ref().unwrap();
        let ic = c.report.singular_points[0].index.as_ref().unwrap();
        assert_eq!(ia.total_index, ic.total_index);
        assert_ne!(a.report.singular_points[0].r#loop, c.report.singular_points[0].r#loop);
    }

    #[test]
    fn claims_produce_discrepancies() {
        let text = LEMON.replace(
            "\"name\": \"lemon\",",
            r#""name": "lemon", "claims": [
                {"description": "swaps the sheets", "point": [0, 0], "expect": {"nontrivial_monodromy": true}},
                {"description": "index two", "expect": {"total_index": {"num": 2, "den": 1}}},
                {"description": "elsewhere", "point": [0.5, 0.5], "expect": {"orbit_sizes": [2]}}
            ],"#,
        );
        let r = analyze(&problem(&text), &GlobalOptions::default()).unwrap().report;
        assert_eq!(r.discrepancies.len(), 2);
        assert_eq!(r.discrepancies[0].computed, "nontrivial monodromy: false");
        assert_eq!(r.discrepancies[1].computed, "no singular point found there");
    }

    #[test]
    fn numerical_failure_is_reported() {
        let text = r#"{
            "version": 1,
            "system": {"kind": "projective", "coefficients": ["y", "0", "-y"]},
            "domain": {"x": [-1, 1], "y": [-1, 1]}
        }"#;
        let out = analyze(&problem(text), &GlobalOptions::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_NUMERICAL);
        assert_eq!(out.report.error.unwrap().kind, "NonIsolatedZero");
    }

    #[test]
    fn loop_radius_too_large_fails_point() {
        let text = LEMON.replace("\"name\": \"lemon\",", r#""loop": {"radius": 50},"#);
        let out = analyze(&problem(&text), &GlobalOptions::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_NUMERICAL);
        let e = out.report.singular_points[0].error.as_ref().unwrap();
        assert_eq!(e.kind, "LoopMismatch");
    }

    #[test]
    fn plot_needs_projective_system() {
        let text = r#"{
            "version": 1,
            "system": {"kind": "circle", "exponent": 2, "u": {"re": "x", "im": "y"}},
            "domain": {"x": [-1, 1], "y": [-1, 1]}
        }"#;
        assert!(plot(&problem(text), 10, &GlobalOptions::default()).is_err());
        let svg = plot(&problem(LEMON), 10, &GlobalOptions::default()).unwrap();
        assert_eq!(svg.matches("<line ").count(), 200);
        assert_eq!(svg.matches("<circle ").count(), 1);
    }
}
