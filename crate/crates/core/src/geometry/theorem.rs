//! Checking the curvature integral against the sum of singular-point
//! indices on a closed surface.

use std::f64::consts::PI;

use num_rational::Rational64;

use super::{check_partition, curvature_line_bde, integrate_gauss_curvature, GeometryError, SurfacePatch};
use crate::fiber::{find_singularities, BinaryForm, FiberSystem, Tolerances};
use crate::index::{index_report, PointIndexReport};
use crate::monodromy::LoopSpec;

/// Where the binary differential equation on each patch comes from.
#[derive(Debug, Clone)]
pub enum BdeSource {
    /// Principal directions of the surface.
    CurvatureLines,
    /// One form per patch, in the patch parameters.
    Explicit(Vec<BinaryForm>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremOptions {
    pub quadrature_order: usize,
    pub quadrature_cells: usize,
    pub grid_density: usize,
    pub tolerances: Tolerances,
    /// Initial loop samples; the per-system default when absent.
    pub samples: Option<usize>,
    pub max_depth: Option<u32>,
}

impl Default for TheoremOptions {
    fn default() -> Self {
        TheoremOptions {
            quadrature_order: 8,
            quadrature_cells: 16,
            grid_density: 48,
            tolerances: Tolerances::default(),
            samples: None,
            max_depth: None,
        }
    }
}

/// A singular point analysed in the patch where it sits deepest.
#[derive(Debug, Clone)]
pub struct LocatedPoint {
    pub patch: usize,
    pub patch_name: String,
    pub ambient: [f64; 3],
    pub weight: f64,
    pub report: PointIndexReport,
}

#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub sheets: usize,
    pub points: Vec<LocatedPoint>,
    /// `Σ N(x)·index(x)`; absent when some point has orbits of different sizes.
    pub rhs: Option<Rational64>,
    /// `(n/π)·∫K dA`.
    pub lhs: f64,
    pub lhs_error: f64,
    pub curvature_integral: f64,
    /// `||lhs| − |rhs||`, when `rhs` exists.
    pub difference: Option<f64>,
    pub tolerance: f64,
    pub hypothesis_ok: bool,
    pub euler_characteristic_estimate: f64,
    pub orientation_note: Option<String>,
}

impl TheoremReport {
    /// The identity holds within tolerance and every point has a common
    /// orbit size.
    pub fn holds(&self) -> bool {
        self.hypothesis_ok && self.difference.is_some_and(|d| d <= self.tolerance)
    }
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

struct Candidate {
    patch: usize,
    ambient: [f64; 3],
    weight: f64,
    margin: f64,
    sp: crate::fiber::SingularPoint,
}

/// Locates every singular point of the equation on the surface, computes
/// its index, and compares `Σ N(x)·index(x)` with `(n/π)·∫K dA`.
pub fn verify_index_theorem(
    patches: &[SurfacePatch],
    source: &BdeSource,
    opts: &TheoremOptions,
) -> Result<TheoremReport, GeometryError> {
    if patches.is_empty() {
        return Err(GeometryError::Invalid("no patches".into()));
    }
    check_partition(patches)?;
    for p in patches {
        p.validate()?;
    }
    let forms: Vec<BinaryForm> = match source {
        BdeSource::CurvatureLines => patches.iter().map(curvature_line_bde).collect::<Result<_, _>>()?,
        BdeSource::Explicit(forms) => {
            if forms.len() != patches.len() {
                return Err(GeometryError::Invalid(format!(
                    "{} forms given for {} patches",
                    forms.len(),
                    patches.len()
                )));
            }
            forms.clone()
        }
    };
    let sheets = forms[0].degree();
    if forms.iter().any(|f| f.degree() != sheets) {
        return Err(GeometryError::Invalid("forms on different patches have different degrees".into()));
    }

    let systems: Vec<FiberSystem> = forms
        .into_iter()
        .zip(patches)
        .map(|(f, p)| {
            let mut sys = FiberSystem::projective(f, p.rect);
            sys.tolerances = opts.tolerances;
            sys
        })
        .collect();

    let mut candidates = Vec::new();
    for (i, (sys, patch)) in systems.iter().zip(patches).enumerate() {
        let found = find_singularities(sys, opts.grid_density, opts.tolerances.singular)
            .map_err(|source| GeometryError::Fiber { patch: patch.name().to_string(), source })?;
        for sp in found {
            candidates.push(Candidate {
                patch: i,
                ambient: patch.position(sp.position)?,
                weight: patch.weight_at(sp.position)?,
                margin: patch.rect.margin(sp.position),
                sp,
            });
        }
    }

    // deepest copy first: largest weight, then farthest from the edge
    candidates.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(b.margin.total_cmp(&a.margin)));
    let scale = candidates
        .iter()
        .map(|c| c.ambient.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .fold(1.0_f64, f64::max);
    let mut chosen: Vec<Candidate> = Vec::new();
    for c in candidates {
        if !chosen.iter().any(|k| dist3(k.ambient, c.ambient) <= 1e-6 * scale) {
            chosen.push(c);
        }
    }

    let mut points = Vec::with_capacity(chosen.len());
    for c in chosen {
        let patch = &patches[c.patch];
        let edge = 1e-9 * patch.rect.diameter();
        if c.margin <= edge {
            return Err(GeometryError::SingularPointOnPatchBoundary {
                patch: patch.name().to_string(),
                at: c.ambient,
            });
        }
        let sys = &systems[c.patch];
        let radius = 0.5 * c.sp.isolation_radius.min(c.margin);
        let mut lp = LoopSpec::for_system(sys, c.sp.position, radius);
        if let Some(s) = opts.samples {
            lp = lp.with_samples(s);
        }
        if let Some(d) = opts.max_depth {
            lp.max_depth = d;
        }
        let report = index_report(sys, &c.sp, &lp)
            .map_err(|source| GeometryError::Index { patch: patch.name().to_string(), source })?;
        points.push(LocatedPoint {
            patch: c.patch,
            patch_name: patch.name().to_string(),
            ambient: c.ambient,
            weight: c.weight,
            report,
        });
    }
    points.sort_by(|a, b| {
        a.ambient
            .iter()
            .zip(&b.ambient)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let hypothesis_ok = points.iter().all(|p| p.report.uniform_orbit_size.is_some());
    let rhs = hypothesis_ok.then(|| {
        points.iter().fold(Rational64::from_integer(0), |acc, p| {
            let n = p.report.uniform_orbit_size.unwrap_or(0) as i64;
            acc + p.report.total_index * n
        })
    });

    let (integral, int_err) = integrate_gauss_curvature(patches, opts.quadrature_order, opts.quadrature_cells)?;
    let factor = sheets as f64 / PI;
    let lhs = factor * integral;
    let lhs_error = factor * int_err;
    let tolerance = (1e-3_f64).max(10.0 * lhs_error);
    let rhs_f = rhs.map(|r| *r.numer() as f64 / *r.denom() as f64);
    let difference = rhs_f.map(|r| (lhs.abs() - r.abs()).abs());
    let orientation_note = rhs_f
        .filter(|r| r * lhs < 0.0 && lhs.abs() > tolerance)
        .map(|_| "left and right sides agree in magnitude but have opposite signs".to_string());

    Ok(TheoremReport {
        sheets,
        points,
        rhs,
        lhs,
        lhs_error,
        curvature_integral: integral,
        difference,
        tolerance,
        hypothesis_ok,
        euler_characteristic_estimate: lhs / (2.0 * sheets as f64),
        orientation_note,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::super::tests::stereographic_sphere;
    use super::*;
    use crate::fiber::{FiberError, Rect};

    /// Six central-projection patches of `x²/a² + y²/b² + z²/c² = 1`.
    pub(crate) fn ellipsoid(a: f64, b: f64, c: f64) -> Vec<SurfacePatch> {
        let axes = ["x", "y", "z"];
        let scale = [a, b, c];
        let mut out = Vec::new();
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let (j, k) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut dir = ["".to_string(), "".to_string(), "".to_string()];
                dir[axis] = format!("{sign}");
                dir[j] = "u".into();
                dir[k] = "v".into();
                let coords: Vec<String> = (0..3)
                    .map(|i| format!("{} * {} / sqrt(1 + u^2 + v^2)", scale[i], dir[i]))
                    .collect();
                let s: Vec<String> = (0..3).map(|i| format!("({}/{})", axes[i], scale[i])).collect();
                let weight = format!(
                    "(({sign}*{si} + abs({si}))/2)^16 / ({}^16 + {}^16 + {}^16)",
                    s[0],
                    s[1],
                    s[2],
                    si = s[axis]
                );
                let name = format!("{}{}", if sign > 0.0 { "+" } else { "-" }, axes[axis]);
                out.push(
                    SurfacePatch::parse(
                        &name,
                        [&coords[0], &coords[1], &coords[2]],
                        Rect::new((-3.0, 3.0), (-3.0, 3.0)),
                        Some(&weight),
                    )
                    .unwrap(),
                );
            }
        }
        out
    }

    #[test]
    fn ellipsoid_umbilics() {
        let rep = verify_index_theorem(&ellipsoid(3.0, 2.0, 1.0), &BdeSource::CurvatureLines, &TheoremOptions::default())
            .unwrap();
        assert_eq!(rep.points.len(), 4);
        let (ux, uz) = ((45.0_f64 / 8.0).sqrt(), (3.0_f64 / 8.0).sqrt());
        for p in &rep.points {
            let a = p.ambient;
            assert!((a[0].abs() - ux).abs() < 1e-6 && a[1].abs() < 1e-6 && (a[2].abs() - uz).abs() < 1e-6);
            assert_eq!(p.report.signature(), vec![(1, 1), (1, 1)]);
            assert_eq!(p.report.uniform_orbit_size, Some(1));
        }
        assert_eq!(rep.rhs, Some(Rational64::from_integer(8)));
        assert!((rep.lhs - 8.0).abs() < 1e-3);
        assert!(rep.holds());
    }

    #[test]
    fn flat_torus_has_empty_singular_set() {
        let patch = SurfacePatch::parse("flat", ["u", "v", "0"], Rect::new((0.0, TAU), (0.0, TAU)), None).unwrap();
        let form = BinaryForm::parse(&["0", "1", "0"]).unwrap();
        let opts = TheoremOptions { quadrature_cells: 2, ..Default::default() };
        let rep = verify_index_theorem(&[patch], &BdeSource::Explicit(vec![form]), &opts).unwrap();
        assert!(rep.points.is_empty());
        assert_eq!(rep.rhs, Some(Rational64::from_integer(0)));
        assert!(rep.lhs.abs() < 1e-9);
        assert!(rep.holds());
    }

    #[test]
    fn sphere_with_meridians_and_parallels() {
        // radial lines and circles in both stereographic charts: the web of
        // meridians and parallels, singular at the poles
        let web = || BinaryForm::parse(&["x*y", "-(x^2 - y^2)", "-x*y"]).unwrap();
        let rep = verify_index_theorem(
            &stereographic_sphere(),
            &BdeSource::Explicit(vec![web(), web()]),
            &TheoremOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.points.len(), 2);
        for p in &rep.points {
            assert_eq!(p.report.signature(), vec![(1, 2), (1, 2)]);
        }
        assert_eq!(rep.rhs, Some(Rational64::from_integer(8)));
        assert!((rep.lhs - 8.0).abs() < 1e-6, "{}", rep.lhs);
        assert!((rep.euler_characteristic_estimate - 2.0).abs() < 1e-6);
        assert!(rep.holds());
        assert!(rep.orientation_note.is_none());
    }

    #[test]
    fn umbilic_sphere_is_rejected() {
        let err = verify_index_theorem(&stereographic_sphere(), &BdeSource::CurvatureLines, &TheoremOptions::default())
            .unwrap_err();
        assert!(matches!(
            err,
            GeometryError::Fiber { source: FiberError::NonIsolatedZero { .. }, .. }
        ));
    }

    #[test]
    fn form_count_must_match() {
        let err = verify_index_theorem(&stereographic_sphere(), &BdeSource::Explicit(vec![]), &TheoremOptions::default())
            .unwrap_err();
        assert!(matches!(err, GeometryError::Invalid(_)));
    }
}
