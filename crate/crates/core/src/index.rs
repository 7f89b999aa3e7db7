//! Index classes of orbits and of isolated singular points.
//!
//! The canonical invariant of an orbit is its winding class `m ∈ π₁(F) ≅ ℤ`,
//! read off the closed orbit lift. Everything else is a normalization of
//! `m` and the orbit size `k`, kept as exact rationals.

use num_rational::Rational64;
use thiserror::Error;

use crate::fiber::{FiberKind, FiberSystem, SingularPoint};
use crate::monodromy::{orbit_lift, track_loop, LoopSpec, MonodromyError, MonodromyResult, Permutation, TrackedPath, CLOSURE_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("path is not closed (gap {gap:e})")]
    OpenPath { gap: f64 },
    #[error("lift change is {defect:e} away from a whole number of periods")]
    ClosureDefectTooLarge { defect: f64 },
    #[error("normalization needs an RP1 fiber, got {0:?}")]
    WrongFiber(FiberKind),
    #[error("loop does not fit the singular point: {0}")]
    LoopMismatch(String),
    #[error(transparent)]
    Monodromy(#[from] MonodromyError),
}

/// Winding class of a closed lifted path and its rounding defect.
pub fn winding_class(path: &TrackedPath) -> Result<(i64, f64), IndexError> {
    let gap = path.closure_gap();
    if gap > CLOSURE_TOL {
        return Err(IndexError::OpenPath { gap });
    }
    let period = path.fiber.period();
    let turns = path.angle_change() / period;
    let m = turns.round();
    let defect = (path.angle_change() - m * period).abs();
    if defect >= CLOSURE_TOL * period {
        return Err(IndexError::ClosureDefectTooLarge { defect });
    }
    Ok((m as i64, defect))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitIndexReport {
    pub fiber: FiberKind,
    /// Orbit labels in cycle order, starting at the smallest.
    pub orbit: Vec<usize>,
    pub size: usize,
    pub winding: i64,
    /// `m / k`.
    pub normalized_index: Rational64,
    /// `m / (2k)`, the line-field index in full turns; RP1 fibers only.
    pub classical_line_index: Option<Rational64>,
    pub closure_defect: f64,
}

impl OrbitIndexReport {
    fn new(fiber: FiberKind, orbit: Vec<usize>, winding: i64, closure_defect: f64) -> Self {
        let k = orbit.len() as i64;
        OrbitIndexReport {
            fiber,
            size: orbit.len(),
            orbit,
            winding,
            normalized_index: Rational64::new(winding, k),
            classical_line_index: (fiber == FiberKind::Rp1).then(|| Rational64::new(winding, 2 * k)),
            closure_defect,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PointIndexReport {
    pub point: SingularPoint,
    pub loop_spec: LoopSpec,
    pub permutation: Permutation,
    pub orbits: Vec<OrbitIndexReport>,
    /// Σ m/k over orbits.
    pub total_index: Rational64,
    /// Common orbit size N(x), when all orbits have the same size.
    pub uniform_orbit_size: Option<usize>,
    pub max_depth_reached: u32,
    pub steps: usize,
}

impl PointIndexReport {
    /// Sorted `(k, m)` pairs.
    pub fn signature(&self) -> Vec<(usize, i64)> {
        let mut s: Vec<(usize, i64)> = self.orbits.iter().map(|o| (o.size, o.winding)).collect();
        s.sort_unstable();
        s
    }
}

/// Per-orbit reports from a finished monodromy computation.
pub fn orbit_reports(result: &MonodromyResult) -> Result<Vec<OrbitIndexReport>, IndexError> {
    result
        .orbits
        .iter()
        .map(|orbit| {
            let path = orbit_lift(result, orbit)?;
            let (m, defect) = winding_class(&path)?;
            Ok(OrbitIndexReport::new(result.fiber(), orbit.clone(), m, defect))
        })
        .collect()
}

/// Tracks `lp` around `sp` and assembles the index of every orbit.
pub fn index_report(sys: &FiberSystem, sp: &SingularPoint, lp: &LoopSpec) -> Result<PointIndexReport, IndexError> {
    if lp.center.dist(sp.position) > 1e-12 * (1.0 + sp.position.norm()) {
        return Err(IndexError::LoopMismatch("loop is not centered at the point".into()));
    }
    if lp.radius >= sp.isolation_radius {
        return Err(IndexError::LoopMismatch(format!(
            "radius {} is not below the isolation radius {}",
            lp.radius, sp.isolation_radius
        )));
    }
    let result = track_loop(sys, lp)?;
    let orbits = orbit_reports(&result)?;
    let total_index = orbits
        .iter()
        .fold(Rational64::from_integer(0), |acc, o| acc + o.normalized_index);
    let first = orbits.first().map(|o| o.size);
    let uniform_orbit_size = first.filter(|&k| orbits.iter().all(|o| o.size == k));
    Ok(PointIndexReport {
        point: *sp,
        loop_spec: *lp,
        permutation: result.permutation,
        orbits,
        total_index,
        uniform_orbit_size,
        max_depth_reached: result.max_depth_reached,
        steps: result.steps,
    })
}

/// Other index conventions for an RP1 orbit, derived from `(k, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeNormalizations {
    /// `m / (2k)`.
    pub classical_line_index: Rational64,
    /// Orbits `(k, m)` of the unit-vector double cover lying over this orbit.
    pub s1_cover_orbits: Vec<(usize, i64)>,
    /// Σ m_i / k_i over those cover orbits (angular-form normalization).
    pub s1_cover_index: Rational64,
    /// `m / (2n)`: this orbit's share of the degree-`n` form index measured
    /// on the unit-vector cover.
    pub fukui_index: Rational64,
}

/// Derives the alternative normalizations for an orbit of a degree-`n`
/// projective system.
pub fn alternative_normalizations(r: &OrbitIndexReport, degree: usize) -> Result<AlternativeNormalizations, IndexError> {
    if r.fiber != FiberKind::Rp1 {
        return Err(IndexError::WrongFiber(r.fiber));
    }
    let (k, m) = (r.size, r.winding);
    // a line turning by mπ lifts to one unit-vector orbit of size 2k when m
    // is odd, and to two orbits of size k when m is even
    let s1_cover_orbits = if m % 2 != 0 {
        vec![(2 * k, m)]
    } else {
        vec![(k, m / 2), (k, m / 2)]
    };
    let s1_cover_index = s1_cover_orbits
        .iter()
        .fold(Rational64::from_integer(0), |acc, &(ki, mi)| {
            acc + Rational64::new(mi, ki as i64)
        });
    Ok(AlternativeNormalizations {
        classical_line_index: Rational64::new(m, 2 * k as i64),
        s1_cover_orbits,
        s1_cover_index,
        fukui_index: Rational64::new(m, 2 * degree as i64),
    })
}
