//! Continuation of fiber roots along loops and paths, local monodromy
//! permutations and the closed lift of an orbit.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::fiber::{min_root_separation, solve_fiber, FiberError, FiberKind, FiberRoot, FiberSystem, Point};

/// Matching tolerance below which two candidate roots are indistinguishable.
const AMBIGUITY_TOL: f64 = 1e-9;
/// Largest accepted defect when closing up an orbit lift.
pub const CLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonodromyError {
    #[error("loop passes through the singular set at ({}, {})", .at.x, .at.y)]
    SingularOnLoop { at: Point },
    #[error("step refinement exhausted at t = {t} (depth {depth})")]
    StepCollapse { t: f64, depth: u32 },
    #[error("root matching is ambiguous at ({}, {})", .at.x, .at.y)]
    AmbiguousMatching { at: Point },
    #[error("orbit lift does not close up (defect {defect:e})")]
    NotClosed { defect: f64 },
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("{0:?} is not a cycle of the monodromy permutation")]
    NotAnOrbit(Vec<usize>),
    #[error(transparent)]
    Fiber(#[from] FiberError),
}

/// A permutation of `0..n`, stored as the list of images.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || std::mem::replace(&mut seen[i], true) {
                return None;
            }
        }
        Some(Permutation(images))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Permutation(inv)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        Permutation(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Permutation::identity(self.len()), |acc, _| self.compose(&acc))
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Cycles, each starting at its smallest element, ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.0.len()];
        let mut out = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut i = self.0[start];
            while i != start {
                seen[i] = true;
                cycle.push(i);
                i = self.0[i];
            }
            out.push(cycle);
        }
        out
    }

    /// Sorted cycle lengths.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        t.sort_unstable();
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Counterclockwise in base coordinates: the positive generator.
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// A circular loop around a singular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSpec {
    pub center: Point,
    pub radius: f64,
    pub orientation: Orientation,
    /// Initial number of steps per traversal.
    pub samples: usize,
    /// Maximum number of step bisections.
    pub max_depth: u32,
    /// Polar angle of the base point (`t = 0`) about the center.
    pub start_angle: f64,
}

pub const MIN_SAMPLES: usize = 32;
pub const DEFAULT_MAX_DEPTH: u32 = 12;

/// Default initial sample count for a fiber with `sheets` points.
pub fn default_samples(sheets: usize) -> usize {
    64 * sheets.max(1).div_ceil(4)
}

impl LoopSpec {
    pub fn new(center: Point, radius: f64) -> Self {
        LoopSpec {
            center,
            radius,
            orientation: Orientation::Positive,
            samples: 64,
            max_depth: DEFAULT_MAX_DEPTH,
            start_angle: 0.0,
        }
    }

    pub fn for_system(sys: &FiberSystem, center: Point, radius: f64) -> Self {
        LoopSpec {
            samples: default_samples(sys.sheets()),
            ..LoopSpec::new(center, radius)
        }
    }

    pub fn with_orientation(mut self, o: Orientation) -> Self {
        self.orientation = o;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_start_angle(mut self, a: f64) -> Self {
        self.start_angle = a;
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.radius = r;
        self
    }

    pub fn point_at(&self, t: f64) -> Point {
        let a = self.start_angle + self.orientation.sign() * TAU * t;
        Point::new(
            self.center.x + self.radius * a.cos(),
            self.center.y + self.radius * a.sin(),
        )
    }

    pub fn base_point(&self) -> Point {
        self.point_at(0.0)
    }

    fn validate(&self) -> Result<(), MonodromyError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(MonodromyError::InvalidLoop("radius must be positive".into()));
        }
        if self.samples < MIN_SAMPLES {
            return Err(MonodromyError::InvalidLoop(format!(
                "at least {MIN_SAMPLES} initial samples are required"
            )));
        }
        Ok(())
    }
}

/// Continuous lift coordinate: unwrapped angle plus log-modulus (zero for
/// angle fibers).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Lift {
    pub angle: f64,
    pub log_modulus: f64,
}

impl Lift {
    fn of(root: &FiberRoot) -> Self {
        Lift {
            angle: root.angle(),
            log_modulus: root.modulus().ln(),
        }
    }

    /// The fiber point this lift value projects to.
    pub fn project(&self, kind: FiberKind) -> FiberRoot {
        match kind {
            FiberKind::Rp1 => FiberRoot::Rp1Angle(crate::fiber::canonical_angle(self.angle, kind.period())),
            FiberKind::S1 => FiberRoot::CircleAngle(crate::fiber::canonical_angle(self.angle, kind.period())),
            FiberKind::CStar => {
                let r = self.log_modulus.exp();
                FiberRoot::ComplexPoint {
                    re: r * self.angle.cos(),
                    im: r * self.angle.sin(),
                }
            }
        }
    }
}

fn wrapped_diff(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    if d > period / 2.0 {
        d - period
    } else {
        d
    }
}

/// One fiber root followed along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPath {
    pub fiber: FiberKind,
    pub t: Vec<f64>,
    pub roots: Vec<FiberRoot>,
    pub lift: Vec<Lift>,
}

impl TrackedPath {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn start(&self) -> &FiberRoot {
        &self.roots[0]
    }

    pub fn end(&self) -> &FiberRoot {
        self.roots.last().expect("tracked paths are nonempty")
    }

    /// Fiber distance between end and start.
    pub fn closure_gap(&self) -> f64 {
        self.start().distance(self.end()).unwrap_or(f64::INFINITY)
    }

    /// Net change of the angle coordinate.
    pub fn angle_change(&self) -> f64 {
        self.lift.last().map_or(0.0, |l| l.angle) - self.lift.first().map_or(0.0, |l| l.angle)
    }

    /// A path that stays at one fiber point.
    pub fn constant(root: FiberRoot, samples: usize) -> Self {
        let n = samples.max(2);
        TrackedPath {
            fiber: root.kind(),
            t: (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
            roots: vec![root; n],
            lift: vec![Lift::of(&root); n],
        }
    }
}

/// Result of continuing every fiber root along a parametrized curve.
#[derive(Debug, Clone)]
struct Continuation {
    paths: Vec<TrackedPath>,
    max_depth_reached: u32,
    steps: usize,
}

fn match_nearest(from: &[FiberRoot], to: &[FiberRoot]) -> Result<Option<(Vec<usize>, f64)>, FiberError> {
    let mut assignment = Vec::with_capacity(from.len());
    let mut used = vec![false; to.len()];
    let mut movement = 0.0_f64;
    for a in from {
        let mut best = (usize::MAX, f64::INFINITY);
        for (j, b) in to.iter().enumerate() {
            let d = a.distance(b).ok_or(FiberError::MixedVariants)?;
            if d < best.1 {
                best = (j, d);
            }
        }
        if best.0 == usize::MAX || used[best.0] {
            return Ok(None);
        }
        used[best.0] = true;
        assignment.push(best.0);
        movement = movement.max(best.1);
    }
    Ok(Some((assignment, movement)))
}

fn solve_on_path(sys: &FiberSystem, p: Point) -> Result<Vec<FiberRoot>, MonodromyError> {
    solve_fiber(sys, p).map_err(|e| match e {
        FiberError::SingularFiber { at } => MonodromyError::SingularOnLoop { at },
        other => MonodromyError::Fiber(other),
    })
}

fn continue_along(
    sys: &FiberSystem,
    curve: impl Fn(f64) -> Point,
    samples: usize,
    max_depth: u32,
) -> Result<Continuation, MonodromyError> {
    let kind = sys.fiber_kind();
    let period = kind.period();
    let start = solve_on_path(sys, curve(0.0))?;
    if start.len() != sys.sheets() {
        return Err(FiberError::ComplexRoots {
            at: curve(0.0),
            found: start.len(),
            expected: sys.sheets(),
        }
        .into());
    }
    let mut paths: Vec<TrackedPath> = start
        .iter()
        .map(|r| TrackedPath {
            fiber: kind,
            t: vec![0.0],
            roots: vec![*r],
            lift: vec![Lift::of(r)],
        })
        .collect();
    let mut current = start;
    let base_step = 1.0 / samples as f64;
    let mut t = 0.0;
    let mut depth = 0u32;
    let mut deepest = 0u32;
    let mut steps = 0usize;
    while t < 1.0 {
        let step = base_step / f64::powi(2.0, depth as i32);
        let t_new = if 1.0 - t <= step * (1.0 + 1e-9) { 1.0 } else { t + step };
        let p = curve(t_new);
        let next = solve_on_path(sys, p)?;
        let sep = min_root_separation(&current)?.min(min_root_separation(&next)?);
        let accepted = match match_nearest(&current, &next)? {
            Some((assign, movement)) if movement < sep / 2.0 => {
                let angular_ok = current.iter().zip(&assign).all(|(a, &j)| {
                    wrapped_diff(next[j].angle(), a.angle(), period).abs() < period / 8.0
                });
                angular_ok.then_some(assign)
            }
            _ => None,
        };
        match accepted {
            Some(assign) => {
                let reordered: Vec<FiberRoot> = assign.iter().map(|&j| next[j]).collect();
                for (path, root) in paths.iter_mut().zip(&reordered) {
                    let prev = *path.lift.last().expect("nonempty");
                    let prev_root = *path.roots.last().expect("nonempty");
                    let lift = Lift {
                        angle: prev.angle + wrapped_diff(root.angle(), prev_root.angle(), period),
                        log_modulus: root.modulus().ln(),
                    };
                    path.t.push(t_new);
                    path.roots.push(*root);
                    path.lift.push(lift);
                }
                current = reordered;
                t = t_new;
                steps += 1;
                depth = depth.saturating_sub(1);
            }
            None => {
                depth += 1;
                deepest = deepest.max(depth);
                if depth > max_depth {
                    return Err(MonodromyError::StepCollapse { t, depth });
                }
            }
        }
    }
    Ok(Continuation {
        paths,
        max_depth_reached: deepest,
        steps,
    })
}

/// For each tracked end root, the label of the unique nearest root in `targets`.
fn assign_labels(ends: &[FiberRoot], targets: &[FiberRoot], at: Point) -> Result<Vec<usize>, MonodromyError> {
    let mut images = Vec::with_capacity(ends.len());
    for e in ends {
        let mut d: Vec<(f64, usize)> = targets
            .iter()
            .enumerate()
            .map(|(j, r)| Ok((e.distance(r).ok_or(FiberError::MixedVariants)?, j)))
            .collect::<Result<_, FiberError>>()?;
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        if d.len() > 1 && d[1].0 - d[0].0 <= AMBIGUITY_TOL {
            return Err(MonodromyError::AmbiguousMatching { at });
        }
        images.push(d[0].1);
    }
    Permutation::from_images(images.clone()).ok_or(MonodromyError::AmbiguousMatching { at })?;
    Ok(images)
}

/// Local monodromy of a loop: the permutation of the base fiber and its orbits.
#[derive(Debug, Clone)]
pub struct MonodromyResult {
    pub loop_spec: LoopSpec,
    pub base: Point,
    /// Base fiber; label `i` is `initial[i]`.
    pub initial: Vec<FiberRoot>,
    /// `σ(i)` is the label where the lift starting at root `i` ends.
    pub permutation: Permutation,
    pub orbits: Vec<Vec<usize>>,
    /// Per-root lift over one traversal.
    pub paths: Vec<TrackedPath>,
    pub max_depth_reached: u32,
    pub steps: usize,
}

impl MonodromyResult {
    pub fn fiber(&self) -> FiberKind {
        self.paths[0].fiber
    }
}

/// Tracks every root of the base fiber once around `lp`.
pub fn track_loop(sys: &FiberSystem, lp: &LoopSpec) -> Result<MonodromyResult, MonodromyError> {
    lp.validate()?;
    let base = lp.base_point();
    let c = continue_along(sys, |t| lp.point_at(t), lp.samples, lp.max_depth)?;
    let initial: Vec<FiberRoot> = c.paths.iter().map(|p| *p.start()).collect();
    let ends: Vec<FiberRoot> = c.paths.iter().map(|p| *p.end()).collect();
    let images = assign_labels(&ends, &initial, base)?;
    let permutation = Permutation::from_images(images).expect("checked bijection");
    let orbits = permutation.cycles();
    Ok(MonodromyResult {
        loop_spec: *lp,
        base,
        initial,
        permutation,
        orbits,
        paths: c.paths,
        max_depth_reached: c.max_depth_reached,
        steps: c.steps,
    })
}

/// Transports the fiber over `curve(0)` to the fiber over `curve(1)`:
/// entry `i` is the canonical label at the end reached from label `i`.
pub fn transport(
    sys: &FiberSystem,
    curve: impl Fn(f64) -> Point,
    samples: usize,
    max_depth: u32,
) -> Result<Vec<usize>, MonodromyError> {
    let end_point = curve(1.0);
    let c = continue_along(sys, curve, samples.max(MIN_SAMPLES), max_depth)?;
    let targets = solve_on_path(sys, end_point)?;
    let ends: Vec<FiberRoot> = c.paths.iter().map(|p| *p.end()).collect();
    assign_labels(&ends, &targets, end_point)
}

/// Concatenates the single-traversal lifts along an orbit into one closed
/// path over `k` traversals, with a continuous lift coordinate.
pub fn orbit_lift(result: &MonodromyResult, orbit: &[usize]) -> Result<TrackedPath, MonodromyError> {
    let k = orbit.len();
    let sigma = &result.permutation;
    let valid = k > 0
        && orbit.iter().all(|&i| i < sigma.len())
        && (0..k).all(|i| sigma.apply(orbit[i]) == orbit[(i + 1) % k]);
    if !valid {
        return Err(MonodromyError::NotAnOrbit(orbit.to_vec()));
    }
    let kind = result.fiber();
    let period = kind.period();
    let first = &result.paths[orbit[0]];
    let mut out = TrackedPath {
        fiber: kind,
        t: first.t.clone(),
        roots: first.roots.clone(),
        lift: first.lift.clone(),
    };
    for (round, &label) in orbit.iter().enumerate().skip(1) {
        let seg = &result.paths[label];
        let prev = *out.lift.last().expect("nonempty");
        let diff = prev.angle - seg.lift[0].angle;
        let offset = (diff / period).round() * period;
        let junction = (diff - offset)
            .abs()
            .max((prev.log_modulus - seg.lift[0].log_modulus).abs());
        if junction > CLOSURE_TOL {
            return Err(MonodromyError::NotClosed { defect: junction });
        }
        for i in 1..seg.len() {
            out.t.push(seg.t[i] + round as f64);
            out.roots.push(seg.roots[i]);
            out.lift.push(Lift {
                angle: seg.lift[i].angle + offset,
                log_modulus: seg.lift[i].log_modulus,
            });
        }
    }
    let gap = out.closure_gap();
    if gap > CLOSURE_TOL {
        return Err(MonodromyError::NotClosed { defect: gap });
    }
    Ok(out)
}
