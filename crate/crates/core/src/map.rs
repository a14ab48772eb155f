//! The planar map abstraction: evaluation, Jacobians, orbits and the
//! sampled competitiveness and (O±) checks.

use crate::geometry::{in_interior_q2, in_interior_q4, Matrix2, Point2, Rect, DEFAULT_SAMPLING_WINDOW};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Denominators smaller than this in absolute value are treated as poles.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// Default relative finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("singularity at {at}: denominator vanishes")]
    Singularity { at: Point2 },
    #[error("point {at} lies outside the domain {domain}")]
    OutsideDomain { at: Point2, domain: Rect },
    #[error("non-finite value at {at}")]
    NonFinite { at: Point2 },
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
}

/// `num / den`, failing with [`MapError::Singularity`] near a pole.
pub fn checked_div(num: f64, den: f64, at: Point2) -> Result<f64, MapError> {
    if den.abs() < SINGULARITY_TOL {
        Err(MapError::Singularity { at })
    } else {
        Ok(num / den)
    }
}

pub type Evaluator = Arc<dyn Fn(Point2) -> Result<Point2, MapError> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(Point2) -> Result<Matrix2, MapError> + Send + Sync>;

/// `T(x, y) = (f(x, y), g(x, y))` on a rectangular domain.
///
/// Cloning is cheap: evaluators are shared behind `Arc`.
#[derive(Clone)]
pub struct PlanarMap {
    name: String,
    eval: Evaluator,
    jac: Option<JacobianFn>,
    domain: Rect,
    params: BTreeMap<String, f64>,
}

impl fmt::Debug for PlanarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarMap")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("exact_jacobian", &self.jac.is_some())
            .field("params", &self.params)
            .finish()
    }
}

impl PlanarMap {
    pub fn new<F>(name: impl Into<String>, domain: Rect, eval: F) -> Self
    where
        F: Fn(Point2) -> Result<Point2, MapError> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            jac: None,
            domain,
            params: BTreeMap::new(),
        }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(Point2) -> Result<Matrix2, MapError> + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn with_domain(mut self, domain: Rect) -> Self {
        self.domain = domain;
        self
    }

    /// Affine map `p ↦ M·p + b`, with its exact Jacobian.
    pub fn affine(name: impl Into<String>, m: Matrix2, b: Point2) -> Self {
        Self::new(name, Rect::whole_plane(), move |p| Ok(m.apply(p) + b))
            .with_jacobian(move |_| Ok(m))
    }

    pub fn identity() -> Self {
        Self::affine("identity", Matrix2::IDENTITY, Point2::ORIGIN)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn has_exact_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    /// `T(p)`, with the domain check.
    pub fn evaluate(&self, p: Point2) -> Result<Point2, MapError> {
        if !self.domain.contains(p) {
            return Err(MapError::OutsideDomain {
                at: p,
                domain: self.domain,
            });
        }
        self.evaluate_unchecked(p)
    }

    /// `T(p)` without the domain check; used by stencils and Newton steps that
    /// may briefly leave the domain through the map's natural extension.
    pub fn evaluate_unchecked(&self, p: Point2) -> Result<Point2, MapError> {
        let q = (self.eval)(p)?;
        if q.is_finite() {
            Ok(q)
        } else {
            Err(MapError::NonFinite { at: p })
        }
    }

    /// Exact Jacobian when available, otherwise central differences with step
    /// `h·max(1, |coordinate|)`.
    pub fn jacobian(&self, p: Point2, h: f64) -> Result<Matrix2, MapError> {
        match &self.jac {
            Some(j) => {
                let m = j(p)?;
                if m.is_finite() {
                    Ok(m)
                } else {
                    Err(MapError::NonFinite { at: p })
                }
            }
            None => self.jacobian_fd(p, h),
        }
    }

    pub fn jacobian_fd(&self, p: Point2, h: f64) -> Result<Matrix2, MapError> {
        let hx = h * p.x.abs().max(1.0);
        let hy = h * p.y.abs().max(1.0);
        let fxp = self.evaluate_unchecked(Point2::new(p.x + hx, p.y))?;
        let fxm = self.evaluate_unchecked(Point2::new(p.x - hx, p.y))?;
        let fyp = self.evaluate_unchecked(Point2::new(p.x, p.y + hy))?;
        let fym = self.evaluate_unchecked(Point2::new(p.x, p.y - hy))?;
        Ok(Matrix2::new(
            (fxp.x - fxm.x) / (2.0 * hx),
            (fyp.x - fym.x) / (2.0 * hy),
            (fxp.y - fxm.y) / (2.0 * hx),
            (fyp.y - fym.y) / (2.0 * hy),
        ))
    }

    /// `outer ∘ inner`. The Jacobian is exact (chain rule) when both factors
    /// have exact Jacobians.
    pub fn compose(outer: &PlanarMap, inner: &PlanarMap, name: impl Into<String>) -> PlanarMap {
        let (o, i) = (outer.clone(), inner.clone());
        let mut out = PlanarMap::new(name, inner.domain, move |p| {
            o.evaluate_unchecked(i.evaluate_unchecked(p)?)
        });
        if outer.has_exact_jacobian() && inner.has_exact_jacobian() {
            let (o, i) = (outer.clone(), inner.clone());
            out = out.with_jacobian(move |p| {
                let q = i.evaluate_unchecked(p)?;
                Ok(o.jacobian(q, DEFAULT_FD_STEP)?
                    .mul(&i.jacobian(p, DEFAULT_FD_STEP)?))
            });
        }
        out.params = inner.params.clone();
        out
    }

    /// `T²`.
    pub fn second_iterate(&self) -> PlanarMap {
        PlanarMap::compose(self, self, format!("{}^2", self.name))
    }
}

/// Why an orbit stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIter,
    Escape,
    Convergence,
    Singularity,
    /// Entered the strict interior of the quadrant named by the stopping rule.
    QuadrantEntry,
}

/// Stopping rule for [`orbit`]; every enabled criterion is checked after each step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StopRule {
    /// Stop once `|p_{k+1} − p_k| < tol`.
    pub convergence_tol: Option<f64>,
    /// Stop once an iterate leaves this window.
    pub escape_window: Option<Rect>,
    /// Stop once a coordinate exceeds this bound in absolute value.
    pub escape_bound: Option<f64>,
    /// Stop on entry into `int Q_k(origin)` for `k ∈ {2, 4}`, cleared by `margin`.
    pub quadrant: Option<QuadrantRule>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantRule {
    pub origin: Point2,
    pub quadrant: u8,
    pub margin: f64,
}

impl StopRule {
    pub fn convergence(tol: f64) -> Self {
        Self {
            convergence_tol: Some(tol),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub points: Vec<Point2>,
    pub terminated_by: Termination,
}

impl Orbit {
    pub fn last(&self) -> Point2 {
        *self.points.last().expect("orbit always holds its start")
    }
}

/// Iterates `map` from `p` until the stopping rule fires or `max_iter` steps.
pub fn orbit(map: &PlanarMap, p: Point2, max_iter: usize, stop: &StopRule) -> Orbit {
    let mut points = vec![p];
    let mut cur = p;
    for _ in 0..max_iter {
        let next = match map.evaluate(cur) {
            Ok(q) => q,
            Err(MapError::OutsideDomain { .. }) => {
                return Orbit {
                    points,
                    terminated_by: Termination::Escape,
                }
            }
            Err(_) => {
                return Orbit {
                    points,
                    terminated_by: Termination::Singularity,
                }
            }
        };
        points.push(next);
        if let Some(tol) = stop.convergence_tol {
            if (next - cur).norm() < tol {
                return Orbit {
                    points,
                    terminated_by: Termination::Convergence,
                };
            }
        }
        let escaped = stop.escape_window.is_some_and(|w| !w.contains(next))
            || stop.escape_bound.is_some_and(|b| next.max_abs() > b);
        if escaped {
            return Orbit {
                points,
                terminated_by: Termination::Escape,
            };
        }
        if let Some(q) = stop.quadrant {
            let entered = match q.quadrant {
                2 => in_interior_q2(q.origin, next, q.margin),
                4 => in_interior_q4(q.origin, next, q.margin),
                _ => false,
            };
            if entered {
                return Orbit {
                    points,
                    terminated_by: Termination::QuadrantEntry,
                };
            }
        }
        cur = next;
    }
    Orbit {
        points,
        terminated_by: Termination::MaxIter,
    }
}

/// Quasi-uniform cell-center grid with at least `samples` points over
/// `region`, unbounded ends clamped to the default sampling window.
pub fn sample_grid(region: &Rect, samples: usize) -> Vec<Point2> {
    let n = (samples.max(1) as f64).sqrt().ceil() as usize;
    region.clamp_to(&DEFAULT_SAMPLING_WINDOW).cell_centers(n, n)
}

/// A sample at which a Jacobian sign condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianWitness {
    pub point: Point2,
    pub jacobian: Matrix2,
}

/// Outcome of [`check_competitive`]. The verdicts certify the sign
/// configuration only at the listed samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitiveReport {
    pub competitive: bool,
    pub strongly: bool,
    pub samples: usize,
    pub evaluation_failures: usize,
    /// First sample violating the weak pattern, or, when the map is weakly
    /// competitive, the first sample violating the strict one.
    pub witness: Option<JacobianWitness>,
}

fn weak_pattern(m: &Matrix2) -> bool {
    m.a11 >= 0.0 && m.a12 <= 0.0 && m.a21 <= 0.0 && m.a22 >= 0.0
}

fn strict_pattern(m: &Matrix2) -> bool {
    m.a11 > 0.0 && m.a12 < 0.0 && m.a21 < 0.0 && m.a22 > 0.0
}

/// Samples the Jacobian sign configuration `(+ −; − +)` over `region`.
pub fn check_competitive(map: &PlanarMap, region: &Rect, samples: usize) -> CompetitiveReport {
    let pts = sample_grid(region, samples);
    let mut report = CompetitiveReport {
        competitive: true,
        strongly: true,
        samples: pts.len(),
        evaluation_failures: 0,
        witness: None,
    };
    let mut strict_witness = None;
    for p in pts {
        let m = match map.jacobian(p, DEFAULT_FD_STEP) {
            Ok(m) => m,
            Err(_) => {
                report.evaluation_failures += 1;
                continue;
            }
        };
        if !weak_pattern(&m) {
            if report.competitive {
                report.witness = Some(JacobianWitness { point: p, jacobian: m });
            }
            report.competitive = false;
        }
        if !strict_pattern(&m) {
            if strict_witness.is_none() {
                strict_witness = Some(JacobianWitness { point: p, jacobian: m });
            }
            report.strongly = false;
        }
    }
    if report.evaluation_failures == report.samples {
        report.competitive = false;
        report.strongly = false;
    }
    report.strongly &= report.competitive;
    if report.competitive && !report.strongly {
        report.witness = strict_witness;
    }
    report
}

/// Determinants with absolute value at most this are treated as sign-ambiguous.
pub const DET_TOL: f64 = 1e-12;
/// Random pairs drawn by the injectivity probe.
pub const INJECTIVITY_PAIRS: usize = 10_000;
/// Image distance below which two distinct points count as a collision.
pub const COLLISION_TOL: f64 = 1e-9;
const PROBE_SEED: u64 = 0x5EED_0C0D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OCondition {
    OPlus,
    OMinus,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OConditionReport {
    pub verdict: OCondition,
    pub min_det: f64,
    pub max_det: f64,
    pub samples: usize,
    pub pairs: usize,
    pub collisions: usize,
}

/// Newton iteration for `T(q) = T(p)` from `start`; returns the solution when
/// it stays inside `window` and matches the image to [`COLLISION_TOL`].
fn solve_same_image(map: &PlanarMap, p: Point2, start: Point2, window: &Rect) -> Option<Point2> {
    let target = map.evaluate_unchecked(p).ok()?;
    let slack = 1e-9 * window.diagonal();
    let mut q = start;
    for _ in 0..30 {
        let r = map.evaluate_unchecked(q).ok()? - target;
        if r.norm() < COLLISION_TOL {
            return window.contains_with_slack(q, slack).then_some(q);
        }
        let step = map.jacobian(q, DEFAULT_FD_STEP).ok()?.solve(r)?;
        q = q - step;
        if !q.is_finite() || !window.contains_with_slack(q, window.diagonal()) {
            return None;
        }
    }
    None
}

/// Sampled test of `det J_T > 0` (or `< 0`) together with a random-pair
/// injectivity probe.
pub fn check_o_condition(map: &PlanarMap, region: &Rect, samples: usize) -> OConditionReport {
    let pts = sample_grid(region, samples);
    let mut min_det = f64::INFINITY;
    let mut max_det = f64::NEG_INFINITY;
    let mut failed = false;
    for &p in &pts {
        match map.jacobian(p, DEFAULT_FD_STEP) {
            Ok(m) => {
                let d = m.det();
                min_det = min_det.min(d);
                max_det = max_det.max(d);
            }
            Err(_) => failed = true,
        }
    }

    let window = region.clamp_to(&DEFAULT_SAMPLING_WINDOW);
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut draw = || {
        Point2::new(
            rng.gen_range(window.x_lo..=window.x_hi),
            rng.gen_range(window.y_lo..=window.y_hi),
        )
    };
    let mut collisions = 0;
    for _ in 0..INJECTIVITY_PAIRS {
        let (p, start) = (draw(), draw());
        if let Some(q) = solve_same_image(map, p, start, &window) {
            if q.dist(p) > 1e-6 {
                collisions += 1;
            }
        }
    }

    let verdict = if failed || collisions > 0 {
        OCondition::Inconclusive
    } else if min_det > DET_TOL {
        OCondition::OPlus
    } else if max_det < -DET_TOL {
        OCondition::OMinus
    } else {
        OCondition::Inconclusive
    };
    OConditionReport {
        verdict,
        min_det,
        max_det,
        samples: pts.len(),
        pairs: INJECTIVITY_PAIRS,
        collisions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{default_example, ExampleId};
    use crate::geometry::le_se;
    use proptest::prelude::*;

    fn shear() -> PlanarMap {
        PlanarMap::affine("shear", Matrix2::new(1.0, 1.0, 0.0, 1.0), Point2::ORIGIN)
    }

    #[test]
    fn identity_jacobian_and_competitiveness() {
        let id = PlanarMap::identity();
        assert_eq!(id.jacobian(Point2::new(3.0, -1.0), 1e-6).unwrap(), Matrix2::IDENTITY);
        let fd = id.jacobian_fd(Point2::new(3.0, -1.0), 1e-6).unwrap();
        assert!(fd.max_abs_diff(&Matrix2::IDENTITY) < 1e-9);
        let r = check_competitive(&id, &Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(), 16);
        assert!(r.competitive);
        assert!(!r.strongly);
        assert!(r.witness.is_some());
    }

    #[test]
    fn positive_off_diagonal_is_not_competitive() {
        let r = check_competitive(&shear(), &Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(), 9);
        assert!(!r.competitive && !r.strongly);
        let w = r.witness.unwrap();
        assert_eq!(w.jacobian.a12, 1.0);
    }

    #[test]
    fn swap_map_is_o_minus_candidate() {
        let swap = PlanarMap::affine("swap", Matrix2::new(0.0, 1.0, 1.0, 0.0), Point2::ORIGIN);
        let r = check_o_condition(&swap, &Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(), 25);
        assert_eq!(r.verdict, OCondition::OMinus);
        assert_eq!(r.collisions, 0);
    }

    #[test]
    fn non_injective_map_is_inconclusive() {
        // (x, y) ↦ (x², y + x²) has det = 2x > 0 on x > 0 but folds (±x, y) together
        let fold = PlanarMap::new("fold", Rect::whole_plane(), |p| {
            Ok(Point2::new(p.x * p.x, p.y + p.x * p.x))
        });
        let r = check_o_condition(&fold, &Rect::new(0.1, 1.0, -1.0, 1.0).unwrap(), 16);
        assert_eq!(r.verdict, OCondition::OPlus);
        let r = check_o_condition(&fold, &Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 16);
        assert_eq!(r.verdict, OCondition::Inconclusive);
        assert!(r.collisions > 0);
    }

    #[test]
    fn evaluate_checks_domain_and_poles() {
        let m = PlanarMap::new("pole", Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), |p| {
            Ok(Point2::new(checked_div(1.0, p.x, p)?, p.y))
        });
        assert!(matches!(
            m.evaluate(Point2::new(0.0, 0.5)),
            Err(MapError::Singularity { .. })
        ));
        assert!(matches!(
            m.evaluate(Point2::new(2.0, 0.5)),
            Err(MapError::OutsideDomain { .. })
        ));
        assert!(m.evaluate(Point2::new(0.5, 0.5)).is_ok());
    }

    #[test]
    fn fixed_point_orbit_is_constant() {
        let contraction = PlanarMap::affine("half", Matrix2::diag(0.5, 0.5), Point2::new(1.0, 1.0));
        let o = orbit(&contraction, Point2::new(2.0, 2.0), 100, &StopRule::convergence(1e-12));
        assert_eq!(o.terminated_by, Termination::Convergence);
        assert!(o.points.iter().all(|&p| p == Point2::new(2.0, 2.0)));
    }

    #[test]
    fn orbit_reports_escape_and_quadrant_entry() {
        let expand = PlanarMap::affine("double", Matrix2::diag(2.0, 2.0), Point2::ORIGIN);
        let stop = StopRule {
            escape_bound: Some(1e3),
            ..StopRule::default()
        };
        let o = orbit(&expand, Point2::new(1.0, 1.0), 100, &stop);
        assert_eq!(o.terminated_by, Termination::Escape);
        assert_eq!(o.points.len(), 11);

        let stop = StopRule {
            quadrant: Some(QuadrantRule {
                origin: Point2::ORIGIN,
                quadrant: 4,
                margin: 0.5,
            }),
            ..StopRule::default()
        };
        let o = orbit(&expand, Point2::new(0.1, -0.1), 100, &stop);
        assert_eq!(o.terminated_by, Termination::QuadrantEntry);
        assert_eq!(o.last(), Point2::new(0.8, -0.8));
    }

    #[test]
    fn composition_chain_rule_matches_fd() {
        let m = PlanarMap::new("sq", Rect::whole_plane(), |p| Ok(Point2::new(p.x * p.y, p.x + p.y * p.y)))
            .with_jacobian(|p| Ok(Matrix2::new(p.y, p.x, 1.0, 2.0 * p.y)));
        let t2 = m.second_iterate();
        assert!(t2.has_exact_jacobian());
        let p = Point2::new(0.3, 0.7);
        let exact = t2.jacobian(p, 1e-6).unwrap();
        let fd = t2.jacobian_fd(p, 1e-6).unwrap();
        assert!(exact.max_abs_diff(&fd) < 1e-8);
    }

    fn strong_examples() -> impl Strategy<Value = ExampleId> {
        prop::sample::select(vec![ExampleId::Ex1, ExampleId::Ex2, ExampleId::Ex4, ExampleId::Ex5])
    }

    #[test]
    fn strong_examples_pass_the_sampled_check() {
        let region = Rect::new(0.05, 3.0, 0.05, 4.0).unwrap();
        for id in [ExampleId::Ex1, ExampleId::Ex2, ExampleId::Ex4, ExampleId::Ex5] {
            assert!(check_competitive(&default_example(id).map, &region, 400).strongly, "{id}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn se_comparable_pairs_map_to_strictly_comparable_images(
            id in strong_examples(),
            x in 0.05f64..3.0,
            y in 0.05f64..3.0,
            dx in 1e-3f64..1.0,
            dy in 1e-3f64..1.0,
        ) {
            let map = default_example(id).map;
            let (p, q) = (Point2::new(x, y + dy), Point2::new(x + dx, y));
            let (tp, tq) = (map.evaluate(p).unwrap(), map.evaluate(q).unwrap());
            prop_assert!(le_se(tp, tq));
            prop_assert!(tp.x < tq.x && tp.y > tq.y);
        }

        #[test]
        fn o_plus_orbits_are_eventually_monotone(
            id in prop::sample::select(vec![ExampleId::Ex1, ExampleId::Ex5]),
            x in 0.05f64..3.0,
            y in 0.05f64..3.0,
        ) {
            let sys = default_example(id);
            let window = sys.default_window();
            prop_assume!(check_o_condition(&sys.map, &window, 400).verdict == OCondition::OPlus);
            let o = orbit(&sys.map, Point2::new(x, y), 500, &StopRule::default());
            let sign = |d: f64| if d.abs() <= 1e-12 { 0 } else { d.signum() as i32 };
            for coord in [|p: &Point2| p.x, |p: &Point2| p.y] {
                let signs: Vec<i32> = o
                    .points
                    .windows(2)
                    .map(|w| sign(coord(&w[1]) - coord(&w[0])))
                    .filter(|s| *s != 0)
                    .collect();
                let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
                prop_assert!(changes <= 1, "{} sign changes", changes);
            }
        }
    }
}
