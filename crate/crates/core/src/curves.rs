//! The increasing invariant curve through a fixed point, traced as the
//! boundary between the two basin components, and the decreasing unstable
//! curve of a fixed point with an expanding direction.

use crate::fixedpoints::{
    check_invariant_curve_hypotheses, delta_parts, find_fixed_point, find_period_two, FixedPointRecord, PointKind,
};
use crate::geometry::{in_interior_q2, in_interior_q4, Matrix2, Point2, Rect};
use crate::map::{PlanarMap, DEFAULT_FD_STEP};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideMode {
    /// Decide by the first strict entry into `int Q2(x̄)` or `int Q4(x̄)`.
    QuadrantEscape,
    /// Run to a limit equilibrium and compare it with `x̄`.
    LimitEquilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideLabel {
    Minus,
    Plus,
    Band,
    Undecided,
}

impl SideLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SideLabel::Minus => "minus",
            SideLabel::Plus => "plus",
            SideLabel::Band => "band",
            SideLabel::Undecided => "undecided",
        }
    }
}

impl fmt::Display for SideLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideOptions {
    pub mode: SideMode,
    pub epsilon_margin: f64,
    pub max_iter: usize,
    /// Step length below which an orbit counts as converged, relative to
    /// `max(1, |p|)`.
    pub convergence_tol: f64,
    pub escape_bound: f64,
}

pub const DEFAULT_MARGIN_FACTOR: f64 = 1e-4;
pub const DEFAULT_SIDE_MAX_ITER: usize = 100_000;
pub const ESCAPE_BOUND: f64 = 1e6;

impl SideOptions {
    /// Margin `1e-4 · diag(window)`.
    pub fn for_window(window: &Rect, mode: SideMode) -> Self {
        SideOptions {
            mode,
            epsilon_margin: DEFAULT_MARGIN_FACTOR * window.diagonal(),
            max_iter: DEFAULT_SIDE_MAX_ITER,
            convergence_tol: 1e-13,
            escape_bound: ESCAPE_BOUND,
        }
    }

    /// Options for locating the boundary itself: a zero margin in quadrant
    /// mode, a roundoff-level margin and tight convergence in limit mode.
    pub fn for_bisection(mode: SideMode) -> Self {
        SideOptions {
            mode,
            epsilon_margin: match mode {
                SideMode::QuadrantEscape => 0.0,
                SideMode::LimitEquilibrium => 1e-12,
            },
            max_iter: DEFAULT_SIDE_MAX_ITER,
            convergence_tol: 1e-14,
            escape_bound: ESCAPE_BOUND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideVerdict {
    pub label: SideLabel,
    pub iterations_used: usize,
    /// The orbit hit a singularity or left the domain.
    pub singular: bool,
}

fn converged(step: f64, q: Point2, tol: f64) -> bool {
    step < tol * q.norm().max(1.0)
}

/// Which component of the complement of the curve through `fp` the point
/// `p` belongs to.
pub fn classify_side(map: &PlanarMap, p: Point2, fp: Point2, opts: &SideOptions) -> SideVerdict {
    let eps = opts.epsilon_margin;
    let verdict = |label, n, singular| SideVerdict {
        label,
        iterations_used: n,
        singular,
    };
    let mut q = p;
    for n in 0..=opts.max_iter {
        if opts.mode == SideMode::QuadrantEscape {
            if in_interior_q2(fp, q, eps) {
                return verdict(SideLabel::Minus, n, false);
            }
            if in_interior_q4(fp, q, eps) {
                return verdict(SideLabel::Plus, n, false);
            }
        }
        let next = match map.evaluate(q) {
            Ok(next) if next.is_finite() => next,
            _ => return verdict(SideLabel::Undecided, n, true),
        };
        if next.max_abs() > opts.escape_bound {
            return verdict(SideLabel::Undecided, n + 1, false);
        }
        if converged((next - q).norm(), q, opts.convergence_tol) {
            return verdict(compare_limit(next, fp, eps, opts.mode), n + 1, false);
        }
        q = next;
    }
    verdict(SideLabel::Undecided, opts.max_iter, false)
}

fn compare_limit(limit: Point2, fp: Point2, eps: f64, mode: SideMode) -> SideLabel {
    let d = limit - fp;
    if d.norm() <= eps.max(1e-12 * fp.norm().max(1.0)) {
        return SideLabel::Band;
    }
    match mode {
        // an undecided orbit settled elsewhere
        SideMode::QuadrantEscape => SideLabel::Undecided,
        SideMode::LimitEquilibrium => {
            if d.x <= eps && d.y >= -eps {
                SideLabel::Minus
            } else if d.x >= -eps && d.y <= eps {
                SideLabel::Plus
            } else {
                SideLabel::Undecided
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Endpoint {
    DomainBoundary,
    FixedPoint { point: Point2 },
    PeriodTwoPair { point: Point2, partner: Point2 },
    Truncated,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::DomainBoundary => write!(f, "domain_boundary"),
            Endpoint::FixedPoint { point } => write!(f, "fixed_point {point}"),
            Endpoint::PeriodTwoPair { point, partner } => write!(f, "period_two_pair {point} {partner}"),
            Endpoint::Truncated => write!(f, "truncated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCurve {
    pub vertices: Vec<Point2>,
    pub monotonicity: Monotonicity,
    pub endpoint_left: Endpoint,
    pub endpoint_right: Endpoint,
}

impl MonotoneCurve {
    /// Strict monotonicity of consecutive vertices; returns the first
    /// offending index.
    pub fn check_monotone(&self) -> Result<(), usize> {
        let ok = |a: &Point2, b: &Point2| match self.monotonicity {
            Monotonicity::Increasing => a.x < b.x && a.y < b.y,
            Monotonicity::Decreasing => a.x < b.x && a.y > b.y,
        };
        match self.vertices.windows(2).position(|w| !ok(&w[0], &w[1])) {
            Some(i) => Err(i + 1),
            None => Ok(()),
        }
    }

    /// Piecewise-linear interpolant at `x`, if within the vertex span.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        let v = &self.vertices;
        let first = v.first()?;
        let last = v.last()?;
        if x < first.x || x > last.x {
            return None;
        }
        let k = v.partition_point(|p| p.x < x);
        if k == 0 {
            return Some(first.y);
        }
        let (a, b) = (v[k - 1], v[k]);
        Some(a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x))
    }

    /// Least-squares slope through the `k` vertices nearest `p`.
    pub fn slope_near(&self, p: Point2, k: usize) -> Option<f64> {
        let mut near: Vec<Point2> = self.vertices.clone();
        near.sort_by(|a, b| a.dist(p).total_cmp(&b.dist(p)));
        near.truncate(k);
        if near.len() < 2 {
            return None;
        }
        let n = near.len() as f64;
        let mx = near.iter().map(|q| q.x).sum::<f64>() / n;
        let my = near.iter().map(|q| q.y).sum::<f64>() / n;
        let sxx: f64 = near.iter().map(|q| (q.x - mx).powi(2)).sum();
        let sxy: f64 = near.iter().map(|q| (q.x - mx) * (q.y - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("invariant-curve hypothesis failed: {0}")]
    Hypothesis(&'static str),
    #[error("window must be bounded with positive area: {0}")]
    Window(Rect),
    #[error("no expanding eigenvalue (μ = {0})")]
    NotExpanding(f64),
    #[error("expanding eigenvector {0} lies along a coordinate axis")]
    AxisAligned(Point2),
    #[error("the point is not a fixed point")]
    NotFixed,
    #[error("no column produced a vertex")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    pub columns: usize,
    /// Number of geometrically refined columns on each side of `x̄`.
    pub refine_levels: usize,
    pub probes: usize,
    pub curve_tol: f64,
    pub side: SideOptions,
}

impl CurveOptions {
    pub fn new(mode: SideMode) -> Self {
        CurveOptions {
            columns: 256,
            refine_levels: 12,
            probes: 17,
            curve_tol: 1e-8,
            side: SideOptions::for_bisection(mode),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ColumnOutcome {
    /// Bisection bracket `[plus, minus]` narrower than the tolerance.
    Vertex { y: f64, plus: f64, minus: f64 },
    /// Every probe was minus: the curve passes below the window here.
    AllMinus,
    /// Every probe was plus: the curve passes above the window here.
    AllPlus,
    /// No minus/plus transition among the probes.
    NoBracket,
    /// An undecided point interrupted the bisection.
    Undecided { y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColumnReport {
    pub x: f64,
    pub outcome: ColumnOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StableTrace {
    pub curve: MonotoneCurve,
    pub columns: Vec<ColumnReport>,
    /// Vertices removed to keep the polyline strictly increasing.
    pub dropped: usize,
}

impl StableTrace {
    pub fn skipped_columns(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| matches!(c.outcome, ColumnOutcome::NoBracket | ColumnOutcome::Undecided { .. }))
            .count()
    }
}

/// Abscissae: a uniform grid over the window (edges included) plus
/// geometric refinement on both sides of `fp.x`.
fn column_abscissae(window: &Rect, fp: Point2, opts: &CurveOptions) -> Vec<f64> {
    let n = opts.columns.max(2);
    let w = window.width();
    let mut xs: Vec<f64> = (0..n).map(|k| window.x_lo + w * k as f64 / (n - 1) as f64).collect();
    let h = w / (n - 1) as f64;
    for k in 1..=opts.refine_levels {
        let d = h * f64::powi(0.5, k as i32);
        xs.extend([fp.x - d, fp.x + d]);
    }
    xs.retain(|x| *x >= window.x_lo && *x <= window.x_hi && *x != fp.x);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

struct Column<'a> {
    map: &'a PlanarMap,
    fp: Point2,
    side: &'a SideOptions,
    tol: f64,
}

impl Column<'_> {
    fn label(&self, x: f64, y: f64) -> SideLabel {
        classify_side(self.map, Point2::new(x, y), self.fp, self.side).label
    }

    /// Shrinks `[plus, minus]` in `y` (or along `x` on a horizontal edge).
    fn bisect(&self, mut plus: f64, mut minus: f64, at: impl Fn(f64) -> SideLabel) -> Result<f64, f64> {
        while (minus - plus).abs() > self.tol {
            let mid = 0.5 * (plus + minus);
            match at(mid) {
                SideLabel::Minus => minus = mid,
                SideLabel::Plus => plus = mid,
                SideLabel::Band => return Ok(mid),
                SideLabel::Undecided => return Err(mid),
            }
        }
        Ok(0.5 * (plus + minus))
    }

    fn vertex(&self, x: f64, plus: f64, minus: f64) -> ColumnOutcome {
        match self.bisect(plus, minus, |y| self.label(x, y)) {
            Ok(y) => ColumnOutcome::Vertex { y, plus, minus },
            Err(y) => ColumnOutcome::Undecided { y },
        }
    }

    /// A local bracket around the tangent-line prediction.
    fn seeded(&self, x: f64, slope: f64, window: &Rect) -> Option<ColumnOutcome> {
        let dx = (x - self.fp.x).abs();
        let pred = self.fp.y + slope * (x - self.fp.x);
        let r = 4.0 * dx * (1.0 + slope.abs());
        let (lo, hi) = (pred - r, pred + r);
        if lo < window.y_lo || hi > window.y_hi {
            return None;
        }
        (self.label(x, lo) == SideLabel::Plus && self.label(x, hi) == SideLabel::Minus).then(|| self.vertex(x, lo, hi))
    }

    fn scan(&self, x: f64, window: &Rect, probes: usize) -> ColumnOutcome {
        let ys: Vec<f64> = (0..probes)
            .map(|k| window.y_lo + window.height() * k as f64 / (probes - 1) as f64)
            .collect();
        let labels: Vec<SideLabel> = ys.iter().map(|&y| self.label(x, y)).collect();
        if labels.iter().all(|l| *l == SideLabel::Minus) {
            return ColumnOutcome::AllMinus;
        }
        if labels.iter().all(|l| *l == SideLabel::Plus) {
            return ColumnOutcome::AllPlus;
        }
        if let Some(k) = labels.iter().position(|l| *l == SideLabel::Band) {
            return ColumnOutcome::Vertex {
                y: ys[k],
                plus: ys[k],
                minus: ys[k],
            };
        }
        // topmost plus directly below a minus
        match (1..probes)
            .rev()
            .find(|&k| labels[k - 1] == SideLabel::Plus && labels[k] == SideLabel::Minus)
        {
            Some(k) => self.vertex(x, ys[k - 1], ys[k]),
            None => ColumnOutcome::NoBracket,
        }
    }
}

fn bounded_window(window: &Rect) -> Result<(), CurveError> {
    if window.is_bounded() && window.width() > 0.0 && window.height() > 0.0 {
        Ok(())
    } else {
        Err(CurveError::Window(*window))
    }
}

/// Traces the increasing invariant curve through `fp` as the minus/plus
/// boundary, column by column.
pub fn trace_stable_curve(
    map: &PlanarMap,
    fp: &FixedPointRecord,
    window: &Rect,
    opts: &CurveOptions,
) -> Result<StableTrace, CurveError> {
    bounded_window(window)?;
    let hyp = check_invariant_curve_hypotheses(map, fp, window);
    if let Some(failed) = hyp.first_failure() {
        return Err(CurveError::Hypothesis(failed));
    }
    let v = fp.eigen.v_lambda.expect("checked by hypotheses");
    let slope = v.y / v.x;
    let c = Column {
        map,
        fp: fp.location,
        side: &opts.side,
        tol: opts.curve_tol,
    };
    let xs = column_abscissae(window, fp.location, opts);
    let near = 4.0 * window.width() / (opts.columns.max(2) - 1) as f64;
    let mut columns: Vec<ColumnReport> = xs
        .par_iter()
        .map(|&x| {
            let seeded = if (x - fp.location.x).abs() < near {
                c.seeded(x, slope, window)
            } else {
                None
            };
            ColumnReport {
                x,
                outcome: seeded.unwrap_or_else(|| c.scan(x, window, opts.probes.max(2))),
            }
        })
        .collect();
    if window.contains(fp.location) {
        columns.push(ColumnReport {
            x: fp.location.x,
            outcome: ColumnOutcome::Vertex {
                y: fp.location.y,
                plus: fp.location.y,
                minus: fp.location.y,
            },
        });
        columns.sort_by(|a, b| a.x.total_cmp(&b.x));
    }
    let mut vertices: Vec<Point2> = columns
        .iter()
        .filter_map(|col| match col.outcome {
            ColumnOutcome::Vertex { y, .. } => Some(Point2::new(col.x, y)),
            _ => None,
        })
        .collect();
    vertices.extend(edge_crossings(&c, &columns, window));
    vertices.sort_by(|a, b| a.x.total_cmp(&b.x));
    let before = vertices.len();
    let vertices = strictly_increasing(vertices, fp.location);
    if vertices.is_empty() {
        return Err(CurveError::Empty);
    }
    let dropped = before - vertices.len();
    let mut curve = MonotoneCurve {
        vertices,
        monotonicity: Monotonicity::Increasing,
        endpoint_left: Endpoint::Truncated,
        endpoint_right: Endpoint::Truncated,
    };
    (curve.endpoint_left, curve.endpoint_right) = endpoint_analysis(map, &curve, window);
    Ok(StableTrace {
        curve,
        columns,
        dropped,
    })
}

/// Where the curve leaves through the top or bottom edge between a vertex
/// column and a neighboring column lying wholly on one side.
fn edge_crossings(c: &Column, columns: &[ColumnReport], window: &Rect) -> Vec<Point2> {
    let mut out = Vec::new();
    for w in columns.windows(2) {
        for (a, b) in [(w[0], w[1]), (w[1], w[0])] {
            if !matches!(a.outcome, ColumnOutcome::Vertex { .. }) {
                continue;
            }
            // above the curve is minus, below is plus
            let edge_y = match b.outcome {
                ColumnOutcome::AllPlus => window.y_hi,
                ColumnOutcome::AllMinus => window.y_lo,
                _ => continue,
            };
            // the vertex column is minus at the top edge and plus at the bottom
            let (plus_x, minus_x) = if edge_y == window.y_hi { (b.x, a.x) } else { (a.x, b.x) };
            if let Ok(x) = c.bisect(plus_x, minus_x, |x| c.label(x, edge_y)) {
                out.push(Point2::new(x, edge_y));
            }
        }
    }
    out
}

/// Greedy filter keeping vertices that strictly increase in both
/// coordinates, anchored at `keep` when present.
fn strictly_increasing(vertices: Vec<Point2>, keep: Point2) -> Vec<Point2> {
    let anchor = vertices.iter().position(|p| *p == keep);
    let mut out: Vec<Point2> = Vec::with_capacity(vertices.len());
    match anchor {
        Some(a) => {
            let mut left: Vec<Point2> = Vec::new();
            for p in vertices[..a].iter().rev() {
                if left.last().map_or(p.x < keep.x && p.y < keep.y, |q| p.x < q.x && p.y < q.y) {
                    left.push(*p);
                }
            }
            out.extend(left.into_iter().rev());
            out.push(keep);
            for p in &vertices[a + 1..] {
                if out.last().is_some_and(|q| q.x < p.x && q.y < p.y) {
                    out.push(*p);
                }
            }
        }
        None => {
            for p in vertices {
                if out.last().is_none_or(|q| q.x < p.x && q.y < p.y) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Locates the curve in the column through `x`, first in a narrow bracket
/// around `y_hint`, then by the full probe scan.
pub fn curve_ordinate(
    map: &PlanarMap,
    fp: Point2,
    window: &Rect,
    x: f64,
    y_hint: f64,
    opts: &CurveOptions,
) -> Option<f64> {
    let c = Column {
        map,
        fp,
        side: &opts.side,
        tol: opts.curve_tol,
    };
    let r = 100.0 * opts.curve_tol;
    if c.label(x, y_hint - r) == SideLabel::Plus && c.label(x, y_hint + r) == SideLabel::Minus {
        if let ColumnOutcome::Vertex { y, .. } = c.vertex(x, y_hint - r, y_hint + r) {
            return Some(y);
        }
    }
    match c.scan(x, window, opts.probes.max(2)) {
        ColumnOutcome::Vertex { y, .. } => Some(y),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveProperties {
    pub monotone: bool,
    /// Least-squares slope over the five vertices nearest `x̄`.
    pub fitted_slope: Option<f64>,
    pub eigen_slope: f64,
    pub tangent_ok: bool,
    /// Largest vertical distance from `T(p)` to the curve over sampled vertices.
    pub invariance_gap: f64,
    pub invariance_samples: usize,
    pub invariance_ok: bool,
    /// Sampled vertex orbits reaching the `1e-5` ball around `x̄`.
    pub converged: usize,
    pub convergence_samples: usize,
    pub max_convergence_iterations: usize,
}

impl CurveProperties {
    pub fn all(&self) -> bool {
        self.monotone
            && self.tangent_ok
            && self.invariance_ok
            && self.convergence_samples > 0
            && self.converged == self.convergence_samples
    }
}

fn spread<T: Copy>(items: &[T], k: usize) -> Vec<T> {
    if items.len() <= k {
        return items.to_vec();
    }
    (0..k).map(|i| items[i * (items.len() - 1) / (k - 1).max(1)]).collect()
}

/// Monotonicity, tangency to `v_λ` (5% on the slope), invariance of 20
/// sampled vertices within `10·curve_tol`, and convergence of 10 vertex
/// orbits to within `1e-5` of `x̄`.
pub fn verify_stable_curve(
    map: &PlanarMap,
    fp: &FixedPointRecord,
    trace: &StableTrace,
    window: &Rect,
    opts: &CurveOptions,
) -> CurveProperties {
    let curve = &trace.curve;
    let x0 = fp.location;
    let v = fp.eigen.v_lambda.unwrap_or(Point2::new(1.0, 1.0));
    let eigen_slope = v.y / v.x;
    let fitted_slope = curve.slope_near(x0, 5);
    let tangent_ok = fitted_slope.is_some_and(|s| (s / eigen_slope - 1.0).abs() <= 0.05);
    let images: Vec<(Point2, Point2)> = spread(&curve.vertices, 20)
        .into_iter()
        .filter_map(|p| Some((p, map.evaluate(p).ok()?)))
        .filter(|(_, q)| window.contains(*q))
        .collect();
    let gaps: Vec<Option<f64>> = images
        .par_iter()
        .map(|(_, q)| curve_ordinate(map, x0, window, q.x, q.y, opts).map(|y| (q.y - y).abs()))
        .collect();
    let invariance_gap = gaps.iter().map(|g| g.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let starts = spread(&curve.vertices, 10);
    let iterations: Vec<Option<usize>> = starts
        .par_iter()
        .map(|&p| {
            let mut q = p;
            for n in 0..=1_000_000 {
                if q.dist(x0) < 1e-5 {
                    return Some(n);
                }
                q = map.evaluate(q).ok()?;
            }
            None
        })
        .collect();
    CurveProperties {
        monotone: curve.check_monotone().is_ok(),
        fitted_slope,
        eigen_slope,
        tangent_ok,
        invariance_gap,
        invariance_samples: images.len(),
        invariance_ok: !images.is_empty() && invariance_gap <= 10.0 * opts.curve_tol,
        converged: iterations.iter().flatten().count(),
        convergence_samples: starts.len(),
        max_convergence_iterations: iterations.iter().flatten().copied().max().unwrap_or(0),
    }
}

pub const ENDPOINT_BOUNDARY_TOL: f64 = 1e-6;
pub const ENDPOINT_RESIDUAL_TOL: f64 = 1e-6;

fn classify_endpoint(map: &PlanarMap, p: Point2, region: &Rect) -> Endpoint {
    if region.boundary_distance(p) <= ENDPOINT_BOUNDARY_TOL {
        return Endpoint::DomainBoundary;
    }
    let Ok(tp) = map.evaluate(p) else { return Endpoint::Truncated };
    if tp.dist(p) < ENDPOINT_RESIDUAL_TOL {
        return Endpoint::FixedPoint { point: p };
    }
    match map.evaluate(tp) {
        Ok(ttp) if ttp.dist(p) < ENDPOINT_RESIDUAL_TOL => Endpoint::PeriodTwoPair { point: p, partner: tp },
        _ => Endpoint::Truncated,
    }
}

/// Labels of the first and last vertex.
pub fn endpoint_analysis(map: &PlanarMap, curve: &MonotoneCurve, region: &Rect) -> (Endpoint, Endpoint) {
    match (curve.vertices.first(), curve.vertices.last()) {
        (Some(a), Some(b)) => (classify_endpoint(map, *a, region), classify_endpoint(map, *b, region)),
        _ => (Endpoint::Truncated, Endpoint::Truncated),
    }
}

pub const UNSTABLE_SEEDS: usize = 64;
pub const DEFAULT_SEED_RADIUS: f64 = 1e-4;
pub const UNSTABLE_DEDUP: f64 = 1e-6;

/// Forward images of a short segment along `v_μ` through `fp`, collected
/// into a decreasing polyline clipped to `window`.
///
/// A non-hyperbolic `μ = 1` is accepted: seeds on the side where orbits
/// drift back toward `fp` are dropped as soon as they do, while the other
/// side is followed for up to `steps` iterations or until it converges.
pub fn trace_unstable_curve(
    map: &PlanarMap,
    fp: &FixedPointRecord,
    steps: usize,
    seed_radius: f64,
    window: &Rect,
) -> Result<MonotoneCurve, CurveError> {
    bounded_window(window)?;
    if fp.kind != PointKind::Fixed || fp.residual > 1e-8 {
        return Err(CurveError::NotFixed);
    }
    let e = &fp.eigen;
    if !(e.real_distinct && e.mu >= 1.0 - crate::fixedpoints::HYPERBOLICITY_TOL) {
        return Err(CurveError::NotExpanding(e.mu));
    }
    let v = e.v_mu.expect("real distinct eigenvalues");
    if !(v.x * v.y < 0.0) {
        return Err(CurveError::AxisAligned(v));
    }
    let x0 = fp.location;
    let half = (UNSTABLE_SEEDS / 2) as f64;
    let seeds: Vec<Point2> = (1..=UNSTABLE_SEEDS / 2)
        .flat_map(|k| {
            let s = seed_radius * k as f64 / half;
            [x0 + v * s, x0 - v * s]
        })
        .collect();
    let orbits: Vec<Vec<Point2>> = seeds
        .par_iter()
        .map(|&s| {
            let r0 = s.dist(x0);
            let mut pts = vec![s];
            let mut q = s;
            for _ in 0..steps {
                let next = match map.evaluate(q) {
                    Ok(next) if next.is_finite() && window.contains(next) => next,
                    _ => break,
                };
                if next.dist(x0) < (1.0 - 1e-3) * r0 {
                    break;
                }
                let step = (next - q).norm();
                q = next;
                if pts.last().is_some_and(|p| p.dist(q) >= UNSTABLE_DEDUP) {
                    pts.push(q);
                }
                if converged(step, q, 1e-14) {
                    pts.push(q);
                    break;
                }
            }
            pts
        })
        .collect();
    let mut pts: Vec<Point2> = orbits.into_iter().flatten().filter(|p| window.contains(*p)).collect();
    pts.push(x0);
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(b.y.total_cmp(&a.y)));
    let mut vertices: Vec<Point2> = Vec::with_capacity(pts.len());
    for p in &pts {
        match vertices.last() {
            Some(q) if q.dist(*p) < UNSTABLE_DEDUP => {}
            Some(q) if !(q.x < p.x && q.y > p.y) => {}
            _ => vertices.push(*p),
        }
    }
    // keep the extreme point of the final cluster
    if let (Some(last), Some(end)) = (vertices.last_mut(), pts.last()) {
        if last.dist(*end) < UNSTABLE_DEDUP && last.x < end.x && last.y >= end.y {
            *last = *end;
        }
    }
    let mut curve = MonotoneCurve {
        vertices,
        monotonicity: Monotonicity::Decreasing,
        endpoint_left: Endpoint::Truncated,
        endpoint_right: Endpoint::Truncated,
    };
    (curve.endpoint_left, curve.endpoint_right) = endpoint_analysis(map, &curve, window);
    Ok(curve)
}

/// Sampled verdict on one sufficient condition for boundary endpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub holds: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEndpointReport {
    pub starts: usize,
    pub det_at_fixed_point: f64,
    pub fixed_points_in_delta: Vec<Point2>,
    pub period_two_in_delta: Vec<Point2>,
    pub preimages_in_delta: Vec<Point2>,
    /// No fixed points nor minimal period-two points in `Δ`.
    pub i: ConditionVerdict,
    /// No fixed points in `Δ`, `det J > 0`, no preimages of `x̄` in `Δ`.
    pub ii: ConditionVerdict,
    /// No period-two points in `Δ`, `det J < 0`, no preimages of `x̄` in `Δ`.
    pub iii: ConditionVerdict,
}

impl BoundaryEndpointReport {
    pub fn any(&self) -> bool {
        self.i.holds || self.ii.holds || self.iii.holds
    }
}

/// Strict membership in `Δ`, clearing roundoff-level ties with `x̄`.
fn in_delta(fp: Point2, region: &Rect, p: Point2) -> bool {
    let m = 1e-8 * fp.norm().max(1.0);
    region.contains(p) && ((p.x > fp.x + m && p.y > fp.y + m) || (p.x < fp.x - m && p.y < fp.y - m))
}

fn push_unique(list: &mut Vec<Point2>, p: Point2) {
    if list.iter().all(|q| q.dist(p) > 1e-6) {
        list.push(p);
    }
}

/// Searches `Δ` by Newton from a grid of `grid × grid` starts per part for
/// fixed points, minimal period-two points and preimages of `x̄`, then
/// combines the findings with the sign of `det J_T(x̄)`.
pub fn check_boundary_endpoint_conditions(
    map: &PlanarMap,
    fp: &FixedPointRecord,
    region: &Rect,
    grid: usize,
) -> Result<BoundaryEndpointReport, CurveError> {
    if fp.kind != PointKind::Fixed {
        return Err(CurveError::NotFixed);
    }
    let x0 = fp.location;
    let det = map
        .jacobian(x0, DEFAULT_FD_STEP)
        .map(|j| j.det())
        .unwrap_or(f64::NAN);
    let starts: Vec<Point2> = delta_parts(x0, region)
        .iter()
        .flat_map(|r| r.cell_centers(grid, grid))
        .collect();
    // zeros of T(p) − x̄ are fixed points of p ↦ p − (T(p) − x̄)
    let shifted = {
        let m = map.clone();
        let mj = map.clone();
        PlanarMap::new("preimage", map.domain(), move |p| Ok(p - (m.evaluate(p)? - x0))).with_jacobian(move |p| {
            let j = mj.jacobian(p, DEFAULT_FD_STEP)?;
            Ok(Matrix2::new(1.0 - j.a11, -j.a12, -j.a21, 1.0 - j.a22))
        })
    };
    let found: Vec<(Option<Point2>, Option<Point2>, Option<Point2>)> = starts
        .par_iter()
        .map(|&s| {
            let fixed = find_fixed_point(map, s).ok().map(|r| r.location);
            let two = find_period_two(map, s).ok().map(|r| r.location);
            let pre = find_fixed_point(&shifted, s).ok().map(|r| r.location);
            (fixed, two, pre)
        })
        .collect();
    let mut report = BoundaryEndpointReport {
        starts: starts.len(),
        det_at_fixed_point: det,
        fixed_points_in_delta: Vec::new(),
        period_two_in_delta: Vec::new(),
        preimages_in_delta: Vec::new(),
        i: ConditionVerdict { holds: false, reason: String::new() },
        ii: ConditionVerdict { holds: false, reason: String::new() },
        iii: ConditionVerdict { holds: false, reason: String::new() },
    };
    for (fixed, two, pre) in found {
        for (p, list) in [
            (fixed, &mut report.fixed_points_in_delta),
            (two, &mut report.period_two_in_delta),
            (pre, &mut report.preimages_in_delta),
        ] {
            if let Some(p) = p.filter(|p| in_delta(x0, region, *p)) {
                push_unique(list, p);
            }
        }
    }
    let n = report.starts;
    let none = |list: &[Point2], what: &str| -> Result<String, String> {
        match list.first() {
            None => Ok(format!("no {what} found among {n} starts")),
            Some(w) => Err(format!("{what} at {w}")),
        }
    };
    let verdict = |parts: Vec<Result<String, String>>| {
        let failed: Vec<String> = parts.iter().filter_map(|r| r.clone().err()).collect();
        if failed.is_empty() {
            ConditionVerdict {
                holds: true,
                reason: parts.into_iter().filter_map(Result::ok).collect::<Vec<_>>().join("; "),
            }
        } else {
            ConditionVerdict {
                holds: false,
                reason: failed.join("; "),
            }
        }
    };
    let sign = |positive: bool| {
        if (positive && det > 0.0) || (!positive && det < 0.0) {
            Ok(format!("det J = {det}"))
        } else {
            Err(format!("det J = {det}"))
        }
    };
    report.i = verdict(vec![
        none(&report.fixed_points_in_delta, "fixed point"),
        none(&report.period_two_in_delta, "period-two point"),
    ]);
    report.ii = verdict(vec![
        none(&report.fixed_points_in_delta, "fixed point"),
        sign(true),
        none(&report.preimages_in_delta, "preimage of the fixed point"),
    ]);
    report.iii = verdict(vec![
        none(&report.period_two_in_delta, "period-two point"),
        sign(false),
        none(&report.preimages_in_delta, "preimage of the fixed point"),
    ]);
    Ok(report)
}
