//! Fixed points, minimal period-two points and 2×2 eigen-structure.

use crate::geometry::{Matrix2, Point2, Rect, DEFAULT_SAMPLING_WINDOW};
use crate::map::{check_competitive, CompetitiveReport, MapError, PlanarMap, DEFAULT_FD_STEP};
use serde::Serialize;
use thiserror::Error;

/// Residual below which Newton declares convergence.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;
pub const MAX_HALVINGS: usize = 20;
/// Fixed-point iterations tried when the Newton matrix is singular.
pub const FALLBACK_ITERATIONS: usize = 50;
/// Eigenvalues within this distance of modulus 1 are non-hyperbolic.
pub const HYPERBOLICITY_TOL: f64 = 1e-7;
/// Relative discriminant below which a quadratic has a repeated root.
pub const REPEATED_ROOT_TOL: f64 = 1e-12;
/// Period-two roots this close to a fixed point of `T` are refined and
/// rejected when the refinement lands within the same distance.
pub const NEAR_FIXED_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenData {
    /// Eigenvalue of smaller modulus (real part for a complex pair).
    pub lambda: f64,
    /// Eigenvalue of larger modulus (real part for a complex pair).
    pub mu: f64,
    /// Imaginary part magnitude of a complex pair, zero otherwise.
    pub imag: f64,
    /// Unit eigenvectors, present only when `real_distinct`.
    pub v_lambda: Option<Point2>,
    pub v_mu: Option<Point2>,
    pub real_distinct: bool,
    /// Distinct real eigenvalues of equal modulus (`λ = −μ`).
    pub modulus_tie: bool,
}

impl EigenData {
    pub fn is_complex(&self) -> bool {
        self.imag > 0.0
    }
}

/// Unit eigenvector, first nonzero component positive.
fn eigenvector(m: &Matrix2, ev: f64) -> Option<Point2> {
    let a = Point2::new(-m.a12, m.a11 - ev);
    let b = Point2::new(m.a22 - ev, -m.a21);
    let v = if a.norm() >= b.norm() { a } else { b };
    let v = v.normalized()?;
    let first = if v.x.abs() > 1e-14 { v.x } else { v.y };
    Some(if first < 0.0 { -v } else { v })
}

pub fn eigen2x2(m: &Matrix2) -> EigenData {
    let half_tr = 0.5 * m.trace();
    let disc = half_tr * half_tr - m.det();
    let scale = m.norm().powi(2).max(f64::MIN_POSITIVE);
    if disc.abs() < REPEATED_ROOT_TOL * scale || disc < 0.0 {
        let imag = if disc < 0.0 && disc.abs() >= REPEATED_ROOT_TOL * scale {
            (-disc).sqrt()
        } else {
            0.0
        };
        return EigenData {
            lambda: half_tr,
            mu: half_tr,
            imag,
            v_lambda: None,
            v_mu: None,
            real_distinct: false,
            modulus_tie: false,
        };
    }
    // cancellation-free roots: q is the larger-modulus root
    let root = disc.sqrt();
    let q = half_tr + if half_tr >= 0.0 { root } else { -root };
    let other = if q != 0.0 { m.det() / q } else { half_tr - root };
    let (lambda, mu) = if other.abs() <= q.abs() { (other, q) } else { (q, other) };
    EigenData {
        lambda,
        mu,
        imag: 0.0,
        v_lambda: eigenvector(m, lambda),
        v_mu: eigenvector(m, mu),
        real_distinct: true,
        modulus_tie: (lambda.abs() - mu.abs()).abs() <= 1e-12 * mu.abs().max(1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Fixed,
    PeriodTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attractor,
    Repeller,
    Saddle,
    Nonhyperbolic,
    Complex,
}

pub fn classify_eigen(e: &EigenData) -> Stability {
    let near_one = |v: f64| (v.abs() - 1.0).abs() <= HYPERBOLICITY_TOL;
    if e.is_complex() {
        let modulus = e.lambda.hypot(e.imag);
        return if near_one(modulus) {
            Stability::Nonhyperbolic
        } else {
            Stability::Complex
        };
    }
    if near_one(e.lambda) || near_one(e.mu) {
        Stability::Nonhyperbolic
    } else if e.mu.abs() < 1.0 {
        Stability::Attractor
    } else if e.lambda.abs() > 1.0 {
        Stability::Repeller
    } else {
        Stability::Saddle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointRecord {
    pub location: Point2,
    pub kind: PointKind,
    /// `T(location)` for a period-two point.
    pub partner: Option<Point2>,
    /// Eigen-structure of `J_T` (or `J_{T²}` for period-two points).
    pub eigen: EigenData,
    pub classification: Stability,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedPointError {
    #[error("Newton did not converge after {iterations} iterations (residual {residual:e} at {last})")]
    NoConvergence { iterations: usize, residual: f64, last: Point2 },
    #[error("singular Newton matrix at {at}; fixed-point iteration left residual {residual:e}")]
    SingularNewton { at: Point2, residual: f64 },
    #[error("degenerate: the root {at} is a fixed point, not a minimal period-two point")]
    DegenerateFixedPoint { at: Point2 },
    #[error(transparent)]
    Map(#[from] MapError),
}

fn residual(map: &PlanarMap, p: Point2) -> Option<f64> {
    map.evaluate(p).ok().map(|q| (q - p).norm())
}

/// Damped Newton on `T(p) − p = 0`; returns the root, its residual and the
/// iteration count.
fn newton(map: &PlanarMap, guess: Point2) -> Result<(Point2, f64, usize), FixedPointError> {
    let mut p = guess;
    let mut r = (map.evaluate(p)? - p).norm();
    let mut fallback_used = false;
    for it in 0..NEWTON_MAX_ITER {
        if r < NEWTON_TOL {
            return Ok((p, r, it));
        }
        let fp = map.evaluate(p)? - p;
        let step = map
            .jacobian(p, DEFAULT_FD_STEP)?
            .sub_identity()
            .solve(-fp)
            .filter(|s| s.is_finite());
        let Some(step) = step else {
            if fallback_used {
                return Err(FixedPointError::SingularNewton { at: p, residual: r });
            }
            fallback_used = true;
            for _ in 0..FALLBACK_ITERATIONS {
                match map.evaluate(p) {
                    Ok(q) => p = q,
                    Err(_) => break,
                }
            }
            r = residual(map, p).ok_or(FixedPointError::SingularNewton { at: p, residual: r })?;
            continue;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = p + step * t;
            if let Some(rc) = residual(map, cand) {
                if rc < r {
                    p = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(FixedPointError::NoConvergence {
                iterations: it + 1,
                residual: r,
                last: p,
            });
        }
    }
    if r < NEWTON_TOL {
        return Ok((p, r, NEWTON_MAX_ITER));
    }
    Err(FixedPointError::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: r,
        last: p,
    })
}

fn record(map: &PlanarMap, p: Point2, kind: PointKind, partner: Option<Point2>, r: f64, it: usize) -> Result<FixedPointRecord, FixedPointError> {
    let eigen = eigen2x2(&map.jacobian(p, DEFAULT_FD_STEP)?);
    Ok(FixedPointRecord {
        location: p,
        kind,
        partner,
        eigen,
        classification: classify_eigen(&eigen),
        residual: r,
        iterations: it,
    })
}

/// Builds the record of a known fixed point (no root finding).
pub fn fixed_point_record(map: &PlanarMap, p: Point2) -> Result<FixedPointRecord, FixedPointError> {
    let r = (map.evaluate(p)? - p).norm();
    record(map, p, PointKind::Fixed, None, r, 0)
}

pub fn find_fixed_point(map: &PlanarMap, guess: Point2) -> Result<FixedPointRecord, FixedPointError> {
    let (p, r, it) = newton(map, guess)?;
    record(map, p, PointKind::Fixed, None, r, it)
}

/// Newton on `T²(p) − p`, rejecting roots that are fixed points of `T`.
pub fn find_period_two(map: &PlanarMap, guess: Point2) -> Result<FixedPointRecord, FixedPointError> {
    let t2 = map.second_iterate();
    let (p, r, it) = newton(&t2, guess)?;
    let partner = map.evaluate(p)?;
    let gap = (partner - p).norm();
    if gap < 10.0 * NEWTON_TOL {
        return Err(FixedPointError::DegenerateFixedPoint { at: p });
    }
    // on a continuum of period-two points the root may sit a hair away from
    // a fixed point of T; refine and compare
    if gap < NEAR_FIXED_TOL {
        if let Ok((q, _, _)) = newton(map, p) {
            if q.dist(p) < NEAR_FIXED_TOL {
                return Err(FixedPointError::DegenerateFixedPoint { at: q });
            }
        }
    }
    record(&t2, p, PointKind::PeriodTwo, Some(partner), r, it)
}

/// Verdicts on the hypotheses under which a fixed point carries an
/// increasing invariant curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCurveHypotheses {
    /// `Δ = region ∩ int(Q1 ∪ Q3)` is nonempty.
    pub delta_nonempty: bool,
    /// Real, nonzero eigenvalues with `0 < |λ| < μ` and `|λ| < 1`.
    pub eigenvalues_ok: bool,
    /// `v_λ` has both components nonzero.
    pub eigenspace_not_axis: bool,
    /// Strong competitiveness at every sample of `Δ`.
    pub strongly_competitive_on_delta: bool,
    pub delta_samples: usize,
}

impl InvariantCurveHypotheses {
    pub fn all(&self) -> bool {
        self.delta_nonempty
            && self.eigenvalues_ok
            && self.eigenspace_not_axis
            && self.strongly_competitive_on_delta
    }

    /// Name of the first failing verdict.
    pub fn first_failure(&self) -> Option<&'static str> {
        [
            (self.delta_nonempty, "delta_nonempty"),
            (self.eigenvalues_ok, "eigenvalues_ok"),
            (self.eigenspace_not_axis, "eigenspace_not_axis"),
            (self.strongly_competitive_on_delta, "strongly_competitive_on_delta"),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, name)| name)
    }
}

/// The two open rectangles `region ∩ int Q1(x̄)` and `region ∩ int Q3(x̄)`,
/// clamped to the default sampling window.
pub fn delta_parts(fp: Point2, region: &Rect) -> Vec<Rect> {
    let window = region.clamp_to(&DEFAULT_SAMPLING_WINDOW);
    [
        Rect::new(fp.x.max(window.x_lo), window.x_hi, fp.y.max(window.y_lo), window.y_hi),
        Rect::new(window.x_lo, fp.x.min(window.x_hi), window.y_lo, fp.y.min(window.y_hi)),
    ]
    .into_iter()
    .flatten()
    .filter(|r| r.width() > 0.0 && r.height() > 0.0)
    .collect()
}

pub const DELTA_SAMPLES: usize = 400;

pub fn check_invariant_curve_hypotheses(map: &PlanarMap, fp: &FixedPointRecord, region: &Rect) -> InvariantCurveHypotheses {
    let parts = delta_parts(fp.location, region);
    let e = &fp.eigen;
    let eigenvalues_ok = e.real_distinct
        && !e.modulus_tie
        && e.lambda != 0.0
        && e.mu > 0.0
        && e.lambda.abs() < e.mu
        && e.lambda.abs() < 1.0;
    let eigenspace_not_axis = e
        .v_lambda
        .is_some_and(|v| v.x.abs() > 1e-12 && v.y.abs() > 1e-12);
    let reports: Vec<CompetitiveReport> = parts
        .iter()
        .map(|r| check_competitive(map, r, DELTA_SAMPLES))
        .collect();
    InvariantCurveHypotheses {
        delta_nonempty: !parts.is_empty(),
        eigenvalues_ok,
        eigenspace_not_axis,
        strongly_competitive_on_delta: !reports.is_empty() && reports.iter().all(|r| r.strongly),
        delta_samples: reports.iter().map(|r| r.samples).sum(),
    }
}
