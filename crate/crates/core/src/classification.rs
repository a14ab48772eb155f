//! Sub/supersolutions and local dynamics at hyperbolic and non-hyperbolic
//! fixed points from Taylor coefficients along an eigenvector.

use crate::fixedpoints::HYPERBOLICITY_TOL;
use crate::geometry::{le_se, Point2, Rect};
use crate::map::{MapError, PlanarMap, DEFAULT_FD_STEP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// `T(p) ⪯_se p`, compared exactly on computed values.
pub fn is_subsolution(map: &PlanarMap, p: Point2) -> Result<bool, MapError> {
    Ok(le_se(map.evaluate(p)?, p))
}

/// `p ⪯_se T(p)`, compared exactly on computed values.
pub fn is_supersolution(map: &PlanarMap, p: Point2) -> Result<bool, MapError> {
    Ok(le_se(p, map.evaluate(p)?))
}

pub const MAX_TAYLOR_DEGREE: usize = 4;
pub const DEFAULT_TAYLOR_STEP: f64 = 1e-2;
/// Coefficients below this are treated as zero.
pub const DEFAULT_COEFF_TOL: f64 = 1e-8;
/// Relative Richardson disagreement above which a ray is ill-conditioned.
pub const ILL_CONDITIONING_TOL: f64 = 1e-4;

/// Flips `v` so that it points into `Q2` (`v.x ≤ 0 ≤ v.y`) when possible,
/// otherwise so that `v.x ≤ 0`.
pub fn orient_into_q2(v: Point2) -> Point2 {
    if v.x > 0.0 || (v.x == 0.0 && v.y < 0.0) {
        -v
    } else {
        v
    }
}

/// `φ(t) = T(x̄ + t·v) − x̄ − t·v = Σ_{j≥2} (c_j, d_j) t^j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorRay {
    pub center: Point2,
    /// Unit direction.
    pub direction: Point2,
    /// `coeffs[k] = (c_{k+2}, d_{k+2})`, Richardson-extrapolated.
    pub coeffs: Vec<Point2>,
    /// Unextrapolated coefficients at the coarse step.
    pub raw: Vec<Point2>,
    pub degree: usize,
    /// `v·J v` at the center.
    pub eigenvalue: f64,
    /// Largest `|raw − extrapolated|`.
    pub disagreement: f64,
    pub ill_conditioned: bool,
    pub warnings: Vec<String>,
}

impl TaylorRay {
    /// `(c_j, d_j)` for `2 ≤ j ≤ degree`.
    pub fn coeff(&self, j: usize) -> Option<Point2> {
        j.checked_sub(2).and_then(|k| self.coeffs.get(k)).copied()
    }

    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaylorError {
    #[error("degree must lie in 2..=4, got {0}")]
    Degree(usize),
    #[error("step must be positive, got {0}")]
    Step(f64),
    #[error("direction must be a nonzero finite vector")]
    Direction,
    #[error("center is not a fixed point: residual {0:e}")]
    NotFixed(f64),
    #[error("singularity in the difference stencil: {0}")]
    Stencil(MapError),
}

/// `j`-th derivative of `φ` at 0 by an `O(h²)` central stencil.
fn central_derivative(phi: &impl Fn(f64) -> Result<Point2, MapError>, j: usize, h: f64) -> Result<Point2, MapError> {
    let f = |k: f64| phi(k * h);
    Ok(match j {
        2 => (f(1.0)? - f(0.0)? * 2.0 + f(-1.0)?) * (1.0 / (h * h)),
        3 => (f(2.0)? - f(1.0)? * 2.0 + f(-1.0)? * 2.0 - f(-2.0)?) * (1.0 / (2.0 * h * h * h)),
        4 => (f(2.0)? - f(1.0)? * 4.0 + f(0.0)? * 6.0 - f(-1.0)? * 4.0 + f(-2.0)?) * (1.0 / h.powi(4)),
        _ => unreachable!("degree checked by caller"),
    })
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|k| k as f64).product()
}

/// Taylor coefficients of `T` along the unit vector `v/|v|` at `fp`, by
/// Richardson extrapolation of central differences at steps `h_j` and
/// `h_j/2`, where `h_j = h·2^{j−2}` widens the stencil for higher orders.
pub fn taylor_along_eigenvector(
    map: &PlanarMap,
    fp: Point2,
    v: Point2,
    degree: usize,
    h: f64,
) -> Result<TaylorRay, TaylorError> {
    if !(2..=MAX_TAYLOR_DEGREE).contains(&degree) {
        return Err(TaylorError::Degree(degree));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(TaylorError::Step(h));
    }
    let v = v.normalized().ok_or(TaylorError::Direction)?;
    let res = (map.evaluate_unchecked(fp).map_err(TaylorError::Stencil)? - fp).norm();
    if res > 1e-10 {
        return Err(TaylorError::NotFixed(res));
    }
    let mut warnings = Vec::new();
    let jv = map
        .jacobian(fp, DEFAULT_FD_STEP)
        .map_err(TaylorError::Stencil)?
        .apply(v);
    let eigenvalue = v.dot(jv);
    if (jv - v * eigenvalue).norm() > 1e-6 {
        warnings.push(format!("direction {v} is not an eigenvector (|Jv − (v·Jv)v| = {:e})", (jv - v * eigenvalue).norm()));
    }
    if (eigenvalue - 1.0).abs() > HYPERBOLICITY_TOL {
        warnings.push(format!("eigenvalue along the direction is {eigenvalue}, not 1"));
    }
    let phi = |t: f64| -> Result<Point2, MapError> { Ok(map.evaluate_unchecked(fp + v * t)? - fp - v * t) };
    let mut coeffs = Vec::new();
    let mut raw = Vec::new();
    for j in 2..=degree {
        let hj = h * f64::powi(2.0, j as i32 - 2);
        let coarse = central_derivative(&phi, j, hj).map_err(TaylorError::Stencil)?;
        let fine = central_derivative(&phi, j, hj / 2.0).map_err(TaylorError::Stencil)?;
        let extrapolated = (fine * 4.0 - coarse) * (1.0 / 3.0);
        let scale = 1.0 / factorial(j);
        coeffs.push(extrapolated * scale);
        raw.push(coarse * scale);
    }
    let disagreement = raw
        .iter()
        .zip(&coeffs)
        .map(|(r, c)| (*r - *c).max_abs())
        .fold(0.0, f64::max);
    let norm = coeffs.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    Ok(TaylorRay {
        center: fp,
        direction: v,
        coeffs,
        raw,
        degree,
        eigenvalue,
        disagreement,
        ill_conditioned: disagreement > ILL_CONDITIONING_TOL * norm.max(1.0),
        warnings,
    })
}

/// Smallest `j` with `max(|c_j|, |d_j|) > tol`.
pub fn first_nonzero_index(ray: &TaylorRay, tol: f64) -> Option<usize> {
    (2..=ray.degree).find(|&j| ray.coeff(j).is_some_and(|c| c.max_abs() > tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    HyperbolicExpanding,
    HyperbolicContracting,
    OddSeNegative,
    OddSePositive,
    EvenSeNegative,
    EvenSePositive,
    Unclassified,
}

/// Local behavior implied by a verdict on the order interval `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Conclusion {
    /// Orbits from `I ∩ Q2` converge to the fixed point.
    pub converge_q2: bool,
    /// Orbits from `I ∩ Q4` converge to the fixed point.
    pub converge_q4: bool,
    /// Orbits from `I ∩ int Q2` leave `I`.
    pub escape_q2: bool,
    /// Orbits from `I ∩ int Q4` leave `I`.
    pub escape_q4: bool,
}

impl CaseId {
    pub fn conclusion(self) -> Option<Conclusion> {
        let c = |converge_q2, converge_q4, escape_q2, escape_q4| {
            Some(Conclusion {
                converge_q2,
                converge_q4,
                escape_q2,
                escape_q4,
            })
        };
        match self {
            CaseId::HyperbolicExpanding | CaseId::OddSeNegative => c(false, false, true, true),
            CaseId::HyperbolicContracting | CaseId::OddSePositive => c(true, true, false, false),
            CaseId::EvenSeNegative => c(false, true, true, false),
            CaseId::EvenSePositive => c(true, false, false, true),
            CaseId::Unclassified => None,
        }
    }

    /// Roman numeral of the non-hyperbolic case (`i`–`iv`).
    pub fn roman(self) -> Option<&'static str> {
        match self {
            CaseId::OddSeNegative => Some("i"),
            CaseId::OddSePositive => Some("ii"),
            CaseId::EvenSeNegative => Some("iii"),
            CaseId::EvenSePositive => Some("iv"),
            _ => None,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            CaseId::HyperbolicExpanding => "subsolution in int Q2, supersolution in int Q4; orbits leave I from int(Q2 ∪ Q4)",
            CaseId::HyperbolicContracting => "supersolution in int Q2, subsolution in int Q4; orbits in I converge",
            CaseId::OddSeNegative => "odd order, (c,d) ⪯se 0: orbits leave I from int(Q2 ∪ Q4)",
            CaseId::OddSePositive => "odd order, 0 ⪯se (c,d): orbits in I converge",
            CaseId::EvenSeNegative => "even order, (c,d) ⪯se 0: converge on I ∩ Q4, escape from int Q2",
            CaseId::EvenSePositive => "even order, 0 ⪯se (c,d): converge on I ∩ Q2, escape from int Q4",
            CaseId::Unclassified => "no conclusion",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

/// Which of the sufficient conditions held at the first nonzero order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConditionDetail {
    /// `c_ℓ·d_ℓ < 0`.
    pub a: bool,
    /// `c_ℓ ≠ 0` and the second component is affine along the ray.
    pub b: bool,
    /// `d_ℓ ≠ 0` and the first component is affine along the ray.
    pub c: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalVerdict {
    pub ell: Option<usize>,
    pub case_id: CaseId,
    pub detail: ConditionDetail,
    /// `(c_ℓ, d_ℓ)`.
    pub leading: Option<Point2>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassificationError {
    #[error("eigenvalue {0} is within 1e-7 of 1; use the non-hyperbolic classification")]
    NonHyperbolic(f64),
    #[error("eigenvector {0} must have components of opposite sign")]
    NotOppositeSigns(Point2),
}

pub fn classify_hyperbolic_ray(mu: f64, v: Point2) -> Result<LocalVerdict, ClassificationError> {
    if (mu - 1.0).abs() <= HYPERBOLICITY_TOL {
        return Err(ClassificationError::NonHyperbolic(mu));
    }
    if !(v.x * v.y < 0.0) {
        return Err(ClassificationError::NotOppositeSigns(v));
    }
    Ok(LocalVerdict {
        ell: None,
        case_id: if mu > 1.0 {
            CaseId::HyperbolicExpanding
        } else {
            CaseId::HyperbolicContracting
        },
        detail: ConditionDetail::default(),
        leading: None,
    })
}

/// Non-hyperbolic classification from the first nonzero coefficient pair.
/// Components below `tol` count as zero; affineness of a component means
/// all its computed coefficients are below `tol`.
pub fn classify_nonhyperbolic(ray: &TaylorRay, tol: f64) -> LocalVerdict {
    let unclassified = |ell, leading| LocalVerdict {
        ell,
        case_id: CaseId::Unclassified,
        detail: ConditionDetail::default(),
        leading,
    };
    if (ray.eigenvalue - 1.0).abs() > HYPERBOLICITY_TOL {
        return unclassified(None, None);
    }
    let Some(ell) = first_nonzero_index(ray, tol) else {
        return unclassified(None, None);
    };
    let lead = ray.coeff(ell).expect("index within degree");
    let zero = |v: f64| if v.abs() > tol { v } else { 0.0 };
    let (c, d) = (zero(lead.x), zero(lead.y));
    let first_affine = ray.coeffs.iter().all(|k| k.x.abs() <= tol);
    let second_affine = ray.coeffs.iter().all(|k| k.y.abs() <= tol);
    let detail = ConditionDetail {
        a: c * d < 0.0,
        b: c != 0.0 && second_affine,
        c: d != 0.0 && first_affine,
    };
    if !(detail.a || detail.b || detail.c) {
        return LocalVerdict {
            detail,
            ..unclassified(Some(ell), Some(lead))
        };
    }
    let se_negative = c <= 0.0 && d >= 0.0;
    let case_id = match (ell % 2 == 1, se_negative) {
        (true, true) => CaseId::OddSeNegative,
        (true, false) => CaseId::OddSePositive,
        (false, true) => CaseId::EvenSeNegative,
        (false, false) => CaseId::EvenSePositive,
    };
    LocalVerdict {
        ell: Some(ell),
        case_id,
        detail,
        leading: Some(lead),
    }
}

/// Ray parameters scanned for the ends of the order interval.
pub const INTERVAL_SCAN: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// One end of the order interval: a sub- or supersolution near the ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEnd {
    pub t: f64,
    pub point: Point2,
    pub subsolution: bool,
    pub supersolution: bool,
}

/// `⟦a, b⟧` with `a ∈ Q2(x̄)`, `b ∈ Q4(x̄)`, `a ⪯_se x̄ ⪯_se b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderInterval {
    pub center: Point2,
    pub upper_left: IntervalEnd,
    pub lower_right: IntervalEnd,
}

impl OrderInterval {
    pub fn rect(&self) -> Rect {
        let (a, b) = (self.upper_left.point, self.lower_right.point);
        Rect::new(a.x, b.x, b.y, a.y).expect("ends are se-ordered")
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.rect().contains(p)
    }

    /// `I ∩ Q2(x̄)`.
    pub fn q2_part(&self) -> Rect {
        let (a, c) = (self.upper_left.point, self.center);
        Rect::new(a.x, c.x, c.y, a.y).expect("ordered")
    }

    /// `I ∩ Q4(x̄)`.
    pub fn q4_part(&self) -> Rect {
        let (b, c) = (self.lower_right.point, self.center);
        Rect::new(c.x, b.x, b.y, c.y).expect("ordered")
    }
}

/// Scans `t ∈ {10⁻¹, 10⁻², 10⁻³}` on each side of `x̄` along `v` (oriented
/// into `Q2`) for a sub- or supersolution. When the point on the ray itself
/// is neither (an exactly affine component leaves a tie), points nudged
/// further into the quadrant by `ε ∈ {10⁻²t², 10⁻⁴t²}` are tried.
pub fn find_order_interval(map: &PlanarMap, fp: Point2, v: Point2) -> Option<OrderInterval> {
    let v = orient_into_q2(v.normalized()?);
    let end = |sign: f64| -> Option<IntervalEnd> {
        for &t in &INTERVAL_SCAN {
            let base = fp + v * (sign * t);
            let nudges = [0.0, 1e-2 * t * t, 1e-4 * t * t];
            // into Q2: up or left; into Q4: down or right
            let dirs = [Point2::new(0.0, sign), Point2::new(-sign, 0.0)];
            for &eps in &nudges {
                for dir in &dirs {
                    let p = base + *dir * eps;
                    let quadrant_ok = if sign > 0.0 {
                        p.x <= fp.x && p.y > fp.y
                    } else {
                        p.x > fp.x && p.y <= fp.y
                    };
                    if !quadrant_ok || !map.domain().contains(p) {
                        continue;
                    }
                    let (Ok(sub), Ok(sup)) = (is_subsolution(map, p), is_supersolution(map, p)) else {
                        continue;
                    };
                    if sub || sup {
                        return Some(IntervalEnd {
                            t: sign * t,
                            point: p,
                            subsolution: sub,
                            supersolution: sup,
                        });
                    }
                    if eps == 0.0 {
                        break;
                    }
                }
            }
        }
        None
    };
    Some(OrderInterval {
        center: fp,
        upper_left: end(1.0)?,
        lower_right: end(-1.0)?,
    })
}

/// Outcome of sampling orbits against a verdict's conclusion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsCheck {
    pub region: &'static str,
    pub expectation: &'static str,
    pub samples: usize,
    pub satisfied: usize,
    /// Largest iteration count needed by a satisfied sample.
    pub max_iterations: usize,
}

impl DynamicsCheck {
    pub fn passed(&self) -> bool {
        self.samples > 0 && self.satisfied == self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    pub samples: usize,
    pub max_iter: usize,
    pub convergence_radius: f64,
    pub seed: u64,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions {
            samples: 50,
            max_iter: 2_000_000,
            convergence_radius: 1e-5,
            seed: 7,
        }
    }
}

fn sample_open(rng: &mut ChaCha8Rng, r: &Rect) -> Point2 {
    // strictly inside: avoid the closed boundary through the fixed point
    let u = |rng: &mut ChaCha8Rng| rng.gen_range(1e-3..1.0);
    Point2::new(r.x_lo + u(rng) * r.width(), r.y_lo + u(rng) * r.height())
}

/// Iterations until `p` comes within `radius` of `target`.
fn converges(map: &PlanarMap, mut p: Point2, target: Point2, radius: f64, max_iter: usize) -> Option<usize> {
    for n in 0..=max_iter {
        if p.dist(target) <= radius {
            return Some(n);
        }
        p = map.evaluate(p).ok()?;
    }
    None
}

/// Iterations until the orbit of `p` leaves `rect`.
fn escapes(map: &PlanarMap, mut p: Point2, rect: &Rect, max_iter: usize) -> Option<usize> {
    for n in 0..=max_iter {
        if !rect.contains(p) {
            return Some(n);
        }
        p = match map.evaluate(p) {
            Ok(q) => q,
            Err(_) => return Some(n + 1),
        };
    }
    None
}

/// Samples orbits in the quadrant parts of `interval` and checks the
/// convergence or escape behavior asserted by `case`.
pub fn verify_local_dynamics(map: &PlanarMap, interval: &OrderInterval, case: CaseId, opts: &DynamicsOptions) -> Vec<DynamicsCheck> {
    let Some(c) = case.conclusion() else { return Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let whole = interval.rect();
    let mut checks = Vec::new();
    let parts = [
        ("I ∩ Q2", interval.q2_part(), c.converge_q2, c.escape_q2),
        ("I ∩ Q4", interval.q4_part(), c.converge_q4, c.escape_q4),
    ];
    for (region, rect, converge, escape) in parts {
        if !(converge || escape) {
            continue;
        }
        let mut satisfied = 0;
        let mut max_iterations = 0;
        for _ in 0..opts.samples {
            let p = sample_open(&mut rng, &rect);
            let n = if converge {
                converges(map, p, interval.center, opts.convergence_radius, opts.max_iter)
            } else {
                escapes(map, p, &whole, opts.max_iter)
            };
            if let Some(n) = n {
                satisfied += 1;
                max_iterations = max_iterations.max(n);
            }
        }
        checks.push(DynamicsCheck {
            region,
            expectation: if converge { "converge" } else { "escape" },
            samples: opts.samples,
            satisfied,
            max_iterations,
        });
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{default_example, ExampleId};
    use crate::geometry::Matrix2;

    fn ex4() -> (PlanarMap, Point2) {
        (default_example(ExampleId::Ex4).map, Point2::new(2.0, 1.0))
    }

    fn synthetic(coeffs: Vec<Point2>) -> TaylorRay {
        TaylorRay {
            center: Point2::ORIGIN,
            direction: Point2::new(-1.0, 1.0).normalized().unwrap(),
            degree: coeffs.len() + 1,
            raw: coeffs.clone(),
            coeffs,
            eigenvalue: 1.0,
            disagreement: 0.0,
            ill_conditioned: false,
            warnings: vec![],
        }
    }

    #[test]
    fn fixed_points_are_both() {
        let (m, e) = ex4();
        assert!(is_subsolution(&m, e).unwrap() && is_supersolution(&m, e).unwrap());
    }

    #[test]
    fn ex4_subsolution_slightly_inside_q2() {
        let (m, e) = ex4();
        let found = [1e-2, 1e-3].iter().any(|&t| {
            let p = e + Point2::new(-t, t) + Point2::new(0.0, 1e-2 * t * t);
            is_subsolution(&m, p).unwrap()
        });
        assert!(found);
    }

    #[test]
    fn northeast_image_is_neither() {
        let m = PlanarMap::affine("shift", Matrix2::IDENTITY, Point2::new(1.0, 1.0));
        let p = Point2::new(0.5, 0.5);
        assert!(!is_subsolution(&m, p).unwrap() && !is_supersolution(&m, p).unwrap());
    }

    #[test]
    fn ex4_ray() {
        let (m, e) = ex4();
        let ray = taylor_along_eigenvector(&m, e, Point2::new(-1.0, 1.0), 4, DEFAULT_TAYLOR_STEP).unwrap();
        let c2 = ray.coeff(2).unwrap();
        assert!(c2.x.abs() < 1e-8 && (c2.y - 0.25).abs() < 1e-6, "{c2}");
        assert!(ray.coeffs.iter().all(|c| c.x.abs() < 1e-8));
        assert!(!ray.ill_conditioned && ray.warnings.is_empty(), "{ray:?}");
        assert_eq!(first_nonzero_index(&ray, DEFAULT_COEFF_TOL), Some(2));
        let v = classify_nonhyperbolic(&ray, DEFAULT_COEFF_TOL);
        assert_eq!(v.case_id, CaseId::EvenSeNegative);
        assert_eq!(v.case_id.roman(), Some("iii"));
        assert!(v.detail.c && !v.detail.a && !v.detail.b);
    }

    #[test]
    fn ex4_higher_coefficients_match_series() {
        // along (−1,1)/√2 with s = t/√2 the second component gains 2Σ_{k≥2}(s/2)^k
        let (m, e) = ex4();
        let ray = taylor_along_eigenvector(&m, e, Point2::new(-1.0, 1.0), 4, DEFAULT_TAYLOR_STEP).unwrap();
        for j in 2..=4 {
            let want = 2.0 * (0.5f64 / 2f64.sqrt()).powi(j as i32);
            assert!((ray.coeff(j).unwrap().y - want).abs() < 1e-6, "j={j}");
        }
    }

    #[test]
    fn linear_map_has_zero_coefficients() {
        let m = PlanarMap::affine("lin", Matrix2::new(1.0, 0.0, 0.0, 0.5), Point2::ORIGIN);
        let ray = taylor_along_eigenvector(&m, Point2::ORIGIN, Point2::new(1.0, 0.0), 4, 1e-2).unwrap();
        assert!(ray.coeffs.iter().all(|c| c.max_abs() < 1e-10));
        assert_eq!(first_nonzero_index(&ray, 1e-8), None);
        assert_eq!(classify_nonhyperbolic(&ray, 1e-8).case_id, CaseId::Unclassified);
    }

    #[test]
    fn taylor_preconditions() {
        let (m, e) = ex4();
        assert!(matches!(taylor_along_eigenvector(&m, e, Point2::new(-1.0, 1.0), 5, 1e-2), Err(TaylorError::Degree(5))));
        assert!(matches!(taylor_along_eigenvector(&m, e + Point2::new(0.1, 0.0), Point2::new(-1.0, 1.0), 2, 1e-2), Err(TaylorError::NotFixed(_))));
        let ray = taylor_along_eigenvector(&m, e, Point2::new(1.0, 0.0), 2, 1e-2).unwrap();
        assert!(!ray.warnings.is_empty());
    }

    #[test]
    fn first_nonzero_examples() {
        assert_eq!(first_nonzero_index(&synthetic(vec![Point2::ORIGIN; 3]), 1e-8), None);
        let r = synthetic(vec![Point2::ORIGIN, Point2::new(1e-3, -1e-3), Point2::ORIGIN]);
        assert_eq!(first_nonzero_index(&r, 1e-8), Some(3));
    }

    #[test]
    fn odd_cases() {
        let r = synthetic(vec![Point2::ORIGIN, Point2::new(-1.0, 1.0)]);
        let v = classify_nonhyperbolic(&r, 1e-8);
        assert_eq!((v.ell, v.case_id), (Some(3), CaseId::OddSeNegative));
        assert!(v.detail.a);
        let r = synthetic(vec![Point2::ORIGIN, Point2::new(1.0, -1.0)]);
        assert_eq!(classify_nonhyperbolic(&r, 1e-8).case_id, CaseId::OddSePositive);
    }

    #[test]
    fn same_sign_without_affine_component_is_unclassified() {
        let r = synthetic(vec![Point2::new(1.0, 1.0), Point2::new(0.5, 0.5)]);
        let v = classify_nonhyperbolic(&r, 1e-8);
        assert_eq!(v.case_id, CaseId::Unclassified);
        assert_eq!(v.ell, Some(2));
    }

    #[test]
    fn condition_b_uses_sign_of_c() {
        let r = synthetic(vec![Point2::new(0.3, 0.0), Point2::new(0.1, 0.0)]);
        let v = classify_nonhyperbolic(&r, 1e-8);
        assert!(v.detail.b);
        assert_eq!(v.case_id, CaseId::EvenSePositive);
    }

    #[test]
    fn hyperbolic_rays() {
        let v = classify_hyperbolic_ray(2.0, Point2::new(1.0, -1.0)).unwrap();
        assert_eq!(v.case_id, CaseId::HyperbolicExpanding);
        let v = classify_hyperbolic_ray(0.5, Point2::new(-1.0, 1.0)).unwrap();
        assert_eq!(v.case_id, CaseId::HyperbolicContracting);
        assert!(matches!(classify_hyperbolic_ray(1.0, Point2::new(-1.0, 1.0)), Err(ClassificationError::NonHyperbolic(_))));
        assert!(classify_hyperbolic_ray(2.0, Point2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn ex4_order_interval_and_dynamics() {
        let (m, e) = ex4();
        let iv = find_order_interval(&m, e, Point2::new(-1.0, 1.0)).unwrap();
        assert!(le_se(iv.upper_left.point, e) && le_se(e, iv.lower_right.point));
        assert!(iv.upper_left.subsolution && iv.lower_right.subsolution);
        let opts = DynamicsOptions { samples: 10, ..DynamicsOptions::default() };
        let checks = verify_local_dynamics(&m, &iv, CaseId::EvenSeNegative, &opts);
        assert_eq!(checks.len(), 2);
        assert!(checks.iter().all(DynamicsCheck::passed), "{checks:?}");
    }

    #[test]
    fn sub_and_super_iff_fixed() {
        let (m, e) = ex4();
        for p in Rect::new(1.0, 3.0, 0.5, 1.5).unwrap().cell_centers(9, 9).into_iter().chain([e]) {
            let both = is_subsolution(&m, p).unwrap() && is_supersolution(&m, p).unwrap();
            assert_eq!(both, m.evaluate(p).unwrap() == p);
        }
    }

    #[test]
    fn richardson_step_halving_is_stable_on_examples() {
        for id in [ExampleId::Ex1, ExampleId::Ex2, ExampleId::Ex3T2, ExampleId::Ex4, ExampleId::Ex5] {
            let sys = default_example(id);
            let fp = sys.default_fixed_point().unwrap();
            let rec = crate::fixedpoints::fixed_point_record(&sys.map, fp).unwrap();
            let e = rec.eigen;
            let v = if (e.mu - 1.0).abs() < 1e-7 { e.v_mu } else { e.v_lambda }.unwrap();
            let ray = taylor_along_eigenvector(&sys.map, fp, orient_into_q2(v), MAX_TAYLOR_DEGREE, DEFAULT_TAYLOR_STEP)
                .unwrap();
            assert!(!ray.ill_conditioned, "{id}: {}", ray.disagreement);
            assert!(ray.disagreement < ILL_CONDITIONING_TOL * ray.coeff_norm().max(1.0), "{id}");
            assert!(ray.coeffs.iter().all(|c| c.is_finite()));
            assert!((ray.direction.norm() - 1.0).abs() < 1e-14);
        }
    }
}
