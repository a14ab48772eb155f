//! Built-in systems: a rational predator-free model with a vertical line of
//! equilibria, the Leslie–Gower competition model on its non-hyperbolic
//! parameter surface, the period-two recurrence `x_{n+1} = 1 + x_{n-1}/x_n`,
//! an isolated non-hyperbolic equilibrium of oscillatory type, and the
//! Leslie–Gower model with immigration.

use crate::fixedpoints::{fixed_point_record, FixedPointRecord, PointKind};
use crate::geometry::{Matrix2, Point2, Rect};
use crate::map::{checked_div, PlanarMap};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ExampleId {
    #[serde(rename = "ex1")]
    Ex1,
    #[serde(rename = "ex2")]
    Ex2,
    #[serde(rename = "ex3_T")]
    Ex3T,
    #[serde(rename = "ex3_T2")]
    Ex3T2,
    #[serde(rename = "ex4")]
    Ex4,
    #[serde(rename = "ex5")]
    Ex5,
}

impl ExampleId {
    pub const ALL: [ExampleId; 6] = [
        ExampleId::Ex1,
        ExampleId::Ex2,
        ExampleId::Ex3T,
        ExampleId::Ex3T2,
        ExampleId::Ex4,
        ExampleId::Ex5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::Ex3T => "ex3_T",
            ExampleId::Ex3T2 => "ex3_T2",
            ExampleId::Ex4 => "ex4",
            ExampleId::Ex5 => "ex5",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExampleId::Ex1 => "(x/(a+y), y/(1+x)): a vertical line of non-hyperbolic equilibria",
            ExampleId::Ex2 => "Leslie-Gower competition on its non-hyperbolic surface: a segment of equilibria",
            ExampleId::Ex3T => "x_{n+1} = 1 + x_{n-1}/x_n as the map (y, 1 + x/y)",
            ExampleId::Ex3T2 => "second iterate of ex3_T: a hyperbola of period-two points",
            ExampleId::Ex4 => "(beta1 x/(B1 x + y), (alpha2 + gamma2 y)/x): isolated non-hyperbolic equilibrium",
            ExampleId::Ex5 => "Leslie-Gower with immigration h1, h2: tangential equilibrium",
        }
    }

    /// Parameter names with their defaults.
    pub fn default_params(self) -> Vec<(&'static str, f64)> {
        match self {
            ExampleId::Ex1 => vec![("a", 2.0)],
            ExampleId::Ex2 => vec![("b1", 2.0), ("b2", 3.0), ("c1", 0.5), ("c2", 2.0)],
            ExampleId::Ex3T | ExampleId::Ex3T2 => vec![],
            ExampleId::Ex4 => vec![("B1", 1.0), ("gamma2", 1.0), ("alpha2", 1.0), ("beta1", 3.0)],
            // h1 defaults to the tangency value located by bisection
            ExampleId::Ex5 => vec![
                ("b1", EX5_SEARCH_LINE.b1),
                ("b2", EX5_SEARCH_LINE.b2),
                ("c1", EX5_SEARCH_LINE.c1),
                ("c2", EX5_SEARCH_LINE.c2),
                ("h2", EX5_SEARCH_LINE.h2),
            ],
        }
    }

    pub fn param_names(self) -> Vec<&'static str> {
        let mut names: Vec<_> = self.default_params().into_iter().map(|(n, _)| n).collect();
        if self == ExampleId::Ex5 {
            names.push("h1");
        }
        names
    }

    /// Equilibria form a continuum rather than isolated points.
    pub fn has_continuum(self) -> bool {
        matches!(self, ExampleId::Ex1 | ExampleId::Ex2 | ExampleId::Ex3T2)
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleId {
    type Err = ExampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| ExampleError::UnknownExample(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExampleError {
    #[error("unknown example `{0}` (expected one of ex1, ex2, ex3_T, ex3_T2, ex4, ex5)")]
    UnknownExample(String),
    #[error("example {id} has no parameter `{name}`")]
    UnknownParameter { id: ExampleId, name: String },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: String, value: f64 },
    #[error("parameter constraint violated: {relation}")]
    Constraint { relation: String },
    #[error("no two-equilibria parameter found on the search line: {0}")]
    NoTangency(String),
}

/// An eigenvalue with an (unnormalized) eigenvector direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Option<Point2>,
}

/// A closed-form (or numerically located, see `note`) equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fixture {
    pub point: Point2,
    pub kind: PointKind,
    /// Eigen-data of `J_T` (of the system's map) at the point.
    pub pairs: Vec<EigenPair>,
    /// Second-order Taylor coefficient `(c₂, d₂)` along the unit eigenvector
    /// of eigenvalue 1 oriented into `Q2`.
    pub taylor2: Option<Point2>,
    pub note: String,
}

/// A one-parameter family of equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Continuum {
    /// `(0, s)`, `s ≥ 0`.
    VerticalAxis,
    /// `(1 − s)·from + s·to`, `s ∈ [0, 1]`.
    Segment { from: Point2, to: Point2 },
    /// `x + y = xy`, parametrized by `s = x > 1`.
    Hyperbola,
}

impl Continuum {
    pub fn point(&self, s: f64) -> Point2 {
        match *self {
            Continuum::VerticalAxis => Point2::new(0.0, s),
            Continuum::Segment { from, to } => from * (1.0 - s) + to * s,
            Continuum::Hyperbola => Point2::new(s, s / (s - 1.0)),
        }
    }

    /// Distance-like residual of membership.
    pub fn residual(&self, p: Point2) -> f64 {
        match *self {
            Continuum::VerticalAxis => p.x.abs(),
            Continuum::Segment { from, to } => {
                // |a·x + b·y − c| for the line through both ends
                let d = to - from;
                let n = Point2::new(d.y, -d.x);
                (n.dot(p - from)).abs()
            }
            Continuum::Hyperbola => (p.x + p.y - p.x * p.y).abs(),
        }
    }

    /// Parameter range swept by default.
    pub fn default_range(&self) -> (f64, f64) {
        match self {
            Continuum::VerticalAxis => (0.0, 2.0),
            Continuum::Segment { .. } => (0.0, 1.0),
            Continuum::Hyperbola => (3.0, 5.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExampleSystem {
    pub id: ExampleId,
    pub params: BTreeMap<String, f64>,
    pub map: PlanarMap,
    pub fixtures: Vec<Fixture>,
    pub continuum: Option<Continuum>,
}

type ParamMap = BTreeMap<String, f64>;

fn get(params: &ParamMap, name: &str) -> f64 {
    params[name]
}

fn require(ok: bool, relation: impl Into<String>) -> Result<(), ExampleError> {
    if ok {
        Ok(())
    } else {
        Err(ExampleError::Constraint {
            relation: relation.into(),
        })
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Builds a system from `id` and parameter overrides (unspecified
/// parameters take their defaults).
pub fn make_example(id: ExampleId, overrides: &ParamMap) -> Result<ExampleSystem, ExampleError> {
    let mut params: ParamMap = id
        .default_params()
        .into_iter()
        .map(|(n, v)| (n.to_string(), v))
        .collect();
    let names = id.param_names();
    for (name, &value) in overrides {
        if !names.contains(&name.as_str()) {
            return Err(ExampleError::UnknownParameter { id, name: name.clone() });
        }
        params.insert(name.clone(), value);
    }
    let mut tangency = None;
    if id == ExampleId::Ex5 && !params.contains_key("h1") {
        let line = Ex5Params::from_map(&params, 0.0);
        let t = ex5_tangency(&line, EX5_H1_BRACKET)?;
        params.insert("h1".into(), t.h1);
        tangency = Some(t);
    }
    for (name, &value) in &params {
        if !(value > 0.0) {
            return Err(ExampleError::NonPositive { name: name.clone(), value });
        }
    }
    match id {
        ExampleId::Ex1 => ex1(params),
        ExampleId::Ex2 => ex2(params),
        ExampleId::Ex3T => Ok(ex3_t(params)),
        ExampleId::Ex3T2 => Ok(ex3_t2(params)),
        ExampleId::Ex4 => ex4(params),
        ExampleId::Ex5 => ex5(params, tangency),
    }
}

/// `make_example` with all defaults.
pub fn default_example(id: ExampleId) -> ExampleSystem {
    make_example(id, &ParamMap::new()).expect("defaults satisfy every constraint")
}

fn ex1_map(a: f64) -> PlanarMap {
    PlanarMap::new("ex1", Rect::nonnegative_quadrant(), move |p| {
        Ok(Point2::new(checked_div(p.x, a + p.y, p)?, checked_div(p.y, 1.0 + p.x, p)?))
    })
    .with_jacobian(move |p| {
        let (d1, d2) = (a + p.y, 1.0 + p.x);
        checked_div(1.0, d1 * d2, p)?;
        Ok(Matrix2::new(1.0 / d1, -p.x / (d1 * d1), -p.y / (d2 * d2), 1.0 / d2))
    })
}

/// Fixture data at `(0, ȳ)`.
pub fn ex1_fixture(a: f64, ybar: f64) -> Fixture {
    Fixture {
        point: Point2::new(0.0, ybar),
        kind: PointKind::Fixed,
        pairs: vec![
            EigenPair {
                value: 1.0 / (a + ybar),
                vector: Some(Point2::new(a - 1.0 + ybar, ybar * (a + ybar))),
            },
            EigenPair {
                value: 1.0,
                vector: Some(Point2::new(0.0, 1.0)),
            },
        ],
        taylor2: None,
        note: format!("equilibrium (0, {ybar}) on the vertical line"),
    }
}

fn ex1(params: ParamMap) -> Result<ExampleSystem, ExampleError> {
    let a = get(&params, "a");
    require(a > 1.0, format!("a > 1 (got a = {a})"))?;
    Ok(ExampleSystem {
        id: ExampleId::Ex1,
        map: ex1_map(a).with_params(params.clone()),
        fixtures: [0.0, 1.0, 2.0].iter().map(|&y| ex1_fixture(a, y)).collect(),
        params,
        continuum: Some(Continuum::VerticalAxis),
    })
}

/// `(b₁x/(1+x+c₁y) + h₁, b₂y/(1+y+c₂x) + h₂)`; `h = 0` gives Leslie–Gower.
fn leslie_gower(name: &str, b1: f64, b2: f64, c1: f64, c2: f64, h1: f64, h2: f64) -> PlanarMap {
    PlanarMap::new(name, Rect::nonnegative_quadrant(), move |p| {
        Ok(Point2::new(
            checked_div(b1 * p.x, 1.0 + p.x + c1 * p.y, p)? + h1,
            checked_div(b2 * p.y, 1.0 + p.y + c2 * p.x, p)? + h2,
        ))
    })
    .with_jacobian(move |p| {
        let d1 = 1.0 + p.x + c1 * p.y;
        let d2 = 1.0 + p.y + c2 * p.x;
        checked_div(1.0, d1 * d2, p)?;
        let (q1, q2) = (d1 * d1, d2 * d2);
        Ok(Matrix2::new(
            b1 * (1.0 + c1 * p.y) / q1,
            -b1 * c1 * p.x / q1,
            -b2 * c2 * p.y / q2,
            b2 * (1.0 + c2 * p.x) / q2,
        ))
    })
}

/// Fixture data at `E_t`.
pub fn ex2_fixture(b1: f64, b2: f64, t: f64) -> Fixture {
    Fixture {
        point: Point2::new((b1 - 1.0) * (1.0 - t), (b2 - 1.0) * t),
        kind: PointKind::Fixed,
        pairs: vec![
            EigenPair {
                value: (1.0 - t) / b1 + t / b2,
                vector: Some(Point2::new(
                    b2 * (1.0 - b1).powi(2) * (1.0 - t),
                    b1 * (1.0 - b2).powi(2) * t,
                )),
            },
            EigenPair {
                value: 1.0,
                vector: Some(Point2::new(-(1.0 - b1) / (1.0 - b2), 1.0)),
            },
        ],
        taylor2: None,
        note: format!("E_t on the segment of equilibria, t = {t}"),
    }
}

fn ex2(params: ParamMap) -> Result<ExampleSystem, ExampleError> {
    let (b1, b2, c1, c2) = (
        get(&params, "b1"),
        get(&params, "b2"),
        get(&params, "c1"),
        get(&params, "c2"),
    );
    require(b1 > 1.0 && b2 > 1.0, format!("b1 > 1 and b2 > 1 (got b1 = {b1}, b2 = {b2})"))?;
    require(
        close(c1 * (b2 - 1.0), b1 - 1.0),
        format!("c1*(b2-1) = b1-1 (got {} vs {})", c1 * (b2 - 1.0), b1 - 1.0),
    )?;
    require(
        close(c2 * (b1 - 1.0), b2 - 1.0),
        format!("c2*(b1-1) = b2-1 (got {} vs {})", c2 * (b1 - 1.0), b2 - 1.0),
    )?;
    Ok(ExampleSystem {
        id: ExampleId::Ex2,
        map: leslie_gower("ex2", b1, b2, c1, c2, 0.0, 0.0).with_params(params.clone()),
        fixtures: [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&t| ex2_fixture(b1, b2, t))
            .collect(),
        params,
        continuum: Some(Continuum::Segment {
            from: Point2::new(b1 - 1.0, 0.0),
            to: Point2::new(0.0, b2 - 1.0),
        }),
    })
}

fn open_quadrant() -> Rect {
    Rect::new(0.0, f64::INFINITY, 0.0, f64::INFINITY).expect("valid")
}

fn ex3_t_map() -> PlanarMap {
    PlanarMap::new("ex3_T", open_quadrant(), |p| {
        Ok(Point2::new(p.y, 1.0 + checked_div(p.x, p.y, p)?))
    })
    .with_jacobian(|p| {
        let inv = checked_div(1.0, p.y, p)?;
        Ok(Matrix2::new(0.0, 1.0, inv, -p.x * inv * inv))
    })
}

fn ex3_t2_map() -> PlanarMap {
    PlanarMap::new("ex3_T2", open_quadrant(), |p| {
        Ok(Point2::new(
            1.0 + checked_div(p.x, p.y, p)?,
            1.0 + checked_div(p.y * p.y, p.x + p.y, p)?,
        ))
    })
    .with_jacobian(|p| {
        let (u, v) = (p.x, p.y);
        checked_div(1.0, v * (u + v), p)?;
        let s2 = (u + v) * (u + v);
        Ok(Matrix2::new(1.0 / v, -u / (v * v), -v * v / s2, v * (2.0 * u + v) / s2))
    })
}

/// Fixture data for `T²` at the period-two point `(x̄, x̄/(x̄−1))`.
pub fn ex3_t2_fixture(xbar: f64) -> Fixture {
    let ybar = xbar / (xbar - 1.0);
    Fixture {
        point: Point2::new(xbar, ybar),
        kind: PointKind::Fixed,
        pairs: vec![
            EigenPair {
                value: 1.0 / (xbar * ybar),
                vector: Some(Point2::new(xbar, 1.0)),
            },
            EigenPair {
                value: 1.0,
                vector: Some(Point2::new(-xbar / (ybar * ybar), 1.0 - 1.0 / ybar)),
            },
        ],
        taylor2: None,
        note: format!("fixed point of T² on x + y = xy, x = {xbar}"),
    }
}

fn ex3_t(params: ParamMap) -> ExampleSystem {
    let mut fixtures = vec![Fixture {
        point: Point2::new(2.0, 2.0),
        kind: PointKind::Fixed,
        pairs: vec![
            EigenPair {
                value: 0.5,
                vector: Some(Point2::new(2.0, 1.0)),
            },
            EigenPair {
                value: -1.0,
                vector: Some(Point2::new(1.0, -1.0)),
            },
        ],
        taylor2: None,
        note: "unique fixed point".into(),
    }];
    fixtures.extend([3.0, 4.0, 5.0].iter().map(|&x| {
        let mut f = ex3_t2_fixture(x);
        f.kind = PointKind::PeriodTwo;
        f.note = format!("period-two point of T (eigen-data of T²), x = {x}");
        f
    }));
    ExampleSystem {
        id: ExampleId::Ex3T,
        map: ex3_t_map().with_params(params.clone()),
        fixtures,
        params,
        continuum: None,
    }
}

fn ex3_t2(params: ParamMap) -> ExampleSystem {
    ExampleSystem {
        id: ExampleId::Ex3T2,
        map: ex3_t2_map().with_params(params.clone()),
        fixtures: [3.0, 4.0, 5.0].iter().map(|&x| ex3_t2_fixture(x)).collect(),
        params,
        continuum: Some(Continuum::Hyperbola),
    }
}

/// Closed forms at the equilibrium of the oscillatory system.
pub fn ex4_fixture(b1: f64, gamma2: f64, beta1: f64) -> Fixture {
    let s = beta1 + b1 * gamma2;
    let d = beta1 - b1 * gamma2;
    Fixture {
        point: Point2::new(s / (2.0 * b1), d / 2.0),
        kind: PointKind::Fixed,
        pairs: vec![
            EigenPair {
                value: -d * d / (2.0 * beta1 * s),
                vector: Some(Point2::new(s * s, 2.0 * beta1 * b1 * d)),
            },
            EigenPair {
                value: 1.0,
                vector: Some(Point2::new(-1.0, b1)),
            },
        ],
        taylor2: Some(Point2::new(0.0, 2.0 * b1 * b1 / ((1.0 + b1 * b1) * s))),
        note: "unique equilibrium, non-hyperbolic of oscillatory type".into(),
    }
}

fn ex4(params: ParamMap) -> Result<ExampleSystem, ExampleError> {
    let (b1, gamma2, alpha2, beta1) = (
        get(&params, "B1"),
        get(&params, "gamma2"),
        get(&params, "alpha2"),
        get(&params, "beta1"),
    );
    let lhs = beta1 - b1 * gamma2;
    let rhs = 2.0 * (b1 * alpha2).sqrt();
    require(
        close(lhs, rhs),
        format!("beta1 - B1*gamma2 = 2*sqrt(B1*alpha2) (got {lhs} vs {rhs})"),
    )?;
    let map = PlanarMap::new("ex4", Rect::nonnegative_quadrant(), move |p| {
        Ok(Point2::new(
            checked_div(beta1 * p.x, b1 * p.x + p.y, p)?,
            checked_div(alpha2 + gamma2 * p.y, p.x, p)?,
        ))
    })
    .with_jacobian(move |p| {
        let d = b1 * p.x + p.y;
        checked_div(1.0, d * p.x, p)?;
        Ok(Matrix2::new(
            beta1 * p.y / (d * d),
            -beta1 * p.x / (d * d),
            -(alpha2 + gamma2 * p.y) / (p.x * p.x),
            gamma2 / p.x,
        ))
    })
    .with_params(params.clone());
    Ok(ExampleSystem {
        id: ExampleId::Ex4,
        map,
        fixtures: vec![ex4_fixture(b1, gamma2, beta1)],
        params,
        continuum: None,
    })
}

/// Parameters of the immigration model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex5Params {
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl Ex5Params {
    fn from_map(p: &ParamMap, h1_default: f64) -> Self {
        Ex5Params {
            b1: p["b1"],
            b2: p["b2"],
            c1: p["c1"],
            c2: p["c2"],
            h1: p.get("h1").copied().unwrap_or(h1_default),
            h2: p["h2"],
        }
    }

    pub fn with_h1(self, h1: f64) -> Self {
        Ex5Params { h1, ..self }
    }

    pub fn map(&self) -> PlanarMap {
        let Ex5Params { b1, b2, c1, c2, h1, h2 } = *self;
        leslie_gower("ex5", b1, b2, c1, c2, h1, h2)
    }

    pub fn critical_curves(&self) -> CriticalCurves {
        CriticalCurves { p: *self }
    }
}

/// Search line for the two-equilibria regime (`h1` varies).
pub const EX5_SEARCH_LINE: Ex5Params = Ex5Params {
    b1: 3.0,
    b2: 3.0,
    c1: 2.0,
    c2: 2.0,
    h1: 0.0,
    h2: 0.1,
};

/// `h1` bracket on the search line: three equilibria at the low end, one at the high end.
pub const EX5_H1_BRACKET: (f64, f64) = (0.1, 0.2);

/// The equilibrium curves `C₁: f(x, y) = x` and `C₂: g(x, y) = y` written
/// as polynomial residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalCurves {
    pub p: Ex5Params,
}

/// A common point of the two critical curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intersection {
    pub point: Point2,
    pub slope1: f64,
    pub slope2: f64,
    pub tangential: bool,
}

/// Columns closer than this are merged into one (tangential) intersection.
const MERGE_DIST: f64 = 1e-4;
const SCAN_COLUMNS: usize = 20_000;

impl CriticalCurves {
    pub fn c1_residual(&self, x: f64, y: f64) -> f64 {
        let p = &self.p;
        x * x + p.c1 * x * y + (1.0 - p.b1 - p.h1) * x - p.c1 * p.h1 * y - p.h1
    }

    pub fn c2_residual(&self, x: f64, y: f64) -> f64 {
        let p = &self.p;
        y * y + p.c2 * x * y + (1.0 - p.b2 - p.h2) * y - p.c2 * p.h2 * x - p.h2
    }

    /// `C₁` solved for `y` (linear in `y`); defined for `x > h₁`.
    pub fn y1(&self, x: f64) -> Option<f64> {
        let p = &self.p;
        let den = p.c1 * (x - p.h1);
        if den.abs() < 1e-14 {
            return None;
        }
        let y = (-x * x - (1.0 - p.b1 - p.h1) * x + p.h1) / den;
        (y.is_finite() && y >= 0.0).then_some(y)
    }

    /// `C₂` solved for `y` (nonnegative root of the quadratic).
    pub fn y2(&self, x: f64) -> Option<f64> {
        let p = &self.p;
        let b = p.c2 * x + 1.0 - p.b2 - p.h2;
        let c = p.c2 * p.h2 * x + p.h2;
        let disc = b * b + 4.0 * c;
        if disc < 0.0 {
            return None;
        }
        // cancellation-free positive root of y² + b y − c = 0
        let y = if b <= 0.0 {
            (-b + disc.sqrt()) / 2.0
        } else {
            2.0 * c / (b + disc.sqrt())
        };
        (y.is_finite() && y >= 0.0).then_some(y)
    }

    /// Both graphs over the abscissae `xs`; columns without a root are skipped.
    pub fn graphs(&self, xs: &[f64]) -> (Vec<Point2>, Vec<Point2>) {
        let g1 = xs.iter().filter_map(|&x| self.y1(x).map(|y| Point2::new(x, y))).collect();
        let g2 = xs.iter().filter_map(|&x| self.y2(x).map(|y| Point2::new(x, y))).collect();
        (g1, g2)
    }

    fn gap(&self, x: f64) -> Option<f64> {
        Some(self.y1(x)? - self.y2(x)?)
    }

    fn slope(&self, f: impl Fn(f64) -> Option<f64>, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1.0);
        match (f(x + h), f(x - h)) {
            (Some(a), Some(b)) => (a - b) / (2.0 * h),
            _ => f64::NAN,
        }
    }

    fn bisect_gap(&self, mut lo: f64, mut hi: f64) -> f64 {
        let glo = self.gap(lo).unwrap_or(0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match self.gap(mid) {
                Some(g) if g.signum() == glo.signum() => lo = mid,
                _ => hi = mid,
            }
        }
        0.5 * (lo + hi)
    }

    /// Minimizes `|gap|` on `[lo, hi]` by golden-section search.
    fn min_gap(&self, mut lo: f64, mut hi: f64) -> f64 {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let f = |x: f64| self.gap(x).map_or(f64::INFINITY, f64::abs);
        for _ in 0..200 {
            let a = hi - r * (hi - lo);
            let b = lo + r * (hi - lo);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        0.5 * (lo + hi)
    }

    /// Common points in `(h₁, b₁ + h₁] × [h₂, ∞)`: sign changes of
    /// `y₁ − y₂` plus near-zero local minima of `|y₁ − y₂|` (tangencies).
    pub fn intersections(&self) -> Vec<Intersection> {
        let p = &self.p;
        let (lo, hi) = (p.h1, p.b1 + p.h1);
        let step = (hi - lo) / SCAN_COLUMNS as f64;
        let xs: Vec<f64> = (1..=SCAN_COLUMNS).map(|k| lo + k as f64 * step).collect();
        let gaps: Vec<Option<f64>> = xs.iter().map(|&x| self.gap(x)).collect();
        let mut roots = Vec::new();
        for k in 1..xs.len() {
            let (Some(a), Some(b)) = (gaps[k - 1], gaps[k]) else { continue };
            if a == 0.0 || a.signum() != b.signum() {
                roots.push(self.bisect_gap(xs[k - 1], xs[k]));
            } else if k + 1 < xs.len() {
                if let Some(c) = gaps[k + 1] {
                    if b.abs() < a.abs() && b.abs() <= c.abs() && b.signum() == c.signum() {
                        let x = self.min_gap(xs[k - 1], xs[k + 1]);
                        if self.gap(x).is_some_and(|g| g.abs() < 1e-9) {
                            roots.push(x);
                        }
                    }
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        let mut merged: Vec<Vec<f64>> = Vec::new();
        for x in roots {
            match merged.last_mut() {
                Some(group) if x - group[group.len() - 1] < MERGE_DIST => group.push(x),
                _ => merged.push(vec![x]),
            }
        }
        merged
            .into_iter()
            .filter_map(|group| {
                let x = group.iter().sum::<f64>() / group.len() as f64;
                let y = self.y1(x)?;
                if y < p.h2 {
                    return None;
                }
                let slope1 = self.slope(|x| self.y1(x), x);
                let slope2 = self.slope(|x| self.y2(x), x);
                Some(Intersection {
                    point: Point2::new(x, y),
                    slope1,
                    slope2,
                    tangential: group.len() > 1 || (slope1 - slope2).abs() < 1e-3,
                })
            })
            .collect()
    }
}

/// The two-equilibria instance on a search line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex5Tangency {
    pub h1: f64,
    /// The non-hyperbolic (tangential) equilibrium.
    pub nonhyperbolic: Point2,
    /// The transversal equilibrium.
    pub attractor: Point2,
    pub bisection_steps: usize,
}

/// Bisects `h1` in `bracket` between the three- and one-equilibrium regimes
/// and polishes the tangency by Newton on `(T(p) − p, det(J − I)) = 0` in the
/// unknowns `(x, y, h1)`.
pub fn ex5_tangency(line: &Ex5Params, bracket: (f64, f64)) -> Result<Ex5Tangency, ExampleError> {
    let count = |h1: f64| line.with_h1(h1).critical_curves().intersections().len();
    let (mut lo, mut hi) = bracket;
    let (nlo, nhi) = (count(lo), count(hi));
    if nlo < 3 || nhi != 1 {
        return Err(ExampleError::NoTangency(format!(
            "h1 = {lo} gives {nlo} equilibria and h1 = {hi} gives {nhi}; need 3 and 1"
        )));
    }
    let mut steps = 0;
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if count(mid) >= 3 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    // the two merging roots are the closest pair on the three-root side
    let roots = line.with_h1(lo).critical_curves().intersections();
    let (i, _) = roots
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, w[1].point.dist(w[0].point)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three roots");
    let seed = (roots[i].point + roots[i + 1].point) * 0.5;
    let transversal = roots
        .iter()
        .enumerate()
        .find(|(k, _)| *k != i && *k != i + 1)
        .map(|(_, r)| r.point)
        .expect("three roots");
    let (point, h1) = polish_tangency(line, seed, lo)
        .ok_or_else(|| ExampleError::NoTangency("Newton polish of the tangency failed".into()))?;
    Ok(Ex5Tangency {
        h1,
        nonhyperbolic: point,
        attractor: polish_fixed(&line.with_h1(h1), transversal),
        bisection_steps: steps,
    })
}

fn tangency_residual(line: &Ex5Params, z: [f64; 3]) -> Option<[f64; 3]> {
    let m = line.with_h1(z[2]).map();
    let p = Point2::new(z[0], z[1]);
    let q = m.evaluate(p).ok()?;
    let j = m.jacobian(p, 1e-6).ok()?.sub_identity();
    Some([q.x - p.x, q.y - p.y, j.det()])
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn polish_tangency(line: &Ex5Params, seed: Point2, h1: f64) -> Option<(Point2, f64)> {
    let mut z = [seed.x, seed.y, h1];
    for _ in 0..50 {
        let r = tangency_residual(line, z)?;
        if r.iter().all(|v| v.abs() < 1e-15) {
            break;
        }
        let mut a = [[0.0; 3]; 3];
        for k in 0..3 {
            let h = 1e-7 * z[k].abs().max(1.0);
            let (mut zp, mut zm) = (z, z);
            zp[k] += h;
            zm[k] -= h;
            let (rp, rm) = (tangency_residual(line, zp)?, tangency_residual(line, zm)?);
            for i in 0..3 {
                a[i][k] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let dz = solve3(a, [-r[0], -r[1], -r[2]])?;
        for k in 0..3 {
            z[k] += dz[k];
        }
        if dz.iter().all(|d| d.abs() < 1e-16) {
            break;
        }
    }
    let r = tangency_residual(line, z)?;
    r.iter()
        .all(|v| v.abs() < 1e-12)
        .then_some((Point2::new(z[0], z[1]), z[2]))
}

fn polish_fixed(p: &Ex5Params, guess: Point2) -> Point2 {
    crate::fixedpoints::find_fixed_point(&p.map(), guess).map_or(guess, |r| r.location)
}

fn ex5_fixture(map: &PlanarMap, loc: Point2, tangential: bool) -> Fixture {
    let rec = fixed_point_record(map, loc).ok();
    Fixture {
        point: loc,
        kind: PointKind::Fixed,
        pairs: rec
            .map(|r| {
                vec![
                    EigenPair { value: r.eigen.lambda, vector: r.eigen.v_lambda },
                    EigenPair { value: r.eigen.mu, vector: r.eigen.v_mu },
                ]
            })
            .unwrap_or_default(),
        taylor2: None,
        note: format!(
            "located numerically as a {} intersection of the critical curves",
            if tangential { "tangential" } else { "transversal" }
        ),
    }
}

fn ex5(params: ParamMap, tangency: Option<Ex5Tangency>) -> Result<ExampleSystem, ExampleError> {
    let p = Ex5Params::from_map(&params, 0.0);
    let map = p.map().with_params(params.clone());
    let fixtures = match tangency {
        Some(t) => vec![
            ex5_fixture(&map, t.nonhyperbolic, true),
            ex5_fixture(&map, t.attractor, false),
        ],
        None => p
            .critical_curves()
            .intersections()
            .into_iter()
            .map(|ix| ex5_fixture(&map, polish_fixed(&p, ix.point), ix.tangential))
            .collect(),
    };
    Ok(ExampleSystem {
        id: ExampleId::Ex5,
        map,
        fixtures,
        params,
        continuum: None,
    })
}

impl ExampleSystem {
    /// The equilibrium used by default for curve and basin computations.
    pub fn default_fixed_point(&self) -> Option<Point2> {
        match self.id {
            ExampleId::Ex1 => Some(Point2::new(0.0, 1.0)),
            ExampleId::Ex2 => self.continuum.map(|c| c.point(0.5)),
            ExampleId::Ex3T => Some(Point2::new(2.0, 2.0)),
            ExampleId::Ex3T2 => Some(Point2::new(3.0, 1.5)),
            ExampleId::Ex4 => self.fixtures.first().map(|f| f.point),
            ExampleId::Ex5 => self
                .fixtures
                .iter()
                .find(|f| f.note.contains("tangential"))
                .map(|f| f.point),
        }
    }

    /// Window used when none is given: covers the fixtures and the
    /// interesting part of the dynamics.
    pub fn default_window(&self) -> Rect {
        let r = |a, b, c, d| Rect::new(a, b, c, d).expect("valid window");
        match self.id {
            ExampleId::Ex1 => r(0.0, 5.0, 0.0, 6.0),
            ExampleId::Ex2 => r(0.0, 2.0, 0.0, 2.0),
            ExampleId::Ex3T | ExampleId::Ex3T2 => r(0.5, 8.0, 0.5, 8.0),
            ExampleId::Ex4 => r(0.0, 6.0, 0.0, 4.0),
            ExampleId::Ex5 => r(0.0, 3.0, 0.0, 3.0),
        }
    }
}

/// One sample of a continuum sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumSample {
    pub parameter: f64,
    pub record: FixedPointRecord,
    pub expected: Fixture,
    /// Largest relative eigenvalue mismatch against the fixture formulas.
    pub eigen_error: f64,
    pub verified: bool,
}

fn fixture_at(sys: &ExampleSystem, s: f64) -> Option<Fixture> {
    let p = &sys.params;
    match sys.id {
        ExampleId::Ex1 => Some(ex1_fixture(p["a"], s)),
        ExampleId::Ex2 => Some(ex2_fixture(p["b1"], p["b2"], s)),
        ExampleId::Ex3T2 => Some(ex3_t2_fixture(s)),
        _ => None,
    }
}

/// Relative mismatch between computed eigenvalues and a fixture's.
pub fn eigenvalue_error(record: &FixedPointRecord, fixture: &Fixture) -> f64 {
    let mut want: Vec<f64> = fixture.pairs.iter().map(|p| p.value).collect();
    let mut got = vec![record.eigen.lambda, record.eigen.mu];
    want.sort_by(f64::total_cmp);
    got.sort_by(f64::total_cmp);
    if want.len() != got.len() || !record.eigen.real_distinct {
        return f64::INFINITY;
    }
    want.iter()
        .zip(&got)
        .map(|(w, g)| (w - g).abs() / w.abs().max(1e-300))
        .fold(0.0, f64::max)
}

/// `n` equally spaced samples over `[lo, hi]` of the continuum parameter.
pub fn sweep_continuum_over(sys: &ExampleSystem, lo: f64, hi: f64, n: usize) -> Vec<ContinuumSample> {
    let Some(c) = sys.continuum else { return Vec::new() };
    (0..n)
        .filter_map(|k| {
            let s = if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
            let record = fixed_point_record(&sys.map, c.point(s)).ok()?;
            let expected = fixture_at(sys, s)?;
            let eigen_error = eigenvalue_error(&record, &expected);
            Some(ContinuumSample {
                parameter: s,
                verified: record.residual < 1e-10 && eigen_error < 1e-8,
                record,
                expected,
                eigen_error,
            })
        })
        .collect()
}

/// `n` samples over the continuum's default range (`ȳ ∈ [0, 2]`,
/// `t ∈ [0, 1]`, `x̄ ∈ [3, 5]`).
pub fn sweep_continuum(sys: &ExampleSystem, n: usize) -> Vec<ContinuumSample> {
    let Some(c) = sys.continuum else { return Vec::new() };
    let (lo, hi) = c.default_range();
    sweep_continuum_over(sys, lo, hi, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoints::eigen2x2;
    use crate::map::DEFAULT_FD_STEP;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(kv: &[(&str, f64)]) -> ParamMap {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn same_direction(a: Point2, b: Point2) -> bool {
        let (a, b) = (a.normalized().unwrap(), b.normalized().unwrap());
        (a - b).norm().min((a + b).norm()) < 1e-8
    }

    #[test]
    fn ids_round_trip() {
        for id in ExampleId::ALL {
            assert_eq!(id.as_str().parse::<ExampleId>().unwrap(), id);
        }
        assert!("ex9".parse::<ExampleId>().is_err());
    }

    #[test]
    fn fixtures_are_fixed_points_with_matching_eigen_data() {
        for id in ExampleId::ALL {
            let sys = default_example(id);
            assert!(!sys.fixtures.is_empty(), "{id}");
            for fx in &sys.fixtures {
                let m = match fx.kind {
                    PointKind::Fixed => sys.map.clone(),
                    PointKind::PeriodTwo => sys.map.second_iterate(),
                };
                let r = (m.evaluate(fx.point).unwrap() - fx.point).norm();
                assert!(r < 1e-10, "{id} {}: residual {r}", fx.note);
                let e = eigen2x2(&m.jacobian(fx.point, DEFAULT_FD_STEP).unwrap());
                for pair in &fx.pairs {
                    let (v, ev) = if (pair.value - e.lambda).abs() < (pair.value - e.mu).abs() {
                        (e.v_lambda.unwrap(), e.lambda)
                    } else {
                        (e.v_mu.unwrap(), e.mu)
                    };
                    assert!((ev - pair.value).abs() < 1e-8, "{id} {}", fx.note);
                    if let Some(w) = pair.vector {
                        assert!(same_direction(v, w), "{id} {}: {v} vs {w}", fx.note);
                    }
                }
            }
        }
    }

    #[test]
    fn ex4_closed_forms() {
        let fx = &default_example(ExampleId::Ex4).fixtures[0];
        assert_eq!(fx.point, Point2::new(2.0, 1.0));
        assert!((fx.pairs[0].value + 1.0 / 6.0).abs() < 1e-15);
        assert!(same_direction(fx.pairs[1].vector.unwrap(), Point2::new(-1.0, 1.0)));
        assert_eq!(fx.taylor2, Some(Point2::new(0.0, 0.25)));
    }

    #[test]
    fn constraint_violations_are_named() {
        let err = make_example(ExampleId::Ex1, &params(&[("a", 0.5)])).unwrap_err();
        assert!(err.to_string().contains("a > 1"));
        let err = make_example(ExampleId::Ex2, &params(&[("c1", 0.7)])).unwrap_err();
        assert!(err.to_string().contains("c1*(b2-1) = b1-1"));
        let err = make_example(ExampleId::Ex4, &params(&[("beta1", 4.0)])).unwrap_err();
        assert!(err.to_string().contains("beta1 - B1*gamma2"));
        assert!(matches!(
            make_example(ExampleId::Ex1, &params(&[("b", 1.0)])),
            Err(ExampleError::UnknownParameter { .. })
        ));
        assert!(matches!(
            make_example(ExampleId::Ex5, &params(&[("h1", -1.0)])),
            Err(ExampleError::NonPositive { .. })
        ));
    }

    #[test]
    fn ex2_fixture_at_half() {
        let fx = ex2_fixture(2.0, 3.0, 0.5);
        assert_eq!(fx.point, Point2::new(0.5, 1.0));
        assert!((fx.pairs[0].value - 5.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn sweeps() {
        let ex2 = default_example(ExampleId::Ex2);
        let s = sweep_continuum(&ex2, 5);
        let ts: Vec<f64> = s.iter().map(|r| r.parameter).collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(s.iter().all(|r| r.verified));

        let ex1 = default_example(ExampleId::Ex1);
        let s = sweep_continuum(&ex1, 3);
        for (r, want) in s.iter().zip([0.5, 1.0 / 3.0, 0.25]) {
            assert!((r.record.eigen.lambda - want).abs() < 1e-12);
            assert!(r.verified);
        }

        let ex3 = default_example(ExampleId::Ex3T2);
        for r in sweep_continuum(&ex3, 3) {
            let p = r.record.location;
            assert!((p.y - p.x / (p.x - 1.0)).abs() < 1e-15);
            assert!(r.verified);
        }
        assert!(sweep_continuum(&default_example(ExampleId::Ex4), 3).is_empty());
    }

    #[test]
    fn second_iterate_matches_closed_form() {
        let t = default_example(ExampleId::Ex3T).map.second_iterate();
        let t2 = default_example(ExampleId::Ex3T2).map;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = Point2::new(rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
            let (a, b) = (t.evaluate(p).unwrap(), t2.evaluate(p).unwrap());
            assert!((a - b).max_abs() <= 1e-12 * b.max_abs().max(1.0));
        }
    }

    #[test]
    fn ex3_t2_determinant() {
        let t2 = default_example(ExampleId::Ex3T2).map;
        let d = t2.jacobian(Point2::new(3.0, 1.5), DEFAULT_FD_STEP).unwrap().det();
        assert!((d - 1.0 / 4.5).abs() < 1e-15);
    }

    #[test]
    fn ex1_evaluation() {
        let m = default_example(ExampleId::Ex1).map;
        let q = m.evaluate(Point2::new(1.0, 1.0)).unwrap();
        assert!((q.x - 1.0 / 3.0).abs() < 1e-16 && q.y == 0.5);
    }

    #[test]
    fn exact_and_fd_jacobians_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for id in ExampleId::ALL {
            let sys = default_example(id);
            let w = sys.default_window();
            for _ in 0..50 {
                let p = Point2::new(
                    rng.gen_range(w.x_lo.max(0.05)..w.x_hi),
                    rng.gen_range(w.y_lo.max(0.05)..w.y_hi),
                );
                let exact = sys.map.jacobian(p, DEFAULT_FD_STEP).unwrap();
                let fd = sys.map.jacobian_fd(p, DEFAULT_FD_STEP).unwrap();
                assert!(exact.max_abs_diff(&fd) <= 1e-6 * exact.norm().max(1.0), "{id} at {p}");
            }
        }
    }

    #[test]
    fn ex1_determinant_positive() {
        let m = default_example(ExampleId::Ex1).map;
        for p in Rect::new(0.01, 20.0, 0.01, 20.0).unwrap().cell_centers(20, 20) {
            let d = m.jacobian(p, DEFAULT_FD_STEP).unwrap().det();
            let want = (2.0 + 2.0 * p.x + p.y) / ((2.0 + p.y) * (1.0 + p.x)).powi(2);
            assert!(d > 0.0 && (d - want).abs() < 1e-14 * want.max(1.0));
        }
    }

    #[test]
    fn ex5_regimes_and_tangency() {
        let line = EX5_SEARCH_LINE;
        assert_eq!(line.with_h1(0.1).critical_curves().intersections().len(), 3);
        assert_eq!(line.with_h1(0.2).critical_curves().intersections().len(), 1);
        let t = ex5_tangency(&line, EX5_H1_BRACKET).unwrap();
        assert!(t.h1 > 0.1 && t.h1 < 0.2);
        let ix = line.with_h1(t.h1).critical_curves().intersections();
        assert_eq!(ix.len(), 2, "{ix:?}");
        let tang: Vec<_> = ix.iter().filter(|i| i.tangential).collect();
        assert_eq!(tang.len(), 1);
        assert!((tang[0].slope1 - tang[0].slope2).abs() < 1e-3);
        assert!(tang[0].point.dist(t.nonhyperbolic) < 1e-4);
        let trans = ix.iter().find(|i| !i.tangential).unwrap();
        assert!((trans.slope1 - trans.slope2).abs() > 1e-3);
        // the tangential point carries eigenvalue 1
        let m = line.with_h1(t.h1).map();
        let e = eigen2x2(&m.jacobian(t.nonhyperbolic, DEFAULT_FD_STEP).unwrap());
        assert!((e.mu - 1.0).abs() < 1e-9 && e.lambda.abs() < 1.0);
        // decreasing graphs
        assert!(tang[0].slope1 < 0.0 && trans.slope2 < 0.0);
    }

    #[test]
    fn ex5_three_equilibria_are_se_ordered() {
        let ix = EX5_SEARCH_LINE.with_h1(0.1).critical_curves().intersections();
        assert_eq!(ix.len(), 3);
        for w in ix.windows(2) {
            assert!(crate::geometry::le_se(w[0].point, w[1].point));
        }
    }

    #[test]
    fn ex5_without_immigration_reduces_to_leslie_gower_lines() {
        let p = Ex5Params { b1: 2.0, b2: 3.0, c1: 0.5, c2: 2.0, h1: 0.0, h2: 0.0 };
        let c = p.critical_curves();
        for x in [0.2, 0.5, 0.9] {
            let y = c.y1(x).unwrap();
            assert!((x + p.c1 * y - (p.b1 - 1.0)).abs() < 1e-12);
            let y = c.y2(x).unwrap();
            assert!((y + p.c2 * x - (p.b2 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn default_ex5_has_two_equilibria() {
        let sys = default_example(ExampleId::Ex5);
        assert_eq!(sys.fixtures.len(), 2);
        assert!(sys.default_fixed_point().is_some());
    }

    proptest! {
        #[test]
        fn ex4_second_eigenvalue_in_open_unit_interval(b1 in 0.1f64..5.0, gamma2 in 0.1f64..5.0, alpha2 in 0.1f64..5.0) {
            let beta1 = b1 * gamma2 + 2.0 * (b1 * alpha2).sqrt();
            let sys = make_example(ExampleId::Ex4, &params(&[("B1", b1), ("gamma2", gamma2), ("alpha2", alpha2), ("beta1", beta1)])).unwrap();
            let fx = &sys.fixtures[0];
            let l2 = fx.pairs[0].value;
            prop_assert!(l2 > -1.0 && l2 < 0.0);
            let e = eigen2x2(&sys.map.jacobian(fx.point, DEFAULT_FD_STEP).unwrap());
            prop_assert!((e.lambda - l2).abs() < 1e-9 && (e.mu - 1.0).abs() < 1e-9);
            prop_assert!(same_direction(e.v_lambda.unwrap(), fx.pairs[0].vector.unwrap()));
            prop_assert!(same_direction(e.v_mu.unwrap(), fx.pairs[1].vector.unwrap()));
        }
    }
}
