//! Points, rectangles, 2×2 matrices and the two partial orders of the plane.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// `p ⪯_se q`: `p.x ≤ q.x` and `p.y ≥ q.y`.
pub fn le_se(p: Point2, q: Point2) -> bool {
    p.x <= q.x && p.y >= q.y
}

/// `p ⪯_ne q`: both coordinates of `p` are at most those of `q`.
pub fn le_ne(p: Point2, q: Point2) -> bool {
    p.x <= q.x && p.y <= q.y
}

/// Comparable in the south-east order.
pub fn comparable_se(p: Point2, q: Point2) -> bool {
    le_se(p, q) || le_se(q, p)
}

/// Closed-quadrant membership of a point relative to an origin, with
/// strict-interior flags. Index `k` refers to quadrant `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QuadrantSet {
    pub member: [bool; 4],
    pub interior: [bool; 4],
}

impl QuadrantSet {
    /// Quadrant numbers (1..=4) the point belongs to.
    pub fn quadrants(&self) -> Vec<u8> {
        (0..4).filter(|&k| self.member[k]).map(|k| k as u8 + 1).collect()
    }

    pub fn contains(&self, quadrant: u8) -> bool {
        (1..=4).contains(&quadrant) && self.member[quadrant as usize - 1]
    }

    pub fn in_interior(&self, quadrant: u8) -> bool {
        (1..=4).contains(&quadrant) && self.interior[quadrant as usize - 1]
    }
}

/// Quadrants `Q1..Q4` relative to `origin` that contain `p`.
pub fn quadrant_membership(origin: Point2, p: Point2) -> QuadrantSet {
    let (dx, dy) = (p.x - origin.x, p.y - origin.y);
    QuadrantSet {
        member: [
            dx >= 0.0 && dy >= 0.0,
            dx <= 0.0 && dy >= 0.0,
            dx <= 0.0 && dy <= 0.0,
            dx >= 0.0 && dy <= 0.0,
        ],
        interior: [
            dx > 0.0 && dy > 0.0,
            dx < 0.0 && dy > 0.0,
            dx < 0.0 && dy < 0.0,
            dx > 0.0 && dy < 0.0,
        ],
    }
}

/// Strict membership in `int Q2(origin)` with every inequality cleared by `margin`.
pub fn in_interior_q2(origin: Point2, p: Point2, margin: f64) -> bool {
    p.x < origin.x - margin && p.y > origin.y + margin
}

/// Strict membership in `int Q4(origin)` with every inequality cleared by `margin`.
pub fn in_interior_q4(origin: Point2, p: Point2, margin: f64) -> bool {
    p.x > origin.x + margin && p.y < origin.y - margin
}

/// Cartesian product of two closed intervals; outer ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

/// Window used when an unbounded rectangle has to be sampled.
pub const DEFAULT_SAMPLING_WINDOW: Rect = Rect {
    x_lo: 0.0,
    x_hi: 50.0,
    y_lo: 0.0,
    y_hi: 50.0,
};

impl Rect {
    /// Builds a rectangle, rejecting NaN bounds and empty intervals.
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Option<Rect> {
        let ok = [x_lo, x_hi, y_lo, y_hi].iter().all(|v| !v.is_nan())
            && x_lo <= x_hi
            && y_lo <= y_hi
            && x_lo < f64::INFINITY
            && y_lo < f64::INFINITY
            && x_hi > f64::NEG_INFINITY
            && y_hi > f64::NEG_INFINITY;
        ok.then_some(Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        })
    }

    pub fn whole_plane() -> Rect {
        Rect {
            x_lo: f64::NEG_INFINITY,
            x_hi: f64::INFINITY,
            y_lo: f64::NEG_INFINITY,
            y_hi: f64::INFINITY,
        }
    }

    /// `[0, ∞)²`
    pub fn nonnegative_quadrant() -> Rect {
        Rect {
            x_lo: 0.0,
            x_hi: f64::INFINITY,
            y_lo: 0.0,
            y_hi: f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        [self.x_lo, self.x_hi, self.y_lo, self.y_hi]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_lo && p.x <= self.x_hi && p.y >= self.y_lo && p.y <= self.y_hi
    }

    /// Containment with a slack that tolerates roundoff at the edges.
    pub fn contains_with_slack(&self, p: Point2, slack: f64) -> bool {
        p.x >= self.x_lo - slack
            && p.x <= self.x_hi + slack
            && p.y >= self.y_lo - slack
            && p.y <= self.y_hi + slack
    }

    pub fn contains_strictly(&self, p: Point2) -> bool {
        p.x > self.x_lo && p.x < self.x_hi && p.y > self.y_lo && p.y < self.y_hi
    }

    /// Intersection; `None` when empty.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        Rect::new(
            self.x_lo.max(other.x_lo),
            self.x_hi.min(other.x_hi),
            self.y_lo.max(other.y_lo),
            self.y_hi.min(other.y_hi),
        )
    }

    /// Replaces infinite ends by the corresponding ends of `window`.
    pub fn clamp_to(&self, window: &Rect) -> Rect {
        let pick = |v: f64, w: f64| if v.is_finite() { v } else { w };
        let mut r = Rect {
            x_lo: pick(self.x_lo, window.x_lo),
            x_hi: pick(self.x_hi, window.x_hi),
            y_lo: pick(self.y_lo, window.y_lo),
            y_hi: pick(self.y_hi, window.y_hi),
        };
        // a finite end lying beyond the window end would invert the interval
        if r.x_hi < r.x_lo {
            r.x_hi = r.x_lo + window.width().max(1.0);
        }
        if r.y_hi < r.y_lo {
            r.y_hi = r.y_lo + window.height().max(1.0);
        }
        r
    }

    /// Cell-center samples of an `nx × ny` grid, row by row from the bottom.
    pub fn cell_centers(&self, nx: usize, ny: usize) -> Vec<Point2> {
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(self.cell_center(i, j, nx, ny));
            }
        }
        out
    }

    pub fn cell_center(&self, i: usize, j: usize, nx: usize, ny: usize) -> Point2 {
        Point2::new(
            self.x_lo + (i as f64 + 0.5) * self.width() / nx as f64,
            self.y_lo + (j as f64 + 0.5) * self.height() / ny as f64,
        )
    }

    /// Distance from `p` to the boundary of the rectangle (finite sides only).
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        [
            (p.x - self.x_lo).abs(),
            (p.x - self.x_hi).abs(),
            (p.y - self.y_lo).abs(),
            (p.y - self.y_hi).abs(),
        ]
        .into_iter()
        .filter(|d| d.is_finite())
        .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]×[{}, {}]",
            self.x_lo, self.x_hi, self.y_lo, self.y_hi
        )
    }
}

/// A real 2×2 matrix `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, 0.0, b)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.a11, self.a12, self.a21, self.a22]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn apply(&self, v: Point2) -> Point2 {
        Point2::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a21 * v.x + self.a22 * v.y,
        )
    }

    pub fn mul(&self, o: &Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }

    pub fn sub_identity(&self) -> Matrix2 {
        Matrix2::new(self.a11 - 1.0, self.a12, self.a21, self.a22 - 1.0)
    }

    /// Solves `M·x = rhs` by Cramer's rule; `None` when `|det|` is negligible
    /// relative to the matrix scale.
    pub fn solve(&self, rhs: Point2) -> Option<Point2> {
        let det = self.det();
        let scale = self.norm();
        if !det.is_finite() || det.abs() <= 1e-14 * scale * scale || scale == 0.0 {
            return None;
        }
        Some(Point2::new(
            (self.a22 * rhs.x - self.a12 * rhs.y) / det,
            (self.a11 * rhs.y - self.a21 * rhs.x) / det,
        ))
    }

    pub fn max_abs_diff(&self, o: &Matrix2) -> f64 {
        (self.a11 - o.a11)
            .abs()
            .max((self.a12 - o.a12).abs())
            .max((self.a21 - o.a21).abs())
            .max((self.a22 - o.a22).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn se_order_examples() {
        assert!(le_se(Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)));
        assert!(!le_se(Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)));
        let p = Point2::new(0.3, -2.0);
        assert!(le_se(p, p));
        assert!(le_ne(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)));
    }

    #[test]
    fn quadrant_examples() {
        let q = quadrant_membership(Point2::ORIGIN, Point2::ORIGIN);
        assert_eq!(q.quadrants(), vec![1, 2, 3, 4]);
        assert_eq!(q.interior, [false; 4]);

        let q = quadrant_membership(Point2::new(2.0, 1.0), Point2::new(1.0, 2.0));
        assert_eq!(q.quadrants(), vec![2]);
        assert!(q.in_interior(2));

        let q = quadrant_membership(Point2::ORIGIN, Point2::new(1.0, -1.0));
        assert_eq!(q.quadrants(), vec![4]);
        assert!(q.in_interior(4));
    }

    #[test]
    fn rect_rejects_inverted_and_clamps() {
        assert!(Rect::new(1.0, 0.0, 0.0, 1.0).is_none());
        assert!(Rect::new(f64::NAN, 1.0, 0.0, 1.0).is_none());
        let r = Rect::nonnegative_quadrant().clamp_to(&DEFAULT_SAMPLING_WINDOW);
        assert_eq!(r, DEFAULT_SAMPLING_WINDOW);
        assert!(!Rect::nonnegative_quadrant().is_bounded());
    }

    #[test]
    fn solve_inverts() {
        let m = Matrix2::new(2.0, 1.0, -1.0, 3.0);
        let x = m.solve(Point2::new(1.0, 2.0)).unwrap();
        let back = m.apply(x);
        assert!((back.x - 1.0).abs() < 1e-15 && (back.y - 2.0).abs() < 1e-15);
        assert!(Matrix2::new(1.0, 2.0, 2.0, 4.0).solve(Point2::ORIGIN).is_none());
    }

    fn pt() -> impl Strategy<Value = Point2> {
        // small integer grid so that equal coordinates actually occur
        (-3i32..3, -3i32..3).prop_map(|(a, b)| Point2::new(a as f64, b as f64))
    }

    proptest! {
        #[test]
        fn orders_are_partial_orders(p in pt(), q in pt(), r in pt()) {
            for le in [le_se as fn(Point2, Point2) -> bool, le_ne] {
                prop_assert!(le(p, p));
                if le(p, q) && le(q, p) {
                    prop_assert_eq!(p, q);
                }
                if le(p, q) && le(q, r) {
                    prop_assert!(le(p, r));
                }
            }
        }

        #[test]
        fn self_membership_is_all_closed(x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let p = Point2::new(x, y);
            let q = quadrant_membership(p, p);
            prop_assert_eq!(q.member, [true; 4]);
            prop_assert_eq!(q.interior, [false; 4]);
        }
    }
}
