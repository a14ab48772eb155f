//! Basin decomposition rasters, limiting equilibria and a continuity probe
//! for the limit map.

use crate::curves::{classify_side, SideLabel, SideOptions, ESCAPE_BOUND};
use crate::format::g17;
use crate::geometry::{Point2, Rect};
use crate::map::PlanarMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinLabel {
    Minus,
    Plus,
    Band,
    Undecided,
    Singular,
}

impl BasinLabel {
    pub const ALL: [BasinLabel; 5] = [
        BasinLabel::Minus,
        BasinLabel::Plus,
        BasinLabel::Band,
        BasinLabel::Undecided,
        BasinLabel::Singular,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BasinLabel::Minus => "minus",
            BasinLabel::Plus => "plus",
            BasinLabel::Band => "band",
            BasinLabel::Undecided => "undecided",
            BasinLabel::Singular => "singular",
        }
    }

    pub fn gray(self) -> u8 {
        match self {
            BasinLabel::Minus => 0,
            BasinLabel::Plus => 255,
            BasinLabel::Band => 128,
            BasinLabel::Undecided => 64,
            BasinLabel::Singular => 32,
        }
    }
}

impl From<SideLabel> for BasinLabel {
    fn from(l: SideLabel) -> Self {
        match l {
            SideLabel::Minus => BasinLabel::Minus,
            SideLabel::Plus => BasinLabel::Plus,
            SideLabel::Band => BasinLabel::Band,
            SideLabel::Undecided => BasinLabel::Undecided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    pub map: String,
    pub params: BTreeMap<String, f64>,
    pub fixed_point: Point2,
    pub side: SideOptions,
}

/// Labels of cell centers, row-major from the bottom row (`j = 0` at `y_lo`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinRaster {
    pub window: Rect,
    pub nx: usize,
    pub ny: usize,
    pub labels: Vec<BasinLabel>,
    pub meta: RasterMeta,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("raster window must be bounded with positive area: {0}")]
    Window(Rect),
    #[error("raster needs at least 2×2 cells, got {0}×{1}")]
    Size(usize, usize),
}

/// Classifies every cell center of `window` relative to `fp`.
pub fn raster(
    map: &PlanarMap,
    fp: Point2,
    window: &Rect,
    nx: usize,
    ny: usize,
    opts: &SideOptions,
) -> Result<BasinRaster, RasterError> {
    if !(window.is_bounded() && window.width() > 0.0 && window.height() > 0.0) {
        return Err(RasterError::Window(*window));
    }
    if nx < 2 || ny < 2 {
        return Err(RasterError::Size(nx, ny));
    }
    let labels = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let p = window.cell_center(k % nx, k / nx, nx, ny);
            let v = classify_side(map, p, fp, opts);
            if v.singular {
                BasinLabel::Singular
            } else {
                v.label.into()
            }
        })
        .collect();
    Ok(BasinRaster {
        window: *window,
        nx,
        ny,
        labels,
        meta: RasterMeta {
            map: map.name().to_string(),
            params: map.params().clone(),
            fixed_point: fp,
            side: *opts,
        },
    })
}

impl BasinRaster {
    pub fn label(&self, i: usize, j: usize) -> BasinLabel {
        self.labels[j * self.nx + i]
    }

    pub fn center(&self, i: usize, j: usize) -> Point2 {
        self.window.cell_center(i, j, self.nx, self.ny)
    }

    /// Cell indices containing `p`, if inside the window.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        if !self.window.contains(p) {
            return None;
        }
        let i = ((p.x - self.window.x_lo) / self.window.width() * self.nx as f64) as usize;
        let j = ((p.y - self.window.y_lo) / self.window.height() * self.ny as f64) as usize;
        Some((i.min(self.nx - 1), j.min(self.ny - 1)))
    }

    pub fn census(&self) -> BTreeMap<BasinLabel, usize> {
        let mut c: BTreeMap<BasinLabel, usize> = BasinLabel::ALL.iter().map(|l| (*l, 0)).collect();
        for l in &self.labels {
            *c.entry(*l).or_default() += 1;
        }
        c
    }

    pub fn fraction(&self, label: BasinLabel) -> f64 {
        self.census()[&label] as f64 / self.labels.len() as f64
    }

    /// PGM P2, top row first; `comments` become `#` lines after the magic.
    pub fn to_pgm(&self, comments: &[String]) -> String {
        let mut s = String::from("P2\n");
        for c in comments {
            for line in c.lines() {
                let _ = writeln!(s, "# {line}");
            }
        }
        let _ = writeln!(s, "{} {}\n255", self.nx, self.ny);
        for j in (0..self.ny).rev() {
            let mut line = String::new();
            for i in 0..self.nx {
                let v = self.label(i, j).gray().to_string();
                if !line.is_empty() && line.len() + 1 + v.len() > 70 {
                    s.push_str(&line);
                    s.push('\n');
                    line.clear();
                }
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&v);
            }
            s.push_str(&line);
            s.push('\n');
        }
        s
    }

    /// Long-form CSV `i,j,x,y,label`, bottom row first.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            for line in c.lines() {
                let _ = writeln!(s, "# {line}");
            }
        }
        s.push_str("i,j,x,y,label\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = self.center(i, j);
                let _ = writeln!(s, "{i},{j},{},{},{}", g17(p.x), g17(p.y), self.label(i, j).as_str());
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitOutcome {
    Converged { limit: Point2, residual: f64 },
    /// A coordinate exceeded the escape bound.
    Diverged,
    Singular,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRecord {
    pub start: Point2,
    pub outcome: LimitOutcome,
    pub iterations: usize,
}

impl LimitRecord {
    pub fn limit(&self) -> Option<Point2> {
        match self.outcome {
            LimitOutcome::Converged { limit, .. } => Some(limit),
            _ => None,
        }
    }
}

pub const LIMIT_RESIDUAL_TOL: f64 = 1e-6;

/// Iterates until consecutive iterates are closer than `tol` and the last
/// one is a fixed point to `1e-6`; stops early on divergence past `1e6`.
pub fn limit_equilibrium(map: &PlanarMap, p: Point2, tol: f64, max_iter: usize) -> LimitRecord {
    let record = |outcome, iterations| LimitRecord {
        start: p,
        outcome,
        iterations,
    };
    let mut q = p;
    for n in 0..=max_iter {
        let next = match map.evaluate(q) {
            Ok(next) if next.is_finite() => next,
            _ => return record(LimitOutcome::Singular, n),
        };
        if next.max_abs() > ESCAPE_BOUND {
            return record(LimitOutcome::Diverged, n + 1);
        }
        let step = (next - q).norm();
        if step < tol {
            let residual = match map.evaluate(next) {
                Ok(t) => t.dist(next),
                Err(_) => return record(LimitOutcome::Singular, n + 1),
            };
            if residual < LIMIT_RESIDUAL_TOL {
                let (limit, n) = if step == 0.0 { (q, n) } else { (next, n + 1) };
                return record(LimitOutcome::Converged { limit, residual }, n);
            }
        }
        q = next;
    }
    record(LimitOutcome::MaxIter, max_iter)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub n: usize,
    pub max_gap: f64,
    /// Index `k` of the largest gap between samples `k` and `k + 1`.
    pub argmax: Option<usize>,
    pub excluded: usize,
    pub limits: Vec<LimitRecord>,
}

/// Limits at `n` equally spaced points of the segment `a`–`b` and the
/// largest distance between limits of adjacent convergent samples.
pub fn continuity_probe(map: &PlanarMap, segment: (Point2, Point2), n: usize, tol: f64, max_iter: usize) -> ContinuityReport {
    let n = n.max(2);
    let (a, b) = segment;
    let limits: Vec<LimitRecord> = (0..n)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            limit_equilibrium(map, a + (b - a) * s, tol, max_iter)
        })
        .collect();
    let mut max_gap = 0.0;
    let mut argmax = None;
    for (k, w) in limits.windows(2).enumerate() {
        if let (Some(p), Some(q)) = (w[0].limit(), w[1].limit()) {
            let gap = p.dist(q);
            if argmax.is_none() || gap > max_gap {
                max_gap = gap;
                argmax = Some(k);
            }
        }
    }
    ContinuityReport {
        n,
        max_gap,
        argmax,
        excluded: limits.iter().filter(|r| r.limit().is_none()).count(),
        limits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::SideMode;
    use crate::examples::{default_example, ExampleId};
    use crate::geometry::Matrix2;

    #[test]
    fn ex1_limit_on_axis() {
        let sys = default_example(ExampleId::Ex1);
        let r = limit_equilibrium(&sys.map, Point2::new(1.0, 1.0), 1e-13, 100_000);
        let l = r.limit().unwrap();
        assert!(l.x.abs() < 1e-10 && l.y >= 0.0, "{l}");
    }

    #[test]
    fn fixed_start_has_zero_iterations() {
        let sys = default_example(ExampleId::Ex4);
        let e = Point2::new(2.0, 1.0);
        let r = limit_equilibrium(&sys.map, e, 1e-13, 10);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.limit(), Some(e));
    }

    #[test]
    fn ex2_limit_on_segment() {
        let sys = default_example(ExampleId::Ex2);
        let l = limit_equilibrium(&sys.map, Point2::new(0.7, 0.9), 1e-13, 100_000).limit().unwrap();
        assert!((2.0 * l.x + l.y - 2.0).abs() < 1e-8, "{l}");
        assert!((0.0..=1.0).contains(&l.x));
    }

    #[test]
    fn ex4_diverges() {
        let sys = default_example(ExampleId::Ex4);
        let r = limit_equilibrium(&sys.map, Point2::new(1.5, 3.0), 1e-13, 100_000);
        assert_eq!(r.outcome, LimitOutcome::Diverged);
    }

    #[test]
    fn singular_start() {
        let sys = default_example(ExampleId::Ex4);
        let r = limit_equilibrium(&sys.map, Point2::new(0.0, 0.0), 1e-13, 10);
        assert_eq!(r.outcome, LimitOutcome::Singular);
    }

    #[test]
    fn degenerate_segment() {
        let sys = default_example(ExampleId::Ex1);
        let p = Point2::new(0.3, 0.7);
        let r = continuity_probe(&sys.map, (p, p), 8, 1e-13, 100_000);
        assert_eq!(r.max_gap, 0.0);
        assert_eq!(r.excluded, 0);
    }

    #[test]
    fn ex1_limits_monotone_along_vertical_segment() {
        let sys = default_example(ExampleId::Ex1);
        let r = continuity_probe(&sys.map, (Point2::new(0.1, 0.1), Point2::new(0.1, 4.0)), 64, 1e-13, 100_000);
        let ys: Vec<f64> = r.limits.iter().map(|l| l.limit().unwrap().y).collect();
        assert!(ys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ex3_limits_on_hyperbola() {
        let sys = default_example(ExampleId::Ex3T2);
        let r = continuity_probe(&sys.map, (Point2::new(1.0, 6.0), Point2::new(6.0, 1.0)), 32, 1e-13, 100_000);
        assert_eq!(r.excluded, 0);
        for l in r.limits.iter().filter_map(LimitRecord::limit) {
            assert!((l.x + l.y - l.x * l.y).abs() < 1e-6, "{l}");
        }
    }

    fn contraction() -> (PlanarMap, Point2, Rect) {
        let c = Point2::new(1.0, 1.0);
        (PlanarMap::affine("contract", Matrix2::diag(0.5, 0.5), c * 0.5), c, Rect::new(0.0, 2.0, 0.0, 2.0).unwrap())
    }

    #[test]
    fn contraction_in_limit_mode_is_band() {
        let (m, c, w) = contraction();
        let r = raster(&m, c, &w, 2, 2, &SideOptions::for_window(&w, SideMode::LimitEquilibrium)).unwrap();
        assert!(r.labels.iter().all(|l| *l == BasinLabel::Band));
    }

    #[test]
    fn raster_rejects_bad_input() {
        let (m, c, w) = contraction();
        let o = SideOptions::for_window(&w, SideMode::LimitEquilibrium);
        assert!(matches!(raster(&m, c, &w, 1, 4, &o), Err(RasterError::Size(1, 4))));
        assert!(raster(&m, c, &Rect::whole_plane(), 4, 4, &o).is_err());
    }

    #[test]
    fn ex4_raster_split() {
        let sys = default_example(ExampleId::Ex4);
        let w = sys.default_window();
        let r = raster(&sys.map, Point2::new(2.0, 1.0), &w, 32, 32, &SideOptions::for_window(&w, SideMode::QuadrantEscape)).unwrap();
        let c = r.census();
        assert!(c[&BasinLabel::Minus] > 0 && c[&BasinLabel::Plus] > 0);
        // minus above plus in every column
        for i in 0..r.nx {
            let col: Vec<BasinLabel> = (0..r.ny).map(|j| r.label(i, j)).collect();
            let last_plus = col.iter().rposition(|l| *l == BasinLabel::Plus);
            let first_minus = col.iter().position(|l| *l == BasinLabel::Minus);
            if let (Some(p), Some(m)) = (last_plus, first_minus) {
                assert!(p < m, "column {i}: {col:?}");
            }
        }
    }

    #[test]
    fn serialization() {
        let sys = default_example(ExampleId::Ex4);
        let w = sys.default_window();
        let r = raster(&sys.map, Point2::new(2.0, 1.0), &w, 4, 3, &SideOptions::for_window(&w, SideMode::QuadrantEscape)).unwrap();
        let back: BasinRaster = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let pgm = r.to_pgm(&["cfg".into()]);
        let mut lines = pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert_eq!(lines.next(), Some("# cfg"));
        assert_eq!(lines.next(), Some("4 3"));
        assert_eq!(lines.next(), Some("255"));
        assert_eq!(lines.count(), 3);
        let csv = r.to_csv(&[]);
        assert!(csv.starts_with("i,j,x,y,label\n0,0,0.75,"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn curve_vertices_sit_on_the_label_transition() {
        use crate::curves::{trace_stable_curve, CurveOptions};
        use crate::fixedpoints::fixed_point_record;
        let sys = default_example(ExampleId::Ex4);
        let w = sys.default_window();
        let fp = fixed_point_record(&sys.map, Point2::new(2.0, 1.0)).unwrap();
        let opts = SideOptions::for_window(&w, SideMode::QuadrantEscape);
        let r = raster(&sys.map, fp.location, &w, 64, 64, &opts).unwrap();
        let curve = trace_stable_curve(&sys.map, &fp, &w, &CurveOptions::new(SideMode::QuadrantEscape)).unwrap().curve;
        let mut checked = 0;
        for v in &curve.vertices {
            let Some((i, j)) = r.cell_of(*v) else { continue };
            let own = r.label(i, j);
            if !matches!(own, BasinLabel::Minus | BasinLabel::Plus) {
                continue;
            }
            let mut seen = Vec::new();
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (0..64).contains(&a) && (0..64).contains(&b) {
                        seen.push(r.label(a as usize, b as usize));
                    }
                }
            }
            assert!(
                seen.contains(&BasinLabel::Minus) && seen.contains(&BasinLabel::Plus) || seen.len() < 9,
                "vertex {v} in cell ({i}, {j}) far from the transition"
            );
            checked += 1;
        }
        assert!(checked > 50);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn limits_are_fixed_points(
            id in proptest::sample::select(vec![ExampleId::Ex1, ExampleId::Ex2, ExampleId::Ex3T2]),
            x in 0.3f64..4.0,
            y in 0.3f64..4.0,
        ) {
            let map = default_example(id).map;
            let rec = limit_equilibrium(&map, Point2::new(x, y), 1e-13, 1_000_000);
            if let Some(l) = rec.limit() {
                proptest::prop_assert!(map.evaluate(l).unwrap().dist(l) < LIMIT_RESIDUAL_TOL);
            }
        }

        #[test]
        fn ex2_limits_lie_on_the_segment(x in 0.0f64..2.0, y in 0.0f64..2.0) {
            let map = default_example(ExampleId::Ex2).map;
            let l = limit_equilibrium(&map, Point2::new(x, y), 1e-13, 1_000_000).limit();
            proptest::prop_assert!(l.is_some());
            let l = l.unwrap();
            proptest::prop_assert!((2.0 * l.x + l.y - 2.0).abs() < 1e-5, "{}", l);
        }
    }
}
