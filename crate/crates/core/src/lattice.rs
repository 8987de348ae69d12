//! Points, finite sets, boundaries and balls of Z², plus the discrete torus.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A point of Z².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0, y: 0 };

    #[inline]
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn norm2(self) -> i64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// The four nearest neighbours in the order E, N, W, S.
    #[inline]
    pub fn neighbors(self) -> [Point; 4] {
        [
            Point::new(self.x + 1, self.y),
            Point::new(self.x, self.y + 1),
            Point::new(self.x - 1, self.y),
            Point::new(self.x, self.y - 1),
        ]
    }

    #[inline]
    pub fn is_neighbor(self, other: Point) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }

    /// Image under the `k`-th element of the dihedral group of the square
    /// (k in 0..8), fixing the origin.
    pub fn isometry(self, k: u8) -> Point {
        let (x, y) = (self.x, self.y);
        let (x, y) = match k % 4 {
            0 => (x, y),
            1 => (-y, x),
            2 => (-x, -y),
            _ => (y, -x),
        };
        if k >= 4 {
            Point::new(x, -y)
        } else {
            Point::new(x, y)
        }
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

// Dense lookup is used while the bounding box stays below this many cells.
const DENSE_LIMIT: i64 = 1 << 24;

#[derive(Clone, Debug)]
enum Index {
    Dense { x0: i64, y0: i64, w: i64, h: i64, slot: Vec<u32> },
    Sparse(HashMap<Point, u32>),
}

/// A finite subset of Z² with a stable lexicographic order (x, then y).
///
/// Every member has an index in `0..len()`, so per-point quantities can be
/// stored in plain vectors.
#[derive(Clone, Debug)]
pub struct PointSet {
    pts: Vec<Point>,
    index: Index,
}

impl PointSet {
    pub fn new<I: IntoIterator<Item = Point>>(iter: I) -> Self {
        let mut pts: Vec<Point> = iter.into_iter().collect();
        pts.sort_unstable();
        pts.dedup();
        let index = Self::build_index(&pts);
        PointSet { pts, index }
    }

    fn build_index(pts: &[Point]) -> Index {
        if pts.is_empty() {
            return Index::Sparse(HashMap::new());
        }
        let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for p in pts {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
        if w.saturating_mul(h) <= DENSE_LIMIT {
            let mut slot = vec![0u32; (w * h) as usize];
            for (i, p) in pts.iter().enumerate() {
                slot[((p.y - y0) * w + (p.x - x0)) as usize] = i as u32 + 1;
            }
            Index::Dense { x0, y0, w, h, slot }
        } else {
            Index::Sparse(pts.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect())
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pts.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.pts
    }

    #[inline]
    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.pts.iter()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Point {
        self.pts[i]
    }

    #[inline]
    pub fn index_of(&self, p: Point) -> Option<usize> {
        match &self.index {
            Index::Dense { x0, y0, w, h, slot } => {
                let (dx, dy) = (p.x - x0, p.y - y0);
                if dx < 0 || dy < 0 || dx >= *w || dy >= *h {
                    return None;
                }
                let s = slot[(dy * w + dx) as usize];
                if s == 0 {
                    None
                } else {
                    Some(s as usize - 1)
                }
            }
            Index::Sparse(m) => m.get(&p).map(|&i| i as usize),
        }
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        self.index_of(p).is_some()
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet::new(self.pts.iter().chain(other.pts.iter()).copied())
    }

    pub fn with_point(&self, p: Point) -> PointSet {
        PointSet::new(self.pts.iter().copied().chain(std::iter::once(p)))
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        PointSet::new(self.pts.iter().copied().filter(|p| !other.contains(*p)))
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.pts.iter().all(|p| other.contains(*p))
    }

    pub fn translate(&self, v: Point) -> PointSet {
        PointSet::new(self.pts.iter().map(|&p| p + v))
    }

    /// Internal boundary: members with at least one neighbour outside.
    pub fn internal_boundary(&self) -> PointSet {
        PointSet::new(
            self.pts
                .iter()
                .copied()
                .filter(|p| p.neighbors().iter().any(|q| !self.contains(*q))),
        )
    }

    /// External boundary: non-members with at least one neighbour inside.
    pub fn external_boundary(&self) -> PointSet {
        PointSet::new(
            self.pts
                .iter()
                .flat_map(|p| p.neighbors())
                .filter(|q| !self.contains(*q)),
        )
    }

    /// Euclidean diameter (0 for a single point).
    pub fn diameter(&self) -> f64 {
        let b = self.internal_boundary();
        let pts = b.points();
        let mut best = 0i64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max((pts[i] - pts[j]).norm2());
            }
        }
        (best as f64).sqrt()
    }

    /// Largest norm of a member.
    pub fn max_norm(&self) -> f64 {
        self.pts.iter().map(|p| p.norm2()).max().map_or(0.0, |m| (m as f64).sqrt())
    }

    /// Member with the smallest norm, ties broken lexicographically.
    pub fn closest_to_origin(&self) -> Option<Point> {
        self.pts.iter().copied().min_by_key(|p| (p.norm2(), *p))
    }

    /// Lattice point nearest to the centroid (not necessarily a member).
    pub fn center(&self) -> Option<Point> {
        if self.pts.is_empty() {
            return None;
        }
        let n = self.pts.len() as f64;
        let cx = self.pts.iter().map(|p| p.x as f64).sum::<f64>() / n;
        let cy = self.pts.iter().map(|p| p.y as f64).sum::<f64>() / n;
        Some(Point::new(cx.round() as i64, cy.round() as i64))
    }
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.pts == other.pts
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;
    fn into_iter(self) -> Self::IntoIter {
        self.pts.iter()
    }
}

/// Euclidean ball B(c, r) = {y : ‖y − c‖ ≤ r}.
pub fn ball(c: Point, r: f64) -> PointSet {
    assert!(r >= 0.0 && r.is_finite(), "ball radius must be finite and non-negative");
    let k = r.floor() as i64;
    let r2 = r * r;
    let mut pts = Vec::with_capacity(((std::f64::consts::PI * r2) as usize) + 4 * (k as usize + 1));
    for dx in -k..=k {
        for dy in -k..=k {
            if ((dx * dx + dy * dy) as f64) <= r2 {
                pts.push(Point::new(c.x + dx, c.y + dy));
            }
        }
    }
    PointSet::new(pts)
}

/// Internal boundary of B(c, r) without enumerating the ball.
pub fn ball_boundary(c: Point, r: f64) -> PointSet {
    assert!(r >= 0.0 && r.is_finite(), "ball radius must be finite and non-negative");
    let k = r.floor() as i64;
    let r2 = r * r;
    // half-height of column dx, or -1 when the column is empty
    let m = |dx: i64| -> i64 {
        if dx.abs() > k {
            return -1;
        }
        let rem = r2 - (dx * dx) as f64;
        let mut h = rem.sqrt().floor() as i64;
        while ((h + 1) * (h + 1)) as f64 <= rem {
            h += 1;
        }
        while h > 0 && (h * h) as f64 > rem {
            h -= 1;
        }
        h
    };
    let mut pts = Vec::new();
    for dx in -k..=k {
        let h = m(dx);
        let lo = h.min(m(dx - 1).min(m(dx + 1)) + 1);
        for dy in -h..=h {
            if dy.abs() >= lo {
                pts.push(Point::new(c.x + dx, c.y + dy));
            }
        }
    }
    PointSet::new(pts)
}

/// Annulus B(c, r_out) \ B(c, r_in).
pub fn annulus(c: Point, r_in: f64, r_out: f64) -> PointSet {
    let inner = r_in * r_in;
    PointSet::new(ball(c, r_out).iter().copied().filter(|p| ((*p - c).norm2() as f64) > inner))
}

/// Number of lattice points in B(0, r).
pub fn ball_count(r: f64) -> usize {
    let k = r.floor() as i64;
    let r2 = r * r;
    let mut n = 0usize;
    for dx in -k..=k {
        let rem = r2 - (dx * dx) as f64;
        if rem >= 0.0 {
            let m = rem.sqrt().floor() as i64;
            // guard against rounding just below an exact square
            let m = if ((m + 1) * (m + 1)) as f64 <= rem { m + 1 } else { m };
            n += (2 * m + 1) as usize;
        }
    }
    n
}

/// Discrete torus Z²_n identified with {0, …, n−1}².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Torus {
    pub side: i64,
}

impl Torus {
    pub fn new(side: i64) -> Self {
        assert!(side >= 3, "torus side must be at least 3");
        Torus { side }
    }

    #[inline]
    pub fn wrap(&self, p: Point) -> Point {
        Point::new(p.x.rem_euclid(self.side), p.y.rem_euclid(self.side))
    }

    #[inline]
    pub fn neighbors(&self, p: Point) -> [Point; 4] {
        let n = self.side;
        let r = |v: i64| if v == n { 0 } else if v < 0 { n - 1 } else { v };
        [
            Point::new(r(p.x + 1), p.y),
            Point::new(p.x, r(p.y + 1)),
            Point::new(r(p.x - 1), p.y),
            Point::new(p.x, r(p.y - 1)),
        ]
    }

    pub fn len(&self) -> usize {
        (self.side * self.side) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn all_points(&self) -> PointSet {
        let n = self.side;
        PointSet::new((0..n).flat_map(|x| (0..n).map(move |y| Point::new(x, y))))
    }

    /// Torus distance (shortest representative).
    pub fn dist(&self, a: Point, b: Point) -> f64 {
        let n = self.side;
        let d = |u: i64| {
            let u = u.rem_euclid(n);
            u.min(n - u)
        };
        let (dx, dy) = (d(a.x - b.x), d(a.y - b.y));
        ((dx * dx + dy * dy) as f64).sqrt()
    }

    /// A planar set fits in the torus if its projection is injective and
    /// preserves adjacency, which holds when its width is below the side
    /// minus one.
    pub fn fits(&self, set: &PointSet) -> bool {
        let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for p in set {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        set.is_empty() || (x1 - x0 + 2 < self.side && y1 - y0 + 2 < self.side)
    }

    /// Projects a planar set onto the torus.
    pub fn project(&self, set: &PointSet) -> PointSet {
        PointSet::new(set.iter().map(|&p| self.wrap(p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_counts_match_enumeration() {
        for r in [0.0, 1.0, 1.5, 2.0, 3.0, 7.3, 10.0, 50.0] {
            assert_eq!(ball(Point::ORIGIN, r).len(), ball_count(r), "r = {r}");
        }
        assert_eq!(ball_count(1.0), 5);
        assert_eq!(ball_count(2.0), 13);
    }

    #[test]
    fn boundary_of_small_ball() {
        let b = ball(Point::ORIGIN, 3.0);
        let ib = b.internal_boundary();
        for p in b.iter() {
            let on = p.neighbors().iter().any(|q| q.norm2() > 9);
            assert_eq!(ib.contains(*p), on);
        }
        let eb = b.external_boundary();
        assert!(eb.iter().all(|p| !b.contains(*p)));
        assert!(ib.is_subset(&b));
    }

    #[test]
    fn fast_boundary_matches_definition() {
        for r in [0.0, 1.0, 2.5, 7.0, 13.2, 30.0] {
            let c = Point::new(3, -7);
            assert_eq!(ball_boundary(c, r), ball(c, r).internal_boundary(), "r = {r}");
        }
    }

    #[test]
    fn torus_wraps_neighbors() {
        let t = Torus::new(5);
        let n = t.neighbors(Point::new(0, 4));
        assert_eq!(n, [Point::new(1, 4), Point::new(0, 0), Point::new(4, 4), Point::new(0, 3)]);
        assert_eq!(t.dist(Point::new(0, 0), Point::new(4, 4)), 2f64.sqrt());
    }

    #[test]
    fn isometries_are_distinct() {
        let p = Point::new(2, 1);
        let imgs: std::collections::HashSet<_> = (0..8).map(|k| p.isometry(k)).collect();
        assert_eq!(imgs.len(), 8);
    }
}
