//! Line segments and polylines under the piecewise-linear map, slope cones
//! for the two Jacobians and their inverses, and the planar primitives the
//! manifold constructions are built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{
    apply, apply_inverse_unchecked, check_invertible, eigen, Params, Point, Side, SIGMA_TOL,
};

/// Interior vertices turning by less than this (radians) are merged.
pub const COLLINEAR_ANGLE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p: Point,
    pub q: Point,
}

impl Segment {
    pub const fn new(p: Point, q: Point) -> Self {
        Self { p, q }
    }

    pub fn len(&self) -> f64 {
        self.p.dist(self.q)
    }

    pub fn dir(&self) -> Point {
        self.q - self.p
    }

    pub fn slope(&self) -> f64 {
        let d = self.dir();
        d.y / d.x
    }

    /// True when the endpoints lie strictly on opposite sides of `x = 0`.
    pub fn crosses_sigma(&self) -> bool {
        (self.p.x < -SIGMA_TOL && self.q.x > SIGMA_TOL)
            || (self.p.x > SIGMA_TOL && self.q.x < -SIGMA_TOL)
    }

    pub fn at(&self, t: f64) -> Point {
        self.p.lerp(self.q, t)
    }

    pub fn distance_to_point(&self, x: Point) -> f64 {
        let d = self.dir();
        let l2 = d.dot(d);
        if l2 == 0.0 {
            return self.p.dist(x);
        }
        let t = ((x - self.p).dot(d) / l2).clamp(0.0, 1.0);
        self.at(t).dist(x)
    }

    /// Proper crossing: the open segments intersect at a single point.
    pub fn crosses(&self, other: &Segment) -> bool {
        let d = self.dir();
        let e = other.dir();
        let o1 = d.cross(other.p - self.p);
        let o2 = d.cross(other.q - self.p);
        let o3 = e.cross(self.p - other.p);
        let o4 = e.cross(self.q - other.p);
        o1 * o2 < 0.0 && o3 * o4 < 0.0
    }

    pub fn distance_to_segment(&self, other: &Segment) -> f64 {
        if self.crosses(other) {
            return 0.0;
        }
        self.distance_to_point(other.p)
            .min(self.distance_to_point(other.q))
            .min(other.distance_to_point(self.p))
            .min(other.distance_to_point(self.q))
    }

    fn bbox(&self) -> Aabb {
        Aabb::of_points(&[self.p, self.q])
    }
}

/// Result of cutting a segment along the switching line `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSplit {
    pub left: Option<Segment>,
    pub right: Option<Segment>,
    pub crossing: Option<Point>,
}

pub fn split_at_sigma(seg: &Segment) -> SigmaSplit {
    if seg.crosses_sigma() {
        let t = seg.p.x / (seg.p.x - seg.q.x);
        let c = Point::new(0.0, seg.p.y + t * (seg.q.y - seg.p.y));
        let (l, r) = if seg.p.x < 0.0 {
            (Segment::new(seg.p, c), Segment::new(c, seg.q))
        } else {
            (Segment::new(c, seg.q), Segment::new(seg.p, c))
        };
        return SigmaSplit {
            left: Some(l),
            right: Some(r),
            crossing: Some(c),
        };
    }
    let left = seg.p.x < -SIGMA_TOL || seg.q.x < -SIGMA_TOL;
    SigmaSplit {
        left: left.then_some(*seg),
        right: (!left).then_some(*seg),
        crossing: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub vertices: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn segment(p: Point, q: Point) -> Self {
        Self::new(vec![p, q])
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices.windows(2).map(|w| Segment::new(w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.edges().map(|e| e.len()).sum()
    }

    pub fn distance_to_point(&self, x: Point) -> f64 {
        self.edges()
            .map(|e| e.distance_to_point(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::of_points(&self.vertices)
    }
}

/// Image of a polyline under `f` (forward) or `f^{-1}` (backward). Forward,
/// edges are cut where they cross `x = 0` and the cut points land on the
/// x-axis; backward, edges are cut where they cross the x-axis and the cut
/// points land on `x = 0`. Collinear interior vertices are then merged,
/// except those lying on either axis.
pub fn map_polyline(xi: &Params, poly: &Polyline, direction: Direction) -> Result<Polyline> {
    if direction == Direction::Backward {
        check_invertible(xi)?;
    }
    Ok(map_polyline_unchecked(xi, poly, direction))
}

pub(crate) fn map_polyline_unchecked(xi: &Params, poly: &Polyline, direction: Direction) -> Polyline {
    let verts = &poly.vertices;
    let mut out = Vec::with_capacity(verts.len() + verts.len() / 4 + 2);
    let image = |p: Point| match direction {
        Direction::Forward => apply(xi, p),
        Direction::Backward => apply_inverse_unchecked(xi, p),
    };
    // coordinate whose sign selects the piece
    let key = |p: Point| match direction {
        Direction::Forward => p.x,
        Direction::Backward => p.y,
    };
    if let Some(&first) = verts.first() {
        out.push(image(first));
    }
    for w in verts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ka, kb) = (key(a), key(b));
        if (ka < -SIGMA_TOL && kb > SIGMA_TOL) || (ka > SIGMA_TOL && kb < -SIGMA_TOL) {
            let t = ka / (ka - kb);
            let mut c = a.lerp(b, t);
            match direction {
                Direction::Forward => c.x = 0.0,
                Direction::Backward => c.y = 0.0,
            }
            out.push(image(c));
        }
        out.push(image(b));
    }
    Polyline::new(prune_collinear(out))
}

fn on_axis(p: Point) -> bool {
    p.x.abs() <= SIGMA_TOL || p.y.abs() <= SIGMA_TOL
}

/// Drops repeated vertices and interior vertices whose turning angle is
/// below [`COLLINEAR_ANGLE`], keeping any vertex on either coordinate axis.
pub fn prune_collinear(verts: Vec<Point>) -> Vec<Point> {
    if verts.len() <= 2 {
        return verts;
    }
    let mut out: Vec<Point> = Vec::with_capacity(verts.len());
    let last = verts.len() - 1;
    for (i, &v) in verts.iter().enumerate() {
        if let Some(&prev) = out.last() {
            if prev == v {
                continue;
            }
        }
        if i == last || out.is_empty() || on_axis(v) {
            out.push(v);
            continue;
        }
        let prev = out[out.len() - 1];
        let next = verts[i + 1];
        let (d1, d2) = (v - prev, next - v);
        let turn = d1.cross(d2).abs().atan2(d1.dot(d2));
        if turn < COLLINEAR_ANGLE && next != v {
            continue;
        }
        out.push(v);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn contains(&self, m: f64) -> bool {
        self.lo <= m && m <= self.hi
    }
}

/// How a slope parametrises a cone direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Directions `t [1, m]`; used for the forward Jacobians.
    XBased,
    /// Directions `t [m, 1]`; used for the inverse Jacobians so that the
    /// relevant slopes stay finite.
    YBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeCone {
    pub orientation: Orientation,
    pub k: Interval,
    pub expansion: f64,
}

impl SlopeCone {
    fn inverted(&self) -> bool {
        self.orientation == Orientation::YBased
    }

    /// Invariant and expanding for the Jacobian (or inverse Jacobian) of `side`.
    pub fn certify(&self, xi: &Params, side: Side) -> bool {
        expansion_certificate(xi, side, self.inverted(), self.k, self.expansion)
    }

    pub fn direction(&self, m: f64) -> Point {
        match self.orientation {
            Orientation::XBased => Point::new(1.0, m),
            Orientation::YBased => Point::new(m, 1.0),
        }
    }
}

/// Expansion factors of the forward and inverse cones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeFactors {
    /// `lambda_L^u`, valid for slopes up to `m_crit`.
    pub c_l_crit: f64,
    /// `min{lambda_L^u, (lambda_L^u + 1)/sqrt 2}`.
    pub c_l: f64,
    /// `min{|lambda_R^u|, (|lambda_R^u| + 1)/sqrt 2}`.
    pub c_r: f64,
    /// `min{1/lambda_L^s, (1 + lambda_L^s)/(sqrt 2 lambda_L^s)}`.
    pub c_hat_l: f64,
    /// `min{1/|lambda_R^s|, (1 + |lambda_R^s|)/(sqrt 2 |lambda_R^s|)}`.
    pub c_hat_r: f64,
}

pub fn cone_factors(xi: &Params) -> Result<ConeFactors> {
    let l = eigen(xi, Side::L)?;
    let r = eigen(xi, Side::R)?;
    let s2 = std::f64::consts::SQRT_2;
    let (lu, ls) = (l.lambda_u.abs(), l.lambda_s.abs());
    let (ru, rs) = (r.lambda_u.abs(), r.lambda_s.abs());
    Ok(ConeFactors {
        c_l_crit: lu,
        c_l: lu.min((lu + 1.0) / s2),
        c_r: ru.min((ru + 1.0) / s2),
        c_hat_l: (1.0 / ls).min((1.0 + ls) / (s2 * ls)),
        c_hat_r: (1.0 / rs).min((1.0 + rs) / (s2 * rs)),
    })
}

/// `Psi_K` with `K = [-lambda_L^s, |lambda_R^s|]` and factor `c_R`.
pub fn forward_cone(xi: &Params) -> Result<Interval> {
    let l = eigen(xi, Side::L)?;
    let r = eigen(xi, Side::R)?;
    Ok(Interval::new(-l.lambda_s, r.lambda_s.abs()))
}

/// `Psi-hat_K` with `K = [-1/lambda_L^u, 1/|lambda_R^u|]`.
pub fn inverse_cone(xi: &Params) -> Result<Interval> {
    let l = eigen(xi, Side::L)?;
    let r = eigen(xi, Side::R)?;
    Ok(Interval::new(-1.0 / l.lambda_u, 1.0 / r.lambda_u.abs()))
}

/// Slope of the image direction. Forward (x-based): `G(m) = -delta/(tau + m)`.
/// Inverted (y-based): `A^{-1} [m, 1]` has y-based slope `-1/(delta m + tau)`.
pub fn cone_step(xi: &Params, side: Side, inverted: bool, m: f64) -> Result<f64> {
    let (tau, delta) = xi.piece(side);
    let den = if inverted { delta * m + tau } else { tau + m };
    if den == 0.0 {
        return Err(Error::VerticalImage(m));
    }
    Ok(if inverted { -1.0 / den } else { -delta / den })
}

/// Coefficients `(b, k)` of `|A v|^2 = m^2 + 2 b m + k` for the direction
/// with slope `m`.
fn stretch_coeffs(xi: &Params, side: Side, inverted: bool) -> (f64, f64) {
    let (tau, delta) = xi.piece(side);
    if inverted {
        // A^{-1} [m, 1] = [-1/delta, m + tau/delta]
        (tau / delta, (tau * tau + 1.0) / (delta * delta))
    } else {
        // A [1, m] = [tau + m, -delta]
        (tau, tau * tau + delta * delta)
    }
}

/// `|A v|^2 / |v|^2` for the direction of slope `m`.
pub fn stretch_sq(xi: &Params, side: Side, inverted: bool, m: f64) -> f64 {
    let (b, k) = stretch_coeffs(xi, side, inverted);
    (m * m + 2.0 * b * m + k) / (1.0 + m * m)
}

/// True iff the cone over `k` is mapped into itself and every direction in it
/// is stretched by at least `c`. `H(m) = |A v|^2 - c^2 |v|^2` is checked at the
/// endpoints of `k` when it is concave (`c > 1`); otherwise its minimum over
/// `k`, vertex included, is used.
pub fn expansion_certificate(xi: &Params, side: Side, inverted: bool, k: Interval, c: f64) -> bool {
    if !(k.lo <= k.hi) || !(c > 0.0) {
        return false;
    }
    expands(xi, side, inverted, k, c) && invariant(xi, side, inverted, k)
}

fn expands(xi: &Params, side: Side, inverted: bool, k: Interval, c: f64) -> bool {
    let (b, kk) = stretch_coeffs(xi, side, inverted);
    let c2 = c * c;
    let h = |m: f64| (1.0 - c2) * m * m + 2.0 * b * m + kk - c2;
    let slack = |m: f64| 1e-12 * (1.0 + m * m) * c2.max(1.0 + kk.abs());
    let mut candidates = vec![k.lo, k.hi];
    if c2 < 1.0 {
        let vertex = -b / (1.0 - c2);
        if k.contains(vertex) {
            candidates.push(vertex);
        }
    }
    candidates.iter().all(|&m| h(m) >= -slack(m))
}

// the Moebius slope map is monotone off its pole, so endpoints decide
fn invariant(xi: &Params, side: Side, inverted: bool, k: Interval) -> bool {
    let (tau, delta) = xi.piece(side);
    let pole = if inverted { -tau / delta } else { -tau };
    if k.lo <= pole && pole <= k.hi {
        return false;
    }
    let (Ok(a), Ok(b)) = (
        cone_step(xi, side, inverted, k.lo),
        cone_step(xi, side, inverted, k.hi),
    ) else {
        return false;
    };
    let tol = 1e-12 * (1.0 + k.lo.abs().max(k.hi.abs()));
    a.min(b) >= k.lo - tol && a.max(b) <= k.hi + tol
}

/// Lower bound factor for the longer image piece of a segment cut by `x = 0`.
pub fn longest_piece_bound(c_l: f64, c_r: f64) -> f64 {
    c_l * c_r / (c_l + c_r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub point: Point,
    pub dir: Point,
}

impl Line {
    pub fn through(point: Point, slope: f64) -> Self {
        Self {
            point,
            dir: Point::new(1.0, slope),
        }
    }

    /// The switching line `x = 0`.
    pub fn sigma() -> Self {
        Self {
            point: Point::ORIGIN,
            dir: Point::new(0.0, 1.0),
        }
    }

    /// The x-axis, image of the switching line.
    pub fn x_axis() -> Self {
        Self {
            point: Point::ORIGIN,
            dir: Point::new(1.0, 0.0),
        }
    }

    /// Signed distance, positive to the left of `dir`.
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.dir.cross(x - self.point) / self.dir.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Linear {
    Line(Line),
    Segment(Segment),
}

impl From<Line> for Linear {
    fn from(l: Line) -> Self {
        Linear::Line(l)
    }
}

impl From<Segment> for Linear {
    fn from(s: Segment) -> Self {
        Linear::Segment(s)
    }
}

impl Linear {
    fn parts(&self) -> (Point, Point, bool) {
        match *self {
            Linear::Line(l) => (l.point, l.dir, false),
            Linear::Segment(s) => (s.p, s.dir(), true),
        }
    }
}

/// Intersection of two lines or segments; `None` when parallel, or when the
/// intersection falls outside a segment's extent.
pub fn line_intersection(a: impl Into<Linear>, b: impl Into<Linear>) -> Option<Point> {
    let (p, d, bounded_a) = a.into().parts();
    let (q, e, bounded_b) = b.into().parts();
    let den = d.cross(e);
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let w = q - p;
    let s = w.cross(e) / den;
    let t = w.cross(d) / den;
    const EPS: f64 = 1e-12;
    if bounded_a && !(-EPS..=1.0 + EPS).contains(&s) {
        return None;
    }
    if bounded_b && !(-EPS..=1.0 + EPS).contains(&t) {
        return None;
    }
    Some(p + d * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn of_points(pts: &[Point]) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    pub fn expand(&self, r: f64) -> Self {
        Self {
            min: Point::new(self.min.x - r, self.min.y - r),
            max: Point::new(self.max.x + r, self.max.y + r),
        }
    }

    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn diagonal(&self) -> f64 {
        self.min.dist(self.max)
    }
}

/// Simple polygon given by its vertex ring (last vertex not repeated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|e| e.p.cross(e.q)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::of_points(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(v[i].dist(v[j]));
            }
        }
        d
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len().max(1) as f64;
        self.vertices.iter().fold(Point::ORIGIN, |a, &b| a + b) * (1.0 / n)
    }

    pub fn boundary_distance(&self, x: Point) -> f64 {
        self.edges()
            .map(|e| e.distance_to_point(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Even-odd containment of the open interior.
    pub fn contains_interior(&self, x: Point) -> bool {
        let mut inside = false;
        for e in self.edges() {
            let (a, b) = (e.p, e.q);
            if (a.y > x.y) != (b.y > x.y) {
                let xc = a.x + (x.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x.x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Inside, or within `slack` of the boundary.
    pub fn contains(&self, x: Point, slack: f64) -> bool {
        self.contains_interior(x) || self.boundary_distance(x) <= slack
    }

    /// How far `x` lies outside the polygon (0 when inside).
    pub fn excess(&self, x: Point) -> f64 {
        if self.contains_interior(x) {
            0.0
        } else {
            self.boundary_distance(x)
        }
    }
}

/// Image of a closed polygon boundary, cut at the switching line.
pub fn map_polygon(xi: &Params, poly: &Polygon) -> Polygon {
    let mut ring = poly.vertices.clone();
    if let Some(&first) = ring.first() {
        ring.push(first);
    }
    let mut out = map_polyline_unchecked(xi, &Polyline::new(ring), Direction::Forward).vertices;
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    Polygon::new(out)
}

/// Uniform grid over a set of segments for nearest-edge and neighbourhood
/// queries.
pub struct SegmentGrid {
    segs: Vec<Segment>,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl SegmentGrid {
    /// Builds the index over the segments that touch `region`, with roughly
    /// `per_cell` segments per cell.
    pub fn new(segs: Vec<Segment>, region: Aabb, per_cell: f64) -> Self {
        let segs: Vec<Segment> = segs
            .into_iter()
            .filter(|s| s.bbox().intersects(&region))
            .collect();
        let w = (region.max.x - region.min.x).max(1e-12);
        let h = (region.max.y - region.min.y).max(1e-12);
        let n = (segs.len() as f64 / per_cell.max(1.0)).max(1.0);
        let cell = ((w * h) / n).sqrt().max(w.max(h) / 2048.0).max(1e-12);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut grid = Self {
            segs,
            origin: region.min,
            cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        };
        let mut cells = std::mem::take(&mut grid.cells);
        for (idx, s) in grid.segs.iter().enumerate() {
            grid.for_each_cell_near(s, 0.0, |c| cells[c].push(idx as u32));
        }
        grid.cells = cells;
        grid
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segs
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p.x - self.origin.x) / self.cell).floor();
        let j = ((p.y - self.origin.y) / self.cell).floor();
        (
            i.clamp(0.0, (self.nx - 1) as f64) as usize,
            j.clamp(0.0, (self.ny - 1) as f64) as usize,
        )
    }

    /// Indices of segments registered in cells that come within `radius` of
    /// `seg` (a superset of the segments within `radius`). Each index is
    /// reported once.
    pub fn near_segment(&self, seg: &Segment, radius: f64, stamp: &mut Stamp) -> Vec<u32> {
        stamp.next(self.segs.len());
        let mut out = Vec::new();
        self.for_each_cell_near(seg, radius, |c| {
            for &k in &self.cells[c] {
                if stamp.mark(k) {
                    out.push(k);
                }
            }
        });
        out
    }

    /// Visits, row by row, the cells the segment passes within `radius` of.
    fn for_each_cell_near(&self, seg: &Segment, radius: f64, mut visit: impl FnMut(usize)) {
        let b = seg.bbox().expand(radius);
        let (_, j0) = self.cell_of(b.min);
        let (_, j1) = self.cell_of(b.max);
        let d = seg.dir();
        for j in j0..=j1 {
            // x-extent of the segment within this row band, widened by radius
            let y_lo = self.origin.y + j as f64 * self.cell - radius;
            let y_hi = y_lo + self.cell + 2.0 * radius;
            let (t0, t1) = if d.y == 0.0 {
                (0.0, 1.0)
            } else {
                let ta = (y_lo - seg.p.y) / d.y;
                let tb = (y_hi - seg.p.y) / d.y;
                (ta.min(tb).max(0.0), ta.max(tb).min(1.0))
            };
            if t0 > t1 {
                continue;
            }
            let (xa, xb) = (seg.p.x + t0 * d.x, seg.p.x + t1 * d.x);
            let (i0, _) = self.cell_of(Point::new(xa.min(xb) - radius, 0.0));
            let (i1, _) = self.cell_of(Point::new(xa.max(xb) + radius, 0.0));
            for i in i0..=i1 {
                visit(j * self.nx + i);
            }
        }
    }

    /// Distance from `x` to the nearest indexed segment, searched in growing
    /// rings of cells. Falls back to a full scan when `x` lies far outside
    /// the grid.
    pub fn nearest_distance(&self, x: Point) -> f64 {
        if self.segs.is_empty() {
            return f64::INFINITY;
        }
        let (ci, cj) = self.cell_of(x);
        let mut best = f64::INFINITY;
        let max_ring = self.nx.max(self.ny);
        for r in 0..=max_ring {
            let i0 = ci.saturating_sub(r);
            let j0 = cj.saturating_sub(r);
            let i1 = (ci + r).min(self.nx - 1);
            let j1 = (cj + r).min(self.ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let on_ring = i == i0 || i == i1 || j == j0 || j == j1;
                    if !on_ring && r > 0 {
                        continue;
                    }
                    for &k in &self.cells[j * self.nx + i] {
                        best = best.min(self.segs[k as usize].distance_to_point(x));
                    }
                }
            }
            // every segment closer than r * cell lies within the searched rings
            if best <= r as f64 * self.cell {
                return best;
            }
        }
        self.segs
            .iter()
            .map(|s| s.distance_to_point(x))
            .fold(best, f64::min)
    }
}

/// Visit marks for de-duplicating grid query results.
#[derive(Default)]
pub struct Stamp {
    marks: Vec<u32>,
    current: u32,
}

impl Stamp {
    fn next(&mut self, n: usize) {
        if self.marks.len() < n {
            self.marks.resize(n, 0);
        }
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.current = 1;
        }
    }

    fn mark(&mut self, k: u32) -> bool {
        let slot = &mut self.marks[k as usize];
        if *slot == self.current {
            false
        } else {
            *slot = self.current;
            true
        }
    }
}
