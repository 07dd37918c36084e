//! Special points, the trapping region `Omega`, invariant-manifold growth from
//! fundamental domains, attractor sampling and the `Delta` construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bifurcation::find_cycle;
use crate::cluster::cluster_points;
use crate::error::{Error, Result};
use crate::geometry::{
    line_intersection, map_polygon, map_polyline_unchecked, Aabb, Direction, Line, Polygon,
    Polyline, Segment, SegmentGrid,
};
use crate::map::{apply, apply_inverse_unchecked, check_invertible, eigen, fixed_points, Params, Point, Side};
use crate::region::require_phi;

/// Default cap on the total vertex count of a grown manifold.
pub const DEFAULT_MAX_VERTICES: usize = 2_000_000;

/// Half-length of the local segments seeding cycle manifolds.
pub const CYCLE_SEED_HALF_LENGTH: f64 = 1e-3;

/// Offset from `X` along `E^u(X)` at which attractor orbits start.
pub const UNSTABLE_OFFSET: f64 = 1e-8;

/// Slack for the vertex containment test `f(Omega) in Omega`.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoints {
    pub d: Point,
    pub u: Point,
    pub v: Point,
    pub b: Point,
    pub t: Point,
    /// `E^s(X)` meets `[T, f^2(T)]` only when `phi(g(xi)) < 0`.
    pub z: Option<Point>,
    pub f_v: Point,
    pub finv_v: Point,
}

pub fn special_points(xi: &Params) -> Result<SpecialPoints> {
    require_phi(xi)?;
    let l = eigen(xi, Side::L)?;
    let r = eigen(xi, Side::R)?;
    let fp = fixed_points(xi)?;
    let ls = l.lambda_s;
    let (rs, ru) = (r.lambda_s, r.lambda_u);

    let d = Point::new(1.0 / (1.0 - ls), 0.0);
    let v = Point::new(0.0, -ru / (ru - 1.0));
    let u = Point::new(0.0, -xi.delta_r / ((ls - xi.tau_r) * (1.0 - ls)));
    // B: along E^u(Y) from Y, and parallel to E^s(Y) through f(D)
    let b = line_intersection(
        Line::through(fp.y, l.slope_u),
        Line::through(apply(xi, d), l.slope_s),
    )
    .ok_or(Error::DegenerateDenominator("E^u(Y) parallel to E^s(Y)"))?;
    let w = line_intersection(Line::through(fp.x, rs.abs()), Line::sigma())
        .ok_or(Error::DegenerateDenominator("E^u(X) parallel to the switching line"))?;
    let mut t = apply(xi, w);
    debug_assert!(t.y.abs() <= 1e-12 * (1.0 + t.x.abs()));
    t.y = 0.0;
    let f2t = apply(xi, apply(xi, t));
    let z = line_intersection(Line::through(fp.x, ru.abs()), Segment::new(t, f2t));
    Ok(SpecialPoints {
        d,
        u,
        v,
        b,
        t,
        z,
        f_v: apply(xi, v),
        finv_v: apply_inverse_unchecked(xi, v),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapRegion {
    /// Triangle `D, f(D), B`.
    pub omega: Polygon,
    /// Pentagon `D, f(D), f(U), f^2(D), f(B)`.
    pub f_omega: Polygon,
}

/// `Omega` and its image, without checking that the image is contained.
pub fn trapping_polygons(xi: &Params) -> Result<TrapRegion> {
    let sp = special_points(xi)?;
    let fd = apply(xi, sp.d);
    Ok(TrapRegion {
        omega: Polygon::new(vec![sp.d, fd, sp.b]),
        f_omega: Polygon::new(vec![sp.d, fd, apply(xi, sp.u), apply(xi, fd), apply(xi, sp.b)]),
    })
}

/// `Omega` and `f(Omega)`; fails if a vertex of `f(Omega)` lies outside
/// `Omega`, which happens once `phi <= 0`.
pub fn trapping_region(xi: &Params) -> Result<TrapRegion> {
    let tr = trapping_polygons(xi)?;
    for &v in &tr.f_omega.vertices {
        let excess = tr.omega.excess(v);
        if excess > CONTAINMENT_TOL {
            return Err(Error::ContainmentViolation {
                vertex: [v.x, v.y],
                excess,
            });
        }
    }
    Ok(tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Unstable,
    Stable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldBase {
    X,
    Y,
    /// Periodic cycle given by its itinerary.
    Cycle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Both branches where a single fundamental domain generates them.
    Full,
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub base: ManifoldBase,
    pub branch: Branch,
}

impl ManifoldSpec {
    pub fn unstable_x() -> Self {
        Self {
            kind: ManifoldKind::Unstable,
            base: ManifoldBase::X,
            branch: Branch::Full,
        }
    }

    pub fn stable_x() -> Self {
        Self {
            kind: ManifoldKind::Stable,
            base: ManifoldBase::X,
            branch: Branch::Full,
        }
    }

    pub fn unstable_y() -> Self {
        Self {
            kind: ManifoldKind::Unstable,
            base: ManifoldBase::Y,
            branch: Branch::Right,
        }
    }

    pub fn cycle(kind: ManifoldKind, word: &str) -> Self {
        Self {
            kind,
            base: ManifoldBase::Cycle(word.to_string()),
            branch: Branch::Full,
        }
    }

    pub fn label(&self) -> String {
        let kind = match self.kind {
            ManifoldKind::Unstable => "Wu",
            ManifoldKind::Stable => "Ws",
        };
        match &self.base {
            ManifoldBase::X => format!("{kind}(X)"),
            ManifoldBase::Y => format!("{kind}(Y)"),
            ManifoldBase::Cycle(w) => format!("{kind}({w})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowOptions {
    pub max_vertices: usize,
    /// Edges entirely outside this box are dropped after every step.
    pub clip: Option<Aabb>,
}

impl Default for GrowOptions {
    fn default() -> Self {
        Self {
            max_vertices: DEFAULT_MAX_VERTICES,
            clip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldApprox {
    pub kind: ManifoldKind,
    pub base: ManifoldBase,
    pub branch: Branch,
    pub depth: usize,
    /// Polylines in growth order; `levels[k]` indexes the pieces produced by
    /// the k-th application of the map.
    pub pieces: Vec<Polyline>,
    pub levels: Vec<std::ops::Range<usize>>,
}

impl ManifoldApprox {
    pub fn vertex_count(&self) -> usize {
        self.pieces.iter().map(|p| p.len()).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        self.pieces.iter().flat_map(|p| p.edges())
    }

    /// Pieces of the last `n` levels.
    pub fn last_levels(&self, n: usize) -> &[Polyline] {
        let k = self.levels.len();
        let start = self.levels[k.saturating_sub(n.max(1))].start;
        &self.pieces[start..]
    }

    pub fn level(&self, k: usize) -> &[Polyline] {
        &self.pieces[self.levels[k].clone()]
    }

    pub fn bbox(&self) -> Aabb {
        let pts: Vec<Point> = self.pieces.iter().flat_map(|p| p.vertices.iter().copied()).collect();
        Aabb::of_points(&pts)
    }
}

pub fn grow_manifold(xi: &Params, spec: &ManifoldSpec, depth: usize) -> Result<ManifoldApprox> {
    grow_manifold_with(xi, spec, depth, &GrowOptions::default())
}

pub fn grow_manifold_with(
    xi: &Params,
    spec: &ManifoldSpec,
    depth: usize,
    opts: &GrowOptions,
) -> Result<ManifoldApprox> {
    require_phi(xi)?;
    let seeds = manifold_seeds(xi, spec)?;
    let direction = match spec.kind {
        ManifoldKind::Unstable => Direction::Forward,
        ManifoldKind::Stable => {
            check_invertible(xi)?;
            Direction::Backward
        }
    };
    let clip = |polys: Vec<Polyline>| -> Vec<Polyline> {
        match &opts.clip {
            Some(b) => polys.iter().flat_map(|p| clip_polyline(p, b)).collect(),
            None => polys,
        }
    };
    let mut current = clip(seeds);
    let mut pieces: Vec<Polyline> = Vec::new();
    let mut levels = Vec::with_capacity(depth + 1);
    let mut total = 0usize;
    for k in 0..=depth {
        if k > 0 {
            let next: Vec<Polyline> = current
                .iter()
                .map(|p| map_polyline_unchecked(xi, p, direction))
                .collect();
            current = clip(next);
        }
        total += current.iter().map(|p| p.len()).sum::<usize>();
        if total > opts.max_vertices {
            return Err(Error::VertexBudgetExceeded(opts.max_vertices));
        }
        let start = pieces.len();
        pieces.extend(current.iter().cloned());
        levels.push(start..pieces.len());
    }
    Ok(ManifoldApprox {
        kind: spec.kind,
        base: spec.base.clone(),
        branch: spec.branch,
        depth,
        pieces,
        levels,
    })
}

fn manifold_seeds(xi: &Params, spec: &ManifoldSpec) -> Result<Vec<Polyline>> {
    use ManifoldBase as B;
    use ManifoldKind as K;
    match (&spec.base, spec.kind) {
        (B::X, K::Unstable) => {
            let x = fixed_points(xi)?.x;
            let t = special_points(xi)?.t;
            Ok(vec![Polyline::segment(x, t)])
        }
        (B::X, K::Stable) => {
            let sp = special_points(xi)?;
            Ok(vec![Polyline::segment(sp.f_v, sp.finv_v)])
        }
        (B::Y, K::Unstable) => {
            if spec.branch == Branch::Left {
                return Err(Error::Unsupported("left branch of W^u(Y)"));
            }
            let d = special_points(xi)?.d;
            Ok(vec![Polyline::segment(d, apply(xi, d))])
        }
        (B::Y, K::Stable) => Err(Error::Unsupported("W^s(Y)")),
        (B::Cycle(word), kind) => {
            let cycle = find_cycle(xi, word)?;
            let mut seeds = Vec::with_capacity(cycle.points.len());
            for (i, &p) in cycle.points.iter().enumerate() {
                let m = cycle.composed_jacobian(xi, i);
                let (big, small) = m
                    .real_eigenvalues()
                    .ok_or(Error::Unsupported("cycle with complex multipliers"))?;
                let lambda = match kind {
                    K::Unstable => big,
                    K::Stable => small,
                };
                let v = m.eigenvector(lambda);
                let v = v * (CYCLE_SEED_HALF_LENGTH / v.norm());
                seeds.push(Polyline::segment(p - v, p + v));
            }
            Ok(seeds)
        }
    }
}

/// Maximal runs of edges that touch `b`.
pub fn clip_polyline(p: &Polyline, b: &Aabb) -> Vec<Polyline> {
    let mut out = Vec::new();
    let mut run: Vec<Point> = Vec::new();
    for e in p.edges() {
        let eb = Aabb::of_points(&[e.p, e.q]);
        if eb.intersects(b) {
            if run.is_empty() {
                run.push(e.p);
            }
            run.push(e.q);
        } else if run.len() >= 2 {
            out.push(Polyline::new(std::mem::take(&mut run)));
        } else {
            run.clear();
        }
    }
    if run.len() >= 2 {
        out.push(Polyline::new(run));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttractorBackend {
    /// Iterate a single orbit started next to `X` on `E^u(X)`.
    Orbit,
    /// Sample points uniformly along `W^u(X)` grown to `depth`.
    Manifold { depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorOptions {
    pub transient: usize,
    pub samples: usize,
    /// Clustering radius; `None` means `1e-2 * diameter(Omega)`.
    pub cluster_eps: Option<f64>,
    pub backend: AttractorBackend,
    pub seed: u64,
    /// Orbits leaving this ball count as escaped. Raised to ten times the
    /// extent of `Omega` when that is larger, since `Omega` grows without
    /// bound as `lambda_L^s -> 1`.
    pub escape_radius: f64,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        Self {
            transient: 1_000,
            samples: 100_000,
            cluster_eps: None,
            backend: AttractorBackend::Orbit,
            seed: 0,
            escape_radius: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingInfo {
    pub backend: AttractorBackend,
    pub transient: usize,
    pub samples: usize,
    pub cluster_eps: f64,
    pub seed: u64,
    /// Samples dropped because they fell outside `Omega`.
    pub clipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorApprox {
    pub cloud: Vec<Point>,
    pub n_components: usize,
    pub component_labels: Vec<usize>,
    pub params_used: SamplingInfo,
}

pub fn attractor_cloud(xi: &Params, opts: &AttractorOptions) -> Result<AttractorApprox> {
    require_phi(xi)?;
    if opts.samples == 0 {
        return Err(Error::Domain("attractor sampling needs samples > 0".into()));
    }
    let omega = trapping_polygons(xi)?.omega;
    let extent = omega.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let opts = &AttractorOptions {
        escape_radius: opts.escape_radius.max(10.0 * extent),
        ..*opts
    };
    let eps = opts.cluster_eps.unwrap_or(1e-2 * omega.diameter());
    let bbox = omega.bbox().expand(CONTAINMENT_TOL);
    let in_omega = |p: &Point| {
        p.x >= bbox.min.x
            && p.x <= bbox.max.x
            && p.y >= bbox.min.y
            && p.y <= bbox.max.y
            && omega.contains(*p, CONTAINMENT_TOL)
    };
    let (cloud, labels, n_components, clipped) = match opts.backend {
        AttractorBackend::Orbit => {
            let raw = orbit_samples(xi, opts)?;
            let before = raw.len();
            let cloud: Vec<Point> = raw.into_iter().filter(|p| in_omega(p)).collect();
            let clipped = before - cloud.len();
            let (labels, n) = cluster_points(&cloud, eps);
            (cloud, labels, n, clipped)
        }
        AttractorBackend::Manifold { depth } => {
            let (raw, raw_labels, n) = manifold_samples(xi, depth, eps, opts)?;
            let before = raw.len();
            let (cloud, labels): (Vec<Point>, Vec<usize>) = raw
                .into_iter()
                .zip(raw_labels)
                .filter(|(p, _)| in_omega(p))
                .unzip();
            let clipped = before - cloud.len();
            (cloud, labels, n, clipped)
        }
    };
    Ok(AttractorApprox {
        cloud,
        n_components,
        component_labels: labels,
        params_used: SamplingInfo {
            backend: opts.backend,
            transient: opts.transient,
            samples: opts.samples,
            cluster_eps: eps,
            seed: opts.seed,
            clipped,
        },
    })
}

fn orbit_samples(xi: &Params, opts: &AttractorOptions) -> Result<Vec<Point>> {
    let x = fixed_points(xi)?.x;
    let rs = eigen(xi, Side::R)?.lambda_s;
    let mut p = x + Point::from_slope(rs.abs()) * UNSTABLE_OFFSET;
    let mut out = Vec::with_capacity(opts.samples);
    for i in 0..opts.transient + opts.samples {
        p = apply(xi, p);
        if !(p.norm() <= opts.escape_radius) {
            return Err(Error::Escaped {
                radius: opts.escape_radius,
                iterations: i + 1,
            });
        }
        if i >= opts.transient {
            out.push(p);
        }
    }
    Ok(out)
}

/// Length-weighted random points on `W^u(X)`. Components are found on a dense
/// resampling of every edge at spacing `eps / 2`, so that sparse random
/// samples cannot split a connected piece.
fn manifold_samples(
    xi: &Params,
    depth: usize,
    eps: f64,
    opts: &AttractorOptions,
) -> Result<(Vec<Point>, Vec<usize>, usize)> {
    let wu = grow_manifold(xi, &ManifoldSpec::unstable_x(), depth)?;
    if wu.pieces.iter().flat_map(|p| &p.vertices).any(|v| !(v.norm() <= opts.escape_radius)) {
        return Err(Error::Escaped {
            radius: opts.escape_radius,
            iterations: depth,
        });
    }
    // the last two levels contain every earlier one
    let edges: Vec<Segment> = wu.last_levels(2).iter().flat_map(|p| p.edges()).collect();
    let mut dense = Vec::new();
    let mut first_dense = Vec::with_capacity(edges.len());
    for e in &edges {
        first_dense.push(dense.len());
        let k = (e.len() / (0.5 * eps)).ceil().max(1.0) as usize;
        dense.extend((0..=k).map(|j| e.at(j as f64 / k as f64)));
    }
    let (dense_labels, n) = cluster_points(&dense, eps);

    let mut cum = Vec::with_capacity(edges.len());
    let mut total = 0.0;
    for e in &edges {
        total += e.len();
        cum.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut cloud = Vec::with_capacity(opts.samples);
    let mut labels = Vec::with_capacity(opts.samples);
    for _ in 0..opts.samples {
        let s = rng.gen_range(0.0..total);
        let i = cum.partition_point(|&c| c < s).min(edges.len() - 1);
        cloud.push(edges[i].at(rng.gen_range(0.0..=1.0)));
        labels.push(dense_labels[first_dense[i]]);
    }
    Ok((cloud, labels, n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGaps {
    pub max_gap: f64,
    /// Row-major `grid_n x grid_n` distances; `None` outside the region.
    pub gap_field: Vec<Vec<Option<f64>>>,
}

/// Distance from a grid of sample points over `region` to the nearest edge of
/// the manifold approximation.
pub fn coverage_gaps(manifold: &ManifoldApprox, region: &Polygon, grid_n: usize) -> CoverageGaps {
    let segs: Vec<Segment> = manifold.edges().collect();
    let bb = region.bbox();
    let index = SegmentGrid::new(segs, bb.expand(bb.diagonal().max(1e-9)), 2.0);
    if region.area() == 0.0 || grid_n < 2 {
        let d = index.nearest_distance(region.centroid());
        return CoverageGaps {
            max_gap: d,
            gap_field: vec![vec![Some(d)]],
        };
    }
    let mut max_gap = 0.0f64;
    let mut field = Vec::with_capacity(grid_n);
    for j in 0..grid_n {
        let y = bb.min.y + (bb.max.y - bb.min.y) * j as f64 / (grid_n - 1) as f64;
        let mut row = Vec::with_capacity(grid_n);
        for i in 0..grid_n {
            let x = bb.min.x + (bb.max.x - bb.min.x) * i as f64 / (grid_n - 1) as f64;
            let p = Point::new(x, y);
            if region.contains(p, 1e-12) {
                let d = index.nearest_distance(p);
                max_gap = max_gap.max(d);
                row.push(Some(d));
            } else {
                row.push(None);
            }
        }
        field.push(row);
    }
    CoverageGaps {
        max_gap,
        gap_field: field,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRegion {
    /// Triangle `X, T, Z`.
    pub delta0: Polygon,
    /// `Delta0` followed by its first `depth` forward images.
    pub delta_union: Vec<Polygon>,
}

impl DeltaRegion {
    /// True if `p` lies in some polygon of the union, or within `dilation` of one.
    pub fn contains(&self, p: Point, dilation: f64) -> bool {
        self.delta_union.iter().any(|poly| {
            let b = poly.bbox().expand(dilation);
            p.x >= b.min.x
                && p.x <= b.max.x
                && p.y >= b.min.y
                && p.y <= b.max.y
                && poly.contains(p, dilation)
        })
    }
}

pub fn delta_region(xi: &Params, depth: usize) -> Result<DeltaRegion> {
    let sp = special_points(xi)?;
    let z = sp.z.ok_or(Error::ZUndefined)?;
    let x = fixed_points(xi)?.x;
    let delta0 = Polygon::new(vec![x, sp.t, z]);
    let mut delta_union = Vec::with_capacity(depth + 1);
    delta_union.push(delta0.clone());
    for _ in 0..depth {
        let next = map_polygon(xi, delta_union.last().unwrap());
        delta_union.push(next);
    }
    Ok(DeltaRegion { delta0, delta_union })
}
