//! Randomised property suites over parameter space, run either at a single
//! parameter point (with random inner data) or over random parameter draws.
//!
//! Every suite reduces to a single number per sample, and the suite passes when
//! the worst number stays within the tolerance. For residual checks `worst` is
//! an error magnitude. For strict inequalities `lhs < rhs` it is `lhs - rhs`,
//! which must stay negative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{find_cycle, Multipliers};
use crate::geometry::{
    cone_factors, cone_step, forward_cone, inverse_cone, longest_piece_bound, map_polyline,
    split_at_sigma, Direction, Interval, Line, Polyline, Segment,
};
use crate::manifolds::{
    attractor_cloud, grow_manifold, special_points, trapping_region, AttractorOptions,
    ManifoldSpec,
};
use crate::map::{apply, apply_inverse, eigen, fixed_points, Params, Point, Side};
use crate::region::{
    chaos_indices, classify_region, in_phi, in_phi_byg, m_crit, renormalise, rn_matches,
    sample_phi, sample_phi_byg, sample_phi_byg_wide, DEFAULT_N_MAX,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scope {
    /// One parameter point; `n` draws of inner random data.
    Point { xi: Params, n: usize },
    /// `n` random parameter draws per suite.
    Random { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub scope: Scope,
    pub seed: u64,
    /// Multiplies every tolerance. Negative values corrupt the tolerances so
    /// that residual suites must fail; used to self-test the harness.
    pub tolerance_scale: f64,
}

impl VerifyOptions {
    pub fn new(scope: Scope, seed: u64) -> Self {
        Self {
            scope,
            seed,
            tolerance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    /// Samples that met the suite's precondition and were checked.
    pub samples: usize,
    /// Worst observed value; `None` when no sample was checked.
    pub worst: Option<f64>,
    pub tol: f64,
    pub strict: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scope: Scope,
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub pass: bool,
}

/// Which parameters a suite draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cond {
    Phi,
    Byg,
    /// `Phi_BYG` without the slice sampler's `delta_L < 1` restriction.
    BygWide,
    J1AboveOne,
    J2BelowOne,
    R0,
}

impl Cond {
    fn holds(self, xi: &Params) -> bool {
        match self {
            Cond::Phi => in_phi(xi),
            Cond::Byg | Cond::BygWide => in_phi_byg(xi),
            Cond::J1AboveOne => matches!(chaos_indices(xi), Ok(f) if f.j1 > 1.0),
            Cond::J2BelowOne => matches!(chaos_indices(xi), Ok(f) if f.j2 < 1.0),
            Cond::R0 => classify_region(xi, DEFAULT_N_MAX).rn_index == Some(0),
        }
    }

    fn draw(self, rng: &mut ChaCha8Rng) -> Option<Params> {
        const ATTEMPTS: usize = 1_000_000;
        match self {
            Cond::Phi => Some(sample_phi(rng)),
            Cond::Byg => Some(sample_phi_byg(rng)),
            Cond::BygWide => Some(sample_phi_byg_wide(rng)),
            Cond::J1AboveOne => (0..ATTEMPTS).map(|_| sample_phi(rng)).find(|xi| self.holds(xi)),
            Cond::J2BelowOne | Cond::R0 => {
                (0..ATTEMPTS).map(|_| sample_phi_byg(rng)).find(|xi| self.holds(xi))
            }
        }
    }
}

struct Suite {
    name: &'static str,
    cond: Cond,
    tol: f64,
    strict: bool,
    /// Worst value for one sample; `None` when the sample is not applicable.
    check: fn(&Params, &mut ChaCha8Rng) -> Option<f64>,
}

fn suites() -> Vec<Suite> {
    vec![
        Suite { name: "map.continuity_on_sigma", cond: Cond::Phi, tol: 0.0, strict: false, check: continuity_on_sigma },
        Suite { name: "map.inverse_round_trip", cond: Cond::Phi, tol: 1e-10, strict: false, check: inverse_round_trip },
        Suite { name: "map.eigen_identities", cond: Cond::Phi, tol: 1e-12, strict: false, check: eigen_identities },
        Suite { name: "map.fixed_point_residuals", cond: Cond::Phi, tol: 1e-12, strict: false, check: fixed_point_residuals },
        Suite { name: "map.eigenvalue_ordering", cond: Cond::Phi, tol: 0.0, strict: true, check: eigenvalue_ordering },
        Suite { name: "region.renormalised_phi_negative_when_j1_above_one", cond: Cond::J1AboveOne, tol: 0.0, strict: true, check: renormalised_phi_sign },
        Suite { name: "region.m_crit_above_twice_delta_r", cond: Cond::Byg, tol: 0.0, strict: true, check: m_crit_margin },
        Suite { name: "region.delta_l_below_one", cond: Cond::BygWide, tol: 0.0, strict: true, check: delta_l_below_one },
        Suite { name: "region.rn_exclusive", cond: Cond::Phi, tol: 0.0, strict: false, check: rn_exclusive },
        Suite { name: "region.g_fixed_point", cond: Cond::Phi, tol: 0.0, strict: false, check: g_fixed_point },
        Suite { name: "cones.forward_invariance", cond: Cond::Byg, tol: 1e-12, strict: false, check: forward_cone_invariance },
        Suite { name: "cones.forward_expansion", cond: Cond::Byg, tol: 1e-12, strict: false, check: forward_cone_expansion },
        Suite { name: "cones.inverse_invariance_and_expansion", cond: Cond::Phi, tol: 1e-12, strict: false, check: inverse_cones },
        Suite { name: "cones.j2_equivalence", cond: Cond::Phi, tol: 1e-12, strict: false, check: j2_equivalence },
        Suite { name: "cones.inverse_eigenvalues_reciprocal", cond: Cond::Phi, tol: 1e-12, strict: false, check: inverse_eigenvalues },
        Suite { name: "polyline.longest_piece_bound", cond: Cond::Byg, tol: 1e-9, strict: false, check: longest_piece },
        Suite { name: "polyline.length_accounting", cond: Cond::Phi, tol: 1e-12, strict: false, check: length_accounting },
        Suite { name: "special.u_minus_v_factored", cond: Cond::Phi, tol: 1e-12, strict: false, check: u_minus_v_identity },
        Suite { name: "special.u_above_v", cond: Cond::Phi, tol: 0.0, strict: true, check: u_above_v },
        Suite { name: "trap.omega_forward_invariant", cond: Cond::Byg, tol: 1e-9, strict: false, check: omega_invariance },
        Suite { name: "manifolds.unstable_slopes_in_cone", cond: Cond::Byg, tol: 1e-9, strict: false, check: unstable_slopes },
        Suite { name: "manifolds.stable_seed_on_eigenline", cond: Cond::Phi, tol: 1e-12, strict: false, check: stable_seed_collinear },
        Suite { name: "manifolds.backward_divergence", cond: Cond::J2BelowOne, tol: 0.0, strict: false, check: backward_divergence },
        Suite { name: "attractor.straddles_sigma", cond: Cond::R0, tol: 0.0, strict: false, check: attractor_two_sided },
        Suite { name: "cycles.residuals", cond: Cond::Phi, tol: 1e-10, strict: false, check: cycle_residuals },
        Suite { name: "cycles.rotation_invariance", cond: Cond::Phi, tol: 1e-9, strict: false, check: cycle_rotation },
    ]
}

pub fn suite_names() -> Vec<&'static str> {
    suites().iter().map(|s| s.name).collect()
}

pub fn run_suites(opts: &VerifyOptions) -> Report {
    let results: Vec<SuiteResult> = suites()
        .iter()
        .enumerate()
        .map(|(k, s)| run_suite(s, k as u64, opts))
        .collect();
    let pass = results.iter().all(|r| r.pass);
    Report {
        scope: opts.scope,
        seed: opts.seed,
        suites: results,
        pass,
    }
}

fn run_suite(s: &Suite, index: u64, opts: &VerifyOptions) -> SuiteResult {
    let (n, point) = match opts.scope {
        Scope::Point { xi, n } => (n, Some(xi)),
        Scope::Random { n } => (n, None),
    };
    let values: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            // one stream per sample keeps results independent of scheduling
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index);
            rng.set_stream(i as u64);
            let xi = match point {
                Some(xi) => s.cond.holds(&xi).then_some(xi)?,
                None => s.cond.draw(&mut rng)?,
            };
            (s.check)(&xi, &mut rng)
        })
        .collect();
    let checked: Vec<f64> = values.into_iter().flatten().collect();
    let worst = checked
        .iter()
        .copied()
        .reduce(|a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
    let tol = s.tol * opts.tolerance_scale;
    let pass = match worst {
        None => true,
        Some(w) if s.strict => w < tol,
        Some(w) => w <= tol,
    };
    SuiteResult {
        name: s.name.to_string(),
        samples: checked.len(),
        worst,
        tol,
        strict: s.strict,
        pass,
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.abs().max(1.0)
}

fn random_point(rng: &mut ChaCha8Rng, r: f64) -> Point {
    Point::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn continuity_on_sigma(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let y: f64 = rng.gen_range(-10.0..10.0);
        let l = xi.jacobian(Side::L).apply(Point::new(0.0, y)) + Point::new(1.0, 0.0);
        let r = xi.jacobian(Side::R).apply(Point::new(0.0, y)) + Point::new(1.0, 0.0);
        worst = worst.max(l.dist(r));
    }
    Some(worst)
}

fn inverse_round_trip(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let p = random_point(rng, 5.0);
    let a = apply_inverse(xi, apply(xi, p)).ok()?;
    let b = apply(xi, apply_inverse(xi, p).ok()?);
    Some(rel(a.dist(p), p.norm()).max(rel(b.dist(p), p.norm())))
}

fn eigen_identities(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let mut worst = 0.0f64;
    for side in [Side::L, Side::R] {
        let (tau, delta) = xi.piece(side);
        let e = eigen(xi, side).ok()?;
        worst = worst
            .max(rel(e.lambda_u * e.lambda_s - delta, delta))
            .max(rel(e.lambda_u + e.lambda_s - tau, tau));
    }
    Some(worst)
}

fn fixed_point_residuals(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let fp = fixed_points(xi).ok()?;
    Some(apply(xi, fp.x).dist(fp.x).max(apply(xi, fp.y).dist(fp.y)))
}

fn eigenvalue_ordering(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let l = eigen(xi, Side::L).ok()?;
    let r = eigen(xi, Side::R).ok()?;
    // each entry is lhs - rhs of a strict inequality lhs < rhs
    let gaps = [
        -l.lambda_s,
        l.lambda_s - 1.0,
        1.0 - l.lambda_u,
        r.lambda_u + 1.0,
        -1.0 - r.lambda_s,
        r.lambda_s,
    ];
    Some(gaps.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn renormalised_phi_sign(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    crate::region::phi_unchecked(&renormalise(xi)).ok()
}

fn m_crit_margin(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    Some(2.0 * xi.delta_r - m_crit(xi).ok()?)
}

fn delta_l_below_one(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    Some(xi.delta_l - 1.0)
}

fn rn_exclusive(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let matches = rn_matches(xi, DEFAULT_N_MAX);
    let class = classify_region(xi, DEFAULT_N_MAX);
    let extra = matches.len().saturating_sub(1) as f64;
    let first_ok = class.rn_index == matches.first().copied();
    Some(if first_ok { extra } else { extra + 1.0 })
}

fn g_fixed_point(_: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let star = Params::new(1.0, 0.0, -1.0, 0.0);
    let g = renormalise(&star);
    Some(
        star.as_array()
            .iter()
            .zip(g.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
    )
}

fn interval_excess(k: &Interval, m: f64) -> f64 {
    (k.lo - m).max(m - k.hi).max(0.0) / (1.0 + m.abs())
}

fn forward_cone_invariance(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let k = forward_cone(xi).ok()?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = rng.gen_range(k.lo..=k.hi);
        for side in [Side::L, Side::R] {
            worst = worst.max(interval_excess(&k, cone_step(xi, side, false, m).ok()?));
        }
    }
    Some(worst)
}

fn forward_cone_expansion(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let k = forward_cone(xi).ok()?;
    let f = cone_factors(xi).ok()?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v = Point::new(1.0, rng.gen_range(k.lo..=k.hi));
        let al = xi.jacobian(Side::L).apply(v).norm();
        let ar = xi.jacobian(Side::R).apply(v).norm();
        worst = worst
            .max((f.c_l_crit * v.norm() - al) / v.norm())
            .max((f.c_r * v.norm() - ar) / v.norm());
    }
    Some(worst)
}

fn inverse_cones(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let k = inverse_cone(xi).ok()?;
    let f = cone_factors(xi).ok()?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = rng.gen_range(k.lo..=k.hi);
        let v = Point::new(m, 1.0);
        for (side, c) in [(Side::L, f.c_hat_l), (Side::R, f.c_hat_r)] {
            worst = worst.max(interval_excess(&k, cone_step(xi, side, true, m).ok()?));
            let w = xi.jacobian(side).inverse()?.apply(v);
            worst = worst.max((c * v.norm() - w.norm()) / v.norm());
        }
    }
    Some(worst)
}

fn j2_equivalence(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let f = cone_factors(xi).ok()?;
    let j2 = chaos_indices(xi).ok()?.j2;
    let sum = 1.0 / f.c_hat_l + 1.0 / f.c_hat_r;
    if (sum < 1.0) != (j2 < 1.0) {
        return Some(f64::INFINITY);
    }
    Some(rel(sum - j2, j2).abs())
}

fn inverse_eigenvalues(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let mut worst = 0.0f64;
    for side in [Side::L, Side::R] {
        let e = eigen(xi, side).ok()?;
        let (a, b) = xi.jacobian(side).inverse()?.real_eigenvalues()?;
        let (ra, rb) = (1.0 / e.lambda_s, 1.0 / e.lambda_u);
        worst = worst.max(rel(a - ra, ra).abs()).max(rel(b - rb, rb).abs());
    }
    Some(worst)
}

fn longest_piece(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let k = forward_cone(xi).ok()?;
    let f = cone_factors(xi).ok()?;
    let cone = crate::geometry::SlopeCone {
        orientation: crate::geometry::Orientation::XBased,
        k,
        expansion: f.c_l_crit,
    };
    let cone_r = crate::geometry::SlopeCone { expansion: f.c_r, ..cone };
    if !(cone.certify(xi, Side::L) && cone_r.certify(xi, Side::R)) {
        return None;
    }
    // a segment through a random point of the switching line
    let m = rng.gen_range(k.lo..=k.hi);
    let c = Point::new(0.0, rng.gen_range(-2.0..2.0));
    let dir = Point::from_slope(m);
    let seg = Segment::new(c - dir * rng.gen_range(0.01..2.0), c + dir * rng.gen_range(0.01..2.0));
    let split = split_at_sigma(&seg);
    let (Some(l), Some(r)) = (split.left, split.right) else { return None };
    let img = |s: Segment| apply(xi, s.p).dist(apply(xi, s.q));
    let longer = img(l).max(img(r));
    Some(longest_piece_bound(f.c_l_crit, f.c_r) * seg.len() - longer)
}

fn length_accounting(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let side = if rng.gen_bool(0.5) { Side::L } else { Side::R };
    let sign = if side == Side::L { -1.0 } else { 1.0 };
    let p = Point::new(sign * rng.gen_range(0.1..3.0), rng.gen_range(-3.0..3.0));
    let q = Point::new(sign * rng.gen_range(0.1..3.0), rng.gen_range(-3.0..3.0));
    let img = map_polyline(xi, &Polyline::segment(p, q), Direction::Forward).ok()?;
    let expect = xi.jacobian(side).apply(q - p).norm();
    Some(rel(img.length() - expect, expect).abs())
}

fn u_minus_v_identity(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let sp = special_points(xi).ok()?;
    let ls = eigen(xi, Side::L).ok()?.lambda_s;
    let r = eigen(xi, Side::R).ok()?;
    let (ru, rs) = (r.lambda_u, r.lambda_s);
    let factored =
        ru.abs() * (1.0 - ls + rs) * (ls - ru) / ((1.0 - ls) * (1.0 - ru) * (ls - xi.tau_r));
    let diff = sp.u.y - sp.v.y;
    Some(rel(diff - factored, diff).abs())
}

fn u_above_v(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let f = chaos_indices(xi).ok()?;
    if !(f.sum_stable < 1.0) {
        return None;
    }
    let sp = special_points(xi).ok()?;
    Some(sp.v.y - sp.u.y)
}

fn omega_invariance(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let Ok(tr) = trapping_region(xi) else {
        return Some(f64::INFINITY);
    };
    let v = &tr.omega.vertices;
    let diam = tr.omega.diameter();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let (mut a, mut b) = (rng.gen::<f64>(), rng.gen::<f64>());
        if a + b > 1.0 {
            (a, b) = (1.0 - a, 1.0 - b);
        }
        let mut p = v[0] + (v[1] - v[0]) * a + (v[2] - v[0]) * b;
        for _ in 0..100 {
            p = apply(xi, p);
            worst = worst.max(tr.omega.excess(p) / diam);
        }
    }
    Some(worst)
}

fn unstable_slopes(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let k = forward_cone(xi).ok()?;
    let wu = grow_manifold(xi, &ManifoldSpec::unstable_x(), 8).ok()?;
    Some(
        wu.edges()
            .filter(|e| e.len() > 1e-12)
            .map(|e| interval_excess(&k, e.slope()))
            .fold(0.0, f64::max),
    )
}

fn stable_seed_collinear(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let sp = special_points(xi).ok()?;
    let x = fixed_points(xi).ok()?.x;
    let ru = eigen(xi, Side::R).ok()?.lambda_u;
    let line = Line::through(x, ru.abs());
    Some(
        [sp.f_v, sp.v, sp.finv_v]
            .iter()
            .map(|p| rel(line.signed_distance(*p).abs(), p.norm()))
            .fold(0.0, f64::max),
    )
}

/// Fraction of 100 seeds in `Omega` near which no point was found whose
/// backward orbit passes norm 1e6 within 1e4 steps.
fn backward_divergence(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    const SEEDS: usize = 100;
    const TRIES: usize = 20;
    const EPS: f64 = 1e-3;
    let tr = crate::manifolds::trapping_polygons(xi).ok()?;
    let v = &tr.omega.vertices;
    let mut failures = 0usize;
    for _ in 0..SEEDS {
        let (mut a, mut b) = (rng.gen::<f64>(), rng.gen::<f64>());
        if a + b > 1.0 {
            (a, b) = (1.0 - a, 1.0 - b);
        }
        let seed = v[0] + (v[1] - v[0]) * a + (v[2] - v[0]) * b;
        let found = (0..TRIES).any(|_| {
            let mut p = seed + random_point(rng, EPS) * (1.0 / std::f64::consts::SQRT_2);
            for _ in 0..10_000 {
                p = crate::map::apply_inverse_unchecked(xi, p);
                if !(p.norm() <= 1e6) {
                    return true;
                }
            }
            false
        });
        failures += (!found) as usize;
    }
    Some(failures as f64 / SEEDS as f64)
}

fn attractor_two_sided(xi: &Params, rng: &mut ChaCha8Rng) -> Option<f64> {
    let opts = AttractorOptions {
        samples: 10_000,
        seed: rng.gen(),
        ..Default::default()
    };
    let Ok(a) = attractor_cloud(xi, &opts) else {
        return Some(1.0);
    };
    let left = a.cloud.iter().any(|p| p.x < 0.0);
    let right = a.cloud.iter().any(|p| p.x > 0.0);
    Some(if left && right { 0.0 } else { 1.0 })
}

const WORDS: [&str; 5] = ["LR", "LRR", "LLR", "LRRR", "LLRR"];

fn cycle_residuals(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for w in WORDS {
        let Ok(c) = find_cycle(xi, w) else { continue };
        for &p in &c.points {
            let q = (0..w.len()).fold(p, |q, _| apply(xi, q));
            worst = Some(worst.unwrap_or(0.0).max(q.dist(p)));
        }
    }
    worst
}

fn cycle_rotation(xi: &Params, _: &mut ChaCha8Rng) -> Option<f64> {
    let a = find_cycle(xi, "LRR").ok()?;
    let mut worst = 0.0f64;
    for rot in ["RRL", "RLR"] {
        let b = find_cycle(xi, rot).ok()?;
        for p in &a.points {
            let d = b.points.iter().map(|q| q.dist(*p)).fold(f64::INFINITY, f64::min);
            worst = worst.max(rel(d, p.norm()));
        }
        let pair = |m: Multipliers| match m {
            Multipliers::Real { big, small } => (big, small),
            Multipliers::Complex { re, im } => (re, im),
        };
        let ((a1, a2), (b1, b2)) = (pair(a.multipliers), pair(b.multipliers));
        worst = worst.max(rel(a1 - b1, a1).abs()).max(rel(a2 - b2, a2).abs());
    }
    Some(worst)
}
