//! The normal-form map `f(x, y) = (tau x + y + 1, -delta x)`, its inverse,
//! Jacobian eigen-structure, fixed points and orbits.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vertex with `|x|` at most this far from zero is treated as on the switching line.
pub const SIGMA_TOL: f64 = 1e-12;

/// The four-parameter tuple `(tau_L, delta_L, tau_R, delta_R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub tau_l: f64,
    pub delta_l: f64,
    pub tau_r: f64,
    pub delta_r: f64,
}

impl Params {
    pub const fn new(tau_l: f64, delta_l: f64, tau_r: f64, delta_r: f64) -> Self {
        Self {
            tau_l,
            delta_l,
            tau_r,
            delta_r,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tau_l.is_finite()
            && self.delta_l.is_finite()
            && self.tau_r.is_finite()
            && self.delta_r.is_finite()
    }

    /// `(tau, delta)` of one piece.
    #[inline]
    pub fn piece(&self, side: Side) -> (f64, f64) {
        match side {
            Side::L => (self.tau_l, self.delta_l),
            Side::R => (self.tau_r, self.delta_r),
        }
    }

    pub fn jacobian(&self, side: Side) -> Mat2 {
        let (tau, delta) = self.piece(side);
        Mat2::companion(tau, delta)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.tau_l, self.delta_l, self.tau_r, self.delta_r]
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(tau_L={}, delta_L={}, tau_R={}, delta_R={})",
            self.tau_l, self.delta_l, self.tau_r, self.delta_r
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    #[inline]
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector with slope `m`, i.e. along `[1, m]`.
    pub fn from_slope(m: f64) -> Point {
        let n = 1.0f64.hypot(m);
        Point::new(1.0 / n, m / n)
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// `[[tau, 1], [-delta, 0]]`, the Jacobian of either piece.
    pub const fn companion(tau: f64, delta: f64) -> Self {
        Mat2 {
            a: tau,
            b: 1.0,
            c: -delta,
            d: 0.0,
        }
    }

    #[inline]
    pub fn apply(&self, v: Point) -> Point {
        Point::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 {
            return None;
        }
        Some(Mat2 {
            a: self.d / det,
            b: -self.b / det,
            c: -self.c / det,
            d: self.a / det,
        })
    }

    /// Real eigenvalues `(larger magnitude, smaller magnitude)`, or `None`
    /// when the discriminant is not positive.
    pub fn real_eigenvalues(&self) -> Option<(f64, f64)> {
        stable_quadratic_roots(self.trace(), self.det())
    }

    /// Unit eigenvector for a real eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> Point {
        // rows of (M - lambda I) are both orthogonal to the eigenvector; use
        // the better conditioned one
        let r1 = Point::new(self.a - lambda, self.b);
        let r2 = Point::new(self.c, self.d - lambda);
        let r = if r1.norm() >= r2.norm() { r1 } else { r2 };
        let v = Point::new(-r.y, r.x);
        let n = v.norm();
        if n == 0.0 {
            Point::new(1.0, 0.0)
        } else {
            v * (1.0 / n)
        }
    }
}

/// Roots of `lambda^2 - trace lambda + det = 0`, larger magnitude first.
/// The larger root is formed without cancellation and the smaller one via
/// `det / larger`.
pub fn stable_quadratic_roots(trace: f64, det: f64) -> Option<(f64, f64)> {
    let disc = trace * trace - 4.0 * det;
    if disc <= 0.0 || !disc.is_finite() {
        return None;
    }
    let s = disc.sqrt();
    let big = 0.5 * (trace + s.copysign(if trace == 0.0 { 1.0 } else { trace }));
    Some((big, det / big))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    /// Piece used by the forward map at `p`; the right piece owns `x = 0`.
    #[inline]
    pub fn of(p: Point) -> Side {
        if p.x < 0.0 {
            Side::L
        } else {
            Side::R
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::L => "L",
            Side::R => "R",
        })
    }
}

/// One letter of a symbolic itinerary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    L,
    R,
    Sigma,
}

impl Letter {
    pub fn of(p: Point) -> Letter {
        if p.x.abs() <= SIGMA_TOL {
            Letter::Sigma
        } else if p.x < 0.0 {
            Letter::L
        } else {
            Letter::R
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::L => 'L',
            Letter::R => 'R',
            Letter::Sigma => 'Σ',
        }
    }
}

/// Forward map.
#[inline]
pub fn apply(xi: &Params, p: Point) -> Point {
    let (tau, delta) = xi.piece(Side::of(p));
    Point::new(tau * p.x + p.y + 1.0, -delta * p.x)
}

/// Inverse map. The preimage has `x = -y / delta`, so the sign of `p.y`
/// selects the piece: `y > 0` gives the left piece, `y < 0` the right one.
pub fn apply_inverse(xi: &Params, p: Point) -> Result<Point> {
    check_invertible(xi)?;
    Ok(apply_inverse_unchecked(xi, p))
}

pub(crate) fn check_invertible(xi: &Params) -> Result<()> {
    if xi.delta_l == 0.0 {
        return Err(Error::DegenerateParameters(Side::L));
    }
    if xi.delta_r == 0.0 {
        return Err(Error::DegenerateParameters(Side::R));
    }
    Ok(())
}

#[inline]
pub(crate) fn apply_inverse_unchecked(xi: &Params, p: Point) -> Point {
    let side = if p.y > 0.0 { Side::L } else { Side::R };
    let (tau, delta) = xi.piece(side);
    let x = if p.y == 0.0 { 0.0 } else { -p.y / delta };
    Point::new(x, p.x - 1.0 - tau * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub side: Side,
    pub lambda_u: f64,
    pub lambda_s: f64,
    /// Slope of the eigenvector for `lambda_u`.
    pub slope_u: f64,
    /// Slope of the eigenvector for `lambda_s`.
    pub slope_s: f64,
}

pub fn eigen(xi: &Params, side: Side) -> Result<EigenData> {
    let (tau, delta) = xi.piece(side);
    let (lambda_u, lambda_s) =
        stable_quadratic_roots(tau, delta).ok_or(Error::ComplexEigenvalues {
            side,
            discriminant: tau * tau - 4.0 * delta,
        })?;
    // eigenvector [1, lambda - tau]; with lambda_u + lambda_s = tau these are
    // -lambda_s and -lambda_u
    Ok(EigenData {
        side,
        lambda_u,
        lambda_s,
        slope_u: -lambda_s,
        slope_s: -lambda_u,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoints {
    pub x: Point,
    pub y: Point,
}

/// `X` (right piece) and `Y` (left piece) from their closed forms.
pub fn fixed_points(xi: &Params) -> Result<FixedPoints> {
    let den_x = xi.delta_r + 1.0 - xi.tau_r;
    let den_y = xi.tau_l - xi.delta_l - 1.0;
    if den_x == 0.0 {
        return Err(Error::DegenerateDenominator("delta_R + 1 - tau_R = 0"));
    }
    if den_y == 0.0 {
        return Err(Error::DegenerateDenominator("tau_L - delta_L - 1 = 0"));
    }
    Ok(FixedPoints {
        x: Point::new(1.0 / den_x, -xi.delta_r / den_x),
        y: Point::new(-1.0 / den_y, xi.delta_l / den_y),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub points: Vec<Point>,
    pub itinerary: Vec<Letter>,
    pub diverged: bool,
}

impl Orbit {
    pub fn word(&self) -> String {
        self.itinerary.iter().map(|l| l.as_char()).collect()
    }
}

/// Iterates `n` times from `p`. `points` holds the start and every iterate;
/// `itinerary[i]` is the letter of `points[i]` for each point that was mapped.
/// Iteration stops early once an iterate leaves the ball of `escape_radius`.
pub fn orbit(xi: &Params, p: Point, n: usize, escape_radius: f64) -> Orbit {
    let mut points = Vec::with_capacity(n + 1);
    let mut itinerary = Vec::with_capacity(n);
    let mut cur = p;
    points.push(cur);
    let mut diverged = false;
    for _ in 0..n {
        itinerary.push(Letter::of(cur));
        cur = apply(xi, cur);
        points.push(cur);
        if !(cur.norm() <= escape_radius) {
            diverged = true;
            break;
        }
    }
    Orbit {
        points,
        itinerary,
        diverged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const XI_A: Params = Params::new(1.5, 0.2, -2.0, 0.5);

    #[test]
    fn apply_examples() {
        assert_eq!(apply(&XI_A, Point::ORIGIN), Point::new(1.0, 0.0));
        assert_eq!(apply(&XI_A, Point::new(1.0, 0.0)), Point::new(-1.0, -0.5));
        let x = Point::new(2.0 / 7.0, -1.0 / 7.0);
        assert!(apply(&XI_A, x).dist(x) < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            apply_inverse(&XI_A, Point::new(1.0, 0.0)).unwrap(),
            Point::ORIGIN
        );
        let q = apply_inverse(&XI_A, Point::new(-1.0, -0.5)).unwrap();
        assert!(q.dist(Point::new(1.0, 0.0)) < 1e-15);
        let x = fixed_points(&XI_A).unwrap().x;
        assert!(apply_inverse(&XI_A, x).unwrap().dist(x) < 1e-15);
    }

    #[test]
    fn inverse_rejects_zero_determinant() {
        let xi = Params::new(1.5, 0.0, -2.0, 0.5);
        assert_eq!(
            apply_inverse(&xi, Point::ORIGIN),
            Err(Error::DegenerateParameters(Side::L))
        );
    }

    // independent oracle: textbook quadratic formula
    fn naive_roots(t: f64, d: f64) -> (f64, f64) {
        let s = (t * t - 4.0 * d).sqrt();
        let (a, b) = ((t + s) / 2.0, (t - s) / 2.0);
        if a.abs() > b.abs() {
            (a, b)
        } else {
            (b, a)
        }
    }

    #[test]
    fn eigen_examples() {
        let l = eigen(&XI_A, Side::L).unwrap();
        let (u, s) = naive_roots(1.5, 0.2);
        assert_abs_diff_eq!(l.lambda_u, u, epsilon = 1e-14);
        assert_abs_diff_eq!(l.lambda_s, s, epsilon = 1e-14);
        assert_abs_diff_eq!(l.lambda_u, 1.3520797, epsilon = 1e-7);
        assert_abs_diff_eq!(l.lambda_s, 0.1479203, epsilon = 1e-7);

        let r = eigen(&XI_A, Side::R).unwrap();
        assert_abs_diff_eq!(r.lambda_u, -1.7071068, epsilon = 1e-7);
        assert_abs_diff_eq!(r.lambda_s, -0.2928932, epsilon = 1e-7);
        // slope of E^s(X) is |lambda_R^u|, also -delta_R / lambda_R^s
        assert_abs_diff_eq!(r.slope_s, 1.7071068, epsilon = 1e-7);
        assert_abs_diff_eq!(r.slope_s, -0.5 / r.lambda_s, epsilon = 1e-14);
    }

    #[test]
    fn eigen_rejects_complex() {
        let xi = Params::new(0.5, 1.0, -2.0, 0.5);
        assert!(matches!(
            eigen(&xi, Side::L),
            Err(Error::ComplexEigenvalues { side: Side::L, .. })
        ));
    }

    #[test]
    fn small_root_near_zero_determinant() {
        let l = eigen(&Params::new(1.5, 1e-14, -2.0, 0.5), Side::L).unwrap();
        assert!((l.lambda_s - 1e-14 / 1.5).abs() < 1e-24);
    }

    #[test]
    fn fixed_point_examples() {
        let fp = fixed_points(&XI_A).unwrap();
        assert_abs_diff_eq!(fp.x.x, 2.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fp.x.y, -1.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fp.y.x, -10.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fp.y.y, 2.0 / 3.0, epsilon = 1e-14);
        assert!(fp.x.x > 0.0 && fp.y.x < 0.0);
    }

    #[test]
    fn fixed_points_degenerate() {
        let xi = Params::new(1.2, 0.2, -2.0, 0.5);
        assert!(matches!(
            fixed_points(&xi),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn orbit_examples() {
        let x = fixed_points(&XI_A).unwrap().x;
        let o = orbit(&XI_A, x, 5, 1e3);
        assert_eq!(o.points.len(), 6);
        assert!(o.points.iter().all(|p| p.dist(x) < 1e-14));
        assert_eq!(o.word(), "RRRRR");
        assert!(!o.diverged);

        let o = orbit(&XI_A, Point::ORIGIN, 2, 1e3);
        assert_eq!(
            o.points,
            vec![Point::ORIGIN, Point::new(1.0, 0.0), Point::new(-1.0, -0.5)]
        );
        assert_eq!(o.word(), "ΣR");
    }

    #[test]
    fn orbit_stops_on_escape() {
        let xi = Params::new(3.0, 0.2, -4.0, 0.5);
        let o = orbit(&xi, Point::new(5.0, 0.0), 100, 1e3);
        assert!(o.diverged);
        assert!(o.points.len() < 101);
        assert_eq!(o.itinerary.len(), o.points.len() - 1);
    }

    fn phi_params() -> impl Strategy<Value = Params> {
        (0.01..2.0f64, 0.01..4.0f64, 0.01..2.0f64, 0.01..4.0f64).prop_map(
            |(dl, a, dr, b)| Params::new(dl + 1.0 + a, dl, -(dr + 1.0 + b), dr),
        )
    }

    proptest! {
        #[test]
        fn pieces_agree_on_sigma(y in -1e3..1e3f64, xi in phi_params()) {
            let p = Point::new(0.0, y);
            let left = Point::new(xi.tau_l * 0.0 + y + 1.0, -xi.delta_l * 0.0);
            let right = Point::new(xi.tau_r * 0.0 + y + 1.0, -xi.delta_r * 0.0);
            prop_assert_eq!(left, right);
            prop_assert_eq!(apply(&xi, p), right);
        }

        #[test]
        fn inverse_round_trip(xi in phi_params(), x in -10.0..10.0f64, y in -10.0..10.0f64) {
            let p = Point::new(x, y);
            let scale = 1.0 + p.norm();
            let q = apply_inverse(&xi, apply(&xi, p)).unwrap();
            prop_assert!(q.dist(p) <= 1e-10 * scale);
            let r = apply(&xi, apply_inverse(&xi, p).unwrap());
            prop_assert!(r.dist(p) <= 1e-10 * scale);
        }

        #[test]
        fn eigen_identities(t in -10.0..10.0f64, d in -5.0..5.0f64) {
            prop_assume!(t * t - 4.0 * d > 1e-6);
            let xi = Params::new(t, d, t, d);
            let e = eigen(&xi, Side::L).unwrap();
            let scale = 1.0 + t.abs() + d.abs();
            prop_assert!((e.lambda_u * e.lambda_s - d).abs() <= 1e-12 * scale * scale);
            prop_assert!((e.lambda_u + e.lambda_s - t).abs() <= 1e-12 * scale);
            prop_assert!(e.lambda_u.abs() >= e.lambda_s.abs());
        }

        #[test]
        fn fixed_point_residuals(xi in phi_params()) {
            let fp = fixed_points(&xi).unwrap();
            prop_assert!(apply(&xi, fp.x).dist(fp.x) < 1e-12);
            prop_assert!(apply(&xi, fp.y).dist(fp.y) < 1e-12);
            prop_assert!(fp.x.x > 0.0 && fp.y.x < 0.0);
        }

        #[test]
        fn eigen_ordering_in_phi(xi in phi_params()) {
            let l = eigen(&xi, Side::L).unwrap();
            let r = eigen(&xi, Side::R).unwrap();
            prop_assert!(0.0 < l.lambda_s && l.lambda_s < 1.0 && 1.0 < l.lambda_u);
            prop_assert!(r.lambda_u < -1.0 && -1.0 < r.lambda_s && r.lambda_s < 0.0);
        }
    }
}
