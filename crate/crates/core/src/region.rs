//! Parameter-space calculus: the saddle-saddle region `Phi`, the robust
//! chaos subregion `Phi_BYG`, the renormalisation operator and the regions
//! `R_n`, and the indices `J1`, `J2` that gate the chaos theorems.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{eigen, stable_quadratic_roots, Params, Side};

/// Default cap on renormalisation depth; `delta_L delta_R` squares with every
/// step and underflows quickly.
pub const DEFAULT_N_MAX: usize = 12;

/// The four strict inequalities defining `Phi`, with a label for the first
/// one that fails.
pub fn phi_violation(xi: &Params) -> Option<&'static str> {
    if !xi.is_finite() {
        Some("parameters must be finite")
    } else if !(xi.tau_l > xi.delta_l + 1.0) {
        Some("tau_L > delta_L + 1")
    } else if !(xi.delta_l > 0.0) {
        Some("delta_L > 0")
    } else if !(xi.tau_r < -(xi.delta_r + 1.0)) {
        Some("tau_R < -(delta_R + 1)")
    } else if !(xi.delta_r > 0.0) {
        Some("delta_R > 0")
    } else {
        None
    }
}

pub fn in_phi(xi: &Params) -> bool {
    phi_violation(xi).is_none()
}

pub(crate) fn require_phi(xi: &Params) -> Result<()> {
    match phi_violation(xi) {
        None => Ok(()),
        Some(why) => Err(Error::Domain(format!("{xi} violates {why}"))),
    }
}

/// `phi(xi)`; positive exactly on `Phi_BYG` within `Phi`.
pub fn phi(xi: &Params) -> Result<f64> {
    require_phi(xi)?;
    phi_unchecked(xi)
}

/// `phi` wherever `lambda_L^u` is real, including the closure of `Phi`.
pub(crate) fn phi_unchecked(xi: &Params) -> Result<f64> {
    let lu = eigen(xi, Side::L)?.lambda_u;
    Ok(xi.delta_r - (xi.tau_r + xi.delta_l + xi.delta_r - (1.0 + xi.tau_r) * lu) * lu)
}

pub fn in_phi_byg(xi: &Params) -> bool {
    matches!(phi(xi), Ok(v) if v > 0.0)
}

/// The renormalisation operator `g`.
pub fn renormalise(xi: &Params) -> Params {
    let Params {
        tau_l,
        delta_l,
        tau_r,
        delta_r,
    } = *xi;
    Params::new(
        tau_r * tau_r - 2.0 * delta_r,
        delta_r * delta_r,
        tau_l * tau_r - delta_l - delta_r,
        delta_l * delta_r,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremFlags {
    pub j1: f64,
    pub j2: f64,
    /// `lambda_L^s + |lambda_R^s|`.
    pub sum_stable: f64,
    /// `Phi_BYG`, `J1 > 1` and `sum_stable < 1`: the stable manifold of `X` is dense.
    pub thm1_applies: bool,
    /// `Phi_BYG`, `J1 > 1` and `J2 < 1`: Devaney chaos on the attractor.
    pub thm2_applies: bool,
}

fn sqrt2_branch(l: f64) -> f64 {
    l.max(std::f64::consts::SQRT_2 * l / (l + 1.0))
}

pub fn chaos_indices(xi: &Params) -> Result<TheoremFlags> {
    require_phi(xi)?;
    let l = eigen(xi, Side::L)?;
    let r = eigen(xi, Side::R)?;
    let (lu, ls) = (l.lambda_u, l.lambda_s);
    let (ru, rs) = (r.lambda_u.abs(), r.lambda_s.abs());
    let j1 = lu * ru * ru / (lu + ru);
    let j2 = sqrt2_branch(ls) + sqrt2_branch(rs);
    let sum_stable = ls + rs;
    let byg = phi_unchecked(xi)? > 0.0;
    Ok(TheoremFlags {
        j1,
        j2,
        sum_stable,
        thm1_applies: byg && j1 > 1.0 && sum_stable < 1.0,
        thm2_applies: byg && j1 > 1.0 && j2 < 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionClass {
    pub in_phi: bool,
    pub in_phi_byg: bool,
    /// `n` with `xi` in `R_n`, if one exists up to `n_max`.
    pub rn_index: Option<usize>,
    /// `phi(xi)`, when `xi` is in `Phi`.
    pub phi: Option<f64>,
    /// `phi(g(xi))`, when `xi` is in `Phi`.
    pub phi_g: Option<f64>,
    pub flags: Option<TheoremFlags>,
}

/// `phi(g^k(xi))` for `k = 0..=n`. Iterates that overflow or drift out of
/// `Phi` give NaN, which satisfies neither side of the `R_n` test.
fn renormalised_phis(xi: &Params, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = *xi;
    for _ in 0..=n {
        out.push(phi(&cur).unwrap_or(f64::NAN));
        cur = renormalise(&cur);
    }
    out
}

pub fn classify_region(xi: &Params, n_max: usize) -> RegionClass {
    if !in_phi(xi) {
        return RegionClass {
            in_phi: false,
            in_phi_byg: false,
            rn_index: None,
            phi: None,
            phi_g: None,
            flags: None,
        };
    }
    let phis = renormalised_phis(xi, n_max + 1);
    let rn_index = (0..=n_max).find(|&n| phis[n] > 0.0 && phis[n + 1] <= 0.0);
    RegionClass {
        in_phi: true,
        in_phi_byg: phis[0] > 0.0,
        rn_index,
        phi: Some(phis[0]),
        phi_g: Some(phis[1]),
        flags: chaos_indices(xi).ok(),
    }
}

/// Every `n <= n_max` satisfying the `R_n` definition. The definition is
/// exclusive, so this never has more than one entry.
pub fn rn_matches(xi: &Params, n_max: usize) -> Vec<usize> {
    if !in_phi(xi) {
        return Vec::new();
    }
    let phis = renormalised_phis(xi, n_max + 1);
    (0..=n_max)
        .filter(|&n| phis[n] > 0.0 && phis[n + 1] <= 0.0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceQuantities {
    pub lambda_star: f64,
    /// `lambda* + delta_L / lambda*`, where `phi = 0` meets `tau_R = -delta_R - 1`.
    pub tau_l_corner: f64,
    pub m_crit: f64,
}

/// `(lambda*, tau_L corner)` for a slice of fixed determinants. `lambda*` is
/// the larger root of `-delta_R l^2 + (1 - delta_L) l + delta_R = 0`.
pub fn slice_corner(delta_l: f64, delta_r: f64) -> Result<(f64, f64)> {
    if !(delta_r > 0.0) {
        return Err(Error::Domain(format!("delta_R = {delta_r} must be positive")));
    }
    // divide through by -delta_R: l^2 - ((1 - delta_L)/delta_R) l - 1 = 0
    let (a, b) = stable_quadratic_roots((1.0 - delta_l) / delta_r, -1.0)
        .ok_or_else(|| Error::Domain("no real root for lambda*".into()))?;
    let lambda_star = a.max(b);
    Ok((lambda_star, lambda_star + delta_l / lambda_star))
}

/// `m_crit`, the second slope at which `A_L` stretches by exactly `lambda_L^u`.
pub fn m_crit(xi: &Params) -> Result<f64> {
    require_phi(xi)?;
    let l = eigen(xi, Side::L)?;
    Ok(l.lambda_s + 2.0 * xi.tau_l / (l.lambda_u * l.lambda_u - 1.0))
}

pub fn slice_quantities(xi: &Params) -> Result<SliceQuantities> {
    let (lambda_star, tau_l_corner) = slice_corner(xi.delta_l, xi.delta_r)?;
    Ok(SliceQuantities {
        lambda_star,
        tau_l_corner,
        m_crit: m_crit(xi)?,
    })
}

/// Uniform sample of a bounded box inside `Phi`.
pub fn sample_phi<R: Rng + ?Sized>(rng: &mut R) -> Params {
    let delta_l = rng.gen_range(1e-3..2.0);
    let delta_r = rng.gen_range(1e-3..2.0);
    let tau_l = rng.gen_range(delta_l + 1.0..delta_l + 5.0);
    let tau_r = rng.gen_range(-(delta_r + 5.0)..-(delta_r + 1.0));
    let xi = Params::new(tau_l, delta_l, tau_r, delta_r);
    if in_phi(&xi) {
        xi
    } else {
        sample_phi(rng)
    }
}

/// Rejection sample of `Phi_BYG` over the slice geometry:
/// `delta_L, delta_R` in `(0, 1)`, `tau_L` below the corner, `tau_R` in
/// `(-5, -delta_R - 1)`.
pub fn sample_phi_byg<R: Rng + ?Sized>(rng: &mut R) -> Params {
    loop {
        let delta_l = rng.gen_range(1e-3..1.0);
        let delta_r = rng.gen_range(1e-3..1.0);
        let Ok((_, corner)) = slice_corner(delta_l, delta_r) else {
            continue;
        };
        if corner <= delta_l + 1.0 {
            continue;
        }
        let tau_l = rng.gen_range(delta_l + 1.0..corner);
        let tau_r = rng.gen_range(-5.0..-(delta_r + 1.0));
        let xi = Params::new(tau_l, delta_l, tau_r, delta_r);
        if in_phi_byg(&xi) {
            return xi;
        }
    }
}

/// Rejection sample of `Phi_BYG` from the wider box of [`sample_phi`], with
/// no restriction on `delta_L`.
pub fn sample_phi_byg_wide<R: Rng + ?Sized>(rng: &mut R) -> Params {
    loop {
        let xi = sample_phi(rng);
        if in_phi_byg(&xi) {
            return xi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const XI_A: Params = Params::new(1.5, 0.2, -2.0, 0.5);

    // oracle: phi evaluated with the textbook quadratic root
    fn phi_oracle(xi: &Params) -> f64 {
        let lu = (xi.tau_l + (xi.tau_l * xi.tau_l - 4.0 * xi.delta_l).sqrt()) / 2.0;
        xi.delta_r - (xi.tau_r + xi.delta_l + xi.delta_r - (1.0 + xi.tau_r) * lu) * lu
    }

    #[test]
    fn phi_examples() {
        let v = phi(&XI_A).unwrap();
        assert_abs_diff_eq!(v, phi_oracle(&XI_A), epsilon = 1e-13);
        assert_abs_diff_eq!(v, 0.42958, epsilon = 5e-6);
        let g = renormalise(&XI_A);
        let vg = phi(&g).unwrap();
        assert_abs_diff_eq!(vg, phi_oracle(&g), epsilon = 1e-12);
        assert_abs_diff_eq!(vg, -13.07, epsilon = 5e-3);
    }

    #[test]
    fn phi_equals_delta_r_when_bracket_vanishes() {
        // choose tau_R so that (1 + tau_R) lu = tau_R + delta_L + delta_R
        let (tau_l, delta_l, delta_r) = (3.0, 0.1, 0.1);
        let lu = eigen(&Params::new(tau_l, delta_l, 0.0, delta_r), Side::L)
            .unwrap()
            .lambda_u;
        let tau_r = (delta_l + delta_r - lu) / (lu - 1.0);
        let xi = Params::new(tau_l, delta_l, tau_r, delta_r);
        assert!(in_phi(&xi));
        assert_abs_diff_eq!(phi(&xi).unwrap(), delta_r, epsilon = 1e-12);
    }

    #[test]
    fn phi_outside_domain() {
        assert!(matches!(
            phi(&Params::new(1.5, 0.2, 2.0, 0.5)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn renormalise_examples() {
        let g = renormalise(&XI_A);
        assert_eq!(g, Params::new(3.0, 0.25, -3.7, 0.1));
        let star = Params::new(1.0, 0.0, -1.0, 0.0);
        assert_eq!(renormalise(&star), star);
        let z = Params::new(1.7, 0.0, -2.3, 0.0);
        assert_eq!(renormalise(&z), Params::new(2.3 * 2.3, 0.0, 1.7 * -2.3, 0.0));
    }

    #[test]
    fn classify_examples() {
        let c = classify_region(&XI_A, DEFAULT_N_MAX);
        assert!(c.in_phi && c.in_phi_byg);
        assert_eq!(c.rn_index, Some(0));
        let f = c.flags.unwrap();
        assert!(f.thm1_applies && f.thm2_applies);

        let c = classify_region(&Params::new(1.5, 0.2, 2.0, 0.5), DEFAULT_N_MAX);
        assert!(!c.in_phi);
        assert_eq!(c.rn_index, None);
        assert_eq!(phi_violation(&Params::new(1.5, 0.2, 2.0, 0.5)), Some("tau_R < -(delta_R + 1)"));
    }

    #[test]
    fn slice_has_r0_and_r1_only() {
        let mut seen = [0usize; 3];
        for i in 0..60 {
            for j in 0..60 {
                let tau_l = 1.2 + 1.0 * i as f64 / 59.0;
                let tau_r = -1.5 - 1e-6 - 1.5 * j as f64 / 59.0;
                let xi = Params::new(tau_l, 0.2, tau_r, 0.5);
                assert!(rn_matches(&xi, DEFAULT_N_MAX).len() <= 1);
                match classify_region(&xi, DEFAULT_N_MAX).rn_index {
                    Some(0) => seen[0] += 1,
                    Some(1) => seen[1] += 1,
                    Some(_) => seen[2] += 1,
                    None => {}
                }
            }
        }
        assert!(seen[0] > 0 && seen[1] > 0);
        // R_1 is a thin band just below tau_R = -1.5
        assert!(seen[1] < seen[0]);
        assert_eq!(
            classify_region(&Params::new(1.5, 0.2, -1.53, 0.5), DEFAULT_N_MAX).rn_index,
            Some(1)
        );
    }

    #[test]
    fn chaos_index_examples() {
        let f = chaos_indices(&XI_A).unwrap();
        let (lu, ls) = (1.3520797, 0.1479203);
        let (ru, rs) = (1.7071068f64, 0.2928932f64);
        let j1 = lu * ru * ru / (lu + ru);
        assert_abs_diff_eq!(f.j1, j1, epsilon = 1e-6);
        assert_abs_diff_eq!(f.j1, 1.28800, epsilon = 1e-5);
        assert_abs_diff_eq!(f.j2, 0.50261, epsilon = 5e-6);
        assert_abs_diff_eq!(f.sum_stable, ls + rs, epsilon = 1e-7);
        assert_abs_diff_eq!(f.sum_stable, 0.44081, epsilon = 5e-6);
        assert!(f.thm2_applies && f.thm1_applies);
    }

    #[test]
    fn slice_quantity_examples() {
        let (ls, corner) = slice_corner(0.2, 0.5).unwrap();
        // oracle: larger root of -0.5 l^2 + 0.8 l + 0.5
        let oracle = (-0.8 - (0.64f64 + 1.0).sqrt()) / -1.0;
        assert_abs_diff_eq!(ls, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(ls, 2.0806248, epsilon = 1e-7);
        assert_abs_diff_eq!(corner, 2.1767497, epsilon = 2e-7);

        let q = slice_quantities(&XI_A).unwrap();
        assert_abs_diff_eq!(q.m_crit, 3.7705852, epsilon = 5e-7);
        assert!(q.m_crit > 2.0 * XI_A.delta_r);
        assert!(slice_corner(0.2, 0.0).is_err());
    }

    #[test]
    fn renormalisation_and_m_crit_bounds_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let xi = sample_phi(&mut rng);
            let f = chaos_indices(&xi).unwrap();
            if f.j1 > 1.0 {
                assert!(phi(&renormalise(&xi)).unwrap() < 0.0, "{xi}");
            }
            assert!(!(f.thm2_applies && !f.thm1_applies));
        }
        for _ in 0..1000 {
            let xi = sample_phi_byg(&mut rng);
            assert!(m_crit(&xi).unwrap() > 2.0 * xi.delta_r, "{xi}");
        }
        // the slice sampler fixes delta_L < 1, so draw from the wider box
        let mut wide_dl = 0.0f64;
        for _ in 0..1000 {
            let xi = sample_phi_byg_wide(&mut rng);
            assert!(xi.delta_l < 1.0, "{xi}");
            assert!(m_crit(&xi).unwrap() > 2.0 * xi.delta_r, "{xi}");
            wide_dl = wide_dl.max(xi.delta_l);
        }
        assert!(wide_dl > 0.5);
    }
}
