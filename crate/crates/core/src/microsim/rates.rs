use crate::thermo::ModelParams;

/// `ell = a * round(m / (a³ rho))`, at least one lattice spacing.
pub fn mean_free_path(rho_local: f64, params: &ModelParams) -> f64 {
    let a = params.spacing;
    let ratio = params.mass / (a.powi(3) * rho_local);
    a * ratio.round().max(1.0)
}

/// Averaged initial/final hopping rate for a site whose potential rises along `+e_i`.
///
/// `k ≤ 0` hops towards `-e_i` and gains `kappa_arr²/(2m)` of kinetic energy;
/// `k ≥ kappa_dep` hops towards `+e_i` and loses `kappa_dep²/(2m)`. In between no hop is made.
pub fn hop_rate(k: f64, kappa_dep: f64, kappa_arr: f64, ell: f64, m: f64) -> f64 {
    if k <= 0.0 {
        (-k + (k * k + kappa_arr * kappa_arr).sqrt()) / (2.0 * m * ell)
    } else if k >= kappa_dep {
        (k + (k * k - kappa_dep * kappa_dep).max(0.0).sqrt()) / (2.0 * m * ell)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopOutcome {
    pub rate: f64,
    /// Momentum component along the hop axis on arrival.
    pub k_after: f64,
}

/// Outcome of a hop of a particle with axis momentum `k` to a site whose
/// potential differs by `delta_phi` (target minus source).
///
/// The direction is `+` for `k > 0` and `-` for `k ≤ 0`. Returns `None`
/// when the hop is energetically impossible or has zero rate.
pub fn hop_outcome(k: f64, delta_phi: f64, ell: f64, m: f64) -> Option<HopOutcome> {
    let sign = if k > 0.0 { 1.0 } else { -1.0 };
    let k2_after = k * k - 2.0 * m * delta_phi;
    if k2_after < 0.0 {
        return None;
    }
    let k_after = sign * k2_after.sqrt();
    let rate = (k.abs() + k_after.abs()) / (2.0 * m * ell);
    if rate > 0.0 {
        Some(HopOutcome { rate, k_after })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_free_path_rounding() {
        let p = ModelParams::argon();
        let a = p.spacing;
        assert_eq!(mean_free_path(p.rho_max(), &p), a);
        assert!((mean_free_path(p.rho_max() / 10.0, &p) / a - 10.0).abs() < 1e-12);
        assert!((mean_free_path(p.rho_max() / 10.4, &p) / a - 10.0).abs() < 1e-12);
        assert_eq!(mean_free_path(2.0 * p.rho_max(), &p), a);
    }

    #[test]
    fn rate_special_cases() {
        let (m, ell) = (2.0, 0.5);
        assert!((hop_rate(3.0, 0.0, 0.0, ell, m) - 3.0 / (m * ell)).abs() < 1e-15);
        assert!((hop_rate(1.5, 1.5, 0.7, ell, m) - 1.5 / (2.0 * m * ell)).abs() < 1e-15);
        assert!((hop_rate(0.0, 1.0, 0.8, ell, m) - 0.8 / (2.0 * m * ell)).abs() < 1e-15);
        assert_eq!(hop_rate(0.5, 1.0, 1.0, ell, m), 0.0);
        assert_eq!(hop_rate(-3.0, 0.0, 0.0, ell, m), 3.0 / (m * ell));
    }

    #[test]
    fn outcome_matches_rate_law() {
        let (m, ell) = (1.0, 1.0);
        let kappa = 0.6f64;
        let dphi = kappa * kappa / (2.0 * m);
        for k in [-2.0, -0.3, 0.0, 0.2, 0.6, 0.9, 3.0] {
            let expected = hop_rate(k, kappa, kappa, ell, m);
            let dphi_dir = if k > 0.0 { dphi } else { -dphi };
            let got = hop_outcome(k, dphi_dir, ell, m).map_or(0.0, |o| o.rate);
            assert!((got - expected).abs() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn outcome_conserves_energy_and_sign() {
        let m = 3.0;
        for (k, dphi) in [(2.0, 0.5), (-1.0, -0.25), (-0.5, 0.01), (4.0, -2.0)] {
            let o = hop_outcome(k, dphi, 1.0, m).unwrap();
            let before = k * k / (2.0 * m);
            let after = o.k_after * o.k_after / (2.0 * m) + dphi;
            assert!((before - after).abs() < 1e-14);
            assert_eq!(o.k_after.signum(), if k > 0.0 { 1.0 } else { -1.0 });
        }
        assert!(hop_outcome(0.1, 1.0, 1.0, 1.0).is_none());
        assert!(hop_outcome(0.0, 0.0, 1.0, 1.0).is_none());
    }
}
