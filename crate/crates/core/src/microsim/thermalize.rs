use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::lattice::{Configuration, SiteState};
use super::MicroError;
use crate::thermo::{
    canonical_to_mixture, mixture_to_canonical, CanonicalSite, CanonicalState, MixtureSite, ModelParams,
    ThermoError,
};

/// How momenta are drawn from an exponential site law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentumSampling {
    /// Exact Gaussian draw, consistent with the integral form of `Z_i`.
    #[default]
    Continuum,
    /// Gaussian draw rounded to the nearest multiple of `eps`.
    EpsilonGrid,
}

/// Draw a momentum from `exp(-beta k²/(2m) - zeta·k)`: Gaussian with mean
/// `-m zeta/beta` and variance `m/beta` per component.
pub fn sample_momentum<R: Rng + ?Sized>(
    site: &CanonicalSite,
    params: &ModelParams,
    sampling: MomentumSampling,
    rng: &mut R,
) -> [f64; 3] {
    let sd = (params.mass / site.beta).sqrt();
    std::array::from_fn(|i| {
        let z: f64 = rng.sample(StandardNormal);
        let k = -params.mass * site.zeta[i] / site.beta + sd * z;
        match sampling {
            MomentumSampling::Continuum => k,
            MomentumSampling::EpsilonGrid => {
                let eps = params.momentum_quantum;
                (k / eps).round() * eps
            }
        }
    })
}

/// Draw a lattice configuration from a product of exponential site laws.
pub fn sample_configuration<R: Rng + ?Sized>(
    states: &[CanonicalState],
    phi: &[f64],
    params: &ModelParams,
    sampling: MomentumSampling,
    rng: &mut R,
) -> Result<Configuration, MicroError> {
    if phi.len() != states.len() {
        return Err(MicroError::FieldSize {
            expected: states.len(),
            got: phi.len(),
        });
    }
    let mut sites = Vec::with_capacity(states.len());
    for (s, &p) in states.iter().zip(phi) {
        let n = canonical_to_mixture(s, p, params)?.n;
        let u: f64 = rng.random();
        sites.push(match s {
            CanonicalState::Thermal(c) if u < n => SiteState::Particle(sample_momentum(c, params, sampling, rng)),
            _ => SiteState::Hole,
        });
    }
    Ok(Configuration { sites })
}

/// Result of projecting per-site means onto the exponential family.
///
/// The projected state is identified by the means it matches (its mixture
/// coordinates); `states` are the canonical coordinates computed from them.
#[derive(Debug, Clone, PartialEq)]
pub struct QProjection {
    pub means: Vec<MixtureSite>,
    /// `None` where the means are unphysical.
    pub states: Vec<Option<CanonicalState>>,
    pub flagged: Vec<(usize, ThermoError)>,
}

impl QProjection {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty()
    }

    /// Mixture coordinates of the projected state (unphysical sites give `None`).
    pub fn mixtures(&self, phi: &[f64], params: &ModelParams) -> Vec<Option<MixtureSite>> {
        self.states
            .iter()
            .zip(phi)
            .map(|(s, &p)| s.as_ref().map(|s| canonical_to_mixture(s, p, params).expect("valid canonical site")))
            .collect()
    }
}

/// The thermalising map: the exponential state with the given `(N, E, w)` at every site.
pub fn thermalize_q(means: &[MixtureSite], phi: &[f64], params: &ModelParams) -> QProjection {
    let mut states = Vec::with_capacity(means.len());
    let mut flagged = Vec::new();
    for (i, (mix, &p)) in means.iter().zip(phi).enumerate() {
        match mixture_to_canonical(mix, p, params) {
            Ok(s) => states.push(Some(s)),
            Err(e) => {
                states.push(None);
                flagged.push((i, e));
            }
        }
    }
    QProjection {
        means: means.to_vec(),
        states,
        flagged,
    }
}

/// Replace the momentum of every occupied site whose projected state is known.
pub(crate) fn resample_momenta<R: Rng + ?Sized>(
    config: &mut Configuration,
    states: &[Option<CanonicalState>],
    params: &ModelParams,
    sampling: MomentumSampling,
    rng: &mut R,
) {
    for (site, state) in config.sites.iter_mut().zip(states) {
        if let (SiteState::Particle(k), Some(CanonicalState::Thermal(c))) = (site, state) {
            *k = sample_momentum(c, params, sampling, rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn projection_matches_moments() {
        let p = ModelParams::argon();
        let theta = 300.0;
        let means: Vec<MixtureSite> = (1..20)
            .map(|i| {
                let n = 0.01 * i as f64;
                let u = [50.0 * i as f64, -10.0, 3.0];
                let kin = 0.5 * p.mass * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
                MixtureSite {
                    n,
                    energy: n * (1e-14 + 1.5 * p.boltzmann * theta + kin),
                    momentum: u.map(|x| p.mass * n * x),
                }
            })
            .collect();
        let phi = vec![1e-14; means.len()];
        let q = thermalize_q(&means, &phi, &p);
        assert!(q.is_clean());
        for (a, b) in means.iter().zip(q.mixtures(&phi, &p)) {
            let b = b.unwrap();
            assert!((a.n - b.n).abs() <= 1e-12 * a.n);
            assert!((a.energy - b.energy).abs() <= 1e-12 * a.energy);
            for i in 0..3 {
                assert!((a.momentum[i] - b.momentum[i]).abs() <= 1e-12 * a.momentum[i].abs());
            }
        }
    }

    #[test]
    fn unphysical_sites_are_flagged() {
        let p = ModelParams::argon();
        let means = [
            MixtureSite {
                n: 0.5,
                energy: -1.0,
                momentum: [0.0; 3],
            },
            MixtureSite::VACUUM,
        ];
        let q = thermalize_q(&means, &[0.0, 0.0], &p);
        assert_eq!(q.flagged.len(), 1);
        assert_eq!(q.flagged[0].0, 0);
        assert_eq!(q.states[1], Some(CanonicalState::Vacuum));
    }

    #[test]
    fn grid_sampling_lands_on_grid() {
        let p = ModelParams::argon();
        let site = CanonicalSite {
            xi: 0.0,
            beta: p.beta(300.0),
            zeta: [0.0; 3],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let k = sample_momentum(&site, &p, MomentumSampling::EpsilonGrid, &mut rng);
            for c in k {
                let q = c / p.momentum_quantum;
                assert!((q - q.round()).abs() < 1e-9);
            }
        }
    }
}
