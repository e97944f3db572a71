use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{Configuration, Lattice, SiteState};
use super::rates::mean_free_path;
use super::step::{step_t_unchecked, HopField, StepPolicy, StepStats};
use super::thermalize::{resample_momenta, sample_configuration, sample_momentum, thermalize_q, MomentumSampling};
use super::MicroError;
use crate::thermo::{CanonicalSite, CanonicalState, MixtureSite, ModelParams};

/// Hop length used by the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopLength {
    /// Fixed number of lattice sites.
    Fixed(u32),
    /// `ell/a = round(rho_max/rho)` from the ensemble-mean occupation of each
    /// site, capped at half the lattice extent along the shortest active axis.
    DensityDependent,
}

/// What happens to the momenta after each hopping step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Thermalization {
    /// Pure hopping.
    #[default]
    None,
    /// Project the ensemble-mean `(N, E, w)` of every site onto the
    /// exponential family and redraw each occupied site's momentum from it.
    Conserving,
    /// Redraw momenta from a bath at rest at temperature `theta` (K).
    Isothermal { theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub lattice: Lattice,
    /// Static potential per site (erg).
    pub phi: Vec<f64>,
    pub hop_length: HopLength,
    pub policy: StepPolicy,
    pub thermalization: Thermalization,
    pub sampling: MomentumSampling,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnsembleStats {
    pub steps: u64,
    pub time: f64,
    /// Hop statistics summed over members and steps.
    pub hops: StepStats,
    /// Site-steps where the projection was skipped because the means were unphysical.
    pub flagged_sites: u64,
}

/// Independent trajectories advanced in lock step.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub config: EnsembleConfig,
    pub members: Vec<Configuration>,
    pub stats: EnsembleStats,
}

const PHASE_STEP: u64 = 0;
const PHASE_THERMALIZE: u64 = 1;
const PHASE_INIT: u64 = 2;

/// Stream `member` of the master seed, positioned at a block reserved for `(step, phase)`.
fn member_rng(seed: u64, member: usize, step: u64, phase: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng.set_word_pos(((4 * step + phase) as u128) << 38);
    rng
}

impl Ensemble {
    /// Draw `size` members from the product state `initial`.
    pub fn new(
        config: EnsembleConfig,
        initial: &[CanonicalState],
        size: usize,
        params: &ModelParams,
    ) -> Result<Self, MicroError> {
        let n = config.lattice.len();
        if initial.len() != n {
            return Err(MicroError::FieldSize {
                expected: n,
                got: initial.len(),
            });
        }
        if size == 0 {
            return Err(MicroError::Policy("ensemble size must be at least 1".into()));
        }
        if let Thermalization::Isothermal { theta } = config.thermalization {
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(MicroError::Policy(format!("bath temperature must be positive, got {theta:e}")));
            }
        }
        let field = HopField::new(&config.lattice, config.phi.clone(), vec![1; n])?;
        config.policy.validate(&config.lattice, &field, params)?;
        let members = (0..size)
            .into_par_iter()
            .map(|i| {
                let mut rng = member_rng(config.seed, i, 0, PHASE_INIT);
                sample_configuration(initial, &config.phi, params, config.sampling, &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            config,
            members,
            stats: EnsembleStats::default(),
        })
    }

    pub fn from_members(config: EnsembleConfig, members: Vec<Configuration>) -> Result<Self, MicroError> {
        let n = config.lattice.len();
        if let Some(c) = members.iter().find(|c| c.sites.len() != n) {
            return Err(MicroError::FieldSize {
                expected: n,
                got: c.sites.len(),
            });
        }
        Ok(Self {
            config,
            members,
            stats: EnsembleStats::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Per-site means of occupation, energy and momentum over the members.
    pub fn site_means(&self, params: &ModelParams) -> Vec<MixtureSite> {
        let n = self.config.lattice.len();
        let m = self.members.len() as f64;
        let mass = params.mass;
        let mut out = vec![MixtureSite::VACUUM; n];
        for c in &self.members {
            for (i, s) in c.sites.iter().enumerate() {
                if let SiteState::Particle(k) = s {
                    let o = &mut out[i];
                    o.n += 1.0;
                    o.energy += (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) / (2.0 * mass) + self.config.phi[i];
                    for ax in 0..3 {
                        o.momentum[ax] += k[ax];
                    }
                }
            }
        }
        for o in &mut out {
            o.n /= m;
            o.energy /= m;
            for w in &mut o.momentum {
                *w /= m;
            }
        }
        out
    }

    fn hop_field(&self, params: &ModelParams) -> Result<HopField, MicroError> {
        let lat = &self.config.lattice;
        let hop_sites = match self.config.hop_length {
            HopLength::Fixed(h) => vec![h; lat.len()],
            HopLength::DensityDependent => {
                let cap = (0..lat.dims).map(|ax| lat.counts[ax] / 2).min().unwrap_or(1).max(1);
                let a3 = params.spacing.powi(3);
                let mut occ = vec![0usize; lat.len()];
                for c in &self.members {
                    for (i, s) in c.sites.iter().enumerate() {
                        occ[i] += s.is_occupied() as usize;
                    }
                }
                occ.iter()
                    .map(|&o| {
                        if o == 0 {
                            return cap as u32;
                        }
                        let rho = params.mass * o as f64 / (self.members.len() as f64 * a3);
                        let h = (mean_free_path(rho, params) / params.spacing).round() as usize;
                        h.clamp(1, cap) as u32
                    })
                    .collect()
            }
        };
        HopField::new(lat, self.config.phi.clone(), hop_sites)
    }

    /// Advance every member by `steps` steps of `T`, each followed by the
    /// configured thermalisation.
    pub fn advance(&mut self, steps: u64, params: &ModelParams) -> Result<EnsembleStats, MicroError> {
        let mut run = EnsembleStats::default();
        let fixed_field = match self.config.hop_length {
            HopLength::Fixed(_) => {
                let f = self.hop_field(params)?;
                self.config.policy.validate(&self.config.lattice, &f, params)?;
                Some(f)
            }
            HopLength::DensityDependent => None,
        };
        for _ in 0..steps {
            let local;
            let field = match &fixed_field {
                Some(f) => f,
                None => {
                    local = self.hop_field(params)?;
                    self.config.policy.validate(&self.config.lattice, &local, params)?;
                    &local
                }
            };
            let step = self.stats.steps;
            let cfg = &self.config;
            let per_member: Vec<StepStats> = self
                .members
                .par_iter_mut()
                .enumerate()
                .map(|(i, c)| {
                    let mut rng = member_rng(cfg.seed, i, step, PHASE_STEP);
                    step_t_unchecked(c, &cfg.lattice, field, &cfg.policy, params, &mut rng)
                })
                .collect();
            for s in &per_member {
                run.hops.accumulate(s);
            }
            run.flagged_sites += self.thermalize(step, params) as u64;
            run.steps += 1;
            run.time += self.config.policy.dt;
            self.stats.steps += 1;
        }
        self.stats.time += run.time;
        self.stats.hops.accumulate(&run.hops);
        self.stats.flagged_sites += run.flagged_sites;
        Ok(run)
    }

    fn thermalize(&mut self, step: u64, params: &ModelParams) -> usize {
        let cfg = &self.config;
        match cfg.thermalization {
            Thermalization::None => 0,
            Thermalization::Conserving => {
                let means = self.site_means(params);
                let q = thermalize_q(&means, &cfg.phi, params);
                self.members.par_iter_mut().enumerate().for_each(|(i, c)| {
                    let mut rng = member_rng(cfg.seed, i, step, PHASE_THERMALIZE);
                    resample_momenta(c, &q.states, params, cfg.sampling, &mut rng);
                });
                q.flagged.len()
            }
            Thermalization::Isothermal { theta } => {
                let bath = CanonicalSite {
                    xi: 0.0,
                    beta: params.beta(theta),
                    zeta: [0.0; 3],
                };
                self.members.par_iter_mut().enumerate().for_each(|(i, c)| {
                    let mut rng = member_rng(cfg.seed, i, step, PHASE_THERMALIZE);
                    for s in &mut c.sites {
                        if let SiteState::Particle(k) = s {
                            *k = sample_momentum(&bath, params, cfg.sampling, &mut rng);
                        }
                    }
                });
                0
            }
        }
    }

    /// Mean over members of the total particle number, energy and momentum.
    pub fn totals(&self, params: &ModelParams) -> (f64, f64, [f64; 3]) {
        let m = self.members.len() as f64;
        let mut n = 0.0;
        let mut e = 0.0;
        let mut w = [0.0; 3];
        for c in &self.members {
            n += c.particles() as f64;
            e += c.energy(&self.config.phi, params.mass);
            let p = c.momentum();
            for ax in 0..3 {
                w[ax] += p[ax];
            }
        }
        (n / m, e / m, w.map(|x| x / m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microsim::LatticeBoundary;
    use crate::thermo::{canonical_to_mixture, mixture_to_canonical};

    fn setup(thermalization: Thermalization, seed: u64) -> (ModelParams, EnsembleConfig, Vec<CanonicalState>) {
        let p = ModelParams::argon();
        let n = 32;
        let lattice = Lattice::new(&[n], LatticeBoundary::Periodic).unwrap();
        let phi: Vec<f64> = (0..n)
            .map(|i| 2e-15 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
            .collect();
        let field = HopField::new(&lattice, phi.clone(), vec![1; n]).unwrap();
        let policy = StepPolicy::automatic(&lattice, &field, &p, 300.0, false).unwrap();
        let states = phi
            .iter()
            .map(|&f| {
                let mix = MixtureSite {
                    n: 0.3,
                    energy: 0.3 * (f + 1.5 * p.boltzmann * 300.0),
                    momentum: [0.0; 3],
                };
                mixture_to_canonical(&mix, f, &p).unwrap()
            })
            .collect();
        let cfg = EnsembleConfig {
            lattice,
            phi,
            hop_length: HopLength::Fixed(1),
            policy,
            thermalization,
            sampling: MomentumSampling::Continuum,
            seed,
        };
        (p, cfg, states)
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let (p, cfg, states) = setup(Thermalization::Conserving, 9);
        let mut a = Ensemble::new(cfg.clone(), &states, 8, &p).unwrap();
        let mut b = Ensemble::new(cfg, &states, 8, &p).unwrap();
        a.advance(20, &p).unwrap();
        b.advance(10, &p).unwrap();
        b.advance(10, &p).unwrap();
        assert_eq!(a.members, b.members);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn pure_hopping_conserves_particles_and_energy() {
        let (p, cfg, states) = setup(Thermalization::None, 3);
        let mut e = Ensemble::new(cfg, &states, 16, &p).unwrap();
        let before: Vec<(usize, f64)> = e
            .members
            .iter()
            .map(|c| (c.particles(), c.energy(&e.config.phi, p.mass)))
            .collect();
        let s = e.advance(50, &p).unwrap();
        assert!(s.hops.hops > 0);
        for (c, (n0, e0)) in e.members.iter().zip(before) {
            assert_eq!(c.particles(), n0);
            assert!((c.energy(&e.config.phi, p.mass) - e0).abs() <= 1e-12 * e0.abs());
        }
    }

    #[test]
    fn conserving_projection_keeps_site_means_close() {
        let (p, cfg, states) = setup(Thermalization::Conserving, 4);
        let mut e = Ensemble::new(cfg, &states, 400, &p).unwrap();
        let (n0, _, _) = e.totals(&p);
        e.advance(5, &p).unwrap();
        let (n1, _, _) = e.totals(&p);
        assert_eq!(n0, n1);
        assert_eq!(e.stats.flagged_sites, 0);
        let expected = canonical_to_mixture(&states[0], e.config.phi[0], &p).unwrap();
        let means = e.site_means(&p);
        let avg_n = means.iter().map(|m| m.n).sum::<f64>() / means.len() as f64;
        assert!((avg_n - expected.n).abs() < 0.02);
    }

    #[test]
    fn density_dependent_hops_are_capped() {
        let (p, mut cfg, states) = setup(Thermalization::None, 5);
        cfg.hop_length = HopLength::DensityDependent;
        let e = Ensemble::new(cfg, &states, 4, &p).unwrap();
        let f = e.hop_field(&p).unwrap();
        assert!(f.hop_sites.iter().all(|&h| (1..=16).contains(&h)));
    }
}
