use rand::Rng;

use super::lattice::{Configuration, Lattice, SiteState};
use super::rates::hop_outcome;
use super::MicroError;
use crate::thermo::ModelParams;

/// Per-site data the step needs: potential and hop length in lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct HopField {
    pub phi: Vec<f64>,
    pub hop_sites: Vec<u32>,
}

impl HopField {
    pub fn new(lattice: &Lattice, phi: Vec<f64>, hop_sites: Vec<u32>) -> Result<Self, MicroError> {
        for len in [phi.len(), hop_sites.len()] {
            if len != lattice.len() {
                return Err(MicroError::FieldSize {
                    expected: lattice.len(),
                    got: len,
                });
            }
        }
        if hop_sites.iter().any(|&h| h == 0) {
            return Err(MicroError::Lattice("hop length of zero sites".into()));
        }
        Ok(Self { phi, hop_sites })
    }

    /// Largest total exit rate of any site for per-axis momenta bounded by `cutoff`.
    pub fn max_exit_rate(&self, lattice: &Lattice, cutoff: f64, params: &ModelParams) -> f64 {
        let m = params.mass;
        let mut worst: f64 = 0.0;
        for i in 0..lattice.len() {
            let hop = self.hop_sites[i] as isize;
            let ell = hop as f64 * params.spacing;
            let mut total = 0.0;
            for axis in 0..lattice.dims {
                let mut axis_max: f64 = 0.0;
                for dir in [-1, 1] {
                    if let Some(t) = lattice.neighbor(i, axis, dir * hop) {
                        let drop = (self.phi[i] - self.phi[t]).max(0.0);
                        let r = (cutoff + (cutoff * cutoff + 2.0 * m * drop).sqrt()) / (2.0 * m * ell);
                        axis_max = axis_max.max(r);
                    }
                }
                total += axis_max;
            }
            worst = worst.max(total);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    /// Time step (s).
    pub dt: f64,
    /// Per-component momentum cutoff `K`; components with `|k_i| > K` do not hop.
    pub cutoff: f64,
    /// Require the target site to be empty at the start of the step.
    pub exclusion: bool,
}

impl StepPolicy {
    /// `K = cutoff_sigmas (m k_B theta_max)^{1/2}` and `dt = 0.5 / (max exit rate at K)`.
    pub fn automatic(
        lattice: &Lattice,
        field: &HopField,
        params: &ModelParams,
        theta_max: f64,
        exclusion: bool,
    ) -> Result<Self, MicroError> {
        let cutoff = params.momentum_cutoff(theta_max);
        let rate = field.max_exit_rate(lattice, cutoff, params);
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(MicroError::Policy(format!("max exit rate is {rate:e}")));
        }
        Ok(Self {
            dt: 0.5 / rate,
            cutoff,
            exclusion,
        })
    }

    pub fn validate(&self, lattice: &Lattice, field: &HopField, params: &ModelParams) -> Result<(), MicroError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(MicroError::Policy(format!("dt must be positive, got {:e}", self.dt)));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(MicroError::Policy(format!(
                "cutoff must be positive, got {:e}",
                self.cutoff
            )));
        }
        let product = self.dt * field.max_exit_rate(lattice, self.cutoff, params);
        if product >= 1.0 {
            return Err(MicroError::NotSubStochastic { dt: self.dt, product });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub proposals: u64,
    pub hops: u64,
    /// Proposals dropped by collision resolution.
    pub collisions: u64,
    /// Sum over executed hops of `k_after - k` along the hop axis.
    pub mismatch: [f64; 3],
    /// Hops whose arrival momentum exceeds the cutoff (kept as is, not clamped).
    pub over_cutoff: u64,
}

impl StepStats {
    pub fn accumulate(&mut self, o: &StepStats) {
        self.proposals += o.proposals;
        self.hops += o.hops;
        self.collisions += o.collisions;
        self.over_cutoff += o.over_cutoff;
        for i in 0..3 {
            self.mismatch[i] += o.mismatch[i];
        }
    }
}

struct Proposal {
    source: usize,
    target: usize,
    axis: usize,
    k_after: f64,
    priority: u64,
}

const NONE: u32 = u32::MAX;
const UNKNOWN: u8 = 0;
const PENDING: u8 = 1;
const SUCCESS: u8 = 2;
const FAIL: u8 = 3;

/// One synchronous step of the hopping chain.
///
/// Every occupied site draws one uniform number and picks at most one hop
/// among its active axes with probabilities `rate_i dt`. Conflicts are then
/// resolved: each target goes to the claimant with the highest random
/// priority. With `exclusion` the target must be empty at the start of the
/// step; without it, the target may also be entered when its occupant leaves
/// successfully in the same step (closed chains of such moves all succeed).
pub fn step_t<R: Rng + ?Sized>(
    config: &mut Configuration,
    lattice: &Lattice,
    field: &HopField,
    policy: &StepPolicy,
    params: &ModelParams,
    rng: &mut R,
) -> Result<StepStats, MicroError> {
    if config.sites.len() != lattice.len() {
        return Err(MicroError::FieldSize {
            expected: lattice.len(),
            got: config.sites.len(),
        });
    }
    policy.validate(lattice, field, params)?;
    Ok(step_t_unchecked(config, lattice, field, policy, params, rng))
}

pub(crate) fn step_t_unchecked<R: Rng + ?Sized>(
    config: &mut Configuration,
    lattice: &Lattice,
    field: &HopField,
    policy: &StepPolicy,
    params: &ModelParams,
    rng: &mut R,
) -> StepStats {
    let n = lattice.len();
    let m = params.mass;
    let dt = policy.dt;
    let mut proposals: Vec<Proposal> = Vec::new();
    let mut mover = vec![NONE; n];

    for (i, site) in config.sites.iter().enumerate() {
        let SiteState::Particle(k) = site else { continue };
        let u: f64 = rng.random();
        let hop = field.hop_sites[i] as isize;
        let ell = hop as f64 * params.spacing;
        let mut acc = 0.0;
        for axis in 0..lattice.dims {
            let ka = k[axis];
            if ka.abs() > policy.cutoff {
                continue;
            }
            let dir = if ka > 0.0 { 1 } else { -1 };
            let Some(target) = lattice.neighbor(i, axis, dir * hop) else { continue };
            let Some(out) = hop_outcome(ka, field.phi[target] - field.phi[i], ell, m) else { continue };
            acc += out.rate * dt;
            if u < acc {
                mover[i] = proposals.len() as u32;
                proposals.push(Proposal {
                    source: i,
                    target,
                    axis,
                    k_after: out.k_after,
                    priority: rng.random(),
                });
                break;
            }
        }
    }

    let mut stats = StepStats {
        proposals: proposals.len() as u64,
        ..Default::default()
    };
    if proposals.is_empty() {
        return stats;
    }

    let mut claim = vec![NONE; n];
    for (p, prop) in proposals.iter().enumerate() {
        let c = claim[prop.target];
        if c == NONE || proposals[c as usize].priority < prop.priority {
            claim[prop.target] = p as u32;
        }
    }

    let mut status = vec![UNKNOWN; proposals.len()];
    let mut path = Vec::new();
    for start in 0..proposals.len() {
        if status[start] != UNKNOWN {
            continue;
        }
        path.clear();
        let mut p = start;
        let result = loop {
            match status[p] {
                SUCCESS => break SUCCESS,
                FAIL => break FAIL,
                // Closed chain of moves: every member vacates the next one's target.
                PENDING => break SUCCESS,
                _ => {}
            }
            let t = proposals[p].target;
            if claim[t] != p as u32 {
                status[p] = FAIL;
                break FAIL;
            }
            status[p] = PENDING;
            path.push(p);
            if !config.sites[t].is_occupied() {
                break SUCCESS;
            }
            if policy.exclusion || mover[t] == NONE {
                break FAIL;
            }
            p = mover[t] as usize;
        };
        for &q in &path {
            status[q] = result;
        }
    }

    let mut arrivals = Vec::new();
    for (p, prop) in proposals.iter().enumerate() {
        if status[p] != SUCCESS {
            stats.collisions += 1;
            continue;
        }
        let SiteState::Particle(mut k) = config.sites[prop.source] else {
            unreachable!("proposal from an empty site")
        };
        stats.hops += 1;
        stats.mismatch[prop.axis] += prop.k_after - k[prop.axis];
        if prop.k_after.abs() > policy.cutoff {
            stats.over_cutoff += 1;
        }
        k[prop.axis] = prop.k_after;
        arrivals.push((prop.target, k));
    }
    for (p, prop) in proposals.iter().enumerate() {
        if status[p] == SUCCESS {
            config.sites[prop.source] = SiteState::Hole;
        }
    }
    for (t, k) in arrivals {
        debug_assert!(!config.sites[t].is_occupied());
        config.sites[t] = SiteState::Particle(k);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microsim::lattice::LatticeBoundary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit() -> ModelParams {
        ModelParams {
            mass: 1.0,
            spacing: 1.0,
            momentum_quantum: 1e-3,
            boltzmann: 1.0,
            reference_temperature: 1.0,
            cutoff_sigmas: 8.0,
            keep_kinetic_in_e: false,
        }
    }

    #[test]
    fn dt_violation_is_rejected_before_mutation() {
        let p = unit();
        let l = Lattice::new(&[4], LatticeBoundary::Periodic).unwrap();
        let f = HopField::new(&l, vec![0.0; 4], vec![1; 4]).unwrap();
        let pol = StepPolicy {
            dt: 10.0,
            cutoff: 8.0,
            exclusion: false,
        };
        let mut c = Configuration::empty(4);
        c.sites[0] = SiteState::Particle([1.0, 0.0, 0.0]);
        let before = c.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            step_t(&mut c, &l, &f, &pol, &p, &mut rng),
            Err(MicroError::NotSubStochastic { .. })
        ));
        assert_eq!(c, before);
    }

    #[test]
    fn swap_and_ring_moves_succeed_without_exclusion() {
        let p = unit();
        let l = Lattice::new(&[3], LatticeBoundary::Periodic).unwrap();
        let f = HopField::new(&l, vec![0.0; 3], vec![1; 3]).unwrap();
        // Rate k/(m ell) = 0.9 for k = 0.9; with dt = 1 nearly every particle proposes.
        let pol = StepPolicy {
            dt: 1.0,
            cutoff: 0.95,
            exclusion: false,
        };
        let mut hops = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut c = Configuration {
                sites: vec![SiteState::Particle([0.9, 0.0, 0.0]); 3],
            };
            let s = step_t_unchecked(&mut c, &l, &f, &pol, &p, &mut rng);
            assert_eq!(c.particles(), 3);
            hops += s.hops;
            if s.proposals == 3 {
                assert_eq!(s.hops, 3, "full ring must rotate");
            }
        }
        assert!(hops > 0);
        let pol_ex = StepPolicy { exclusion: true, ..pol };
        let mut c = Configuration {
            sites: vec![SiteState::Particle([0.9, 0.0, 0.0]); 3],
        };
        let s = step_t_unchecked(&mut c, &l, &f, &pol_ex, &p, &mut rng);
        assert_eq!(s.hops, 0);
    }

    #[test]
    fn closed_boundary_blocks_exit() {
        let p = unit();
        let l = Lattice::new(&[2], LatticeBoundary::Closed).unwrap();
        let f = HopField::new(&l, vec![0.0; 2], vec![1; 2]).unwrap();
        let pol = StepPolicy {
            dt: 1.0,
            cutoff: 0.95,
            exclusion: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut c = Configuration::empty(2);
            c.sites[1] = SiteState::Particle([0.9, 0.0, 0.0]);
            let s = step_t_unchecked(&mut c, &l, &f, &pol, &p, &mut rng);
            assert_eq!(s.hops, 0);
        }
    }

    #[test]
    fn hops_conserve_energy_in_a_field() {
        let p = unit();
        let n = 16;
        let l = Lattice::new(&[n], LatticeBoundary::Closed).unwrap();
        let phi: Vec<f64> = (0..n).map(|i| 0.05 * i as f64).collect();
        let f = HopField::new(&l, phi.clone(), vec![1; n]).unwrap();
        let pol = StepPolicy::automatic(&l, &f, &p, 1.0, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut c = Configuration::empty(n);
        for i in (0..n).step_by(2) {
            c.sites[i] = SiteState::Particle([if i % 4 == 0 { 2.0 } else { -1.5 }, 0.3, 0.1]);
        }
        let e0 = c.energy(&phi, p.mass);
        let mut total = StepStats::default();
        for _ in 0..2000 {
            let s = step_t(&mut c, &l, &f, &pol, &p, &mut rng).unwrap();
            total.accumulate(&s);
        }
        assert!(total.hops > 0);
        assert_eq!(c.particles(), n / 2);
        assert!((c.energy(&phi, p.mass) - e0).abs() < 1e-12 * e0.abs());
    }
}
