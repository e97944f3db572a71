use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::lattice::{Configuration, Lattice, SiteState};
use super::rates::hop_outcome;
use super::step::HopField;
use super::MicroError;
use crate::thermo::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GillespieStats {
    /// Attempted hops, including blocked ones.
    pub events: u64,
    pub hops: u64,
    /// Attempts onto an occupied site (hard core, no move).
    pub blocked: u64,
    /// Simulated time reached (s).
    pub time: f64,
    pub mismatch: [f64; 3],
}

/// Exact continuous-time simulation of the hopping chain up to `t_end`.
///
/// Every occupied site has one channel per active axis with the rate of the
/// hop selected by the sign of its momentum. Hops onto occupied sites are
/// blocked. This is the event-driven oracle for the synchronous step and is
/// `O(sites)` per event, so it is meant for small lattices.
pub fn gillespie_run<R: Rng + ?Sized>(
    config: &mut Configuration,
    lattice: &Lattice,
    field: &HopField,
    cutoff: f64,
    t_end: f64,
    params: &ModelParams,
    rng: &mut R,
) -> Result<GillespieStats, MicroError> {
    if config.sites.len() != lattice.len() {
        return Err(MicroError::FieldSize {
            expected: lattice.len(),
            got: config.sites.len(),
        });
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(MicroError::Policy(format!("t_end must be finite and non-negative, got {t_end:e}")));
    }
    let m = params.mass;
    let mut stats = GillespieStats::default();
    let mut channels: Vec<(usize, usize, usize, f64, f64)> = Vec::new();
    loop {
        channels.clear();
        let mut total = 0.0;
        for (i, s) in config.sites.iter().enumerate() {
            let SiteState::Particle(k) = s else { continue };
            let hop = field.hop_sites[i] as isize;
            let ell = hop as f64 * params.spacing;
            for axis in 0..lattice.dims {
                let ka = k[axis];
                if ka.abs() > cutoff {
                    continue;
                }
                let dir = if ka > 0.0 { 1 } else { -1 };
                let Some(t) = lattice.neighbor(i, axis, dir * hop) else { continue };
                let Some(o) = hop_outcome(ka, field.phi[t] - field.phi[i], ell, m) else { continue };
                total += o.rate;
                channels.push((i, t, axis, o.rate, o.k_after));
            }
        }
        if total <= 0.0 {
            stats.time = t_end;
            return Ok(stats);
        }
        let wait: f64 = Exp1.sample(rng);
        let next = stats.time + wait / total;
        if next > t_end {
            stats.time = t_end;
            return Ok(stats);
        }
        stats.time = next;
        stats.events += 1;
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = channels.len() - 1;
        for (c, ch) in channels.iter().enumerate() {
            acc += ch.3;
            if target < acc {
                pick = c;
                break;
            }
        }
        let (src, dst, axis, _, k_after) = channels[pick];
        if config.sites[dst].is_occupied() {
            stats.blocked += 1;
            continue;
        }
        let SiteState::Particle(mut k) = config.sites[src] else { unreachable!() };
        stats.hops += 1;
        stats.mismatch[axis] += k_after - k[axis];
        k[axis] = k_after;
        config.sites[src] = SiteState::Hole;
        config.sites[dst] = SiteState::Particle(k);
    }
}
