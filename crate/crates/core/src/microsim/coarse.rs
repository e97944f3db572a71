use super::lattice::{Configuration, Lattice, SiteState};
use super::MicroError;
use crate::thermo::{HydroSite, MixtureSite, ModelParams};

/// Cell averages of an ensemble of configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseField {
    pub cell_size: [usize; 3],
    pub counts: [usize; 3],
    /// Centre of each cell (cm).
    pub centers: Vec<[f64; 3]>,
    /// Per-site means `(N, E, w)` over the ensemble and the cell.
    pub mixtures: Vec<MixtureSite>,
    /// Continuum fields; `None` marks a cell no member ever occupied.
    pub cells: Vec<Option<HydroSite>>,
}

impl CoarseField {
    pub fn density(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.map_or(0.0, |h| h.rho)).collect()
    }
}

/// Ensemble and cell averages: `rho = m <N>/a³`, `u = <w>/(m <N>)` and
/// `Theta` from the kinetic energy left after removing `|<w>|²/(2m<N>)`.
pub fn coarse_grain(
    ensemble: &[Configuration],
    lattice: &Lattice,
    cell_size: &[usize],
    phi: &[f64],
    params: &ModelParams,
) -> Result<CoarseField, MicroError> {
    if ensemble.is_empty() {
        return Err(MicroError::Lattice("empty ensemble".into()));
    }
    if phi.len() != lattice.len() {
        return Err(MicroError::FieldSize {
            expected: lattice.len(),
            got: phi.len(),
        });
    }
    let mut cs = [1usize; 3];
    for (i, &c) in cell_size.iter().enumerate().take(3) {
        cs[i] = c;
    }
    let mut counts = [1usize; 3];
    for ax in 0..3 {
        if cs[ax] == 0 || lattice.counts[ax] % cs[ax] != 0 {
            return Err(MicroError::Lattice(format!(
                "cell size {} does not divide {} sites on axis {ax}",
                cs[ax], lattice.counts[ax]
            )));
        }
        counts[ax] = lattice.counts[ax] / cs[ax];
    }
    let ncell: usize = counts.iter().product();
    let cell_of = |i: usize| {
        let c = lattice.coords(i);
        let q = [c[0] / cs[0], c[1] / cs[1], c[2] / cs[2]];
        q[0] + counts[0] * (q[1] + counts[1] * q[2])
    };

    let mut n_sum = vec![0.0; ncell];
    let mut kin_sum = vec![0.0; ncell];
    let mut phi_sum = vec![0.0; ncell];
    let mut w_sum = vec![[0.0; 3]; ncell];
    let m = params.mass;
    for config in ensemble {
        if config.sites.len() != lattice.len() {
            return Err(MicroError::FieldSize {
                expected: lattice.len(),
                got: config.sites.len(),
            });
        }
        for (i, s) in config.sites.iter().enumerate() {
            if let SiteState::Particle(k) = s {
                let c = cell_of(i);
                n_sum[c] += 1.0;
                kin_sum[c] += (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) / (2.0 * m);
                phi_sum[c] += phi[i];
                for ax in 0..3 {
                    w_sum[c][ax] += k[ax];
                }
            }
        }
    }

    let samples = (ensemble.len() * cs.iter().product::<usize>()) as f64;
    let a3 = params.spacing.powi(3);
    let mut centers = Vec::with_capacity(ncell);
    let mut mixtures = Vec::with_capacity(ncell);
    let mut cells = Vec::with_capacity(ncell);
    for c in 0..ncell {
        let q = [c % counts[0], (c / counts[0]) % counts[1], c / (counts[0] * counts[1])];
        centers.push(std::array::from_fn(|ax| (q[ax] as f64 + 0.5) * cs[ax] as f64 * params.spacing));
        let n = n_sum[c] / samples;
        let w = w_sum[c].map(|x| x / samples);
        let kin = kin_sum[c] / samples;
        mixtures.push(MixtureSite {
            n,
            energy: kin + phi_sum[c] / samples,
            momentum: w,
        });
        if n_sum[c] == 0.0 {
            cells.push(None);
            continue;
        }
        let u = w.map(|x| x / (m * n));
        let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        let mut thermal = kin - w2 / (2.0 * m * n);
        if thermal < 0.0 && thermal > -1e-12 * kin {
            thermal = 0.0;
        }
        if thermal < 0.0 {
            return Err(MicroError::Thermo(crate::thermo::ThermoError::Unphysical {
                reason: "negative thermal energy in coarse cell",
                n,
                thermal,
            }));
        }
        let theta = thermal / (1.5 * n * params.boltzmann);
        let phi_mean = phi_sum[c] / n_sum[c];
        cells.push(Some(HydroSite::from_primitives(m * n / a3, u, theta, phi_mean, params)));
    }
    Ok(CoarseField {
        cell_size: cs,
        counts,
        centers,
        mixtures,
        cells,
    })
}
