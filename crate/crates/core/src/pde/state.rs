use serde::{Deserialize, Serialize};

use super::{Grid, PdeError};
use crate::thermo::{HydroSite, ModelParams};

/// Conserved densities per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroState {
    pub rho: Vec<f64>,
    pub rho_e: Vec<f64>,
    pub momentum: Vec<[f64; 3]>,
}

impl HydroState {
    pub fn from_sites(sites: &[HydroSite]) -> Self {
        Self {
            rho: sites.iter().map(|s| s.rho).collect(),
            rho_e: sites.iter().map(|s| s.rho * s.e).collect(),
            momentum: sites.iter().map(|s| s.u.map(|u| s.rho * u)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn check_size(&self, grid: &Grid) -> Result<(), PdeError> {
        for got in [self.rho.len(), self.rho_e.len(), self.momentum.len()] {
            if got != grid.len() {
                return Err(PdeError::FieldSize {
                    expected: grid.len(),
                    got,
                });
            }
        }
        Ok(())
    }

    /// `(sum rho, sum rho e, sum rho u)` times the cell volume.
    pub fn totals(&self, grid: &Grid) -> (f64, f64, [f64; 3]) {
        let v = grid.cell_volume();
        let mass: f64 = self.rho.iter().sum();
        let energy: f64 = self.rho_e.iter().sum();
        let mut mom = [0.0; 3];
        for m in &self.momentum {
            for ax in 0..3 {
                mom[ax] += m[ax];
            }
        }
        (mass * v, energy * v, mom.map(|x| x * v))
    }
}

/// Primitive fields of one cell. `phi` is the potential `Phi` (erg) at the cell.
///
/// `Theta = (2m/(3 k_B)) (e - Phi/m)`, after removing `u·u/2` from `e` when
/// the kinetic term is kept.
pub fn primitive_recovery(
    rho: f64,
    rho_e: f64,
    momentum: [f64; 3],
    phi: f64,
    params: &ModelParams,
    rho_floor: f64,
) -> Result<HydroSite, String> {
    if !(rho >= rho_floor) || !rho.is_finite() {
        return Err(format!("density {rho:e} below floor {rho_floor:e}"));
    }
    let u = momentum.map(|w| w / rho);
    let mut internal = rho_e / rho - phi / params.mass;
    if params.keep_kinetic_in_e {
        internal -= 0.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    }
    let theta = 2.0 * params.mass * internal / (3.0 * params.boltzmann);
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(format!("temperature {theta:e} K is negative or not finite"));
    }
    Ok(HydroSite {
        rho,
        e: rho_e / rho,
        u,
        theta,
        pressure: rho * params.boltzmann * theta / params.mass,
    })
}

pub fn recover_all(
    state: &HydroState,
    phi: &[f64],
    params: &ModelParams,
    rho_floor: f64,
) -> Result<Vec<HydroSite>, PdeError> {
    (0..state.len())
        .map(|i| {
            primitive_recovery(state.rho[i], state.rho_e[i], state.momentum[i], phi[i], params, rho_floor)
                .map_err(|reason| PdeError::Recovery { cell: i, reason })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovery_examples() {
        let p = ModelParams::argon();
        let phi = 3e-14;
        let rho = 1e-3;
        let e = phi / p.mass;
        let s = primitive_recovery(rho, rho * e, [0.0; 3], phi, &p, 1e-20).unwrap();
        assert_eq!(s.theta, 0.0);

        let e = phi / p.mass + 1.5 * p.boltzmann * 300.0 / p.mass;
        let s = primitive_recovery(rho, rho * e, [0.0; 3], phi, &p, 1e-20).unwrap();
        assert!((s.theta - 300.0).abs() < 1e-10);

        assert!(primitive_recovery(rho, 0.0, [0.0; 3], phi, &p, 1e-20).is_err());
        assert!(primitive_recovery(1e-30, 1.0, [0.0; 3], 0.0, &p, 1e-20).is_err());
    }

    #[test]
    fn conserved_round_trip() {
        let p = ModelParams::argon();
        let site = HydroSite::from_primitives(2e-3, [120.0, -40.0, 5.0], 280.0, 1e-14, &p);
        let st = HydroState::from_sites(&[site]);
        let back = primitive_recovery(st.rho[0], st.rho_e[0], st.momentum[0], 1e-14, &p, 0.0).unwrap();
        assert!((back.theta - site.theta).abs() <= 1e-14 * site.theta);
        for i in 0..3 {
            assert!((back.u[i] - site.u[i]).abs() <= 1e-14 * site.u[i].abs());
        }
        assert!((back.e - site.e).abs() <= 1e-14 * site.e.abs());
    }
}
