use super::rhs::{cell_potential, face_point, lambda_at};
use super::solver::{SolverConfig, TimeScheme};
use super::{Grid, PdeError};
use crate::currents::mass_current;
use crate::potential::Potential;
use crate::thermo::{HydroSite, ModelParams};

/// Mass equation at rest: `∂_t rho = -div(J_d + J_S)` with `u = 0`.
///
/// Faces are built by the same routine as in the full system, so for a state
/// at rest with the same temperatures the result equals the full mass
/// derivative exactly.
pub fn smoluchowski_rhs(
    grid: &Grid,
    rho: &[f64],
    theta: &[f64],
    potential: &Potential,
    t: f64,
    config: &SolverConfig,
    params: &ModelParams,
) -> Result<Vec<f64>, PdeError> {
    let n = grid.len();
    for got in [rho.len(), theta.len()] {
        if got != n {
            return Err(PdeError::FieldSize { expected: n, got });
        }
    }
    let h = grid.spacing;
    let phi = cell_potential(grid, potential, t);
    let sites: Vec<HydroSite> = (0..n)
        .map(|i| HydroSite::from_primitives(rho[i], [0.0; 3], theta[i], phi[i], params))
        .collect();
    let cg = (grid.dims > 1).then(|| super::rhs::cell_gradients(grid, &sites, &phi));
    let mut out = vec![0.0; n];
    for f in 0..n * grid.dims {
        let (i, axis) = (f % n, f / n);
        let Some(j) = grid.neighbor(i, axis, 1) else { continue };
        let g = cg.as_ref().map(|c| (&c[i], &c[j]));
        let fp = face_point(grid, params, config, axis, &sites[i], &sites[j], phi[i], phi[j], g);
        let flux = mass_current(&fp.site, &fp.grads, fp.grad_phi, &fp.transport, params)
            .map_err(|source| PdeError::Current {
                cell: i,
                axis,
                source,
            })?
            .total()[axis];
        out[i] -= flux / h;
        out[j] += flux / h;
    }
    Ok(out)
}

/// Integrate the mass equation at rest and uniform temperature `theta` up to `t_end`.
pub fn smoluchowski_reference(
    rho0: &[f64],
    potential: &Potential,
    theta: f64,
    t_end: f64,
    grid: &Grid,
    config: &SolverConfig,
    params: &ModelParams,
) -> Result<Vec<f64>, PdeError> {
    config.validate()?;
    if !(theta > 0.0) {
        return Err(PdeError::Config(format!("temperature must be positive, got {theta:e}")));
    }
    let n = grid.len();
    let thetas = vec![theta; n];
    let h = grid.spacing;
    let mut rho = rho0.to_vec();
    let mut t = 0.0;
    while t < t_end {
        let phi = cell_potential(grid, potential, t);
        let mut vmax: f64 = 0.0;
        let mut dmax: f64 = 0.0;
        for i in 0..n {
            let lambda = lambda_at(&config.lambda, rho[i], params);
            let mut g2 = 0.0;
            for ax in 0..grid.dims {
                if let (Some(l), Some(r)) = (grid.neighbor(i, ax, -1), grid.neighbor(i, ax, 1)) {
                    let g = (phi[r] - phi[l]) / (2.0 * h);
                    g2 += g * g;
                }
            }
            vmax = vmax.max(lambda * g2.sqrt() / (params.boltzmann * theta.sqrt() * rho[i]));
            dmax = dmax.max(lambda * theta.sqrt() / rho[i]);
        }
        let mut limit = h * h / (2.0 * grid.dims as f64 * dmax);
        if vmax > 0.0 {
            limit = limit.min(h / vmax);
        }
        let mut dt = match config.dt {
            Some(dt) if dt > config.cfl * limit => {
                return Err(PdeError::Cfl {
                    dt,
                    limit: config.cfl * limit,
                })
            }
            Some(dt) => dt,
            None => config.cfl * limit,
        };
        dt = dt.min(t_end - t);
        let k1 = smoluchowski_rhs(grid, &rho, &thetas, potential, t, config, params)?;
        let r1: Vec<f64> = rho.iter().zip(&k1).map(|(r, k)| r + dt * k).collect();
        rho = match config.time_scheme {
            TimeScheme::Euler => r1,
            TimeScheme::Rk2 => {
                let k2 = smoluchowski_rhs(grid, &r1, &thetas, potential, t + dt, config, params)?;
                (0..n).map(|i| rho[i] + 0.5 * dt * (k1[i] + k2[i])).collect()
            }
        };
        t += dt;
        if t_end - t <= 1e-12 * t_end {
            t = t_end;
        }
    }
    Ok(rho)
}

/// `sum (k_B Theta/m) rho log rho + rho Phi/m` times the cell volume.
/// Non-increasing along solutions of the mass equation at rest.
pub fn free_energy(grid: &Grid, rho: &[f64], potential: &Potential, theta: f64, params: &ModelParams) -> f64 {
    let phi = cell_potential(grid, potential, 0.0);
    let kt = params.boltzmann * theta / params.mass;
    rho.iter()
        .zip(&phi)
        .map(|(&r, &p)| kt * r * r.ln() + r * p / params.mass)
        .sum::<f64>()
        * grid.cell_volume()
}
