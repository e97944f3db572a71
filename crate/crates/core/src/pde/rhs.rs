use rayon::prelude::*;

use super::solver::{FluxScheme, LambdaMode, SolverConfig};
use super::state::{recover_all, HydroState};
use super::{Grid, PdeError};
use crate::currents::{
    body_force_density, energy_current, energy_current_field_free, mass_current, mass_current_field_free,
    momentum_flux, momentum_flux_field_free, Gradients, Mat3, Transport, Vec3,
};
use crate::potential::Potential;
use crate::thermo::{HydroSite, ModelParams};

/// Time derivatives of the conserved densities.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    pub rho: Vec<f64>,
    pub rho_e: Vec<f64>,
    pub momentum: Vec<[f64; 3]>,
    /// `sum rho f` times the cell volume.
    pub body_force: [f64; 3],
    /// Net force of the reflecting walls, times the cell volume.
    pub wall_force: [f64; 3],
}

impl Rhs {
    fn zeros(n: usize) -> Self {
        Self {
            rho: vec![0.0; n],
            rho_e: vec![0.0; n],
            momentum: vec![[0.0; 3]; n],
            body_force: [0.0; 3],
            wall_force: [0.0; 3],
        }
    }
}

/// Cell-centred gradients, used for the face-tangential components in 2D and 3D.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CellGrad {
    rho: Vec3,
    theta: Vec3,
    u: Mat3,
    phi: Vec3,
}

pub(crate) fn cell_gradients(grid: &Grid, sites: &[HydroSite], phi: &[f64]) -> Vec<CellGrad> {
    let h = grid.spacing;
    (0..grid.len())
        .map(|i| {
            let mut g = CellGrad::default();
            for ax in 0..grid.dims {
                let lo = grid.neighbor(i, ax, -1);
                let hi = grid.neighbor(i, ax, 1);
                let d = |f: &dyn Fn(usize) -> f64| match (lo, hi) {
                    (Some(l), Some(r)) => (f(r) - f(l)) / (2.0 * h),
                    (None, Some(r)) => (f(r) - f(i)) / h,
                    (Some(l), None) => (f(i) - f(l)) / h,
                    (None, None) => 0.0,
                };
                g.rho[ax] = d(&|k| sites[k].rho);
                g.theta[ax] = d(&|k| sites[k].theta);
                g.phi[ax] = d(&|k| phi[k]);
                for j in 0..3 {
                    g.u[ax][j] = d(&|k| sites[k].u[j]);
                }
            }
            g
        })
        .collect()
}

/// Everything the pointwise currents need at one face.
pub(crate) struct FacePoint {
    pub site: HydroSite,
    pub grads: Gradients,
    pub grad_phi: Vec3,
    /// `Phi/m` at the face.
    pub phi_over_m: f64,
    pub transport: Transport,
}

pub(crate) fn lambda_at(mode: &LambdaMode, rho: f64, params: &ModelParams) -> f64 {
    match *mode {
        LambdaMode::Constant(l) => l,
        LambdaMode::LocalDensity { hop_length } => params.lambda_local(hop_length, rho),
    }
}

/// Face between `l` and its `+axis` neighbour `r`: arithmetic means of the
/// primitives, normal derivatives by the two-point difference, tangential
/// ones by averaging the cell gradients.
#[allow(clippy::too_many_arguments)]
pub(crate) fn face_point(
    grid: &Grid,
    params: &ModelParams,
    config: &SolverConfig,
    axis: usize,
    left: &HydroSite,
    right: &HydroSite,
    phi_l: f64,
    phi_r: f64,
    cg: Option<(&CellGrad, &CellGrad)>,
) -> FacePoint {
    let h = grid.spacing;
    let rho = 0.5 * (left.rho + right.rho);
    let theta = 0.5 * (left.theta + right.theta);
    let u: Vec3 = std::array::from_fn(|j| 0.5 * (left.u[j] + right.u[j]));
    let phi = 0.5 * (phi_l + phi_r);
    let site = HydroSite::from_primitives(rho, u, theta, phi, params);
    let mut grads = Gradients::default();
    let mut grad_phi = [0.0; 3];
    grads.rho[axis] = (right.rho - left.rho) / h;
    grads.theta[axis] = (right.theta - left.theta) / h;
    for j in 0..3 {
        grads.u[axis][j] = (right.u[j] - left.u[j]) / h;
    }
    grad_phi[axis] = (phi_r - phi_l) / h;
    if let Some((gl, gr)) = cg {
        for ax in (0..grid.dims).filter(|&ax| ax != axis) {
            grads.rho[ax] = 0.5 * (gl.rho[ax] + gr.rho[ax]);
            grads.theta[ax] = 0.5 * (gl.theta[ax] + gr.theta[ax]);
            grad_phi[ax] = 0.5 * (gl.phi[ax] + gr.phi[ax]);
            for j in 0..3 {
                grads.u[ax][j] = 0.5 * (gl.u[ax][j] + gr.u[ax][j]);
            }
        }
    }
    FacePoint {
        site,
        grads,
        grad_phi,
        phi_over_m: phi / params.mass,
        transport: Transport {
            lambda: lambda_at(&config.lambda, rho, params),
            rho_floor: config.rho_floor,
        },
    }
}

#[derive(Debug, Clone, Copy)]
struct FaceFlux {
    mass: f64,
    energy: f64,
    momentum: [f64; 3],
}

#[derive(Clone, Copy, PartialEq)]
enum Physics {
    Full,
    FieldFree,
}

fn face_flux(
    fp: &FacePoint,
    axis: usize,
    left: &HydroSite,
    right: &HydroSite,
    config: &SolverConfig,
    params: &ModelParams,
    physics: Physics,
) -> Result<FaceFlux, crate::currents::CurrentError> {
    let (mut mass, mut energy, mut mom) = match physics {
        Physics::Full => (
            mass_current(&fp.site, &fp.grads, fp.grad_phi, &fp.transport, params)?,
            energy_current(&fp.site, &fp.grads, fp.grad_phi, fp.phi_over_m, &fp.transport, params)?,
            momentum_flux(&fp.site, &fp.grads, fp.grad_phi, &fp.transport, params)?,
        ),
        Physics::FieldFree => (
            mass_current_field_free(&fp.site, &fp.grads, &fp.transport)?,
            energy_current_field_free(&fp.site, &fp.grads, &fp.transport, params)?,
            momentum_flux_field_free(&fp.site, &fp.grads, &fp.transport)?,
        ),
    };
    if config.flux == FluxScheme::UpwindAdvective {
        let up = if fp.site.u[axis] > 0.0 { left } else { right };
        let un = up.u[axis];
        mass.advective[axis] = up.rho * un;
        energy.advective[axis] = un * (up.rho * up.e + up.pressure);
        for j in 0..3 {
            mom.advective[axis][j] = up.rho * un * up.u[j];
        }
    }
    let pi = mom.total();
    Ok(FaceFlux {
        mass: mass.total()[axis],
        energy: energy.total()[axis],
        momentum: pi[axis],
    })
}

pub(crate) fn cell_potential(grid: &Grid, potential: &Potential, t: f64) -> Vec<f64> {
    (0..grid.len()).map(|i| potential.value(grid.center(i), t)).collect()
}

fn assemble(
    grid: &Grid,
    state: &HydroState,
    potential: &Potential,
    t: f64,
    config: &SolverConfig,
    params: &ModelParams,
    physics: Physics,
) -> Result<Rhs, PdeError> {
    state.check_size(grid)?;
    let n = grid.len();
    let h = grid.spacing;
    let vol = grid.cell_volume();
    let phi = match physics {
        Physics::Full => cell_potential(grid, potential, t),
        Physics::FieldFree => vec![0.0; n],
    };
    let sites = recover_all(state, &phi, params, config.rho_floor)?;
    let cg = (grid.dims > 1).then(|| cell_gradients(grid, &sites, &phi));

    let fluxes: Vec<Option<Result<FaceFlux, PdeError>>> = (0..n * grid.dims)
        .into_par_iter()
        .map(|f| {
            let (i, axis) = (f % n, f / n);
            let j = grid.neighbor(i, axis, 1)?;
            let g = cg.as_ref().map(|c| (&c[i], &c[j]));
            let fp = face_point(grid, params, config, axis, &sites[i], &sites[j], phi[i], phi[j], g);
            Some(
                face_flux(&fp, axis, &sites[i], &sites[j], config, params, physics).map_err(|source| {
                    PdeError::Current {
                        cell: i,
                        axis,
                        source,
                    }
                }),
            )
        })
        .collect();

    let mut out = Rhs::zeros(n);
    for (f, flux) in fluxes.into_iter().enumerate() {
        let Some(flux) = flux else { continue };
        let flux = flux?;
        let (i, axis) = (f % n, f / n);
        let j = grid.neighbor(i, axis, 1).expect("face exists");
        out.rho[i] -= flux.mass / h;
        out.rho[j] += flux.mass / h;
        out.rho_e[i] -= flux.energy / h;
        out.rho_e[j] += flux.energy / h;
        for c in 0..3 {
            out.momentum[i][c] -= flux.momentum[c] / h;
            out.momentum[j][c] += flux.momentum[c] / h;
        }
    }

    if grid.boundary == super::GridBoundary::Reflecting {
        for (i, s) in sites.iter().enumerate() {
            for axis in 0..grid.dims {
                if grid.neighbor(i, axis, -1).is_none() {
                    out.momentum[i][axis] += s.pressure / h;
                    out.wall_force[axis] += s.pressure / h * vol;
                }
                if grid.neighbor(i, axis, 1).is_none() {
                    out.momentum[i][axis] -= s.pressure / h;
                    out.wall_force[axis] -= s.pressure / h * vol;
                }
            }
        }
    }

    if physics == Physics::Full {
        for (i, s) in sites.iter().enumerate() {
            let x = grid.center(i);
            let mut gp = [0.0; 3];
            for (ax, g) in gp.iter_mut().enumerate().take(grid.dims) {
                let mut xp = x;
                let mut xm = x;
                xp[ax] += h;
                xm[ax] -= h;
                *g = (potential.value(xp, t) - potential.value(xm, t)) / (2.0 * h);
            }
            let f = body_force_density(s, gp, params);
            for c in 0..3 {
                out.momentum[i][c] += f[c];
                out.body_force[c] += f[c] * vol;
            }
        }
    }
    Ok(out)
}

/// Time derivative of the conserved densities at time `t`.
pub fn rhs(
    grid: &Grid,
    state: &HydroState,
    potential: &Potential,
    t: f64,
    config: &SolverConfig,
    params: &ModelParams,
) -> Result<Rhs, PdeError> {
    assemble(grid, state, potential, t, config, params, Physics::Full)
}

/// The same system without an external field, assembled from the field-free currents.
pub fn rhs_field_free(
    grid: &Grid,
    state: &HydroState,
    config: &SolverConfig,
    params: &ModelParams,
) -> Result<Rhs, PdeError> {
    assemble(grid, state, &Potential::Zero, 0.0, config, params, Physics::FieldFree)
}
