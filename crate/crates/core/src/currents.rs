//! Pointwise continuum fluxes.
//!
//! Every function takes the local fields, the gradients of the primitive
//! variables `(rho, Theta, u)` and `grad Phi`; gradients of compound
//! quantities such as `Theta^{1/2} rho` are formed here by the chain rule.
//! The grid layer decides where those gradients come from.

use thiserror::Error;

use crate::thermo::{HydroSite, ModelParams};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurrentError {
    #[error("density {rho:e} below floor {floor:e}")]
    BelowFloor { rho: f64, floor: f64 },
    #[error("temperature must be positive, got {0:e}")]
    NonPositiveTemperature(f64),
}

/// Gradients of the primitive fields at the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gradients {
    pub rho: Vec3,
    pub theta: Vec3,
    /// `u[i][j] = ∂_i u_j`.
    pub u: Mat3,
}

/// Transport coefficient `lambda` at the evaluation point, and the density floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    pub lambda: f64,
    pub rho_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MassCurrentParts {
    pub advective: Vec3,
    /// Smoluchowski drift `J_S = -lambda grad Phi / (k_B Theta^{1/2})`.
    pub drift: Vec3,
    /// `J_d = -(lambda/rho) grad(Theta^{1/2} rho)`.
    pub diffusive: Vec3,
    /// `-lambda Theta^{1/2} grad log rho`.
    pub fick: Vec3,
    /// `-lambda grad Theta / (2 Theta^{1/2})`.
    pub soret: Vec3,
}

impl MassCurrentParts {
    pub fn total(&self) -> Vec3 {
        std::array::from_fn(|i| self.advective[i] + self.diffusive[i] + self.drift[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyCurrentParts {
    /// `u (rho e + P)`.
    pub advective: Vec3,
    /// `(J_d + J_S) phi`.
    pub potential_drift: Vec3,
    /// `2 J_S P / rho`.
    pub pressure_drift: Vec3,
    /// `-2 (lambda/rho) grad(P Theta^{1/2})`.
    pub diffusive: Vec3,
}

impl EnergyCurrentParts {
    pub fn total(&self) -> Vec3 {
        std::array::from_fn(|i| {
            self.advective[i] + self.diffusive[i] + self.potential_drift[i] + self.pressure_drift[i]
        })
    }
}

/// Momentum flux `Pi[i][j]`: flux of momentum component `j` through a face normal to `i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentumFluxTensor {
    /// `rho u_i u_j`.
    pub advective: Mat3,
    pub pressure: f64,
    /// `J_S,i u_j`.
    pub drift: Mat3,
    /// `-(2 lambda / (5 rho)) [3 ∂_i(rho Theta^{1/2} u_j) + ∂_j(rho Theta^{1/2} u_i)]`.
    pub viscous: Mat3,
}

impl MomentumFluxTensor {
    pub fn total(&self) -> Mat3 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let p = if i == j { self.pressure } else { 0.0 };
                self.advective[i][j] + p + self.viscous[i][j] + self.drift[i][j]
            })
        })
    }
}

fn check(site: &HydroSite, tr: &Transport) -> Result<(), CurrentError> {
    if !(site.rho >= tr.rho_floor) {
        return Err(CurrentError::BelowFloor {
            rho: site.rho,
            floor: tr.rho_floor,
        });
    }
    if !(site.theta > 0.0) {
        return Err(CurrentError::NonPositiveTemperature(site.theta));
    }
    Ok(())
}

/// `grad(Theta^{1/2} rho)`.
fn grad_sqrt_theta_rho(site: &HydroSite, g: &Gradients) -> Vec3 {
    let st = site.theta.sqrt();
    std::array::from_fn(|i| st * g.rho[i] + site.rho * g.theta[i] / (2.0 * st))
}

fn drift_current(site: &HydroSite, grad_phi: Vec3, tr: &Transport, params: &ModelParams) -> Vec3 {
    let c = tr.lambda / (params.boltzmann * site.theta.sqrt());
    grad_phi.map(|g| -c * g)
}

fn mass_parts(site: &HydroSite, g: &Gradients, tr: &Transport) -> MassCurrentParts {
    let st = site.theta.sqrt();
    let gs = grad_sqrt_theta_rho(site, g);
    MassCurrentParts {
        advective: site.u.map(|u| site.rho * u),
        drift: [0.0; 3],
        diffusive: gs.map(|x| -tr.lambda / site.rho * x),
        fick: g.rho.map(|x| -tr.lambda * st * x / site.rho),
        soret: g.theta.map(|x| -tr.lambda * x / (2.0 * st)),
    }
}

pub fn mass_current(
    site: &HydroSite,
    grads: &Gradients,
    grad_phi: Vec3,
    tr: &Transport,
    params: &ModelParams,
) -> Result<MassCurrentParts, CurrentError> {
    check(site, tr)?;
    Ok(MassCurrentParts {
        drift: drift_current(site, grad_phi, tr, params),
        ..mass_parts(site, grads, tr)
    })
}

/// Mass current of the system without an external field.
pub fn mass_current_field_free(
    site: &HydroSite,
    grads: &Gradients,
    tr: &Transport,
) -> Result<MassCurrentParts, CurrentError> {
    check(site, tr)?;
    Ok(mass_parts(site, grads, tr))
}

fn energy_base(site: &HydroSite, g: &Gradients, tr: &Transport, params: &ModelParams) -> EnergyCurrentParts {
    let st = site.theta.sqrt();
    let kb_m = params.boltzmann / params.mass;
    // P Theta^{1/2} = (k_B/m) rho Theta^{3/2}
    let grad_p_st: Vec3 = std::array::from_fn(|i| {
        kb_m * (site.theta * st * g.rho[i] + 1.5 * site.rho * st * g.theta[i])
    });
    let h = site.rho * site.e + site.pressure;
    EnergyCurrentParts {
        advective: site.u.map(|u| u * h),
        potential_drift: [0.0; 3],
        pressure_drift: [0.0; 3],
        diffusive: grad_p_st.map(|x| -2.0 * tr.lambda / site.rho * x),
    }
}

/// Energy flux. `phi` is `Phi/m` at the evaluation point.
pub fn energy_current(
    site: &HydroSite,
    grads: &Gradients,
    grad_phi: Vec3,
    phi: f64,
    tr: &Transport,
    params: &ModelParams,
) -> Result<EnergyCurrentParts, CurrentError> {
    check(site, tr)?;
    let js = drift_current(site, grad_phi, tr, params);
    let jd = mass_parts(site, grads, tr).diffusive;
    let p_over_rho = site.pressure / site.rho;
    Ok(EnergyCurrentParts {
        potential_drift: std::array::from_fn(|i| (jd[i] + js[i]) * phi),
        pressure_drift: js.map(|j| 2.0 * j * p_over_rho),
        ..energy_base(site, grads, tr, params)
    })
}

pub fn energy_current_field_free(
    site: &HydroSite,
    grads: &Gradients,
    tr: &Transport,
    params: &ModelParams,
) -> Result<EnergyCurrentParts, CurrentError> {
    check(site, tr)?;
    Ok(energy_base(site, grads, tr, params))
}

fn momentum_base(site: &HydroSite, g: &Gradients, tr: &Transport) -> MomentumFluxTensor {
    let st = site.theta.sqrt();
    // ∂_i(rho Theta^{1/2} u_j) = u_j ∂_i(rho Theta^{1/2}) + rho Theta^{1/2} ∂_i u_j
    let gs = grad_sqrt_theta_rho(site, g);
    let q = site.rho * st;
    let d: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| site.u[j] * gs[i] + q * g.u[i][j]));
    let c = 2.0 * tr.lambda / (5.0 * site.rho);
    MomentumFluxTensor {
        advective: std::array::from_fn(|i| std::array::from_fn(|j| site.rho * site.u[i] * site.u[j])),
        pressure: site.pressure,
        drift: [[0.0; 3]; 3],
        viscous: std::array::from_fn(|i| std::array::from_fn(|j| -c * (3.0 * d[i][j] + d[j][i]))),
    }
}

pub fn momentum_flux(
    site: &HydroSite,
    grads: &Gradients,
    grad_phi: Vec3,
    tr: &Transport,
    params: &ModelParams,
) -> Result<MomentumFluxTensor, CurrentError> {
    check(site, tr)?;
    let js = drift_current(site, grad_phi, tr, params);
    Ok(MomentumFluxTensor {
        drift: std::array::from_fn(|i| std::array::from_fn(|j| js[i] * site.u[j])),
        ..momentum_base(site, grads, tr)
    })
}

pub fn momentum_flux_field_free(
    site: &HydroSite,
    grads: &Gradients,
    tr: &Transport,
) -> Result<MomentumFluxTensor, CurrentError> {
    check(site, tr)?;
    Ok(momentum_base(site, grads, tr))
}

/// `rho f` with `f = -grad Phi / m`.
pub fn body_force_density(site: &HydroSite, grad_phi: Vec3, params: &ModelParams) -> Vec3 {
    grad_phi.map(|g| -site.rho * g / params.mass)
}
