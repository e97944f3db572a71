//! Single-site exponential states and the maps between their two charts.
//!
//! A site either holds no particle or one particle with momentum `k`. The
//! exponential (grand canonical) state at a site is fixed by the canonical
//! coordinates `(xi, beta, zeta)`; the mixture coordinates are the means
//! `(N, E, w)` of occupation, energy and momentum. Momentum sums over the
//! `eps`-grid are replaced by Gaussian integrals throughout, which makes
//! both directions of the Legendre map available in closed form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boltzmann constant in erg/K.
pub const BOLTZMANN_CGS: f64 = 1.380_649e-16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("{name} must be strictly positive, got {value:e}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value:e}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("partition function overflows: log(Xi - 1) = {exponent:e}")]
    Overflow { exponent: f64 },
    #[error("unphysical state: {reason} (N = {n:e}, thermal energy = {thermal:e})")]
    Unphysical {
        reason: &'static str,
        n: f64,
        thermal: f64,
    },
}

/// Physical constants of the model, c.g.s. units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Molecular mass `m` (g).
    pub mass: f64,
    /// Lattice spacing `a` (cm).
    pub spacing: f64,
    /// Momentum quantum `eps` (g·cm/s).
    pub momentum_quantum: f64,
    /// `k_B` (erg/K).
    pub boltzmann: f64,
    /// Reference temperature `Theta_0` (K).
    pub reference_temperature: f64,
    /// Momentum cutoff in units of the thermal spread `sqrt(m k_B Theta)`.
    pub cutoff_sigmas: f64,
    /// Keep `u·u/2` inside the energy per unit mass `e`.
    pub keep_kinetic_in_e: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::argon()
    }
}

impl ModelParams {
    pub fn argon() -> Self {
        Self {
            mass: 6.63e-23,
            spacing: 1e-8,
            momentum_quantum: 6.6e-19,
            boltzmann: BOLTZMANN_CGS,
            reference_temperature: 300.0,
            cutoff_sigmas: 8.0,
            keep_kinetic_in_e: false,
        }
    }

    pub fn validate(&self) -> Result<(), ThermoError> {
        let checks = [
            ("mass", self.mass),
            ("spacing", self.spacing),
            ("momentum_quantum", self.momentum_quantum),
            ("boltzmann", self.boltzmann),
            ("reference_temperature", self.reference_temperature),
            ("cutoff_sigmas", self.cutoff_sigmas),
        ];
        for (name, value) in checks {
            if !value.is_finite() {
                return Err(ThermoError::NonFinite { name, value });
            }
            if value <= 0.0 {
                return Err(ThermoError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// Close-packed density `m / a³`.
    pub fn rho_max(&self) -> f64 {
        self.mass / self.spacing.powi(3)
    }

    /// `c = sqrt(k_B Theta_0 / m)`.
    pub fn sound_speed(&self) -> f64 {
        (self.boltzmann * self.reference_temperature / self.mass).sqrt()
    }

    /// Transport constant `lambda = a rho_max c / sqrt(2 pi Theta_0)`.
    pub fn lambda(&self) -> f64 {
        self.spacing * self.rho_max() * self.sound_speed()
            / (2.0 * PI * self.reference_temperature).sqrt()
    }

    /// `lambda` for a fixed hop length `ell` and local density `rho`:
    /// `ell c rho / sqrt(2 pi Theta_0)`. Equals [`Self::lambda`] when `ell rho = a rho_max`.
    pub fn lambda_local(&self, ell: f64, rho: f64) -> f64 {
        ell * self.sound_speed() * rho / (2.0 * PI * self.reference_temperature).sqrt()
    }

    pub fn beta(&self, theta: f64) -> f64 {
        1.0 / (self.boltzmann * theta)
    }

    pub fn temperature(&self, beta: f64) -> f64 {
        1.0 / (self.boltzmann * beta)
    }

    /// Thermal momentum spread `sqrt(m k_B Theta)`.
    pub fn thermal_momentum(&self, theta: f64) -> f64 {
        (self.mass * self.boltzmann * theta).sqrt()
    }

    /// Per-component cutoff `K` for a field whose hottest site is at `theta_max`.
    pub fn momentum_cutoff(&self, theta_max: f64) -> f64 {
        self.cutoff_sigmas * self.thermal_momentum(theta_max)
    }
}

/// Canonical coordinates of one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSite {
    pub xi: f64,
    /// Inverse temperature, 1/erg.
    pub beta: f64,
    /// Conjugate to momentum, s/(g·cm).
    pub zeta: [f64; 3],
}

/// Canonical chart value of a site; empty sites have no canonical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CanonicalState {
    Vacuum,
    Thermal(CanonicalSite),
}

impl CanonicalState {
    pub fn site(&self) -> Option<&CanonicalSite> {
        match self {
            CanonicalState::Vacuum => None,
            CanonicalState::Thermal(s) => Some(s),
        }
    }
}

/// Mixture coordinates of one site.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MixtureSite {
    /// Mean occupation, in `[0, 1)`.
    pub n: f64,
    /// Mean energy (erg), potential energy included.
    pub energy: f64,
    /// Mean momentum (g·cm/s).
    pub momentum: [f64; 3],
}

impl MixtureSite {
    pub const VACUUM: MixtureSite = MixtureSite {
        n: 0.0,
        energy: 0.0,
        momentum: [0.0; 3],
    };

    /// Thermal part `E - N Phi - |w|²/(2 m N)` of the energy.
    pub fn thermal_energy(&self, phi: f64, params: &ModelParams) -> f64 {
        if self.n <= 0.0 {
            return 0.0;
        }
        let w2 = dot(&self.momentum, &self.momentum);
        self.energy - self.n * phi - w2 / (2.0 * params.mass * self.n)
    }

    pub fn velocity(&self, params: &ModelParams) -> [f64; 3] {
        if self.n <= 0.0 {
            return [0.0; 3];
        }
        self.momentum.map(|w| w / (params.mass * self.n))
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_beta(beta: f64) -> Result<(), ThermoError> {
    if !beta.is_finite() {
        return Err(ThermoError::NonFinite {
            name: "beta",
            value: beta,
        });
    }
    if beta <= 0.0 {
        return Err(ThermoError::NonPositive {
            name: "beta",
            value: beta,
        });
    }
    Ok(())
}

/// `log Z_i` for one momentum axis.
pub fn log_partition_single_axis(
    beta: f64,
    zeta_i: f64,
    params: &ModelParams,
) -> Result<f64, ThermoError> {
    check_beta(beta)?;
    let m = params.mass;
    Ok(-params.momentum_quantum.ln()
        + 0.5 * (2.0 * m * PI / beta).ln()
        + m * zeta_i * zeta_i / (2.0 * beta))
}

/// `Z_i = eps⁻¹ (2 m pi / beta)^{1/2} exp(m zeta_i² / (2 beta))`.
pub fn partition_single_axis(
    beta: f64,
    zeta_i: f64,
    params: &ModelParams,
) -> Result<f64, ThermoError> {
    let log_z = log_partition_single_axis(beta, zeta_i, params)?;
    let z = log_z.exp();
    if !z.is_finite() {
        return Err(ThermoError::Overflow { exponent: log_z });
    }
    Ok(z)
}

/// Exponent `s = -xi - beta Phi + sum_i log Z_i`, so that `Xi = 1 + e^s`.
pub fn occupation_exponent(
    site: &CanonicalSite,
    phi: f64,
    params: &ModelParams,
) -> Result<f64, ThermoError> {
    let mut s = -site.xi - site.beta * phi;
    for z in site.zeta {
        s += log_partition_single_axis(site.beta, z, params)?;
    }
    if s.is_nan() {
        return Err(ThermoError::NonFinite {
            name: "occupation exponent",
            value: s,
        });
    }
    Ok(s)
}

fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log Xi`, evaluated without overflow.
pub fn log_grand_partition(
    site: &CanonicalSite,
    phi: f64,
    params: &ModelParams,
) -> Result<f64, ThermoError> {
    Ok(softplus(occupation_exponent(site, phi, params)?))
}

/// `Xi = 1 + exp(-xi - beta Phi) Z_1 Z_2 Z_3`.
///
/// Fails with [`ThermoError::Overflow`] when `Xi` is not representable; use
/// [`log_grand_partition`] in that regime.
pub fn grand_partition(
    site: &CanonicalSite,
    phi: f64,
    params: &ModelParams,
) -> Result<f64, ThermoError> {
    let s = occupation_exponent(site, phi, params)?;
    let e = s.exp();
    if !e.is_finite() {
        return Err(ThermoError::Overflow { exponent: s });
    }
    Ok(1.0 + e)
}

/// Legendre map from canonical to mixture coordinates.
pub fn canonical_to_mixture(
    state: &CanonicalState,
    phi: f64,
    params: &ModelParams,
) -> Result<MixtureSite, ThermoError> {
    let site = match state {
        CanonicalState::Vacuum => return Ok(MixtureSite::VACUUM),
        CanonicalState::Thermal(s) => s,
    };
    let n = logistic(occupation_exponent(site, phi, params)?);
    let m = params.mass;
    let beta = site.beta;
    let zeta2 = dot(&site.zeta, &site.zeta);
    // -d s/d beta = Phi + 3/(2 beta) + m |zeta|² / (2 beta²)
    let energy = n * (phi + 1.5 / beta + m * zeta2 / (2.0 * beta * beta));
    let momentum = site.zeta.map(|z| -n * m * z / beta);
    Ok(MixtureSite {
        n,
        energy,
        momentum,
    })
}

/// Inverse Legendre map. `N = 0` maps to [`CanonicalState::Vacuum`].
pub fn mixture_to_canonical(
    site: &MixtureSite,
    phi: f64,
    params: &ModelParams,
) -> Result<CanonicalState, ThermoError> {
    let n = site.n;
    if !(n.is_finite() && site.energy.is_finite() && site.momentum.iter().all(|w| w.is_finite())) {
        return Err(ThermoError::NonFinite {
            name: "mixture coordinates",
            value: n,
        });
    }
    if n == 0.0 {
        return Ok(CanonicalState::Vacuum);
    }
    if !(0.0..1.0).contains(&n) {
        return Err(ThermoError::Unphysical {
            reason: "occupation outside [0, 1)",
            n,
            thermal: site.thermal_energy(phi, params),
        });
    }
    let thermal = site.thermal_energy(phi, params);
    if thermal <= 0.0 {
        return Err(ThermoError::Unphysical {
            reason: "non-positive thermal energy",
            n,
            thermal,
        });
    }
    let beta = 1.5 * n / thermal;
    let u = site.velocity(params);
    let zeta = u.map(|ui| -beta * ui);
    let mut xi = -beta * phi - (n / (1.0 - n)).ln();
    for z in zeta {
        xi += log_partition_single_axis(beta, z, params)?;
    }
    Ok(CanonicalState::Thermal(CanonicalSite { xi, beta, zeta }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyUnits {
    /// `sum_x (xi N + beta E + zeta·w + log Xi)`, dimensionless.
    Natural,
    /// The same sum times `k_B` (erg/K), matching `-k_B sum p log p`.
    Boltzmann,
}

/// Entropy of one site in natural units.
pub fn site_entropy(
    state: &CanonicalState,
    mix: &MixtureSite,
    phi: f64,
    params: &ModelParams,
) -> Result<f64, ThermoError> {
    match state {
        CanonicalState::Vacuum => Ok(0.0),
        CanonicalState::Thermal(s) => Ok(s.xi * mix.n
            + s.beta * mix.energy
            + dot(&s.zeta, &mix.momentum)
            + log_grand_partition(s, phi, params)?),
    }
}

/// Entropy of a product state.
pub fn entropy(
    states: &[CanonicalState],
    mixtures: &[MixtureSite],
    phi: &[f64],
    params: &ModelParams,
    units: EntropyUnits,
) -> Result<f64, ThermoError> {
    assert_eq!(states.len(), mixtures.len());
    assert_eq!(states.len(), phi.len());
    let mut total = 0.0;
    for ((s, mix), &p) in states.iter().zip(mixtures).zip(phi) {
        total += site_entropy(s, mix, p, params)?;
    }
    Ok(match units {
        EntropyUnits::Natural => total,
        EntropyUnits::Boltzmann => params.boltzmann * total,
    })
}

/// The two pressure expressions of a site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pressure {
    /// `a⁻³ k_B Theta log Xi`.
    pub log_xi: f64,
    /// Perfect-gas form `N k_B Theta / a³`.
    pub ideal: f64,
}

pub fn pressure(
    site: &MixtureSite,
    theta: f64,
    xi_value: f64,
    params: &ModelParams,
) -> Result<Pressure, ThermoError> {
    if xi_value < 1.0 {
        return Err(ThermoError::Unphysical {
            reason: "grand partition function below 1",
            n: site.n,
            thermal: xi_value,
        });
    }
    let a3 = params.spacing.powi(3);
    let kt = params.boltzmann * theta;
    Ok(Pressure {
        log_xi: kt * xi_value.ln() / a3,
        ideal: site.n * kt / a3,
    })
}

/// Continuum fields of one cell or site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydroSite {
    /// Mass density (g/cm³).
    pub rho: f64,
    /// Energy per unit mass (erg/g).
    pub e: f64,
    /// Velocity (cm/s).
    pub u: [f64; 3],
    /// Temperature (K).
    pub theta: f64,
    /// Pressure (erg/cm³).
    pub pressure: f64,
}

impl HydroSite {
    pub const VACUUM: HydroSite = HydroSite {
        rho: 0.0,
        e: 0.0,
        u: [0.0; 3],
        theta: 0.0,
        pressure: 0.0,
    };

    /// Build a site from `(rho, u, Theta)`; `e` and `P` follow from the closures.
    pub fn from_primitives(
        rho: f64,
        u: [f64; 3],
        theta: f64,
        phi: f64,
        params: &ModelParams,
    ) -> Self {
        let m = params.mass;
        let mut e = phi / m + 1.5 * params.boltzmann * theta / m;
        if params.keep_kinetic_in_e {
            e += 0.5 * dot(&u, &u);
        }
        HydroSite {
            rho,
            e,
            u,
            theta,
            pressure: rho * params.boltzmann * theta / m,
        }
    }

    /// Macroscopic fields of a site from its mixture coordinates.
    pub fn from_mixture(
        site: &MixtureSite,
        phi: f64,
        params: &ModelParams,
    ) -> Result<Self, ThermoError> {
        if site.n == 0.0 {
            return Ok(HydroSite::VACUUM);
        }
        let mut thermal = site.thermal_energy(phi, params);
        // Rounding in E - N Phi - |w|²/(2mN) for a cold site.
        if thermal < 0.0 && thermal > -1e-12 * site.energy.abs() {
            thermal = 0.0;
        }
        if thermal < 0.0 {
            return Err(ThermoError::Unphysical {
                reason: "negative thermal energy",
                n: site.n,
                thermal,
            });
        }
        let theta = thermal / (1.5 * site.n * params.boltzmann);
        let rho = params.mass * site.n / params.spacing.powi(3);
        Ok(Self::from_primitives(
            rho,
            site.velocity(params),
            theta,
            phi,
            params,
        ))
    }

    /// `P - rho k_B Theta / m`; zero by construction.
    pub fn closure_residual(&self, params: &ModelParams) -> f64 {
        self.pressure - self.rho * params.boltzmann * self.theta / params.mass
    }
}
