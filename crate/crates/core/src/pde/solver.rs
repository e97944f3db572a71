use serde::{Deserialize, Serialize};

use super::rhs::{cell_potential, lambda_at, rhs, Rhs};
use super::state::{recover_all, HydroState};
use super::{Grid, PdeError};
use crate::potential::Potential;
use crate::thermo::{HydroSite, ModelParams};

/// How `lambda` is evaluated at a face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// One value for the whole run (g/(cm·s·K^{1/2})).
    Constant(f64),
    /// `ell c rho / sqrt(2 pi Theta_0)` with the face density and a fixed hop length `ell` (cm).
    LocalDensity { hop_length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxScheme {
    #[default]
    Central,
    /// Donor-cell values for the advective parts, central for the rest.
    UpwindAdvective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    Euler,
    /// Heun's two-stage method.
    #[default]
    Rk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Fraction of the stability limit used when `dt` is not fixed; also the
    /// largest admissible fraction for a fixed `dt`.
    pub cfl: f64,
    /// Fixed time step (s).
    pub dt: Option<f64>,
    pub lambda: LambdaMode,
    pub flux: FluxScheme,
    pub time_scheme: TimeScheme,
    pub rho_floor: f64,
}

impl SolverConfig {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            cfl: 0.5,
            dt: None,
            lambda: LambdaMode::Constant(params.lambda()),
            flux: FluxScheme::Central,
            time_scheme: TimeScheme::Rk2,
            rho_floor: 1e-12 * params.rho_max(),
        }
    }

    pub fn validate(&self) -> Result<(), PdeError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(PdeError::Config(format!("cfl must be in (0, 1], got {}", self.cfl)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(PdeError::Config(format!("dt must be positive, got {dt:e}")));
            }
        }
        if !(self.rho_floor > 0.0) {
            return Err(PdeError::Config(format!("rho_floor must be positive, got {:e}", self.rho_floor)));
        }
        let ok = match self.lambda {
            LambdaMode::Constant(l) => l > 0.0 && l.is_finite(),
            LambdaMode::LocalDensity { hop_length } => hop_length > 0.0 && hop_length.is_finite(),
        };
        if !ok {
            return Err(PdeError::Config(format!("invalid lambda mode {:?}", self.lambda)));
        }
        Ok(())
    }
}

/// `min(h / v_max, h² / (2 d D_max))` with `v_max = |u| + (5 k_B Theta/(3m))^{1/2}`
/// plus the drift speed, and `D_max = 2 lambda Theta^{1/2} / rho`.
pub fn cfl_limit(
    grid: &Grid,
    sites: &[HydroSite],
    potential: &Potential,
    t: f64,
    config: &SolverConfig,
    params: &ModelParams,
) -> f64 {
    let h = grid.spacing;
    let mut vmax: f64 = 0.0;
    let mut dmax: f64 = 0.0;
    for (i, s) in sites.iter().enumerate() {
        let lambda = lambda_at(&config.lambda, s.rho, params);
        let x = grid.center(i);
        let mut gp2 = 0.0;
        for ax in 0..grid.dims {
            let (mut xp, mut xm) = (x, x);
            xp[ax] += h;
            xm[ax] -= h;
            let g = (potential.value(xp, t) - potential.value(xm, t)) / (2.0 * h);
            gp2 += g * g;
        }
        let st = s.theta.sqrt();
        let u = (s.u[0] * s.u[0] + s.u[1] * s.u[1] + s.u[2] * s.u[2]).sqrt();
        let sound = (5.0 * params.boltzmann * s.theta / (3.0 * params.mass)).sqrt();
        let drift = if st > 0.0 {
            lambda * gp2.sqrt() / (params.boltzmann * st * s.rho)
        } else {
            0.0
        };
        vmax = vmax.max(u + sound + drift);
        dmax = dmax.max(2.0 * lambda * st / s.rho);
    }
    let adv = if vmax > 0.0 { h / vmax } else { f64::INFINITY };
    let diff = if dmax > 0.0 {
        h * h / (2.0 * grid.dims as f64 * dmax)
    } else {
        f64::INFINITY
    };
    adv.min(diff)
}

/// Outcome of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Time-integrated body force over the step (sum over cells, times volume).
    pub body_impulse: [f64; 3],
    pub wall_impulse: [f64; 3],
    /// `dt * sum |rho f| * volume`, a scale for the impulse balance.
    pub impulse_scale: f64,
}

fn axpy(state: &HydroState, dt: f64, k: &Rhs) -> HydroState {
    HydroState {
        rho: state.rho.iter().zip(&k.rho).map(|(a, b)| a + dt * b).collect(),
        rho_e: state.rho_e.iter().zip(&k.rho_e).map(|(a, b)| a + dt * b).collect(),
        momentum: state
            .momentum
            .iter()
            .zip(&k.momentum)
            .map(|(a, b)| std::array::from_fn(|c| a[c] + dt * b[c]))
            .collect(),
    }
}

fn force_scale(k: &Rhs, sites_rho: &[f64], grid: &Grid, potential: &Potential, t: f64, params: &ModelParams) -> f64 {
    let h = grid.spacing;
    let mut s = k.wall_force.iter().map(|x| x.abs()).sum::<f64>();
    for (i, rho) in sites_rho.iter().enumerate() {
        let x = grid.center(i);
        for ax in 0..grid.dims {
            let (mut xp, mut xm) = (x, x);
            xp[ax] += h;
            xm[ax] -= h;
            let g = (potential.value(xp, t) - potential.value(xm, t)) / (2.0 * h);
            s += (rho * g / params.mass).abs() * grid.cell_volume();
        }
    }
    s
}

/// One explicit step from time `t`. A fixed `dt` above `cfl` times the
/// stability limit is rejected before anything is computed; otherwise
/// `dt = cfl * limit`, shortened to `max_dt` if given.
pub fn step(
    grid: &Grid,
    state: &HydroState,
    potential: &Potential,
    t: f64,
    config: &SolverConfig,
    params: &ModelParams,
    max_dt: Option<f64>,
) -> Result<(HydroState, StepReport), PdeError> {
    config.validate()?;
    state.check_size(grid)?;
    let phi = cell_potential(grid, potential, t);
    let sites = recover_all(state, &phi, params, config.rho_floor)?;
    let limit = cfl_limit(grid, &sites, potential, t, config, params);
    let mut dt = match config.dt {
        Some(dt) => {
            if dt > config.cfl * limit {
                return Err(PdeError::Cfl {
                    dt,
                    limit: config.cfl * limit,
                });
            }
            dt
        }
        None => config.cfl * limit,
    };
    if let Some(m) = max_dt {
        dt = dt.min(m);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PdeError::Config(format!("no finite time step available (limit {limit:e})")));
    }
    let k1 = rhs(grid, state, potential, t, config, params)?;
    let s1 = axpy(state, dt, &k1);
    let scale1 = force_scale(&k1, &state.rho, grid, potential, t, params);
    match config.time_scheme {
        TimeScheme::Euler => Ok((
            s1,
            StepReport {
                dt,
                body_impulse: k1.body_force.map(|f| f * dt),
                wall_impulse: k1.wall_force.map(|f| f * dt),
                impulse_scale: scale1 * dt,
            },
        )),
        TimeScheme::Rk2 => {
            let k2 = rhs(grid, &s1, potential, t + dt, config, params)?;
            let scale2 = force_scale(&k2, &s1.rho, grid, potential, t + dt, params);
            let half = 0.5 * dt;
            let next = HydroState {
                rho: (0..state.len()).map(|i| state.rho[i] + half * (k1.rho[i] + k2.rho[i])).collect(),
                rho_e: (0..state.len())
                    .map(|i| state.rho_e[i] + half * (k1.rho_e[i] + k2.rho_e[i]))
                    .collect(),
                momentum: (0..state.len())
                    .map(|i| {
                        std::array::from_fn(|c| state.momentum[i][c] + half * (k1.momentum[i][c] + k2.momentum[i][c]))
                    })
                    .collect(),
            };
            Ok((
                next,
                StepReport {
                    dt,
                    body_impulse: std::array::from_fn(|c| half * (k1.body_force[c] + k2.body_force[c])),
                    wall_impulse: std::array::from_fn(|c| half * (k1.wall_force[c] + k2.wall_force[c])),
                    impulse_scale: half * (scale1 + scale2),
                },
            ))
        }
    }
}

/// Running totals for the conservation checks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Ledger {
    pub mass0: f64,
    pub energy0: f64,
    pub momentum0: [f64; 3],
    pub body_impulse: [f64; 3],
    pub wall_impulse: [f64; 3],
    pub impulse_scale: f64,
    /// `sum |rho u| * volume` at the start.
    pub momentum_scale0: f64,
}

/// Relative drifts reported by [`Ledger::check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// `|Δ(sum rho u) - impulse|` over the momentum and impulse scales.
    pub momentum_residual: f64,
}

impl Ledger {
    pub fn open(grid: &Grid, state: &HydroState) -> Self {
        let (m, e, p) = state.totals(grid);
        let scale: f64 = state
            .momentum
            .iter()
            .map(|w| w.iter().map(|x| x.abs()).sum::<f64>())
            .sum::<f64>()
            * grid.cell_volume();
        Self {
            mass0: m,
            energy0: e,
            momentum0: p,
            momentum_scale0: scale,
            ..Default::default()
        }
    }

    pub fn record(&mut self, r: &StepReport) {
        for c in 0..3 {
            self.body_impulse[c] += r.body_impulse[c];
            self.wall_impulse[c] += r.wall_impulse[c];
        }
        self.impulse_scale += r.impulse_scale;
    }

    pub fn check(&self, grid: &Grid, state: &HydroState) -> LedgerReport {
        let (m, e, p) = state.totals(grid);
        let rel = |now: f64, then: f64| {
            if then == 0.0 {
                now.abs()
            } else {
                ((now - then) / then).abs()
            }
        };
        let scale = (self.impulse_scale + self.momentum_scale0).max(f64::MIN_POSITIVE);
        let resid = (0..3)
            .map(|c| (p[c] - self.momentum0[c] - self.body_impulse[c] - self.wall_impulse[c]).abs())
            .fold(0.0, f64::max);
        LedgerReport {
            mass_drift: rel(m, self.mass0),
            energy_drift: rel(e, self.energy0),
            momentum_residual: resid / scale,
        }
    }
}

/// A solver run: grid, physics and the evolving state with its ledger.
#[derive(Debug, Clone)]
pub struct Solver {
    pub grid: Grid,
    pub params: ModelParams,
    pub potential: Potential,
    pub config: SolverConfig,
    pub state: HydroState,
    pub time: f64,
    pub steps: u64,
    pub ledger: Ledger,
}

impl Solver {
    pub fn new(
        grid: Grid,
        params: ModelParams,
        potential: Potential,
        config: SolverConfig,
        initial: &[HydroSite],
    ) -> Result<Self, PdeError> {
        config.validate()?;
        if initial.len() != grid.len() {
            return Err(PdeError::FieldSize {
                expected: grid.len(),
                got: initial.len(),
            });
        }
        let state = HydroState::from_sites(initial);
        let ledger = Ledger::open(&grid, &state);
        Ok(Self {
            grid,
            params,
            potential,
            config,
            state,
            time: 0.0,
            steps: 0,
            ledger,
        })
    }

    pub fn step(&mut self) -> Result<StepReport, PdeError> {
        self.step_capped(None)
    }

    fn step_capped(&mut self, max_dt: Option<f64>) -> Result<StepReport, PdeError> {
        let (next, report) = step(
            &self.grid,
            &self.state,
            &self.potential,
            self.time,
            &self.config,
            &self.params,
            max_dt,
        )?;
        self.state = next;
        self.time += report.dt;
        self.steps += 1;
        self.ledger.record(&report);
        Ok(report)
    }

    /// Step until `t_end`, shortening the last step to land on it.
    pub fn run_until(&mut self, t_end: f64) -> Result<(), PdeError> {
        while self.time < t_end {
            let remaining = t_end - self.time;
            self.step_capped(Some(remaining))?;
            if t_end - self.time <= 1e-12 * t_end {
                self.time = t_end;
            }
        }
        Ok(())
    }

    pub fn sites(&self) -> Result<Vec<HydroSite>, PdeError> {
        let phi = cell_potential(&self.grid, &self.potential, self.time);
        recover_all(&self.state, &phi, &self.params, self.config.rho_floor)
    }

    pub fn ledger_report(&self) -> LedgerReport {
        self.ledger.check(&self.grid, &self.state)
    }
}
