use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::pde::{
    recover_all, rhs, rhs_field_free, smoluchowski_rhs, FluxScheme, Grid, GridBoundary, HydroState, LambdaMode, PdeError,
    SolverConfig,
};
use crate::potential::Potential;
use crate::thermo::{HydroSite, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IdentityResult {
    pub trials: usize,
    /// Trials where every entry agreed exactly.
    pub exact: usize,
    pub max_abs_difference: f64,
}

impl IdentityResult {
    pub fn passed(&self) -> bool {
        self.exact == self.trials
    }

    fn record(&mut self, a: &[f64], b: &[f64]) {
        self.trials += 1;
        let mut same = a.len() == b.len();
        for (x, y) in a.iter().zip(b) {
            if x != y {
                same = false;
                self.max_abs_difference = self.max_abs_difference.max((x - y).abs());
            }
        }
        if same {
            self.exact += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionReport {
    pub seed: u64,
    /// Full system with `Phi = 0` against the field-free system.
    pub zero_field: IdentityResult,
    /// Mass derivative at rest against the Smoluchowski equation.
    pub at_rest: IdentityResult,
    pub passed: bool,
}

/// Sum of a few random Fourier modes with total amplitude `amp`.
fn smooth(rng: &mut ChaCha8Rng, amp: f64) -> impl Fn([f64; 3], [f64; 3]) -> f64 {
    let modes: Vec<([f64; 3], f64, f64)> = (0..3)
        .map(|_| {
            let k = [rng.random_range(0..3) as f64, rng.random_range(0..3) as f64, 0.0];
            (k, rng.random_range(0.0..2.0 * PI), amp / 3.0 * rng.random_range(-1.0..1.0))
        })
        .collect();
    move |x, len| {
        modes
            .iter()
            .map(|(k, ph, a)| {
                let arg: f64 = (0..3).map(|ax| 2.0 * PI * k[ax] * x[ax] / len[ax]).sum();
                a * (arg + ph).sin()
            })
            .sum()
    }
}

fn random_potential(rng: &mut ChaCha8Rng, len: [f64; 3], kt: f64) -> Potential {
    match rng.random_range(0..3) {
        0 => Potential::Linear {
            gradient: [kt / len[0] * rng.random_range(-1.0..1.0), kt / len[1] * rng.random_range(-1.0..1.0), 0.0],
        },
        1 => Potential::Harmonic {
            center: [0.5 * len[0], 0.5 * len[1], 0.0],
            stiffness: kt / (len[0] * len[0]) * rng.random_range(0.5..4.0),
        },
        _ => Potential::Sinusoidal {
            amplitude: kt * rng.random_range(0.1..2.0),
            wavelength: len[0],
            axis: 0,
        },
    }
}

/// Compare the two reductions on `trials` random smooth states each.
pub fn validate_reductions(trials: usize, seed: u64) -> Result<ReductionReport, PdeError> {
    let params = ModelParams::argon();
    let kt = params.boltzmann * params.reference_temperature;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zero_field = IdentityResult::default();
    let mut at_rest = IdentityResult::default();
    for _ in 0..trials {
        let dims = rng.random_range(1..=2);
        let counts: Vec<usize> = (0..dims).map(|_| rng.random_range(6..=24)).collect();
        let boundary = if rng.random_bool(0.5) {
            GridBoundary::Periodic
        } else {
            GridBoundary::Reflecting
        };
        let grid = Grid::new(&counts, params.spacing, boundary)?;
        let len = std::array::from_fn(|ax| counts.get(ax).map_or(1.0, |&n| n as f64 * params.spacing));
        let mut config = SolverConfig::new(&params);
        if rng.random_bool(0.5) {
            config.lambda = LambdaMode::LocalDensity {
                hop_length: params.spacing * rng.random_range(1..4) as f64,
            };
        }
        if rng.random_bool(0.5) {
            config.flux = FluxScheme::UpwindAdvective;
        }
        let rho0 = params.rho_max() * rng.random_range(0.05..0.4);
        let drho = smooth(&mut rng, 0.3);
        let dtheta = smooth(&mut rng, 0.2);
        let du: Vec<_> = (0..3).map(|_| smooth(&mut rng, 2e4)).collect();
        let centers = grid.centers();
        let rho: Vec<f64> = centers.iter().map(|&x| rho0 * (1.0 + drho(x, len))).collect();
        let theta: Vec<f64> = centers
            .iter()
            .map(|&x| params.reference_temperature * (1.0 + dtheta(x, len)))
            .collect();

        let moving: Vec<HydroSite> = (0..grid.len())
            .map(|i| {
                let u = std::array::from_fn(|c| du[c](centers[i], len));
                HydroSite::from_primitives(rho[i], u, theta[i], 0.0, &params)
            })
            .collect();
        let state = HydroState::from_sites(&moving);
        let t = rng.random_range(0.0..1e-12);
        let full = rhs(&grid, &state, &Potential::Zero, t, &config, &params)?;
        let free = rhs_field_free(&grid, &state, &config, &params)?;
        let flat = |r: &crate::pde::Rhs| {
            let mut v = r.rho.clone();
            v.extend_from_slice(&r.rho_e);
            v.extend(r.momentum.iter().flatten());
            v
        };
        zero_field.record(&flat(&full), &flat(&free));

        let potential = random_potential(&mut rng, len, kt);
        let resting: Vec<HydroSite> = (0..grid.len())
            .map(|i| HydroSite::from_primitives(rho[i], [0.0; 3], theta[i], potential.value(centers[i], t), &params))
            .collect();
        let state = HydroState::from_sites(&resting);
        let full = rhs(&grid, &state, &potential, t, &config, &params)?;
        // The full system sees Theta through e; hand the same values to the reduced one.
        let phi: Vec<f64> = centers.iter().map(|&x| potential.value(x, t)).collect();
        let recovered: Vec<f64> = recover_all(&state, &phi, &params, config.rho_floor)?
            .iter()
            .map(|s| s.theta)
            .collect();
        let mass = smoluchowski_rhs(&grid, &state.rho, &recovered, &potential, t, &config, &params)?;
        at_rest.record(&full.rho, &mass);
    }
    Ok(ReductionReport {
        seed,
        zero_field,
        at_rest,
        passed: zero_field.passed() && at_rest.passed(),
    })
}
