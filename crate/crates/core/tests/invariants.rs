use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hydrolattice::microsim::{
    coarse_grain, step_t, thermalize_q, Configuration, HopField, Lattice, LatticeBoundary, SiteState, StepPolicy,
};
use hydrolattice::moments::{bound_value, moment_closed, moment_exact, BoundCase, BoundKind, MomentSpec};
use hydrolattice::pde::{Grid, GridBoundary, Solver, SolverConfig};
use hydrolattice::thermo::{canonical_to_mixture, mixture_to_canonical, CanonicalState, HydroSite, MixtureSite};
use hydrolattice::{ModelParams, Potential};

fn unit() -> ModelParams {
    ModelParams {
        mass: 1.0,
        spacing: 1.0,
        momentum_quantum: 1e-3,
        boltzmann: 1.0,
        reference_temperature: 1.0,
        cutoff_sigmas: 6.0,
        keep_kinetic_in_e: false,
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

prop_compose! {
    fn mixture_site()(n in 1e-4f64..0.99, thermal in 0.05f64..20.0, u in prop::array::uniform3(-3.0f64..3.0), phi in -5.0f64..5.0)
        -> (MixtureSite, f64) {
        let momentum = u.map(|ui| n * ui);
        let energy = thermal + n * phi + n * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) / 2.0;
        (MixtureSite { n, energy, momentum }, phi)
    }
}

prop_compose! {
    fn configuration(len: usize)(occ in prop::collection::vec(prop::option::weighted(0.4, prop::array::uniform3(-2.0f64..2.0)), len))
        -> Configuration {
        Configuration {
            sites: occ.into_iter().map(|o| o.map_or(SiteState::Hole, SiteState::Particle)).collect(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mixture_round_trip((mix, phi) in mixture_site()) {
        let p = unit();
        let c = mixture_to_canonical(&mix, phi, &p).unwrap();
        let back = canonical_to_mixture(&c, phi, &p).unwrap();
        prop_assert!(close(back.n, mix.n, 1e-12));
        prop_assert!(close(back.thermal_energy(phi, &p), mix.thermal_energy(phi, &p), 1e-9));
        for i in 0..3 {
            prop_assert!((back.momentum[i] - mix.momentum[i]).abs() <= 1e-12 * (1.0 + mix.momentum[i].abs()));
        }
    }

    #[test]
    fn vacuum_maps_to_vacuum(phi in -5.0f64..5.0) {
        let p = unit();
        prop_assert_eq!(mixture_to_canonical(&MixtureSite::VACUUM, phi, &p).unwrap(), CanonicalState::Vacuum);
    }

    #[test]
    fn q_projection_keeps_means(sites in prop::collection::vec(mixture_site(), 1..12)) {
        let p = unit();
        let (means, phi): (Vec<_>, Vec<_>) = sites.into_iter().unzip();
        let q = thermalize_q(&means, &phi, &p);
        prop_assert!(q.is_clean());
        for (got, want) in q.mixtures(&phi, &p).into_iter().zip(&means) {
            let got = got.unwrap();
            prop_assert!(close(got.n, want.n, 1e-12));
            prop_assert!((got.energy - want.energy).abs() <= 1e-9 * (1.0 + want.energy.abs()));
        }
        prop_assert_eq!(thermalize_q(&q.means, &phi, &p), q);
    }

    #[test]
    fn closed_form_moments_agree_at_rest(n in 0u32..2, beta in 0.1f64..10.0, m in 0.1f64..10.0) {
        let s = MomentSpec::new(n, beta, 0.0, m);
        prop_assert!(close(moment_closed(&s).unwrap(), moment_exact(&s).unwrap(), 1e-8));
    }

    #[test]
    fn bounds_are_finite_and_nonnegative(
        which in prop::sample::select(BoundKind::ALL.to_vec()),
        ell in 1e-6f64..1e-2,
        grad in 0.0f64..3.0,
        beta in 0.3f64..3.0,
        zeta in -0.5f64..0.5,
    ) {
        let v = bound_value(&BoundCase::new(which, ell, grad, beta, zeta, 1.0)).unwrap();
        prop_assert!(v.is_finite() && v >= 0.0, "{which:?}: {v}");
    }

    #[test]
    fn steps_conserve_particles_and_energy(
        config in configuration(24),
        amp in 0.0f64..1.5,
        exclusion in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let p = unit();
        let l = Lattice::new(&[6, 4], LatticeBoundary::Periodic).unwrap();
        let phi: Vec<f64> = (0..l.len()).map(|i| amp * (i as f64 * 0.7).sin()).collect();
        let f = HopField::new(&l, phi.clone(), vec![1; l.len()]).unwrap();
        let pol = StepPolicy::automatic(&l, &f, &p, 1.0, exclusion).unwrap();
        let mut c = config;
        let n0 = c.particles();
        let e0 = c.energy(&phi, p.mass);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..40 {
            step_t(&mut c, &l, &f, &pol, &p, &mut rng).unwrap();
        }
        prop_assert_eq!(c.particles(), n0);
        prop_assert!((c.energy(&phi, p.mass) - e0).abs() <= 1e-10 * (1.0 + e0.abs()));
    }

    #[test]
    fn coarse_graining_keeps_particle_count(config in configuration(24), cell in prop::sample::select(vec![1usize, 2, 3, 6])) {
        let p = unit();
        let l = Lattice::new(&[6, 4], LatticeBoundary::Closed).unwrap();
        let phi = vec![0.0; l.len()];
        let cg = coarse_grain(std::slice::from_ref(&config), &l, &[cell, 2], &phi, &p).unwrap();
        let per_cell = (cell * 2) as f64;
        let total: f64 = cg.mixtures.iter().map(|m| m.n * per_cell).sum();
        prop_assert!((total - config.particles() as f64).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pde_steps_keep_the_ledgers(
        amps in prop::array::uniform4(-1.0f64..1.0),
        field in 0.0f64..1.0,
        closed in any::<bool>(),
    ) {
        let p = ModelParams::argon();
        let n = 48;
        let h = 1e-6;
        let boundary = if closed { GridBoundary::Reflecting } else { GridBoundary::Periodic };
        let grid = Grid::new(&[n], h, boundary).unwrap();
        let length = n as f64 * h;
        let pot = Potential::Sinusoidal {
            amplitude: field * p.boltzmann * 300.0,
            wavelength: length,
            axis: 0,
        };
        let sites: Vec<HydroSite> = (0..n)
            .map(|i| {
                let x = grid.center(i);
                let s = (2.0 * std::f64::consts::PI * x[0] / length).sin();
                let c = (2.0 * std::f64::consts::PI * x[0] / length).cos();
                let u = if closed { 0.0 } else { 50.0 * amps[1] * c };
                HydroSite::from_primitives(
                    0.01 * p.rho_max() * (1.0 + 0.3 * amps[0] * s),
                    [u, 20.0 * amps[2] * s, 0.0],
                    300.0 * (1.0 + 0.1 * amps[3] * c),
                    pot.value(x, 0.0),
                    &p,
                )
            })
            .collect();
        let mut solver = Solver::new(grid, p, pot, SolverConfig::new(&p), &sites).unwrap();
        for _ in 0..50 {
            solver.step().unwrap();
        }
        let r = solver.ledger_report();
        prop_assert!(r.mass_drift <= 1e-12, "mass {:e}", r.mass_drift);
        prop_assert!(r.energy_drift <= 1e-12, "energy {:e}", r.energy_drift);
        prop_assert!(r.momentum_residual <= 1e-10, "momentum {:e}", r.momentum_residual);
    }
}
