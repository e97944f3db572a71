use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::bounds::{bounds_table, BoundRow};
use super::spec::{Equations, ExperimentSpec, LambdaChoice, MicroSpec, Mode, Profile, SnapshotFormat, ThermalizationChoice};
use super::HarnessError;
use crate::microsim::{
    coarse_grain, CoarseField, Ensemble, EnsembleConfig, HopField, HopLength, Lattice, StepPolicy, Thermalization,
};
use crate::moments::{log_grid, BoundKind};
use crate::pde::{
    smoluchowski_reference, write_binary, write_csv, Grid, LambdaMode, Snapshot, Solver, SolverConfig,
};
use crate::thermo::{mixture_to_canonical, CanonicalState, HydroSite, MixtureSite};

/// One assertion made during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroSummary {
    pub ensemble: usize,
    pub steps: u64,
    pub dt: f64,
    pub cutoff: f64,
    pub hops: u64,
    pub collisions: u64,
    pub over_cutoff: u64,
    pub flagged_sites: u64,
    /// Ensemble-mean particle number at the start and end.
    pub particles: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSummary {
    pub equations: Equations,
    pub cells: usize,
    pub steps: Option<u64>,
    pub mass_drift: f64,
    pub energy_drift: Option<f64>,
    pub momentum_residual: Option<f64>,
    /// `|rho(t_end) - rho(0)|_2 / |rho(0)|_2`.
    pub stationarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub ensemble: usize,
    pub l2_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub coarse_cells: usize,
    pub l2_rho: f64,
    pub linf_rho: f64,
    /// Only when temperature is a dynamic field on both sides.
    pub l2_theta: Option<f64>,
    pub linf_theta: Option<f64>,
    /// Density error against nested prefixes of the ensemble.
    pub sweep: Vec<SweepPoint>,
}

/// Structured result of a run. Contains no wall-clock data, so equal specs
/// and seeds give byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub name: String,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub micro: Option<MicroSummary>,
    pub pde: Option<PdeSummary>,
    pub comparison: Option<Comparison>,
    pub bounds: Option<Vec<BoundRow>>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ComparisonReport,
    pub pde_initial: Option<Snapshot>,
    pub pde_final: Option<Snapshot>,
    pub micro_coarse: Option<CoarseField>,
    /// Coarse PDE density on the micro coarse cells, for compare runs.
    pub pde_coarse_rho: Option<Vec<f64>>,
}

fn domain(spec: &ExperimentSpec) -> [f64; 3] {
    let a = spec.params.spacing;
    std::array::from_fn(|ax| spec.geometry.counts.get(ax).map_or(a, |&n| n as f64 * a))
}

/// `(rho, u, Theta)` of the initial profile at `x`.
pub fn initial_primitives(spec: &ExperimentSpec, x: [f64; 3]) -> (f64, [f64; 3], f64) {
    let ic = &spec.initial;
    let len = domain(spec);
    let dims = spec.geometry.counts.len();
    match ic.profile {
        Profile::Uniform => (ic.density, [ic.velocity, 0.0, 0.0], ic.temperature),
        Profile::GaussianBump => {
            let c = ic.center.unwrap_or(len.map(|l| 0.5 * l));
            let w = ic.width.unwrap_or(0.1 * len[0]);
            let r2: f64 = (0..dims).map(|ax| (x[ax] - c[ax]).powi(2)).sum();
            let rho = ic.density * (1.0 + ic.amplitude * (-r2 / (2.0 * w * w)).exp());
            (rho, [0.0; 3], ic.temperature)
        }
        Profile::Barometric => {
            let kt = spec.params.boltzmann * ic.temperature;
            (ic.density * (-spec.potential.value(x, 0.0) / kt).exp(), [0.0; 3], ic.temperature)
        }
        Profile::Shear => {
            let uy = ic.velocity * (2.0 * PI * x[0] / len[0]).sin();
            (ic.density, [0.0, uy, 0.0], ic.temperature)
        }
    }
}

/// `|a - b|_2 / |b|_2`.
pub fn l2_relative(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn linf_relative(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    num / den
}

fn bath_temperature(spec: &ExperimentSpec) -> f64 {
    spec.micro
        .as_ref()
        .and_then(|m| m.bath_temperature)
        .unwrap_or(spec.initial.temperature)
}

struct MicroRun {
    ensemble: Ensemble,
    lattice: Lattice,
    summary: MicroSummary,
    checks: Vec<Check>,
}

fn run_micro(spec: &ExperimentSpec, micro: &MicroSpec, seed: u64, t_end: f64) -> Result<MicroRun, HarnessError> {
    let p = &spec.params;
    let a = p.spacing;
    let lattice = Lattice::new(&spec.geometry.counts, spec.geometry.lattice_boundary)?;
    let n = lattice.len();
    let positions: Vec<[f64; 3]> = (0..n).map(|i| lattice.position(i, a)).collect();
    let phi: Vec<f64> = positions.iter().map(|&x| spec.potential.value(x, 0.0)).collect();
    let a3 = a.powi(3);
    let initial = positions
        .iter()
        .zip(&phi)
        .map(|(&x, &ph)| {
            let (rho, u, theta) = initial_primitives(spec, x);
            let occ = rho * a3 / p.mass;
            let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            let mix = MixtureSite {
                n: occ,
                energy: occ * (ph + 1.5 * p.boltzmann * theta + 0.5 * p.mass * u2),
                momentum: u.map(|c| p.mass * occ * c),
            };
            mixture_to_canonical(&mix, ph, p)
        })
        .collect::<Result<Vec<CanonicalState>, _>>()?;

    let thermalization = match micro.thermalization {
        ThermalizationChoice::None => Thermalization::None,
        ThermalizationChoice::Conserving => Thermalization::Conserving,
        ThermalizationChoice::Isothermal => Thermalization::Isothermal {
            theta: bath_temperature(spec),
        },
    };
    let theta_max = spec.initial.temperature.max(bath_temperature(spec));
    let field = HopField::new(&lattice, phi.clone(), vec![1; n])?;
    let mut policy = StepPolicy::automatic(&lattice, &field, p, theta_max, micro.exclusion)?;
    let steps = (t_end / policy.dt).ceil().max(1.0) as u64;
    policy.dt = t_end / steps as f64;

    let config = EnsembleConfig {
        lattice: lattice.clone(),
        phi: phi.clone(),
        hop_length: micro.hop_length,
        policy,
        thermalization,
        sampling: micro.sampling,
        seed,
    };
    let mut ensemble = Ensemble::new(config, &initial, micro.ensemble, p)?;
    let n0: Vec<usize> = ensemble.members.iter().map(|c| c.particles()).collect();
    let e0: Vec<f64> = ensemble.members.iter().map(|c| c.energy(&phi, p.mass)).collect();
    let particles0 = ensemble.totals(p).0;
    let stats = ensemble.advance(steps, p)?;

    let mut checks = Vec::new();
    let dn = ensemble
        .members
        .iter()
        .zip(&n0)
        .map(|(c, &k)| (c.particles() as f64 - k as f64).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("micro.particle_number", dn, 0.0));
    if micro.thermalization == ThermalizationChoice::None {
        let de = ensemble
            .members
            .iter()
            .zip(&e0)
            .map(|(c, &e)| {
                let now = c.energy(&phi, p.mass);
                if e == 0.0 {
                    now.abs()
                } else {
                    ((now - e) / e).abs()
                }
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most("micro.energy", de, spec.tolerances.conservation));
    }
    let summary = MicroSummary {
        ensemble: ensemble.len(),
        steps,
        dt: policy.dt,
        cutoff: policy.cutoff,
        hops: stats.hops.hops,
        collisions: stats.hops.collisions,
        over_cutoff: stats.hops.over_cutoff,
        flagged_sites: stats.flagged_sites,
        particles: [particles0, ensemble.totals(p).0],
    };
    Ok(MicroRun {
        ensemble,
        lattice,
        summary,
        checks,
    })
}

struct PdeRun {
    initial: Snapshot,
    last: Snapshot,
    summary: PdeSummary,
    checks: Vec<Check>,
}

fn solver_config(spec: &ExperimentSpec) -> SolverConfig {
    let p = &spec.params;
    let hop_sites = match spec.micro.as_ref().map(|m| m.hop_length) {
        Some(HopLength::Fixed(h)) => Some(h),
        Some(HopLength::DensityDependent) => None,
        None => None,
    };
    let lambda = match (spec.pde.lambda, hop_sites) {
        (LambdaChoice::Constant, _) | (LambdaChoice::Auto, None) => LambdaMode::Constant(p.lambda()),
        (LambdaChoice::Auto, Some(h)) => LambdaMode::LocalDensity {
            hop_length: h as f64 * p.spacing,
        },
        (LambdaChoice::LocalDensity, h) => LambdaMode::LocalDensity {
            hop_length: h.unwrap_or(1) as f64 * p.spacing,
        },
    };
    let mut config = SolverConfig::new(p);
    config.cfl = spec.pde.cfl;
    config.dt = spec.pde.dt;
    config.lambda = lambda;
    config.flux = spec.pde.flux;
    config.time_scheme = spec.pde.time_scheme;
    if let Some(f) = spec.pde.rho_floor {
        config.rho_floor = f;
    }
    config
}

fn pde_grid(spec: &ExperimentSpec) -> Result<Grid, HarnessError> {
    let r = (spec.geometry.cell_size / spec.params.spacing).round() as usize;
    let counts: Vec<usize> = spec.geometry.counts.iter().map(|&n| n / r).collect();
    Ok(Grid::new(&counts, spec.geometry.cell_size, spec.geometry.grid_boundary)?)
}

fn run_pde(spec: &ExperimentSpec, t_end: f64) -> Result<PdeRun, HarnessError> {
    let p = spec.params;
    let grid = pde_grid(spec)?;
    let config = solver_config(spec);
    let centers = grid.centers();
    let sites: Vec<HydroSite> = centers
        .iter()
        .map(|&x| {
            let (rho, u, theta) = initial_primitives(spec, x);
            HydroSite::from_primitives(rho, u, theta, spec.potential.value(x, 0.0), &p)
        })
        .collect();
    let rho0: Vec<f64> = sites.iter().map(|s| s.rho).collect();
    let initial = Snapshot {
        grid: grid.clone(),
        time: 0.0,
        sites: sites.clone(),
    };
    let tol = spec.tolerances.conservation;
    let mut checks = Vec::new();
    let equations = spec.equations();
    let (last, summary) = match equations {
        Equations::Full => {
            let mut solver = Solver::new(grid.clone(), p, spec.potential.clone(), config, &sites)?;
            solver.run_until(t_end)?;
            let ledger = solver.ledger_report();
            let last = solver.sites()?;
            checks.push(Check::at_most("pde.mass", ledger.mass_drift, tol));
            let energy = spec.potential.is_static().then_some(ledger.energy_drift);
            if let Some(e) = energy {
                checks.push(Check::at_most("pde.energy", e, tol));
            }
            checks.push(Check::at_most("pde.momentum", ledger.momentum_residual, tol));
            let rho: Vec<f64> = last.iter().map(|s| s.rho).collect();
            let summary = PdeSummary {
                equations,
                cells: grid.len(),
                steps: Some(solver.steps),
                mass_drift: ledger.mass_drift,
                energy_drift: energy,
                momentum_residual: Some(ledger.momentum_residual),
                stationarity: l2_relative(&rho, &rho0),
            };
            (last, summary)
        }
        Equations::Smoluchowski => {
            let theta = bath_temperature(spec);
            let rho = smoluchowski_reference(&rho0, &spec.potential, theta, t_end, &grid, &config, &p)?;
            let m0: f64 = rho0.iter().sum();
            let m1: f64 = rho.iter().sum();
            let mass_drift = ((m1 - m0) / m0).abs();
            checks.push(Check::at_most("pde.mass", mass_drift, tol));
            let last = rho
                .iter()
                .zip(&centers)
                .map(|(&r, &x)| HydroSite::from_primitives(r, [0.0; 3], theta, spec.potential.value(x, t_end), &p))
                .collect();
            let summary = PdeSummary {
                equations,
                cells: grid.len(),
                steps: None,
                mass_drift,
                energy_drift: None,
                momentum_residual: None,
                stationarity: l2_relative(&rho, &rho0),
            };
            (last, summary)
        }
    };
    if spec.initial.profile == Profile::Barometric {
        checks.push(Check::at_most(
            "pde.stationarity",
            summary.stationarity,
            spec.tolerances.stationarity,
        ));
    }
    Ok(PdeRun {
        initial,
        last: Snapshot {
            grid,
            time: t_end,
            sites: last,
        },
        summary,
        checks,
    })
}

/// Average PDE cells onto the micro coarse cells (same indexing as [`CoarseField`]).
fn pde_on_coarse(spec: &ExperimentSpec, snap: &Snapshot, coarse: &CoarseField, f: impl Fn(&HydroSite) -> f64) -> Vec<f64> {
    let r = (spec.geometry.cell_size / spec.params.spacing).round() as usize;
    let g = spec.geometry.coarse_cell / r;
    let cc = coarse.counts;
    let mut sum = vec![0.0; cc.iter().product()];
    let mut cnt = vec![0usize; sum.len()];
    for (i, s) in snap.sites.iter().enumerate() {
        let c = snap.grid.coords(i);
        let q: [usize; 3] = std::array::from_fn(|ax| if ax < snap.grid.dims { c[ax] / g } else { 0 });
        let k = q[0] + cc[0] * (q[1] + cc[1] * q[2]);
        sum[k] += f(s);
        cnt[k] += 1;
    }
    sum.iter().zip(&cnt).map(|(s, &n)| s / n as f64).collect()
}

/// Run an experiment. Nothing is written; see [`write_outputs`].
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput, HarnessError> {
    let problems = spec.problems();
    if !problems.is_empty() {
        return Err(super::SpecError { problems }.into());
    }
    let mut checks = Vec::new();
    let mut out = RunOutput {
        report: ComparisonReport {
            name: spec.name.clone(),
            mode: spec.mode,
            seed: spec.seed,
            t_end: spec.t_end,
            micro: None,
            pde: None,
            comparison: None,
            bounds: None,
            checks: Vec::new(),
            passed: false,
        },
        pde_initial: None,
        pde_final: None,
        micro_coarse: None,
        pde_coarse_rho: None,
    };
    if spec.mode == Mode::Bounds {
        let rows = bounds_table(&log_grid(1e-6, 1e-2, 9))?;
        for r in &rows {
            checks.push(Check {
                name: format!("bounds.{:?}", r.which),
                // Excess of the fitted exponent over its allowance; B6 only has a lower limit.
                value: match r.which {
                    BoundKind::B6 => (r.claimed_order - r.slope_plain).max(0.0),
                    _ if r.claimed_log => (r.slope_log - r.claimed_order).abs(),
                    _ => (r.slope_plain - r.claimed_order).abs(),
                },
                tolerance: super::SLOPE_TOLERANCE,
                passed: r.passed,
            });
        }
        out.report.bounds = Some(rows);
    }
    let t_end = spec.t_end.unwrap_or(0.0);
    let micro = match (spec.mode, &spec.micro) {
        (Mode::Micro | Mode::Compare, Some(m)) => {
            let seed = spec.seed.expect("checked by problems()");
            let mr = run_micro(spec, m, seed, t_end)?;
            checks.extend(mr.checks.iter().cloned());
            out.report.micro = Some(mr.summary.clone());
            let phi: Vec<f64> = mr.ensemble.config.phi.clone();
            let cs = vec![spec.geometry.coarse_cell; spec.geometry.counts.len()];
            out.micro_coarse = Some(coarse_grain(&mr.ensemble.members, &mr.lattice, &cs, &phi, &spec.params)?);
            Some((mr, phi, cs))
        }
        _ => None,
    };
    if matches!(spec.mode, Mode::Pde | Mode::Compare) {
        let pr = run_pde(spec, t_end)?;
        checks.extend(pr.checks.iter().cloned());
        out.report.pde = Some(pr.summary.clone());
        if let (Some((mr, phi, cs)), Some(coarse)) = (&micro, &out.micro_coarse) {
            let pde_rho = pde_on_coarse(spec, &pr.last, coarse, |s| s.rho);
            let micro_rho = coarse.density();
            let mut sweep = Vec::new();
            let m = mr.ensemble.len();
            for shift in (0..4).rev() {
                let size = m >> shift;
                if size == 0 || sweep.iter().any(|s: &SweepPoint| s.ensemble == size) {
                    continue;
                }
                let part = coarse_grain(&mr.ensemble.members[..size], &mr.lattice, cs, phi, &spec.params)?;
                sweep.push(SweepPoint {
                    ensemble: size,
                    l2_rho: l2_relative(&part.density(), &pde_rho),
                });
            }
            let thermal = spec.equations() == Equations::Full
                && spec.micro.as_ref().is_some_and(|m| m.thermalization != ThermalizationChoice::Isothermal);
            let (l2_theta, linf_theta) = if thermal {
                let pde_theta = pde_on_coarse(spec, &pr.last, coarse, |s| s.theta);
                let (a, b): (Vec<f64>, Vec<f64>) = coarse
                    .cells
                    .iter()
                    .zip(&pde_theta)
                    .filter_map(|(c, &t)| c.map(|h| (h.theta, t)))
                    .unzip();
                (Some(l2_relative(&a, &b)), Some(linf_relative(&a, &b)))
            } else {
                (None, None)
            };
            let l2_rho = l2_relative(&micro_rho, &pde_rho);
            checks.push(Check::at_most("compare.l2_rho", l2_rho, spec.tolerances.l2_rho));
            out.report.comparison = Some(Comparison {
                coarse_cells: pde_rho.len(),
                l2_rho,
                linf_rho: linf_relative(&micro_rho, &pde_rho),
                l2_theta,
                linf_theta,
                sweep,
            });
            out.pde_coarse_rho = Some(pde_rho);
        }
        out.pde_initial = Some(pr.initial);
        out.pde_final = Some(pr.last);
    }
    out.report.passed = checks.iter().all(|c| c.passed);
    out.report.checks = checks;
    Ok(out)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, HarnessError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_snapshot(dir: &Path, stem: &str, snap: &Snapshot, fmt: SnapshotFormat) -> Result<(), HarnessError> {
    if matches!(fmt, SnapshotFormat::Csv | SnapshotFormat::Both) {
        let mut w = create(dir, &format!("{stem}.csv"))?;
        write_csv(snap, &mut w)?;
        w.flush()?;
    }
    if matches!(fmt, SnapshotFormat::Binary | SnapshotFormat::Both) {
        let mut w = create(dir, &format!("{stem}.bin"))?;
        write_binary(snap, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Write `report.json` and the CSV/binary artefacts of a run into `dir`.
pub fn write_outputs(output: &RunOutput, format: SnapshotFormat, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut w = create(dir, "report.json")?;
    serde_json::to_writer_pretty(&mut w, &output.report)?;
    writeln!(w)?;
    w.flush()?;
    if let Some(rows) = &output.report.bounds {
        let mut w = create(dir, "bounds.csv")?;
        writeln!(w, "bound,claimed_order,claimed_log,slope_plain,slope_log,log_preferred,passed")?;
        for r in rows {
            writeln!(
                w,
                "{:?},{},{},{:e},{:e},{},{}",
                r.which, r.claimed_order, r.claimed_log, r.slope_plain, r.slope_log, r.log_preferred, r.passed
            )?;
        }
        w.flush()?;
    }
    if let Some(s) = &output.pde_initial {
        write_snapshot(dir, "pde_initial", s, format)?;
    }
    if let Some(s) = &output.pde_final {
        write_snapshot(dir, "pde_final", s, format)?;
    }
    if let Some(c) = &output.micro_coarse {
        let mut w = create(dir, "micro_coarse.csv")?;
        writeln!(w, "x,y,z,n,rho,u_x,u_y,u_z,theta")?;
        for (k, x) in c.centers.iter().enumerate() {
            let h = c.cells[k].unwrap_or(HydroSite::VACUUM);
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                x[0], x[1], x[2], c.mixtures[k].n, h.rho, h.u[0], h.u[1], h.u[2], h.theta
            )?;
        }
        w.flush()?;
        if let Some(pde) = &output.pde_coarse_rho {
            let mut w = create(dir, "compare.csv")?;
            writeln!(w, "x,y,z,rho_micro,rho_pde")?;
            for (k, x) in c.centers.iter().enumerate() {
                let rm = c.cells[k].map_or(0.0, |h| h.rho);
                writeln!(w, "{:e},{:e},{:e},{:e},{:e}", x[0], x[1], x[2], rm, pde[k])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
