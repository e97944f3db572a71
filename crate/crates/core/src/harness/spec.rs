use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::units::{parse_quantity, Dimension, UnitContext};
use crate::microsim::{HopLength, LatticeBoundary, MomentumSampling};
use crate::pde::{FluxScheme, GridBoundary, TimeScheme};
use crate::potential::Potential;
use crate::thermo::{ModelParams, BOLTZMANN_CGS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Micro,
    Pde,
    Compare,
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Uniform,
    GaussianBump,
    Barometric,
    Shear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equations {
    /// Mass, energy and momentum.
    Full,
    /// Mass equation at rest with uniform temperature.
    Smoluchowski,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaChoice {
    /// Local-density lambda with the micro hop length when it is fixed, constant otherwise.
    Auto,
    Constant,
    LocalDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Csv,
    Binary,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThermalizationChoice {
    None,
    Conserving,
    Isothermal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub counts: Vec<usize>,
    pub lattice_boundary: LatticeBoundary,
    pub grid_boundary: GridBoundary,
    /// PDE cell size (cm).
    pub cell_size: f64,
    /// Sites per coarse cell along each active axis.
    pub coarse_cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub profile: Profile,
    /// Background density (g/cm³).
    pub density: f64,
    pub temperature: f64,
    /// Relative bump height.
    pub amplitude: f64,
    /// Bump width (cm); `None` means a tenth of the domain.
    pub width: Option<f64>,
    pub center: Option<[f64; 3]>,
    /// Uniform drift along x, or the shear amplitude of `u_y(x)`.
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroSpec {
    pub ensemble: usize,
    pub thermalization: ThermalizationChoice,
    pub bath_temperature: Option<f64>,
    pub exclusion: bool,
    pub hop_length: HopLength,
    pub sampling: MomentumSampling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSpec {
    pub cfl: f64,
    pub dt: Option<f64>,
    pub lambda: LambdaChoice,
    pub flux: FluxScheme,
    pub time_scheme: TimeScheme,
    pub equations: Option<Equations>,
    pub rho_floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative L2 error of the coarse density, micro against continuum.
    pub l2_rho: f64,
    /// Relative drift of conserved totals.
    pub conservation: f64,
    /// Relative L2 change of a stationary profile over the run.
    pub stationarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            l2_rho: 0.05,
            conservation: 1e-10,
            stationarity: 1e-3,
        }
    }
}

/// A fully resolved experiment, all quantities in c.g.s.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub params: ModelParams,
    pub geometry: Geometry,
    pub initial: InitialCondition,
    pub potential: Potential,
    pub micro: Option<MicroSpec>,
    pub pde: PdeSpec,
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
    pub snapshots: SnapshotFormat,
}

/// Every problem found in a spec file.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub problems: Vec<String>,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid experiment spec:")?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SpecError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    mode: Mode,
    seed: Option<u64>,
    t_end: Option<String>,
    #[serde(default)]
    model: RawModel,
    geometry: Option<RawGeometry>,
    #[serde(default)]
    initial: RawInitial,
    potential: Option<RawPotential>,
    micro: Option<RawMicro>,
    #[serde(default)]
    pde: RawPde,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawModel {
    mass: Option<String>,
    spacing: Option<String>,
    momentum_quantum: Option<String>,
    boltzmann: Option<String>,
    reference_temperature: Option<String>,
    cutoff_sigmas: Option<f64>,
    keep_kinetic_in_e: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    counts: Vec<usize>,
    boundary: Option<String>,
    cell_size: Option<String>,
    coarse_cell: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    profile: Profile,
    density: Option<String>,
    temperature: Option<String>,
    amplitude: Option<f64>,
    width: Option<String>,
    center: Option<Vec<String>>,
    velocity: Option<String>,
}

impl Default for RawInitial {
    fn default() -> Self {
        Self {
            profile: Profile::Uniform,
            density: None,
            temperature: None,
            amplitude: None,
            width: None,
            center: None,
            velocity: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawPotential {
    Zero,
    Linear {
        gradient: Vec<String>,
    },
    Harmonic {
        stiffness: String,
        center: Option<Vec<String>>,
    },
    Sinusoidal {
        amplitude: String,
        wavelength: Option<String>,
        axis: Option<usize>,
    },
    Table {
        origin: String,
        spacing: String,
        values: Vec<String>,
        axis: Option<usize>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawHop {
    Sites(u32),
    Named(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMicro {
    ensemble: usize,
    thermalization: Option<String>,
    bath_temperature: Option<String>,
    exclusion: Option<bool>,
    hop_length: Option<RawHop>,
    sampling: Option<MomentumSampling>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPde {
    cfl: Option<f64>,
    dt: Option<String>,
    lambda: Option<LambdaChoice>,
    flux: Option<FluxScheme>,
    time_scheme: Option<TimeScheme>,
    equations: Option<Equations>,
    rho_floor: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    snapshots: Option<SnapshotFormat>,
}

struct Collector<'a> {
    problems: Vec<String>,
    ctx: &'a UnitContext,
}

impl Collector<'_> {
    fn q(&mut self, field: &str, text: Option<&String>, dim: Dimension, default: f64) -> f64 {
        match text {
            None => default,
            Some(t) => match parse_quantity(t, dim, self.ctx) {
                Ok(v) => v,
                Err(e) => {
                    self.problems.push(format!("{field}: {e}"));
                    default
                }
            },
        }
    }

    fn opt(&mut self, field: &str, text: Option<&String>, dim: Dimension) -> Option<f64> {
        let t = text?;
        match parse_quantity(t, dim, self.ctx) {
            Ok(v) => Some(v),
            Err(e) => {
                self.problems.push(format!("{field}: {e}"));
                None
            }
        }
    }

    fn vec3(&mut self, field: &str, items: &[String], dim: Dimension) -> [f64; 3] {
        if items.len() > 3 {
            self.problems.push(format!("{field}: at most 3 components, got {}", items.len()));
        }
        let mut out = [0.0; 3];
        for (i, t) in items.iter().take(3).enumerate() {
            out[i] = self.q(&format!("{field}[{i}]"), Some(t), dim, 0.0);
        }
        out
    }
}

impl ExperimentSpec {
    /// Parse a TOML spec. All problems are reported together.
    pub fn from_toml(text: &str) -> Result<Self, SpecError> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| SpecError {
            problems: vec![e.to_string().trim().to_string()],
        })?;
        Self::resolve(raw)
    }

    fn resolve(raw: RawSpec) -> Result<Self, SpecError> {
        let argon = ModelParams::argon();
        let pre = UnitContext {
            kt: argon.boltzmann * argon.reference_temperature,
            rho_max: argon.rho_max(),
        };
        // Model constants first: `kT` and `rho_max` elsewhere depend on them.
        let mut c = Collector {
            problems: Vec::new(),
            ctx: &pre,
        };
        let m = &raw.model;
        let params = ModelParams {
            mass: c.q("model.mass", m.mass.as_ref(), Dimension::Mass, argon.mass),
            spacing: c.q("model.spacing", m.spacing.as_ref(), Dimension::Length, argon.spacing),
            momentum_quantum: c.q(
                "model.momentum_quantum",
                m.momentum_quantum.as_ref(),
                Dimension::Momentum,
                argon.momentum_quantum,
            ),
            boltzmann: c.q(
                "model.boltzmann",
                m.boltzmann.as_ref(),
                Dimension::EntropyPerParticle,
                BOLTZMANN_CGS,
            ),
            reference_temperature: c.q(
                "model.reference_temperature",
                m.reference_temperature.as_ref(),
                Dimension::Temperature,
                argon.reference_temperature,
            ),
            cutoff_sigmas: m.cutoff_sigmas.unwrap_or(argon.cutoff_sigmas),
            keep_kinetic_in_e: m.keep_kinetic_in_e.unwrap_or(false),
        };
        let mut problems = c.problems;
        if let Err(e) = params.validate() {
            problems.push(format!("model: {e}"));
        }
        let ctx = UnitContext {
            kt: params.boltzmann * params.reference_temperature,
            rho_max: params.rho_max(),
        };
        let mut c = Collector { problems, ctx: &ctx };

        let t_end = c.opt("t_end", raw.t_end.as_ref(), Dimension::Time);

        let geometry = match &raw.geometry {
            None => Geometry {
                counts: vec![],
                lattice_boundary: LatticeBoundary::Periodic,
                grid_boundary: GridBoundary::Periodic,
                cell_size: params.spacing,
                coarse_cell: 1,
            },
            Some(g) => {
                let (lb, gb) = match g.boundary.as_deref() {
                    None | Some("periodic") => (LatticeBoundary::Periodic, GridBoundary::Periodic),
                    Some("closed") | Some("reflecting") => (LatticeBoundary::Closed, GridBoundary::Reflecting),
                    Some(other) => {
                        c.problems.push(format!(
                            "geometry.boundary: `{other}` is not one of periodic, closed, reflecting"
                        ));
                        (LatticeBoundary::Periodic, GridBoundary::Periodic)
                    }
                };
                Geometry {
                    counts: g.counts.clone(),
                    lattice_boundary: lb,
                    grid_boundary: gb,
                    cell_size: c.q("geometry.cell_size", g.cell_size.as_ref(), Dimension::Length, params.spacing),
                    coarse_cell: g.coarse_cell.unwrap_or(1),
                }
            }
        };

        let i = &raw.initial;
        let initial = InitialCondition {
            profile: i.profile,
            density: c.q("initial.density", i.density.as_ref(), Dimension::Density, 0.1 * params.rho_max()),
            temperature: c.q(
                "initial.temperature",
                i.temperature.as_ref(),
                Dimension::Temperature,
                params.reference_temperature,
            ),
            amplitude: i.amplitude.unwrap_or(0.5),
            width: c.opt("initial.width", i.width.as_ref(), Dimension::Length),
            center: i.center.as_ref().map(|v| c.vec3("initial.center", v, Dimension::Length)),
            velocity: c.q("initial.velocity", i.velocity.as_ref(), Dimension::Velocity, 0.0),
        };

        let domain: Vec<f64> = geometry.counts.iter().map(|&n| n as f64 * params.spacing).collect();
        let potential = match &raw.potential {
            None | Some(RawPotential::Zero) => Potential::Zero,
            Some(RawPotential::Linear { gradient }) => Potential::Linear {
                gradient: c.vec3("potential.gradient", gradient, Dimension::Force),
            },
            Some(RawPotential::Harmonic { stiffness, center }) => Potential::Harmonic {
                stiffness: c.q("potential.stiffness", Some(stiffness), Dimension::Stiffness, 0.0),
                center: match center {
                    Some(v) => c.vec3("potential.center", v, Dimension::Length),
                    None => std::array::from_fn(|ax| domain.get(ax).map_or(0.0, |l| 0.5 * l)),
                },
            },
            Some(RawPotential::Sinusoidal {
                amplitude,
                wavelength,
                axis,
            }) => {
                let axis = axis.unwrap_or(0);
                let wl = c.opt("potential.wavelength", wavelength.as_ref(), Dimension::Length);
                let wl = wl.or_else(|| domain.get(axis).copied()).unwrap_or(1.0);
                Potential::Sinusoidal {
                    amplitude: c.q("potential.amplitude", Some(amplitude), Dimension::Energy, 0.0),
                    wavelength: wl,
                    axis,
                }
            }
            Some(RawPotential::Table {
                origin,
                spacing,
                values,
                axis,
            }) => Potential::Table {
                origin: c.q("potential.origin", Some(origin), Dimension::Length, 0.0),
                spacing: c.q("potential.spacing", Some(spacing), Dimension::Length, 1.0),
                values: values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| c.q(&format!("potential.values[{k}]"), Some(v), Dimension::Energy, 0.0))
                    .collect(),
                axis: axis.unwrap_or(0),
            },
        };

        let micro = raw.micro.as_ref().map(|mi| {
            let thermalization = match mi.thermalization.as_deref() {
                None | Some("none") => ThermalizationChoice::None,
                Some("conserving") => ThermalizationChoice::Conserving,
                Some("isothermal") => ThermalizationChoice::Isothermal,
                Some(other) => {
                    c.problems.push(format!(
                        "micro.thermalization: `{other}` is not one of none, conserving, isothermal"
                    ));
                    ThermalizationChoice::None
                }
            };
            let hop_length = match &mi.hop_length {
                None => HopLength::Fixed(1),
                Some(RawHop::Sites(0)) => {
                    c.problems.push("micro.hop_length: must be at least 1 site".into());
                    HopLength::Fixed(1)
                }
                Some(RawHop::Sites(n)) => HopLength::Fixed(*n),
                Some(RawHop::Named(s)) if s == "density" => HopLength::DensityDependent,
                Some(RawHop::Named(s)) => {
                    c.problems.push(format!("micro.hop_length: `{s}` is neither a site count nor `density`"));
                    HopLength::Fixed(1)
                }
            };
            MicroSpec {
                ensemble: mi.ensemble,
                thermalization,
                bath_temperature: c.opt("micro.bath_temperature", mi.bath_temperature.as_ref(), Dimension::Temperature),
                exclusion: mi.exclusion.unwrap_or(false),
                hop_length,
                sampling: mi.sampling.unwrap_or_default(),
            }
        });

        let p = &raw.pde;
        let pde = PdeSpec {
            cfl: p.cfl.unwrap_or(0.5),
            dt: c.opt("pde.dt", p.dt.as_ref(), Dimension::Time),
            lambda: p.lambda.unwrap_or(LambdaChoice::Auto),
            flux: p.flux.unwrap_or_default(),
            time_scheme: p.time_scheme.unwrap_or_default(),
            equations: p.equations,
            rho_floor: c.opt("pde.rho_floor", p.rho_floor.as_ref(), Dimension::Density),
        };

        let spec = ExperimentSpec {
            name: raw.name,
            mode: raw.mode,
            seed: raw.seed,
            t_end,
            params,
            geometry,
            initial,
            potential,
            micro,
            pde,
            tolerances: raw.tolerances,
            output_dir: raw.output.dir.map(PathBuf::from),
            snapshots: raw.output.snapshots.unwrap_or(SnapshotFormat::Both),
        };
        let mut problems = c.problems;
        problems.extend(spec.problems());
        if problems.is_empty() {
            Ok(spec)
        } else {
            Err(SpecError { problems })
        }
    }

    /// Mode-dependent consistency checks; empty when the spec can run.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.mode == Mode::Bounds {
            return out;
        }
        let g = &self.geometry;
        if g.counts.is_empty() || g.counts.len() > 3 {
            out.push("geometry.counts: need 1 to 3 entries".into());
        }
        match self.t_end {
            None => out.push("t_end: required for this mode".into()),
            Some(t) if !(t > 0.0) => out.push(format!("t_end: must be positive, got {t:e}")),
            _ => {}
        }
        if !(self.initial.density > 0.0) {
            out.push("initial.density: must be positive".into());
        }
        if !(self.initial.temperature > 0.0) {
            out.push("initial.temperature: must be positive".into());
        }
        if !(self.initial.amplitude > -1.0) {
            out.push("initial.amplitude: must exceed -1".into());
        }
        let needs_micro = matches!(self.mode, Mode::Micro | Mode::Compare);
        let needs_pde = matches!(self.mode, Mode::Pde | Mode::Compare);
        if needs_micro {
            match &self.micro {
                None => out.push("micro: section required for this mode".into()),
                Some(m) => {
                    if m.ensemble == 0 {
                        out.push("micro.ensemble: must be at least 1".into());
                    }
                }
            }
            if self.seed.is_none() {
                out.push("seed: required for stochastic runs (set it in the file or with --seed)".into());
            }
            let n_max = self.initial.density * (1.0 + self.initial.amplitude.max(0.0)) / self.params.rho_max();
            if n_max >= 1.0 {
                out.push(format!("initial.density: peak occupation {n_max:.3} must stay below 1"));
            }
            if g.coarse_cell == 0 || g.counts.iter().any(|&n| n % g.coarse_cell != 0) {
                out.push(format!(
                    "geometry.coarse_cell: {} must divide every entry of geometry.counts",
                    g.coarse_cell
                ));
            }
        }
        if needs_pde {
            let ratio = g.cell_size / self.params.spacing;
            let r = ratio.round();
            if !(r >= 1.0 && (ratio - r).abs() < 1e-9 * r) {
                out.push("geometry.cell_size: must be a whole multiple of model.spacing".into());
            } else {
                let r = r as usize;
                if g.counts.iter().any(|&n| n % r != 0 || n / r < 4) {
                    out.push("geometry.cell_size: the grid needs a whole number (at least 4) of cells per axis".into());
                }
                if self.mode == Mode::Compare && g.coarse_cell % r != 0 {
                    out.push("geometry.coarse_cell: must be a multiple of cell_size/spacing".into());
                }
            }
            if !(self.pde.cfl > 0.0 && self.pde.cfl <= 1.0) {
                out.push(format!("pde.cfl: must be in (0, 1], got {}", self.pde.cfl));
            }
            if self.equations() == Equations::Smoluchowski {
                if self.initial.velocity != 0.0 {
                    out.push("pde.equations: smoluchowski needs a fluid at rest (initial.velocity = 0)".into());
                }
                if !self.potential.is_static() {
                    out.push("pde.equations: smoluchowski needs a static potential".into());
                }
            }
        }
        if let Potential::Sinusoidal { axis, .. } | Potential::Table { axis, .. } = &self.potential {
            if *axis >= g.counts.len().max(1) {
                out.push(format!("potential.axis: {axis} is not an active axis"));
            }
        }
        out
    }

    /// Equations the continuum side solves.
    pub fn equations(&self) -> Equations {
        self.pde.equations.unwrap_or(match &self.micro {
            Some(m) if m.thermalization == ThermalizationChoice::Isothermal && self.mode == Mode::Compare => {
                Equations::Smoluchowski
            }
            _ => Equations::Full,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
name = "bump"
mode = "compare"
seed = 3
t_end = "20 ps"

[geometry]
counts = [64]
coarse_cell = 8

[initial]
profile = "gaussian-bump"
density = "0.2 rho_max"
amplitude = 0.5
width = "4e-8 cm"

[potential]
kind = "sinusoidal"
amplitude = "0.1 kT"

[micro]
ensemble = 10
thermalization = "isothermal"
"#;

    #[test]
    fn parses_a_compare_spec() {
        let s = ExperimentSpec::from_toml(GOOD).unwrap();
        assert_eq!(s.mode, Mode::Compare);
        assert_eq!(s.t_end, Some(2e-11));
        assert!((s.initial.density - 0.2 * s.params.rho_max()).abs() < 1e-12);
        assert_eq!(s.equations(), Equations::Smoluchowski);
        match s.potential {
            Potential::Sinusoidal { wavelength, .. } => assert!((wavelength - 64e-8).abs() < 1e-20),
            _ => panic!(),
        }
    }

    #[test]
    fn lists_every_problem() {
        let bad = GOOD
            .replace("t_end = \"20 ps\"", "t_end = \"20\"")
            .replace("seed = 3\n", "")
            .replace("coarse_cell = 8", "coarse_cell = 7")
            .replace("\"4e-8 cm\"", "\"4e-8 s\"");
        let e = ExperimentSpec::from_toml(&bad).unwrap_err();
        let text = e.to_string();
        for needle in ["t_end", "seed", "coarse_cell", "initial.width"] {
            assert!(text.contains(needle), "{needle} missing from:\n{text}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = GOOD.replace("ensemble = 10", "ensemble = 10\nensmble = 4");
        assert!(ExperimentSpec::from_toml(&bad).is_err());
    }
}
