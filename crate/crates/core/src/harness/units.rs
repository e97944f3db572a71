//! Quantities written as `"<number> <unit>"`, converted to c.g.s.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Mass,
    Energy,
    Temperature,
    Momentum,
    Density,
    Velocity,
    /// erg/K
    EntropyPerParticle,
    /// erg/cm
    Force,
    /// erg/cm²
    Stiffness,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Length => "length (cm, mm, m, nm, angstrom)",
            Dimension::Time => "time (s, ms, us, ns, ps)",
            Dimension::Mass => "mass (g, kg)",
            Dimension::Energy => "energy (erg, J, kT)",
            Dimension::Temperature => "temperature (K)",
            Dimension::Momentum => "momentum (g*cm/s)",
            Dimension::Density => "density (g/cm^3, kg/m^3, rho_max)",
            Dimension::Velocity => "velocity (cm/s, m/s)",
            Dimension::EntropyPerParticle => "erg/K or J/K",
            Dimension::Force => "potential gradient (erg/cm, kT/cm)",
            Dimension::Stiffness => "potential curvature (erg/cm^2, kT/cm^2)",
        };
        f.write_str(s)
    }
}

/// Scales for the context-dependent units `kT` (`k_B Theta_0`) and `rho_max` (`m/a³`).
#[derive(Debug, Clone, Copy)]
pub struct UnitContext {
    pub kt: f64,
    pub rho_max: f64,
}

fn scale(unit: &str, dim: Dimension, ctx: &UnitContext) -> Option<f64> {
    use Dimension::*;
    let u = unit.replace(' ', "");
    let v = match (dim, u.as_str()) {
        (Length, "cm") => 1.0,
        (Length, "mm") => 0.1,
        (Length, "m") => 100.0,
        (Length, "um") => 1e-4,
        (Length, "nm") => 1e-7,
        (Length, "angstrom") => 1e-8,
        (Time, "s") => 1.0,
        (Time, "ms") => 1e-3,
        (Time, "us") => 1e-6,
        (Time, "ns") => 1e-9,
        (Time, "ps") => 1e-12,
        (Time, "fs") => 1e-15,
        (Mass, "g") => 1.0,
        (Mass, "kg") => 1e3,
        (Energy, "erg") => 1.0,
        (Energy, "J") => 1e7,
        (Energy, "kT") => ctx.kt,
        (Temperature, "K") => 1.0,
        (Momentum, "g*cm/s") | (Momentum, "g.cm/s") => 1.0,
        (Momentum, "kg*m/s") => 1e5,
        (Density, "g/cm^3") | (Density, "g/cm3") => 1.0,
        (Density, "kg/m^3") | (Density, "kg/m3") => 1e-3,
        (Density, "rho_max") => ctx.rho_max,
        (Velocity, "cm/s") => 1.0,
        (Velocity, "m/s") => 100.0,
        (EntropyPerParticle, "erg/K") => 1.0,
        (EntropyPerParticle, "J/K") => 1e7,
        (Force, "erg/cm") => 1.0,
        (Force, "kT/cm") => ctx.kt,
        (Stiffness, "erg/cm^2") | (Stiffness, "erg/cm2") => 1.0,
        (Stiffness, "kT/cm^2") | (Stiffness, "kT/cm2") => ctx.kt,
        _ => return None,
    };
    Some(v)
}

/// Parse `"<number> <unit>"`; the unit is mandatory and must have dimension `dim`.
pub fn parse_quantity(text: &str, dim: Dimension, ctx: &UnitContext) -> Result<f64, String> {
    let t = text.trim();
    let split = t.find(|c: char| c.is_whitespace()).ok_or_else(|| {
        format!("`{t}` has no unit; expected a number followed by a unit of {dim}")
    })?;
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| format!("`{num}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{num}` is not finite"));
    }
    let unit = unit.trim();
    let s = scale(unit, dim, ctx).ok_or_else(|| format!("unit `{unit}` is not a unit of {dim}"))?;
    Ok(value * s)
}
