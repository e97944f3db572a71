//! External potentials Φ(x, t), in erg.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// Φ = g·x, `gradient` in erg/cm.
    Linear { gradient: [f64; 3] },
    /// Φ = ½ k |x − c|², `stiffness` in erg/cm².
    Harmonic { center: [f64; 3], stiffness: f64 },
    /// Φ = A sin(2π x_axis / L). Periodic on domains that are a multiple of L.
    Sinusoidal {
        amplitude: f64,
        wavelength: f64,
        axis: usize,
    },
    /// Piecewise-linear table along one axis, clamped outside the table.
    Table {
        origin: f64,
        spacing: f64,
        values: Vec<f64>,
        axis: usize,
    },
    /// Φ(x, t) = base(x) · cos(ω t).
    Modulated {
        base: Box<Potential>,
        angular_frequency: f64,
    },
}

impl Default for Potential {
    fn default() -> Self {
        Potential::Zero
    }
}

impl Potential {
    pub fn value(&self, x: [f64; 3], t: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Linear { gradient } => {
                gradient[0] * x[0] + gradient[1] * x[1] + gradient[2] * x[2]
            }
            Potential::Harmonic { center, stiffness } => {
                let r2: f64 = (0..3).map(|i| (x[i] - center[i]).powi(2)).sum();
                0.5 * stiffness * r2
            }
            Potential::Sinusoidal {
                amplitude,
                wavelength,
                axis,
            } => amplitude * (2.0 * PI * x[*axis] / wavelength).sin(),
            Potential::Table {
                origin,
                spacing,
                values,
                axis,
            } => {
                if values.is_empty() {
                    return 0.0;
                }
                let s = (x[*axis] - origin) / spacing;
                if s <= 0.0 {
                    return values[0];
                }
                let last = values.len() - 1;
                if s >= last as f64 {
                    return values[last];
                }
                let i = s.floor() as usize;
                let w = s - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
            Potential::Modulated {
                base,
                angular_frequency,
            } => base.value(x, t) * (angular_frequency * t).cos(),
        }
    }

    pub fn is_static(&self) -> bool {
        !matches!(self, Potential::Modulated { .. })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_and_clamps() {
        let p = Potential::Table {
            origin: 0.0,
            spacing: 1.0,
            values: vec![0.0, 2.0, 4.0],
            axis: 0,
        };
        assert_eq!(p.value([0.5, 0.0, 0.0], 0.0), 1.0);
        assert_eq!(p.value([-3.0, 0.0, 0.0], 0.0), 0.0);
        assert_eq!(p.value([9.0, 0.0, 0.0], 0.0), 4.0);
    }

    #[test]
    fn modulation_is_time_dependent() {
        let p = Potential::Modulated {
            base: Box::new(Potential::Linear {
                gradient: [1.0, 0.0, 0.0],
            }),
            angular_frequency: PI,
        };
        assert!(!p.is_static());
        assert!((p.value([2.0, 0.0, 0.0], 1.0) + 2.0).abs() < 1e-12);
    }
}
