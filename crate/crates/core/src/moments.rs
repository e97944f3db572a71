//! Truncated Gaussian moments and the remainder integrals that control the
//! continuum limit of the hopping dynamics.
//!
//! `M_n(zeta) = ∫_lower^∞ kⁿ exp(-beta k²/(2m) - zeta k) dk`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::quad::{integrate_with_breaks, QuadError, QuadOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("closed form is not available for order {0}")]
    UnsupportedOrder(u32),
    #[error("closed forms assume lower = 0, got {0:e}")]
    NonZeroLower(f64),
    #[error("{name} must be strictly positive, got {value:e}")]
    NonPositive { name: &'static str, value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("scaling grid is degenerate: {0}")]
    DegenerateGrid(&'static str),
    #[error("majorant not valid here: {0}")]
    MajorantDomain(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSpec {
    pub n: u32,
    pub beta: f64,
    pub zeta: f64,
    pub m: f64,
    /// Lower limit; may be `f64::NEG_INFINITY`.
    pub lower: f64,
}

impl MomentSpec {
    pub fn new(n: u32, beta: f64, zeta: f64, m: f64) -> Self {
        Self {
            n,
            beta,
            zeta,
            m,
            lower: 0.0,
        }
    }

    fn check(&self) -> Result<(), MomentError> {
        if !(self.beta > 0.0) {
            return Err(MomentError::NonPositive {
                name: "beta",
                value: self.beta,
            });
        }
        if !(self.m > 0.0) {
            return Err(MomentError::NonPositive {
                name: "m",
                value: self.m,
            });
        }
        if self.n > 3 {
            return Err(MomentError::UnsupportedOrder(self.n));
        }
        Ok(())
    }
}

/// Truncated expansions: `M_0`, `M_1` to zeroth order in zeta, `M_2` to first order.
pub fn moment_closed(spec: &MomentSpec) -> Result<f64, MomentError> {
    spec.check()?;
    if spec.lower != 0.0 {
        return Err(MomentError::NonZeroLower(spec.lower));
    }
    let r = spec.m / spec.beta;
    match spec.n {
        0 => Ok((PI * r / 2.0).sqrt()),
        1 => Ok(r),
        2 => Ok((PI / 2.0).sqrt() * r.powf(1.5) - 2.0 * r * r * spec.zeta),
        n => Err(MomentError::UnsupportedOrder(n)),
    }
}

const WINDOW_SIGMAS: f64 = 40.0;

/// Direct evaluation of the defining integral by adaptive quadrature.
///
/// The exponent is completed to a square, `exp(m zeta²/(2 beta))` is taken
/// out, and the remaining Gaussian centred at `-m zeta/beta` is integrated
/// over a window of 40 standard deviations, beyond which it is below `e^-800`.
pub fn moment_exact(spec: &MomentSpec) -> Result<f64, MomentError> {
    spec.check()?;
    let s = (spec.m / spec.beta).sqrt();
    let mu = -spec.m * spec.zeta / spec.beta;
    let lo = spec.lower.max(mu - WINDOW_SIGMAS * s);
    let hi = spec.lower.max(mu) + WINDOW_SIGMAS * s;
    let n = spec.n as i32;
    let f = |k: f64| k.powi(n) * (-(k - mu) * (k - mu) / (2.0 * s * s)).exp();
    let mut pts = vec![lo];
    for p in [0.0, mu] {
        if p > lo && p < hi {
            pts.push(p);
        }
    }
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let r = integrate_with_breaks(f, &pts, QuadOptions::default())?;
    Ok(r.value * (spec.m * spec.zeta * spec.zeta / (2.0 * spec.beta)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BoundKind {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
}

impl BoundKind {
    pub const ALL: [BoundKind; 8] = [
        BoundKind::B1,
        BoundKind::B2,
        BoundKind::B3,
        BoundKind::B4,
        BoundKind::B5,
        BoundKind::B6,
        BoundKind::B7,
        BoundKind::B8,
    ];

    /// Order in ℓ claimed for the bound, and whether a log factor is expected.
    pub fn claimed_order(self) -> (f64, bool) {
        match self {
            BoundKind::B1 | BoundKind::B2 | BoundKind::B3 | BoundKind::B5 => (1.0, true),
            BoundKind::B4 | BoundKind::B7 | BoundKind::B8 => (2.0, false),
            BoundKind::B6 => (1.0, false),
        }
    }
}

/// Parameters of one remainder integral.
///
/// `zeta` is the component along the hop axis, `zeta_perp` the two others.
/// `prefactor` stands for `N_x / (Z_i eps)` and is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCase {
    pub which: BoundKind,
    pub ell: f64,
    pub grad_phi: f64,
    pub beta: f64,
    pub zeta: f64,
    pub zeta_perp: [f64; 2],
    pub mass: f64,
    pub prefactor: f64,
    /// Potential at the departure site; the arrival site sits at `phi_base + ell grad_phi`.
    pub phi_base: f64,
}

impl BoundCase {
    pub fn new(which: BoundKind, ell: f64, grad_phi: f64, beta: f64, zeta: f64, mass: f64) -> Self {
        Self {
            which,
            ell,
            grad_phi,
            beta,
            zeta,
            zeta_perp: [0.0; 2],
            mass,
            prefactor: 1.0,
            phi_base: 0.0,
        }
    }

    /// Length `1/(2 beta dPhi)` at which `kappa` reaches the thermal momentum
    /// `(m/beta)^{1/2}`; the log-corrected fit uses `log(ell_star/ell)`.
    pub fn log_scale(&self) -> f64 {
        1.0 / (2.0 * self.beta * self.grad_phi)
    }

    /// `kappa = (2 ell m dPhi)^{1/2}`.
    pub fn kappa(&self) -> f64 {
        (2.0 * self.ell * self.mass * self.grad_phi).sqrt()
    }

    fn check(&self) -> Result<(), MomentError> {
        for (name, value) in [("ell", self.ell), ("beta", self.beta), ("mass", self.mass)] {
            if !(value > 0.0) {
                return Err(MomentError::NonPositive { name, value });
            }
        }
        if self.grad_phi < 0.0 {
            return Err(MomentError::NonPositive {
                name: "grad_phi",
                value: self.grad_phi,
            });
        }
        Ok(())
    }

    fn weight(&self, zeta: f64) -> impl Fn(f64) -> f64 {
        let a = self.beta / (2.0 * self.mass);
        move |k: f64| (-a * k * k - zeta * k).exp()
    }

    /// Mean of `k_j²` for a transverse axis under the site law.
    fn transverse_second_moment(&self, zeta_j: f64) -> f64 {
        let r = self.mass / self.beta;
        r + (r * zeta_j).powi(2)
    }
}

/// `(k² + kappa²)^{1/2} - k` without cancellation for `k ≥ 0`.
fn gap(k: f64, kappa: f64) -> f64 {
    let kappa2 = kappa * kappa;
    if kappa2 == 0.0 {
        return 0.0;
    }
    kappa2 / (k + (k * k + kappa2).sqrt())
}

/// Panel edges on `[0, upper]` with a geometric ladder between `kappa` and the thermal width.
fn half_line_breaks(kappa: f64, s: f64) -> Vec<f64> {
    let upper = WINDOW_SIGMAS * s + kappa;
    let mut pts = vec![0.0];
    if kappa > 0.0 && kappa < upper {
        pts.push(kappa);
        let mut p = kappa * 10.0;
        while p < s {
            pts.push(p);
            p *= 10.0;
        }
    }
    if s > *pts.last().unwrap() {
        pts.push(s);
    }
    pts.push(upper);
    pts
}

fn half_line<F: Fn(f64) -> f64>(f: F, kappa: f64, s: f64) -> Result<f64, MomentError> {
    let pts = half_line_breaks(kappa, s);
    Ok(integrate_with_breaks(f, &pts, QuadOptions { rel_tol: 1e-12, ..Default::default() })?.value)
}

/// Numeric value of the named remainder.
pub fn bound_value(case: &BoundCase) -> Result<f64, MomentError> {
    case.check()?;
    let kappa = case.kappa();
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let m = case.mass;
    let s = (m / case.beta).sqrt();
    let pref = case.prefactor;
    let phi_arrival = case.phi_base + case.ell * case.grad_phi;
    let transverse: f64 = case
        .zeta_perp
        .iter()
        .map(|&z| case.transverse_second_moment(z))
        .sum::<f64>();
    let value = match case.which {
        BoundKind::B1 => {
            let w = case.weight(case.zeta);
            pref * half_line(|k| gap(k, kappa) / (2.0 * m) * w(k), kappa, s)?
        }
        BoundKind::B2 => {
            let w = case.weight(-case.zeta);
            pref * half_line(|k| gap(k, kappa) / (2.0 * m) * w(k), kappa, s)?
        }
        BoundKind::B3 => {
            let w = case.weight(case.zeta);
            pref * half_line(
                |k| {
                    let energy = k * k / (2.0 * m) + transverse / (2.0 * m) + phi_arrival;
                    gap(k, kappa) / (2.0 * m) * energy * w(k)
                },
                kappa,
                s,
            )?
        }
        BoundKind::B5 => {
            let w = case.weight(-case.zeta);
            pref * half_line(
                |k| {
                    let energy = k * k / (2.0 * m) + transverse / (2.0 * m) + case.phi_base;
                    gap(k, kappa) / (2.0 * m) * energy * w(k)
                },
                kappa,
                s,
            )?
        }
        BoundKind::B4 => {
            let kb = case.beta.powf(1.5) * m.sqrt();
            let c = PI.sqrt() / (2.0 * 2f64.sqrt() * kb);
            pref * kappa * kappa
                * (0.5 * c + 2.0 * c + phi_arrival * (PI * m / (2.0 * case.beta)).sqrt() / (2.0 * m))
        }
        BoundKind::B6 => {
            let w = case.weight(case.zeta);
            let truncation = integrate_with_breaks(&w, &[0.0, kappa], QuadOptions::default())?.value;
            let spec = |z| MomentSpec::new(0, case.beta, z, m);
            let m0 = moment_exact(&spec(case.zeta))? + moment_exact(&spec(-case.zeta))?;
            let expansion = (m0 - 2.0 * moment_closed(&spec(0.0))?).abs();
            case.grad_phi * pref * (truncation + expansion)
        }
        BoundKind::B7 => {
            let w = case.weight(case.zeta);
            pref * half_line(|k| gap(k, kappa) / (2.0 * m) * k * w(k), kappa, s)?
        }
        BoundKind::B8 => {
            // Defining integral over k ≤ 0; the integrand is non-positive.
            let w = case.weight(case.zeta);
            let f = |k: f64| {
                let q = -k;
                gap(q, kappa) / (2.0 * m) * k * w(k)
            };
            let pts: Vec<f64> = half_line_breaks(kappa, s).iter().rev().map(|p| -p).collect();
            let v = integrate_with_breaks(f, &pts, QuadOptions { rel_tol: 1e-12, ..Default::default() })?.value;
            (pref * v).abs()
        }
    };
    Ok(value)
}

/// `∫_1^∞ y⁻¹ exp(-y²/2) dy`.
pub fn majorant_tail_constant() -> f64 {
    integrate_with_breaks(
        |y: f64| (-0.5 * y * y).exp() / y,
        &[1.0, 2.0, 4.0, 8.0, 40.0],
        QuadOptions::default(),
    )
    .expect("smooth integrand")
    .value
}

/// Explicit majorant for `B1`:
/// `pref/(2m) (kappa² - kappa² log((beta/m)^{1/2} kappa) + kappa² C)`.
///
/// Valid for `zeta ≥ 0` and `(beta/m)^{1/2} kappa < 1`.
pub fn b1_majorant(case: &BoundCase) -> Result<f64, MomentError> {
    case.check()?;
    if case.zeta < 0.0 {
        return Err(MomentError::MajorantDomain("requires zeta >= 0"));
    }
    let kappa = case.kappa();
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let y0 = (case.beta / case.mass).sqrt() * kappa;
    if y0 >= 1.0 {
        return Err(MomentError::MajorantDomain("requires (beta/m)^(1/2) kappa < 1"));
    }
    let k2 = kappa * kappa;
    Ok(case.prefactor / (2.0 * case.mass) * (k2 - k2 * y0.ln() + k2 * majorant_tail_constant()))
}

/// How the other parameters move as ℓ shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ScalingPath {
    /// `ell c` held fixed, so `m ∝ ell²`; beta, dPhi and the prefactor are fixed.
    #[default]
    ContinuumLimit,
    /// Everything but ℓ fixed.
    FixedMass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub which: BoundKind,
    /// Slope of `log B` against `log ell`.
    pub slope_plain: f64,
    pub rss_plain: f64,
    /// Slope of `log B - log log(ell_star/ell)` against `log ell`.
    pub slope_log: f64,
    pub rss_log: f64,
    pub log_preferred: bool,
    pub ells: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalingFit {
    pub fn slope(&self) -> f64 {
        if self.log_preferred {
            self.slope_log
        } else {
            self.slope_plain
        }
    }
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum();
    (slope, rss)
}

/// Reference case used by [`bound_scaling_fit`], in thermal units (`beta = m = 1` at `ell = 1e-2`).
///
/// `dPhi = 0.1` keeps `kappa/(m/beta)^{1/2} = (2 ell beta dPhi)^{1/2}` below 0.05 on the
/// grid and `zeta (m/beta)^{1/2} ≤ 0.01`, so the fits see the small-ℓ, small-zeta regime.
pub fn reference_case(which: BoundKind) -> BoundCase {
    BoundCase {
        zeta_perp: [0.005, -0.005],
        ..BoundCase::new(which, 1e-2, 0.1, 1.0, 0.01, 1.0)
    }
}

pub fn bound_scaling_fit(which: BoundKind, ell_grid: &[f64]) -> Result<ScalingFit, MomentError> {
    bound_scaling_fit_with(&reference_case(which), ell_grid, ScalingPath::ContinuumLimit)
}

/// Fit `B(ell)` along `path`, starting from `base` (whose `ell` is the reference length).
pub fn bound_scaling_fit_with(
    base: &BoundCase,
    ell_grid: &[f64],
    path: ScalingPath,
) -> Result<ScalingFit, MomentError> {
    if ell_grid.len() < 3 {
        return Err(MomentError::DegenerateGrid("need at least 3 points"));
    }
    if ell_grid.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(MomentError::DegenerateGrid("ell must lie in (0, 1)"));
    }
    let lo = ell_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ell_grid.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 1e3 {
        return Err(MomentError::DegenerateGrid("grid must span at least 3 decades"));
    }
    let mut values = Vec::with_capacity(ell_grid.len());
    for &ell in ell_grid {
        let mass = match path {
            ScalingPath::ContinuumLimit => base.mass * (ell / base.ell).powi(2),
            ScalingPath::FixedMass => base.mass,
        };
        let v = bound_value(&BoundCase { ell, mass, ..*base })?;
        if !(v > 0.0) {
            return Err(MomentError::DegenerateGrid("bound vanishes on the grid"));
        }
        values.push(v);
    }
    let ell_star = base.log_scale();
    if !(ell_star > hi) {
        return Err(MomentError::DegenerateGrid("grid reaches the thermal length k_B Theta / (2 dPhi)"));
    }
    let x: Vec<f64> = ell_grid.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let y_log: Vec<f64> = y
        .iter()
        .zip(ell_grid)
        .map(|(v, l)| v - (ell_star / l).ln().ln())
        .collect();
    let (slope_plain, rss_plain) = linear_fit(&x, &y);
    let (slope_log, rss_log) = linear_fit(&x, &y_log);
    Ok(ScalingFit {
        which: base.which,
        slope_plain,
        rss_plain,
        slope_log,
        rss_log,
        log_preferred: rss_log < rss_plain,
        ells: ell_grid.to_vec(),
        values,
    })
}

/// `n` points spaced evenly in `log ell` between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
