//! Probability densities and amplitude/phase (Madelung) states.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, Grid, ScalarField};

/// Relative floor below which a density value is treated as outside the support.
pub const SUPPORT_FLOOR: f64 = 1e-12;

/// Largest tolerated negative sample; smaller magnitudes are clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-14;

/// Relative tolerance for the `hbar * omega == k * T` condition.
const THERMAL_EQUALITY_TOL: f64 = 1e-12;

/// Physical constants shared by every module.
///
/// `thermal_equality` asserts that the oscillator quantum equals the bath
/// energy, `hbar * omega == k * T`, which makes the thermal multiplier
/// `alpha_th = 1/(hbar omega)` coincide with `beta = 1/(kT)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub boltzmann_k: f64,
    pub temperature: f64,
    #[serde(default)]
    pub thermal_equality: bool,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
            boltzmann_k: 1.0,
            temperature: 1.0,
            thermal_equality: true,
        }
    }
}

impl PhysicalConstants {
    pub fn new(
        hbar: f64,
        mass: f64,
        omega: f64,
        boltzmann_k: f64,
        temperature: f64,
        thermal_equality: bool,
    ) -> Result<Self> {
        let c = Self {
            hbar,
            mass,
            omega,
            boltzmann_k,
            temperature,
            thermal_equality,
        };
        c.validate()?;
        Ok(c)
    }

    /// Constants with the bath temperature chosen so that `hbar omega = k T`.
    pub fn thermal(hbar: f64, mass: f64, omega: f64, boltzmann_k: f64) -> Result<Self> {
        Self::new(hbar, mass, omega, boltzmann_k, hbar * omega / boltzmann_k, true)
    }

    /// Same constants with a different `hbar` and `mass`, everything else kept.
    pub fn with_hbar_mass(self, hbar: f64, mass: f64) -> Result<Self> {
        let c = Self { hbar, mass, ..self };
        let c = if c.thermal_equality {
            Self {
                temperature: c.hbar * c.omega / c.boltzmann_k,
                ..c
            }
        } else {
            c
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("omega", self.omega),
            ("boltzmann_k", self.boltzmann_k),
            ("temperature", self.temperature),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.thermal_equality {
            let a = self.hbar * self.omega;
            let b = self.boltzmann_k * self.temperature;
            if (a - b).abs() > THERMAL_EQUALITY_TOL * b {
                return Err(Error::InvalidInput(format!(
                    "thermal equality requested but hbar*omega={a} differs from k*T={b}"
                )));
            }
        }
        Ok(())
    }

    /// `1/(k T)`.
    pub fn beta(&self) -> f64 {
        1.0 / (self.boltzmann_k * self.temperature)
    }

    /// Thermal multiplier `1/(hbar omega)`.
    pub fn alpha_th(&self) -> f64 {
        1.0 / (self.hbar * self.omega)
    }

    /// Diffusivity `hbar / 2m`.
    pub fn diffusivity(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }
}

/// Whether constructors insist that a density has decayed at both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TruncationCheck {
    #[default]
    Enforce,
    Skip,
}

/// A normalized, nonnegative density together with its support mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    field: ScalarField,
    support: Vec<bool>,
}

impl Density {
    /// Normalizes `raw` and computes its support; see [`density_from_samples`].
    pub fn from_samples(raw: &ScalarField, check: TruncationCheck) -> Result<Self> {
        let mut values = Vec::with_capacity(raw.len());
        for (j, &v) in raw.values().iter().enumerate() {
            if v < -NEGATIVE_TOLERANCE {
                return Err(Error::NegativeDensity { index: j, value: v });
            }
            values.push(v.max(0.0));
        }
        let dx = raw.grid().dx();
        let mass = grid::trapezoid(&values, dx);
        if !(mass > 0.0) {
            return Err(Error::ZeroMass(mass));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Self::from_normalized(ScalarField::from_vec_unchecked(*raw.grid(), values), check)
    }

    /// Wraps already-normalized values without rescaling them.
    pub(crate) fn from_normalized(field: ScalarField, check: TruncationCheck) -> Result<Self> {
        let max = field.max();
        if !(max > 0.0) {
            return Err(Error::ZeroMass(max));
        }
        if check == TruncationCheck::Enforce {
            let v = field.values();
            let edge = v[0].max(v[v.len() - 1]);
            let ratio = edge / max;
            if ratio > SUPPORT_FLOOR {
                return Err(Error::TruncationError { ratio });
            }
        }
        let floor = SUPPORT_FLOOR * max;
        let support = field.values().iter().map(|&p| p > floor).collect();
        Ok(Self { field, support })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    /// `true` where `P > SUPPORT_FLOOR * max(P)`.
    pub fn support_mask(&self) -> &[bool] {
        &self.support
    }

    /// Support mask restricted to runs long enough for the masked stencils.
    pub fn stencil_mask(&self) -> Vec<bool> {
        grid::effective_mask(&self.support)
    }

    /// `ln P` on the support, zero elsewhere.
    pub fn log_density(&self) -> ScalarField {
        let v = self
            .values()
            .iter()
            .zip(&self.support)
            .map(|(&p, &m)| if m { p.ln() } else { 0.0 })
            .collect();
        ScalarField::from_vec_unchecked(*self.grid(), v)
    }

    /// The score `P'/P`, evaluated as the derivative of `ln P` on each support run.
    pub fn score(&self) -> ScalarField {
        grid::masked_derivative(&self.log_density(), &self.support)
    }

    /// `P''/P = (ln P)'' + ((ln P)')^2` on the support.
    pub fn curvature_ratio(&self) -> ScalarField {
        let l = self.log_density();
        let d1 = grid::masked_derivative(&l, &self.support);
        let d2 = grid::masked_second_derivative(&l, &self.support);
        let v = d1.values().iter().zip(d2.values()).map(|(a, b)| b + a * a).collect();
        ScalarField::from_vec_unchecked(*self.grid(), v)
    }

    /// `∫ P f dx`.
    pub fn expectation(&self, f: &ScalarField) -> Result<f64> {
        let pf = self.field.zip_map(f, |p, v| p * v)?;
        Ok(grid::quadrature(&pf))
    }

    pub fn mean_x(&self) -> f64 {
        let v: Vec<f64> = self.grid().points().zip(self.values()).map(|(x, p)| x * p).collect();
        grid::trapezoid(&v, self.grid().dx())
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean_x();
        let v: Vec<f64> = self
            .grid()
            .points()
            .zip(self.values())
            .map(|(x, p)| (x - mu) * (x - mu) * p)
            .collect();
        grid::trapezoid(&v, self.grid().dx())
    }

    pub fn mass(&self) -> f64 {
        grid::quadrature(&self.field)
    }
}

/// Normalizes raw nonnegative samples into a [`Density`].
pub fn density_from_samples(raw: &ScalarField, check: TruncationCheck) -> Result<Density> {
    Density::from_samples(raw, check)
}

/// Gibbs density `exp(-gamma E)/Z`; returns the density and `Z`.
pub fn gibbs_density(
    energy: &ScalarField,
    gamma: f64,
    check: TruncationCheck,
) -> Result<(Density, f64)> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be >= 0, got {gamma}")));
    }
    exponential_family(energy, gamma, check)
}

/// `exp(-a f)/Z` for any finite `a`, with the exponent shifted for stability.
pub(crate) fn exponential_family(
    f: &ScalarField,
    a: f64,
    check: TruncationCheck,
) -> Result<(Density, f64)> {
    let shift = f
        .values()
        .iter()
        .map(|&v| -a * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = f.values().iter().map(|&v| (-a * v - shift).exp()).collect();
    let z_shifted = grid::trapezoid(&weights, f.grid().dx());
    if !(z_shifted > 0.0 && z_shifted.is_finite()) {
        return Err(Error::ZeroMass(z_shifted));
    }
    let z = z_shifted * shift.exp();
    let p: Vec<f64> = weights.iter().map(|w| w / z_shifted).collect();
    let density = Density::from_normalized(ScalarField::from_vec_unchecked(*f.grid(), p), check)?;
    Ok((density, z))
}

/// Density coupled to a heat field, `P = c_hat exp(-alpha_th Q)`; returns `(P, c_hat)`.
pub fn density_from_heat(
    heat: &ScalarField,
    alpha_th: f64,
    check: TruncationCheck,
) -> Result<(Density, f64)> {
    if !(alpha_th.is_finite() && alpha_th > 0.0) {
        return Err(Error::InvalidInput(format!("alpha_th must be > 0, got {alpha_th}")));
    }
    let (density, z) = exponential_family(heat, alpha_th, check)?;
    Ok((density, 1.0 / z))
}

/// Amplitude/phase decomposition `psi = sqrt(P) exp(i S / hbar)`.
#[derive(Debug, Clone)]
pub struct MadelungState {
    density: Density,
    phase: ScalarField,
    constants: PhysicalConstants,
    psi: Vec<Complex64>,
    global_phase: f64,
}

impl MadelungState {
    pub fn density(&self) -> &Density {
        &self.density
    }

    /// The action `S` (same units as `hbar`).
    pub fn phase(&self) -> &ScalarField {
        &self.phase
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn grid(&self) -> &Grid {
        self.density.grid()
    }

    /// Normalized wavefunction samples the state was built from.
    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    /// `sqrt(P) exp(i S/hbar)` rebuilt from the stored density and phase,
    /// times the constant phase factor removed by the gauge choice for `S`.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let hbar = self.constants.hbar;
        self.density
            .values()
            .iter()
            .zip(self.phase.values())
            .map(|(&p, &s)| Complex64::from_polar(p.sqrt(), s / hbar + self.global_phase))
            .collect()
    }

    /// Constant phase (radians) separating the input wavefunction from `sqrt(P) exp(i S/hbar)`.
    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    /// Momentum field `p = S'`, evaluated on the support.
    pub fn momentum(&self) -> ScalarField {
        grid::masked_derivative(&self.phase, self.density.support_mask())
    }

    /// Builds a state from a real density and a phase field without a wavefunction input.
    pub fn from_density_and_phase(
        density: Density,
        phase: ScalarField,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        constants.validate()?;
        if density.grid() != phase.grid() {
            return Err(Error::GridMismatch);
        }
        let mut s = Self {
            density,
            phase,
            constants,
            psi: Vec::new(),
            global_phase: 0.0,
        };
        s.psi = s.reconstruct();
        Ok(s)
    }

    /// Like [`madelung_from_wavefunction`] but, when `reference` is given, the
    /// phase keeps the reference's gauge and is unwrapped against its phase at
    /// the pinning node instead of being set to zero there.
    pub fn from_wavefunction(
        grid: Grid,
        psi: &[Complex64],
        constants: PhysicalConstants,
        check: TruncationCheck,
        reference: Option<&MadelungState>,
    ) -> Result<Self> {
        constants.validate()?;
        if psi.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: psi.len(),
            });
        }
        if let Some(r) = reference {
            if r.grid() != &grid {
                return Err(Error::GridMismatch);
            }
        }
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("wavefunction sample".into()));
        }
        let raw = ScalarField::from_vec_unchecked(grid, psi.iter().map(|z| z.norm_sqr()).collect());
        let dx = grid.dx();
        let norm = grid::trapezoid(raw.values(), dx);
        let density = Density::from_samples(&raw, check)?;
        let scale = 1.0 / norm.sqrt();
        let psi: Vec<Complex64> = psi.iter().map(|z| z * scale).collect();

        let runs = grid::support_runs(density.support_mask());
        if runs.len() > 1 {
            return Err(Error::NodeOnSupport {
                index: runs[0].end,
            });
        }
        let run = runs[0].clone();
        let hbar = constants.hbar;
        let center = grid.center_index().clamp(run.start, run.end - 1);

        let mut theta = vec![0.0; grid.len()];
        let pin = psi[center].arg();
        let global_phase = match reference {
            Some(r) => {
                let target = r.phase.values()[center] / hbar;
                let raw = pin - r.global_phase;
                theta[center] = raw + 2.0 * PI * ((target - raw) / (2.0 * PI)).round();
                r.global_phase
            }
            None => pin,
        };
        let unwrap_step = |from: usize, to: usize, theta: &mut [f64]| -> Result<()> {
            let d = wrap(psi[to].arg() - psi[from].arg());
            if d.abs() >= 0.5 * PI {
                return Err(Error::NodeOnSupport { index: to });
            }
            theta[to] = theta[from] + d;
            Ok(())
        };
        for j in center + 1..run.end {
            unwrap_step(j - 1, j, &mut theta)?;
        }
        for j in (run.start..center).rev() {
            unwrap_step(j + 1, j, &mut theta)?;
        }
        // Outside the support the phase is held at the nearest supported value.
        for j in 0..run.start {
            theta[j] = theta[run.start];
        }
        for j in run.end..grid.len() {
            theta[j] = theta[run.end - 1];
        }
        let phase = ScalarField::from_vec_unchecked(grid, theta.iter().map(|t| hbar * t).collect());
        Ok(Self {
            density,
            phase,
            constants,
            psi,
            global_phase,
        })
    }
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Madelung decomposition of `psi = re + i im` with the phase pinned to zero at the grid center.
pub fn madelung_from_wavefunction(
    re: &ScalarField,
    im: &ScalarField,
    constants: PhysicalConstants,
    check: TruncationCheck,
) -> Result<MadelungState> {
    re.check_same_grid(im)?;
    let psi: Vec<Complex64> = re
        .values()
        .iter()
        .zip(im.values())
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    MadelungState::from_wavefunction(*re.grid(), &psi, constants, check, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a: f64, b: f64, n: usize) -> Grid {
        Grid::new(a, b, n).unwrap()
    }

    fn normal_pdf(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn constants_derived_quantities() {
        let c = PhysicalConstants::thermal(2.0, 0.5, 3.0, 1.5).unwrap();
        assert!((c.beta() - c.alpha_th()).abs() < 1e-15);
        assert!((c.diffusivity() - 2.0).abs() < 1e-15);
        assert!(PhysicalConstants::new(1.0, 1.0, 1.0, 1.0, 2.0, true).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, 1.0, 1.0, 2.0, false).is_ok());
        assert!(PhysicalConstants::new(-1.0, 1.0, 1.0, 1.0, 1.0, false).is_err());
    }

    #[test]
    fn constant_density_fails_truncation_by_default() {
        let raw = ScalarField::constant(g(0.0, 1.0, 11), 1.0);
        assert!(matches!(
            density_from_samples(&raw, TruncationCheck::Enforce),
            Err(Error::TruncationError { .. })
        ));
        let d = density_from_samples(&raw, TruncationCheck::Skip).unwrap();
        assert!(d.values().iter().all(|&p| (p - 1.0).abs() < 1e-15));
    }

    #[test]
    fn gaussian_samples_normalize_to_standard_normal() {
        let raw = ScalarField::from_fn(g(-8.0, 8.0, 4097), |x| (-0.5 * x * x).exp()).unwrap();
        let d = density_from_samples(&raw, TruncationCheck::Enforce).unwrap();
        for (x, p) in d.grid().points().zip(d.values()) {
            assert!((p - normal_pdf(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        let grid = g(0.0, 1.0, 5);
        let zero = ScalarField::zeros(grid);
        assert!(matches!(
            density_from_samples(&zero, TruncationCheck::Skip),
            Err(Error::ZeroMass(_))
        ));
        let neg = ScalarField::new(grid, vec![0.0, 1.0, -1e-3, 1.0, 0.0]).unwrap();
        assert!(matches!(
            density_from_samples(&neg, TruncationCheck::Skip),
            Err(Error::NegativeDensity { index: 2, .. })
        ));
        let tiny = ScalarField::new(grid, vec![-1e-15, 1.0, 2.0, 1.0, 0.0]).unwrap();
        let d = density_from_samples(&tiny, TruncationCheck::Skip).unwrap();
        assert_eq!(d.values()[0], 0.0);
    }

    #[test]
    fn gibbs_density_of_harmonic_energy() {
        let grid = g(-8.0, 8.0, 4097);
        let e = ScalarField::from_fn(grid, |x| 0.5 * x * x).unwrap();
        let (d, z) = gibbs_density(&e, 1.0, TruncationCheck::Enforce).unwrap();
        assert!((z - (2.0 * PI).sqrt()).abs() < 1e-6);
        assert!((d.values()[grid.center_index()] - normal_pdf(0.0)).abs() < 1e-12);
        let (narrow, _) = gibbs_density(&e, 4.0, TruncationCheck::Enforce).unwrap();
        assert!((narrow.variance() - 0.25).abs() < 1e-10);
        let flat = ScalarField::constant(grid, 2.0);
        assert!(matches!(
            gibbs_density(&flat, 1.0, TruncationCheck::Enforce),
            Err(Error::TruncationError { .. })
        ));
        assert!(gibbs_density(&e, -1.0, TruncationCheck::Enforce).is_err());
    }

    #[test]
    fn heat_coupled_density() {
        let grid = g(-8.0, 8.0, 4097);
        let q = ScalarField::from_fn(grid, |x| x * x).unwrap();
        let (d, c_hat) = density_from_heat(&q, 0.5, TruncationCheck::Enforce).unwrap();
        assert!((c_hat - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-12);
        // P'/P = -alpha Q' = -x
        let score = d.score();
        for (j, x) in grid.points().enumerate() {
            if d.support_mask()[j] {
                assert!((score.values()[j] + x).abs() < 1e-8);
            }
        }
        assert!(matches!(
            density_from_heat(&ScalarField::zeros(grid), 0.5, TruncationCheck::Enforce),
            Err(Error::TruncationError { .. })
        ));
    }

    #[test]
    fn madelung_of_plane_wave_gaussian() {
        let grid = g(-8.0, 8.0, 2049);
        let re = ScalarField::from_fn(grid, |x| (-x * x / 4.0).exp() * x.cos()).unwrap();
        let im = ScalarField::from_fn(grid, |x| (-x * x / 4.0).exp() * x.sin()).unwrap();
        let s = madelung_from_wavefunction(&re, &im, PhysicalConstants::default(), TruncationCheck::Enforce)
            .unwrap();
        for (j, x) in grid.points().enumerate() {
            assert!((s.density().values()[j] - normal_pdf(x)).abs() < 1e-9);
            if s.density().support_mask()[j] {
                assert!((s.phase().values()[j] - x).abs() < 1e-9, "x={x}");
            }
        }
        let back = s.reconstruct();
        for (j, (a, b)) in back.iter().zip(s.psi()).enumerate() {
            if s.density().support_mask()[j] {
                assert!((a - b).norm() < 1e-9);
            }
        }
        // a constant phase offset survives the round trip
        let shifted: Vec<Complex64> = s.psi().iter().map(|z| z * Complex64::from_polar(1.0, 2.5)).collect();
        let s2 = MadelungState::from_wavefunction(grid, &shifted, PhysicalConstants::default(), TruncationCheck::Enforce, None)
            .unwrap();
        assert_eq!(s2.phase().values()[grid.center_index()], 0.0);
        for (j, (a, b)) in s2.reconstruct().iter().zip(&shifted).enumerate() {
            if s2.density().support_mask()[j] {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn real_positive_wavefunction_has_zero_phase() {
        let grid = g(-8.0, 8.0, 513);
        let re = ScalarField::from_fn(grid, |x| (-x * x / 2.0).exp()).unwrap();
        let s = madelung_from_wavefunction(&re, &ScalarField::zeros(grid), PhysicalConstants::default(), TruncationCheck::Enforce)
            .unwrap();
        assert!(s.phase().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn interior_node_is_detected() {
        // node exactly on a grid point
        let grid = g(-8.0, 8.0, 513);
        let re = ScalarField::from_fn(grid, |x| x * (-x * x / 2.0).exp()).unwrap();
        let im = ScalarField::zeros(grid);
        let c = PhysicalConstants::default();
        assert!(matches!(
            madelung_from_wavefunction(&re, &im, c, TruncationCheck::Enforce),
            Err(Error::NodeOnSupport { .. })
        ));
        // node between grid points: sin(2x) on [0, pi] with decaying tails
        let grid = g(-3.0, 3.0 + PI, 1001);
        let psi = |x: f64| {
            if (0.0..=PI).contains(&x) {
                (2.0 * x).sin()
            } else if x < 0.0 {
                2.0 * x * (-4.0 * x * x).exp()
            } else {
                -2.0 * (x - PI) * (-4.0 * (x - PI).powi(2)).exp()
            }
        };
        let re = ScalarField::from_fn(grid, psi).unwrap();
        assert!(matches!(
            madelung_from_wavefunction(&re, &ScalarField::zeros(grid), c, TruncationCheck::Skip),
            Err(Error::NodeOnSupport { .. })
        ));
    }

    #[test]
    fn phase_follows_reference_branch() {
        let grid = g(-8.0, 8.0, 257);
        let psi: Vec<Complex64> = grid
            .points()
            .map(|x| Complex64::from_polar((-x * x / 4.0).exp(), 0.3))
            .collect();
        let c = PhysicalConstants::default();
        let first = MadelungState::from_wavefunction(grid, &psi, c, TruncationCheck::Enforce, None).unwrap();
        assert_eq!(first.phase().values()[128], 0.0);
        let lifted = MadelungState::from_density_and_phase(
            first.density().clone(),
            first.phase().map(|v| v + 4.0 * PI).unwrap(),
            c,
        )
        .unwrap();
        let lifted = MadelungState { global_phase: first.global_phase(), ..lifted };
        let later: Vec<Complex64> = psi.iter().map(|z| z * Complex64::from_polar(1.0, 0.1)).collect();
        let s = MadelungState::from_wavefunction(grid, &later, c, TruncationCheck::Enforce, Some(&lifted)).unwrap();
        assert!((s.phase().values()[128] - (0.1 + 4.0 * PI)).abs() < 1e-12);
        for (a, b) in s.reconstruct().iter().zip(s.psi()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
