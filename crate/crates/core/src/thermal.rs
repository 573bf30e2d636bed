//! Heat field 𝒬 and its couplings: density, action fluctuation, Fick diffusion,
//! the heat equation, the thermalized quantum potential and the thermal Fisher routes.

use crate::error::{Error, Result};
use crate::functionals::{self, QPForm};
use crate::grid::{self, Grid, ScalarField};
use crate::linalg;
use crate::report::{CheckResult, Discrepancy, Tolerance};
use crate::states::{self, Density, PhysicalConstants, TruncationCheck};

/// Floor applied to `P` before taking logarithms.
const LOG_FLOOR: f64 = 1e-300;

/// Largest `dt D / dx^2` accepted by the explicit scheme.
pub const EXPLICIT_LIMIT: f64 = 0.45;

/// Allowed accumulated drift of the heat field's end slopes, relative to its largest slope.
const WALL_DRIFT_TOL: f64 = 1e-3;

/// Coupling tolerance between `P` and `ĉ exp(-alpha_th 𝒬)`, relative to `max P`.
pub const COUPLING_TOL: f64 = 1e-6;

/// Heat `𝒬` (energy units) and its dimensionless form `𝒬̃ = 𝒬 / (hbar omega)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatField {
    q_heat: ScalarField,
    q_tilde: ScalarField,
    constants: PhysicalConstants,
}

impl HeatField {
    pub fn new(q_heat: ScalarField, constants: PhysicalConstants) -> Result<Self> {
        constants.validate()?;
        let q_tilde = q_heat.scaled(constants.alpha_th());
        Ok(Self {
            q_heat,
            q_tilde,
            constants,
        })
    }

    pub fn q_heat(&self) -> &ScalarField {
        &self.q_heat
    }

    pub fn q_tilde(&self) -> &ScalarField {
        &self.q_tilde
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn grid(&self) -> &Grid {
        self.q_heat.grid()
    }

    /// The coupled density `ĉ exp(-alpha_th 𝒬)` and `ĉ`.
    pub fn density(&self, check: TruncationCheck) -> Result<(Density, f64)> {
        states::density_from_heat(&self.q_heat, self.constants.alpha_th(), check)
    }
}

/// `𝒬 = -(1/alpha_th) ln(P / P(x_center))`, so `𝒬(x_center) = 0`.
pub fn heat_from_density(p: &Density, constants: &PhysicalConstants) -> Result<HeatField> {
    let pc = p.values()[p.grid().center_index()].max(LOG_FLOOR);
    let inv = 1.0 / constants.alpha_th();
    let q = p
        .values()
        .iter()
        .map(|&v| -inv * (v.max(LOG_FLOOR) / pc).ln())
        .collect();
    HeatField::new(ScalarField::new(*p.grid(), q)?, *constants)
}

/// Action fluctuation `δS = 𝒬 / (2 omega)`.
pub fn delta_s_from_heat(hf: &HeatField) -> ScalarField {
    hf.q_heat.scaled(0.5 / hf.constants.omega)
}

/// Time integrator for the diffusion-type equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffusionScheme {
    /// Crank–Nicolson; unconditionally stable.
    #[default]
    Implicit,
    /// Forward Euler; requires `dt D / dx^2 <= EXPLICIT_LIMIT`.
    Explicit,
}

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidInput(format!("t_final must be >= 0, got {t_final}")));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(dt) {
        return Err(Error::InvalidInput(format!(
            "t_final={t_final} is not a whole number of steps dt={dt}"
        )));
    }
    Ok(steps as usize)
}

/// Second difference with ghost nodes set from prescribed end slopes `g0`, `g1`
/// (zero slopes give the homogeneous Neumann operator).
fn neumann_laplacian(v: &[f64], dx: f64, g0: f64, g1: f64) -> Vec<f64> {
    let n = v.len();
    let inv = 1.0 / (dx * dx);
    let mut out = vec![0.0; n];
    for j in 1..n - 1 {
        out[j] = (v[j + 1] - 2.0 * v[j] + v[j - 1]) * inv;
    }
    out[0] = (2.0 * v[1] - 2.0 * v[0]) * inv - 2.0 * g0 / dx;
    out[n - 1] = (2.0 * v[n - 2] - 2.0 * v[n - 1]) * inv + 2.0 * g1 / dx;
    out
}

/// One-step advancer for `u_t = D (u_xx)` with prescribed end slopes.
struct DiffusionStepper {
    scheme: DiffusionScheme,
    d: f64,
    dt: f64,
    dx: f64,
    slopes: (f64, f64),
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl DiffusionStepper {
    fn new(
        grid: &Grid,
        d: f64,
        dt: f64,
        scheme: DiffusionScheme,
        slopes: (f64, f64),
    ) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidInput(format!("diffusivity must be positive, got {d}")));
        }
        let n = grid.len();
        let dx = grid.dx();
        let r = d * dt / (dx * dx);
        if scheme == DiffusionScheme::Explicit && r > EXPLICIT_LIMIT {
            return Err(Error::InvalidInput(format!(
                "explicit scheme needs dt*D/dx^2 <= {EXPLICIT_LIMIT}, got {r}"
            )));
        }
        let mut sub = vec![-0.5 * r; n];
        let diag = vec![1.0 + r; n];
        let mut sup = vec![-0.5 * r; n];
        sup[0] = -r;
        sub[n - 1] = -r;
        Ok(Self {
            scheme,
            d,
            dt,
            dx,
            slopes,
            sub,
            diag,
            sup,
        })
    }

    fn step(&self, u: &mut Vec<f64>) {
        let (g0, g1) = self.slopes;
        let lap = neumann_laplacian(u, self.dx, g0, g1);
        match self.scheme {
            DiffusionScheme::Explicit => {
                for (v, l) in u.iter_mut().zip(&lap) {
                    *v += self.dt * self.d * l;
                }
            }
            DiffusionScheme::Implicit => {
                // The slope terms enter both half-steps, so the full source appears once.
                let rhs: Vec<f64> =
                    u.iter().zip(&lap).map(|(v, l)| v + 0.5 * self.dt * self.d * l).collect();
                let mut rhs = rhs;
                rhs[0] -= self.dt * self.d * g0 / self.dx;
                let n = rhs.len();
                rhs[n - 1] += self.dt * self.d * g1 / self.dx;
                *u = linalg::solve_tridiagonal(&self.sub, &self.diag, &self.sup, &rhs);
            }
        }
    }
}

fn density_snapshot(grid: &Grid, values: &[f64]) -> Result<Density> {
    let v: Vec<f64> = values.iter().map(|&p| p.max(0.0)).collect();
    let field = ScalarField::new(*grid, v)?;
    Density::from_normalized(field, TruncationCheck::Skip)
}

/// Evolves `P` by `P_t = D P_xx` with zero-flux walls; returns the density at every step,
/// starting with `P0`.
pub fn fick_diffuse(
    p0: &Density,
    d: f64,
    t_final: f64,
    dt: f64,
    scheme: DiffusionScheme,
) -> Result<Vec<Density>> {
    let steps = step_count(t_final, dt)?;
    let grid = *p0.grid();
    let stepper = DiffusionStepper::new(&grid, d, dt, scheme, (0.0, 0.0))?;
    let mut u = p0.values().to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(p0.clone());
    for step in 1..=steps {
        stepper.step(&mut u);
        let n = u.len();
        let wall = [u[0], u[1], u[n - 2], u[n - 1]]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if wall > crate::propagator::BOUNDARY_THRESHOLD {
            return Err(Error::BoundaryContact { step, value: wall });
        }
        out.push(density_snapshot(&grid, &u)?);
    }
    Ok(out)
}

/// Normalized residual of `P_t = -J_x` with `J = -D P_x`, using centered differences in
/// time and space at step `index` of a [`fick_diffuse`] output.
pub fn fick_current_residual(densities: &[Density], d: f64, dt: f64, index: usize) -> Result<f64> {
    if index == 0 || index + 1 >= densities.len() {
        return Err(Error::TimeIndex {
            index,
            max: densities.len().saturating_sub(2),
        });
    }
    let dx = densities[index].grid().dx();
    let current: Vec<f64> = grid::diff1(densities[index].values(), dx)
        .into_iter()
        .map(|g| -d * g)
        .collect();
    let div = grid::diff1(&current, dx);
    let (prev, next) = (densities[index - 1].values(), densities[index + 1].values());
    let n = div.len();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 2..n - 2 {
        let pt = (next[j] - prev[j]) / (2.0 * dt);
        worst = worst.max((pt + div[j]).abs());
        scale = scale.max(pt.abs()).max(div[j].abs());
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// Heat fields sampled at uniform times under `𝒬_t = D 𝒬_xx`.
#[derive(Debug, Clone)]
pub struct HeatTrajectory {
    times: Vec<f64>,
    fields: Vec<HeatField>,
    diffusivity: f64,
    slopes: (f64, f64),
}

impl HeatTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[HeatField] {
        &self.fields
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// `∇²` of `values` with the trajectory's boundary slopes, scaled by `factor`
    /// (the slopes belong to `𝒬`, so pass `alpha_th` when operating on `𝒬̃`).
    fn laplacian(&self, values: &[f64], dx: f64, factor: f64) -> Vec<f64> {
        neumann_laplacian(values, dx, factor * self.slopes.0, factor * self.slopes.1)
    }

    fn check_interior(&self, index: usize) -> Result<()> {
        if index == 0 || index + 1 >= self.fields.len() {
            return Err(Error::TimeIndex {
                index,
                max: self.fields.len().saturating_sub(2),
            });
        }
        Ok(())
    }

    /// Centered time derivative of `𝒬` at an interior index.
    pub fn time_derivative(&self, index: usize) -> Result<ScalarField> {
        self.check_interior(index)?;
        let dt = self.dt();
        let a = self.fields[index - 1].q_heat();
        let b = self.fields[index + 1].q_heat();
        b.lin_comb(0.5 / dt, a, -0.5 / dt)
    }
}

/// Fourth-order one-sided end slopes (second-order when the grid is too short).
fn end_slopes(v: &[f64], dx: f64) -> (f64, f64) {
    let n = v.len();
    if n < 5 {
        let d = grid::diff1(v, dx);
        return (d[0], d[n - 1]);
    }
    let k = [-25.0, 48.0, -36.0, 16.0, -3.0];
    let left: f64 = k.iter().zip(v).map(|(c, u)| c * u).sum();
    let right: f64 = k.iter().zip(v.iter().rev()).map(|(c, u)| c * u).sum();
    (left / (12.0 * dx), -right / (12.0 * dx))
}

/// Third derivative at both ends from four-point one-sided stencils.
fn end_third_derivatives(v: &[f64], dx: f64) -> (f64, f64) {
    let n = v.len();
    if n < 4 {
        return (0.0, 0.0);
    }
    let k = [-1.0, 3.0, -3.0, 1.0];
    let left: f64 = k.iter().zip(v).map(|(c, u)| c * u).sum();
    let right: f64 = k.iter().zip(v.iter().rev()).map(|(c, u)| c * u).sum();
    let h3 = dx * dx * dx;
    (left / h3, -right / h3)
}

/// Evolves `𝒬` by the heat equation with `D = hbar/2m`, keeping the end slopes at their
/// initial values (so affine fields are stationary).
///
/// On an unbounded line the end slopes would drift at rate `D 𝒬'''`; once the accumulated
/// drift exceeds `WALL_DRIFT_TOL` of the largest initial slope the fixed-slope closure is no
/// longer a stand-in for open space and `BoundaryContact` is returned.
pub fn heat_equation_evolve(
    hf0: &HeatField,
    t_final: f64,
    dt: f64,
    scheme: DiffusionScheme,
) -> Result<HeatTrajectory> {
    let steps = step_count(t_final, dt)?;
    let grid = *hf0.grid();
    let c = hf0.constants;
    let d = c.diffusivity();
    let dx = grid.dx();
    let slopes = end_slopes(hf0.q_heat.values(), dx);
    let stepper = DiffusionStepper::new(&grid, d, dt, scheme, slopes)?;

    let span = grid.xmax() - grid.xmin();
    let slope_scale = grid::derivative(&hf0.q_heat).max_abs() + hf0.q_heat.max_abs() / span;
    let limit = WALL_DRIFT_TOL * slope_scale.max(f64::MIN_POSITIVE);
    let mut u = hf0.q_heat.values().to_vec();
    let mut drift = (0.0f64, 0.0f64);
    let mut times = Vec::with_capacity(steps + 1);
    let mut fields = Vec::with_capacity(steps + 1);
    times.push(0.0);
    fields.push(hf0.clone());
    for step in 1..=steps {
        stepper.step(&mut u);
        let (l, r) = end_third_derivatives(&u, dx);
        drift.0 += d * dt * l.abs();
        drift.1 += d * dt * r.abs();
        let worst = drift.0.max(drift.1);
        if worst > limit {
            return Err(Error::BoundaryContact {
                step,
                value: worst / slope_scale,
            });
        }
        times.push(step as f64 * dt);
        fields.push(HeatField::new(ScalarField::new(grid, u.clone())?, c)?);
    }
    Ok(HeatTrajectory {
        times,
        fields,
        diffusivity: d,
        slopes,
    })
}

/// Normalized residual of `∇²𝒬 - (1/D) 𝒬_t` at an interior time index.
pub fn heat_equation_residual(traj: &HeatTrajectory, index: usize) -> Result<f64> {
    let qt = traj.time_derivative(index)?;
    let q = traj.fields[index].q_heat();
    let lap = traj.laplacian(q.values(), q.grid().dx(), 1.0);
    let inv_d = 1.0 / traj.diffusivity;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (l, t) in lap.iter().zip(qt.values()) {
        worst = worst.max((l - inv_d * t).abs());
        scale = scale.max(l.abs()).max((inv_d * t).abs());
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// `∇²𝒬 + (∇𝒬)^2 / (2 hbar omega)`; zero for fields with vanishing quantum potential.
pub fn vanishing_qp_residual(hf: &HeatField) -> ScalarField {
    let d1 = grid::derivative(&hf.q_heat);
    let d2 = grid::second_derivative(&hf.q_heat);
    let c = 0.5 * hf.constants.alpha_th();
    let v = d1.values().iter().zip(d2.values()).map(|(a, b)| b + c * a * a).collect();
    ScalarField::from_vec_unchecked(*hf.grid(), v)
}

/// `max |vanishing_qp_residual| / max |∇²𝒬|`.
pub fn vanishing_qp_normalized(hf: &HeatField) -> f64 {
    let r = vanishing_qp_residual(hf);
    let d2 = grid::second_derivative(&hf.q_heat);
    r.max_abs() / d2.max_abs().max(f64::MIN_POSITIVE)
}

/// `(hbar^2/4m) [∇²𝒬̃ - (1/D) 𝒬̃_t]` at an interior index of a heat trajectory.
pub fn thermalized_qp(
    traj: &HeatTrajectory,
    index: usize,
    constants: &PhysicalConstants,
) -> Result<ScalarField> {
    let qt = traj.time_derivative(index)?;
    let hf = &traj.fields[index];
    let a = hf.constants.alpha_th();
    let lap = traj.laplacian(hf.q_tilde.values(), hf.grid().dx(), a);
    let c = constants.hbar * constants.hbar / (4.0 * constants.mass);
    let inv_d = 1.0 / constants.diffusivity();
    let v = lap
        .iter()
        .zip(qt.values())
        .map(|(l, t)| c * (l - inv_d * a * t))
        .collect();
    ScalarField::new(*hf.grid(), v)
}

/// `(hbar^2/4m) ∇²𝒬̃` for a field with no time dependence.
pub fn thermalized_qp_static(hf: &HeatField, constants: &PhysicalConstants) -> ScalarField {
    let c = constants.hbar * constants.hbar / (4.0 * constants.mass);
    grid::second_derivative(&hf.q_tilde).scaled(c)
}

/// `max |thermalized_qp| / ((hbar^2/4m) max |∇²𝒬̃|)` at an interior index.
pub fn thermalized_qp_normalized(
    traj: &HeatTrajectory,
    index: usize,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let q = thermalized_qp(traj, index, constants)?;
    let hf = &traj.fields[index];
    let a = hf.constants.alpha_th();
    let lap = traj.laplacian(hf.q_tilde.values(), hf.grid().dx(), a);
    let c = constants.hbar * constants.hbar / (4.0 * constants.mass);
    let scale = c * lap.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(q.max_abs() / scale.max(f64::MIN_POSITIVE))
}

/// Which thermal Fisher formula to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum FisherRoute<'a> {
    /// `-2 alpha_th ∫ P [∇²𝒬 - (2m/hbar) 𝒬_t]`; a missing `𝒬_t` means a static field.
    Formal { dq_dt: Option<&'a ScalarField> },
    /// `beta^2 ∫ P (∇𝒬)^2`.
    Coupling,
}

/// Largest `|P - ĉ exp(-alpha_th 𝒬)|` relative to `max P`.
pub fn coupling_defect(p: &Density, hf: &HeatField) -> Result<f64> {
    p.field().check_same_grid(&hf.q_heat)?;
    let (coupled, _) = hf.density(TruncationCheck::Skip)?;
    let max = p.field().max();
    let worst = p
        .values()
        .iter()
        .zip(coupled.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(worst / max)
}

/// Thermal Fisher information of a coupled pair `(P, 𝒬)`.
pub fn thermal_fisher(
    p: &Density,
    hf: &HeatField,
    constants: &PhysicalConstants,
    route: FisherRoute<'_>,
) -> Result<f64> {
    let defect = coupling_defect(p, hf)?;
    if !(defect <= COUPLING_TOL) {
        return Err(Error::DecoupledInputs(defect));
    }
    let mask = p.stencil_mask();
    match route {
        FisherRoute::Coupling => {
            let g = grid::masked_derivative(&hf.q_heat, &mask);
            let beta = constants.beta();
            let v: Vec<f64> = p.values().iter().zip(g.values()).map(|(p, g)| p * g * g).collect();
            Ok(beta * beta * grid::trapezoid(&v, p.grid().dx()))
        }
        FisherRoute::Formal { dq_dt } => {
            let lap = grid::masked_second_derivative(&hf.q_heat, &mask);
            let k = 2.0 * constants.mass / constants.hbar;
            let mut v: Vec<f64> = p.values().iter().zip(lap.values()).map(|(p, l)| p * l).collect();
            if let Some(qt) = dq_dt {
                qt.check_same_grid(&hf.q_heat)?;
                for ((v, p), t) in v.iter_mut().zip(p.values()).zip(qt.values()) {
                    *v -= k * p * t;
                }
            }
            Ok(-2.0 * constants.alpha_th() * grid::trapezoid(&v, p.grid().dx()))
        }
    }
}

/// Settings for [`coherence_suite`].
#[derive(Debug, Clone, Copy)]
pub struct CoherenceOptions {
    /// Length of the heat-equation run used by the time-dependent items.
    pub horizon: f64,
    pub dt: f64,
    pub check: TruncationCheck,
}

impl Default for CoherenceOptions {
    fn default() -> Self {
        Self {
            horizon: 0.1,
            dt: 1e-3,
            check: TruncationCheck::Enforce,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoherenceReport {
    pub checks: Vec<CheckResult>,
    pub discrepancies: Vec<Discrepancy>,
}

fn masked_ratio(num: &[f64], den: &[f64], mask: &[bool]) -> f64 {
    grid::masked_max_abs(num, mask) / grid::masked_max_abs(den, mask).max(f64::MIN_POSITIVE)
}

/// Builds `P` from `𝒬` and checks the chain of thermal identities linking them.
pub fn coherence_suite(
    hf: &HeatField,
    constants: &PhysicalConstants,
    opts: &CoherenceOptions,
) -> Result<CoherenceReport> {
    let c = constants;
    let beta = c.beta();
    let (p0, c0) = hf.density(opts.check)?;
    let mask = p0.stencil_mask();
    let dx = hf.grid().dx();
    let mut checks = Vec::new();
    let mut discrepancies = Vec::new();

    // (1) density ratio along a heat-equation run, normalization refit at each time.
    let traj = heat_equation_evolve(hf, opts.horizon, opts.dt, DiffusionScheme::Implicit)?;
    let last = traj.fields.last().expect("trajectory has the initial field");
    let (pt, ct) = last.density(TruncationCheck::Skip)?;
    let mask_t: Vec<bool> = mask
        .iter()
        .zip(pt.stencil_mask())
        .map(|(a, b)| *a && b)
        .collect();
    let shift = (ct / c0).ln();
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for j in 0..mask_t.len() {
        if !mask_t[j] {
            continue;
        }
        let dq = last.q_heat.values()[j] - hf.q_heat.values()[j];
        let lhs = (pt.values()[j] / p0.values()[j]).ln();
        worst = worst.max((lhs - (-beta * dq + shift)).abs());
        scale = scale.max((beta * dq).abs());
    }
    checks.push(CheckResult::bound("coherence-density-ratio", worst, 1e-3));

    // (2) Δ𝒬 = 2 omega Δ(δS).
    let ds0 = delta_s_from_heat(hf);
    let ds1 = delta_s_from_heat(last);
    let dq = last.q_heat.lin_comb(1.0, &hf.q_heat, -1.0)?;
    let dds = ds1.lin_comb(2.0 * c.omega, &ds0, -2.0 * c.omega)?;
    let diff = dq.lin_comb(1.0, &dds, -1.0)?;
    let all = vec![true; dq.len()];
    let rel = masked_ratio(diff.values(), dq.values(), &all);
    checks.push(CheckResult::bound("coherence-heat-action", if scale > 0.0 { rel } else { diff.max_abs() }, 1e-12));

    // (3) δp = ∇δS = -(hbar/2) P'/P and P'/P = -beta ∇𝒬.
    let score = p0.score();
    let fluct = functionals::fluctuation_report(&p0, c);
    let grad_ds = grid::masked_derivative(&ds0, &mask);
    let grad_q = grid::masked_derivative(&hf.q_heat, &mask);
    let d1 = fluct.delta_p.lin_comb(1.0, &grad_ds, -1.0)?;
    let d2 = score.lin_comb(1.0, &grad_q, beta)?;
    let r3 = masked_ratio(d1.values(), fluct.delta_p.values(), &mask)
        .max(masked_ratio(d2.values(), score.values(), &mask));
    checks.push(CheckResult::bound("coherence-fluctuation-gradient", r3, 1e-8));

    // (4) δE_kin = (hbar^2/8m)(P'/P)^2 = (∇𝒬)^2 / (8 m omega^2).
    let ka = c.hbar * c.hbar / (8.0 * c.mass);
    let kb = 1.0 / (8.0 * c.mass * c.omega * c.omega);
    let e_a = score.map(|s| ka * s * s)?;
    let e_b = grad_q.map(|g| kb * g * g)?;
    let d4 = e_a.lin_comb(1.0, &e_b, -1.0)?;
    checks.push(CheckResult::bound(
        "coherence-kinetic-energy",
        masked_ratio(d4.values(), e_a.values(), &mask),
        1e-10,
    ));

    // (5) ln P against -beta 𝒬 is affine with unit slope.
    let slope = regression_slope(&p0, &hf.q_heat, beta, &mask);
    checks.push(CheckResult::new("coherence-gibbs-form", slope, 1.0, 1e-9, Tolerance::Abs));

    // Closing equivalence: Gibbs-form Fisher information with gamma E = beta 𝒬.
    let route_b = thermal_fisher(&p0, hf, c, FisherRoute::Coupling)?;
    let gibbs_fi = functionals::gibbs_fisher_information(&hf.q_heat, beta);
    checks.push(CheckResult::new(
        "coherence-gibbs-equivalence",
        gibbs_fi,
        route_b,
        1e-8,
        Tolerance::Rel,
    ));

    // Gibbs-side quantum potential.
    let q_direct = functionals::quantum_potential(&p0, c, QPForm::Sqrt);
    let q_gibbs = functionals::gibbs_quantum_potential(&hf.q_heat, beta, c);
    let dq_gibbs = q_direct.lin_comb(1.0, &q_gibbs, -1.0)?;
    // Run ends use one-sided stencils on the density side and centered ones on the Gibbs side.
    let inner = grid::eroded_mask(&mask, 2);
    checks.push(CheckResult::bound(
        "coherence-gibbs-quantum-potential",
        masked_ratio(dq_gibbs.values(), q_direct.values(), &inner),
        1e-6,
    ));
    let mean_adopted = grid::masked_quadrature(&p0.field().zip_map(&q_gibbs, |p, q| p * q)?, &mask);
    discrepancies.push(Discrepancy::new(
        "gibbs-qp-sign",
        "eq5.23",
        -mean_adopted,
        mean_adopted,
        "Gibbs quantum potential written as (γħ²/8m)[γE'²-2E'']; (γħ²/8m)[2E''-γE'²] is adopted",
    ));

    // Heat/diffusion defect: P_t(Fick) + alpha P 𝒬_t = D P (P'/P)^2 for coupled pairs.
    let mid = traj.len() / 2;
    if mid >= 1 && mid + 1 < traj.len() {
        let (pm, _) = traj.fields[mid].density(TruncationCheck::Skip)?;
        let mmask = pm.stencil_mask();
        let qt = traj.time_derivative(mid)?;
        let d = c.diffusivity();
        let a = c.alpha_th();
        let fick = grid::diff2(pm.values(), dx);
        let sm = pm.score();
        let (mut worst, mut scale) = (0.0f64, 0.0f64);
        let mut coupled_rate = vec![0.0; fick.len()];
        for j in 1..fick.len() - 1 {
            if !mmask[j] {
                continue;
            }
            let p = pm.values()[j];
            let lhs = d * fick[j] + a * p * qt.values()[j];
            let rhs = d * p * sm.values()[j] * sm.values()[j];
            coupled_rate[j] = a * p * qt.values()[j];
            worst = worst.max((lhs - rhs).abs());
            scale = scale.max((d * fick[j]).abs()).max(rhs.abs());
        }
        checks.push(CheckResult::bound(
            "heat-diffusion-defect",
            worst / scale.max(f64::MIN_POSITIVE),
            1e-3,
        ));
        let integrated = grid::trapezoid(&coupled_rate, dx);
        let fi = functionals::fisher_information(&pm);
        discrepancies.push(Discrepancy::new(
            "heat-diffusion-coupling",
            "eq3R",
            integrated,
            d * fi,
            "∂tP + (P/ħω)∂t𝒬 is stated to vanish; its integral equals D·FI, so `literal` is the measured ∫(P/ħω)∂t𝒬 and `adopted` is D·FI",
        ));
    }

    let route_a = thermal_fisher(&p0, hf, c, FisherRoute::Formal { dq_dt: None })?;
    discrepancies.push(Discrepancy::new(
        "thermal-fisher-routes",
        "eq3.17",
        route_a,
        route_b,
        "formal route through ∇²𝒬 differs from the coupling route by this factor",
    ));

    Ok(CoherenceReport {
        checks,
        discrepancies,
    })
}

/// `mask` with `k` nodes removed from each end of every run.
/// Least-squares slope of `ln P` against `-beta 𝒬` over the mask.
fn regression_slope(p: &Density, q: &ScalarField, beta: f64, mask: &[bool]) -> f64 {
    let pts: Vec<(f64, f64)> = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(j, _)| (-beta * q.values()[j], p.values()[j].ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        // Flat 𝒬 gives a flat density; any slope fits, report the identity value.
        return 1.0;
    }
    sxy / sxx
}
