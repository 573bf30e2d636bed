//! Crank–Nicolson evolution of the Schrödinger equation on a Dirichlet box and
//! the dynamical residuals built on the resulting trajectories.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::differential_entropy;
use crate::grid::{self, Grid, ScalarField};
use crate::linalg::solve_tridiagonal;
use crate::states::{MadelungState, PhysicalConstants, TruncationCheck};

/// Largest `|psi|^2` tolerated next to a wall.
pub const BOUNDARY_THRESHOLD: f64 = 1e-10;

/// One Crank–Nicolson stepper for a fixed grid, potential and time step.
///
/// The potential value at the grid center is split off and applied as an
/// exact global phase, so shifting `V` by a constant changes nothing but that phase.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    constants: PhysicalConstants,
    dt: f64,
    v_ref: f64,
    sub: Vec<Complex64>,
    diag: Vec<Complex64>,
    sup: Vec<Complex64>,
    // explicit half step: coefficients of (1 - i a H')
    e_diag: Vec<Complex64>,
    e_off: Complex64,
}

impl Propagator {
    /// `dt` may be negative (backward evolution); `|dt| <= dx` is required.
    pub fn new(potential: &ScalarField, constants: PhysicalConstants, dt: f64) -> Result<Self> {
        constants.validate()?;
        let grid = *potential.grid();
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidInput(format!("time step must be nonzero, got {dt}")));
        }
        if dt.abs() > grid.dx() {
            return Err(Error::InvalidInput(format!(
                "time step {dt} exceeds the accuracy guard dt <= dx = {}",
                grid.dx()
            )));
        }
        let n = grid.len();
        if n < 5 {
            return Err(Error::InvalidGrid("propagation needs at least 5 points".into()));
        }
        let v_ref = potential.values()[grid.center_index()];
        let c = constants.hbar * constants.hbar / (2.0 * constants.mass * grid.dx() * grid.dx());
        let a = Complex64::new(0.0, dt / (2.0 * constants.hbar));
        let interior = &potential.values()[1..n - 1];
        let h_diag: Vec<f64> = interior.iter().map(|v| 2.0 * c + (v - v_ref)).collect();
        let one = Complex64::new(1.0, 0.0);
        let diag: Vec<Complex64> = h_diag.iter().map(|&h| one + a * h).collect();
        let e_diag: Vec<Complex64> = h_diag.iter().map(|&h| one - a * h).collect();
        let off = a * (-c);
        let m = n - 2;
        let mut sub = vec![off; m];
        let mut sup = vec![off; m];
        sub[0] = Complex64::new(0.0, 0.0);
        sup[m - 1] = Complex64::new(0.0, 0.0);
        Ok(Self {
            grid,
            constants,
            dt,
            v_ref,
            sub,
            diag,
            sup,
            e_diag,
            e_off: -off,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// One step in place. Endpoint samples are forced to zero.
    pub fn step(&self, psi: &mut [Complex64]) {
        let n = psi.len();
        let m = n - 2;
        let inner = &psi[1..n - 1];
        let mut rhs = Vec::with_capacity(m);
        for k in 0..m {
            let mut r = self.e_diag[k] * inner[k];
            if k > 0 {
                r += self.e_off * inner[k - 1];
            }
            if k + 1 < m {
                r += self.e_off * inner[k + 1];
            }
            rhs.push(r);
        }
        let next = solve_tridiagonal(&self.sub, &self.diag, &self.sup, &rhs);
        let phase = Complex64::from_polar(1.0, -self.v_ref * self.dt / self.constants.hbar);
        psi[0] = Complex64::new(0.0, 0.0);
        psi[n - 1] = Complex64::new(0.0, 0.0);
        for (dst, v) in psi[1..n - 1].iter_mut().zip(next) {
            *dst = v * phase;
        }
    }

    /// `steps` steps with a wall-contact check after each; `step_offset` only labels errors.
    pub fn advance(&self, psi: &mut [Complex64], steps: usize, step_offset: usize) -> Result<()> {
        check_boundary(psi, step_offset)?;
        for s in 1..=steps {
            self.step(psi);
            check_boundary(psi, step_offset + s)?;
        }
        Ok(())
    }
}

fn check_boundary(psi: &[Complex64], step: usize) -> Result<()> {
    let n = psi.len();
    let edge = [psi[0], psi[1], psi[n - 2], psi[n - 1]]
        .iter()
        .map(|z| z.norm_sqr())
        .fold(0.0, f64::max);
    if edge > BOUNDARY_THRESHOLD {
        return Err(Error::BoundaryContact { step, value: edge });
    }
    Ok(())
}

/// `dx * sum |psi|^2`.
pub fn norm(psi: &[Complex64], dx: f64) -> f64 {
    let v: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    grid::trapezoid(&v, dx)
}

/// `<psi|H|psi> / <psi|psi>` for the discrete Hamiltonian used by [`Propagator`].
pub fn energy(psi: &[Complex64], potential: &ScalarField, constants: &PhysicalConstants) -> f64 {
    let g = potential.grid();
    let n = g.len();
    let c = constants.hbar * constants.hbar / (2.0 * constants.mass * g.dx() * g.dx());
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 1..n - 1 {
        let h = -c * (psi[j - 1] - 2.0 * psi[j] + psi[j + 1]) + potential.values()[j] * psi[j];
        num += (psi[j].conj() * h).re;
        den += psi[j].norm_sqr();
    }
    num / den
}

/// States sampled at `t0 + k dt`, all sharing one potential.
#[derive(Debug, Clone)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    states: Vec<MadelungState>,
    potential: ScalarField,
}

impl Trajectory {
    /// Builds a trajectory from wavefunction samples; phases are unwrapped against the previous state.
    pub fn from_wavefunctions(
        t0: f64,
        dt: f64,
        psis: &[Vec<Complex64>],
        potential: ScalarField,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        let grid = *potential.grid();
        let mut states: Vec<MadelungState> = Vec::with_capacity(psis.len());
        for psi in psis {
            let s = MadelungState::from_wavefunction(
                grid,
                psi,
                constants,
                TruncationCheck::Enforce,
                states.last(),
            )?;
            states.push(s);
        }
        Ok(Self {
            t0,
            dt,
            states,
            potential,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|k| self.t0 + k as f64 * self.dt).collect()
    }

    pub fn states(&self) -> &[MadelungState] {
        &self.states
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn interior(&self, index: usize) -> Result<(&MadelungState, &MadelungState, &MadelungState)> {
        if self.states.len() < 3 || index == 0 || index + 1 >= self.states.len() {
            return Err(Error::TimeIndex {
                index,
                max: self.states.len().saturating_sub(2),
            });
        }
        Ok((&self.states[index - 1], &self.states[index], &self.states[index + 1]))
    }
}

/// Evolves `initial` for `steps` steps and records every state.
pub fn evolve(
    initial: &MadelungState,
    potential: &ScalarField,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    evolve_from(initial.psi(), 0.0, potential, *initial.constants(), dt, steps, 1)
}

/// Evolves raw samples and records every `record_every`-th state (the first is always kept).
pub fn evolve_from(
    psi0: &[Complex64],
    t0: f64,
    potential: &ScalarField,
    constants: PhysicalConstants,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<Trajectory> {
    let grid = *potential.grid();
    if psi0.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            found: psi0.len(),
        });
    }
    let record_every = record_every.max(1);
    let prop = Propagator::new(potential, constants, dt)?;
    let mut psi = psi0.to_vec();
    check_boundary(&psi, 0)?;
    let n = psi.len();
    psi[0] = Complex64::new(0.0, 0.0);
    psi[n - 1] = Complex64::new(0.0, 0.0);
    let mut frames = vec![psi.clone()];
    for s in 1..=steps {
        prop.step(&mut psi);
        check_boundary(&psi, s)?;
        if s % record_every == 0 {
            frames.push(psi.clone());
        }
    }
    Trajectory::from_wavefunctions(
        t0,
        dt * record_every as f64,
        &frames,
        potential.clone(),
        constants,
    )
}

fn residual_floor(state: &MadelungState) -> f64 {
    let c = state.constants();
    let p = state.density();
    let var = p.variance().max(f64::MIN_POSITIVE);
    1e-3 * p.field().max() * c.hbar / (c.mass * var)
}

/// Normalized max over the support of `|P_t + (1/m)(P S')'|`.
pub fn continuity_residual(traj: &Trajectory, index: usize) -> Result<f64> {
    let (prev, cur, next) = traj.interior(index)?;
    let m = cur.constants().mass;
    let p = cur.density();
    let mask = p.stencil_mask();
    let dt = traj.dt;
    let g = *p.grid();
    let s1 = cur.momentum();
    let flux = ScalarField::from_vec_unchecked(
        g,
        p.values().iter().zip(s1.values()).map(|(p, s)| p * s / m).collect(),
    );
    let dflux = grid::masked_derivative(&flux, &mask);
    let mut res: f64 = 0.0;
    let mut pt_max: f64 = 0.0;
    let mut fl_max: f64 = 0.0;
    for j in 0..g.len() {
        if !mask[j] {
            continue;
        }
        let pt = (next.density().values()[j] - prev.density().values()[j]) / (2.0 * dt);
        let d = dflux.values()[j];
        res = res.max((pt + d).abs());
        pt_max = pt_max.max(pt.abs());
        fl_max = fl_max.max(d.abs());
    }
    Ok(res / (pt_max + fl_max + residual_floor(cur)))
}

/// Normalized max over the support of `|S_t + S'^2/2m + V + Q|`, with `Q` taken
/// from the same three-point stencil the propagator uses. The normalization
/// groups `S_t + V` so that it is unaffected by a constant shift of `V`.
pub fn hj_residual(traj: &Trajectory, index: usize) -> Result<f64> {
    let (prev, cur, next) = traj.interior(index)?;
    let c = cur.constants();
    let (hbar, m) = (c.hbar, c.mass);
    let p = cur.density();
    let mask = p.stencil_mask();
    let g = *p.grid();
    let dx = g.dx();
    let r: Vec<f64> = p.values().iter().map(|v| v.sqrt()).collect();
    let r2 = grid::diff2(&r, dx);
    let s1 = cur.momentum();
    let v = traj.potential.values();
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 1..g.len() - 1 {
        if !mask[j] {
            continue;
        }
        let st = (next.phase().values()[j] - prev.phase().values()[j]) / (2.0 * traj.dt);
        let kin = s1.values()[j].powi(2) / (2.0 * m);
        let q = -(hbar * hbar / (2.0 * m)) * r2[j] / r[j];
        res = res.max((st + kin + v[j] + q).abs());
        scale = scale.max((st + v[j]).abs() + kin + q.abs());
    }
    Ok(res / scale.max(f64::MIN_POSITIVE))
}

/// Centered time difference of the entropy against `-∫ S' P'` (or `-(1/m)∫ S' P'`
/// for the probability entropy); returns `(lhs, rhs)`.
pub fn entropy_rate_check(traj: &Trajectory, index: usize, use_rho: bool) -> Result<(f64, f64)> {
    let (prev, cur, next) = traj.interior(index)?;
    let c = cur.constants();
    let lhs = (differential_entropy(next.density(), c, use_rho)
        - differential_entropy(prev.density(), c, use_rho))
        / (2.0 * traj.dt);
    Ok((lhs, entropy_rate_rhs(cur, use_rho)))
}

/// `-∫ S' P'` (mass-density entropy) or `-(1/m) ∫ S' P'` (probability entropy).
pub fn entropy_rate_rhs(state: &MadelungState, use_rho: bool) -> f64 {
    let p = state.density();
    let w = p.score();
    let s1 = state.momentum();
    let v: Vec<f64> = p
        .values()
        .iter()
        .zip(w.values())
        .zip(s1.values())
        .map(|((p, w), s)| -s * p * w)
        .collect();
    let integral = grid::masked_quadrature(&ScalarField::from_vec_unchecked(*p.grid(), v), p.support_mask());
    if use_rho {
        integral
    } else {
        integral / state.constants().mass
    }
}

/// State whose phase gradient is the osmotic velocity field, `S = -(hbar/2m) ln P`.
pub fn osmotic_state(
    density: crate::states::Density,
    constants: PhysicalConstants,
) -> Result<MadelungState> {
    let s = density.log_density().scaled(-constants.hbar / (2.0 * constants.mass));
    MadelungState::from_density_and_phase(density, s, constants)
}
