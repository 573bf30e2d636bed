//! Maximum-entropy and extreme-Fisher-information (EPI) solvers.
//!
//! The EPI problem `δ[I - α<1> - Σ λ_i <A_i>] = 0` is solved through its
//! Schrödinger-like form `-ψ''/2 - U ψ = (α/8) ψ` with `U = Σ λ_i A_i / 8`,
//! discretized with Dirichlet walls at the grid endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::fisher_information;
use crate::grid::{self, Grid, ScalarField};
use crate::linalg;
use crate::states::{exponential_family, Density, TruncationCheck};

/// Constraint functions with either multipliers or target means (not both).
#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    pub fields: Vec<ScalarField>,
    pub multipliers: Option<Vec<f64>>,
    pub targets: Option<Vec<f64>>,
}

impl ConstraintSpec {
    pub fn with_multipliers(fields: Vec<ScalarField>, multipliers: Vec<f64>) -> Result<Self> {
        let s = Self {
            fields,
            multipliers: Some(multipliers),
            targets: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_targets(fields: Vec<ScalarField>, targets: Vec<f64>) -> Result<Self> {
        let s = Self {
            fields,
            multipliers: None,
            targets: Some(targets),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let values = match (&self.multipliers, &self.targets) {
            (Some(v), None) | (None, Some(v)) => v,
            _ => {
                return Err(Error::InvalidInput(
                    "exactly one of multipliers or targets must be given".into(),
                ))
            }
        };
        if values.len() != self.fields.len() {
            return Err(Error::InvalidInput(format!(
                "{} constraint functions but {} values",
                self.fields.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("constraint value".into()));
        }
        for w in self.fields.windows(2) {
            w[0].check_same_grid(&w[1])?;
        }
        Ok(())
    }
}

/// Solver thresholds for [`epi_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiOptions {
    /// Number of grid points next to each wall whose mass is inspected.
    pub edge_points: usize,
    /// Largest tolerated mass in those points.
    pub edge_tolerance: f64,
    /// Smallest tolerated relative gap between the two lowest eigenvalues.
    pub degeneracy_tolerance: f64,
    pub inverse_iterations: usize,
}

impl Default for EpiOptions {
    fn default() -> Self {
        Self {
            edge_points: 5,
            edge_tolerance: 1e-8,
            degeneracy_tolerance: 1e-10,
            inverse_iterations: 4,
        }
    }
}

/// Ground state of the EPI eigenproblem.
#[derive(Debug, Clone)]
pub struct EpiResult {
    pub p_i: Density,
    /// Nonnegative amplitude with `p_i = psi^2`.
    pub psi: ScalarField,
    pub alpha_norm: f64,
    pub eigenvalue: f64,
    /// Effective potential `U = Σ λ_i A_i / 8`.
    pub potential: ScalarField,
    pub fisher_i: f64,
    pub multipliers: Vec<f64>,
    pub constraints: Vec<ScalarField>,
}

impl EpiResult {
    /// `G = α_norm + Σ λ_i A_i`.
    pub fn g_field(&self) -> ScalarField {
        let v = self
            .potential
            .values()
            .iter()
            .map(|u| self.alpha_norm + 8.0 * u)
            .collect();
        ScalarField::from_vec_unchecked(*self.potential.grid(), v)
    }

    /// `<A_i>` under `p_i`.
    pub fn mean_constraint(&self, i: usize) -> f64 {
        self.p_i.expectation(&self.constraints[i]).unwrap_or(f64::NAN)
    }

    pub fn grid(&self) -> &Grid {
        self.psi.grid()
    }
}

/// Solves the multiplier-specified EPI problem on the grid of the constraint fields.
///
/// With no constraints a grid must be supplied through `grid`; otherwise it is
/// taken from the fields (and must agree with `grid` when both are present).
pub fn epi_solve(spec: &ConstraintSpec, grid: Option<Grid>, opts: &EpiOptions) -> Result<EpiResult> {
    spec.validate()?;
    let multipliers = spec.multipliers.clone().ok_or_else(|| {
        Error::InvalidInput("EPI problems must be specified through multipliers".into())
    })?;
    let g = match (spec.fields.first(), grid) {
        (Some(f), Some(g)) if *f.grid() != g => return Err(Error::GridMismatch),
        (Some(f), _) => *f.grid(),
        (None, Some(g)) => g,
        (None, None) => return Err(Error::InvalidInput("no grid for an unconstrained problem".into())),
    };
    let n = g.len();
    if n < 5 {
        return Err(Error::InvalidGrid("EPI needs at least 5 points".into()));
    }
    let mut u = vec![0.0; n];
    for (a, lam) in spec.fields.iter().zip(&multipliers) {
        for (uj, aj) in u.iter_mut().zip(a.values()) {
            *uj += lam * aj / 8.0;
        }
    }
    let dx = g.dx();
    let inv = 1.0 / (dx * dx);
    let diag: Vec<f64> = u[1..n - 1].iter().map(|uj| inv - uj).collect();
    let off = vec![-0.5 * inv; n - 3];
    let e0 = linalg::tridiagonal_eigenvalue(&diag, &off, 0)?;
    let e1 = linalg::tridiagonal_eigenvalue(&diag, &off, 1)?;
    let gap = e1 - e0;
    let shift = e0 - 1e-6 * gap.max(1e-12 * (1.0 + e0.abs()));
    let v = linalg::inverse_iteration(&diag, &off, shift, opts.inverse_iterations);

    let mut psi = vec![0.0; n];
    for (dst, x) in psi[1..n - 1].iter_mut().zip(&v) {
        *dst = x.abs();
    }
    let norm = grid::trapezoid(&psi.iter().map(|x| x * x).collect::<Vec<_>>(), dx);
    psi.iter_mut().for_each(|x| *x /= norm.sqrt());

    let constrained = multipliers.iter().any(|&l| l != 0.0);
    if constrained {
        let k = opts.edge_points.min(n / 2);
        let edge: f64 = psi[..k].iter().chain(&psi[n - k..]).map(|x| x * x).sum::<f64>() * dx;
        if edge > opts.edge_tolerance {
            return Err(Error::EdgeLocalized { edge_mass: edge });
        }
    }
    if gap < opts.degeneracy_tolerance * e0.abs().max(e1.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateGround { e0, e1 });
    }

    let p = ScalarField::from_vec_unchecked(g, psi.iter().map(|x| x * x).collect());
    let p_i = Density::from_normalized(p, TruncationCheck::Enforce)?;
    let fisher_i = fisher_information(&p_i);
    Ok(EpiResult {
        p_i,
        psi: ScalarField::from_vec_unchecked(g, psi),
        alpha_norm: 8.0 * e0,
        eigenvalue: e0,
        potential: ScalarField::from_vec_unchecked(g, u),
        fisher_i,
        multipliers,
        constraints: spec.fields.clone(),
    })
}

/// Euler–Lagrange residual `2p'' - (p')^2/p + G p`, masked max normalized by max `|G p|`.
pub fn euler_lagrange_residual(result: &EpiResult) -> f64 {
    let p = &result.p_i;
    let mask = p.stencil_mask();
    let w = p.score();
    let curv = p.curvature_ratio();
    let g = result.g_field();
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..mask.len() {
        if !mask[j] {
            continue;
        }
        let pj = p.values()[j];
        let gp = g.values()[j] * pj;
        res = res.max((pj * (2.0 * curv.values()[j] - w.values()[j].powi(2)) + gp).abs());
        scale = scale.max(gp.abs());
    }
    res / scale.max(f64::MIN_POSITIVE)
}

/// `v' + v^2 + G/4` with `v = (ln ψ)'`, on the support of `p_i` (zero elsewhere).
pub fn riccati_residual_field(result: &EpiResult) -> ScalarField {
    let p = &result.p_i;
    let mask = p.stencil_mask();
    let v = p.score().scaled(0.5);
    let dv = grid::masked_derivative(&v, &mask);
    let g = result.g_field();
    let r = (0..mask.len())
        .map(|j| {
            if mask[j] {
                dv.values()[j] + v.values()[j].powi(2) + 0.25 * g.values()[j]
            } else {
                0.0
            }
        })
        .collect();
    ScalarField::from_vec_unchecked(*p.grid(), r)
}

/// Masked max of the Riccati residual.
pub fn riccati_check(result: &EpiResult) -> f64 {
    riccati_residual_field(result).max_abs()
}

/// Fisher information in amplitude form, `4 Σ (ψ_{j+1} - ψ_j)^2 / dx`, with `ψ = sqrt(p)`.
///
/// This is the quadratic form of the discretized kinetic operator, so the EPI
/// ground state is an exact stationary point of the discrete objective built from it.
pub fn amplitude_fisher(p: &ScalarField) -> f64 {
    let dx = p.grid().dx();
    let psi: Vec<f64> = p.values().iter().map(|v| v.max(0.0).sqrt()).collect();
    4.0 * psi.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / dx
}

/// `I[p] - α ∫p - Σ λ_i ∫ A_i p` with `I` in amplitude form.
pub fn epi_objective(result: &EpiResult, p: &ScalarField) -> Result<f64> {
    p.check_same_grid(&result.psi)?;
    let mass = grid::quadrature(p);
    let mut obj = amplitude_fisher(p) - result.alpha_norm * mass;
    for (a, lam) in result.constraints.iter().zip(&result.multipliers) {
        let ap = a.zip_map(p, |a, p| a * p)?;
        obj -= lam * grid::quadrature(&ap);
    }
    Ok(obj)
}

/// Result of [`epi_quantum_potential_check`].
#[derive(Debug, Clone, Copy)]
pub struct EpiQpCheck {
    /// Masked max `|Q - (c λ A + gauge)|`.
    pub maxdev: f64,
    /// Masked max `|Q|`.
    pub q_scale: f64,
    /// `∫ p_I Q`.
    pub mean_lhs: f64,
    /// `c λ <A> + gauge`.
    pub mean_rhs: f64,
    /// Additive constant minimizing `maxdev`.
    pub gauge: f64,
    /// Slope coefficient `c` used in front of `λ A`.
    pub coefficient: f64,
    /// Least-squares slope of `Q` against `λ A` over the mask, independent of `c`.
    pub fitted_coefficient: f64,
}

/// Compares the quantum potential of `p_I` with an affine image of the single
/// constraint, `Q ≈ coefficient · λ A + gauge`.
///
/// `coefficient` is `hbar^2/8m` for the stationarity condition derived from the
/// eigenproblem; the gauge constant is the minimax fit over the support.
pub fn epi_quantum_potential_check(
    result: &EpiResult,
    constants: &crate::states::PhysicalConstants,
    coefficient: f64,
) -> Result<EpiQpCheck> {
    if result.constraints.len() != 1 {
        return Err(Error::InvalidInput("needs exactly one constraint".into()));
    }
    let p = &result.p_i;
    let q = crate::functionals::quantum_potential(p, constants, crate::functionals::QPForm::Sqrt);
    let a = &result.constraints[0];
    let lam = result.multipliers[0];
    let mask = p.stencil_mask();
    let diffs: Vec<f64> = (0..mask.len())
        .filter(|&j| mask[j])
        .map(|j| q.values()[j] - coefficient * lam * a.values()[j])
        .collect();
    let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    let gauge = 0.5 * (hi + lo);
    let maxdev = 0.5 * (hi - lo);
    let pts: Vec<(f64, f64)> = (0..mask.len())
        .filter(|&j| mask[j])
        .map(|j| (lam * a.values()[j], q.values()[j]))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let fitted_coefficient = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let pq = p.field().zip_map(&q, |p, q| p * q)?;
    let mean_lhs = grid::masked_quadrature(&pq, p.support_mask());
    let mean_rhs = coefficient * lam * p.expectation(a)? + gauge;
    Ok(EpiQpCheck {
        maxdev,
        q_scale: grid::masked_max_abs(q.values(), &mask),
        mean_lhs,
        mean_rhs,
        gauge,
        coefficient,
        fitted_coefficient,
    })
}

/// Maximum-entropy density for one mean constraint.
#[derive(Debug, Clone)]
pub struct MaxEntResult {
    pub density: Density,
    pub alpha_gibbs: f64,
    pub z: f64,
}

const MAX_DOUBLINGS: usize = 200;

fn mean_under(a: &ScalarField, alpha: f64) -> Result<f64> {
    let (d, _) = exponential_family(a, alpha, TruncationCheck::Skip)?;
    d.expectation(a)
}

/// Finds `α` with `<A>_α = target` for `P = exp(-α A)/Z` by safeguarded bisection.
pub fn maxent_solve(a: &ScalarField, target: f64, check: TruncationCheck) -> Result<MaxEntResult> {
    let (min, max) = (a.min(), a.max());
    if !(target > min && target < max) {
        return Err(Error::InfeasibleTarget { target, min, max });
    }
    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while mean_under(a, hi)? > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::BracketFailure(doublings));
        }
    }
    while mean_under(a, lo)? < target {
        hi = lo;
        lo *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::BracketFailure(doublings));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_under(a, mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let (density, z) = exponential_family(a, alpha, check).map_err(|e| match e {
        Error::TruncationError { .. } => Error::NonDecaying,
        other => other,
    })?;
    Ok(MaxEntResult {
        density,
        alpha_gibbs: alpha,
        z,
    })
}
