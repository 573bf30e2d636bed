//! Static functionals of a density: Fisher information, differential entropy,
//! the quantum potential in four algebraically equivalent forms, momentum
//! fluctuations and osmotic fields.
//!
//! Sign convention: the quantum potential is `Q = -(hbar^2/2m) R''/R` with
//! `R = sqrt(P)`, so a standard normal density with `hbar = m = 1` has
//! `Q(x) = 1/4 - x^2/8` and `∫ P Q = FI/8`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{self, ScalarField};
use crate::states::{Density, MadelungState, PhysicalConstants};

/// Which algebraic route is used to evaluate the quantum potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QPForm {
    /// `-(hbar^2/2m) R''/R`, with `R''/R` taken from `ln R`.
    Sqrt,
    /// `(hbar^2/4m) [ (P'/P)^2/2 - P''/P ]` with the overall sign fixed to agree with `Sqrt`.
    Grad,
    /// `-(hbar^2/4m) [ w' + w^2/2 ]` with `w = P'/P` differentiated as a field.
    Fluct,
    /// `-m u^2/2 + (hbar/2) u'` with the osmotic velocity `u = -(hbar/2m) P'/P`.
    Osmotic,
}

impl QPForm {
    pub const ALL: [QPForm; 4] = [QPForm::Sqrt, QPForm::Grad, QPForm::Fluct, QPForm::Osmotic];
}

/// Momentum fluctuation field and its moments.
#[derive(Debug, Clone)]
pub struct FluctuationReport {
    pub delta_p: ScalarField,
    pub mean: f64,
    pub second_moment: f64,
    pub delta_ekin_mean: f64,
}

/// `∫ (P')^2 / P` over the support.
pub fn fisher_information(p: &Density) -> f64 {
    let w = p.score();
    let integrand: Vec<f64> = p.values().iter().zip(w.values()).map(|(p, w)| p * w * w).collect();
    grid::masked_quadrature(
        &ScalarField::from_vec_unchecked(*p.grid(), integrand),
        p.support_mask(),
    )
}

/// `-∫ P ln P`; with `use_rho` the mass density `rho = m P` is used instead,
/// giving `m * H[P] - m ln m`.
pub fn differential_entropy(p: &Density, constants: &PhysicalConstants, use_rho: bool) -> f64 {
    let l = p.log_density();
    let v: Vec<f64> = p.values().iter().zip(l.values()).map(|(p, l)| -p * l).collect();
    let h = grid::masked_quadrature(&ScalarField::from_vec_unchecked(*p.grid(), v), p.support_mask());
    if use_rho {
        let m = constants.mass;
        m * h - m * m.ln()
    } else {
        h
    }
}

/// Quantum potential of `p` evaluated by the requested route; zero off the support.
pub fn quantum_potential(p: &Density, constants: &PhysicalConstants, form: QPForm) -> ScalarField {
    let hbar = constants.hbar;
    let m = constants.mass;
    let mask = p.support_mask();
    let l = p.log_density();
    let w = grid::masked_derivative(&l, mask);
    let w = w.values();
    let q: Vec<f64> = match form {
        QPForm::Sqrt => {
            let log_r = l.scaled(0.5);
            let d1 = grid::masked_derivative(&log_r, mask);
            let d2 = grid::masked_second_derivative(&log_r, mask);
            d1.values()
                .iter()
                .zip(d2.values())
                .map(|(a, b)| -(hbar * hbar / (2.0 * m)) * (b + a * a))
                .collect()
        }
        QPForm::Grad => {
            let ratio = p.curvature_ratio();
            w.iter()
                .zip(ratio.values())
                .map(|(w, r)| (hbar * hbar / (4.0 * m)) * (0.5 * w * w - r))
                .collect()
        }
        QPForm::Fluct => {
            let wf = ScalarField::from_vec_unchecked(*p.grid(), w.to_vec());
            let dw = grid::masked_derivative(&wf, mask);
            w.iter()
                .zip(dw.values())
                .map(|(w, dw)| -(hbar * hbar / (4.0 * m)) * (dw + 0.5 * w * w))
                .collect()
        }
        QPForm::Osmotic => {
            let (u, _, _) = osmotic_fields(p, constants);
            let du = grid::masked_derivative(&u, mask);
            u.values()
                .iter()
                .zip(du.values())
                .map(|(u, du)| -0.5 * m * u * u + 0.5 * hbar * du)
                .collect()
        }
    };
    let eff = p.stencil_mask();
    let q = q.into_iter().zip(&eff).map(|(q, &k)| if k { q } else { 0.0 }).collect();
    ScalarField::from_vec_unchecked(*p.grid(), q)
}

/// `∫ P Q`, which equals `(hbar^2/8m) FI`.
pub fn mean_quantum_potential(p: &Density, constants: &PhysicalConstants) -> f64 {
    let q = quantum_potential(p, constants, QPForm::Sqrt);
    let v: Vec<f64> = p.values().iter().zip(q.values()).map(|(p, q)| p * q).collect();
    grid::masked_quadrature(&ScalarField::from_vec_unchecked(*p.grid(), v), p.support_mask())
}

/// Largest pointwise disagreement among the four forms, and `max|Q|`, over the
/// stencil mask less two nodes at each run end (where the nested stencils are one-sided).
pub fn qp_form_spread(p: &Density, constants: &PhysicalConstants) -> (f64, f64) {
    let fields: Vec<ScalarField> = QPForm::ALL
        .iter()
        .map(|&f| quantum_potential(p, constants, f))
        .collect();
    let mask = grid::eroded_mask(&p.stencil_mask(), 2);
    let mut spread: f64 = 0.0;
    for j in 0..p.grid().len() {
        if !mask[j] {
            continue;
        }
        let vals = fields.iter().map(|f| f.values()[j]);
        let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.fold(f64::INFINITY, f64::min);
        spread = spread.max(hi - lo);
    }
    let scale = grid::masked_max_abs(fields[0].values(), &mask);
    (spread, scale)
}

/// `delta_p = -(hbar/2) P'/P` and its first two moments under `P`.
pub fn fluctuation_report(p: &Density, constants: &PhysicalConstants) -> FluctuationReport {
    let hbar = constants.hbar;
    let delta_p = p.score().scaled(-0.5 * hbar);
    let dx = p.grid().dx();
    let first: Vec<f64> = p.values().iter().zip(delta_p.values()).map(|(p, d)| p * d).collect();
    let second: Vec<f64> = p
        .values()
        .iter()
        .zip(delta_p.values())
        .map(|(p, d)| p * d * d)
        .collect();
    let mean = grid::trapezoid(&first, dx);
    let second_moment = grid::trapezoid(&second, dx);
    FluctuationReport {
        delta_p,
        mean,
        second_moment,
        delta_ekin_mean: second_moment / (2.0 * constants.mass),
    }
}

/// Osmotic velocity `u = -(hbar/2m) P'/P`, its reverse `u_bar = -u`, and the
/// wave-number field `k_u = -(1/2) P'/P` (so that `u = hbar k_u / m`).
pub fn osmotic_fields(
    p: &Density,
    constants: &PhysicalConstants,
) -> (ScalarField, ScalarField, ScalarField) {
    let w = p.score();
    let u = w.scaled(-constants.hbar / (2.0 * constants.mass));
    let u_bar = u.scaled(-1.0);
    let k_u = w.scaled(-0.5);
    (u, u_bar, k_u)
}

/// `∫ P S' delta_p`: vanishes when `S'` is constant on the support.
pub fn orthogonality_defect(state: &MadelungState) -> f64 {
    let p = state.density();
    let s1 = state.momentum();
    let dp = p.score().scaled(-0.5 * state.constants().hbar);
    let v: Vec<f64> = p
        .values()
        .iter()
        .zip(s1.values())
        .zip(dp.values())
        .map(|((p, s), d)| p * s * d)
        .collect();
    grid::masked_quadrature(&ScalarField::from_vec_unchecked(*p.grid(), v), p.support_mask())
}

/// The two spatial action integrals and the pointwise log-derivative identity.
#[derive(Debug, Clone, Copy)]
pub struct ActionDensityCheck {
    /// `∫ P [S_t + S'^2/2m + (1/2m)(hbar P'/2P)^2 + V]`.
    pub lhs: f64,
    /// `∫ [P (S_t + V) + (hbar^2/2m)|psi'|^2]` with `psi'` differenced from the samples.
    pub rhs: f64,
    /// Sum of the magnitudes of the individual terms, for normalizing `lhs - rhs`.
    pub scale: f64,
    /// Largest `| |psi'/psi|^2 - (P'/2P)^2 - (S'/hbar)^2 |` on the support.
    pub log_derivative_defect: f64,
}

pub fn action_density_check(
    state: &MadelungState,
    potential: &ScalarField,
    s_t: &ScalarField,
) -> Result<ActionDensityCheck> {
    let p = state.density();
    p.field().check_same_grid(potential)?;
    p.field().check_same_grid(s_t)?;
    let c = state.constants();
    let (hbar, m) = (c.hbar, c.mass);
    let mask = p.support_mask();
    let w = p.score();
    let s1 = state.momentum();
    let g = *p.grid();
    let dx = g.dx();

    let mut lhs_v = vec![0.0; g.len()];
    let mut pot_v = vec![0.0; g.len()];
    let mut scale_v = vec![0.0; g.len()];
    for j in 0..g.len() {
        let pj = p.values()[j];
        let base = s_t.values()[j] + potential.values()[j];
        pot_v[j] = pj * base;
        if mask[j] {
            let kin = s1.values()[j].powi(2) / (2.0 * m);
            let fl = (0.5 * hbar * w.values()[j]).powi(2) / (2.0 * m);
            lhs_v[j] = pj * (base + kin + fl);
            scale_v[j] = pj * (s_t.values()[j].abs() + potential.values()[j].abs() + kin + fl);
        } else {
            lhs_v[j] = pj * base;
            scale_v[j] = pj * base.abs();
        }
    }
    let psi = state.psi();
    let re: Vec<f64> = psi.iter().map(|z| z.re).collect();
    let im: Vec<f64> = psi.iter().map(|z| z.im).collect();
    let dre = grid::diff1(&re, dx);
    let dim = grid::diff1(&im, dx);
    let grad2: Vec<f64> = dre
        .iter()
        .zip(&dim)
        .map(|(a, b)| (hbar * hbar / (2.0 * m)) * (a * a + b * b))
        .collect();
    let rhs_v: Vec<f64> = pot_v.iter().zip(&grad2).map(|(a, b)| a + b).collect();

    // psi'/psi as the derivative of the complex logarithm ln R + i S/hbar
    let log_r = p.log_density().scaled(0.5);
    let dlog_r = grid::masked_derivative(&log_r, mask);
    let mut defect: f64 = 0.0;
    for j in 0..g.len() {
        if !mask[j] {
            continue;
        }
        let z = Complex64::new(dlog_r.values()[j], s1.values()[j] / hbar);
        let rhs = (0.5 * w.values()[j]).powi(2) + (s1.values()[j] / hbar).powi(2);
        defect = defect.max((z.norm_sqr() - rhs).abs());
    }

    Ok(ActionDensityCheck {
        lhs: grid::trapezoid(&lhs_v, dx),
        rhs: grid::trapezoid(&rhs_v, dx),
        scale: grid::trapezoid(&scale_v, dx),
        log_derivative_defect: defect,
    })
}

/// Quantum potential of the Gibbs density `exp(-gamma E)/Z` written through `E`:
/// `(gamma hbar^2/8m) [2 E'' - gamma (E')^2]`.
pub fn gibbs_quantum_potential(
    energy: &ScalarField,
    gamma: f64,
    constants: &PhysicalConstants,
) -> ScalarField {
    let e1 = grid::derivative(energy);
    let e2 = grid::second_derivative(energy);
    let c = gamma * constants.hbar * constants.hbar / (8.0 * constants.mass);
    let v = e1
        .values()
        .iter()
        .zip(e2.values())
        .map(|(a, b)| c * (2.0 * b - gamma * a * a))
        .collect();
    ScalarField::from_vec_unchecked(*energy.grid(), v)
}

/// Fisher information of the Gibbs density written through `E`: `(gamma^2/Z) ∫ (E')^2 e^{-gamma E}`.
pub fn gibbs_fisher_information(energy: &ScalarField, gamma: f64) -> f64 {
    let e1 = grid::derivative(energy);
    let shift = energy.values().iter().map(|&e| -gamma * e).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = energy.values().iter().map(|&e| (-gamma * e - shift).exp()).collect();
    let dx = energy.grid().dx();
    let z = grid::trapezoid(&w, dx);
    let num: Vec<f64> = w.iter().zip(e1.values()).map(|(w, d)| w * d * d).collect();
    gamma * gamma * grid::trapezoid(&num, dx) / z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::states::{density_from_samples, gibbs_density, TruncationCheck};
    use std::f64::consts::PI;

    fn normal(sigma: f64, shift: f64, a: f64, b: f64) -> Density {
        let g = Grid::new(a, b, 4097).unwrap();
        let raw = ScalarField::from_fn(g, |x| (-0.5 * ((x - shift) / sigma).powi(2)).exp()).unwrap();
        density_from_samples(&raw, TruncationCheck::Enforce).unwrap()
    }

    fn unit() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn fisher_of_gaussians() {
        assert!((fisher_information(&normal(1.0, 0.0, -8.0, 8.0)) - 1.0).abs() < 1e-6);
        assert!((fisher_information(&normal(2.0, 0.0, -16.0, 16.0)) - 0.25).abs() < 1e-6);
        let a = fisher_information(&normal(1.0, 0.0, -8.0, 8.0));
        let b = fisher_information(&normal(1.0, 0.5, -7.5, 8.5));
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn entropy_values() {
        let h = differential_entropy(&normal(1.0, 0.0, -8.0, 8.0), &unit(), false);
        let exact = 0.5 * (2.0 * PI * std::f64::consts::E).ln();
        assert!((h - exact).abs() < 1e-6);
        let c = PhysicalConstants { mass: 2.0, ..unit() };
        let hr = differential_entropy(&normal(1.0, 0.0, -8.0, 8.0), &c, true);
        assert!((hr - (2.0 * exact - 2.0 * 2f64.ln())).abs() < 1e-6);
        let g = Grid::new(0.0, 1.0, 101).unwrap();
        let u = density_from_samples(&ScalarField::constant(g, 1.0), TruncationCheck::Skip).unwrap();
        assert!(differential_entropy(&u, &unit(), false).abs() < 1e-14);
    }

    #[test]
    fn quantum_potential_of_standard_normal() {
        let p = normal(1.0, 0.0, -8.0, 8.0);
        for form in QPForm::ALL {
            let q = quantum_potential(&p, &unit(), form);
            let g = p.grid();
            let at = |x: f64| q.values()[((x - g.xmin()) / g.dx()).round() as usize];
            assert!((at(0.0) - 0.25).abs() < 1e-6, "{form:?}");
            assert!((at(2.0) + 0.25).abs() < 1e-6, "{form:?}");
        }
        let (spread, scale) = qp_form_spread(&p, &unit());
        assert!(spread <= 1e-6 * scale);
    }

    #[test]
    fn mean_quantum_potential_scales() {
        assert!((mean_quantum_potential(&normal(1.0, 0.0, -8.0, 8.0), &unit()) - 0.125).abs() < 1e-6);
        assert!((mean_quantum_potential(&normal(2.0, 0.0, -16.0, 16.0), &unit()) - 0.03125).abs() < 1e-7);
        let c = PhysicalConstants::thermal(2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((mean_quantum_potential(&normal(1.0, 0.0, -8.0, 8.0), &c) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn fluctuations_of_standard_normal() {
        let p = normal(1.0, 0.0, -8.0, 8.0);
        let r = fluctuation_report(&p, &unit());
        assert!(r.mean.abs() < 1e-12);
        assert!((r.second_moment - 0.25).abs() < 1e-6);
        for (j, x) in p.grid().points().enumerate() {
            if p.support_mask()[j] {
                assert!((r.delta_p.values()[j] - 0.5 * x).abs() < 1e-8);
            }
        }
        let wide = fluctuation_report(&normal(2.0, 0.0, -16.0, 16.0), &unit());
        assert!((wide.delta_ekin_mean - 0.03125).abs() < 1e-7);
    }

    #[test]
    fn osmotic_fields_of_standard_normal() {
        let p = normal(1.0, 0.0, -8.0, 8.0);
        let (u, ub, k) = osmotic_fields(&p, &unit());
        for (j, x) in p.grid().points().enumerate() {
            if p.support_mask()[j] {
                assert!((u.values()[j] - 0.5 * x).abs() < 1e-8);
                assert_eq!(ub.values()[j], -u.values()[j]);
                assert!((k.values()[j] - 0.5 * x).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn orthogonality_defect_cases() {
        let p = normal(1.0, 0.0, -8.0, 8.0);
        let c = unit();
        let plane = ScalarField::from_fn(*p.grid(), |x| 1.3 * x).unwrap();
        let s = MadelungState::from_density_and_phase(p.clone(), plane, c).unwrap();
        assert!(orthogonality_defect(&s).abs() < 1e-8);
        let s0 = MadelungState::from_density_and_phase(p.clone(), ScalarField::zeros(*p.grid()), c).unwrap();
        assert_eq!(orthogonality_defect(&s0), 0.0);
        let chirp = ScalarField::from_fn(*p.grid(), |x| 0.5 * x * x).unwrap();
        let s2 = MadelungState::from_density_and_phase(p, chirp, c).unwrap();
        assert!((orthogonality_defect(&s2) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn action_density_real_wavefunction() {
        let p = normal(1.0, 0.0, -8.0, 8.0);
        let g = *p.grid();
        let s = MadelungState::from_density_and_phase(p.clone(), ScalarField::zeros(g), unit()).unwrap();
        let z = ScalarField::zeros(g);
        let r = action_density_check(&s, &z, &z).unwrap();
        assert!((r.lhs - 0.125).abs() < 1e-6);
        assert!((r.rhs - 0.125).abs() < 1e-6);
        assert!(r.log_derivative_defect < 1e-12);
    }

    #[test]
    fn gibbs_formulas_on_gaussian() {
        let g = Grid::new(-8.0, 8.0, 4097).unwrap();
        for (k, gamma) in [(1.0, 1.0), (1.0, 4.0), (3.0, 0.5)] {
            let e = ScalarField::from_fn(g, |x| 0.5 * k * x * x).unwrap();
            let (p, _) = gibbs_density(&e, gamma, TruncationCheck::Enforce).unwrap();
            assert!((fisher_information(&p) - gamma * k).abs() < 1e-6 * gamma * k);
            assert!((gibbs_fisher_information(&e, gamma) - gamma * k).abs() < 1e-6 * gamma * k);
            let q = quantum_potential(&p, &unit(), QPForm::Sqrt);
            let qg = gibbs_quantum_potential(&e, gamma, &unit());
            let mask = p.stencil_mask();
            let dev = (0..g.len())
                .filter(|&j| mask[j])
                .map(|j| (q.values()[j] - qg.values()[j]).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-6 * grid::masked_max_abs(q.values(), &mask), "dev {dev}");
        }
    }
}
