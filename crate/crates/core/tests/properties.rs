use num_complex::Complex64;
use proptest::prelude::*;

use qfisher::extremizers::{epi_solve, maxent_solve, ConstraintSpec, EpiOptions};
use qfisher::functionals::{self, QPForm};
use qfisher::grid::{self, Grid, ScalarField};
use qfisher::legendre;
use qfisher::propagator::{self, Propagator};
use qfisher::states::{
    density_from_heat, gibbs_density, Density, MadelungState, PhysicalConstants, TruncationCheck,
};
use qfisher::thermal::{self, FisherRoute, HeatField};

fn grid() -> Grid {
    Grid::new(-10.0, 10.0, 2049).unwrap()
}

fn gaussian(g: Grid, mu: f64, s: f64) -> Density {
    let raw = ScalarField::from_fn(g, |x| (-(x - mu).powi(2) / (2.0 * s * s)).exp()).unwrap();
    Density::from_samples(&raw, TruncationCheck::Enforce).unwrap()
}

fn mixture(g: Grid, comps: &[(f64, f64, f64)]) -> Density {
    let raw = ScalarField::from_fn(g, |x| {
        comps
            .iter()
            .map(|(w, mu, s)| w / s * (-(x - mu).powi(2) / (2.0 * s * s)).exp())
            .sum()
    })
    .unwrap();
    Density::from_samples(&raw, TruncationCheck::Enforce).unwrap()
}

fn components() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.2f64..1.0, -2.0f64..2.0, 0.5f64..1.0), 1..=3)
}

fn constants() -> impl Strategy<Value = PhysicalConstants> {
    (0.5f64..2.0, 0.5f64..2.0)
        .prop_map(|(h, m)| PhysicalConstants::default().with_hbar_mass(h, m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadrature_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.1f64..2.0) {
        let g = grid();
        let f = ScalarField::from_fn(g, |x| (k * x).sin() + x * x).unwrap();
        let h = ScalarField::from_fn(g, |x| (-x * x).exp()).unwrap();
        let lhs = grid::quadrature(&f.lin_comb(a, &h, b).unwrap());
        let rhs = a * grid::quadrature(&f) + b * grid::quadrature(&h);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn integration_by_parts(mu in -2.0f64..2.0, s in 0.7f64..1.5, k in 0.1f64..3.0) {
        let g = grid();
        let f = ScalarField::from_fn(g, |x| (-(x - mu).powi(2) / (2.0 * s * s)).exp()).unwrap();
        let h = ScalarField::from_fn(g, |x| (k * x).cos() + 0.1 * x).unwrap();
        let fg1 = f.zip_map(&grid::derivative(&h), |a, b| a * b).unwrap();
        let f1g = grid::derivative(&f).zip_map(&h, |a, b| a * b).unwrap();
        let norm = |v: &ScalarField| grid::quadrature(&v.map(|x| x * x).unwrap()).sqrt();
        let sum = grid::quadrature(&fg1) + grid::quadrature(&f1g);
        prop_assert!(sum.abs() <= 1e-6 * norm(&f) * norm(&h));
    }

    #[test]
    fn density_gradient_integrates_to_zero(comps in components()) {
        let p = mixture(grid(), &comps);
        prop_assert!(grid::quadrature(&grid::derivative(p.field())).abs() <= 1e-8);
        prop_assert!((p.mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn madelung_round_trip(mu in -1.5f64..1.5, s in 0.6f64..1.1, k in -3.0f64..3.0, c in constants()) {
        let g = grid();
        let psi: Vec<Complex64> = g
            .points()
            .map(|x| Complex64::from_polar((-(x - mu).powi(2) / (4.0 * s * s)).exp(), k * x + 0.3 * x * x))
            .collect();
        let st = MadelungState::from_wavefunction(g, &psi, c, TruncationCheck::Enforce, None).unwrap();
        let back = st.reconstruct();
        let scale = 1.0 / propagator::norm(&psi, g.dx()).sqrt();
        for (j, m) in st.density().support_mask().iter().enumerate() {
            if *m {
                prop_assert!((back[j] - psi[j] * scale).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn gibbs_matches_heat_coupling(gamma in 1.0f64..3.0, a in 0.3f64..3.0, shift in -5.0f64..5.0, k in 1.0f64..2.0) {
        // γE = α𝒬 + const with E = k x²/2
        let g = grid();
        let e = ScalarField::from_fn(g, |x| 0.5 * k * x * x).unwrap();
        let q = e.map(|v| (gamma * v - shift) / a).unwrap();
        let (pg, _) = gibbs_density(&e, gamma, TruncationCheck::Enforce).unwrap();
        let (ph, _) = density_from_heat(&q, a, TruncationCheck::Enforce).unwrap();
        for (u, v) in pg.values().iter().zip(ph.values()) {
            prop_assert!((u - v).abs() <= 1e-12 * pg.field().max());
        }
    }

    #[test]
    fn qp_forms_agree(mu in -1.5f64..1.5, s in 0.6f64..1.1, c in constants()) {
        let p = gaussian(grid(), mu, s);
        let (spread, scale) = functionals::qp_form_spread(&p, &c);
        prop_assert!(spread <= 1e-6 * scale);
    }

    #[test]
    fn mean_qp_and_fluctuations(mu in -1.5f64..1.5, s in 0.6f64..1.1, c in constants()) {
        let p = gaussian(grid(), mu, s);
        let fi = functionals::fisher_information(&p);
        prop_assert!((fi * s * s - 1.0).abs() <= 1e-6);
        let mq = functionals::mean_quantum_potential(&p, &c);
        let expect = c.hbar * c.hbar / (8.0 * c.mass) * fi;
        prop_assert!((mq - expect).abs() <= 1e-6 * expect);
        let f = functionals::fluctuation_report(&p, &c);
        prop_assert!(f.mean.abs() <= 1e-8);
        prop_assert!((f.second_moment - c.hbar * c.hbar / 4.0 * fi).abs() <= 1e-6 * f.second_moment);
    }

    #[test]
    fn fisher_scaling_and_entropy_shift(comps in components(), sigma_big in any::<bool>()) {
        let sigma: f64 = if sigma_big { 2.0 } else { 0.5 };
        let g = Grid::new(-30.0, 30.0, 24577).unwrap();
        let base = mixture(g, &comps);
        let scaled: Vec<(f64, f64, f64)> = comps.iter().map(|&(w, mu, s)| (w, mu * sigma, s * sigma)).collect();
        let p_s = mixture(g, &scaled);
        let c = PhysicalConstants::default();
        let fi = functionals::fisher_information(&base);
        let fi_s = functionals::fisher_information(&p_s);
        prop_assert!((fi_s * sigma * sigma - fi).abs() <= 1e-5 * fi);
        let h = functionals::differential_entropy(&base, &c, false);
        let h_s = functionals::differential_entropy(&p_s, &c, false);
        prop_assert!((h_s - h - sigma.ln()).abs() <= 1e-6);
    }

    #[test]
    fn coupling_route_equals_fisher(a2 in 0.2f64..1.5, a1 in -0.5f64..0.5, a4 in 0.0f64..0.1, c in constants()) {
        let g = grid();
        let hf = HeatField::new(ScalarField::from_fn(g, |x| a4 * x.powi(4) + a2 * x * x + a1 * x).unwrap(), c).unwrap();
        let (p, _) = hf.density(TruncationCheck::Enforce).unwrap();
        let b = thermal::thermal_fisher(&p, &hf, &c, FisherRoute::Coupling).unwrap();
        let fi = functionals::fisher_information(&p);
        prop_assert!((b - fi).abs() <= 1e-8 * fi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn propagation_is_unitary(v0 in 0.0f64..2.0, k in -2.0f64..2.0, x0 in -2.0f64..2.0) {
        let g = Grid::new(-12.0, 12.0, 1537).unwrap();
        let v = ScalarField::from_fn(g, |x| 0.5 * v0 * x * x).unwrap();
        let c = PhysicalConstants::default();
        let mut psi: Vec<Complex64> = g
            .points()
            .map(|x| Complex64::from_polar((-(x - x0).powi(2) / 2.0).exp(), k * x))
            .collect();
        let n = psi.len();
        psi[0] = Complex64::new(0.0, 0.0);
        psi[n - 1] = Complex64::new(0.0, 0.0);
        let prop = Propagator::new(&v, c, 1e-2).unwrap();
        let n0 = propagator::norm(&psi, g.dx());
        for _ in 0..20 {
            let before = propagator::norm(&psi, g.dx());
            prop.step(&mut psi);
            let after = propagator::norm(&psi, g.dx());
            prop_assert!((after - before).abs() <= 1e-12 * before);
        }
        prop_assert!((propagator::norm(&psi, g.dx()) - n0).abs() <= 1e-11 * n0);
    }

    #[test]
    fn maxent_composes_with_gibbs(target in 0.3f64..1.5) {
        let g = grid();
        let a = ScalarField::from_fn(g, |x| x * x).unwrap();
        let m = maxent_solve(&a, target, TruncationCheck::Enforce).unwrap();
        let (p, _) = gibbs_density(&a, m.alpha_gibbs, TruncationCheck::Enforce).unwrap();
        prop_assert_eq!(p.values(), m.density.values());
        prop_assert!((m.density.expectation(&a).unwrap() - target).abs() <= 1e-8);
    }

    #[test]
    fn epi_density_is_normalized(lambda in -8.0f64..-0.5) {
        let g = Grid::new(-8.0, 8.0, 1025).unwrap();
        let a = ScalarField::from_fn(g, |x| x * x).unwrap();
        let spec = ConstraintSpec::with_multipliers(vec![a], vec![lambda]).unwrap();
        let r = epi_solve(&spec, None, &EpiOptions::default()).unwrap();
        prop_assert!((r.p_i.mass() - 1.0).abs() <= 1e-9);
        prop_assert!(r.psi.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn sweep_records_and_determinism(l0 in 1.0f64..3.0) {
        let g = Grid::new(-8.0, 8.0, 1025).unwrap();
        let a = ScalarField::from_fn(g, |x| x * x).unwrap();
        let lambdas = [-l0, -1.5 * l0, -2.25 * l0];
        let t1 = legendre::sweep(&a, &lambdas, &EpiOptions::default(), "x^2").unwrap();
        let t2 = legendre::sweep(&a, &lambdas, &EpiOptions::default(), "x^2").unwrap();
        prop_assert_eq!(&t1, &t2);
        for r in &t1.records {
            prop_assert!((r.lambda_pot - (r.i - r.lambda * r.mean_a)).abs() <= 1e-12 * r.lambda_pot.abs());
        }
    }
}

#[test]
fn qp_forms_on_skewed_density() {
    // ln P is not quadratic here, so all four stencil routes are exercised.
    let g = Grid::new(-8.0, 8.0, 8193).unwrap();
    let p = mixture(g, &[(0.7, -1.0, 0.7), (0.3, 1.2, 0.6)]);
    let c = PhysicalConstants::default();
    let (spread, scale) = functionals::qp_form_spread(&p, &c);
    assert!(spread <= 1e-5 * scale, "{spread} vs {scale}");
    let q = functionals::quantum_potential(&p, &c, QPForm::Osmotic);
    assert!(q.values().iter().all(|v| v.is_finite()));
}
