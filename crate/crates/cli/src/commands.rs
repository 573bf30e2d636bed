use std::fs::File;
use std::path::Path;

use qfisher::extremizers::{self, epi_solve, maxent_solve, EpiOptions, EpiResult};
use qfisher::functionals::{self, QPForm};
use qfisher::io::{EvolveFile, HeatFile, ProblemFile, StateFile};
use qfisher::report::{self, CheckResult, Discrepancy, Tolerance};
use qfisher::thermal::{self, CoherenceOptions, DiffusionScheme, FisherRoute};
use qfisher::{grid, legendre, propagator, Error, Result, ScalarField};

use crate::{Command, Ctx};

pub(crate) struct Outcome {
    pub checks: Vec<CheckResult>,
    pub discrepancies: Vec<Discrepancy>,
}

pub(crate) fn dispatch(command: Command, text: &str, ctx: &Ctx) -> Result<Outcome> {
    match command {
        Command::VerifyIdentities => verify_identities(StateFile::parse(text)?, ctx),
        Command::Evolve => evolve(EvolveFile::parse(text)?, ctx),
        Command::Epi => epi(ProblemFile::parse(text)?, ctx),
        Command::Maxent => maxent(ProblemFile::parse(text)?, ctx),
        Command::Sweep => sweep(ProblemFile::parse(text)?, ctx),
        Command::Thermal => thermal(HeatFile::parse(text)?, ctx),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `columns` (all of the grid's length) as CSV with the abscissa first.
fn write_columns(path: &Path, x: &[f64], columns: &[(&str, &[f64])]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["x"];
    header.extend(columns.iter().map(|c| c.0));
    w.write_record(&header)?;
    for (j, xv) in x.iter().enumerate() {
        let mut row = vec![fmt(*xv)];
        row.extend(columns.iter().map(|c| fmt(c.1[j])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn verify_identities(file: StateFile, ctx: &Ctx) -> Result<Outcome> {
    let state = file.state(&ctx.grid, ctx.check)?;
    let p = state.density();
    let c = *state.constants();
    let fi = functionals::fisher_information(p);
    let mut checks = Vec::new();

    let (spread, scale) = functionals::qp_form_spread(p, &c);
    checks.push(CheckResult::bound("qp-four-forms", spread / scale, 1e-5));
    let mq = functionals::mean_quantum_potential(p, &c);
    let qp_fi = c.hbar * c.hbar / (8.0 * c.mass) * fi;
    checks.push(CheckResult::new("mean-QP-equals-FI", mq, qp_fi, 1e-6, Tolerance::Rel));

    let fl = functionals::fluctuation_report(p, &c);
    checks.push(CheckResult::bound("fluctuation-mean-zero", fl.mean.abs(), 1e-8));
    checks.push(CheckResult::new(
        "fluctuation-second-moment",
        fl.second_moment,
        c.hbar * c.hbar / 4.0 * fi,
        1e-6,
        Tolerance::Rel,
    ));

    let osm = propagator::osmotic_state(p.clone(), c)?;
    let rate = propagator::entropy_rate_rhs(&osm, true);
    checks.push(CheckResult::new(
        "osmotic-entropy-production",
        rate,
        c.hbar / (2.0 * c.mass) * fi,
        1e-6,
        Tolerance::Rel,
    ));
    checks.push(CheckResult::condition("osmotic-entropy-nonnegative", rate, 0.0, rate >= 0.0));

    let hf = thermal::heat_from_density(p, &c)?;
    let route_b = thermal::thermal_fisher(p, &hf, &c, FisherRoute::Coupling)?;
    let route_a = thermal::thermal_fisher(p, &hf, &c, FisherRoute::Formal { dq_dt: None })?;
    checks.push(CheckResult::new("thermal-fisher-route-b", route_b, fi, 1e-8, Tolerance::Rel));

    let forms: Vec<ScalarField> = QPForm::ALL
        .iter()
        .map(|&f| functionals::quantum_potential(p, &c, f))
        .collect();
    let x: Vec<f64> = p.grid().points().collect();
    write_columns(
        &ctx.out.join("identities.csv"),
        &x,
        &[
            ("P", p.values()),
            ("S", state.phase().values()),
            ("Q_sqrt", forms[0].values()),
            ("Q_grad", forms[1].values()),
            ("Q_fluct", forms[2].values()),
            ("Q_osmotic", forms[3].values()),
            ("delta_p", fl.delta_p.values()),
        ],
    )?;

    Ok(Outcome {
        checks,
        discrepancies: report::standard_discrepancies(mq, route_a, route_b),
    })
}

fn evolve(file: EvolveFile, ctx: &Ctx) -> Result<Outcome> {
    let state = file.state.state(&ctx.grid, ctx.check)?;
    let v = file.potential.field(*state.grid())?;
    let traj = propagator::evolve_from(
        &state.reconstruct(),
        0.0,
        &v,
        *state.constants(),
        file.dt,
        file.steps,
        file.record_every,
    )?;
    qfisher::io::write_trajectory(&traj, &ctx.out.join("trajectory"))?;

    let mut w = csv_writer(&ctx.out.join("residuals.csv"))?;
    w.write_record(["t", "continuity", "hamilton_jacobi", "entropy_rate_lhs", "entropy_rate_rhs"])?;
    let (mut cont, mut hj) = (0.0f64, 0.0f64);
    let mut worst_entropy: Option<(f64, f64)> = None;
    let times = traj.times();
    let interior = 1..traj.len().saturating_sub(1);
    if interior.is_empty() {
        return Err(Error::TimeIndex {
            index: 1,
            max: traj.len().saturating_sub(2),
        });
    }
    for k in interior {
        let rc = propagator::continuity_residual(&traj, k)?;
        let rh = propagator::hj_residual(&traj, k)?;
        let (l, r) = propagator::entropy_rate_check(&traj, k, false)?;
        w.write_record([fmt(times[k]), fmt(rc), fmt(rh), fmt(l), fmt(r)])?;
        cont = cont.max(rc);
        hj = hj.max(rh);
        let rel = |(l, r): (f64, f64)| (l - r).abs() / r.abs().max(f64::MIN_POSITIVE);
        if worst_entropy.is_none_or(|w| rel((l, r)) > rel(w)) {
            worst_entropy = Some((l, r));
        }
    }
    w.flush()?;
    let (l, r) = worst_entropy.expect("at least one interior record");
    Ok(Outcome {
        checks: vec![
            CheckResult::bound("continuity", cont, 1e-3),
            CheckResult::bound("hamilton-jacobi", hj, 1e-3),
            CheckResult::new("entropy-rate", l, r, 1e-3, Tolerance::Rel),
        ],
        discrepancies: Vec::new(),
    })
}

/// Largest `|dK/dε|` at the solution over fixed mass-preserving directions.
fn extremality_slope(r: &EpiResult) -> Result<f64> {
    let g = *r.p_i.grid();
    let half = 0.5 * (g.xmax() - g.xmin());
    let mid = 0.5 * (g.xmax() + g.xmin());
    let dirs: [fn(f64) -> f64; 4] = [
        |u| (2.1 * u).sin(),
        |u| (0.9 * u).cos(),
        |u| u,
        |u| (-4.0 * u * u).exp(),
    ];
    let eps = 1e-4;
    let base = r.p_i.field();
    let mut worst = 0.0f64;
    for h in dirs {
        let hf = ScalarField::from_fn(g, |x| h((x - mid) / half))?;
        let mh = r.p_i.expectation(&hf)?;
        let d = base.zip_map(&hf, |p, h| p * (h - mh))?;
        let kp = extremizers::epi_objective(r, &base.lin_comb(1.0, &d, eps)?)?;
        let km = extremizers::epi_objective(r, &base.lin_comb(1.0, &d, -eps)?)?;
        worst = worst.max(((kp - km) / (2.0 * eps)).abs());
    }
    Ok(worst)
}

fn epi(prob: ProblemFile, ctx: &Ctx) -> Result<Outcome> {
    let g = prob.grid(&ctx.grid)?;
    let spec = prob.multiplier_spec(g)?;
    let c = prob.constants();
    let r = epi_solve(&spec, None, &EpiOptions::default())?;

    let mut checks = vec![
        CheckResult::bound("epi-euler-lagrange", extremizers::euler_lagrange_residual(&r), 1e-3),
        CheckResult::bound("riccati-residual", extremizers::riccati_check(&r), 1e-3),
        CheckResult::bound("epi-extremality", extremality_slope(&r)?, 1e-6),
    ];
    let mut discrepancies = Vec::new();
    if r.constraints.len() == 1 {
        let adopted = c.hbar * c.hbar / (8.0 * c.mass);
        let qp = extremizers::epi_quantum_potential_check(&r, &c, adopted)?;
        checks.push(CheckResult::bound("epi-quantum-potential", qp.maxdev / qp.q_scale, 1e-3));
        discrepancies.push(Discrepancy::new(
            "epi-qp-coefficient",
            "eq5.19",
            2.0 * adopted,
            qp.fitted_coefficient,
            "Q = (ħ²/4m)λA + const as written; the fitted slope of Q against λA is ħ²/8m",
        ));
    }

    let x: Vec<f64> = g.points().collect();
    write_columns(
        &ctx.out.join("epi.csv"),
        &x,
        &[("p_I", r.p_i.values()), ("psi", r.psi.values()), ("G", r.g_field().values())],
    )?;
    let means: Vec<f64> = (0..r.constraints.len()).map(|i| r.mean_constraint(i)).collect();
    write_json(
        &ctx.out.join("solution.json"),
        &serde_json::json!({
            "alpha_norm": r.alpha_norm,
            "eigenvalue": r.eigenvalue,
            "fisher_information": r.fisher_i,
            "multipliers": r.multipliers,
            "constraint_means": means,
        }),
    )?;
    Ok(Outcome {
        checks,
        discrepancies,
    })
}

fn maxent(prob: ProblemFile, ctx: &Ctx) -> Result<Outcome> {
    let g = prob.grid(&ctx.grid)?;
    let (a, target) = prob.single_target(g)?;
    let m = maxent_solve(&a, target, ctx.check)?;
    let mean = m.density.expectation(&a)?;
    let lnz = m.z.ln();
    let mask = m.density.support_mask();
    let dev: Vec<f64> = m
        .density
        .values()
        .iter()
        .zip(a.values())
        .map(|(p, a)| (p.ln() + m.alpha_gibbs * a + lnz).abs())
        .collect();
    let form_dev = grid::masked_max_abs(&dev, mask);

    let x: Vec<f64> = g.points().collect();
    write_columns(&ctx.out.join("maxent.csv"), &x, &[("A", a.values()), ("P", m.density.values())])?;
    write_json(
        &ctx.out.join("solution.json"),
        &serde_json::json!({ "alpha_gibbs": m.alpha_gibbs, "z": m.z, "target": target }),
    )?;
    Ok(Outcome {
        checks: vec![
            CheckResult::new("maxent-multiplier", mean, target, 1e-8, Tolerance::Abs),
            CheckResult::bound("maxent-density", form_dev, 1e-9),
        ],
        discrepancies: Vec::new(),
    })
}

fn sweep(prob: ProblemFile, ctx: &Ctx) -> Result<Outcome> {
    let lambdas = prob
        .lambdas
        .clone()
        .ok_or_else(|| Error::Format("sweep needs `lambdas`".into()))?;
    if prob.constraints.len() != 1 {
        return Err(Error::Format("sweep takes exactly one constraint".into()));
    }
    let g = prob.grid(&ctx.grid)?;
    let a = prob.constraints[0].field(g)?;
    let descriptor = match &prob.constraints[0] {
        qfisher::io::ConstraintEntry::Monomial { power, .. } => format!("x^{power}"),
        qfisher::io::ConstraintEntry::Tabulated { .. } => "tabulated".to_string(),
    };
    let table = legendre::sweep(&a, &lambdas, &EpiOptions::default(), &descriptor)?;
    table.write_csv(File::create(ctx.out.join("sweep.csv"))?)?;

    let record_dev = table
        .records
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| (r.lambda_pot - (r.i - r.lambda * r.mean_a)).abs() / r.lambda_pot.abs().max(1.0))
        .fold(0.0f64, f64::max);
    let mut checks = vec![CheckResult::bound("sweep-legendre-potential", record_dev, 1e-12)];
    checks.push(CheckResult::bound("fisher-euler", legendre::verify_euler(&table)?, 1e-2));
    let lr = legendre::verify_legendre(&table)?;
    for (k, name) in [
        "legendre-dLambda-dlambda",
        "legendre-dI-dmeanA",
        "legendre-reciprocity-I",
        "legendre-reciprocity-Lambda",
    ]
    .iter()
    .enumerate()
    {
        checks.push(CheckResult::bound(name, lr.max_residuals[k], 2e-2));
    }
    Ok(Outcome {
        checks,
        discrepancies: Vec::new(),
    })
}

fn thermal(file: HeatFile, ctx: &Ctx) -> Result<Outcome> {
    let hf = file.heat_field(&ctx.grid)?;
    let c = *hf.constants();
    let opts = CoherenceOptions {
        horizon: file.horizon.unwrap_or(CoherenceOptions::default().horizon),
        dt: file.dt.unwrap_or(CoherenceOptions::default().dt),
        check: ctx.check,
    };
    let coh = thermal::coherence_suite(&hf, &c, &opts)?;

    let traj = thermal::heat_equation_evolve(&hf, opts.horizon, opts.dt, DiffusionScheme::Implicit)?;
    let (mut res, mut qth) = (0.0f64, 0.0f64);
    for k in 1..traj.len().saturating_sub(1) {
        res = res.max(thermal::heat_equation_residual(&traj, k)?);
        qth = qth.max(thermal::thermalized_qp_normalized(&traj, k, &c)?);
    }
    let (p, _) = hf.density(ctx.check)?;
    let fi = functionals::fisher_information(&p);
    let route_b = thermal::thermal_fisher(&p, &hf, &c, FisherRoute::Coupling)?;

    let mut checks = vec![
        CheckResult::bound("heat-equation-residual", res, 1e-3),
        CheckResult::bound("thermalized-qp", qth, 1e-3),
        CheckResult::new("thermal-fisher-route-b", route_b, fi, 1e-8, Tolerance::Rel),
    ];
    checks.extend(coh.checks);

    let x: Vec<f64> = hf.grid().points().collect();
    write_columns(
        &ctx.out.join("thermal.csv"),
        &x,
        &[
            ("Q_heat", hf.q_heat().values()),
            ("Q_tilde", hf.q_tilde().values()),
            ("P", p.values()),
            ("delta_S", thermal::delta_s_from_heat(&hf).values()),
        ],
    )?;
    Ok(Outcome {
        checks,
        discrepancies: coh.discrepancies,
    })
}
