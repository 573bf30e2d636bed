//! Multiplier sweeps of the single-constraint EPI problem and the
//! Legendre-structure relations between `I`, `<A>`, `λ` and `Λ = I - λ<A>`.
//!
//! Derivatives along the sweep are three-point Lagrange differences. When all
//! multipliers share a sign they are taken in `s = ln|λ|` (where geometric
//! sweeps are uniform) and converted with `d/dλ = (1/λ) d/ds`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremizers::{epi_solve, ConstraintSpec, EpiOptions};
use crate::grid::{fmt_f64, ScalarField};

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoRecord {
    pub lambda: f64,
    pub i: f64,
    pub mean_a: f64,
    pub lambda_pot: f64,
    pub alpha_norm: f64,
    /// `"ok"` or the error kind that prevented a solution.
    pub status: String,
}

impl ThermoRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub records: Vec<ThermoRecord>,
    pub descriptor: String,
}

impl SweepTable {
    /// CSV with header `lambda,I,meanA,Lambda,alpha_norm,status`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lambda", "I", "meanA", "Lambda", "alpha_norm", "status"])?;
        for r in &self.records {
            w.write_record([
                fmt_f64(r.lambda),
                fmt_f64(r.i),
                fmt_f64(r.mean_a),
                fmt_f64(r.lambda_pot),
                fmt_f64(r.alpha_norm),
                r.status.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves the EPI problem with constraint `a` for every multiplier (in parallel)
/// and returns the records sorted by `λ`. Failed solves are kept with status set.
pub fn sweep(a: &ScalarField, lambdas: &[f64], opts: &EpiOptions, descriptor: &str) -> Result<SweepTable> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("no multipliers to sweep".into()));
    }
    let mut sorted = lambdas.to_vec();
    if sorted.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("multiplier".into()));
    }
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("multipliers must be distinct".into()));
    }
    let records = sorted
        .par_iter()
        .map(|&lambda| {
            let spec = ConstraintSpec::with_multipliers(vec![a.clone()], vec![lambda])?;
            Ok(match epi_solve(&spec, None, opts) {
                Ok(r) => {
                    let mean_a = r.mean_constraint(0);
                    ThermoRecord {
                        lambda,
                        i: r.fisher_i,
                        mean_a,
                        lambda_pot: r.fisher_i - lambda * mean_a,
                        alpha_norm: r.alpha_norm,
                        status: "ok".into(),
                    }
                }
                Err(e) => ThermoRecord {
                    lambda,
                    i: f64::NAN,
                    mean_a: f64::NAN,
                    lambda_pot: f64::NAN,
                    alpha_norm: f64::NAN,
                    status: e.kind().into(),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        records,
        descriptor: descriptor.into(),
    })
}

/// First and second derivatives with respect to `λ` at the middle of three records.
#[derive(Debug, Clone, Copy)]
struct Local {
    lambda: f64,
    mean_a: f64,
    i_l: f64,
    i_ll: f64,
    a_l: f64,
    a_ll: f64,
    lam_l: f64,
    lam_ll: f64,
}

fn three_point(s: [f64; 3], f: [f64; 3]) -> (f64, f64) {
    let h1 = s[1] - s[0];
    let h2 = s[2] - s[1];
    let d1 = -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2];
    let d2 = 2.0 * (f[0] / (h1 * (h1 + h2)) - f[1] / (h1 * h2) + f[2] / (h2 * (h1 + h2)));
    (d1, d2)
}

fn locals(table: &SweepTable) -> Result<Vec<Local>> {
    let ok: Vec<&ThermoRecord> = table.records.iter().collect();
    let log_coords = {
        let good: Vec<f64> = ok.iter().filter(|r| r.is_ok()).map(|r| r.lambda).collect();
        !good.is_empty() && (good.iter().all(|&l| l > 0.0) || good.iter().all(|&l| l < 0.0))
    };
    let mut out = Vec::new();
    for w in ok.windows(3) {
        if !w.iter().all(|r| r.is_ok()) {
            continue;
        }
        let lam = [w[0].lambda, w[1].lambda, w[2].lambda];
        let s = if log_coords { lam.map(|l| l.abs().ln()) } else { lam };
        let conv = |(d1, d2): (f64, f64)| {
            if log_coords {
                let l = lam[1];
                (d1 / l, (d2 - d1) / (l * l))
            } else {
                (d1, d2)
            }
        };
        let (i_l, i_ll) = conv(three_point(s, [w[0].i, w[1].i, w[2].i]));
        let (a_l, a_ll) = conv(three_point(s, [w[0].mean_a, w[1].mean_a, w[2].mean_a]));
        let (lam_l, lam_ll) = conv(three_point(s, [w[0].lambda_pot, w[1].lambda_pot, w[2].lambda_pot]));
        out.push(Local {
            lambda: lam[1],
            mean_a: w[1].mean_a,
            i_l,
            i_ll,
            a_l,
            a_ll,
            lam_l,
            lam_ll,
        });
    }
    if out.is_empty() {
        let longest = longest_ok_run(table);
        return Err(Error::TooFewPoints(longest));
    }
    Ok(out)
}

fn longest_ok_run(table: &SweepTable) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for r in &table.records {
        if r.is_ok() {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// `|a - b| / (|a| + |b| + eps)`.
pub fn symmetric_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs() + 1e-300)
}

/// Fisher–Euler relation `dI/dλ = λ d<A>/dλ`; max of `|lhs - rhs| / (|dI/dλ| + eps)`.
pub fn verify_euler(table: &SweepTable) -> Result<f64> {
    let loc = locals(table)?;
    Ok(loc
        .iter()
        .map(|l| (l.i_l - l.lambda * l.a_l).abs() / (l.i_l.abs() + 1e-300))
        .fold(0.0, f64::max))
}

/// Derivatives and residuals of the four Legendre relations at one interior record.
#[derive(Debug, Clone, Serialize)]
pub struct LegendrePoint {
    pub lambda: f64,
    pub mean_a: f64,
    /// `∂Λ/∂λ` against `-<A>`.
    pub dlambda_pot_dlambda: f64,
    /// `∂I/∂<A>` against `λ`.
    pub di_dmean_a: f64,
    /// `∂λ/∂<A>` against `∂²I/∂<A>²`.
    pub dlambda_dmean_a: f64,
    pub d2i_dmean_a2: f64,
    /// `∂<A>/∂λ` against `-∂²Λ/∂λ²`.
    pub dmean_a_dlambda: f64,
    pub d2lambda_pot_dlambda2: f64,
    pub residuals: [f64; 4],
}

#[derive(Debug, Clone, Serialize)]
pub struct LegendreReport {
    pub points: Vec<LegendrePoint>,
    /// Largest residual of each relation, in the order of [`LegendrePoint::residuals`].
    pub max_residuals: [f64; 4],
}

pub const LEGENDRE_RELATIONS: [&str; 4] = [
    "dLambda/dlambda = -<A>",
    "dI/d<A> = lambda",
    "dlambda/d<A> = d2I/d<A>2",
    "d<A>/dlambda = -d2Lambda/dlambda2",
];

/// Checks the four Legendre relations along the sweep with symmetric normalization.
pub fn verify_legendre(table: &SweepTable) -> Result<LegendreReport> {
    let good: Vec<f64> = table.records.iter().filter(|r| r.is_ok()).map(|r| r.mean_a).collect();
    let loc = locals(table)?;
    let increasing = good.windows(2).all(|w| w[1] > w[0]);
    let decreasing = good.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::NonMonotoneMeanA);
    }
    let mut points = Vec::with_capacity(loc.len());
    let mut max_residuals = [0.0f64; 4];
    for l in loc {
        let di_da = l.i_l / l.a_l;
        let dlam_da = 1.0 / l.a_l;
        // d/d<A> of (I_λ / A_λ), via the chain rule through λ
        let d2i_da2 = (l.i_ll * l.a_l - l.i_l * l.a_ll) / (l.a_l * l.a_l) / l.a_l;
        let residuals = [
            symmetric_residual(l.lam_l, -l.mean_a),
            symmetric_residual(di_da, l.lambda),
            symmetric_residual(dlam_da, d2i_da2),
            symmetric_residual(l.a_l, -l.lam_ll),
        ];
        for (m, r) in max_residuals.iter_mut().zip(residuals) {
            *m = m.max(r);
        }
        points.push(LegendrePoint {
            lambda: l.lambda,
            mean_a: l.mean_a,
            dlambda_pot_dlambda: l.lam_l,
            di_dmean_a: di_da,
            dlambda_dmean_a: dlam_da,
            d2i_dmean_a2: d2i_da2,
            dmean_a_dlambda: l.a_l,
            d2lambda_pot_dlambda2: l.lam_ll,
            residuals,
        });
    }
    Ok(LegendreReport {
        points,
        max_residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn record(lambda: f64, status: &str) -> ThermoRecord {
        let w = (-lambda).sqrt();
        ThermoRecord {
            lambda,
            i: w,
            mean_a: 1.0 / w,
            lambda_pot: 2.0 * w,
            alpha_norm: 2.0 * w,
            status: status.into(),
        }
    }

    fn closed_form(lambdas: &[f64]) -> SweepTable {
        SweepTable {
            records: lambdas.iter().map(|&l| record(l, "ok")).collect(),
            descriptor: "x^2".into(),
        }
    }

    #[test]
    fn three_point_exact_on_quadratics() {
        let s = [0.0, 0.3, 1.0];
        let f = s.map(|x| 2.0 + 3.0 * x - x * x);
        let (d1, d2) = three_point(s, f);
        assert!((d1 - (3.0 - 0.6)).abs() < 1e-12);
        assert!((d2 + 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_table_satisfies_relations() {
        let t = closed_form(&[-8.0, -4.0, -2.0, -1.0]);
        assert!(verify_euler(&t).unwrap() < 1e-12);
        let rep = verify_legendre(&t).unwrap();
        assert!(rep.max_residuals.iter().all(|&r| r < 2e-2), "{:?}", rep.max_residuals);
        let fine: Vec<f64> = (0..=6).map(|k| -(2f64.powf(k as f64 / 2.0))).collect();
        let rep_fine = verify_legendre(&closed_form(&fine)).unwrap();
        for k in 0..4 {
            let (c, f) = (rep.max_residuals[k], rep_fine.max_residuals[k]);
            assert!(f * 3.0 <= c || f < 1e-12, "relation {k}: {c} -> {f}");
        }
    }

    #[test]
    fn too_few_points() {
        let t = closed_form(&[-4.0]);
        assert!(matches!(verify_euler(&t), Err(Error::TooFewPoints(1))));
        let mut t = closed_form(&[-8.0, -4.0, -2.0, -1.0]);
        t.records[1].status = "EdgeLocalized".into();
        assert!(matches!(verify_legendre(&t), Err(Error::TooFewPoints(2))));
    }

    #[test]
    fn failed_records_split_windows() {
        let mut t = closed_form(&[-16.0, -8.0, -4.0, -2.0, -1.0]);
        t.records[0].status = "EdgeLocalized".into();
        t.records[0].i = f64::NAN;
        let rep = verify_legendre(&t).unwrap();
        assert_eq!(rep.points.len(), 2);
    }

    #[test]
    fn sweep_marks_unbound_records() {
        let g = Grid::new(-8.0, 8.0, 1025).unwrap();
        let a = ScalarField::from_fn(g, |x| x * x).unwrap();
        let t = sweep(&a, &[-2.0, 4.0, -4.0], &EpiOptions::default(), "x^2").unwrap();
        let lams: Vec<f64> = t.records.iter().map(|r| r.lambda).collect();
        assert_eq!(lams, vec![-4.0, -2.0, 4.0]);
        assert!(t.records[0].is_ok() && t.records[1].is_ok());
        assert_eq!(t.records[2].status, "EdgeLocalized");
        let r = &t.records[0];
        assert_eq!(r.lambda_pot, r.i - r.lambda * r.mean_a);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda,I,meanA,Lambda,alpha_norm,status\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
