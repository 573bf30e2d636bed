//! Named identity checks, flagged discrepancies and the JSON report format.

use serde::{Deserialize, Serialize};

/// A registered check: stable name, equation tag, acceptance criterion number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckSpec {
    pub name: &'static str,
    pub paper_eq: &'static str,
    pub criterion: u8,
}

const fn spec(name: &'static str, paper_eq: &'static str, criterion: u8) -> CheckSpec {
    CheckSpec {
        name,
        paper_eq,
        criterion,
    }
}

/// Every check the toolkit can emit, in listing order.
pub const REGISTRY: &[CheckSpec] = &[
    spec("qp-four-forms", "eq2.2", 1),
    spec("mean-QP-equals-FI", "eq2.4", 2),
    spec("fluctuation-mean-zero", "eq2.8", 3),
    spec("fluctuation-second-moment", "eq3.3", 3),
    spec("epi-alpha-norm", "eq5.7", 4),
    spec("epi-fisher", "eq5D", 4),
    spec("epi-density", "eq5.7", 4),
    spec("epi-euler-lagrange", "eq5.4", 4),
    spec("riccati-residual", "eq5G", 4),
    spec("epi-extremality", "eq5.2", 4),
    spec("epi-quantum-potential", "eq5.19", 4),
    spec("sweep-fisher", "eq5D", 5),
    spec("sweep-mean-constraint", "eq5I", 5),
    spec("sweep-legendre-potential", "eq5.12", 5),
    spec("fisher-euler", "eq5.11", 5),
    spec("legendre-dLambda-dlambda", "eq5.14", 5),
    spec("legendre-dI-dmeanA", "eq5.14", 5),
    spec("legendre-reciprocity-I", "eq5.14", 5),
    spec("legendre-reciprocity-Lambda", "eq5.14", 5),
    spec("legendre-refinement", "eq5.14", 5),
    spec("maxent-multiplier", "eq2G", 6),
    spec("maxent-density", "eq5L", 6),
    spec("gibbs-fisher", "eq5.24", 7),
    spec("gibbs-quantum-potential", "eq5.23", 7),
    spec("continuity", "eq4.4", 8),
    spec("hamilton-jacobi", "eq3.7", 8),
    spec("entropy-rate", "eq2.7", 8),
    spec("continuity-convergence", "eq4.4", 8),
    spec("hamilton-jacobi-convergence", "eq3.7", 8),
    spec("entropy-rate-convergence", "eq2.7", 8),
    spec("stationary-continuity", "eq4.4", 8),
    spec("stationary-hamilton-jacobi", "eq3.7", 8),
    spec("stationary-entropy-rate", "eq2.7", 8),
    spec("osmotic-entropy-production", "eq2F", 9),
    spec("osmotic-entropy-nonnegative", "eq2F", 9),
    spec("fick-variance", "eq3L", 10),
    spec("fick-current", "eq3K", 10),
    spec("heat-kernel-variance", "eq3S", 10),
    spec("heat-equation-residual", "eq3S", 10),
    spec("thermalized-qp", "eq3.12", 10),
    spec("thermal-fisher-route-b", "eq3.18", 10),
    spec("vanishing-qp", "eq3P", 10),
    spec("coherence-density-ratio", "eq3C", 10),
    spec("coherence-heat-action", "eq3.1", 10),
    spec("coherence-fluctuation-gradient", "eq3.3", 10),
    spec("coherence-kinetic-energy", "eq3.4", 10),
    spec("coherence-gibbs-form", "eq3.14", 10),
    spec("coherence-gibbs-equivalence", "eq5.24", 10),
    spec("coherence-gibbs-quantum-potential", "eq5.23", 10),
    spec("heat-diffusion-defect", "eq3R", 10),
    spec("discrepancy-ledger", "plumbing", 11),
];

pub fn lookup(name: &str) -> Option<&'static CheckSpec> {
    REGISTRY.iter().find(|c| c.name == name)
}

/// `<tag> <name>` lines in registry order.
pub fn list_checks() -> String {
    let mut out = String::new();
    for c in REGISTRY {
        out.push_str(c.paper_eq);
        out.push(' ');
        out.push_str(c.name);
        out.push('\n');
    }
    out
}

/// Whether `tol` bounds the absolute or the relative error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tolerance {
    Abs,
    Rel,
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub paper_eq: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    /// `abs_err / |rhs|`, or `abs_err` when `rhs` is zero.
    pub rel_err: f64,
    pub tol: f64,
    pub mode: Tolerance,
    pub pass: bool,
}

impl CheckResult {
    /// Compares `lhs` with `rhs`; `tol` applies to the error selected by `mode`.
    ///
    /// Panics if `name` is not registered, so every emitted check has a tag.
    pub fn new(name: &str, lhs: f64, rhs: f64, tol: f64, mode: Tolerance) -> Self {
        let spec = lookup(name).unwrap_or_else(|| panic!("unregistered check `{name}`"));
        let abs_err = (lhs - rhs).abs();
        let rel_err = if rhs == 0.0 { abs_err } else { abs_err / rhs.abs() };
        let err = match mode {
            Tolerance::Abs => abs_err,
            Tolerance::Rel => rel_err,
        };
        Self {
            name: name.into(),
            paper_eq: spec.paper_eq.into(),
            lhs,
            rhs,
            abs_err,
            rel_err,
            tol,
            mode,
            pass: err <= tol,
        }
    }

    /// A residual-style check: `value` must not exceed `tol`.
    pub fn bound(name: &str, value: f64, tol: f64) -> Self {
        Self::new(name, value, 0.0, tol, Tolerance::Abs)
    }

    /// A boolean condition recorded with the quantities it was decided from.
    pub fn condition(name: &str, lhs: f64, rhs: f64, holds: bool) -> Self {
        let mut c = Self::new(name, lhs, rhs, 0.0, Tolerance::Abs);
        c.pass = holds && lhs.is_finite() && rhs.is_finite();
        c
    }

    /// Scales the tolerance (used by `--tol-scale`).
    pub fn rescaled(mut self, factor: f64) -> Self {
        if self.tol > 0.0 {
            self.tol *= factor;
            let err = match self.mode {
                Tolerance::Abs => self.abs_err,
                Tolerance::Rel => self.rel_err,
            };
            self.pass = err <= self.tol;
        }
        self
    }
}

/// A place where two written forms of the same relation disagree; reported, never failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub name: String,
    pub paper_eq: String,
    /// Value of the form as written.
    pub literal: f64,
    /// Value of the consistent form adopted by the toolkit.
    pub adopted: f64,
    /// `literal / adopted`.
    pub ratio: f64,
    pub note: String,
}

impl Discrepancy {
    pub fn new(name: &str, paper_eq: &str, literal: f64, adopted: f64, note: &str) -> Self {
        Self {
            name: name.into(),
            paper_eq: paper_eq.into(),
            literal,
            adopted,
            ratio: literal / adopted,
            note: note.into(),
        }
    }
}

/// Error carried by a report when a solver failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

impl From<&crate::Error> for ErrorInfo {
    fn from(e: &crate::Error) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

pub const SCHEMA_VERSION: u32 = 1;

/// The `report.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub inputs_digest: String,
    pub checks: Vec<CheckResult>,
    pub discrepancies: Vec<Discrepancy>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<ErrorInfo>,
    pub overall_pass: bool,
}

impl Report {
    pub fn new(command: &str, inputs_digest: &str) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: command.into(),
            inputs_digest: inputs_digest.into(),
            checks: Vec::new(),
            discrepancies: Vec::new(),
            error: None,
            overall_pass: false,
        }
    }

    /// Recomputes `overall_pass`: every check passes and no error was recorded.
    pub fn finalize(&mut self) {
        self.overall_pass = self.error.is_none() && self.checks.iter().all(|c| c.pass);
    }
}

/// The two flagged items every report on the static identities carries:
/// the sign of `∫PQ` and the factor between the two thermal Fisher routes.
pub fn standard_discrepancies(mean_qp: f64, route_a: f64, route_b: f64) -> Vec<Discrepancy> {
    vec![
        Discrepancy::new(
            "mean-QP-sign",
            "eq3.16",
            -mean_qp,
            mean_qp,
            "∫PQ written as -(ħ²/8m)F; the +(ħ²/8m)FI form is adopted",
        ),
        Discrepancy::new(
            "thermal-fisher-routes",
            "eq3.17",
            route_a,
            route_b,
            "formal route through ∇²𝒬 differs from the coupling route by this factor",
        ),
    ]
}
