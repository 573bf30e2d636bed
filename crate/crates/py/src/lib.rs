//! Python bindings. Fields cross the boundary as lists of floats sampled on a [`Grid`].

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qfisher::extremizers::{self, ConstraintSpec, EpiOptions};
use qfisher::functionals::{self, QPForm};
use qfisher::propagator;
use qfisher::states::{self, TruncationCheck};
use qfisher::thermal::{self, CoherenceOptions, DiffusionScheme, FisherRoute};
use qfisher::{legendre, report};

create_exception!(qfisher, QFisherError, PyException, "Raised with (kind, message) when a computation fails.");

fn err(e: qfisher::Error) -> PyErr {
    QFisherError::new_err((e.kind(), e.to_string()))
}

fn check_flag(enforce: bool) -> TruncationCheck {
    if enforce {
        TruncationCheck::Enforce
    } else {
        TruncationCheck::Skip
    }
}

fn qp_form(name: &str) -> PyResult<QPForm> {
    match name {
        "sqrt" => Ok(QPForm::Sqrt),
        "grad" => Ok(QPForm::Grad),
        "fluct" => Ok(QPForm::Fluct),
        "osmotic" => Ok(QPForm::Osmotic),
        other => Err(QFisherError::new_err((
            "Format",
            format!("unknown quantum potential form {other:?}; expected sqrt, grad, fluct or osmotic"),
        ))),
    }
}

fn check_dict<'py>(py: Python<'py>, c: &report::CheckResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", &c.name)?;
    d.set_item("paper_eq", &c.paper_eq)?;
    d.set_item("lhs", c.lhs)?;
    d.set_item("rhs", c.rhs)?;
    d.set_item("abs_err", c.abs_err)?;
    d.set_item("rel_err", c.rel_err)?;
    d.set_item("tol", c.tol)?;
    d.set_item("pass", c.pass)?;
    Ok(d)
}

/// Uniform grid `xmin + j dx`, `j = 0..n-1`.
#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct Grid {
    inner: qfisher::Grid,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(xmin: f64, xmax: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: qfisher::Grid::new(xmin, xmax, n).map_err(err)?,
        })
    }

    #[getter]
    fn xmin(&self) -> f64 {
        self.inner.xmin()
    }

    #[getter]
    fn xmax(&self) -> f64 {
        self.inner.xmax()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    fn points(&self) -> Vec<f64> {
        self.inner.points().collect()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, {}, {})", self.inner.xmin(), self.inner.xmax(), self.inner.len())
    }
}

impl Grid {
    fn field(&self, values: Vec<f64>) -> PyResult<qfisher::ScalarField> {
        qfisher::ScalarField::new(self.inner, values).map_err(err)
    }
}

/// Physical constants. With `temperature=None` the bath temperature satisfies `hbar omega = k T`.
#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct Constants {
    inner: states::PhysicalConstants,
}

#[pymethods]
impl Constants {
    #[new]
    #[pyo3(signature = (hbar=1.0, mass=1.0, omega=1.0, boltzmann_k=1.0, temperature=None))]
    fn new(hbar: f64, mass: f64, omega: f64, boltzmann_k: f64, temperature: Option<f64>) -> PyResult<Self> {
        let inner = match temperature {
            None => states::PhysicalConstants::thermal(hbar, mass, omega, boltzmann_k),
            Some(t) => states::PhysicalConstants::new(hbar, mass, omega, boltzmann_k, t, false),
        }
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.inner.hbar
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass
    }

    #[getter]
    fn temperature(&self) -> f64 {
        self.inner.temperature
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    #[getter]
    fn diffusivity(&self) -> f64 {
        self.inner.diffusivity()
    }
}

/// Normalized probability density on a grid.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
pub struct Density {
    inner: states::Density,
}

#[pymethods]
impl Density {
    /// Normalizes nonnegative samples.
    #[new]
    #[pyo3(signature = (grid, values, truncation_check=true))]
    fn new(grid: &Grid, values: Vec<f64>, truncation_check: bool) -> PyResult<Self> {
        let raw = grid.field(values)?;
        Ok(Self {
            inner: states::Density::from_samples(&raw, check_flag(truncation_check)).map_err(err)?,
        })
    }

    /// `exp(-gamma E) / Z`.
    #[staticmethod]
    #[pyo3(signature = (grid, energy, gamma, truncation_check=true))]
    fn gibbs(grid: &Grid, energy: Vec<f64>, gamma: f64, truncation_check: bool) -> PyResult<Self> {
        let e = grid.field(energy)?;
        let (inner, _) = states::gibbs_density(&e, gamma, check_flag(truncation_check)).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid {
            inner: *self.inner.grid(),
        }
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn mean(&self) -> f64 {
        self.inner.mean_x()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn expectation(&self, f: Vec<f64>) -> PyResult<f64> {
        let f = qfisher::ScalarField::new(*self.inner.grid(), f).map_err(err)?;
        self.inner.expectation(&f).map_err(err)
    }

    fn fisher_information(&self) -> f64 {
        functionals::fisher_information(&self.inner)
    }

    #[pyo3(signature = (constants, use_rho=false))]
    fn entropy(&self, constants: &Constants, use_rho: bool) -> f64 {
        functionals::differential_entropy(&self.inner, &constants.inner, use_rho)
    }

    /// Form is one of `sqrt`, `grad`, `fluct`, `osmotic`.
    #[pyo3(signature = (constants, form="sqrt"))]
    fn quantum_potential(&self, constants: &Constants, form: &str) -> PyResult<Vec<f64>> {
        let q = functionals::quantum_potential(&self.inner, &constants.inner, qp_form(form)?);
        Ok(q.values().to_vec())
    }

    fn mean_quantum_potential(&self, constants: &Constants) -> f64 {
        functionals::mean_quantum_potential(&self.inner, &constants.inner)
    }

    /// `(spread, scale)`: largest disagreement of the four forms and their magnitude.
    fn qp_form_spread(&self, constants: &Constants) -> (f64, f64) {
        functionals::qp_form_spread(&self.inner, &constants.inner)
    }

    /// Momentum fluctuation field with its mean and second moment.
    fn fluctuations<'py>(&self, py: Python<'py>, constants: &Constants) -> PyResult<Bound<'py, PyDict>> {
        let f = functionals::fluctuation_report(&self.inner, &constants.inner);
        let d = PyDict::new(py);
        d.set_item("delta_p", f.delta_p.values().to_vec())?;
        d.set_item("mean", f.mean)?;
        d.set_item("second_moment", f.second_moment)?;
        d.set_item("delta_ekin_mean", f.delta_ekin_mean)?;
        Ok(d)
    }
}

/// Solution of the Fisher-information extremization problem.
#[pyclass(frozen)]
pub struct EpiResult {
    inner: extremizers::EpiResult,
}

#[pymethods]
impl EpiResult {
    #[getter]
    fn density(&self) -> Density {
        Density {
            inner: self.inner.p_i.clone(),
        }
    }

    #[getter]
    fn psi(&self) -> Vec<f64> {
        self.inner.psi.values().to_vec()
    }

    #[getter]
    fn alpha_norm(&self) -> f64 {
        self.inner.alpha_norm
    }

    #[getter]
    fn eigenvalue(&self) -> f64 {
        self.inner.eigenvalue
    }

    #[getter]
    fn fisher_information(&self) -> f64 {
        self.inner.fisher_i
    }

    fn mean_constraint(&self, i: usize) -> PyResult<f64> {
        if i >= self.inner.constraints.len() {
            return Err(QFisherError::new_err(("Format", format!("constraint index {i} out of range"))));
        }
        Ok(self.inner.mean_constraint(i))
    }

    fn euler_lagrange_residual(&self) -> f64 {
        extremizers::euler_lagrange_residual(&self.inner)
    }

    fn riccati_residual(&self) -> f64 {
        extremizers::riccati_check(&self.inner)
    }
}

/// Minimizes `I[p] + Σ λ_i <A_i>` under normalization.
#[pyfunction]
fn epi_solve(grid: &Grid, constraints: Vec<Vec<f64>>, multipliers: Vec<f64>) -> PyResult<EpiResult> {
    let fields = constraints
        .into_iter()
        .map(|a| grid.field(a))
        .collect::<PyResult<Vec<_>>>()?;
    let spec = ConstraintSpec::with_multipliers(fields, multipliers).map_err(err)?;
    let inner = extremizers::epi_solve(&spec, Some(grid.inner), &EpiOptions::default()).map_err(err)?;
    Ok(EpiResult { inner })
}

/// Maximum-entropy density with `<A> = target`; returns `(density, alpha, Z)`.
#[pyfunction]
#[pyo3(signature = (grid, a, target, truncation_check=true))]
fn maxent_solve(grid: &Grid, a: Vec<f64>, target: f64, truncation_check: bool) -> PyResult<(Density, f64, f64)> {
    let a = grid.field(a)?;
    let m = extremizers::maxent_solve(&a, target, check_flag(truncation_check)).map_err(err)?;
    Ok((Density { inner: m.density }, m.alpha_gibbs, m.z))
}

/// Solves the EPI problem along `lambdas`; one dict per multiplier.
#[pyfunction]
fn sweep<'py>(py: Python<'py>, grid: &Grid, a: Vec<f64>, lambdas: Vec<f64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let a = grid.field(a)?;
    let table = legendre::sweep(&a, &lambdas, &EpiOptions::default(), "python").map_err(err)?;
    table
        .records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("lambda", r.lambda)?;
            d.set_item("I", r.i)?;
            d.set_item("meanA", r.mean_a)?;
            d.set_item("Lambda", r.lambda_pot)?;
            d.set_item("alpha_norm", r.alpha_norm)?;
            d.set_item("status", &r.status)?;
            Ok(d)
        })
        .collect()
}

/// Largest residuals of the Euler relation and the four Legendre relations along a sweep.
#[pyfunction]
fn legendre_residuals(grid: &Grid, a: Vec<f64>, lambdas: Vec<f64>) -> PyResult<(f64, [f64; 4])> {
    let a = grid.field(a)?;
    let table = legendre::sweep(&a, &lambdas, &EpiOptions::default(), "python").map_err(err)?;
    let euler = legendre::verify_euler(&table).map_err(err)?;
    let rep = legendre::verify_legendre(&table).map_err(err)?;
    Ok((euler, rep.max_residuals))
}

/// Crank–Nicolson evolution of a wavefunction.
#[pyclass(frozen)]
pub struct Trajectory {
    inner: propagator::Trajectory,
}

#[pymethods]
impl Trajectory {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times()
    }

    fn density(&self, index: usize) -> PyResult<Density> {
        let st = self
            .inner
            .states()
            .get(index)
            .ok_or_else(|| QFisherError::new_err(("TimeIndex", format!("frame {index} out of range"))))?;
        Ok(Density {
            inner: st.density().clone(),
        })
    }

    fn continuity_residual(&self, index: usize) -> PyResult<f64> {
        propagator::continuity_residual(&self.inner, index).map_err(err)
    }

    fn hj_residual(&self, index: usize) -> PyResult<f64> {
        propagator::hj_residual(&self.inner, index).map_err(err)
    }

    /// `(dH/dt, rhs)` at an interior frame.
    #[pyo3(signature = (index, use_rho=false))]
    fn entropy_rate(&self, index: usize, use_rho: bool) -> PyResult<(f64, f64)> {
        propagator::entropy_rate_check(&self.inner, index, use_rho).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (grid, psi_re, psi_im, potential, constants, dt, steps, record_every=1))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    grid: &Grid,
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
    potential: Vec<f64>,
    constants: &Constants,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> PyResult<Trajectory> {
    if psi_re.len() != psi_im.len() {
        return Err(err(qfisher::Error::ShapeMismatch {
            expected: psi_re.len(),
            found: psi_im.len(),
        }));
    }
    let psi: Vec<Complex64> = psi_re.iter().zip(&psi_im).map(|(&r, &i)| Complex64::new(r, i)).collect();
    let v = grid.field(potential)?;
    let inner = propagator::evolve_from(&psi, 0.0, &v, constants.inner, dt, steps, record_every).map_err(err)?;
    Ok(Trajectory { inner })
}

/// Heat field 𝒬 with its coupled density `P ∝ exp(-β𝒬)`.
#[pyclass(frozen)]
pub struct HeatField {
    inner: thermal::HeatField,
}

#[pymethods]
impl HeatField {
    #[new]
    fn new(grid: &Grid, q_heat: Vec<f64>, constants: &Constants) -> PyResult<Self> {
        Ok(Self {
            inner: thermal::HeatField::new(grid.field(q_heat)?, constants.inner).map_err(err)?,
        })
    }

    #[pyo3(signature = (truncation_check=true))]
    fn density(&self, truncation_check: bool) -> PyResult<Density> {
        let (inner, _) = self.inner.density(check_flag(truncation_check)).map_err(err)?;
        Ok(Density { inner })
    }

    /// Thermal Fisher information by the coupling route `β²∫P𝒬'²`.
    fn fisher_coupling(&self, density: &Density) -> PyResult<f64> {
        let c = *self.inner.constants();
        thermal::thermal_fisher(&density.inner, &self.inner, &c, FisherRoute::Coupling).map_err(err)
    }

    /// Thermal Fisher information by the formal route, static 𝒬.
    fn fisher_formal(&self, density: &Density) -> PyResult<f64> {
        let c = *self.inner.constants();
        thermal::thermal_fisher(&density.inner, &self.inner, &c, FisherRoute::Formal { dq_dt: None }).map_err(err)
    }

    /// Max heat-equation residual over the interior frames of an evolution to `t_final`.
    fn heat_equation_residual(&self, t_final: f64, dt: f64) -> PyResult<f64> {
        let traj = thermal::heat_equation_evolve(&self.inner, t_final, dt, DiffusionScheme::Implicit).map_err(err)?;
        let mut worst = 0.0f64;
        for i in 1..traj.len().saturating_sub(1) {
            worst = worst.max(thermal::heat_equation_residual(&traj, i).map_err(err)?);
        }
        Ok(worst)
    }

    /// Named checks of the thermal coherence suite.
    #[pyo3(signature = (horizon=0.1, dt=1e-3))]
    fn coherence_suite<'py>(&self, py: Python<'py>, horizon: f64, dt: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let opts = CoherenceOptions {
            horizon,
            dt,
            ..CoherenceOptions::default()
        };
        let c = *self.inner.constants();
        let rep = thermal::coherence_suite(&self.inner, &c, &opts).map_err(err)?;
        rep.checks.iter().map(|c| check_dict(py, c)).collect()
    }
}

/// Registered check names with their equation tags, one per line.
#[pyfunction]
fn list_checks() -> String {
    report::list_checks()
}

#[pymodule(name = "qfisher")]
pub fn qfisher_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QFisherError", m.py().get_type::<QFisherError>())?;
    m.add_class::<Grid>()?;
    m.add_class::<Constants>()?;
    m.add_class::<Density>()?;
    m.add_class::<EpiResult>()?;
    m.add_class::<Trajectory>()?;
    m.add_class::<HeatField>()?;
    m.add_function(wrap_pyfunction!(epi_solve, m)?)?;
    m.add_function(wrap_pyfunction!(maxent_solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(legendre_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(list_checks, m)?)?;
    Ok(())
}
