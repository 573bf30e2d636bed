//! JSON input schemas and CSV/JSON output for states, problems, heat fields and trajectories.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremizers::ConstraintSpec;
use crate::grid::{fmt_f64, Grid, ScalarField};
use crate::propagator::Trajectory;
use crate::states::{Density, MadelungState, PhysicalConstants, TruncationCheck};
use crate::thermal::HeatField;

/// `{xmin, xmax, n}` as it appears in input files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.xmin, self.xmax, self.n)
    }
}

impl From<&Grid> for GridSpec {
    fn from(g: &Grid) -> Self {
        Self {
            xmin: g.xmin(),
            xmax: g.xmax(),
            n: g.len(),
        }
    }
}

/// Command-line replacements for parts of an input grid.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridOverride {
    pub xmin: Option<f64>,
    pub xmax: Option<f64>,
    pub n: Option<usize>,
}

impl GridOverride {
    pub fn is_empty(&self) -> bool {
        self.xmin.is_none() && self.xmax.is_none() && self.n.is_none()
    }

    /// Applies the overrides. When the input carries tabulated samples the grid is fixed by
    /// them, so any override that disagrees is a schema error.
    pub fn apply(&self, spec: GridSpec, tabulated: bool) -> Result<Grid> {
        let merged = GridSpec {
            xmin: self.xmin.unwrap_or(spec.xmin),
            xmax: self.xmax.unwrap_or(spec.xmax),
            n: self.n.unwrap_or(spec.n),
        };
        if tabulated && merged != spec {
            return Err(Error::Format(
                "grid overrides conflict with tabulated input data".into(),
            ));
        }
        merged.build()
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

fn field(grid: Grid, values: Vec<f64>, name: &str) -> Result<ScalarField> {
    if values.len() != grid.len() {
        return Err(Error::Format(format!(
            "`{name}` has {} samples but the grid has {}",
            values.len(),
            grid.len()
        )));
    }
    ScalarField::new(grid, values)
}

/// State file: `{grid, P, S?, constants?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub grid: GridSpec,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<PhysicalConstants>,
}

impl StateFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants.unwrap_or_default()
    }

    pub fn density(&self, grid_override: &GridOverride, check: TruncationCheck) -> Result<Density> {
        let grid = grid_override.apply(self.grid, true)?;
        Density::from_samples(&field(grid, self.p.clone(), "P")?, check)
    }

    /// The state with phase `S` (zero when absent).
    pub fn state(
        &self,
        grid_override: &GridOverride,
        check: TruncationCheck,
    ) -> Result<MadelungState> {
        let density = self.density(grid_override, check)?;
        let grid = *density.grid();
        let phase = match &self.s {
            Some(s) => field(grid, s.clone(), "S")?,
            None => ScalarField::zeros(grid),
        };
        MadelungState::from_density_and_phase(density, phase, self.constants())
    }

    /// Serializable form of a state; `S` includes the stored global phase.
    pub fn from_state(state: &MadelungState) -> Self {
        let hbar = state.constants().hbar;
        let shift = hbar * state.global_phase();
        Self {
            grid: state.grid().into(),
            p: state.density().values().to_vec(),
            s: Some(state.phase().values().iter().map(|s| s + shift).collect()),
            constants: Some(*state.constants()),
        }
    }
}

/// A constraint function: tabulated samples or the monomial `x^power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstraintEntry {
    Tabulated {
        data: Vec<f64>,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        target: Option<f64>,
    },
    Monomial {
        power: i32,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        target: Option<f64>,
    },
}

impl ConstraintEntry {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            Self::Tabulated { lambda, .. } | Self::Monomial { lambda, .. } => *lambda,
        }
    }

    pub fn target(&self) -> Option<f64> {
        match self {
            Self::Tabulated { target, .. } | Self::Monomial { target, .. } => *target,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, Self::Tabulated { .. })
    }

    pub fn field(&self, grid: Grid) -> Result<ScalarField> {
        match self {
            Self::Tabulated { data, .. } => field(grid, data.clone(), "data"),
            Self::Monomial { power, .. } => {
                if *power < 0 && grid.points().any(|x| x == 0.0) {
                    return Err(Error::Format(format!(
                        "monomial power {power} is singular on the grid"
                    )));
                }
                ScalarField::from_fn(grid, |x| x.powi(*power))
            }
        }
    }
}

/// Problem file for `epi`, `maxent` and `sweep`: `{grid, constraints, constants?, lambdas?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub grid: GridSpec,
    pub constraints: Vec<ConstraintEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<PhysicalConstants>,
    /// Multipliers for `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let p: Self = parse(text)?;
        if p.constraints.is_empty() {
            return Err(Error::Format("at least one constraint is required".into()));
        }
        Ok(p)
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants.unwrap_or_default()
    }

    pub fn grid(&self, grid_override: &GridOverride) -> Result<Grid> {
        let tabulated = self.constraints.iter().any(ConstraintEntry::is_tabulated);
        grid_override.apply(self.grid, tabulated)
    }

    pub fn fields(&self, grid: Grid) -> Result<Vec<ScalarField>> {
        self.constraints.iter().map(|c| c.field(grid)).collect()
    }

    /// Constraint spec with multipliers (every entry must carry `lambda`).
    pub fn multiplier_spec(&self, grid: Grid) -> Result<ConstraintSpec> {
        let lambdas = self
            .constraints
            .iter()
            .map(|c| {
                c.lambda()
                    .ok_or_else(|| Error::Format("every constraint needs `lambda`".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        ConstraintSpec::with_multipliers(self.fields(grid)?, lambdas)
    }

    /// The single constraint with its `target`, as used by `maxent`.
    pub fn single_target(&self, grid: Grid) -> Result<(ScalarField, f64)> {
        if self.constraints.len() != 1 {
            return Err(Error::Format("exactly one constraint is required".into()));
        }
        let c = &self.constraints[0];
        let target = c
            .target()
            .ok_or_else(|| Error::Format("constraint needs `target`".into()))?;
        Ok((c.field(grid)?, target))
    }
}

/// Potential for `evolve`: tabulated samples or `coefficient * x^power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialEntry {
    Tabulated { data: Vec<f64> },
    Monomial { power: i32, coefficient: f64 },
}

impl PotentialEntry {
    pub fn field(&self, grid: Grid) -> Result<ScalarField> {
        match self {
            Self::Tabulated { data } => field(grid, data.clone(), "potential.data"),
            Self::Monomial { power, coefficient } => {
                ScalarField::from_fn(grid, |x| coefficient * x.powi(*power))
            }
        }
    }
}

fn default_record_every() -> usize {
    1
}

/// Evolution file: `{state, potential, dt, steps, record_every?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveFile {
    pub state: StateFile,
    pub potential: PotentialEntry,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl EvolveFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: Self = parse(text)?;
        if !(f.dt.is_finite() && f.dt > 0.0) {
            return Err(Error::Format(format!("dt must be positive, got {}", f.dt)));
        }
        Ok(f)
    }
}

/// Heat file: `{grid, Q_heat, constants?, horizon?, dt?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatFile {
    pub grid: GridSpec,
    #[serde(rename = "Q_heat")]
    pub q_heat: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<PhysicalConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl HeatFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn heat_field(&self, grid_override: &GridOverride) -> Result<HeatField> {
        let grid = grid_override.apply(self.grid, true)?;
        HeatField::new(
            field(grid, self.q_heat.clone(), "Q_heat")?,
            self.constants.unwrap_or_default(),
        )
    }

    pub fn from_heat(hf: &HeatField) -> Self {
        Self {
            grid: hf.grid().into(),
            q_heat: hf.q_heat().values().to_vec(),
            constants: Some(*hf.constants()),
            horizon: None,
            dt: None,
        }
    }
}

/// Writes a state as `x,P,S` rows (`S` includes the global phase).
pub fn write_state_csv<W: Write>(state: &MadelungState, writer: W) -> Result<()> {
    let file = StateFile::from_state(state);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "P", "S"])?;
    let s = file.s.unwrap_or_default();
    for ((x, p), s) in state.grid().points().zip(&file.p).zip(&s) {
        w.write_record([fmt_f64(x), fmt_f64(*p), fmt_f64(*s)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `x,P,S` rows back into `(grid, P, S)`.
pub fn read_state_csv<R: std::io::Read>(reader: R) -> Result<(Grid, Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "P", "S"] {
        return Err(Error::Format("expected header `x,P,S`".into()));
    }
    let (mut xs, mut ps, mut ss) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("bad number `{}`: {e}", &rec[i])))
        };
        xs.push(num(0)?);
        ps.push(num(1)?);
        ss.push(num(2)?);
    }
    if xs.len() < 3 {
        return Err(Error::Format("need at least 3 rows".into()));
    }
    let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len())?;
    Ok((grid, ps, ss))
}

/// `manifest.json` of a trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub constants: PhysicalConstants,
    #[serde(rename = "V")]
    pub potential: Vec<f64>,
    pub grid: GridSpec,
    pub files: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes one `step_NNNNN.csv` per recorded state plus `manifest.json` into `dir`.
pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(traj.len());
    for (k, state) in traj.states().iter().enumerate() {
        let name = format!("step_{k:05}.csv");
        let f = fs::File::create(dir.join(&name))?;
        write_state_csv(state, std::io::BufWriter::new(f))?;
        files.push(name);
    }
    let first = traj
        .states()
        .first()
        .ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
    let manifest = TrajectoryManifest {
        t0: traj.times()[0],
        dt: traj.dt(),
        steps: traj.len().saturating_sub(1),
        constants: *first.constants(),
        potential: traj.potential().values().to_vec(),
        grid: traj.potential().grid().into(),
        files,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
    Ok(())
}

/// Reads a dump written by [`write_trajectory`].
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let m: TrajectoryManifest = parse(&text)?;
    let grid = m.grid.build()?;
    let potential = field(grid, m.potential, "V")?;
    let hbar = m.constants.hbar;
    let mut psis = Vec::with_capacity(m.files.len());
    for name in &m.files {
        let (g, p, s) = read_state_csv(fs::File::open(dir.join(name))?)?;
        if g.len() != grid.len() {
            return Err(Error::Format(format!("{name}: grid does not match the manifest")));
        }
        psis.push(
            p.iter()
                .zip(&s)
                .map(|(&p, &s)| Complex64::from_polar(p.max(0.0).sqrt(), s / hbar))
                .collect::<Vec<_>>(),
        );
    }
    Trajectory::from_wavefunctions(m.t0, m.dt, &psis, potential, m.constants)
}
