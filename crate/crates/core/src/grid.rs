//! Uniform 1-D grids, sampled fields, trapezoid quadrature and second-order
//! finite differences.
//!
//! Every functional in the crate is assembled from the three primitives here:
//! [`quadrature`], [`derivative`] and [`second_derivative`]. Interior points
//! use central stencils, endpoints use one-sided stencils of the same order,
//! so all results are second-order accurate in `dx`.
//!
//! Fields that are only meaningful where a density is positive are
//! differentiated with the masked variants ([`masked_derivative`],
//! [`masked_second_derivative`]), which treat every contiguous run of the
//! support as its own sub-grid.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform grid `x_j = xmin + j * dx`, `j = 0..n`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    xmin: f64,
    xmax: f64,
    n: usize,
}

impl Grid {
    pub fn new(xmin: f64, xmax: f64, n: usize) -> Result<Self> {
        if !(xmin.is_finite() && xmax.is_finite()) || xmax <= xmin {
            return Err(Error::InvalidGrid(format!(
                "need finite xmin < xmax, got [{xmin}, {xmax}]"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need n >= 3 points, got {n}")));
        }
        Ok(Self { xmin, xmax, n })
    }

    /// Grid with spacing exactly `dx` (the upper bound is adjusted to land on a node).
    pub fn with_spacing(xmin: f64, xmax: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidGrid(format!("need dx > 0, got {dx}")));
        }
        let cells = ((xmax - xmin) / dx).round() as usize;
        Self::new(xmin, xmin + cells as f64 * dx, cells + 1)
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.xmax - self.xmin) / (self.n - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.xmin + j as f64 * self.dx()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let dx = self.dx();
        (0..self.n).map(move |j| self.xmin + j as f64 * dx)
    }

    /// Index of the node closest to the middle of the interval.
    pub fn center_index(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Grid with half the spacing on the same interval.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n - 1,
            ..*self
        }
    }
}

/// Real values sampled on every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "field value at index {j} is {}",
                values[j]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be finite and of the right length.
    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_vec_unchecked(self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.zip_map(other, |u, v| a * u + b * v)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Writes `x,value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "value"])?;
        for (x, v) in self.grid.points().zip(&self.values) {
            w.write_record([fmt_f64(x), fmt_f64(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a field written by [`ScalarField::write_csv`]; the grid is recovered
    /// from the first and last abscissae and checked for uniform spacing.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(Error::Format(format!(
                "expected header `x,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number `{s}`: {e}")))
            };
            xs.push(parse(&rec[0])?);
            vs.push(parse(&rec[1])?);
        }
        if xs.len() < 3 {
            return Err(Error::Format("need at least 3 rows".into()));
        }
        let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len())?;
        let tol = 1e-9 * grid.dx();
        for (j, x) in xs.iter().enumerate() {
            if (x - grid.x(j)).abs() > tol {
                return Err(Error::Format(format!("row {j}: abscissa {x} is off the uniform grid")));
            }
        }
        Self::new(grid, vs)
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Composite trapezoid rule over the whole grid.
pub fn quadrature(f: &ScalarField) -> f64 {
    trapezoid(f.values(), f.grid().dx())
}

pub(crate) fn trapezoid(v: &[f64], dx: f64) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..n - 1].iter().sum();
    dx * (inner + 0.5 * (v[0] + v[n - 1]))
}

/// First derivative: central differences inside, second-order one-sided at the ends.
pub fn derivative(f: &ScalarField) -> ScalarField {
    ScalarField::from_vec_unchecked(*f.grid(), diff1(f.values(), f.grid().dx()))
}

/// Second derivative: three-point stencil inside, four-point one-sided at the ends
/// (three-point when only three nodes exist).
pub fn second_derivative(f: &ScalarField) -> ScalarField {
    ScalarField::from_vec_unchecked(*f.grid(), diff2(f.values(), f.grid().dx()))
}

pub(crate) fn diff1(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    let inv = 0.5 / dx;
    for j in 1..n - 1 {
        out[j] = (v[j + 1] - v[j - 1]) * inv;
    }
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv;
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv;
    out
}

pub(crate) fn diff2(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    let inv = 1.0 / (dx * dx);
    for j in 1..n - 1 {
        out[j] = (v[j + 1] - 2.0 * v[j] + v[j - 1]) * inv;
    }
    if n >= 4 {
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * inv;
        out[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) * inv;
    } else {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}

/// Maximal contiguous runs of `true` in `mask`, as half-open index ranges.
pub fn support_runs(mask: &[bool]) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = None;
    for (j, &m) in mask.iter().enumerate() {
        match (m, start) {
            (true, None) => start = Some(j),
            (false, Some(s)) => {
                runs.push(s..j);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(s..mask.len());
    }
    runs
}

/// Smallest run length on which the masked stencils are applied; shorter runs get zeros.
pub const MIN_RUN: usize = 4;

fn masked_apply(
    v: &[f64],
    mask: &[bool],
    dx: f64,
    op: impl Fn(&[f64], f64) -> Vec<f64>,
) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for run in support_runs(mask) {
        if run.len() < MIN_RUN {
            continue;
        }
        let d = op(&v[run.clone()], dx);
        out[run].copy_from_slice(&d);
    }
    out
}

/// [`derivative`] applied independently on each run of the mask; zero elsewhere.
pub fn masked_derivative(f: &ScalarField, mask: &[bool]) -> ScalarField {
    ScalarField::from_vec_unchecked(
        *f.grid(),
        masked_apply(f.values(), mask, f.grid().dx(), diff1),
    )
}

/// [`second_derivative`] applied independently on each run of the mask; zero elsewhere.
pub fn masked_second_derivative(f: &ScalarField, mask: &[bool]) -> ScalarField {
    ScalarField::from_vec_unchecked(
        *f.grid(),
        masked_apply(f.values(), mask, f.grid().dx(), diff2),
    )
}

/// Mask entries that belong to runs long enough to carry the masked stencils.
pub fn effective_mask(mask: &[bool]) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for run in support_runs(mask) {
        if run.len() >= MIN_RUN {
            out[run].iter_mut().for_each(|m| *m = true);
        }
    }
    out
}

/// `mask` with `k` nodes removed from each end of every run.
///
/// Quantities built from nested one-sided stencils are only first order on the
/// outermost nodes of a run; comparisons between such quantities use this interior.
pub fn eroded_mask(mask: &[bool], k: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for run in support_runs(mask) {
        if run.len() > 2 * k {
            out[run.start + k..run.end - k].iter_mut().for_each(|m| *m = true);
        }
    }
    out
}

/// Trapezoid integral of `values` with everything outside `mask` treated as zero.
pub fn masked_quadrature(f: &ScalarField, mask: &[bool]) -> f64 {
    let v: Vec<f64> = f
        .values()
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    trapezoid(&v, f.grid().dx())
}

/// Largest `|value|` over the masked nodes.
pub fn masked_max_abs(values: &[f64], mask: &[bool]) -> f64 {
    values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold(0.0, |acc, (v, _)| acc.max(v.abs()))
}
