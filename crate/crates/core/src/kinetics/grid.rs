//! Tensor-product cell grids and the finite-volume density solver.
//!
//! The solver advances the conservative form
//! `df/ds = -div(X_H f) + w(H) f`, where `w(H)` is the particle weight rate,
//! with first-order upwind face fluxes and the three-stage SSP Runge-Kutta
//! scheme. Axes of size one are collapsed: the field must not move along
//! them and they carry no volume factor.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{with_pool, RateEvaluator};
use crate::chart::{Chart, ChartKind};
use crate::error::{GeoError, Result};
use crate::fields::FieldSpec;
use crate::flow::{FieldEvaluator, Hamiltonian};
use crate::poly::Poly;

/// Smallest number of cells along an axis the grid solver accepts.
pub const MIN_ACTIVE_CELLS: usize = 32;

/// Velocities along collapsed axes above this are rejected.
const COLLAPSED_SPEED_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    ZeroInflow,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::ZeroInflow => "zero-inflow",
        })
    }
}

impl FromStr for Boundary {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "zero-inflow" => Ok(Boundary::ZeroInflow),
            other => Err(GeoError::Config(format!("unknown boundary {other:?}"))),
        }
    }
}

/// Uniform cells on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub size: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::ZeroInflow
}

impl Axis {
    pub fn new(lo: f64, hi: f64, size: usize, boundary: Boundary) -> Result<Self> {
        let a = Axis { lo, hi, size, boundary };
        a.validate()?;
        Ok(a)
    }

    /// A single cell centred on `at`.
    pub fn collapsed(at: f64) -> Self {
        Axis {
            lo: at,
            hi: at,
            size: 1,
            boundary: Boundary::ZeroInflow,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(GeoError::Config("axis bounds must be finite".into()));
        }
        if self.size == 0 {
            return Err(GeoError::Config("axis needs at least one cell".into()));
        }
        if self.size > 1 && self.hi <= self.lo {
            return Err(GeoError::Config(format!(
                "axis bounds [{}, {}] are empty",
                self.lo, self.hi
            )));
        }
        if self.size == 1 && self.hi < self.lo {
            return Err(GeoError::Config("collapsed axis has hi < lo".into()));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.size > 1
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.size as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        if self.is_active() {
            self.lo + (i as f64 + 0.5) * self.width()
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    /// Index of the cell holding `x`, if any.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !self.is_active() {
            return Some(0);
        }
        if x < self.lo || x > self.hi {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.size - 1))
    }
}

/// One axis per chart coordinate, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    chart: Chart,
    axes: Vec<Axis>,
}

impl GridLayout {
    pub fn new(chart: Chart, axes: Vec<Axis>) -> Result<Self> {
        if axes.len() != chart.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: chart.dim(),
                found: axes.len(),
            });
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(GridLayout { chart, axes })
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.size).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn active_axes(&self) -> Vec<usize> {
        (0..self.axes.len()).filter(|&i| self.axes[i].is_active()).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.axes[i + 1].size;
        }
        s
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().filter(|a| a.is_active()).map(Axis::width).product()
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for i in (0..self.axes.len()).rev() {
            idx[i] = flat % self.axes[i].size;
            flat /= self.axes[i].size;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.size + i)
    }

    pub fn center_into(&self, flat: usize, out: &mut [f64]) {
        for (i, &k) in self.unravel(flat).iter().enumerate() {
            out[i] = self.axes[i].center(k);
        }
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.axes.len()];
        self.center_into(flat, &mut x);
        x
    }

    /// Flat index of the cell holding `x`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for (a, &xi) in self.axes.iter().zip(x) {
            flat = flat * a.size + a.cell_of(xi)?;
        }
        Some(flat)
    }
}

/// Cell averages of a density.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    layout: GridLayout,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(layout: GridLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(GeoError::DimensionMismatch {
                expected: layout.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeoError::NonFinite(i));
        }
        Ok(GridDensity { layout, values })
    }

    pub fn zeros(layout: GridLayout) -> Self {
        let values = vec![0.0; layout.len()];
        GridDensity { layout, values }
    }

    /// Point values at cell centres.
    pub fn sample(layout: GridLayout, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        let values: Vec<f64> = (0..layout.len())
            .into_par_iter()
            .map(|k| f(&layout.center(k)))
            .collect();
        GridDensity::new(layout, values)
    }

    pub fn sample_poly(layout: GridLayout, f: &Poly) -> Result<Self> {
        layout.chart().ensure_poly(f)?;
        let c = f.compile();
        GridDensity::sample(layout, |x| c.eval(x))
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn chart(&self) -> Chart {
        self.layout.chart()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.layout.cell_volume()
    }

    /// Value of the cell holding `x`, zero outside the grid.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.layout.locate(x).map_or(0.0, |k| self.values[k])
    }

    fn ensure_same_layout(&self, other: &GridDensity) -> Result<()> {
        if self.layout != other.layout {
            return Err(GeoError::Config("grid layouts differ".into()));
        }
        Ok(())
    }

    /// `sum |f - g| dV`
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        self.ensure_same_layout(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum();
        Ok(s * self.layout.cell_volume())
    }

    /// L1 distance divided by the mass of `reference`.
    pub fn relative_l1(&self, reference: &GridDensity) -> Result<f64> {
        Ok(self.l1_distance(reference)? / reference.mass().abs())
    }

    /// Mass-weighted mean of coordinate `axis`.
    pub fn centroid(&self, axis: usize) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            num += v * self.layout.center(k)[axis];
            den += v;
        }
        num / den
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let c = self.chart();
        let io = |e: std::io::Error| GeoError::Io(e.to_string());
        writeln!(w, "# geokin grid density").map_err(io)?;
        writeln!(w, "chart {} {}", c.kind(), c.n()).map_err(io)?;
        for (name, a) in c.var_names().iter().zip(&self.layout.axes) {
            writeln!(w, "axis {name} {} {} {} {}", a.lo, a.hi, a.size, a.boundary).map_err(io)?;
        }
        writeln!(w, "values {}", self.values.len()).map_err(io)?;
        for v in &self.values {
            writeln!(w, "{v}").map_err(io)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let bad = |line: usize, msg: &str| GeoError::Config(format!("grid file line {}: {msg}", line + 1));
        let mut chart = None;
        let mut axes = Vec::new();
        let mut expected = None;
        for (ln, line) in lines.by_ref() {
            let line = line.map_err(|e| GeoError::Io(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = t.split_whitespace().collect();
            match words[0] {
                "chart" if words.len() == 3 => {
                    let kind: ChartKind = words[1].parse().map_err(|_| bad(ln, "unknown chart kind"))?;
                    let n = words[2].parse().map_err(|_| bad(ln, "bad chart dimension"))?;
                    chart = Some(Chart::new(kind, n)?);
                }
                "axis" if words.len() == 6 => {
                    let c = chart.ok_or_else(|| bad(ln, "axis before chart"))?;
                    if c.var_index(words[1]) != Some(axes.len()) {
                        return Err(bad(ln, "axis out of coordinate order"));
                    }
                    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(ln, "bad axis bound"));
                    let size = words[4].parse().map_err(|_| bad(ln, "bad axis size"))?;
                    axes.push(Axis::new(num(words[2])?, num(words[3])?, size, words[5].parse()?)?);
                }
                "values" if words.len() == 2 => {
                    expected = Some(words[1].parse::<usize>().map_err(|_| bad(ln, "bad value count"))?);
                    break;
                }
                _ => return Err(bad(ln, "unrecognised header line")),
            }
        }
        let chart = chart.ok_or_else(|| bad(0, "missing chart line"))?;
        let expected = expected.ok_or_else(|| bad(0, "missing values line"))?;
        let layout = GridLayout::new(chart, axes)?;
        let mut values = Vec::with_capacity(expected);
        for (ln, line) in lines {
            let line = line.map_err(|e| GeoError::Io(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(t.parse::<f64>().map_err(|_| bad(ln, "bad value"))?);
        }
        if values.len() != expected {
            return Err(GeoError::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        GridDensity::new(layout, values)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_text(&mut w)?;
        w.flush().map_err(|e| GeoError::Io(e.to_string()))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
        GridDensity::read_text(std::io::BufReader::new(f))
    }
}

/// Face velocities along one active axis.
struct AxisFluxes {
    inv_width: f64,
    /// Velocity on the upper face of each cell.
    up: Vec<f64>,
    /// Velocity on the lower face of each cell.
    down: Vec<f64>,
    /// Neighbour across the upper face, `None` for the zero-inflow ghost.
    upper_neighbour: Vec<Option<usize>>,
    lower_neighbour: Vec<Option<usize>>,
}

/// Precomputed upwind operator for one Hamiltonian on one layout.
pub struct GridSolver {
    layout: GridLayout,
    axes: Vec<AxisFluxes>,
    source: Vec<f64>,
    max_outflow: f64,
}

impl GridSolver {
    pub fn new(layout: &GridLayout, h: &Hamiltonian) -> Result<Self> {
        let chart = layout.chart();
        let spec = FieldSpec::hamiltonian(chart);
        let field = FieldEvaluator::new(&spec, h)?;
        let collapsed: Vec<usize> = (0..chart.dim()).filter(|&a| !layout.axis(a).is_active()).collect();
        let rate = RateEvaluator::new(&chart, h, &collapsed)?;
        let dim = chart.dim();
        let cells = layout.len();
        let strides = layout.strides();
        let names = chart.var_names();

        let centre_velocity: Vec<Vec<f64>> = (0..cells)
            .into_par_iter()
            .map(|k| {
                let mut v = vec![0.0; dim];
                field.field(&layout.center(k), &mut v);
                v
            })
            .collect();
        for (a, axis) in layout.axes().iter().enumerate() {
            if axis.is_active() {
                if axis.size < MIN_ACTIVE_CELLS {
                    return Err(GeoError::Config(format!(
                        "axis {} has {} cells, the grid solver needs at least {MIN_ACTIVE_CELLS}",
                        names[a], axis.size
                    )));
                }
                continue;
            }
            if let Some(v) = centre_velocity.iter().map(|v| v[a].abs()).find(|s| *s > COLLAPSED_SPEED_TOL) {
                return Err(GeoError::Config(format!(
                    "field moves along collapsed axis {} (speed {v:e})",
                    names[a]
                )));
            }
        }

        let face_velocity = |k: usize, a: usize, offset: f64| -> f64 {
            let mut x = layout.center(k);
            x[a] += offset * layout.axis(a).width();
            let mut v = vec![0.0; dim];
            field.field(&x, &mut v);
            v[a]
        };

        let mut axes = Vec::new();
        for a in layout.active_axes() {
            let axis = *layout.axis(a);
            let stride = strides[a];
            let up: Vec<f64> = (0..cells).into_par_iter().map(|k| face_velocity(k, a, 0.5)).collect();
            let mut upper_neighbour = vec![None; cells];
            let mut lower_neighbour = vec![None; cells];
            let mut down = vec![0.0; cells];
            for k in 0..cells {
                let i = (k / stride) % axis.size;
                upper_neighbour[k] = if i + 1 < axis.size {
                    Some(k + stride)
                } else if axis.boundary == Boundary::Periodic {
                    Some(k - i * stride)
                } else {
                    None
                };
                lower_neighbour[k] = if i > 0 {
                    Some(k - stride)
                } else if axis.boundary == Boundary::Periodic {
                    Some(k + (axis.size - 1) * stride)
                } else {
                    None
                };
                down[k] = match lower_neighbour[k] {
                    Some(j) => up[j],
                    None => face_velocity(k, a, -0.5),
                };
            }
            axes.push(AxisFluxes {
                inv_width: 1.0 / axis.width(),
                up,
                down,
                upper_neighbour,
                lower_neighbour,
            });
        }

        let source: Vec<f64> = (0..cells).into_par_iter().map(|k| rate.eval(&layout.center(k))).collect();
        let max_outflow = (0..cells)
            .map(|k| {
                axes.iter()
                    .map(|ax| (ax.up[k].max(0.0) + (-ax.down[k]).max(0.0)) * ax.inv_width)
                    .sum::<f64>()
                    + (-source[k]).max(0.0)
            })
            .fold(0.0, f64::max);
        if let Some(k) = source.iter().position(|v| !v.is_finite()) {
            return Err(GeoError::NonFinite(k));
        }
        Ok(GridSolver {
            layout: layout.clone(),
            axes,
            source,
            max_outflow,
        })
    }

    /// Largest step the upwind scheme accepts.
    pub fn max_stable_step(&self) -> f64 {
        if self.max_outflow > 0.0 {
            1.0 / self.max_outflow
        } else {
            f64::INFINITY
        }
    }

    fn rhs(&self, f: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            let mut acc = self.source[k] * f[k];
            for ax in &self.axes {
                let ghost = |j: Option<usize>| j.map_or(0.0, |j| f[j]);
                let u = ax.up[k];
                let flux_up = u.max(0.0) * f[k] + u.min(0.0) * ghost(ax.upper_neighbour[k]);
                let d = ax.down[k];
                let flux_down = d.max(0.0) * ghost(ax.lower_neighbour[k]) + d.min(0.0) * f[k];
                acc -= (flux_up - flux_down) * ax.inv_width;
            }
            *o = acc;
        });
    }

    /// Advances `density` by `duration` in steps no longer than `dt`.
    pub fn advance(&self, density: &mut GridDensity, duration: f64, dt: f64) -> Result<()> {
        if density.layout != self.layout {
            return Err(GeoError::Config("density layout differs from solver layout".into()));
        }
        if !(duration >= 0.0 && duration.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
            return Err(GeoError::Config("durations and steps must be positive and finite".into()));
        }
        if dt > self.max_stable_step() {
            return Err(GeoError::Stability(format!(
                "dt = {dt} exceeds the upwind bound {:.6e}",
                self.max_stable_step()
            )));
        }
        if duration == 0.0 {
            return Ok(());
        }
        let steps = (duration / dt - 1e-9).ceil().max(1.0) as usize;
        let h = duration / steps as f64;
        let cells = self.layout.len();
        let mut k = vec![0.0; cells];
        let mut stage = vec![0.0; cells];
        let f = &mut density.values;
        for _ in 0..steps {
            self.rhs(f, &mut k);
            stage.par_iter_mut().enumerate().for_each(|(i, s)| *s = f[i] + h * k[i]);
            self.rhs(&stage, &mut k);
            stage
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, s)| *s = 0.75 * f[i] + 0.25 * (*s + h * k[i]));
            self.rhs(&stage, &mut k);
            f.par_iter_mut()
                .enumerate()
                .for_each(|(i, v)| *v = (*v + 2.0 * (stage[i] + h * k[i])) / 3.0);
        }
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            return Err(GeoError::NonFinite(i));
        }
        Ok(())
    }
}

/// Grid solution of the density equation from `f0` over `[0, t_final]`.
pub fn solve_density_grid(
    chart: &Chart,
    h: &Hamiltonian,
    f0: &GridDensity,
    t_final: f64,
    dt: f64,
) -> Result<GridDensity> {
    chart.ensure_same(&f0.chart())?;
    if let Hamiltonian::Poly(p) = h {
        chart.ensure_poly(p)?;
    }
    if !(t_final > 0.0) {
        return Err(GeoError::Config("t_final must be positive".into()));
    }
    with_pool(|| {
        let solver = GridSolver::new(f0.layout(), h)?;
        let mut f = f0.clone();
        solver.advance(&mut f, t_final, dt)?;
        Ok(f)
    })?
}
