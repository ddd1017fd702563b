//! Weighted characteristics for the density equation.
//!
//! Each particle carries a mass `w` and follows `X_H`; along the flow the
//! density equation reduces to `d log w/ds = weight_rate(H)`, less the
//! divergence along collapsed axes. Seeding is a
//! deterministic sub-lattice per cell, pushes run in parallel and
//! cloud-in-cell deposition runs in particle order.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::grid::{Boundary, GridDensity, GridLayout};
use super::{with_pool, RateEvaluator};
use crate::chart::Chart;
use crate::error::{GeoError, Result};
use crate::fields::FieldSpec;
use crate::flow::rk::Rk4;
use crate::flow::{FieldEvaluator, Hamiltonian};
use crate::poly::{CompiledPoly, Poly};

/// Smallest ensemble the particle solver accepts.
pub const MIN_PARTICLES: usize = 1000;

/// Velocities along collapsed axes above this are rejected.
const COLLAPSED_SPEED_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    chart: Chart,
    positions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Chart indices in CSV column order `q.., p.., z, t`.
fn csv_order(chart: &Chart) -> Vec<usize> {
    let mut order: Vec<usize> = (0..chart.n()).map(|i| chart.q(i)).collect();
    order.extend((0..chart.n()).map(|i| chart.p(i)));
    order.extend(chart.z_index());
    order.extend(chart.t_index());
    order
}

impl ParticleEnsemble {
    pub fn new(chart: Chart, positions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(GeoError::DimensionMismatch {
                expected: positions.len(),
                found: weights.len(),
            });
        }
        for (i, (x, w)) in positions.iter().zip(&weights).enumerate() {
            if x.len() != chart.dim() {
                return Err(GeoError::DimensionMismatch {
                    expected: chart.dim(),
                    found: x.len(),
                });
            }
            if !w.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(GeoError::NonFinite(i));
            }
        }
        Ok(ParticleEnsemble {
            chart,
            positions,
            weights,
        })
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Deterministic quiet start: `k^d` evenly spaced particles in every
    /// cell of `layout`, with `k` the smallest integer reaching `count`
    /// overall, each weighted by `f0` at its position times its share of
    /// the cell volume. Particles of zero weight are dropped.
    pub fn quiet_start(layout: &GridLayout, f0: &DensitySource, count: usize) -> Result<Self> {
        let chart = layout.chart();
        let active = layout.active_axes();
        let d = active.len() as i32;
        let cells = layout.len();
        let mut k = ((count as f64 / cells as f64).powf(1.0 / d.max(1) as f64)).ceil().max(1.0) as usize;
        while k.pow(d as u32) * cells < count {
            k += 1;
        }
        let per_cell = k.pow(d as u32);
        let share = layout.cell_volume() / per_cell as f64;
        let seeded: Vec<(Vec<f64>, f64)> = (0..cells)
            .into_par_iter()
            .flat_map_iter(|cell| {
                let centre = layout.center(cell);
                let active = &active;
                (0..per_cell).filter_map(move |sub| {
                    let mut x = centre.clone();
                    let mut rest = sub;
                    for &a in active.iter().rev() {
                        let j = rest % k;
                        rest /= k;
                        let w = layout.axis(a).width();
                        x[a] += ((j as f64 + 0.5) / k as f64 - 0.5) * w;
                    }
                    let m = f0.eval(&x) * share;
                    (m != 0.0).then_some((x, m))
                })
            })
            .collect();
        let (positions, weights) = seeded.into_iter().unzip();
        ParticleEnsemble::new(chart, positions, weights)
    }

    /// Cloud-in-cell deposition. Weight falling outside a zero-inflow axis
    /// folds into the edge cell; periodic axes wrap.
    pub fn deposit(&self, layout: &GridLayout) -> Result<GridDensity> {
        self.chart.ensure_same(&layout.chart())?;
        let active = layout.active_axes();
        let strides = layout.strides();
        let mut values = vec![0.0; layout.len()];
        let inv_volume = 1.0 / layout.cell_volume();
        let corners = 1usize << active.len();
        let mut lower = vec![0i64; active.len()];
        let mut frac = vec![0.0; active.len()];
        for (x, &w) in self.positions.iter().zip(&self.weights) {
            for (j, &a) in active.iter().enumerate() {
                let axis = layout.axis(a);
                let u = (x[a] - axis.lo) / axis.width() - 0.5;
                let i0 = u.floor();
                lower[j] = i0 as i64;
                frac[j] = u - i0;
            }
            for corner in 0..corners {
                let mut flat = 0usize;
                let mut share = w * inv_volume;
                for (j, &a) in active.iter().enumerate() {
                    let axis = layout.axis(a);
                    let size = axis.size as i64;
                    let upper = corner >> j & 1 == 1;
                    let mut i = lower[j] + i64::from(upper);
                    share *= if upper { frac[j] } else { 1.0 - frac[j] };
                    i = match axis.boundary {
                        Boundary::Periodic => i.rem_euclid(size),
                        Boundary::ZeroInflow => i.clamp(0, size - 1),
                    };
                    flat += i as usize * strides[a];
                }
                values[flat] += share;
            }
        }
        GridDensity::new(layout.clone(), values)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| GeoError::Io(e.to_string());
        let names = self.chart.var_names();
        let order = csv_order(&self.chart);
        let mut header: Vec<&str> = order.iter().map(|&i| names[i].as_str()).collect();
        header.push("w");
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for (x, m) in self.positions.iter().zip(&self.weights) {
            let row: Vec<String> = order.iter().map(|&i| x[i].to_string()).chain([m.to_string()]).collect();
            writeln!(w, "{}", row.join(",")).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(chart: Chart, r: R) -> Result<Self> {
        let order = csv_order(&chart);
        let names = chart.var_names();
        let mut expected: Vec<&str> = order.iter().map(|&i| names[i].as_str()).collect();
        expected.push("w");
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| GeoError::Config("empty particle file".into()))?
            .map_err(|e| GeoError::Io(e.to_string()))?;
        if header.trim().split(',').map(str::trim).ne(expected.iter().copied()) {
            return Err(GeoError::Config(format!("particle file: expected header {}", expected.join(","))));
        }
        let mut positions = Vec::new();
        let mut weights = Vec::new();
        for (ln, line) in lines.enumerate() {
            let line = line.map_err(|e| GeoError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| GeoError::Config(format!("particle file line {}: {e}", ln + 2)))?;
            if vals.len() != order.len() + 1 {
                return Err(GeoError::Config(format!(
                    "particle file line {}: expected {} columns",
                    ln + 2,
                    order.len() + 1
                )));
            }
            let mut x = vec![0.0; chart.dim()];
            for (col, &i) in order.iter().enumerate() {
                x[i] = vals[col];
            }
            positions.push(x);
            weights.push(vals[order.len()]);
        }
        ParticleEnsemble::new(chart, positions, weights)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w)?;
        w.flush().map_err(|e| GeoError::Io(e.to_string()))
    }
}

/// Initial density for the particle solver.
#[derive(Clone)]
pub enum DensitySource {
    Grid(GridDensity),
    Poly(CompiledPoly),
    Function(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for DensitySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DensitySource::Grid(_) => f.write_str("Grid(..)"),
            DensitySource::Poly(_) => f.write_str("Poly(..)"),
            DensitySource::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl DensitySource {
    pub fn poly(p: &Poly) -> Self {
        DensitySource::Poly(p.compile())
    }

    pub fn function(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        DensitySource::Function(Arc::new(f))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            DensitySource::Grid(g) => g.value_at(x),
            DensitySource::Poly(p) => p.eval(x),
            DensitySource::Function(f) => f(x),
        }
    }
}

/// Result of a particle solve with its mass ledger.
#[derive(Clone, Debug)]
pub struct ParticleSolve {
    pub density: GridDensity,
    /// Surviving particles with their final weights.
    pub ensemble: ParticleEnsemble,
    pub initial_mass: f64,
    /// Weight of the surviving particles.
    pub final_mass: f64,
    /// Weight carried out through zero-inflow boundaries, at exit time.
    pub escaped_mass: f64,
    pub escaped_count: usize,
}

impl ParticleSolve {
    /// Net weight produced by the source term.
    pub fn source_mass_change(&self) -> f64 {
        self.final_mass + self.escaped_mass - self.initial_mass
    }
}

enum Fate {
    Alive(Vec<f64>, f64),
    Escaped(f64),
}

/// Pushes an ensemble through the Hamiltonian flow on a fixed domain.
pub struct ParticlePusher {
    layout: GridLayout,
    field: FieldEvaluator,
    rate: RateEvaluator,
}

impl ParticlePusher {
    pub fn new(layout: &GridLayout, h: &Hamiltonian) -> Result<Self> {
        let chart = layout.chart();
        if let Hamiltonian::Poly(p) = h {
            chart.ensure_poly(p)?;
        }
        let collapsed: Vec<usize> = (0..chart.dim()).filter(|&a| !layout.axis(a).is_active()).collect();
        Ok(ParticlePusher {
            layout: layout.clone(),
            field: FieldEvaluator::new(&FieldSpec::hamiltonian(chart), h)?,
            rate: RateEvaluator::new(&chart, h, &collapsed)?,
        })
    }

    /// Rejects steps longer than one cell crossing at the fastest particle,
    /// and any motion along collapsed axes.
    fn check_step(&self, ensemble: &ParticleEnsemble, dt: f64) -> Result<()> {
        let dim = self.layout.chart().dim();
        let names = self.layout.chart().var_names();
        let worst = ensemble
            .positions
            .par_iter()
            .map(|x| {
                let mut v = vec![0.0; dim];
                self.field.field(x, &mut v);
                let mut cfl = 0.0f64;
                let mut still = 0.0f64;
                for (a, axis) in self.layout.axes().iter().enumerate() {
                    if axis.is_active() {
                        cfl = cfl.max(v[a].abs() / axis.width());
                    } else {
                        still = still.max(v[a].abs());
                    }
                }
                (cfl, still)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        if worst.1 > COLLAPSED_SPEED_TOL {
            let a = self.layout.axes().iter().position(|a| !a.is_active()).unwrap_or(0);
            return Err(GeoError::Config(format!(
                "field moves along collapsed axis {} (speed {:e})",
                names[a], worst.1
            )));
        }
        if dt * worst.0 > 1.0 {
            return Err(GeoError::Stability(format!(
                "dt = {dt} crosses more than one cell per step; limit {:.6e}",
                1.0 / worst.0
            )));
        }
        Ok(())
    }

    fn push_one(&self, x0: &[f64], w0: f64, steps: usize, h: f64) -> Result<Fate> {
        let dim = x0.len();
        let mut rk = Rk4::new(dim + 1);
        let mut state: Vec<f64> = x0.iter().copied().chain([0.0]).collect();
        let mut next = vec![0.0; dim + 1];
        let mut rhs = |y: &[f64], out: &mut [f64]| {
            self.field.field(&y[..dim], &mut out[..dim]);
            out[dim] = self.rate.eval(&y[..dim]);
        };
        for step in 0..steps {
            rk.step(&mut rhs, &state, h, &mut next);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(GeoError::Integration {
                    last_time: step as f64 * h,
                    reason: "particle state became non-finite".into(),
                });
            }
            std::mem::swap(&mut state, &mut next);
            for (a, axis) in self.layout.axes().iter().enumerate() {
                if !axis.is_active() {
                    continue;
                }
                let x = &mut state[a];
                if *x >= axis.lo && *x <= axis.hi {
                    continue;
                }
                match axis.boundary {
                    Boundary::Periodic => {
                        *x = axis.lo + (*x - axis.lo).rem_euclid(axis.hi - axis.lo);
                    }
                    Boundary::ZeroInflow => return Ok(Fate::Escaped(w0 * state[dim].exp())),
                }
            }
        }
        let w = w0 * state[dim].exp();
        state.truncate(dim);
        Ok(Fate::Alive(state, w))
    }

    /// Advances the ensemble by `duration` in steps no longer than `dt`;
    /// returns the escaped weight and count.
    pub fn advance(&self, ensemble: &mut ParticleEnsemble, duration: f64, dt: f64) -> Result<(f64, usize)> {
        self.layout.chart().ensure_same(&ensemble.chart)?;
        if !(duration >= 0.0 && duration.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
            return Err(GeoError::Config("durations and steps must be positive and finite".into()));
        }
        self.check_step(ensemble, dt)?;
        if duration == 0.0 {
            return Ok((0.0, 0));
        }
        let steps = (duration / dt - 1e-9).ceil().max(1.0) as usize;
        let h = duration / steps as f64;
        let fates: Vec<Fate> = ensemble
            .positions
            .par_iter()
            .zip(ensemble.weights.par_iter())
            .map(|(x, &w)| self.push_one(x, w, steps, h))
            .collect::<Result<_>>()?;
        let mut positions = Vec::with_capacity(fates.len());
        let mut weights = Vec::with_capacity(fates.len());
        let (mut escaped, mut count) = (0.0, 0);
        for fate in fates {
            match fate {
                Fate::Alive(x, w) => {
                    positions.push(x);
                    weights.push(w);
                }
                Fate::Escaped(w) => {
                    escaped += w;
                    count += 1;
                }
            }
        }
        ensemble.positions = positions;
        ensemble.weights = weights;
        Ok((escaped, count))
    }
}

/// Particle solution of the density equation: quiet-start seeding of `f0`
/// on `layout` (or on the grid of `f0` when it is one), pushes to
/// `t_final` and deposition onto `layout`.
pub fn solve_density_particle(
    chart: &Chart,
    h: &Hamiltonian,
    f0: &DensitySource,
    layout: &GridLayout,
    t_final: f64,
    dt: f64,
    particle_count: usize,
) -> Result<ParticleSolve> {
    chart.ensure_same(&layout.chart())?;
    if !(t_final > 0.0) {
        return Err(GeoError::Config("t_final must be positive".into()));
    }
    if particle_count < MIN_PARTICLES {
        return Err(GeoError::Config(format!(
            "particle_count = {particle_count} is below the minimum {MIN_PARTICLES}"
        )));
    }
    let seed_layout = match f0 {
        DensitySource::Grid(g) => {
            chart.ensure_same(&g.chart())?;
            g.layout().clone()
        }
        _ => layout.clone(),
    };
    with_pool(|| {
        let pusher = ParticlePusher::new(layout, h)?;
        let mut ensemble = ParticleEnsemble::quiet_start(&seed_layout, f0, particle_count)?;
        let initial_mass = ensemble.total_weight();
        let (escaped_mass, escaped_count) = pusher.advance(&mut ensemble, t_final, dt)?;
        Ok(ParticleSolve {
            density: ensemble.deposit(layout)?,
            final_mass: ensemble.total_weight(),
            ensemble,
            initial_mass,
            escaped_mass,
            escaped_count,
        })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartKind;
    use crate::kinetics::grid::Axis;

    fn layout(chart: Chart, half: f64, size: usize, boundary: Boundary) -> GridLayout {
        let axes = (0..chart.dim()).map(|_| Axis::new(-half, half, size, boundary).unwrap()).collect();
        GridLayout::new(chart, axes).unwrap()
    }

    #[test]
    fn quiet_start_mass_matches_grid() {
        let c = Chart::new(ChartKind::Symplectic, 1).unwrap();
        let l = layout(c, 2.0, 16, Boundary::ZeroInflow);
        let g = GridDensity::sample(l.clone(), |x| (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        let e = ParticleEnsemble::quiet_start(&l, &DensitySource::Grid(g.clone()), 1000).unwrap();
        assert_eq!(e.len(), 16 * 16 * 4);
        assert!((e.total_weight() - g.mass()).abs() < 1e-12);
        let back = e.deposit(&l).unwrap();
        assert!((back.mass() - g.mass()).abs() < 1e-12);
    }

    #[test]
    fn deposit_single_particle() {
        let c = Chart::new(ChartKind::Symplectic, 1).unwrap();
        let l = layout(c, 1.0, 4, Boundary::Periodic);
        let e = ParticleEnsemble::new(c, vec![vec![0.0, 0.25]], vec![1.0]).unwrap();
        let g = e.deposit(&l).unwrap();
        let vol = l.cell_volume();
        let nonzero: Vec<f64> = g.values().iter().filter(|v| **v != 0.0).map(|v| v * vol).collect();
        assert_eq!(nonzero.len(), 2);
        assert!((nonzero.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_orders_columns() {
        let c = Chart::new(ChartKind::Cocontact, 1).unwrap();
        let e = ParticleEnsemble::new(c, vec![vec![0.5, 1.0, 2.0, 3.0]], vec![0.25]).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("q1,p1,z,t,w\n1,2,3,0.5,0.25"));
        assert_eq!(ParticleEnsemble::read_csv(c, &buf[..]).unwrap(), e);
    }

    #[test]
    fn escapes_are_booked() {
        let c = Chart::new(ChartKind::Symplectic, 1).unwrap();
        let l = layout(c, 1.0, 32, Boundary::ZeroInflow);
        let h = c.parse("p1^2/2").unwrap().into();
        let f0 = DensitySource::function(|_| 1.0);
        let out = solve_density_particle(&c, &h, &f0, &l, 1.0, 0.02, 1024).unwrap();
        assert!(out.escaped_count > 0);
        assert!((out.source_mass_change()).abs() < 1e-12);
        assert!((out.density.mass() - out.final_mass).abs() < 1e-12);
    }

    #[test]
    fn slice_through_contracting_axis() {
        // p = 0 is invariant under p' = -p, but the slice density still
        // grows by the p-contraction: f = f0(q, 0, z e^s) e^{3s}
        let c = Chart::new(ChartKind::Contact, 1).unwrap();
        let l = GridLayout::new(
            c,
            vec![
                Axis::new(-3.0, 3.0, 32, Boundary::ZeroInflow).unwrap(),
                Axis::collapsed(0.0),
                Axis::new(-3.0, 3.0, 32, Boundary::ZeroInflow).unwrap(),
            ],
        )
        .unwrap();
        let f0 = |x: &[f64]| (-(x[0] * x[0] + x[2] * x[2]) / 1.5).exp();
        let h = c.parse("z").unwrap().into();
        let out = solve_density_particle(&c, &h, &DensitySource::function(f0), &l, 0.5, 0.01, 4096).unwrap();
        let e = 0.5f64.exp();
        let exact = GridDensity::sample(l, |x| f0(&[x[0], 0.0, x[2] * e]) * e.powi(3)).unwrap();
        assert!(out.density.relative_l1(&exact).unwrap() < 0.02);
    }

    #[test]
    fn rejects_small_ensembles() {
        let c = Chart::new(ChartKind::Symplectic, 1).unwrap();
        let l = layout(c, 1.0, 32, Boundary::ZeroInflow);
        let f0 = DensitySource::function(|_| 1.0);
        assert!(solve_density_particle(&c, &c.zero().into(), &f0, &l, 1.0, 0.1, 999).is_err());
    }
}
