//! Numeric integration of catalog fields with invariant monitors.
//!
//! The flow parameter is `s`; on charts with a time coordinate `t` is an
//! ordinary state component, advanced by `i_X tau`.

pub mod monitor;
pub mod rk;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::error::{GeoError, Result};
use crate::fields::{diagnostics, make_field, FieldSpec, Family, Gauge};
use crate::poly::{CompiledPoly, Poly};

pub use monitor::{log_volume_check, monitored_energy_rate, numeric_divergence, VolumeCheck};
use rk::{Dopri5, Rk4};

/// Value and gradient of a user-supplied Hamiltonian at a point.
pub type NumericFn = dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync;

/// Hamiltonian input. The numeric variant bypasses the exact diagnostics, so
/// trajectories built from it carry `NaN` in the predicted-rate and
/// divergence channels.
#[derive(Clone)]
pub enum Hamiltonian {
    Poly(Poly),
    Numeric(Arc<NumericFn>),
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hamiltonian::Poly(p) => write!(f, "Poly({p})"),
            Hamiltonian::Numeric(_) => f.write_str("Numeric(..)"),
        }
    }
}

impl From<Poly> for Hamiltonian {
    fn from(p: Poly) -> Self {
        Hamiltonian::Poly(p)
    }
}

/// A field ready for repeated numeric evaluation.
#[derive(Clone)]
pub struct FieldEvaluator {
    spec: FieldSpec,
    inner: Inner,
}

#[derive(Clone)]
enum Inner {
    Compiled {
        field: Vec<CompiledPoly>,
        h: CompiledPoly,
        rate: CompiledPoly,
        div: CompiledPoly,
    },
    Numeric(Arc<NumericFn>),
}

impl FieldEvaluator {
    pub fn new(spec: &FieldSpec, h: &Hamiltonian) -> Result<Self> {
        let inner = match h {
            Hamiltonian::Poly(p) => {
                let x = make_field(spec, p)?;
                let d = diagnostics(spec, p)?;
                Inner::Compiled {
                    field: x.components().iter().map(Poly::compile).collect(),
                    h: p.compile(),
                    rate: d.dh_along_flow.compile(),
                    div: d.divergence.compile(),
                }
            }
            Hamiltonian::Numeric(f) => Inner::Numeric(f.clone()),
        };
        Ok(FieldEvaluator { spec: *spec, inner })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.chart().dim()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.inner, Inner::Compiled { .. })
    }

    pub fn field(&self, x: &[f64], out: &mut [f64]) {
        match &self.inner {
            Inner::Compiled { field, .. } => {
                for (o, c) in out.iter_mut().zip(field) {
                    *o = c.eval(x);
                }
            }
            Inner::Numeric(f) => {
                let (h, grad) = f(x);
                numeric_field(&self.spec, x, h, &grad, out);
            }
        }
    }

    pub fn hamiltonian(&self, x: &[f64]) -> f64 {
        match &self.inner {
            Inner::Compiled { h, .. } => h.eval(x),
            Inner::Numeric(f) => f(x).0,
        }
    }

    pub fn predicted_rate(&self, x: &[f64]) -> f64 {
        match &self.inner {
            Inner::Compiled { rate, .. } => rate.eval(x),
            Inner::Numeric(_) => f64::NAN,
        }
    }

    pub fn divergence(&self, x: &[f64]) -> f64 {
        match &self.inner {
            Inner::Compiled { div, .. } => div.eval(x),
            Inner::Numeric(_) => f64::NAN,
        }
    }
}

/// The coordinate display of a catalog field evaluated from `H` and its
/// gradient:
/// `t' = g, q' = H_p, p' = -(H_q + p H_z), z' = p H_p + i_X eta`.
fn numeric_field(spec: &FieldSpec, x: &[f64], h: f64, grad: &[f64], out: &mut [f64]) {
    let c = spec.chart();
    let hz = c.z_index().map_or(0.0, |z| grad[z]);
    let mut p_dot_hp = 0.0;
    for i in 0..c.n() {
        let (q, p) = (c.q(i), c.p(i));
        out[q] = grad[p];
        out[p] = -(grad[q] + x[p] * hz);
        p_dot_hp += x[p] * grad[p];
    }
    if let Some(t) = c.t_index() {
        out[t] = match spec.gauge() {
            Some(Gauge::One) => 1.0,
            Some(Gauge::GradH) => grad[t],
            _ => 0.0,
        };
    }
    if let Some(z) = c.z_index() {
        out[z] = p_dot_hp
            + match spec.family() {
                Family::Energy => 0.0,
                _ => -h,
            };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Rk45,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4, initial step for RK45.
    pub step: f64,
    #[serde(default = "default_rtol")]
    pub rel_tol: f64,
    #[serde(default = "default_atol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_rtol() -> f64 {
    1e-9
}
fn default_atol() -> f64 {
    1e-12
}
fn default_max_steps() -> usize {
    10_000_000
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            step,
            rel_tol: default_rtol(),
            abs_tol: default_atol(),
            max_steps: default_max_steps(),
        }
    }

    pub fn rk45(step: f64, rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk45,
            step,
            rel_tol,
            abs_tol,
            max_steps: default_max_steps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.step) {
            return Err(GeoError::Config("step must be positive".into()));
        }
        if self.method == Method::Rk45 && !(ok(self.rel_tol) && ok(self.abs_tol)) {
            return Err(GeoError::Config("tolerances must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(GeoError::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub chart: Chart,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub predicted_dh: Vec<f64>,
    pub measured_dh: Vec<f64>,
    pub divergence: Vec<f64>,
    /// Running integral of the divergence, i.e. the log of the predicted
    /// phase-volume factor.
    pub log_volume: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("nonempty trajectory")
    }

    /// Column index of coordinate `name` in each state.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.chart.var_index(name)?;
        Some(self.states.iter().map(|s| s[i]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let names = self.chart.var_names();
        writeln!(w, "s,{},H,pred_dHds,div", names.join(","))?;
        for k in 0..self.len() {
            let state: Vec<String> = self.states[k].iter().map(|v| v.to_string()).collect();
            writeln!(
                w,
                "{},{},{},{},{}",
                self.times[k],
                state.join(","),
                self.h[k],
                self.predicted_dh[k],
                self.divergence[k]
            )?;
        }
        Ok(())
    }
}

fn check_state(x: &[f64], s: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GeoError::Integration {
            last_time: s,
            reason: "state became non-finite".into(),
        })
    }
}

pub fn integrate(
    spec: &FieldSpec,
    h: &Hamiltonian,
    x0: &[f64],
    span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let eval = FieldEvaluator::new(spec, h)?;
    integrate_with(&eval, x0, span, cfg)
}

pub fn integrate_with(
    eval: &FieldEvaluator,
    x0: &[f64],
    span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let dim = eval.dim();
    if x0.len() != dim {
        return Err(GeoError::DimensionMismatch {
            expected: dim,
            found: x0.len(),
        });
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(GeoError::NonFinite(i));
    }
    let (s0, s1) = span;
    if !(s1 > s0) {
        return Err(GeoError::Config("integration span must be increasing".into()));
    }
    let mut f = |x: &[f64], out: &mut [f64]| eval.field(x, out);
    let mut times = vec![s0];
    let mut states = vec![x0.to_vec()];
    let mut next = vec![0.0; dim];
    match cfg.method {
        Method::Rk4 => {
            let steps = ((s1 - s0) / cfg.step).round().max(1.0) as usize;
            if steps > cfg.max_steps {
                return Err(GeoError::Config(format!("{steps} steps exceed max_steps")));
            }
            let h = (s1 - s0) / steps as f64;
            let mut rk = Rk4::new(dim);
            for k in 0..steps {
                let x = states.last().expect("state");
                rk.step(&mut f, x, h, &mut next);
                check_state(&next, times[k])?;
                times.push(s0 + (k + 1) as f64 * h);
                states.push(next.clone());
            }
        }
        Method::Rk45 => {
            let mut dp = Dopri5::new(dim);
            let mut h = cfg.step.min(s1 - s0);
            let mut s = s0;
            let mut taken = 0;
            while s < s1 {
                if taken >= cfg.max_steps {
                    return Err(GeoError::Integration {
                        last_time: s,
                        reason: "step budget exhausted".into(),
                    });
                }
                taken += 1;
                let last_step = s + h >= s1;
                let step = if last_step { s1 - s } else { h };
                let x = states.last().expect("state");
                let err = dp.trial(&mut f, x, step, cfg.rel_tol, cfg.abs_tol, &mut next);
                if err.is_finite() && err <= 1.0 {
                    check_state(&next, s)?;
                    s = if last_step { s1 } else { s + step };
                    times.push(s);
                    states.push(next.clone());
                }
                let factor = if err.is_finite() {
                    (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    0.2
                };
                h = step * factor;
                if h < 1e-14 * (1.0 + s.abs()) {
                    return Err(GeoError::Integration {
                        last_time: s,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
    }
    Ok(fill_monitors(eval, times, states))
}

fn fill_monitors(eval: &FieldEvaluator, times: Vec<f64>, states: Vec<Vec<f64>>) -> Trajectory {
    let h: Vec<f64> = states.iter().map(|x| eval.hamiltonian(x)).collect();
    let predicted_dh = states.iter().map(|x| eval.predicted_rate(x)).collect();
    let divergence: Vec<f64> = states.iter().map(|x| eval.divergence(x)).collect();
    let measured_dh = monitor::finite_difference(&times, &h);
    let mut log_volume = vec![0.0; times.len()];
    for k in 1..times.len() {
        log_volume[k] =
            log_volume[k - 1] + 0.5 * (times[k] - times[k - 1]) * (divergence[k] + divergence[k - 1]);
    }
    Trajectory {
        chart: eval.spec().chart(),
        times,
        states,
        h,
        predicted_dh,
        measured_dh,
        divergence,
        log_volume,
    }
}
