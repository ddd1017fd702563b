//! Numeric cross-checks of the analytic divergence and energy-rate laws.

use nalgebra::DMatrix;

use super::{integrate_with, FieldEvaluator, Hamiltonian, IntegratorConfig, Trajectory};
use crate::error::{GeoError, Result};
use crate::fields::FieldSpec;

/// Three-point derivative on a possibly nonuniform grid, one-sided at the
/// ends.
pub fn finite_difference(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![f64::NAN; n];
    }
    let mut d = vec![0.0; n];
    d[0] = (y[1] - y[0]) / (t[1] - t[0]);
    d[n - 1] = (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
    for k in 1..n - 1 {
        let (h0, h1) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        d[k] = (-h1 / (h0 * (h0 + h1))) * y[k - 1]
            + ((h1 - h0) / (h0 * h1)) * y[k]
            + (h0 / (h1 * (h0 + h1))) * y[k + 1];
    }
    d
}

/// Central-difference trace of the field Jacobian at `x`.
pub fn numeric_divergence(spec: &FieldSpec, h: &Hamiltonian, x: &[f64], step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(GeoError::Config("difference step must be positive".into()));
    }
    let eval = FieldEvaluator::new(spec, h)?;
    let dim = eval.dim();
    if x.len() != dim {
        return Err(GeoError::DimensionMismatch { expected: dim, found: x.len() });
    }
    let mut xp = x.to_vec();
    let (mut fp, mut fm) = (vec![0.0; dim], vec![0.0; dim]);
    let mut div = 0.0;
    for i in 0..dim {
        xp[i] = x[i] + step;
        eval.field(&xp, &mut fp);
        xp[i] = x[i] - step;
        eval.field(&xp, &mut fm);
        xp[i] = x[i];
        div += (fp[i] - fm[i]) / (2.0 * step);
    }
    if div.is_finite() {
        Ok(div)
    } else {
        Err(GeoError::NonFinite(0))
    }
}

/// Largest interior gap between the measured and predicted `dH/ds`.
pub fn monitored_energy_rate(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(GeoError::Config("energy-rate monitor needs at least 3 points".into()));
    }
    Ok((1..traj.len() - 1)
        .map(|k| (traj.measured_dh[k] - traj.predicted_dh[k]).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeCheck {
    /// `log |det D phi|` from perturbed trajectories.
    pub measured: f64,
    /// Integral of the analytic divergence along the reference trajectory.
    pub predicted: f64,
}

impl VolumeCheck {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.predicted).abs() / self.predicted.abs().max(1e-12)
    }
}

/// Compares the finite-difference flow Jacobian over `window` against the
/// time-integrated divergence.
pub fn log_volume_check(
    spec: &FieldSpec,
    h: &Hamiltonian,
    x0: &[f64],
    window: f64,
    cfg: &IntegratorConfig,
    delta: f64,
) -> Result<VolumeCheck> {
    let eval = FieldEvaluator::new(spec, h)?;
    let dim = eval.dim();
    let reference = integrate_with(&eval, x0, (0.0, window), cfg)?;
    let mut jac = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut xp = x0.to_vec();
        xp[j] += delta;
        let mut xm = x0.to_vec();
        xm[j] -= delta;
        let ep = integrate_with(&eval, &xp, (0.0, window), cfg)?;
        let em = integrate_with(&eval, &xm, (0.0, window), cfg)?;
        for i in 0..dim {
            jac[(i, j)] = (ep.last()[i] - em.last()[i]) / (2.0 * delta);
        }
    }
    Ok(VolumeCheck {
        measured: jac.determinant().abs().ln(),
        predicted: *reference.log_volume.last().expect("nonempty"),
    })
}
