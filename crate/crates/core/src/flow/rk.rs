//! Explicit Runge-Kutta steppers for autonomous systems `x' = f(x)`.

/// Classical fourth-order step; `out` receives `x(s + h)`.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step<F: FnMut(&[f64], &mut [f64])>(&mut self, f: &mut F, x: &[f64], h: f64, out: &mut [f64]) {
        let n = x.len();
        f(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f(&self.tmp, &mut self.k4);
        for i in 0..n {
            out[i] = x[i] + h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are unused
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub struct Dopri5 {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Dopri5 {
    pub fn new(dim: usize) -> Self {
        Dopri5 {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    /// One trial step. Writes the fifth-order solution to `out` and returns
    /// the scaled RMS error norm; the step is acceptable when it is `<= 1`.
    pub fn trial<F: FnMut(&[f64], &mut [f64])>(
        &mut self,
        f: &mut F,
        x: &[f64],
        h: f64,
        rtol: f64,
        atol: f64,
        out: &mut [f64],
    ) -> f64 {
        let n = x.len();
        f(x, &mut self.k[0]);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = x[i];
                for j in 0..s {
                    acc += h * A[s][j] * self.k[j][i];
                }
                self.tmp[i] = acc;
            }
            f(&self.tmp, &mut self.k[s]);
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut hi = x[i];
            let mut lo = x[i];
            for s in 0..7 {
                hi += h * B5[s] * self.k[s][i];
                lo += h * B4[s] * self.k[s][i];
            }
            out[i] = hi;
            let scale = atol + rtol * x[i].abs().max(hi.abs());
            err += ((hi - lo) / scale).powi(2);
        }
        (err / n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_exponential() {
        let mut f = |x: &[f64], o: &mut [f64]| o[0] = x[0];
        let mut rk = Rk4::new(1);
        let mut x = vec![1.0];
        let mut y = vec![0.0];
        for _ in 0..100 {
            rk.step(&mut f, &x, 0.01, &mut y);
            std::mem::swap(&mut x, &mut y);
        }
        assert!((x[0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn dopri_error_estimate_is_small_for_smooth_steps() {
        let mut f = |x: &[f64], o: &mut [f64]| o[0] = -x[0];
        let mut dp = Dopri5::new(1);
        let mut out = vec![0.0];
        let err = dp.trial(&mut f, &[1.0], 0.1, 1e-6, 1e-9, &mut out);
        assert!(err < 1.0);
        assert!((out[0] - (-0.1f64).exp()).abs() < 1e-8);
    }
}
