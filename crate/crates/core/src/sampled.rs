//! Distributions and curves sampled on a uniform time grid.
//!
//! A distribution is stored as node masses: `values[k]·dt` is the
//! probability attached to node `t_k = t0 + k·dt`, i.e. to the cell
//! `[t_k − dt/2, t_k + dt/2)` clipped at `t0`. Sums of independent node
//! masses stay on the grid, so repeated convolution needs no resampling.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, PartialEq)]
pub struct SampledDensity {
    pub t0: f64,
    pub dt: f64,
    /// Density in 1/s.
    pub values: Vec<f64>,
    /// Probability mass sitting exactly at `t0`.
    pub atom_at_zero: f64,
    /// Mass that fell beyond the grid and was dropped.
    pub tail_mass: f64,
}

impl SampledDensity {
    pub fn from_masses(dt: f64, masses: Vec<f64>, atom_at_zero: f64, tail_mass: f64) -> Self {
        let values = masses.into_iter().map(|m| m / dt).collect();
        SampledDensity { t0: 0.0, dt, values, atom_at_zero, tail_mass }
    }

    /// Point mass at `t0`.
    pub fn dirac(dt: f64, n: usize) -> Self {
        SampledDensity { t0: 0.0, dt, values: vec![0.0; n], atom_at_zero: 1.0, tail_mass: 0.0 }
    }

    /// Node masses with the atom folded into node 0.
    pub fn masses(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.values.iter().map(|v| v * self.dt).collect();
        if let Some(first) = m.first_mut() {
            *first += self.atom_at_zero;
        }
        m
    }

    /// Total mass on the grid (atom included, dropped tail excluded).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dt + self.atom_at_zero
    }

    /// Trapezoidal integral of the density part plus the atom.
    pub fn trapezoid(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return self.atom_at_zero;
        }
        let inner: f64 = self.values.iter().sum::<f64>() - 0.5 * (self.values[0] + self.values[n - 1]);
        inner * self.dt + self.atom_at_zero
    }

    pub fn mean(&self) -> f64 {
        let m: f64 = self.values.iter().enumerate().map(|(k, v)| (self.t0 + k as f64 * self.dt) * v).sum::<f64>() * self.dt;
        (m + self.t0 * self.atom_at_zero) / self.integral()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CDF at the grid nodes. Node 0 carries only the atom; node `k ≥ 1`
    /// adds the masses of nodes below it and half of its own.
    pub fn cdf(&self) -> SampledCurve {
        let mut out = Vec::with_capacity(self.values.len());
        let mut below = self.atom_at_zero;
        for (k, v) in self.values.iter().enumerate() {
            let m = v * self.dt;
            out.push(if k == 0 { self.atom_at_zero } else { below + 0.5 * m });
            below += m;
        }
        SampledCurve::new(self.t0, self.dt, out.into_iter().map(|c| c.clamp(0.0, 1.0)).collect())
    }
}

/// A function of time sampled on a uniform grid, linearly interpolated
/// between nodes and held constant past the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    /// Trapezoidal running integral, `cum[k] = ∫_{t0}^{t_k}`.
    cum: Vec<f64>,
}

impl SampledCurve {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for k in 0..values.len() {
            if k > 0 {
                acc += 0.5 * (values[k - 1] + values[k]) * dt;
            }
            cum.push(acc);
        }
        SampledCurve { t0, dt, values, cum }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.t0 + k as f64 * self.dt)
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.values.len() - 1) as f64 * self.dt
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SampledCurve {
        SampledCurve::new(self.t0, self.dt, self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let k = x.floor() as usize;
        let f = x - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }

    /// `∫_{t0}^{t} curve`, exact for the piecewise-linear interpolant.
    pub fn integral_to(&self, t: f64) -> f64 {
        let n = self.values.len();
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return x * self.dt * self.values[0];
        }
        if x >= (n - 1) as f64 {
            return self.cum[n - 1] + (t - self.t_end()) * self.values[n - 1];
        }
        let k = x.floor() as usize;
        let f = x - k as f64;
        let vt = self.values[k] * (1.0 - f) + self.values[k + 1] * f;
        self.cum[k] + 0.5 * (self.values[k] + vt) * f * self.dt
    }

    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        self.integral_to(b) - self.integral_to(a)
    }

    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}

/// Linear convolution of node-mass vectors via FFT, keeping a fixed kernel
/// spectrum so repeated products cost two transforms each.
pub struct Convolver {
    n_out: usize,
    size: usize,
    kernel: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Convolver {
    /// `kernel` masses are convolved into outputs of length `n_out`.
    pub fn new(kernel: &[f64], n_out: usize) -> Self {
        let size = (n_out + kernel.len()).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut k: Vec<Complex64> = kernel.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        k.resize(size, Complex64::new(0.0, 0.0));
        fwd.process(&mut k);
        Convolver { n_out, size, kernel: k, fwd, inv }
    }

    /// Returns the first `n_out` masses of `x ∗ kernel` and the mass that
    /// landed beyond them. Negative round-off is clipped to zero.
    pub fn apply(&self, x: &[f64]) -> (Vec<f64>, f64) {
        assert!(x.len() <= self.n_out);
        let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        buf.resize(self.size, Complex64::new(0.0, 0.0));
        self.fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        let total_in: f64 = x.iter().sum::<f64>() * self.kernel[0].re;
        let out: Vec<f64> = buf[..self.n_out].iter().map(|c| (c.re * scale).max(0.0)).collect();
        let kept: f64 = out.iter().sum();
        (out, (total_in - kept).max(0.0))
    }
}

/// Convolution of two distributions, truncated to `n_out` nodes.
pub fn convolve(a: &SampledDensity, b: &SampledDensity, n_out: usize) -> SampledDensity {
    let conv = Convolver::new(&b.masses(), n_out);
    let am = a.masses();
    let (mut out, lost) = conv.apply(&am[..am.len().min(n_out)]);
    let lost_a: f64 = am.iter().skip(n_out).sum();
    let atom = out[0].min(a.atom_at_zero * b.atom_at_zero);
    out[0] -= atom;
    let tail = a.tail_mass + b.tail_mass + lost + lost_a * b.integral();
    SampledDensity::from_masses(a.dt, out, atom, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform01(dt: f64) -> SampledDensity {
        let n = (1.0 / dt).round() as usize;
        let mut m = vec![dt; n + 1];
        m[0] = dt / 2.0;
        m[n] = dt / 2.0;
        SampledDensity::from_masses(dt, m, 0.0, 0.0)
    }

    #[test]
    fn self_convolution_is_triangle() {
        let dt = 1e-3;
        let u = uniform01(dt);
        let tri = convolve(&u, &u, 2500);
        assert!((tri.integral() - 1.0).abs() < 1e-9);
        assert!((tri.values[1000] - 1.0).abs() < 2e-3);
        assert!((tri.values[500] - 0.5).abs() < 2e-3);
        assert!((tri.values[1500] - 0.5).abs() < 2e-3);
        assert!(tri.values[2100] < 1e-9);
    }

    #[test]
    fn dirac_is_identity() {
        let u = uniform01(1e-3);
        let d = SampledDensity::dirac(1e-3, 1001);
        let c = convolve(&d, &u, 1001);
        for (a, b) in c.values.iter().zip(&u.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn truncation_records_tail() {
        let u = uniform01(1e-3);
        let c = convolve(&u, &u, 1001);
        assert!((c.integral() + c.tail_mass - 1.0).abs() < 1e-9);
        assert!((c.tail_mass - 0.5).abs() < 2e-3);
    }

    #[test]
    fn curve_integral_exact_for_linear() {
        let c = SampledCurve::new(0.0, 0.5, vec![0.0, 0.5, 1.0, 1.5]);
        assert!((c.integral_to(1.25) - 1.25f64.powi(2) / 2.0).abs() < 1e-12);
        assert!((c.integral_between(0.3, 1.1) - (1.1f64.powi(2) - 0.09) / 2.0).abs() < 1e-12);
        assert!((c.integral_to(2.0) - (1.125 + 0.5 * 1.5)).abs() < 1e-12);
        assert_eq!(c.eval(0.75), 0.75);
        assert_eq!(c.eval(9.0), 1.5);
    }

    #[test]
    fn cdf_half_node_rule() {
        let d = SampledDensity::from_masses(1.0, vec![0.0, 0.5, 0.5], 0.0, 0.0);
        assert_eq!(d.cdf().values, vec![0.0, 0.25, 0.75]);
    }
}
