//! Three-state Markov regenerative model of one update cycle: configuring
//! (1), inside the illuminated disc (2) and outside it (3). Every
//! reconfiguration is a regeneration point that returns the token to
//! state 1, so the steady state reduces to the time each state holds the
//! token within one cycle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_timing::FrameTiming;
use crate::hitting::HittingCurves;
use crate::sampled::SampledCurve;
use crate::scenario::ModelOptions;

/// How the outside-state kernel is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// `E13 = max(0, 1 − E11 − E12)`.
    #[default]
    Complement,
    /// `E13(t) = P_out(t − t_conf)` after configuration.
    Literal,
}

/// How the inside-state kernel treats the walker's centre start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CenterStart {
    /// Survival of the exact centre-start exit time.
    #[default]
    Exact,
    /// Uniform-start survival shifted by `t0 = t_conf − r_in/v`.
    Shifted,
}

/// Global kernel `u(t − t_upd)`: the cycle ends at `t_upd`.
pub fn global_kernel(t: f64, t_upd: f64) -> f64 {
    if t >= t_upd {
        1.0
    } else {
        0.0
    }
}

/// Stationary vector of the embedded chain `p = p K`, by power iteration
/// from state 1.
pub fn embedded_stationary(k: [[f64; 3]; 3]) -> [f64; 3] {
    let mut p = [1.0, 0.0, 0.0];
    for _ in 0..1000 {
        let mut q = [0.0; 3];
        for (i, pi) in p.iter().enumerate() {
            for j in 0..3 {
                q[j] += pi * k[i][j];
            }
        }
        let s: f64 = q.iter().sum();
        let q = q.map(|x| x / s);
        if q.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15) {
            return q;
        }
        p = q;
    }
    p
}

/// Local kernel of one cycle, evaluated on demand from the hitting curves.
#[derive(Debug, Clone, Copy)]
pub struct LocalKernel<'a> {
    pub t_upd: f64,
    pub t_conf: f64,
    /// `t_conf − r_in/v_ref`.
    pub t0_shift: f64,
    /// Shortest centre-to-edge time `r_in / v_ref`.
    pub straight_time: f64,
    pub mode: KernelMode,
    pub center_start: CenterStart,
    curves: &'a HittingCurves,
}

pub fn build_local_kernel<'a>(timing: &FrameTiming, t_upd: f64, curves: &'a HittingCurves, options: &ModelOptions) -> Result<LocalKernel<'a>> {
    if !(t_upd > 0.0) {
        return Err(Error::Validation(format!("t_upd > 0 violated (t_upd={t_upd})")));
    }
    let straight_time = curves.r_in / curves.spec.reference_speed();
    Ok(LocalKernel {
        t_upd,
        t_conf: timing.t_conf(),
        t0_shift: timing.t_conf() - straight_time,
        straight_time,
        mode: options.kernel_mode,
        center_start: options.center_start,
        curves,
    })
}

impl LocalKernel<'_> {
    /// End of the certainly-inside stretch.
    fn inside_until(&self) -> f64 {
        self.t_conf.max(self.straight_time)
    }

    fn tail(&self, t: f64) -> f64 {
        match self.center_start {
            CenterStart::Exact => 1.0 - self.curves.center_exit.eval(t),
            CenterStart::Shifted => self.curves.p_in.eval((t - self.t0_shift).max(0.0)),
        }
    }

    pub fn e11(&self, t: f64) -> f64 {
        if t < self.t_conf {
            1.0
        } else {
            0.0
        }
    }

    pub fn e12(&self, t: f64) -> f64 {
        if t < self.t_conf {
            0.0
        } else if t <= self.inside_until() * (1.0 + 1e-12) {
            1.0
        } else {
            self.tail(t)
        }
    }

    pub fn e13(&self, t: f64) -> f64 {
        match self.mode {
            KernelMode::Complement => (1.0 - self.e11(t) - self.e12(t)).max(0.0),
            KernelMode::Literal => {
                if t < self.t_conf {
                    0.0
                } else {
                    self.curves.p_out.eval(t - self.t_conf)
                }
            }
        }
    }

    /// The three kernel entries on `[0, t_upd]` with step `dt`, plus the
    /// end point.
    pub fn sample(&self, dt: f64) -> [SampledCurve; 3] {
        let n = (self.t_upd / dt).floor() as usize;
        let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        if self.t_upd - n as f64 * dt > 1e-12 * self.t_upd {
            ts.push(self.t_upd);
        }
        let curve = |f: &dyn Fn(f64) -> f64| SampledCurve::new(0.0, dt, ts.iter().map(|t| f(*t)).collect());
        [curve(&|t| self.e11(t)), curve(&|t| self.e12(t)), curve(&|t| self.e13(t))]
    }
}

/// `α_1q = ∫_0^{t_upd} E_1q(t) dt`, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alphas {
    pub a11: f64,
    pub a12: f64,
    pub a13: f64,
}

/// Kernel integrals over the cycle. The step parts are integrated in closed
/// form and the curve parts exactly for their piecewise-linear interpolant.
pub fn alpha_integrals(k: &LocalKernel) -> Alphas {
    let t = k.t_upd;
    let a11 = k.t_conf.min(t);
    let a12 = if t <= k.t_conf {
        0.0
    } else {
        let b = k.inside_until();
        let rect = t.min(b) - k.t_conf;
        let tail = if t > b {
            match k.center_start {
                CenterStart::Exact => (t - b) - k.curves.center_exit.integral_between(b, t),
                CenterStart::Shifted => k.curves.p_in.integral_between(b - k.t0_shift, t - k.t0_shift),
            }
        } else {
            0.0
        };
        rect + tail
    };
    let a13 = match k.mode {
        KernelMode::Complement => ((t - k.t_conf).max(0.0) - a12).max(0.0),
        KernelMode::Literal => {
            if t <= k.t_conf {
                0.0
            } else {
                k.curves.p_out.integral_between(0.0, t - k.t_conf)
            }
        }
    };
    Alphas { a11, a12, a13 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
    pub pi2_adj: f64,
    pub pi3_adj: f64,
}

/// `π_q = α_1q / Σ α`, with the adjusted pair filled in.
pub fn steady_state(a: &Alphas) -> Result<SteadyState> {
    let s = a.a11 + a.a12 + a.a13;
    if !(s > 0.0) {
        return Err(Error::Numerics("all kernel integrals are zero".into()));
    }
    Ok(adjusted_probabilities(&SteadyState { pi1: a.a11 / s, pi2: a.a12 / s, pi3: a.a13 / s, pi2_adj: 0.0, pi3_adj: 0.0 }))
}

/// Shares the configuration time between the other two states:
/// `π′2 = π2 + π2 π1`, `π′3 = π3 + (1 − π2) π1`. With `π` on the simplex
/// the second equals `1 − π′2`, which is how it is computed.
pub fn adjusted_probabilities(s: &SteadyState) -> SteadyState {
    let pi2_adj = s.pi2 + s.pi2 * s.pi1;
    SteadyState { pi2_adj, pi3_adj: 1.0 - pi2_adj, ..*s }
}

pub fn steady_state_at(timing: &FrameTiming, curves: &HittingCurves, t_upd: f64, options: &ModelOptions) -> Result<SteadyState> {
    steady_state(&alpha_integrals(&build_local_kernel(timing, t_upd, curves, options)?))
}

/// First `t_upd` in `[lo, hi]` where `π′3` overtakes `π′2`, located by a
/// scan with step `step` and refined by bisection.
pub fn find_crossover(timing: &FrameTiming, curves: &HittingCurves, options: &ModelOptions, lo: f64, hi: f64, step: f64) -> Result<Option<f64>> {
    let gap = |t: f64| -> Result<f64> {
        let s = steady_state_at(timing, curves, t, options)?;
        Ok(s.pi2_adj - s.pi3_adj)
    };
    let mut a = lo;
    let mut ga = gap(a)?;
    let n = ((hi - lo) / step).ceil() as usize;
    for k in 1..=n {
        let b = (lo + k as f64 * step).min(hi);
        let gb = gap(b)?;
        if ga > 0.0 && gb <= 0.0 {
            let (mut x, mut y) = (a, b);
            for _ in 0..60 {
                let m = 0.5 * (x + y);
                if gap(m)? > 0.0 {
                    x = m;
                } else {
                    y = m;
                }
            }
            return Ok(Some(0.5 * (x + y)));
        }
        a = b;
        ga = gb;
    }
    Ok(None)
}
