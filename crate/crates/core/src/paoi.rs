//! Average peak age of information as a function of the update period,
//! its grid minimiser, and sweeps over the illuminated radius.
//!
//! The outside-state penalty uses the ceiling of the *mean* outage time
//! `π3·t_upd` rather than averaging the ceiling over the outage
//! distribution.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame_timing::{derive_timing, FrameTiming};
use crate::hitting::{hitting_curves, HittingCurves};
use crate::math::ceil_tol;
use crate::mrgp::{steady_state_at, SteadyState};
use crate::scenario::{MobilitySpec, ModelOptions, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakComponents {
    pub t_d: f64,
    pub t_tx: f64,
    pub t_o: f64,
}

/// Peak age while illuminated: propagation plus one transmission period.
pub fn peak_in(t_d: f64, t_tx: f64) -> f64 {
    t_d + t_tx
}

/// Peak age after an outage of length `t_o`, which costs whole
/// transmission periods.
pub fn peak_out(t_d: f64, t_tx: f64, t_o: f64) -> f64 {
    t_d + t_tx + ceil_tol(t_o / t_tx) * t_tx
}

/// `(t_d + t_tx) + ⌈π3 t_upd / t_tx⌉ t_tx π′3`.
pub fn average_paoi(timing: &FrameTiming, s: &SteadyState, t_upd: f64) -> Result<f64> {
    let b = timing.budget(t_upd)?;
    Ok(peak_in(timing.t_d, b.t_tx) + ceil_tol(s.pi3 * t_upd / b.t_tx) * b.t_tx * s.pi3_adj)
}

/// Uniform update-period grid `min + k·step` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl UpdateGrid {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        UpdateGrid { min: cfg.optimizer.t_upd_min_s, max: cfg.optimizer.t_upd_max_s, step: cfg.optimizer.t_upd_step_s }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-6).floor() as usize;
        (0..=n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaoiPoint {
    pub t_upd: f64,
    /// `None` where the overhead fills the whole period.
    pub paoi: Option<f64>,
    pub c_h: u64,
    pub t_ovh: f64,
    pub t_tx: Option<f64>,
    pub state: Option<SteadyState>,
}

impl PaoiPoint {
    pub fn feasible(&self) -> bool {
        self.paoi.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaoiCurve {
    pub points: Vec<PaoiPoint>,
    pub argmin: (f64, f64),
}

fn point(timing: &FrameTiming, t_upd: f64, state: &dyn Fn(f64) -> Result<SteadyState>) -> Result<PaoiPoint> {
    let c_h = crate::frame_timing::packets_per_update(timing, t_upd);
    let t_ovh = crate::frame_timing::overhead_time(timing, t_upd);
    match timing.budget(t_upd) {
        Err(Error::Infeasible(_)) => Ok(PaoiPoint { t_upd, paoi: None, c_h, t_ovh, t_tx: None, state: None }),
        Err(e) => Err(e),
        Ok(b) => {
            let s = state(t_upd)?;
            Ok(PaoiPoint { t_upd, paoi: Some(average_paoi(timing, &s, t_upd)?), c_h, t_ovh, t_tx: Some(b.t_tx), state: Some(s) })
        }
    }
}

/// Average PAoI over `grid` with occupation fractions from `state`.
pub fn paoi_curve_with(timing: &FrameTiming, grid: &UpdateGrid, state: &(dyn Fn(f64) -> Result<SteadyState> + Sync)) -> Result<PaoiCurve> {
    let points = grid
        .values()
        .into_par_iter()
        .map(|t| point(timing, t, state))
        .collect::<Result<Vec<_>>>()?;
    let argmin = grid_argmin(&points).ok_or_else(|| Error::Infeasible("no feasible update period on the grid".into()))?;
    Ok(PaoiCurve { points, argmin })
}

/// Average PAoI over `grid` from the hitting curves of one radius and
/// mobility variant.
pub fn paoi_curve(timing: &FrameTiming, curves: &HittingCurves, options: &ModelOptions, grid: &UpdateGrid) -> Result<PaoiCurve> {
    paoi_curve_with(timing, grid, &|t| steady_state_at(timing, curves, t, options))
}

fn grid_argmin(points: &[PaoiPoint]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for p in points {
        if let Some(v) = p.paoi {
            if best.is_none_or(|(_, b)| v <= b) {
                best = Some((p.t_upd, v));
            }
        }
    }
    best
}

/// Grid minimiser `(t_upd*, paoi*)`; ties go to the larger period.
pub fn optimize_t_upd(curve: &PaoiCurve) -> (f64, f64) {
    curve.argmin
}

/// Golden-section search around the grid optimum, used only when the
/// objective is smooth across the neighbouring cells (no packet-count or
/// outage-ceiling jump).
pub fn refine_optimum(timing: &FrameTiming, curves: &HittingCurves, options: &ModelOptions, curve: &PaoiCurve, step: f64) -> Result<(f64, f64)> {
    let (t_star, p_star) = curve.argmin;
    let (lo, hi) = ((t_star - step).max(timing.t_conf() + 1e-12), t_star + step);
    let key = |t: f64| -> Result<Option<(u64, f64)>> {
        let s = steady_state_at(timing, curves, t, options)?;
        Ok(match timing.budget(t) {
            Ok(b) => Some((b.c_h, ceil_tol(s.pi3 * t / b.t_tx))),
            Err(_) => None,
        })
    };
    let (kl, kh) = (key(lo)?, key(hi)?);
    if kl.is_none() || kl != kh {
        return Ok((t_star, p_star));
    }
    let f = |t: f64| -> Result<f64> { average_paoi(timing, &steady_state_at(timing, curves, t, options)?, t) };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t)?;
    Ok(if v < p_star { (t, v) } else { (t_star, p_star) })
}

/// Timing, hitting curves and PAoI curve for a configuration.
pub fn evaluate(cfg: &ScenarioConfig, grid: &UpdateGrid) -> Result<(FrameTiming, HittingCurves, PaoiCurve)> {
    let timing = derive_timing(&cfg.frame, &cfg.panel, &cfg.geometry);
    let curves = hitting_curves(&cfg.mobility, cfg.geometry.r_in_m, cfg.geometry.r_out_m, &cfg.numerics, cfg.model.leg_convention)?;
    let curve = paoi_curve(&timing, &curves, &cfg.model, grid)?;
    Ok((timing, curves, curve))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub r_in_m: f64,
    pub variant: String,
    pub t_upd_opt_s: Option<f64>,
    pub paoi_opt_s: Option<f64>,
    pub overhead_ratio: Option<f64>,
    /// Centre-to-edge travel time at the reference speed.
    pub straight_line_s: f64,
    pub error: Option<String>,
}

/// Optimum update period for every radius and mobility variant. The grid
/// is widened to cover `1.5 r / v_ref` when the configured range is too
/// short. Failing cells are reported in their row.
pub fn sweep_radius(cfg: &ScenarioConfig, radii: &[f64], specs: &[MobilitySpec]) -> Vec<SweepRow> {
    let cells: Vec<(f64, MobilitySpec)> = radii.iter().flat_map(|r| specs.iter().map(move |s| (*r, *s))).collect();
    cells
        .into_par_iter()
        .map(|(r, spec)| {
            let straight = r / spec.reference_speed();
            let run = || -> Result<(f64, f64, f64)> {
                let mut c = cfg.clone();
                c.geometry.r_in_m = r;
                c.mobility = spec;
                c.validate()?;
                let mut grid = UpdateGrid::from_config(&c);
                grid.max = grid.max.max(1.5 * straight);
                let (timing, _, curve) = evaluate(&c, &grid)?;
                let (t, p) = optimize_t_upd(&curve);
                Ok((t, p, crate::frame_timing::overhead_time(&timing, t) / t))
            };
            match run() {
                Ok((t, p, o)) => SweepRow {
                    r_in_m: r,
                    variant: spec.name().into(),
                    t_upd_opt_s: Some(t),
                    paoi_opt_s: Some(p),
                    overhead_ratio: Some(o),
                    straight_line_s: straight,
                    error: None,
                },
                Err(e) => SweepRow {
                    r_in_m: r,
                    variant: spec.name().into(),
                    t_upd_opt_s: None,
                    paoi_opt_s: None,
                    overhead_ratio: None,
                    straight_line_s: straight,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::NumericsParams;

    fn timing() -> FrameTiming {
        let c = ScenarioConfig::reference();
        derive_timing(&c.frame, &c.panel, &c.geometry)
    }

    fn state(pi1: f64, pi2: f64, pi3: f64) -> SteadyState {
        crate::mrgp::adjusted_probabilities(&SteadyState { pi1, pi2, pi3, pi2_adj: 0.0, pi3_adj: 0.0 })
    }

    #[test]
    fn peak_examples() {
        assert_eq!(peak_in(0.0, 3e-4), 3e-4);
        assert!((peak_in(1e-8, 2e-4) + peak_in(2e-8, 1e-4) - peak_in(3e-8, 3e-4)).abs() < 1e-18);
        let (td, tx) = (1.5e-8, 2.9e-4);
        assert_eq!(peak_out(td, tx, 0.0), peak_in(td, tx));
        assert!((peak_out(td, tx, 1.5 * tx) - (td + 3.0 * tx)).abs() < 1e-18);
        for k in [1.0, 7.0, 1234.0] {
            assert!((peak_out(td, tx, k * tx) - (td + (k + 1.0) * tx)).abs() < 1e-15);
        }
    }

    #[test]
    fn average_limits() {
        let t = timing();
        let t_upd = 1.9;
        let tx = t.budget(t_upd).unwrap().t_tx;
        let a = average_paoi(&t, &state(0.1, 0.9, 0.0), t_upd).unwrap();
        assert!((a - (t.t_d + tx)).abs() < 1e-18);
        assert!(a > 1e-4 && a < 1e-3, "{a}");
        let s = SteadyState { pi1: 0.0, pi2: 0.0, pi3: 1.0, pi2_adj: 0.0, pi3_adj: 1.0 };
        let b = average_paoi(&t, &s, t_upd).unwrap();
        assert!((b - (t.t_d + tx + (t_upd / tx).ceil() * tx)).abs() < 1e-12);
        assert!(matches!(average_paoi(&t, &s, 0.01), Err(Error::Infeasible(_))));
    }

    #[test]
    fn single_point_grid() {
        let t = timing();
        let g = UpdateGrid { min: 1.0, max: 1.0, step: 50e-6 };
        let c = paoi_curve_with(&t, &g, &|_| Ok(state(0.0, 1.0, 0.0))).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.argmin.0, 1.0);
    }

    #[test]
    fn infeasible_points_are_flagged() {
        let t = timing();
        let g = UpdateGrid { min: 0.5e-4, max: 0.05, step: 50e-6 };
        let c = paoi_curve_with(&t, &g, &|_| Ok(state(0.0, 1.0, 0.0))).unwrap();
        assert_eq!(c.points.len(), 1000);
        assert!(!c.points[0].feasible());
        assert!(c.points.iter().any(|p| p.feasible()));
        let g = UpdateGrid { min: 0.5e-4, max: 0.01, step: 50e-6 };
        assert!(paoi_curve_with(&t, &g, &|_| Ok(state(0.0, 1.0, 0.0))).is_err());
    }

    #[test]
    fn ties_break_to_larger_period() {
        let mk = |t, v| PaoiPoint { t_upd: t, paoi: Some(v), c_h: 0, t_ovh: 0.0, t_tx: None, state: None };
        let flat = [mk(1.0, 2.0), mk(2.0, 2.0), mk(3.0, 2.0)];
        assert_eq!(grid_argmin(&flat), Some((3.0, 2.0)));
        let dec = [mk(1.0, 3.0), mk(2.0, 2.0), mk(3.0, 1.0)];
        assert_eq!(grid_argmin(&dec), Some((3.0, 1.0)));
    }

    #[test]
    fn pure_overhead_regime_decreases_within_segments() {
        let t = timing();
        let g = UpdateGrid { min: 0.02, max: 2.5, step: 50e-6 };
        let c = paoi_curve_with(&t, &g, &|_| Ok(state(0.0, 1.0, 0.0))).unwrap();
        for w in c.points.windows(2) {
            if w[0].c_h == w[1].c_h {
                assert!(w[1].paoi.unwrap() < w[0].paoi.unwrap());
            }
        }
        let k = c.points.iter().position(|p| p.t_upd == c.argmin.0).unwrap();
        assert!(k + 1 == c.points.len() || c.points[k + 1].c_h > c.points[k].c_h);
    }

    #[test]
    fn floor_and_u_shape() {
        let cfg = ScenarioConfig { numerics: NumericsParams { t_max_s: 20.0, ..NumericsParams::default() }, ..ScenarioConfig::reference() };
        let (t, _, c) = evaluate(&cfg, &UpdateGrid::from_config(&cfg)).unwrap();
        for p in c.points.iter().filter(|p| p.feasible()) {
            assert!(p.paoi.unwrap() >= t.t_d + p.t_tx.unwrap() - 1e-18);
        }
        let (ts, ps) = c.argmin;
        let first = c.points.iter().find(|p| p.feasible()).unwrap();
        assert!(first.paoi.unwrap() > ps);
        assert!(c.points.last().unwrap().paoi.unwrap() > ps);
        assert!(ts > 1.0 && ts < 2.5);
    }

    #[test]
    fn refinement_never_worse() {
        let cfg = ScenarioConfig { numerics: NumericsParams { t_max_s: 20.0, ..NumericsParams::default() }, ..ScenarioConfig::reference() };
        let (t, h, c) = evaluate(&cfg, &UpdateGrid::from_config(&cfg)).unwrap();
        let (_, p) = refine_optimum(&t, &h, &cfg.model, &c, cfg.optimizer.t_upd_step_s).unwrap();
        assert!(p <= c.argmin.1);
    }
}
