//! Monte Carlo random-waypoint walker. Crossing times come from exact
//! segment/circle intersections, so results carry no time-step bias.
//!
//! Trial `i` draws from its own ChaCha stream `i` under the run seed, so the
//! output does not depend on how trials are spread over threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampled::SampledCurve;
use crate::scenario::MobilitySpec;

pub type Point = [f64; 2];

/// Legs simulated per trial before a trial is reported as censored.
const MAX_LEGS: usize = 1_000_000;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniform point of the disc of radius `r` around the origin.
pub fn sample_waypoint<R: Rng + ?Sized>(r: f64, rng: &mut R) -> Point {
    let rho = r * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    [rho * phi.cos(), rho * phi.sin()]
}

fn sample_annulus<R: Rng + ?Sized>(r_in: f64, r_out: f64, rng: &mut R) -> Point {
    let u: f64 = rng.random();
    let rho = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    [rho * phi.cos(), rho * phi.sin()]
}

fn sample_speed<R: Rng + ?Sized>(spec: &MobilitySpec, rng: &mut R) -> f64 {
    match *spec {
        MobilitySpec::ConstantSpeed { speed_mps } | MobilitySpec::WithPause { speed_mps, .. } => speed_mps,
        MobilitySpec::RandomSpeed { v_min_mps, v_max_mps } => rng.random_range(v_min_mps..v_max_mps),
    }
}

fn sample_pause<R: Rng + ?Sized>(spec: &MobilitySpec, rng: &mut R) -> f64 {
    match *spec {
        MobilitySpec::WithPause { pause_mean_s, .. } => -pause_mean_s * (1.0 - rng.random::<f64>()).ln(),
        _ => 0.0,
    }
}

fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

/// Parameter interval `[u1, u2]` (unclipped) where the line `x + u (y − x)`
/// lies inside the circle of radius `r`, if it meets it.
fn circle_params(x: Point, y: Point, r: f64) -> Option<(f64, f64)> {
    let d = [y[0] - x[0], y[1] - x[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    if a == 0.0 {
        return None;
    }
    let b = x[0] * d[0] + x[1] * d[1];
    let c = x[0] * x[0] + x[1] * x[1] - r * r;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // Numerically stable roots.
    let q = -(b + b.signum() * s);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some((r1.min(r2), r1.max(r2)))
}

/// Fraction of the leg `x → y` travelled when it first leaves the circle of
/// radius `r`; `x` must be inside. `None` when `y` is inside too.
pub fn leg_exit_fraction(x: Point, y: Point, r: f64) -> Option<f64> {
    if norm(y) < r {
        return None;
    }
    circle_params(x, y, r).map(|(_, u2)| u2.clamp(0.0, 1.0))
}

/// Fraction of the leg `x → y` travelled when it first touches the closed
/// disc of radius `r`; `x` must be outside or on the circle.
pub fn leg_entry_fraction(x: Point, y: Point, r: f64) -> Option<f64> {
    if norm(x) <= r {
        return Some(0.0);
    }
    let (u1, u2) = circle_params(x, y, r)?;
    if u1 <= 1.0 && u2 >= 0.0 {
        Some(u1.max(0.0))
    } else {
        None
    }
}

/// A realised walk: waypoint `k+1` is reached from waypoint `k` at
/// `leg_speeds[k]` after pausing `pause_times[k]` at waypoint `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Point>,
    pub leg_speeds: Vec<f64>,
    pub pause_times: Vec<f64>,
}

impl Trajectory {
    pub fn generate<R: Rng + ?Sized>(spec: &MobilitySpec, r_out: f64, start: Point, legs: usize, rng: &mut R) -> Self {
        let mut t = Trajectory { waypoints: vec![start], leg_speeds: Vec::with_capacity(legs), pause_times: Vec::with_capacity(legs) };
        for _ in 0..legs {
            t.pause_times.push(sample_pause(spec, rng));
            t.waypoints.push(sample_waypoint(r_out, rng));
            t.leg_speeds.push(sample_speed(spec, rng));
        }
        t
    }

    /// First time the walk leaves the open disc of radius `r`.
    pub fn exit_time(&self, r: f64) -> Option<f64> {
        let mut t = 0.0;
        for k in 0..self.leg_speeds.len() {
            let (x, y) = (self.waypoints[k], self.waypoints[k + 1]);
            t += self.pause_times[k];
            let len = norm([y[0] - x[0], y[1] - x[1]]);
            if let Some(u) = leg_exit_fraction(x, y, r) {
                return Some(t + u * len / self.leg_speeds[k]);
            }
            t += len / self.leg_speeds[k];
        }
        None
    }
}

/// Where a trial starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPoint {
    Center,
    UniformInner,
}

/// Sorted sample of hitting times; censored trials are `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub samples: Vec<f64>,
    pub n: usize,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(|a, b| a.total_cmp(b));
        let n = samples.len();
        EmpiricalCdf { samples, n }
    }

    /// Fraction of samples `≤ t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.samples.partition_point(|s| *s <= t) as f64 / self.n as f64
    }

    pub fn censored(&self) -> usize {
        self.samples.iter().filter(|s| !s.is_finite()).count()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.n as f64
    }

    /// Largest gap to an analytic CDF over its grid nodes.
    pub fn sup_distance(&self, cdf: &SampledCurve) -> f64 {
        cdf.times().zip(&cdf.values).map(|(t, c)| (c - self.eval(t)).abs()).fold(0.0, f64::max)
    }
}

fn check_radii(r_in: f64, r_out: f64) -> Result<()> {
    if r_in > 0.0 && r_out > r_in {
        Ok(())
    } else {
        Err(Error::Validation(format!("r_out > r_in violated (r_in={r_in}, r_out={r_out})")))
    }
}

/// One exit trial. Pause variants pause at the start point first.
fn exit_trial<R: Rng + ?Sized>(spec: &MobilitySpec, r_in: f64, r_out: f64, start: Point, rng: &mut R) -> f64 {
    let mut x = start;
    let mut t = 0.0;
    for _ in 0..MAX_LEGS {
        t += sample_pause(spec, rng);
        let y = sample_waypoint(r_out, rng);
        let v = sample_speed(spec, rng);
        let len = norm([y[0] - x[0], y[1] - x[1]]);
        if let Some(u) = leg_exit_fraction(x, y, r_in) {
            return t + u * len / v;
        }
        t += len / v;
        x = y;
    }
    f64::INFINITY
}

fn entry_trial<R: Rng + ?Sized>(spec: &MobilitySpec, r_in: f64, r_out: f64, rng: &mut R) -> f64 {
    let mut x = sample_annulus(r_in, r_out, rng);
    let mut t = 0.0;
    for _ in 0..MAX_LEGS {
        t += sample_pause(spec, rng);
        let y = sample_waypoint(r_out, rng);
        let v = sample_speed(spec, rng);
        let len = norm([y[0] - x[0], y[1] - x[1]]);
        if let Some(u) = leg_entry_fraction(x, y, r_in) {
            return t + u * len / v;
        }
        t += len / v;
        x = y;
    }
    f64::INFINITY
}

fn start_point(start: StartPoint, r_in: f64, rng: &mut ChaCha8Rng) -> Point {
    match start {
        StartPoint::Center => [0.0, 0.0],
        StartPoint::UniformInner => sample_waypoint(r_in, rng),
    }
}

/// Empirical distribution of the time to leave the disc of radius `r_in`
/// for a walk on the disc of radius `r_out`.
pub fn first_exit_time_mc(spec: &MobilitySpec, r_in: f64, r_out: f64, start: StartPoint, trials: usize, seed: u64) -> Result<EmpiricalCdf> {
    check_radii(r_in, r_out)?;
    spec.validate()?;
    let samples = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let s = start_point(start, r_in, &mut rng);
            exit_trial(spec, r_in, r_out, s, &mut rng)
        })
        .collect();
    Ok(EmpiricalCdf::from_samples(samples))
}

/// Empirical distribution of the time to first touch the inner disc from a
/// uniform start in the annulus, counting pass-through crossings.
pub fn first_entry_time_mc(spec: &MobilitySpec, r_in: f64, r_out: f64, trials: usize, seed: u64) -> Result<EmpiricalCdf> {
    check_radii(r_in, r_out)?;
    spec.validate()?;
    let samples = (0..trials as u64)
        .into_par_iter()
        .map(|i| entry_trial(spec, r_in, r_out, &mut trial_rng(seed, i)))
        .collect();
    Ok(EmpiricalCdf::from_samples(samples))
}

/// How cycle time after configuration is attributed to the in/out states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OccupancyRule {
    /// In until the first exit of the cycle, out afterwards.
    #[default]
    FirstExit,
    /// In whenever the walker is inside the disc.
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationFractions {
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
    pub cycles: usize,
}

/// Time inside the disc of radius `r` during `[a, b]` for a walk that
/// starts at the centre at time 0.
fn time_inside<R: Rng + ?Sized>(spec: &MobilitySpec, r: f64, r_out: f64, a: f64, b: f64, rng: &mut R) -> f64 {
    let overlap = |s: f64, e: f64| (e.min(b) - s.max(a)).max(0.0);
    let mut x: Point = [0.0, 0.0];
    let mut t = 0.0;
    let mut inside = 0.0;
    while t < b {
        let p = sample_pause(spec, rng);
        if norm(x) < r {
            inside += overlap(t, t + p);
        }
        t += p;
        if t >= b {
            break;
        }
        let y = sample_waypoint(r_out, rng);
        let v = sample_speed(spec, rng);
        let len = norm([y[0] - x[0], y[1] - x[1]]);
        let dur = len / v;
        if let Some((u1, u2)) = circle_params(x, y, r) {
            let (u1, u2) = (u1.max(0.0), u2.min(1.0));
            if u2 > u1 {
                inside += overlap(t + u1 * dur, t + u2 * dur);
            }
        }
        t += dur;
        x = y;
    }
    inside
}

/// Long-run share of time in configuration (1), inside (2) and outside (3)
/// over `⌈horizon / t_upd⌉` update cycles. Each cycle restarts the walker
/// at the centre of a freshly placed illuminated disc, on a new leg; the
/// walker moves during configuration as well.
#[allow(clippy::too_many_arguments)]
pub fn occupation_fractions_mc(
    spec: &MobilitySpec,
    r_in: f64,
    r_out: f64,
    t_conf: f64,
    t_upd: f64,
    horizon: f64,
    seed: u64,
    rule: OccupancyRule,
) -> Result<OccupationFractions> {
    check_radii(r_in, r_out)?;
    if !(t_upd > 0.0 && horizon > 0.0 && t_conf >= 0.0) {
        return Err(Error::Validation("t_upd > 0, horizon > 0, t_conf >= 0 violated".into()));
    }
    let cycles = ((horizon / t_upd).ceil() as usize).max(1);
    let conf = t_conf.min(t_upd);
    if t_upd <= t_conf {
        return Ok(OccupationFractions { pi1: 1.0, pi2: 0.0, pi3: 0.0, cycles });
    }
    let inside: f64 = (0..cycles as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(seed, c);
            match rule {
                OccupancyRule::FirstExit => {
                    let te = exit_trial(spec, r_in, r_out, [0.0, 0.0], &mut rng);
                    (te.min(t_upd) - t_conf).max(0.0)
                }
                OccupancyRule::Position => time_inside(spec, r_in, r_out, t_conf, t_upd, &mut rng),
            }
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let total = cycles as f64 * t_upd;
    let pi1 = cycles as f64 * conf / total;
    let pi2 = inside / total;
    Ok(OccupationFractions { pi1, pi2, pi3: 1.0 - pi1 - pi2, cycles })
}
