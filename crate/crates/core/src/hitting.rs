//! First-hitting times of the random-waypoint walk across the illuminated
//! circle: leg-length laws, per-variant leg-time distributions, j-fold
//! convolutions and the geometric mixture over the number of legs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::gauss_legendre;
use crate::sampled::{convolve, Convolver, SampledCurve, SampledDensity};
use crate::scenario::{MobilitySpec, NumericsParams};

/// How the leg that leaves the region enters the time sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LegConvention {
    /// The leaving leg is cut where it crosses the circle; its length is the
    /// distance from a uniform interior point to the circle towards a
    /// uniform exterior waypoint.
    #[default]
    ExactExit,
    /// The leaving leg is counted in full, like every other leg.
    IncludeLast,
    /// The leaving leg is dropped; leaves an atom of mass `1 − p` at zero.
    ExcludeLast,
}

impl LegConvention {
    pub fn name(&self) -> &'static str {
        match self {
            LegConvention::ExactExit => "exact_exit",
            LegConvention::IncludeLast => "include_last",
            LegConvention::ExcludeLast => "exclude_last",
        }
    }
}

/// `f_L(l; r)`: density of the distance between two independent uniform
/// points of a disc of radius `r`.
pub fn disc_distance_pdf(l: f64, r: f64) -> f64 {
    if l <= 0.0 || l >= 2.0 * r {
        return 0.0;
    }
    let x = l / (2.0 * r);
    8.0 / (PI * r) * x * (x.acos() - x * (1.0 - x * x).sqrt())
}

pub fn disc_distance_cdf(l: f64, r: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    if l >= 2.0 * r {
        return 1.0;
    }
    let x = l / (2.0 * r);
    let s = (1.0 - x * x).sqrt();
    (2.0 / PI) * (x.asin() + 4.0 * x * x * x.acos() - x * (1.0 + 2.0 * x * x) * s)
}

/// Leg-length laws used by the hitting analysis.
#[derive(Debug, Clone, PartialEq)]
pub enum LengthLaw {
    /// Two uniform points of a disc.
    DiscPair { r: f64 },
    /// Centre to a uniform point of a disc: `P(L ≤ l) = (l/r)^2`.
    CenterToUniform { r: f64 },
    Fixed { l: f64 },
    /// Tabulated CDF on `[0, l_max]`.
    Tabulated { l_max: f64, cdf: Vec<f64> },
}

impl LengthLaw {
    pub fn cdf(&self, l: f64) -> f64 {
        match self {
            LengthLaw::DiscPair { r } => disc_distance_cdf(l, *r),
            LengthLaw::CenterToUniform { r } => (l / r).clamp(0.0, 1.0).powi(2),
            LengthLaw::Fixed { l: l0 } => {
                if l >= *l0 {
                    1.0
                } else {
                    0.0
                }
            }
            LengthLaw::Tabulated { l_max, cdf } => {
                if l <= 0.0 {
                    return 0.0;
                }
                if l >= *l_max {
                    return 1.0;
                }
                let x = l / l_max * (cdf.len() - 1) as f64;
                let k = x.floor() as usize;
                let f = x - k as f64;
                cdf[k] * (1.0 - f) + cdf[k + 1] * f
            }
        }
    }

    pub fn max_length(&self) -> f64 {
        match self {
            LengthLaw::DiscPair { r } => 2.0 * r,
            LengthLaw::CenterToUniform { r } => *r,
            LengthLaw::Fixed { l } => *l,
            LengthLaw::Tabulated { l_max, .. } => *l_max,
        }
    }

    /// Length of the leaving leg: from a uniform point of the disc of radius
    /// `r_in` to its boundary, heading to a waypoint uniform on the annulus
    /// `r_in < |y| ≤ r_out`.
    ///
    /// From an interior point at radius `ρ` the direction `ψ` (measured from
    /// the outward radial) has density `(D_out² − D²)/(2π(r_out² − r_in²))`,
    /// where `D` and `D_out` are the ray lengths to the two circles; `D`
    /// increases with `|ψ|`, so `P(D ≤ s | ρ)` is the direction mass below
    /// the angle at which `D = s`.
    pub fn exit_from_uniform(r_in: f64, r_out: f64) -> Self {
        const N_RHO: usize = 400;
        const N_PSI: usize = 2048;
        const N_S: usize = 4096;
        let l_max = 2.0 * r_in;
        let mut cdf = vec![0.0; N_S + 1];
        let dpsi = PI / N_PSI as f64;
        for i in 0..N_RHO {
            // ρ² uniform on [0, r_in²]
            let rho = r_in * ((i as f64 + 0.5) / N_RHO as f64).sqrt();
            let ray = |psi: f64, r: f64| -rho * psi.cos() + (r * r - rho * rho * psi.sin().powi(2)).sqrt();
            let h = |psi: f64| {
                let d = ray(psi, r_in);
                let d_out = ray(psi, r_out);
                d_out * d_out - d * d
            };
            let mut cum = vec![0.0; N_PSI + 1];
            let mut prev = h(0.0);
            for k in 1..=N_PSI {
                let cur = h(k as f64 * dpsi);
                cum[k] = cum[k - 1] + 0.5 * (prev + cur) * dpsi;
                prev = cur;
            }
            let total = cum[N_PSI];
            for (j, c) in cdf.iter_mut().enumerate().skip(1) {
                let s = l_max * j as f64 / N_S as f64;
                let psi = if rho == 0.0 {
                    if s >= r_in { PI } else { 0.0 }
                } else {
                    ((r_in * r_in - rho * rho - s * s) / (2.0 * rho * s)).clamp(-1.0, 1.0).acos()
                };
                let x = psi / dpsi;
                let k = (x.floor() as usize).min(N_PSI - 1);
                let f = x - k as f64;
                *c += (cum[k] * (1.0 - f) + cum[k + 1] * f) / total / N_RHO as f64;
            }
        }
        cdf[N_S] = 1.0;
        LengthLaw::Tabulated { l_max, cdf }
    }
}

/// Exponential pause CDF.
fn pause_cdf(t: f64, mean: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        1.0 - (-t / mean).exp()
    }
}

fn cell_edges(k: usize, dt: f64) -> (f64, f64) {
    let lo = if k == 0 { 0.0 } else { (k as f64 - 0.5) * dt };
    (lo, (k as f64 + 0.5) * dt)
}

/// Speed of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
enum SpeedLaw {
    Fixed(f64),
    Uniform(f64, f64),
}

/// `P(L / V ≤ t)`.
fn travel_cdf(law: &LengthLaw, speed: SpeedLaw, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    match (law, speed) {
        (_, SpeedLaw::Fixed(v)) => law.cdf(v * t),
        (LengthLaw::Fixed { l }, SpeedLaw::Uniform(a, b)) => ((b - l / t) / (b - a)).clamp(0.0, 1.0),
        (_, SpeedLaw::Uniform(a, b)) => {
            SPEED_NODES.iter().map(|(x, w)| w * law.cdf((a + (b - a) * x) * t)).sum()
        }
    }
}

/// Gauss–Legendre rule on `[0, 1]` for speed mixtures.
static SPEED_NODES: std::sync::LazyLock<Vec<(f64, f64)>> = std::sync::LazyLock::new(|| gauss_legendre(96, 0.0, 1.0));

/// Node masses of the leg time, plus the mass beyond the grid.
fn travel_masses(law: &LengthLaw, speed: SpeedLaw, dt: f64, n: usize) -> (Vec<f64>, f64) {
    let mut m = Vec::with_capacity(n);
    let mut prev = 0.0;
    for k in 0..n {
        let cur = travel_cdf(law, speed, cell_edges(k, dt).1);
        m.push((cur - prev).max(0.0));
        prev = prev.max(cur);
    }
    (m, (1.0 - prev).max(0.0))
}

/// Distribution of the time to travel one leg drawn from `law`, including
/// the pause that precedes it for the pause variant.
pub fn leg_time_density(spec: &MobilitySpec, law: &LengthLaw, dt: f64, n: usize) -> SampledDensity {
    match *spec {
        MobilitySpec::ConstantSpeed { speed_mps } => {
            let (m, tail) = travel_masses(law, SpeedLaw::Fixed(speed_mps), dt, n);
            SampledDensity::from_masses(dt, m, 0.0, tail)
        }
        MobilitySpec::RandomSpeed { v_min_mps, v_max_mps } => {
            let (m, tail) = travel_masses(law, SpeedLaw::Uniform(v_min_mps, v_max_mps), dt, n);
            SampledDensity::from_masses(dt, m, 0.0, tail)
        }
        MobilitySpec::WithPause { speed_mps, pause_mean_s } => {
            let (m, tail) = travel_masses(law, SpeedLaw::Fixed(speed_mps), dt, n);
            let travel = SampledDensity::from_masses(dt, m, 0.0, tail);
            let mut prev = 0.0;
            let pm: Vec<f64> = (0..n)
                .map(|k| {
                    let cur = pause_cdf(cell_edges(k, dt).1, pause_mean_s);
                    let d = cur - prev;
                    prev = cur;
                    d
                })
                .collect();
            let pause = SampledDensity::from_masses(dt, pm, 0.0, 1.0 - prev);
            convolve(&travel, &pause, n)
        }
    }
}

fn check_resolution(extent: f64, dt: f64) -> Result<()> {
    if dt > extent / 100.0 {
        return Err(Error::Numerics(format!(
            "grid step {dt} coarser than support/100 = {}",
            extent / 100.0
        )));
    }
    Ok(())
}

/// `f_L` for a disc of radius `r`, sampled on a length grid with step `dl`
/// covering `[0, 2r]`.
pub fn jump_length_density(r: f64, dl: f64) -> Result<SampledDensity> {
    if !(r > 0.0) {
        return Err(Error::Validation(format!("r > 0 violated (r={r})")));
    }
    check_resolution(2.0 * r, dl)?;
    let n = (2.0 * r / dl).ceil() as usize + 1;
    let (m, tail) = travel_masses(&LengthLaw::DiscPair { r }, SpeedLaw::Fixed(1.0), dl, n);
    Ok(SampledDensity::from_masses(dl, m, 0.0, tail))
}

/// Leg-time density between two uniform waypoints of a disc of radius `r`.
pub fn jump_time_density(spec: &MobilitySpec, r: f64, numerics: &NumericsParams) -> Result<SampledDensity> {
    check_resolution(2.0 * r / spec.reference_speed(), numerics.dt_s)?;
    Ok(leg_time_density(spec, &LengthLaw::DiscPair { r }, numerics.dt_s, numerics.n_grid()))
}

/// `d` convolved with itself `j` times, on the same grid.
pub fn nfold_convolution(d: &SampledDensity, j: usize) -> SampledDensity {
    assert!(j >= 1, "nfold_convolution needs j >= 1");
    let n = d.len();
    let mut out = d.clone();
    if j == 1 {
        return out;
    }
    let conv = Convolver::new(&d.masses(), n);
    for _ in 1..j {
        let (m, lost) = conv.apply(&out.masses());
        let tail = out.tail_mass + lost + d.tail_mass * out.integral();
        out = SampledDensity::from_masses(d.dt, m, 0.0, tail);
    }
    out
}

/// Probability that the first `j` waypoints stay inside and the next one
/// leaves: `p^j (1 − p)`.
pub fn first_hit_jump_pmf(p: f64, j: u32) -> f64 {
    p.powi(j as i32) * (1.0 - p)
}

/// Book-keeping for a geometric mixture of leg sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureMeta {
    /// Number of mixture terms summed.
    pub j_star: usize,
    /// Geometric weight of the unsummed terms.
    pub geometric_tail: f64,
    /// Mass of the summed terms that fell beyond `t_max`.
    pub grid_tail: f64,
}

/// Distribution of `Σ_{i<J} L_i + X` where `J − 1 ~ Geometric` with
/// `P(J = j) = (1−s) s^{j−1}`, `L_i ~ leg`, and `X ~ last`.
pub fn geometric_leg_sum(leg: &SampledDensity, last: &SampledDensity, s: f64, trunc_eps: f64) -> (SampledDensity, MixtureMeta) {
    let n = leg.len();
    let conv = Convolver::new(&leg.masses(), n);
    let mut cur = SampledDensity::dirac(leg.dt, n).masses();
    let mut cur_tail = 0.0;
    let mut acc = vec![0.0; n];
    let mut acc_tail = 0.0;
    let mut j = 0;
    let mut weight = 1.0 - s;
    let mut remaining = 1.0;
    while remaining >= trunc_eps {
        j += 1;
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += weight * c;
        }
        acc_tail += weight * cur_tail;
        remaining -= weight;
        if remaining < trunc_eps || cur.iter().sum::<f64>() < trunc_eps {
            break;
        }
        let (next, lost) = conv.apply(&cur);
        cur_tail += lost + leg.tail_mass * (1.0 - cur_tail);
        cur = next;
        weight *= s;
    }
    // j = 1 contributes the point mass at zero.
    acc[0] -= 1.0 - s;
    let base = SampledDensity::from_masses(leg.dt, acc, 1.0 - s, acc_tail);
    let out = convolve(&base, last, n);
    let grid_tail = out.tail_mass;
    (out, MixtureMeta { j_star: j, geometric_tail: remaining.max(0.0), grid_tail })
}

/// Distribution of the exit time from the disc of radius `r_in`, starting
/// uniformly inside it, with waypoint survival probability `p`.
pub fn exit_time_density(
    spec: &MobilitySpec,
    r_in: f64,
    p: f64,
    numerics: &NumericsParams,
    convention: LegConvention,
) -> Result<(SampledDensity, MixtureMeta)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Validation(format!("p in (0,1) violated (p={p})")));
    }
    let leg = jump_time_density(spec, r_in, numerics)?;
    let (dt, n) = (numerics.dt_s, numerics.n_grid());
    let last = match convention {
        LegConvention::IncludeLast => leg.clone(),
        LegConvention::ExcludeLast => SampledDensity::dirac(dt, n),
        LegConvention::ExactExit => {
            let r_out = r_in / p.sqrt();
            leg_time_density(spec, &LengthLaw::exit_from_uniform(r_in, r_out), dt, n)
        }
    };
    Ok(geometric_leg_sum(&leg, &last, p, numerics.trunc_eps))
}

/// `P_fh_out(t)`: probability of having left the disc by time `t`.
pub fn exit_time_cdf(
    spec: &MobilitySpec,
    r_in: f64,
    p: f64,
    numerics: &NumericsParams,
    convention: LegConvention,
) -> Result<SampledCurve> {
    Ok(exit_time_density(spec, r_in, p, numerics, convention)?.0.cdf())
}

/// `P_in(t) = 1 − P_fh_out(t)`.
pub fn p_in_curve(
    spec: &MobilitySpec,
    r_in: f64,
    p: f64,
    numerics: &NumericsParams,
    convention: LegConvention,
) -> Result<SampledCurve> {
    Ok(exit_time_cdf(spec, r_in, p, numerics, convention)?.map(|c| 1.0 - c))
}

/// Distribution of the entry time into the inner disc for a walk on the
/// disc of radius `r_out`; `p_complement` is the chance a waypoint misses
/// the inner disc. The entering leg is counted in full unless the
/// convention drops it.
pub fn entry_time_density(
    spec: &MobilitySpec,
    r_out: f64,
    p_complement: f64,
    numerics: &NumericsParams,
    convention: LegConvention,
) -> Result<(SampledDensity, MixtureMeta)> {
    if !(p_complement > 0.0 && p_complement < 1.0) {
        return Err(Error::Validation(format!("p_complement in (0,1) violated ({p_complement})")));
    }
    let leg = jump_time_density(spec, r_out, numerics)?;
    let last = match convention {
        LegConvention::ExcludeLast => SampledDensity::dirac(numerics.dt_s, numerics.n_grid()),
        _ => leg.clone(),
    };
    Ok(geometric_leg_sum(&leg, &last, p_complement, numerics.trunc_eps))
}

/// `P_out(t) = 1 − P_fh_in(t)`.
pub fn p_out_curve(
    spec: &MobilitySpec,
    r_out: f64,
    p_complement: f64,
    numerics: &NumericsParams,
    convention: LegConvention,
) -> Result<SampledCurve> {
    Ok(entry_time_density(spec, r_out, p_complement, numerics, convention)?.0.cdf().map(|c| 1.0 - c))
}

/// Exit-time distribution when the walk starts at the disc centre on a
/// fresh leg. With probability `1 − p` the first waypoint is outside and the
/// walker leaves after exactly `r_in` of travel; otherwise it reaches a
/// uniform interior waypoint and continues as a uniform start. The second
/// branch treats the inbound leg and the onward exit as independent, which
/// puts a little mass before `r_in / v`.
pub fn center_exit_density(
    spec: &MobilitySpec,
    r_in: f64,
    p: f64,
    uniform_exit: &SampledDensity,
    numerics: &NumericsParams,
) -> SampledDensity {
    let (dt, n) = (numerics.dt_s, numerics.n_grid());
    let straight = leg_time_density(spec, &LengthLaw::Fixed { l: r_in }, dt, n);
    let inward = leg_time_density(spec, &LengthLaw::CenterToUniform { r: r_in }, dt, n);
    let via = convolve(&inward, uniform_exit, n);
    let m: Vec<f64> = straight.masses().iter().zip(via.masses()).map(|(a, b)| (1.0 - p) * a + p * b).collect();
    SampledDensity::from_masses(dt, m, 0.0, (1.0 - p) * straight.tail_mass + p * via.tail_mass)
}

/// Everything the kernel construction needs for one radius and variant.
#[derive(Debug, Clone)]
pub struct HittingCurves {
    pub spec: MobilitySpec,
    pub r_in: f64,
    pub r_out: f64,
    pub convention: LegConvention,
    pub p_fh_out: SampledCurve,
    pub p_in: SampledCurve,
    /// Exit-time CDF from the disc centre.
    pub center_exit: SampledCurve,
    pub p_fh_in: SampledCurve,
    pub p_out: SampledCurve,
    pub exit_meta: MixtureMeta,
    pub entry_meta: MixtureMeta,
}

pub fn hitting_curves(
    spec: &MobilitySpec,
    r_in: f64,
    r_out: f64,
    numerics: &NumericsParams,
    convention: LegConvention,
) -> Result<HittingCurves> {
    if !(r_in > 0.0 && r_out > r_in) {
        return Err(Error::Validation(format!("r_out > r_in violated (r_in={r_in}, r_out={r_out})")));
    }
    let p = (r_in / r_out).powi(2);
    let (exit, exit_meta) = exit_time_density(spec, r_in, p, numerics, convention)?;
    let (entry, entry_meta) = entry_time_density(spec, r_out, 1.0 - p, numerics, convention)?;
    let center = center_exit_density(spec, r_in, p, &exit, numerics);
    let p_fh_out = exit.cdf();
    let p_fh_in = entry.cdf();
    Ok(HittingCurves {
        spec: *spec,
        r_in,
        r_out,
        convention,
        p_in: p_fh_out.map(|c| 1.0 - c),
        p_fh_out,
        center_exit: center.cdf(),
        p_out: p_fh_in.map(|c| 1.0 - c),
        p_fh_in,
        exit_meta,
        entry_meta,
    })
}
