//! Near-field SNR of the AP → IRS → user link, SNR maps on the user plane,
//! and the radius of the disc that clears a given SNR threshold.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{positive, ScenarioConfig};
use crate::units;

/// How the element gain enters the link budget.
///
/// `AsPrinted` uses the element gain `sqrt(4π)·d_w·d_h/λ` as a bare number
/// (it carries units of metres). `PerWavelength` divides it by λ, which makes
/// the cascade dimensionless and agrees with the bistatic radar equation for
/// a flat plate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GainNormalization {
    #[default]
    PerWavelength,
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrsPanel {
    pub n_x: usize,
    pub n_y: usize,
    /// Element width; λ/2 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_width_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_height_m: Option<f64>,
    /// Element spacing; λ/2 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_x_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_y_m: Option<f64>,
    /// Extent of the target rectangle on the user plane.
    pub delta_x_m: f64,
    pub delta_y_m: f64,
    /// Diameter of the circular aperture mask; the shorter panel side when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_diameter_m: Option<f64>,
}

impl IrsPanel {
    pub fn square(n: usize, delta_m: f64) -> Self {
        IrsPanel {
            n_x: n,
            n_y: n,
            element_width_m: None,
            element_height_m: None,
            pitch_x_m: None,
            pitch_y_m: None,
            delta_x_m: delta_m,
            delta_y_m: delta_m,
            mask_diameter_m: None,
        }
    }

    pub fn element_size(&self, wavelength: f64) -> (f64, f64) {
        (self.element_width_m.unwrap_or(wavelength / 2.0), self.element_height_m.unwrap_or(wavelength / 2.0))
    }

    pub fn pitch(&self, wavelength: f64) -> (f64, f64) {
        (self.pitch_x_m.unwrap_or(wavelength / 2.0), self.pitch_y_m.unwrap_or(wavelength / 2.0))
    }

    pub fn side_lengths(&self, wavelength: f64) -> (f64, f64) {
        let (px, py) = self.pitch(wavelength);
        (self.n_x as f64 * px, self.n_y as f64 * py)
    }

    pub fn mask_diameter(&self, wavelength: f64) -> f64 {
        let (sx, sy) = self.side_lengths(wavelength);
        self.mask_diameter_m.unwrap_or(sx.min(sy))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 || self.n_y == 0 {
            return Err(Error::Validation("n_x*n_y >= 1 violated".into()));
        }
        for (v, name) in [
            (self.element_width_m, "element_width_m"),
            (self.element_height_m, "element_height_m"),
            (self.pitch_x_m, "pitch_x_m"),
            (self.pitch_y_m, "pitch_y_m"),
            (self.mask_diameter_m, "mask_diameter_m"),
        ] {
            if let Some(v) = v {
                positive(v, name)?;
            }
        }
        if !(self.delta_x_m >= 0.0 && self.delta_y_m >= 0.0) {
            return Err(Error::Validation("delta_x_m, delta_y_m >= 0 violated".into()));
        }
        Ok(())
    }
}

/// Element centres on the horizontal panel plane, row-major in x.
pub fn element_positions(panel: &IrsPanel, p_irs: [f64; 3], wavelength: f64) -> Vec<[f64; 3]> {
    let (px, py) = panel.pitch(wavelength);
    let cx = (panel.n_x as f64 - 1.0) / 2.0;
    let cy = (panel.n_y as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(panel.n_x * panel.n_y);
    for iy in 0..panel.n_y {
        for ix in 0..panel.n_x {
            out.push([p_irs[0] + (ix as f64 - cx) * px, p_irs[1] + (iy as f64 - cy) * py, p_irs[2]]);
        }
    }
    out
}

/// Peak gain of one element, `sqrt(4π)·d_w·d_h/λ`.
pub fn element_max_gain(d_w: f64, d_h: f64, wavelength: f64) -> f64 {
    (4.0 * PI).sqrt() * d_w * d_h / wavelength
}

/// Free-space single-hop power loss `(λ / (2π d))^2`.
pub fn pathloss(d: f64, wavelength: f64) -> f64 {
    (wavelength / (2.0 * PI * d)).powi(2)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Where each element points its reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FocusMap {
    /// Every element focuses the same point.
    Point([f64; 3]),
    /// Element `(ix, iy)` focuses the point of a `delta_x × delta_y`
    /// rectangle centred at `center` obtained by mapping the index range
    /// linearly onto the rectangle; corner elements hit the corners.
    LinearRect { center: [f64; 2], delta_x: f64, delta_y: f64, height: f64 },
}

impl FocusMap {
    fn target(&self, ix: usize, iy: usize, n_x: usize, n_y: usize) -> [f64; 3] {
        match *self {
            FocusMap::Point(q) => q,
            FocusMap::LinearRect { center, delta_x, delta_y, height } => {
                let frac = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 - 0.5 } else { 0.0 };
                [center[0] + delta_x * frac(ix, n_x), center[1] + delta_y * frac(iy, n_y), height]
            }
        }
    }
}

/// Per-element phase shifts and aperture mask, plus the element geometry
/// needed to evaluate the gain.
#[derive(Debug, Clone)]
pub struct PhaseProfile {
    pub positions: Vec<[f64; 3]>,
    pub phases: Vec<f64>,
    pub active: Vec<bool>,
    pub wavelength: f64,
    /// Element gain as returned by [`element_max_gain`].
    pub g_tilde: f64,
}

impl PhaseProfile {
    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn n_masked(&self) -> usize {
        self.active.len() - self.n_active()
    }

    /// Same geometry and mask, new phases.
    pub fn with_phases(&self, phases: Vec<f64>) -> Self {
        assert_eq!(phases.len(), self.positions.len());
        PhaseProfile { phases, ..self.clone() }
    }
}

/// Point-focus phases: element `n` cancels the AP → element → target path
/// phase of its mapped target, so the reflected contributions add in phase
/// at that target.
pub fn phase_profile(panel: &IrsPanel, p_irs: [f64; 3], p_ap: [f64; 3], focus: &FocusMap, wavelength: f64) -> PhaseProfile {
    let positions = element_positions(panel, p_irs, wavelength);
    let k = 2.0 * PI / wavelength;
    let radius = panel.mask_diameter(wavelength) / 2.0;
    let mut phases = Vec::with_capacity(positions.len());
    let mut active = Vec::with_capacity(positions.len());
    for (n, p) in positions.iter().enumerate() {
        let (ix, iy) = (n % panel.n_x, n / panel.n_x);
        let q = focus.target(ix, iy, panel.n_x, panel.n_y);
        phases.push((-k * (dist(p_ap, *p) + dist(*p, q))).rem_euclid(2.0 * PI));
        let off = ((p[0] - p_irs[0]).powi(2) + (p[1] - p_irs[1]).powi(2)).sqrt();
        active.push(off < radius);
    }
    let (d_w, d_h) = panel.element_size(wavelength);
    PhaseProfile { positions, phases, active, wavelength, g_tilde: element_max_gain(d_w, d_h, wavelength) }
}

/// The wide-beam design used for the scenario: a linear map onto the
/// `delta_x × delta_y` rectangle around the illuminated-disc centre.
pub fn wide_beam_profile(cfg: &ScenarioConfig) -> PhaseProfile {
    let g = &cfg.geometry;
    let focus = FocusMap::LinearRect {
        center: g.illum_center_m,
        delta_x: cfg.panel.delta_x_m,
        delta_y: cfg.panel.delta_y_m,
        height: g.mu_plane_height_m,
    };
    phase_profile(&cfg.panel, g.p_irs_m, g.p_ap_m, &focus, cfg.radio.wavelength())
}

/// Complex cascade gain `g̃ Σ_active exp(j k (d_ap,n + d_n,obs) + j ω_n)`.
pub fn irs_gain(profile: &PhaseProfile, p_ap: [f64; 3], p_obs: [f64; 3]) -> Complex64 {
    let k = 2.0 * PI / profile.wavelength;
    let mut acc = Complex64::new(0.0, 0.0);
    for ((p, w), a) in profile.positions.iter().zip(&profile.phases).zip(&profile.active) {
        if *a {
            acc += Complex64::from_polar(1.0, k * (dist(p_ap, *p) + dist(*p, p_obs)) + w);
        }
    }
    acc * profile.g_tilde
}

/// Everything in the link budget except the IRS gain, as a linear factor.
fn link_factor(cfg: &ScenarioConfig, p_obs: [f64; 3]) -> f64 {
    let r = &cfg.radio;
    let g = &cfg.geometry;
    let lambda = r.wavelength();
    let ap_gain = if r.apply_ap_beam_gain { units::db_to_linear(r.ap_beam_gain_dbi) } else { 1.0 };
    let norm = match r.gain_normalization {
        GainNormalization::PerWavelength => lambda * lambda,
        GainNormalization::AsPrinted => 1.0,
    };
    units::dbm_to_watts(r.p_tx_dbm) * ap_gain * pathloss(dist(g.p_ap_m, g.p_irs_m), lambda)
        * pathloss(dist(g.p_irs_m, p_obs), lambda)
        / (units::dbm_to_watts(r.noise_floor_dbm) * norm)
}

/// Linear SNR at `p_obs`.
pub fn snr_at(cfg: &ScenarioConfig, profile: &PhaseProfile, p_obs: [f64; 3]) -> f64 {
    irs_gain(profile, cfg.geometry.p_ap_m, p_obs).norm_sqr() * link_factor(cfg, p_obs)
}

/// Rectangular observation grid on the user plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    /// Square grid of half-width `half` around `center` with spacing `step`.
    pub fn around(center: [f64; 2], half: f64, step: f64) -> Self {
        let n = (2.0 * half / step).round() as usize + 1;
        GridSpec { x_min: center[0] - half, x_max: center[0] + half, nx: n, y_min: center[1] - half, y_max: center[1] + half, ny: n }
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrField {
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// `snr_db[iy][ix]`.
    pub snr_db: Vec<Vec<f64>>,
}

/// SNR floor used in place of `-inf` for points with exactly zero gain.
const SNR_FLOOR_DB: f64 = -300.0;

impl SnrField {
    pub fn max_db(&self) -> f64 {
        self.snr_db.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let (ix, fx) = locate(&self.x_grid, x)?;
        let (iy, fy) = locate(&self.y_grid, y)?;
        let z = &self.snr_db;
        let top = z[iy][ix] * (1.0 - fx) + z[iy][ix + 1] * fx;
        let bot = z[iy + 1][ix] * (1.0 - fx) + z[iy + 1][ix + 1] * fx;
        Some(top * (1.0 - fy) + bot * fy)
    }
}

fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let (lo, hi) = (axis[0], axis[axis.len() - 1]);
    let tol = 1e-12 * (hi - lo);
    if x < lo - tol || x > hi + tol {
        return None;
    }
    let i = axis.partition_point(|a| *a <= x).saturating_sub(1).min(axis.len() - 2);
    let f = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    Some((i, f))
}

/// SNR in dB over `grid`, at the user-plane height. The grid must resolve
/// the illuminated disc with at least three points per radius.
pub fn snr_map(cfg: &ScenarioConfig, profile: &PhaseProfile, grid: &GridSpec) -> Result<SnrField> {
    if grid.nx < 2 || grid.ny < 2 || !(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min) {
        return Err(Error::Validation("snr grid needs >= 2 increasing points per axis".into()));
    }
    let spacing = ((grid.x_max - grid.x_min) / (grid.nx - 1) as f64).max((grid.y_max - grid.y_min) / (grid.ny - 1) as f64);
    if spacing > cfg.geometry.r_in_m / 3.0 {
        return Err(Error::Validation(format!(
            "snr grid spacing {spacing} m coarser than r_in/3 = {} m",
            cfg.geometry.r_in_m / 3.0
        )));
    }
    let xs = GridSpec::axis(grid.x_min, grid.x_max, grid.nx);
    let ys = GridSpec::axis(grid.y_min, grid.y_max, grid.ny);
    let h = cfg.geometry.mu_plane_height_m;
    let snr_db = ys
        .par_iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| {
                    let s = snr_at(cfg, profile, [x, y, h]);
                    if s > 0.0 { units::linear_to_db(s).max(SNR_FLOOR_DB) } else { SNR_FLOOR_DB }
                })
                .collect()
        })
        .collect();
    Ok(SnrField { x_grid: xs, y_grid: ys, snr_db })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    pub radius_m: f64,
    /// Set when the centre itself is below the threshold (radius is 0).
    pub center_below_threshold: bool,
}

const AZIMUTHS: usize = 128;

/// Largest radius `r` such that the minimum SNR over every circle of radius
/// `≤ r` around `center` stays at or above `threshold_db`. Bounded by the
/// distance from `center` to the nearest grid edge.
pub fn illuminated_radius(field: &SnrField, threshold_db: f64, center: [f64; 2]) -> RadiusEstimate {
    let Some(c) = field.interpolate(center[0], center[1]) else {
        return RadiusEstimate { radius_m: 0.0, center_below_threshold: true };
    };
    if c < threshold_db {
        return RadiusEstimate { radius_m: 0.0, center_below_threshold: true };
    }
    let xs = &field.x_grid;
    let ys = &field.y_grid;
    let bound = (center[0] - xs[0])
        .min(xs[xs.len() - 1] - center[0])
        .min(center[1] - ys[0])
        .min(ys[ys.len() - 1] - center[1])
        .max(0.0);
    let step = ((xs[1] - xs[0]).min(ys[1] - ys[0])) / 4.0;
    let n = (bound / step).floor() as usize;
    let mut last_ok = 0.0;
    for i in 1..=n + 1 {
        let r = if i > n { bound } else { i as f64 * step };
        let min = (0..AZIMUTHS)
            .map(|a| {
                let phi = 2.0 * PI * a as f64 / AZIMUTHS as f64;
                field.interpolate(center[0] + r * phi.cos(), center[1] + r * phi.sin()).unwrap_or(f64::NEG_INFINITY)
            })
            .fold(f64::INFINITY, f64::min);
        if min < threshold_db {
            break;
        }
        last_ok = r;
    }
    RadiusEstimate { radius_m: last_ok, center_below_threshold: false }
}
