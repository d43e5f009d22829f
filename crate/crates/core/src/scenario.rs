//! Experiment configuration: geometry, radio, panel, frame, mobility and
//! numerics, loaded from a TOML file whose keys carry their units.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_timing::FrameInputs;
use crate::hitting::LegConvention;
use crate::irs_field::{GainNormalization, IrsPanel};
use crate::mrgp::{CenterStart, KernelMode};
use crate::units;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub geometry: Geometry,
    pub radio: RadioParams,
    pub panel: IrsPanel,
    pub frame: FrameInputs,
    pub mobility: MobilitySpec,
    pub numerics: NumericsParams,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub optimizer: OptimizerParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub p_ap_m: [f64; 3],
    pub p_irs_m: [f64; 3],
    pub mu_plane_height_m: f64,
    /// Radius of the illuminated disc.
    pub r_in_m: f64,
    /// Radius of the mobility area.
    pub r_out_m: f64,
    pub illum_center_m: [f64; 2],
}

impl Geometry {
    /// Nominal user position: the illuminated-disc centre on the user plane.
    pub fn p_mu(&self) -> [f64; 3] {
        [self.illum_center_m[0], self.illum_center_m[1], self.mu_plane_height_m]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioParams {
    pub f_c_hz: f64,
    pub p_tx_dbm: f64,
    pub noise_floor_dbm: f64,
    pub ap_beam_gain_dbi: f64,
    #[serde(default = "default_true")]
    pub apply_ap_beam_gain: bool,
    #[serde(default)]
    pub gain_normalization: GainNormalization,
}

fn default_true() -> bool {
    true
}

impl RadioParams {
    pub fn wavelength(&self) -> f64 {
        units::wavelength(self.f_c_hz)
    }
}

/// Random-waypoint variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum MobilitySpec {
    ConstantSpeed { speed_mps: f64 },
    /// Exponential pause with the given mean at every waypoint, including
    /// the starting one.
    WithPause { speed_mps: f64, pause_mean_s: f64 },
    /// Per-leg speed uniform on `[v_min, v_max]`.
    RandomSpeed { v_min_mps: f64, v_max_mps: f64 },
}

impl MobilitySpec {
    pub fn name(&self) -> &'static str {
        match self {
            MobilitySpec::ConstantSpeed { .. } => "constant",
            MobilitySpec::WithPause { .. } => "pause",
            MobilitySpec::RandomSpeed { .. } => "random_speed",
        }
    }

    /// Speed used for the shortest centre-to-edge travel time.
    pub fn reference_speed(&self) -> f64 {
        match *self {
            MobilitySpec::ConstantSpeed { speed_mps } => speed_mps,
            MobilitySpec::WithPause { speed_mps, .. } => speed_mps,
            MobilitySpec::RandomSpeed { v_max_mps, .. } => v_max_mps,
        }
    }

    pub fn slowest_speed(&self) -> f64 {
        match *self {
            MobilitySpec::RandomSpeed { v_min_mps, .. } => v_min_mps,
            _ => self.reference_speed(),
        }
    }

    /// Variant selected by name, taking speeds from `self` where they apply.
    /// Pause defaults to a 2 s mean; random speed to `[0.5, 1.5]·v`.
    pub fn with_variant(&self, name: &str) -> Result<MobilitySpec> {
        let v = self.reference_speed();
        let out = match (name, *self) {
            ("constant", _) => MobilitySpec::ConstantSpeed { speed_mps: v },
            ("pause", MobilitySpec::WithPause { .. }) => *self,
            ("pause", _) => MobilitySpec::WithPause { speed_mps: v, pause_mean_s: 2.0 },
            ("random_speed" | "random-speed", MobilitySpec::RandomSpeed { .. }) => *self,
            ("random_speed" | "random-speed", _) => MobilitySpec::RandomSpeed { v_min_mps: 0.5 * v, v_max_mps: 1.5 * v },
            _ => return Err(Error::Validation(format!("unknown mobility variant '{name}'"))),
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64, what: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Validation(format!("{what} > 0 violated ({what}={x})")))
            }
        };
        match *self {
            MobilitySpec::ConstantSpeed { speed_mps } => pos(speed_mps, "speed_mps"),
            MobilitySpec::WithPause { speed_mps, pause_mean_s } => {
                pos(speed_mps, "speed_mps")?;
                pos(pause_mean_s, "pause_mean_s")
            }
            MobilitySpec::RandomSpeed { v_min_mps, v_max_mps } => {
                pos(v_min_mps, "v_min_mps")?;
                pos(v_max_mps, "v_max_mps")?;
                if v_max_mps > v_min_mps {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "v_max > v_min violated (v_min={v_min_mps}, v_max={v_max_mps})"
                    )))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsParams {
    pub dt_s: f64,
    pub t_max_s: f64,
    pub trunc_eps: f64,
    pub mc_trials: usize,
    pub rng_seed: u64,
}

impl Default for NumericsParams {
    fn default() -> Self {
        NumericsParams { dt_s: 1e-3, t_max_s: 60.0, trunc_eps: 1e-6, mc_trials: 1000, rng_seed: 1 }
    }
}

impl NumericsParams {
    pub fn n_grid(&self) -> usize {
        (self.t_max_s / self.dt_s).round() as usize + 1
    }
}

/// Modelling switches for the analytic pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    pub kernel_mode: KernelMode,
    pub leg_convention: LegConvention,
    pub center_start: CenterStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerParams {
    pub t_upd_min_s: f64,
    pub t_upd_max_s: f64,
    pub t_upd_step_s: f64,
    /// Golden-section refinement inside the best grid cell.
    pub refine: bool,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams { t_upd_min_s: 0.5e-4, t_upd_max_s: 2.5, t_upd_step_s: 50e-6, refine: false }
    }
}

impl ScenarioConfig {
    /// The reference indoor 60 GHz scenario.
    pub fn reference() -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            geometry: Geometry {
                p_ap_m: [2.0, 0.0, 2.5],
                p_irs_m: [2.0, 3.0, 3.0],
                mu_plane_height_m: 1.5,
                r_in_m: 1.7,
                r_out_m: 3.0,
                illum_center_m: [2.0, 3.0],
            },
            radio: RadioParams {
                f_c_hz: 60.48e9,
                p_tx_dbm: 30.0,
                noise_floor_dbm: -69.08,
                ap_beam_gain_dbi: 9.0,
                apply_ap_beam_gain: true,
                gain_normalization: GainNormalization::PerWavelength,
            },
            panel: IrsPanel::square(160, 1.7),
            frame: FrameInputs::default(),
            mobility: MobilitySpec::ConstantSpeed { speed_mps: 1.0 },
            numerics: NumericsParams::default(),
            model: ModelOptions::default(),
            optimizer: OptimizerParams::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks every invariant and names the first one violated.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let g = &self.geometry;
        for v in g.p_ap_m.iter().chain(&g.p_irs_m).chain(&g.illum_center_m) {
            finite(*v, "position")?;
        }
        positive(g.r_in_m, "r_in_m")?;
        positive(g.r_out_m, "r_out_m")?;
        if g.r_out_m <= g.r_in_m {
            return Err(Error::Validation(format!(
                "r_out > r_in violated (r_in={}, r_out={})",
                g.r_in_m, g.r_out_m
            )));
        }
        finite(g.mu_plane_height_m, "mu_plane_height_m")?;
        if g.p_irs_m[2] <= g.mu_plane_height_m {
            return Err(Error::Validation("p_irs height > mu_plane_height violated".into()));
        }

        let r = &self.radio;
        positive(r.f_c_hz, "f_c_hz")?;
        finite(r.p_tx_dbm, "p_tx_dbm")?;
        finite(r.noise_floor_dbm, "noise_floor_dbm")?;
        finite(r.ap_beam_gain_dbi, "ap_beam_gain_dbi")?;

        self.panel.validate()?;
        self.frame.validate()?;
        self.mobility.validate()?;

        let n = &self.numerics;
        positive(n.dt_s, "dt_s")?;
        positive(n.t_max_s, "t_max_s")?;
        if n.t_max_s < 100.0 * n.dt_s {
            return Err(Error::Validation("t_max >= 100*dt violated".into()));
        }
        if !(n.trunc_eps > 0.0 && n.trunc_eps < 1e-2) {
            return Err(Error::Validation(format!("0 < trunc_eps < 1e-2 violated (trunc_eps={})", n.trunc_eps)));
        }
        if n.mc_trials == 0 {
            return Err(Error::Validation("mc_trials > 0 violated".into()));
        }

        let o = &self.optimizer;
        positive(o.t_upd_min_s, "t_upd_min_s")?;
        positive(o.t_upd_step_s, "t_upd_step_s")?;
        if o.t_upd_max_s < o.t_upd_min_s {
            return Err(Error::Validation("t_upd_max >= t_upd_min violated".into()));
        }
        Ok(())
    }
}

pub(crate) fn positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} > 0 violated ({what}={x})")))
    }
}

fn finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} must be finite")))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    ScenarioConfig::from_toml_str(&text)
}

/// Probability that a uniform waypoint in the mobility disc lands in the
/// illuminated disc, `(r_in / r_out)^2`.
pub fn area_ratio(geometry: &Geometry) -> f64 {
    (geometry.r_in_m / geometry.r_out_m).powi(2)
}
