//! Frame and overhead algebra for one IRS update period, with the time
//! constants derived from 802.11ad sample counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irs_field::IrsPanel;
use crate::math::ceil_tol;
use crate::scenario::{positive, Geometry};
use crate::units::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameInputs {
    pub preamble_samples: u64,
    pub data_samples: u64,
    pub training_samples: u64,
    pub f_s_hz: f64,
    pub t_idle_s: f64,
    pub irs_coeff_bits: u64,
    /// Samples spent per payload bit of the coefficient and localization
    /// packets.
    pub coeff_samples_per_bit: f64,
    pub loc_payload_bits: u64,
    pub loc_blocks: u64,
    pub loc_tx_per_block: u64,
    /// Pins the per-packet preamble+training time instead of deriving it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_p_ovh_override_s: Option<f64>,
}

impl Default for FrameInputs {
    fn default() -> Self {
        FrameInputs {
            preamble_samples: 4352,
            data_samples: 456_768,
            training_samples: 3712,
            f_s_hz: 1.76e9,
            t_idle_s: 20e-6,
            irs_coeff_bits: 32,
            coeff_samples_per_bit: 0.2166,
            loc_payload_bits: 8,
            loc_blocks: 121,
            loc_tx_per_block: 2,
            t_p_ovh_override_s: None,
        }
    }
}

impl FrameInputs {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.preamble_samples, "preamble_samples"),
            (self.data_samples, "data_samples"),
            (self.training_samples, "training_samples"),
            (self.irs_coeff_bits, "irs_coeff_bits"),
            (self.loc_payload_bits, "loc_payload_bits"),
            (self.loc_blocks, "loc_blocks"),
            (self.loc_tx_per_block, "loc_tx_per_block"),
        ] {
            if v == 0 {
                return Err(Error::Validation(format!("{name} > 0 violated")));
            }
        }
        positive(self.f_s_hz, "f_s_hz")?;
        positive(self.t_idle_s, "t_idle_s")?;
        positive(self.coeff_samples_per_bit, "coeff_samples_per_bit")?;
        if let Some(t) = self.t_p_ovh_override_s {
            positive(t, "t_p_ovh_override_s")?;
        }
        Ok(())
    }
}

/// Time constants of the frame, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameTiming {
    pub t_loc: f64,
    pub t_irs: f64,
    pub t_p_ovh: f64,
    pub t_data: f64,
    pub t_idle: f64,
    pub t_d: f64,
}

/// Quantities that depend on the update period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateBudget {
    pub t_upd: f64,
    pub t_conf: f64,
    pub c_h: u64,
    pub t_ovh: f64,
    pub t_tx: f64,
}

fn packet_time(frame: &FrameInputs, payload_bits: u64) -> f64 {
    let payload = (payload_bits as f64 * frame.coeff_samples_per_bit).ceil();
    (frame.preamble_samples as f64 + payload + frame.training_samples as f64) / frame.f_s_hz
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// `t_irs` is one packet carrying every coefficient; `t_loc` is the
/// two-way exchange per localization block, each block followed by an IRS
/// reconfiguration; `t_d` is the AP → IRS → user propagation delay.
pub fn derive_timing(frame: &FrameInputs, panel: &IrsPanel, geometry: &Geometry) -> FrameTiming {
    let n = (panel.n_x * panel.n_y) as u64;
    let t_irs = packet_time(frame, n * frame.irs_coeff_bits);
    let t_ppdu_loc = packet_time(frame, frame.loc_payload_bits);
    let t_loc = (frame.loc_tx_per_block * frame.loc_blocks) as f64 * t_ppdu_loc + frame.loc_blocks as f64 * t_irs;
    let t_p_ovh = frame
        .t_p_ovh_override_s
        .unwrap_or((frame.preamble_samples + frame.training_samples) as f64 / frame.f_s_hz);
    let path = dist(geometry.p_ap_m, geometry.p_irs_m) + dist(geometry.p_irs_m, geometry.p_mu());
    FrameTiming {
        t_loc,
        t_irs,
        t_p_ovh,
        t_data: frame.data_samples as f64 / frame.f_s_hz,
        t_idle: frame.t_idle_s,
        t_d: path / SPEED_OF_LIGHT,
    }
}

impl FrameTiming {
    pub fn t_conf(&self) -> f64 {
        self.t_loc + self.t_irs
    }

    pub fn packet_period(&self) -> f64 {
        self.t_p_ovh + self.t_data + self.t_idle
    }

    pub fn budget(&self, t_upd: f64) -> Result<UpdateBudget> {
        let c_h = packets_per_update(self, t_upd);
        let t_ovh = overhead_time(self, t_upd);
        let t_tx = tx_period(self.t_data, t_ovh, t_upd)?;
        Ok(UpdateBudget { t_upd, t_conf: self.t_conf(), c_h, t_ovh, t_tx })
    }
}

/// Data packets sent in one update period: `⌈(t_upd − t_conf) / (t_p_ovh + t_data + t_idle)⌉`,
/// zero when the period is used up by configuration.
pub fn packets_per_update(t: &FrameTiming, t_upd: f64) -> u64 {
    let window = t_upd - t.t_conf();
    if window <= 0.0 {
        return 0;
    }
    ceil_tol(window / t.packet_period()) as u64
}

/// Configuration time plus per-packet preamble, training and idle time.
pub fn overhead_time(t: &FrameTiming, t_upd: f64) -> f64 {
    t.t_conf() + packets_per_update(t, t_upd) as f64 * (t.t_p_ovh + t.t_idle)
}

/// Data time inflated by the overhead share of the period.
pub fn effective_tx_period(t: &FrameTiming, t_upd: f64) -> Result<f64> {
    tx_period(t.t_data, overhead_time(t, t_upd), t_upd)
}

/// `t_data + t_data·t_ovh/(t_upd − t_ovh)`; requires `t_upd > t_ovh`.
pub fn tx_period(t_data: f64, t_ovh: f64, t_upd: f64) -> Result<f64> {
    if !(t_upd > t_ovh) {
        return Err(Error::Infeasible(format!("t_upd={t_upd} s must exceed t_ovh={t_ovh} s")));
    }
    Ok(t_data + t_data * t_ovh / (t_upd - t_ovh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_timing() -> FrameTiming {
        let c = ScenarioConfig::reference();
        derive_timing(&c.frame, &c.panel, &c.geometry)
    }

    fn stated() -> FrameTiming {
        FrameTiming { t_loc: 15e-3, t_irs: 105.4e-6, t_p_ovh: 5.3e-6, t_data: 260e-6, t_idle: 20e-6, t_d: 0.0 }
    }

    #[test]
    fn derived_constants() {
        let t = reference_timing();
        assert!((t.t_data - 260e-6).abs() / 260e-6 < 0.02, "{}", t.t_data);
        assert!((t.t_irs - 105.4e-6).abs() / 105.4e-6 < 0.10, "{}", t.t_irs);
        assert!((t.t_loc - 15e-3).abs() / 15e-3 < 0.15, "{}", t.t_loc);
        assert!((t.t_p_ovh - 8064.0 / 1.76e9).abs() < 1e-15);
        assert!((t.t_d - 4.541 / SPEED_OF_LIGHT).abs() < 1e-11);
        assert!((t.t_conf() - t.t_loc - t.t_irs).abs() < 1e-18);
    }

    #[test]
    fn override_pins_preamble_time() {
        let mut c = ScenarioConfig::reference();
        c.frame.t_p_ovh_override_s = Some(5.3e-6);
        assert_eq!(derive_timing(&c.frame, &c.panel, &c.geometry).t_p_ovh, 5.3e-6);
    }

    #[test]
    fn packet_count_examples() {
        let t = stated();
        assert_eq!(packets_per_update(&t, t.t_conf()), 0);
        assert_eq!(packets_per_update(&t, 1.0), 3453);
        assert_eq!(packets_per_update(&t, t.t_conf() + t.packet_period()), 1);
    }

    #[test]
    fn overhead_examples() {
        let t = stated();
        assert_eq!(overhead_time(&t, 0.01), t.t_conf());
        assert!((overhead_time(&t, 1.0) - 0.10247).abs() < 1e-5);
        let tx = effective_tx_period(&t, 1.0).unwrap();
        assert!((tx - 289.7e-6).abs() < 0.1e-6, "{tx}");
    }

    #[test]
    fn tx_period_limits() {
        assert_eq!(tx_period(260e-6, 0.0, 1.0).unwrap(), 260e-6);
        assert!((tx_period(260e-6, 0.4, 0.8).unwrap() - 520e-6).abs() < 1e-18);
        assert!(matches!(tx_period(260e-6, 0.5, 0.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn overhead_share_near_reported_value() {
        let t = reference_timing();
        let ratio = overhead_time(&t, 1.9) / 1.9;
        assert!((ratio - 0.096).abs() < 0.015, "{ratio}");
        // Reported packet count at 1.9 s is 6275; allow ±10 %.
        let c = packets_per_update(&t, 1.9) as f64;
        assert!((c - 6275.0).abs() / 6275.0 < 0.10, "{c}");
    }

    #[test]
    fn asymptotic_overhead_share() {
        let t = reference_timing();
        let t_upd = 1e4;
        let lhs = overhead_time(&t, t_upd) / t_upd;
        let rhs = t.t_conf() / t_upd + (t.t_p_ovh + t.t_idle) / t.packet_period();
        assert!((lhs - rhs).abs() < 1e-6);
    }

    fn packed(t: &FrameTiming, t_upd: f64) -> u64 {
        let mut n = 0;
        let mut start = t.t_conf();
        while start < t_upd - 1e-12 {
            n += 1;
            start = t.t_conf() + n as f64 * t.packet_period();
        }
        n
    }

    #[test]
    fn ceiling_matches_packing_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let t = FrameTiming {
                t_loc: rng.random_range(1e-4..0.05),
                t_irs: rng.random_range(1e-6..1e-3),
                t_p_ovh: rng.random_range(1e-6..1e-5),
                t_data: rng.random_range(1e-5..1e-3),
                t_idle: rng.random_range(1e-6..1e-4),
                t_d: 0.0,
            };
            let t_upd = rng.random_range(0.0..0.5);
            assert_eq!(packets_per_update(&t, t_upd), packed(&t, t_upd));
        }
    }

    proptest! {
        #[test]
        fn tx_period_decreasing_within_segment(k in 2u64..5000, a in 0.05f64..0.9, b in 0.05f64..0.9) {
            let t = reference_timing();
            let lo = t.t_conf() + (k - 1) as f64 * t.packet_period();
            let (u1, u2) = (a.min(b), a.max(b));
            prop_assume!(u2 - u1 > 1e-6);
            let t1 = lo + u1 * t.packet_period();
            let t2 = lo + u2 * t.packet_period();
            prop_assert_eq!(packets_per_update(&t, t1), packets_per_update(&t, t2));
            prop_assert!(effective_tx_period(&t, t2).unwrap() < effective_tx_period(&t, t1).unwrap());
            prop_assert!(effective_tx_period(&t, t2).unwrap() > t.t_data);
        }
    }
}
