//! Optimal reconfiguration period for an intelligent reflecting surface
//! serving a mobile user.
//!
//! The pipeline runs from the IRS link budget ([`irs_field`]) through the
//! frame overhead ([`frame_timing`]) and the random-waypoint hitting times
//! ([`hitting`], checked against [`mobility_mc`]) to a three-state Markov
//! regenerative model ([`mrgp`]) whose occupation fractions feed the average
//! peak age of information ([`paoi`]).

// `!(x > y)` is used so that NaN inputs fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frame_timing;
pub mod hitting;
pub mod irs_field;
pub mod math;
pub mod mobility_mc;
pub mod mrgp;
pub mod paoi;
pub mod sampled;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
pub use scenario::{load_config, MobilitySpec, ScenarioConfig};
