//! Physical constants and dB conversions. Everything inside the crate is SI
//! and linear; dB only appears at the edges.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn wavelength(f_c_hz: f64) -> f64 {
    SPEED_OF_LIGHT / f_c_hz
}

/// Receiver noise floor in dBm: thermal density raised by the noise figure,
/// plus interference density (both dBm/Hz), integrated over `bandwidth_hz`.
pub fn noise_floor_dbm(noise_figure_db: f64, n0_dbm_hz: f64, n_int_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    let density = db_to_linear(noise_figure_db + n0_dbm_hz) + db_to_linear(n_int_dbm_hz);
    linear_to_db(density * bandwidth_hz)
}
