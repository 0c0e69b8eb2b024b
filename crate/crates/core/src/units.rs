//! dB/dBm/linear conversions. All internal math runs in linear SI units;
//! configs and reports use dB, dBm, watts and degrees.

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}
