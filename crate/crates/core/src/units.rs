//! Decibel and power-unit conversions. All internal quantities are linear
//! and in SI units (W, m, Hz); conversions happen at the boundary.

/// dB to linear power ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// dBm to watts: 10^((x - 30) / 10).
pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn dbw_to_w(dbw: f64) -> f64 {
    db_to_lin(dbw)
}

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
