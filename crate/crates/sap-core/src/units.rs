//! Unit conversions at the configuration boundary.
//!
//! Everything inside the library works in meters, watts, and 1/m². Human
//! units (dBm, per-km², degrees) are converted exactly once, at config
//! parsing, so the formulas never mix unit systems.

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

pub fn per_km2_to_per_m2(per_km2: f64) -> f64 {
    per_km2 * 1e-6
}

pub fn per_m2_to_per_km2(per_m2: f64) -> f64 {
    per_m2 * 1e6
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * std::f64::consts::PI / 180.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
