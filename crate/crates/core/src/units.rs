//! Unit conventions. Internally frequencies are angular (rad/ns), rates are
//! 1/ns and times are ns.

use std::f64::consts::PI;

/// GHz (cycles per ns) to rad/ns.
pub const GHZ_TO_RAD_PER_NS: f64 = 2.0 * PI;

/// MHz angular frequency to rad/ns.
pub const MHZ_TO_RAD_PER_NS: f64 = 2.0 * PI * 1e-3;

/// A rate quoted in MHz (events per µs) to 1/ns.
pub const MHZ_RATE_TO_PER_NS: f64 = 1e-3;

pub fn ghz_to_rad_per_ns(f: f64) -> f64 {
    f * GHZ_TO_RAD_PER_NS
}

pub fn mhz_rate_to_per_ns(r: f64) -> f64 {
    r * MHZ_RATE_TO_PER_NS
}

/// Carrier period in ns for a frequency in GHz.
pub fn period_ns(f_ghz: f64) -> f64 {
    1.0 / f_ghz
}
