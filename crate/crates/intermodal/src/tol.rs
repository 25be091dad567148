//! Numeric tolerances shared across solvers, decoders, and tests.

/// A solver value within this distance of an integer is treated as that
/// integer when decoding binary and integer variables.
pub const INT_TOL: f64 = 1e-5;

/// Objective values and bounds are compared up to this absolute tolerance.
pub const OBJ_TOL: f64 = 1e-4;

/// Default relative MIP gap requested from the backend for "exact" solves.
pub const DEFAULT_REL_GAP: f64 = 1e-6;

/// Guard subtracted before taking ceilings of day ratios so that values a
/// hair above an integer boundary (floating-point dirt) do not pay an extra
/// day of tardiness.
pub const CEIL_EPS: f64 = 1e-9;

/// Tardiness in whole days for a delivery completed at `completion` against
/// due time `due`, both in hours: the ceiling of the positive part of
/// `(completion - due) / 24`.
pub fn tardiness_days(completion: f64, due: i64) -> u64 {
    let ratio = (completion - due as f64) / 24.0;
    if ratio <= CEIL_EPS {
        0
    } else {
        (ratio - CEIL_EPS).ceil() as u64
    }
}
