//! Simulated time. Everything inside the engine is an integer number of ticks;
//! the public API speaks milliseconds and converts exactly or not at all.

use crate::error::{Error, Result};

/// Engine tick, in milliseconds. Delays, windows and horizons are quantized
/// to this grid.
pub const TICK_MS: f64 = 0.1;

/// Ticks per millisecond (exact for the 0.1 ms tick).
pub const TICKS_PER_MS: f64 = 1.0 / TICK_MS;

/// Convert a millisecond duration to ticks, requiring it to sit on the tick
/// grid (within float slop) and be positive.
pub fn ms_to_ticks(what: &'static str, ms: f64) -> Result<u64> {
    let ticks = ms * TICKS_PER_MS;
    let rounded = ticks.round();
    if !(ms > 0.0) || (ticks - rounded).abs() > 1e-6 || rounded < 1.0 {
        return Err(Error::NotTickAligned { what, value_ms: ms, tick_ms: TICK_MS });
    }
    Ok(rounded as u64)
}

pub fn ticks_to_ms(ticks: u64) -> f64 {
    ticks as f64 * TICK_MS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_multiples_convert() {
        assert_eq!(ms_to_ticks("t", 0.1).unwrap(), 1);
        assert_eq!(ms_to_ticks("t", 2.0).unwrap(), 20);
        assert_eq!(ms_to_ticks("t", 600.0).unwrap(), 6000);
    }

    #[test]
    fn off_grid_rejected() {
        assert!(ms_to_ticks("t", 0.15).is_err());
        assert!(ms_to_ticks("t", 0.0).is_err());
        assert!(ms_to_ticks("t", -1.0).is_err());
    }

    #[test]
    fn round_trip() {
        for t in [1u64, 3, 50, 6000] {
            assert_eq!(ms_to_ticks("t", ticks_to_ms(t)).unwrap(), t);
        }
    }
}
