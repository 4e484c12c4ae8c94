//! File formats and command implementations behind the `mixfit` binary.

pub mod commands;
pub mod data_file;
pub mod error;
pub mod model_file;
pub mod selfcheck;
pub mod synth;
pub mod trace;

pub use error::{CliError, Result};

/// Shortest decimal that parses back to the same `f64`. Very large or very
/// small magnitudes use exponent notation.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Four significant digits, for human-readable summaries only.
pub fn fmt_short(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = 3 - v.abs().log10().floor() as i32;
    if (0..=10).contains(&digits) {
        format!("{v:.*}", digits as usize)
    } else {
        format!("{v:.3e}")
    }
}
