//! Shared text formatting for CSV emission.

/// Shortest round-trip decimal form of `x` (at most 17 significant digits).
pub fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}
