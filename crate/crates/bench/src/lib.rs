//! Fixtures shared by the criterion benchmarks.

use butterfly_core::Rational;

/// Denominators used by the eigensolver benchmarks.
pub const SIZES: [i64; 4] = [16, 50, 128, 512];

/// A frequency `p/q` with `p` coprime to `q` and roughly `q / 3`.
pub fn frequency(q: i64) -> Rational {
    (q / 3..q).find_map(|p| Rational::new(p, q).ok()).unwrap_or(Rational::ONE)
}
