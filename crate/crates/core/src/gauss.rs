//! Standard normal density and distribution function.
//!
//! Every module evaluates φ and Φ through this file so that closed forms
//! computed in different places agree to the last bit. The distribution
//! function is built on `erfc`, which keeps full relative accuracy deep in
//! both tails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Φ⁻¹(3/4), the median of |Z| for Z standard normal.
pub const PHI_INV_3_4: f64 = 0.674_489_750_196_081_7;

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian density φ(z).
#[inline]
pub fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Gaussian distribution function Φ(z).
#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail Q(z) = 1 − Φ(z) = Φ(−z), accurate for large positive z.
#[inline]
pub fn sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// P{lo ≤ Z ≤ hi}, evaluated on whichever side of the origin avoids
/// cancellation.
pub fn interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        sf(lo) - sf(hi)
    } else if hi <= 0.0 {
        cdf(hi) - cdf(lo)
    } else {
        1.0 - sf(hi) - cdf(lo)
    }
}

/// log φ(z), without underflow.
#[inline]
pub fn log_pdf(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * PI).ln()
}
