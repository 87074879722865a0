//! Log-gamma and log-beta for positive real arguments.
//!
//! Both use the Stirling series with an explicit remainder term, so that
//! `ln B(a, b)` stays accurate when one argument is in the hundreds of
//! thousands and the other is small (the regime of lottery ticket counts).

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this the Stirling remainder is not accurate enough and arguments
/// are shifted upward by recurrence.
const STIRLING_MIN: f64 = 10.0;

/// Stirling remainder `lnΓ(x) - [(x - 1/2) ln x - x + ln √(2π)]`, for `x >= 10`.
pub(crate) fn lgamma_correction(x: f64) -> f64 {
    debug_assert!(x >= STIRLING_MIN);
    // B_{2k} / (2k (2k-1)), k = 1..7
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x >= STIRLING_MIN {
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + lgamma_correction(x);
    }
    // Γ(x) = Γ(x + k) / (x (x+1) ... (x+k-1))
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < STIRLING_MIN {
        prod *= shifted;
        shifted += 1.0;
    }
    ln_gamma(shifted) - prod.ln()
}

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    let sum = p + q;
    if p >= STIRLING_MIN {
        let corr = lgamma_correction(p) + lgamma_correction(q) - lgamma_correction(sum);
        -0.5 * q.ln() + LN_SQRT_2PI + corr + (p - 0.5) * (p / sum).ln() + q * (-p / sum).ln_1p()
    } else if q >= STIRLING_MIN {
        let corr = lgamma_correction(q) - lgamma_correction(sum);
        ln_gamma(p) + corr + p - p * sum.ln() + (q - 0.5) * (-p / sum).ln_1p()
    } else {
        ln_gamma(p) + ln_gamma(q) - ln_gamma(sum)
    }
}
