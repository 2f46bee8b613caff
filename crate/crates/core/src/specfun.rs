//! Special functions used by the holography model.
//!
//! `J0` and `J1` are evaluated with the fdlibm rational/asymptotic scheme
//! (via the `libm` crate), which is accurate to a few ulps over the whole
//! real line. The removable singularities of `sinc` and `jinc` are handled
//! with short Taylor series.

use std::f64::consts::PI;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Normalized sine cardinal `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    let t = PI * x;
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// Bessel cardinal `J1(x) / x`, with `jinc(0) = 1/2`.
pub fn jinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // J1(x)/x = 1/2 - x^2/16 + x^4/384 - ...
        let x2 = x * x;
        0.5 - x2 / 16.0 + x2 * x2 / 384.0
    } else {
        bessel_j1(x) / x
    }
}

// B_{2k} / (2k)! for k = 1..=8
const BERNOULLI_OVER_FACT: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// Hurwitz zeta function `sum_{k>=0} (q + k)^(-s)` for `s > 1`, `q > 0`.
///
/// Euler-Maclaurin summation: a short head is summed directly and the
/// remainder is expanded in Bernoulli numbers.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    const HEAD: usize = 12;
    let mut sum = 0.0;
    for k in 0..HEAD {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + HEAD as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) times a^(-s-2k+1)
    let mut rising = s;
    let mut power = a.powf(-s - 1.0);
    for (k, coeff) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = coeff * rising * power;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let m = 2.0 * k as f64 + s;
        rising *= (m + 1.0) * (m + 2.0);
        power /= a * a;
    }
    sum
}
