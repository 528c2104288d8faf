//! Univariate standard normal helpers.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// 1 / sqrt(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// ln(2π) / 2
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn ln_pdf(x: f64) -> f64 {
    -HALF_LN_2PI - 0.5 * x * x
}

/// Φ(x), accurate in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x) without cancellation.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1); returns ±∞ at the end points.
#[inline]
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * p)
    }
}

/// φ(c)/Φ(c), the magnitude of E[Z | Z < c], stable for very negative `c`.
pub fn lower_mills(c: f64) -> f64 {
    if c < -30.0 {
        // asymptotic expansion of φ/Φ in the far lower tail
        let c2 = c * c;
        -c * (1.0 + 1.0 / c2 - 2.0 / (c2 * c2))
    } else {
        pdf(c) / cdf(c)
    }
}

/// Draws from N(mean, sd²) restricted to (−∞, upper).
pub fn sample_below<R: Rng + ?Sized>(mean: f64, sd: f64, upper: f64, rng: &mut R) -> f64 {
    if sd <= 0.0 {
        return mean.min(upper);
    }
    let c = (upper - mean) / sd;
    if c > -5.0 {
        let pc = cdf(c);
        loop {
            let u: f64 = rng.random();
            let x = quantile(u * pc);
            if x.is_finite() && x < c {
                return mean + sd * x;
            }
        }
    }
    // far tail: sample −Z above a = −c with an exponential proposal
    let a = -c;
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(lambda).expect("positive rate");
    loop {
        let z = a + exp.sample(rng);
        let u: f64 = rng.random();
        if u <= (-0.5 * (z - lambda) * (z - lambda)).exp() {
            return mean - sd * z;
        }
    }
}
