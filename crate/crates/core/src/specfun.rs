//! Special functions needed by the closed-form bath kernels.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real part threshold above which the asymptotic series is used.
const ASYMPTOTIC_SHIFT: f64 = 10.0;

/// Bernoulli numbers B_2, B_4, ..., B_12 for the tail of the trigamma series
/// ψ′(z) ~ 1/z + 1/(2z²) + Σ B_2k / z^(2k+1).
const BERNOULLI: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// Trigamma function ψ′(z) for complex argument.
///
/// The argument is shifted with ψ′(z) = ψ′(z+1) + 1/z² until `Re z ≥ 10`,
/// after which the Bernoulli asymptotic expansion is summed. Intended for
/// `Re z > 0`; the reflection formula is not implemented, but the recurrence
/// still gives correct values for any non-pole argument.
pub fn trigamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("trigamma argument {z} is not finite")));
    }
    if z.im.abs() <= 8.0 * f64::EPSILON * z.re.abs().max(1.0) && z.re <= 0.0 {
        let nearest = z.re.round();
        if (z.re - nearest).abs() <= 8.0 * f64::EPSILON * nearest.abs().max(1.0) {
            return Err(Error::Pole(z.re));
        }
    }

    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while z.re < ASYMPTOTIC_SHIFT {
        acc += (z * z).inv();
        z += 1.0;
    }

    let inv = z.inv();
    let inv2 = inv * inv;
    // Horner in 1/z² over the Bernoulli terms, then multiply by 1/z³.
    let mut series = Complex64::new(0.0, 0.0);
    for b in BERNOULLI.iter().rev() {
        series = series * inv2 + *b;
    }
    let tail = inv + 0.5 * inv2 + series * inv2 * inv;
    Ok(acc + tail)
}

/// Bose-Einstein occupation 1/(e^{ω/T} − 1).
pub fn bose_occupation(omega: f64, temp: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    if !(temp > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {temp}")));
    }
    Ok(1.0 / (omega / temp).exp_m1())
}

/// Hyperbolic cosecant.
pub fn csch(x: f64) -> Result<f64> {
    if x == 0.0 || x.is_nan() {
        return Err(Error::Domain(format!("csch undefined at {x}")));
    }
    Ok(1.0 / x.sinh())
}

/// Hyperbolic cotangent, with `coth(x) = 1` once `e^{-2|x|}` underflows
/// relative precision.
pub(crate) fn coth(x: f64) -> f64 {
    if x.abs() > 20.0 {
        x.signum()
    } else {
        1.0 / x.tanh()
    }
}
