//! Ohmic bath with exponential cutoff: spectral densities, the noise and
//! dissipation kernels, and the resonance condition on the effective spectral
//! density.
//!
//! Units: ω0 sets the scale, k_B = ħ = 1.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::{bose_occupation, coth, csch, trigamma};

/// Coupling above which the second-order expansion is not trusted.
pub const WEAK_COUPLING_LIMIT: f64 = 0.3;

/// Below this frequency `J_eff` is replaced by its ω → 0 limit `2λT_E`.
const JEFF_SERIES_SWITCH: f64 = 1e-8;

/// Finite-difference step used for ∂τD1.
const NOISE_DERIVATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Dimensionless coupling strength λ.
    pub lambda: f64,
    /// Cutoff frequency Ω.
    pub cutoff: f64,
    /// Bath temperature T_E.
    pub temp: f64,
}

impl BathParams {
    /// Validated constructor. `lambda = 0` is accepted as the decoupled limit.
    pub fn new(lambda: f64, cutoff: f64, temp: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("coupling must be non-negative, got {lambda}")));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::Domain(format!("cutoff must be positive, got {cutoff}")));
        }
        if !(temp > 0.0 && temp.is_finite()) {
            return Err(Error::Domain(format!("bath temperature must be positive, got {temp}")));
        }
        if lambda > WEAK_COUPLING_LIMIT {
            log::warn!("coupling {lambda} is outside the weak-coupling regime (> {WEAK_COUPLING_LIMIT})");
        }
        Ok(Self { lambda, cutoff, temp })
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

/// Noise and dissipation kernel values (or their τ-derivatives) at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPair {
    pub d1: f64,
    pub d2: f64,
}

/// J(ω) = λ ω e^{−ω/Ω}.
pub fn spectral_density(omega: f64, p: &BathParams) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::Domain(format!("spectral density needs ω ≥ 0, got {omega}")));
    }
    Ok(p.lambda * omega * (-omega / p.cutoff).exp())
}

/// J_eff(ω) = J(ω) coth(ω / 2T_E), continuous at ω = 0 where it equals 2λT_E.
pub fn effective_spectral_density(omega: f64, p: &BathParams) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::Domain(format!("effective spectral density needs ω > 0, got {omega}")));
    }
    Ok(jeff(omega, p))
}

fn jeff(omega: f64, p: &BathParams) -> f64 {
    if omega < JEFF_SERIES_SWITCH {
        return 2.0 * p.lambda * p.temp;
    }
    p.lambda * omega * (-omega / p.cutoff).exp() * coth(omega / (2.0 * p.temp))
}

/// Noise kernel D1(τ) in closed form through the complex trigamma function.
pub fn noise_kernel(tau: f64, p: &BathParams) -> Result<f64> {
    let (lam, om, t) = (p.lambda, p.cutoff, p.temp);
    let x2 = (om * tau).powi(2);
    let vacuum = om * om * (x2 - 1.0) / (1.0 + x2).powi(2);
    let z = Complex64::new(t / om, t * tau);
    let thermal = 2.0 * t * t * trigamma(z)?.re;
    Ok(2.0 * lam * (vacuum + thermal))
}

/// Dissipation kernel D2(τ) = 4λΩ³τ / (1 + (Ωτ)²)².
pub fn dissipation_kernel(tau: f64, p: &BathParams) -> f64 {
    let om = p.cutoff;
    4.0 * p.lambda * om.powi(3) * tau / (1.0 + (om * tau).powi(2)).powi(2)
}

/// (∂τD1, ∂τD2). The first is a Richardson-extrapolated central difference of
/// the closed form, the second is analytic.
pub fn kernel_time_derivatives(tau: f64, p: &BathParams) -> Result<KernelPair> {
    let h = NOISE_DERIVATIVE_STEP;
    let central = |h: f64| -> Result<f64> {
        Ok((noise_kernel(tau + h, p)? - noise_kernel(tau - h, p)?) / (2.0 * h))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    let d1 = (4.0 * fine - coarse) / 3.0;

    let om = p.cutoff;
    let x2 = (om * tau).powi(2);
    let d2 = 4.0 * p.lambda * om.powi(3) * (1.0 - 3.0 * x2) / (1.0 + x2).powi(3);
    Ok(KernelPair { d1, d2 })
}

/// Upper frequency for the quadrature oracles; e^{−ω/Ω} is below 1e−17 there.
fn omega_max(p: &BathParams) -> f64 {
    (40.0 * p.cutoff).max(20.0 * p.temp).max(50.0)
}

/// Panel boundaries aligned with the oscillation period 2π/|τ|.
fn oscillation_breaks(tau: f64, upper: f64) -> Vec<f64> {
    let mut width = upper / 50.0;
    if tau != 0.0 {
        width = width.min(TAU / tau.abs());
    }
    let n = (upper / width).ceil() as usize;
    let mut breaks: Vec<f64> = (0..n).map(|k| k as f64 * width).collect();
    breaks.push(upper);
    breaks
}

const ORACLE_TOL: f64 = 1e-10;
const ORACLE_BUDGET: usize = 50_000;

/// Quadrature oracle for D1: 2∫₀^∞ J_eff(ω) cos(ωτ) dω.
pub fn noise_kernel_quadrature(tau: f64, p: &BathParams) -> Result<f64> {
    let upper = omega_max(p);
    let breaks = oscillation_breaks(tau, upper);
    let v = quad::integrate_panels(|w| jeff(w, p) * (w * tau).cos(), &breaks, ORACLE_TOL, ORACLE_BUDGET)?;
    Ok(2.0 * v)
}

/// Quadrature oracle for D2: 2∫₀^∞ J(ω) sin(ωτ) dω.
pub fn dissipation_kernel_quadrature(tau: f64, p: &BathParams) -> Result<f64> {
    let upper = omega_max(p);
    let breaks = oscillation_breaks(tau, upper);
    let j = |w: f64| p.lambda * w * (-w / p.cutoff).exp();
    let v = quad::integrate_panels(|w| j(w) * (w * tau).sin(), &breaks, ORACLE_TOL, ORACLE_BUDGET)?;
    Ok(2.0 * v)
}

/// Quadrature oracle for ∂τD1: −2∫₀^∞ ω J_eff(ω) sin(ωτ) dω.
pub fn noise_derivative_quadrature(tau: f64, p: &BathParams) -> Result<f64> {
    let upper = omega_max(p);
    let breaks = oscillation_breaks(tau, upper);
    let v = quad::integrate_panels(
        |w| w * jeff(w, p) * (w * tau).sin(),
        &breaks,
        ORACLE_TOL,
        ORACLE_BUDGET,
    )?;
    Ok(-2.0 * v)
}

/// ∂ω J_eff at ω = ω0. Zero on the resonance curve.
pub fn resonance_deviation(p: &BathParams, omega0: f64) -> Result<f64> {
    if !(omega0 > 0.0) {
        return Err(Error::Domain(format!("ω0 must be positive, got {omega0}")));
    }
    let x = omega0 / (2.0 * p.temp);
    // csch² underflows to 0 for large x, which is the correct limit.
    let csch2 = if x > 350.0 { 0.0 } else { (1.0 / x.sinh()).powi(2) };
    let bracket = (1.0 - omega0 / p.cutoff) * coth(x) - x * csch2;
    Ok(p.lambda * (-omega0 / p.cutoff).exp() * bracket)
}

/// Cutoff Ω_res(T_E) = T_E / (T_E/ω0 − csch(ω0/T_E)) at which J_eff is flat
/// at ω0.
pub fn resonance_curve(temp: f64, omega0: f64) -> Result<f64> {
    if !(temp > 0.0) || !(omega0 > 0.0) {
        return Err(Error::Domain(format!(
            "resonance curve needs T_E > 0 and ω0 > 0, got ({temp}, {omega0})"
        )));
    }
    let u = omega0 / temp;
    // 1/u − csch(u), with its Taylor series where the difference cancels.
    let gap = if u < 1e-2 {
        u / 6.0 - 7.0 * u.powi(3) / 360.0 + 31.0 * u.powi(5) / 15120.0
    } else if u > 700.0 {
        1.0 / u
    } else {
        1.0 / u - csch(u)?
    };
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("resonance curve denominator {gap} is not positive")));
    }
    Ok(temp / gap)
}

/// Born-Markov decay rate Γ = 2πJ(ω0).
pub fn markov_rate(p: &BathParams, omega0: f64) -> f64 {
    2.0 * PI * p.lambda * omega0 * (-omega0 / p.cutoff).exp()
}

/// Bose occupation of the system frequency at the bath temperature.
pub fn thermal_occupation(p: &BathParams, omega0: f64) -> Result<f64> {
    bose_occupation(omega0, p.temp)
}
