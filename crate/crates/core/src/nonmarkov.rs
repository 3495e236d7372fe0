//! Trace-distance dynamics and the BLP non-Markovianity measure
//! 𝒩 = ½∫(|σ| + σ)dt with σ = dD/dt.
//!
//! The default state pair has Bloch vectors (0, ±1, 0). The two states share
//! their populations and have opposite coherences, so D(t) = √(x² + y²) for
//! the Bloch components of the first state, which obey
//!
//! x' = ω0 y,    y' = (2 Im A − ω0) x + a_zz y.
//!
//! [`blp_equatorial_oracle`] integrates this pair of equations from
//! quadrature-built coefficients and gives σ analytically, as an independent
//! check of [`blp_measure`]. [`blp_closed_form`] is the value obtained when
//! the free precession is dropped, D = exp(∫a_zz); it only registers regrowth
//! while a_zz > 0 and is kept for comparison.
//!
//! The pair is taken as the maximizer without a search over state pairs.
//! Its optimality for the exponential cutoff is inherited, not re-derived.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::bath::{self, BathParams};
use crate::error::Result;
use crate::quad;
use crate::tcl2::{self, Generator, KernelTable, QubitState, SystemParams, TimeGrid, Trajectory};

/// σ values at or below this are treated as non-positive.
pub const REGROWTH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub s1: QubitState,
    pub s2: QubitState,
}

impl StatePair {
    /// Bloch vectors (0, 1, 0) and (0, −1, 0).
    pub fn canonical() -> Self {
        Self {
            s1: QubitState::from_bloch(0.0, 1.0, 0.0).expect("pure state"),
            s2: QubitState::from_bloch(0.0, -1.0, 0.0).expect("pure state"),
        }
    }
}

impl Default for StatePair {
    fn default() -> Self {
        Self::canonical()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BLPResult {
    pub value: f64,
    /// Intervals where σ > 0.
    pub regrowth_intervals: Vec<(f64, f64)>,
    pub times: Vec<f64>,
    pub distance_trace: Vec<f64>,
}

/// Trace distance ½|r_a − r_b| between two qubit states.
pub fn trace_distance(a: &QubitState, b: &QubitState) -> f64 {
    let (ra, rb) = (a.bloch(), b.bloch());
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    0.5 * d2.sqrt()
}

/// Centered differences: five-point stencil in the interior, three-point next
/// to the ends, second-order one-sided at the ends.
pub fn centered_derivative(y: &[f64], dt: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let s = (y[1] - y[0]) / dt;
            d = vec![s, s];
        }
        return d;
    }
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * dt);
    for k in 1..n - 1 {
        d[k] = if k >= 2 && k + 2 < n {
            (y[k - 2] - 8.0 * y[k - 1] + 8.0 * y[k + 1] - y[k + 2]) / (12.0 * dt)
        } else {
            (y[k + 1] - y[k - 1]) / (2.0 * dt)
        };
    }
    d
}

/// Cubic Hermite interpolant on [t0, t1] at `t`.
fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

/// ∫ max(σ, 0) dt for a sampled function `d` with sampled derivative `sigma`.
///
/// Wherever σ stays positive over a step the integral is the increment of
/// `d`; on steps where σ changes sign the crossing is located linearly and the
/// partial increment comes from the cubic Hermite interpolant of `d`.
pub(crate) fn positive_increments(times: &[f64], d: &[f64], sigma: &[f64]) -> (f64, Vec<(f64, f64)>) {
    let pos = |v: f64| v > REGROWTH_EPS;
    let mut total = 0.0;
    let mut intervals = Vec::new();
    let mut open = sigma.first().filter(|&&v| pos(v)).map(|_| times[0]);

    for k in 0..d.len().saturating_sub(1) {
        let (t0, t1) = (times[k], times[k + 1]);
        let (s0, s1) = (sigma[k], sigma[k + 1]);
        match (pos(s0), pos(s1)) {
            (true, true) => total += d[k + 1] - d[k],
            (false, false) => {}
            (p0, _) => {
                let tc = if s0 != s1 { (t0 + (t1 - t0) * s0 / (s0 - s1)).clamp(t0, t1) } else { t0 };
                let dc = hermite(t0, t1, d[k], d[k + 1], s0, s1, tc);
                if p0 {
                    total += (dc - d[k]).max(0.0);
                    if let Some(start) = open.take() {
                        intervals.push((start, tc));
                    }
                } else {
                    total += (d[k + 1] - dc).max(0.0);
                    open = Some(tc);
                }
            }
        }
    }
    if let Some(start) = open {
        intervals.push((start, *times.last().unwrap()));
    }
    (total, intervals)
}

fn blp_from_trajectories(a: &Trajectory, b: &Trajectory) -> BLPResult {
    let distance: Vec<f64> = a.states.iter().zip(&b.states).map(|(x, y)| trace_distance(x, y)).collect();
    let sigma = centered_derivative(&distance, a.grid.dt);
    let (value, regrowth_intervals) = positive_increments(&a.times, &distance, &sigma);
    BLPResult { value, regrowth_intervals, times: a.times.clone(), distance_trace: distance }
}

/// BLP measure from two TCL2 propagations of `pair`.
pub fn blp_measure(p: &BathParams, s: &SystemParams, grid: &TimeGrid, pair: &StatePair) -> Result<BLPResult> {
    let table = KernelTable::new(p, grid)?;
    let a = tcl2::propagate_with_table(p, s, &pair.s1, &table)?;
    let b = tcl2::propagate_with_table(p, s, &pair.s2, &table)?;
    Ok(blp_from_trajectories(&a, &b))
}

/// BLP measure under the constant Born-Markov generator.
pub fn blp_measure_born_markov(
    p: &BathParams,
    s: &SystemParams,
    grid: &TimeGrid,
    pair: &StatePair,
) -> Result<BLPResult> {
    let a = tcl2::propagate_born_markov(p, s, &pair.s1, grid)?;
    let b = tcl2::propagate_born_markov(p, s, &pair.s2, grid)?;
    Ok(blp_from_trajectories(&a, &b))
}

/// Canonical-pair measure without free precession:
/// D(t) = exp(∫a_zz) and 𝒩 = ∫_{a_zz>0} a_zz D dt.
pub fn blp_closed_form(p: &BathParams, s: &SystemParams, grid: &TimeGrid) -> Result<BLPResult> {
    let traj = tcl2::propagate(p, s, &QubitState::diagonal(0.5), grid)?;
    Ok(blp_closed_form_from(&traj))
}

/// [`blp_closed_form`] for an existing trajectory (any initial state; only the
/// coefficients are used).
pub fn blp_closed_form_from(traj: &Trajectory) -> BLPResult {
    let (times, c) = (&traj.times, &traj.coefficients);
    let distance: Vec<f64> = c.iter().map(|c| c.azz_integral.exp()).collect();
    let sigma: Vec<f64> = c.iter().zip(&distance).map(|(c, d)| c.a_zz * d).collect();
    let (value, regrowth_intervals) = if traj.generator == Generator::BornMarkov {
        (0.0, Vec::new())
    } else {
        positive_increments(times, &distance, &sigma)
    };
    BLPResult { value, regrowth_intervals, times: times.clone(), distance_trace: distance }
}

/// RK4 substeps per grid step in [`blp_equatorial_oracle`].
const ORACLE_SUBSTEPS: usize = 4;

/// Canonical-pair measure from the equatorial Bloch equations.
///
/// a_zz and Im A are accumulated by Gauss-Kronrod quadrature of the noise
/// kernel over quarter-substeps, the 2×2 system is integrated by RK4 at a
/// quarter of the grid step, and σ = (a_zz y² + 2 Im A x y)/D is evaluated in
/// closed form at the grid times.
pub fn blp_equatorial_oracle(p: &BathParams, s: &SystemParams, grid: &TimeGrid) -> Result<BLPResult> {
    grid.validate()?;
    let w = s.omega0;
    let n = grid.steps() * ORACLE_SUBSTEPS;
    let h = grid.dt / ORACLE_SUBSTEPS as f64;

    // (a_zz, Im A) at the nodes j·h/2.
    let mut coeff = Vec::with_capacity(2 * n + 1);
    let (mut azz, mut im_a) = (0.0, 0.0);
    coeff.push((azz, im_a));
    let err = RefCell::new(None);
    let d1 = |t: f64| {
        bath::noise_kernel(t, p).unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e);
            0.0
        })
    };
    for j in 0..2 * n {
        let (t0, t1) = (j as f64 * 0.5 * h, (j + 1) as f64 * 0.5 * h);
        azz += -2.0 * quad::gauss_kronrod(&|t| d1(t) * (w * t).cos(), t0, t1).0;
        im_a += -quad::gauss_kronrod(&|t| d1(t) * (w * t).sin(), t0, t1).0;
        coeff.push((azz, im_a));
    }
    if let Some(e) = err.into_inner() {
        return Err(e);
    }

    let f = |v: [f64; 2], (azz, im_a): (f64, f64)| [w * v[1], (2.0 * im_a - w) * v[0] + azz * v[1]];
    let mut v = [0.0, 1.0];
    let mut times = Vec::with_capacity(grid.steps() + 1);
    let mut distance = Vec::with_capacity(grid.steps() + 1);
    let mut sigma = Vec::with_capacity(grid.steps() + 1);
    let mut sample = |k: usize, v: [f64; 2]| {
        let (azz, im_a) = coeff[2 * k * ORACLE_SUBSTEPS];
        let d = v[0].hypot(v[1]);
        times.push(grid.time(k));
        distance.push(d);
        sigma.push((azz * v[1] * v[1] + 2.0 * im_a * v[0] * v[1]) / d);
    };
    sample(0, v);
    for j in 0..n {
        let (c0, cm, c1) = (coeff[2 * j], coeff[2 * j + 1], coeff[2 * j + 2]);
        let k1 = f(v, c0);
        let k2 = f([v[0] + 0.5 * h * k1[0], v[1] + 0.5 * h * k1[1]], cm);
        let k3 = f([v[0] + 0.5 * h * k2[0], v[1] + 0.5 * h * k2[1]], cm);
        let k4 = f([v[0] + h * k3[0], v[1] + h * k3[1]], c1);
        for i in 0..2 {
            v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (j + 1) % ORACLE_SUBSTEPS == 0 {
            sample((j + 1) / ORACLE_SUBSTEPS, v);
        }
    }
    let (value, regrowth_intervals) = positive_increments(&times, &distance, &sigma);
    Ok(BLPResult { value, regrowth_intervals, times, distance_trace: distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(lambda: f64, cutoff: f64, temp: f64) -> BathParams {
        BathParams::new(lambda, cutoff, temp).unwrap()
    }

    fn sys() -> SystemParams {
        SystemParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn trace_distance_values() {
        let up = QubitState::from_bloch(0.0, 1.0, 0.0).unwrap();
        let down = QubitState::from_bloch(0.0, -1.0, 0.0).unwrap();
        assert_eq!(trace_distance(&up, &up), 0.0);
        assert!((trace_distance(&up, &down) - 1.0).abs() < 1e-15);
        let north = QubitState::from_bloch(0.0, 0.0, 1.0).unwrap();
        let mixed = QubitState::diagonal(0.5);
        assert!((trace_distance(&north, &mixed) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_stencils() {
        let t: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|x| x * x).collect();
        let d = centered_derivative(&y, 0.1);
        for (x, v) in t.iter().zip(&d) {
            assert!((v - 2.0 * x).abs() < 1e-10);
        }
    }

    #[test]
    fn increments_of_sine() {
        // ∫ max(cos t, 0) over [0, 2π] = 2.
        let n = 2000;
        let t: Vec<f64> = (0..=n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect();
        let d: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        let s: Vec<f64> = t.iter().map(|x| x.cos()).collect();
        let (v, iv) = positive_increments(&t, &d, &s);
        assert!((v - 2.0).abs() < 1e-10);
        assert_eq!(iv.len(), 2);
    }

    #[test]
    fn born_markov_is_markovian() {
        let p = bp(0.1, 0.4, 0.5);
        let r = blp_measure_born_markov(&p, &sys(), &TimeGrid::default(), &StatePair::canonical()).unwrap();
        assert!(r.value.abs() < 1e-8);
        assert!(r.distance_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn decoupled_is_markovian() {
        let p = bp(0.0, 0.4, 0.5);
        let r = blp_measure(&p, &sys(), &TimeGrid::new(20.0, 0.01).unwrap(), &StatePair::canonical()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.regrowth_intervals.is_empty());
    }

    #[test]
    fn closed_form_starts_at_one() {
        let p = bp(0.1, 0.4, 0.5);
        let r = blp_closed_form(&p, &sys(), &TimeGrid::new(10.0, 0.01).unwrap()).unwrap();
        assert_eq!(r.distance_trace[0], 1.0);
    }

    #[test]
    fn two_routes_agree() {
        let p = bp(0.1, 0.4, 0.5);
        let g = TimeGrid::default();
        let a = blp_measure(&p, &sys(), &g, &StatePair::canonical()).unwrap();
        let b = blp_equatorial_oracle(&p, &sys(), &g).unwrap();
        assert!(a.value > 0.0);
        assert!((a.value - b.value).abs() < 1e-6, "{} vs {}", a.value, b.value);
        for (x, y) in a.distance_trace.iter().zip(&b.distance_trace) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_needs_positive_azz() {
        let p = bp(0.1, 10.0, 0.5);
        let r = blp_closed_form(&p, &sys(), &TimeGrid::default()).unwrap();
        assert_eq!(r.value, 0.0);
        let p = bp(0.1, 0.2, 0.5);
        let r = blp_closed_form(&p, &sys(), &TimeGrid::default()).unwrap();
        assert!(r.value > 0.0);
    }
}
