//! Energy flow per unit time θ(t), the cumulative transferred energy ⟨Δq⟩_t,
//! and the energy-backflow measure.
//!
//! θ is positive when energy flows from the qubit into the bath. Two routes
//! are computed side by side:
//!
//! * from the counting-field coefficients, θ = (w+ − w−)ρ00 − w+;
//! * from the population equation, θ = ω0 dρ00/dt + f(t) with
//!   f = −δp D1(t) sin(ω0t) + D2(t) cos(ω0t).
//!
//! They agree analytically, so their difference measures the integration
//! error of the w± coefficients.

use serde::{Deserialize, Serialize};

use crate::bath::BathParams;
use crate::error::{Error, Result};
use crate::tcl2::{self, Generator, SystemParams, TimeGrid, Trajectory};

/// Values of θ above −NEGATIVITY_EPS are not counted as backflow.
pub const NEGATIVITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    /// θ(t) from the w± coefficients.
    pub theta: Vec<f64>,
    /// θ(t) from ω0 dρ00/dt + f(t).
    pub theta_alt: Vec<f64>,
    /// ⟨Δq⟩_t, the [`cumulative_integral`] of `theta`.
    pub dq: Vec<f64>,
    pub f_term: Vec<f64>,
    /// ω0 dρ00/dt of the Born-Markov solution with the same initial population.
    pub markov_theta: Vec<f64>,
}

impl FlowTrace {
    pub fn max_route_difference(&self) -> f64 {
        self.theta.iter().zip(&self.theta_alt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackflowResult {
    /// ½∫(|θ| − θ) dt over the grid.
    pub value: f64,
    /// Intervals where θ < 0, with linearly interpolated end points.
    pub negativity_intervals: Vec<(f64, f64)>,
    /// System temperature of the maximizing initial Gibbs state.
    pub argmax_state: f64,
}

/// How the maximization over initial system states is carried out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitStateStrategy {
    /// T_S = T_E.
    FixedEqualTemps,
    /// Maximum over the listed system temperatures, each ≥ T_E.
    ScanTemps(Vec<f64>),
}

/// θ, θ_alt, ⟨Δq⟩ and the Born-Markov reference for a propagated trajectory.
pub fn energy_flow(traj: &Trajectory, p: &BathParams, s: &SystemParams) -> Result<FlowTrace> {
    let n = traj.times.len();
    if traj.states.len() != n || traj.coefficients.len() != n || traj.kernels.len() != n || n == 0 {
        return Err(Error::Input(format!(
            "trajectory series lengths differ: times {}, states {}, coefficients {}, kernels {}",
            n,
            traj.states.len(),
            traj.coefficients.len(),
            traj.kernels.len()
        )));
    }
    let omega0 = s.omega0;
    let rho0 = traj.states[0].p0;

    let mut theta = Vec::with_capacity(n);
    let mut theta_alt = Vec::with_capacity(n);
    let mut f_term = Vec::with_capacity(n);
    let mut markov_theta = Vec::with_capacity(n);
    for k in 0..n {
        let t = traj.times[k];
        let st = &traj.states[k];
        let c = &traj.coefficients[k];
        theta.push((c.w_plus - c.w_minus) * st.p0 - c.w_plus);

        let f = match traj.generator {
            Generator::Tcl2 => {
                let kp = traj.kernels[k];
                let (sn, cs) = (omega0 * t).sin_cos();
                -st.population_difference() * kp.d1 * sn + kp.d2 * cs
            }
            Generator::BornMarkov => 0.0,
        };
        f_term.push(f);
        theta_alt.push(omega0 * traj.population_rate(k) + f);
        markov_theta.push(omega0 * tcl2::born_markov_population_rate(t, p, s, rho0)?);
    }

    Ok(FlowTrace {
        dq: cumulative_integral(&traj.times, &theta),
        times: traj.times.clone(),
        theta,
        theta_alt,
        f_term,
        markov_theta,
    })
}

/// Running integral of uniformly sampled `y`, starting at zero.
///
/// Each step integrates the cubic through the four nearest samples, weights
/// (−1, 13, 13, −1)/24 in the interior and (9, 19, −5, 1)/24 at the ends, so
/// the running value is fourth-order accurate. Falls back to the trapezoid rule
/// for fewer than four samples.
pub fn cumulative_integral(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 4 {
        return cumulative_trapezoid(x, y);
    }
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..n - 1 {
        let h = x[k + 1] - x[k];
        let step = if k == 0 {
            9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]
        } else if k == n - 2 {
            y[n - 4] - 5.0 * y[n - 3] + 19.0 * y[n - 2] + 9.0 * y[n - 1]
        } else {
            -y[k - 1] + 13.0 * y[k] + 13.0 * y[k + 1] - y[k + 2]
        };
        acc += h * step / 24.0;
        out.push(acc);
    }
    out
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    if !y.is_empty() {
        out.push(0.0);
    }
    for k in 1..y.len() {
        acc += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
        out.push(acc);
    }
    out
}

fn is_negative(v: f64) -> bool {
    v < -NEGATIVITY_EPS
}

/// Area of the negative part of the linear interpolant between two samples,
/// and the crossing time when the sign changes on this step.
fn negative_area(t0: f64, t1: f64, ya: f64, yb: f64) -> (f64, Option<f64>) {
    match (is_negative(ya), is_negative(yb)) {
        (true, true) => (-0.5 * (t1 - t0) * (ya + yb), None),
        (false, false) => (0.0, None),
        (na, _) => {
            let tc = if ya != yb { t0 + (t1 - t0) * ya / (ya - yb) } else { t0 };
            let tc = tc.clamp(t0, t1);
            if na {
                (-0.5 * (tc - t0) * ya, Some(tc))
            } else {
                (-0.5 * (t1 - tc) * yb, Some(tc))
            }
        }
    }
}

/// ½∫(|θ| − θ)dt with crossing refinement: on a step where θ changes sign
/// only the triangle on the negative side is counted.
pub fn backflow_from_theta(times: &[f64], theta: &[f64]) -> (f64, Vec<(f64, f64)>) {
    let mut total = 0.0;
    let mut intervals = Vec::new();
    let mut open = theta.first().filter(|&&v| is_negative(v)).map(|_| times[0]);
    for k in 1..theta.len() {
        let (area, crossing) = negative_area(times[k - 1], times[k], theta[k - 1], theta[k]);
        total += area;
        if let Some(tc) = crossing {
            match open.take() {
                Some(start) => intervals.push((start, tc)),
                None => open = Some(tc),
            }
        }
    }
    if let Some(start) = open {
        intervals.push((start, *times.last().unwrap()));
    }
    (total, intervals)
}

/// Running value of ½∫₀^t(|θ| − θ) at every sample.
pub fn running_backflow(times: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(theta.len());
    if !theta.is_empty() {
        out.push(0.0);
    }
    for k in 1..theta.len() {
        acc += negative_area(times[k - 1], times[k], theta[k - 1], theta[k]).0;
        out.push(acc);
    }
    out
}

/// Energy-backflow measure maximized over the initial Gibbs states allowed by
/// `strategy`.
pub fn backflow_measure(
    p: &BathParams,
    s: &SystemParams,
    grid: &TimeGrid,
    strategy: &InitStateStrategy,
) -> Result<BackflowResult> {
    let candidates = match strategy {
        InitStateStrategy::FixedEqualTemps => vec![p.temp],
        InitStateStrategy::ScanTemps(list) => {
            if list.is_empty() {
                return Err(Error::Precondition("empty system-temperature scan".into()));
            }
            list.clone()
        }
    };
    if let Some(bad) = candidates.iter().find(|&&ts| !(ts >= p.temp)) {
        return Err(Error::Precondition(format!(
            "system temperature {bad} is below the bath temperature {}",
            p.temp
        )));
    }

    let table = tcl2::KernelTable::new(p, grid)?;
    let mut best: Option<BackflowResult> = None;
    for ts in candidates {
        let sys = SystemParams::new(s.omega0, ts)?;
        let traj = tcl2::propagate_with_table(p, &sys, &sys.gibbs_state(), &table)?;
        let flow = energy_flow(&traj, p, &sys)?;
        let (value, negativity_intervals) = backflow_from_theta(&flow.times, &flow.theta);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(BackflowResult { value, negativity_intervals, argmax_state: ts });
        }
    }
    Ok(best.expect("at least one candidate"))
}
