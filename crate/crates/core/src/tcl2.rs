//! Second-order time-convolutionless (TCL2) dynamics of the spin-boson qubit.
//!
//! The running coefficient integrals are carried as extra components of one
//! augmented ODE state and advanced together with the density matrix by a
//! fixed-step classical RK4 scheme. Everything is in the Schrödinger picture:
//! the coherence equation carries the free precession iω0ρ01 next to the
//! dissipative terms, whose entries only depend on τ-integrals of the kernels.
//!
//! Born-Markov populations use the stationary value ρ∞ = (1+n)/(1+2n) and the
//! transient amplitude (ρ00(0) − ρ∞). Printed versions of this formula that
//! drop ρ∞ from the transient do not solve the rate equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{self, BathParams, KernelPair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Level splitting ω0.
    pub omega0: f64,
    /// Effective temperature of the initial Gibbs state; may be `f64::INFINITY`.
    pub sys_temp: f64,
}

impl SystemParams {
    pub fn new(omega0: f64, sys_temp: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::Domain(format!("ω0 must be positive, got {omega0}")));
        }
        if !(sys_temp > 0.0) {
            return Err(Error::Domain(format!("system temperature must be positive, got {sys_temp}")));
        }
        Ok(Self { omega0, sys_temp })
    }

    /// Ground-state population of the Gibbs state at `sys_temp`.
    pub fn gibbs_ground_population(&self) -> f64 {
        if self.sys_temp.is_infinite() {
            return 0.5;
        }
        1.0 / (1.0 + (-self.omega0 / self.sys_temp).exp())
    }

    pub fn gibbs_state(&self) -> QubitState {
        QubitState::diagonal(self.gibbs_ground_population())
    }
}

/// Qubit density matrix stored as ground population ρ00 and coherence ρ01.
///
/// ρ11 = 1 − ρ00 and ρ10 = conj(ρ01), so trace and hermiticity hold by
/// construction. Bloch components follow ρ = (I + xσx + yσy + zσz)/2 in the
/// (|0⟩, |1⟩) basis: x = 2 Re ρ01, y = −2 Im ρ01, z = ρ00 − ρ11.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub p0: f64,
    pub coh: Complex64,
}

impl QubitState {
    pub fn diagonal(p0: f64) -> Self {
        Self { p0, coh: Complex64::new(0.0, 0.0) }
    }

    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let r2 = x * x + y * y + z * z;
        if !(r2 <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!("Bloch vector ({x}, {y}, {z}) is outside the unit ball")));
        }
        Ok(Self { p0: 0.5 * (1.0 + z), coh: Complex64::new(0.5 * x, -0.5 * y) })
    }

    pub fn bloch(&self) -> [f64; 3] {
        [2.0 * self.coh.re, -2.0 * self.coh.im, 2.0 * self.p0 - 1.0]
    }

    pub fn bloch_norm(&self) -> f64 {
        let [x, y, z] = self.bloch();
        (x * x + y * y + z * z).sqrt()
    }

    pub fn p1(&self) -> f64 {
        1.0 - self.p0
    }

    /// δp = ρ11 − ρ00.
    pub fn population_difference(&self) -> f64 {
        1.0 - 2.0 * self.p0
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p0) || !self.coh.re.is_finite() || !self.coh.im.is_finite() {
            return Err(Error::Domain(format!("invalid qubit state {self:?}")));
        }
        if self.bloch_norm() > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("qubit state {self:?} is not positive")));
        }
        Ok(())
    }
}

/// Running TCL2 coefficients at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coefficients {
    pub a_plus: f64,
    pub a_minus: f64,
    pub a_zz: f64,
    pub b_z: f64,
    /// ∫₀^t D1(τ) e^{−iω0τ} dτ, the coherence decay/shift coefficient.
    pub a_coh: Complex64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// ∫₀^t a_zz(s) ds.
    pub azz_integral: f64,
}

/// Uniform time grid `0, dt, ..., t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { t_max: 100.0, dt: 0.01 }
    }
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        let g = Self { t_max, dt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Domain(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_max) {
            return Err(Error::Domain(format!("dt must lie in (0, t_max], got {}", self.dt)));
        }
        let ratio = self.t_max / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::Domain(format!(
                "t_max / dt = {ratio} is not an integer number of steps"
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| self.time(k)).collect()
    }

    pub fn halved(&self) -> Self {
        Self { t_max: self.t_max, dt: 0.5 * self.dt }
    }
}

/// Which generator drives the propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// Time-dependent second-order coefficients.
    Tcl2,
    /// Constant long-time coefficients (GKSL semigroup). The coherence
    /// coefficient keeps its dissipative part Γ(1+2n)/2 only.
    BornMarkov,
}

/// Noise and dissipation kernels and their τ-derivatives at the RK4 nodes
/// `t = j·dt/2`, j = 0..=2N.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: TimeGrid,
    values: Vec<KernelPair>,
    derivatives: Vec<KernelPair>,
}

impl KernelTable {
    pub fn new(p: &BathParams, grid: &TimeGrid) -> Result<Self> {
        grid.validate()?;
        let nodes = 2 * grid.steps() + 1;
        let half = 0.5 * grid.dt;
        let mut values = Vec::with_capacity(nodes);
        let mut derivatives = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let t = j as f64 * half;
            values.push(KernelPair { d1: bath::noise_kernel(t, p)?, d2: bath::dissipation_kernel(t, p) });
            derivatives.push(bath::kernel_time_derivatives(t, p)?);
        }
        Ok(Self { grid: *grid, values, derivatives })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// (D1, D2) at grid sample `k` (time k·dt).
    pub fn at_sample(&self, k: usize) -> KernelPair {
        self.values[2 * k]
    }
}

/// Integrands accumulated into [`Coefficients`], evaluated from kernel values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRates {
    pub a_plus: f64,
    pub a_minus: f64,
    pub a_zz: f64,
    pub b_z: f64,
    pub a_coh: Complex64,
    pub w_plus: f64,
    pub w_minus: f64,
}

fn rates_from_kernels(t: f64, omega0: f64, k: KernelPair, dk: KernelPair) -> CoefficientRates {
    let (s, c) = (omega0 * t).sin_cos();
    let a_zz = -2.0 * k.d1 * c;
    let b_z = -2.0 * k.d2 * s;
    let a_minus = 0.5 * (a_zz + b_z);
    CoefficientRates {
        a_plus: a_zz - a_minus,
        a_minus,
        a_zz,
        b_z,
        a_coh: k.d1 * Complex64::new(c, -s),
        w_plus: dk.d1 * s - dk.d2 * c,
        w_minus: -dk.d1 * s - dk.d2 * c,
    }
}

/// Time derivatives of the running TCL2 coefficients at time `t`.
pub fn coefficient_derivatives(t: f64, p: &BathParams, s: &SystemParams) -> Result<CoefficientRates> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("coefficient rates need t ≥ 0, got {t}")));
    }
    let k = KernelPair { d1: bath::noise_kernel(t, p)?, d2: bath::dissipation_kernel(t, p) };
    let dk = bath::kernel_time_derivatives(t, p)?;
    Ok(rates_from_kernels(t, s.omega0, k, dk))
}

/// Long-time (Born-Markov) limit of the coefficients.
pub fn markov_limit_coefficients(p: &BathParams, s: &SystemParams) -> Result<Coefficients> {
    let gamma = bath::markov_rate(p, s.omega0);
    let n = bath::thermal_occupation(p, s.omega0)?;
    let a_zz = -gamma * (1.0 + 2.0 * n);
    Ok(Coefficients {
        a_plus: -gamma * n,
        a_minus: -gamma * (1.0 + n),
        a_zz,
        b_z: -gamma,
        a_coh: Complex64::new(-0.5 * a_zz, 0.0),
        w_plus: -s.omega0 * gamma * (1.0 + n),
        w_minus: s.omega0 * gamma * n,
        azz_integral: 0.0,
    })
}

/// Born-Markov ground population ρ∞ + (ρ00(0) − ρ∞) e^{−Γ(1+2n)t}.
pub fn born_markov_population(t: f64, p: &BathParams, s: &SystemParams, rho00_0: f64) -> Result<f64> {
    let (rho_inf, rate) = born_markov_relaxation(p, s)?;
    Ok(rho_inf + (rho00_0 - rho_inf) * (-rate * t).exp())
}

/// d/dt of [`born_markov_population`].
pub fn born_markov_population_rate(t: f64, p: &BathParams, s: &SystemParams, rho00_0: f64) -> Result<f64> {
    let (rho_inf, rate) = born_markov_relaxation(p, s)?;
    Ok(-rate * (rho00_0 - rho_inf) * (-rate * t).exp())
}

/// (ρ∞, Γ(1+2n)).
fn born_markov_relaxation(p: &BathParams, s: &SystemParams) -> Result<(f64, f64)> {
    let gamma = bath::markov_rate(p, s.omega0);
    let n = bath::thermal_occupation(p, s.omega0)?;
    Ok(((1.0 + n) / (1.0 + 2.0 * n), gamma * (1.0 + 2.0 * n)))
}

/// Sampled solution of one propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub generator: Generator,
    pub bath: BathParams,
    pub system: SystemParams,
    pub grid: TimeGrid,
    pub times: Vec<f64>,
    pub states: Vec<QubitState>,
    pub coefficients: Vec<Coefficients>,
    /// (D1, D2) at each sample. Zero for Born-Markov trajectories, where the
    /// kernels have decayed by assumption.
    pub kernels: Vec<KernelPair>,
    /// Largest Bloch norm reached.
    pub max_bloch_norm: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// dρ00/dt from the right-hand side of the population equation.
    pub fn population_rate(&self, k: usize) -> f64 {
        let c = &self.coefficients[k];
        (c.a_plus + c.a_minus) * self.states[k].p0 - c.a_minus
    }
}

const DIM: usize = 12;
type Augmented = [f64; DIM];

// Indices into the augmented state.
const RHO00: usize = 0;
const COH_RE: usize = 1;
const COH_IM: usize = 2;
const A_PLUS: usize = 3;
const A_MINUS: usize = 4;
const A_ZZ: usize = 5;
const B_Z: usize = 6;
const ACOH_RE: usize = 7;
const ACOH_IM: usize = 8;
const W_PLUS: usize = 9;
const W_MINUS: usize = 10;
const AZZ_INT: usize = 11;

fn pack(state: &QubitState, c: &Coefficients) -> Augmented {
    [
        state.p0,
        state.coh.re,
        state.coh.im,
        c.a_plus,
        c.a_minus,
        c.a_zz,
        c.b_z,
        c.a_coh.re,
        c.a_coh.im,
        c.w_plus,
        c.w_minus,
        c.azz_integral,
    ]
}

fn unpack(y: &Augmented) -> (QubitState, Coefficients) {
    (
        QubitState { p0: y[RHO00], coh: Complex64::new(y[COH_RE], y[COH_IM]) },
        Coefficients {
            a_plus: y[A_PLUS],
            a_minus: y[A_MINUS],
            a_zz: y[A_ZZ],
            b_z: y[B_Z],
            a_coh: Complex64::new(y[ACOH_RE], y[ACOH_IM]),
            w_plus: y[W_PLUS],
            w_minus: y[W_MINUS],
            azz_integral: y[AZZ_INT],
        },
    )
}

/// Right-hand side of the augmented system; `rates` is `None` for constant
/// coefficients.
fn rhs(y: &Augmented, rates: Option<&CoefficientRates>, omega0: f64) -> Augmented {
    let mut dy = [0.0; DIM];
    dy[RHO00] = (y[A_PLUS] + y[A_MINUS]) * y[RHO00] - y[A_MINUS];

    // dρ01/dt = iω0 ρ01 − A ρ01 + conj(A) ρ10, with ρ10 = conj(ρ01).
    let a = Complex64::new(y[ACOH_RE], y[ACOH_IM]);
    let rho01 = Complex64::new(y[COH_RE], y[COH_IM]);
    let d_coh = (Complex64::new(0.0, omega0) - a) * rho01 + a.conj() * rho01.conj();
    dy[COH_RE] = d_coh.re;
    dy[COH_IM] = d_coh.im;
    dy[AZZ_INT] = y[A_ZZ];

    if let Some(r) = rates {
        dy[A_PLUS] = r.a_plus;
        dy[A_MINUS] = r.a_minus;
        dy[A_ZZ] = r.a_zz;
        dy[B_Z] = r.b_z;
        dy[ACOH_RE] = r.a_coh.re;
        dy[ACOH_IM] = r.a_coh.im;
        dy[W_PLUS] = r.w_plus;
        dy[W_MINUS] = r.w_minus;
    }
    dy
}

fn axpy(y: &Augmented, h: f64, k: &Augmented) -> Augmented {
    let mut out = *y;
    for (o, ki) in out.iter_mut().zip(k) {
        *o += h * ki;
    }
    out
}

/// TCL2 propagation on `grid`, sampling every step.
pub fn propagate(p: &BathParams, s: &SystemParams, init: &QubitState, grid: &TimeGrid) -> Result<Trajectory> {
    let table = KernelTable::new(p, grid)?;
    propagate_with_table(p, s, init, &table)
}

/// TCL2 propagation reusing precomputed kernels, so several initial states can
/// share one table.
pub fn propagate_with_table(
    p: &BathParams,
    s: &SystemParams,
    init: &QubitState,
    table: &KernelTable,
) -> Result<Trajectory> {
    init.validate()?;
    let grid = table.grid;
    let half = 0.5 * grid.dt;
    let rates_at = |j: usize| {
        rates_from_kernels(j as f64 * half, s.omega0, table.values[j], table.derivatives[j])
    };
    let kernels = (0..=grid.steps()).map(|k| table.at_sample(k)).collect();
    integrate(Generator::Tcl2, p, s, init, grid, Coefficients::default(), Some(&rates_at), kernels)
}

/// Born-Markov propagation with constant long-time coefficients.
pub fn propagate_born_markov(
    p: &BathParams,
    s: &SystemParams,
    init: &QubitState,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    init.validate()?;
    grid.validate()?;
    let limit = markov_limit_coefficients(p, s)?;
    let kernels = vec![KernelPair { d1: 0.0, d2: 0.0 }; grid.steps() + 1];
    integrate::<fn(usize) -> CoefficientRates>(Generator::BornMarkov, p, s, init, *grid, limit, None, kernels)
}

#[allow(clippy::too_many_arguments)]
fn integrate<R: Fn(usize) -> CoefficientRates>(
    generator: Generator,
    p: &BathParams,
    s: &SystemParams,
    init: &QubitState,
    grid: TimeGrid,
    start: Coefficients,
    rates_at: Option<&R>,
    kernels: Vec<KernelPair>,
) -> Result<Trajectory> {
    let steps = grid.steps();
    let dt = grid.dt;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut coefficients = Vec::with_capacity(steps + 1);

    let mut y = pack(init, &start);
    let mut max_norm = init.bloch_norm();
    times.push(0.0);
    states.push(*init);
    coefficients.push(start);

    let rate = |j: usize| rates_at.map(|r| r(j));
    let w = s.omega0;
    for k in 0..steps {
        let (r0, rm, r1) = (rate(2 * k), rate(2 * k + 1), rate(2 * k + 2));
        let k1 = rhs(&y, r0.as_ref(), w);
        let k2 = rhs(&axpy(&y, 0.5 * dt, &k1), rm.as_ref(), w);
        let k3 = rhs(&axpy(&y, 0.5 * dt, &k2), rm.as_ref(), w);
        let k4 = rhs(&axpy(&y, dt, &k3), r1.as_ref(), w);
        for i in 0..DIM {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerics(format!("state became non-finite at t = {}", grid.time(k + 1))));
        }
        let (state, coeff) = unpack(&y);
        max_norm = max_norm.max(state.bloch_norm());
        times.push(grid.time(k + 1));
        states.push(state);
        coefficients.push(coeff);
    }

    if max_norm > 1.0 + 1e-9 {
        log::warn!(
            "Bloch norm reached {max_norm:.6} (positivity violated) for λ = {}, Ω = {}, T_E = {}",
            p.lambda,
            p.cutoff,
            p.temp
        );
    }

    Ok(Trajectory {
        generator,
        bath: *p,
        system: *s,
        grid,
        times,
        states,
        coefficients,
        kernels,
        max_bloch_norm: max_norm,
    })
}
