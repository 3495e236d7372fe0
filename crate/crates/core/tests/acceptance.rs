//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits non-zero on any failure only when ACCEPTANCE_STRICT is set, so that the
//! report is part of every `cargo test` run without masking the other targets.

use std::time::{Duration, Instant};

use backflow::bath::{self, BathParams};
use backflow::energetics::{self, cumulative_integral};
use backflow::nonmarkov::{self, StatePair};
use backflow::sweep::{self, GridSpec, HeatmapGrid};
use backflow::tcl2::{self, SystemParams, TimeGrid};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn bp(lambda: f64, cutoff: f64, temp: f64) -> BathParams {
    BathParams::new(lambda, cutoff, temp).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed(budget: Duration, start: Instant) -> (bool, String) {
    let el = start.elapsed();
    (el < budget, format!("{:.1} s (budget {} s)", el.as_secs_f64(), budget.as_secs()))
}

fn kernel_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for &tau in &[0.0, 0.5, 1.0, 5.0, 20.0] {
        for &cutoff in &[0.2, 0.4, 1.0, 2.0, 5.0] {
            for &temp in &[0.2, 1.0, 5.0] {
                let p = bp(0.1, cutoff, temp);
                let c = bath::noise_kernel(tau, &p).map_err(|e| e.to_string())?;
                let q = bath::noise_kernel_quadrature(tau, &p).map_err(|e| e.to_string())?;
                let diff = (c - q).abs();
                let ok = if c.abs() < 1e-3 { diff < 1e-9 } else { diff < 1e-6 * c.abs() };
                worst = worst.max(if c.abs() < 1e-3 { diff / 1e-9 } else { diff / (1e-6 * c.abs()) });
                if !ok {
                    bad.push((tau, cutoff, temp));
                }
            }
        }
    }
    let (fast, t) = timed(Duration::from_secs(30), start);
    check(bad.is_empty() && fast, format!("75 points, worst error/tolerance {worst:.2e}, failing {bad:?}, {t}"))
}

fn theta_routes() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (lambda, cutoff, temp) = (rng.gen_range(0.01..0.2), rng.gen_range(0.2..5.0), rng.gen_range(0.2..5.0));
        let ts = rng.gen_range(0.2..5.0);
        let p = bp(lambda, cutoff, temp);
        let s = SystemParams::new(1.0, ts).unwrap();
        let traj = tcl2::propagate(&p, &s, &s.gibbs_state(), &TimeGrid::default()).map_err(|e| e.to_string())?;
        let flow = energetics::energy_flow(&traj, &p, &s).map_err(|e| e.to_string())?;
        worst = worst.max(flow.max_route_difference());
    }
    let (fast, t) = timed(Duration::from_secs(60), start);
    check(worst < 1e-6 && fast, format!("max |θ − θ_alt| = {worst:.2e} over 10 seeded sets, {t}"))
}

fn decomposition() -> Outcome {
    let p = bp(0.1, 0.4, 1.0);
    let s = SystemParams::new(1.0, 5.0).unwrap();
    let traj = tcl2::propagate(&p, &s, &s.gibbs_state(), &TimeGrid::default()).map_err(|e| e.to_string())?;
    let flow = energetics::energy_flow(&traj, &p, &s).map_err(|e| e.to_string())?;
    let f_int = cumulative_integral(&flow.times, &flow.f_term);
    let mut worst: f64 = 0.0;
    for &t in &[10.0, 50.0, 100.0] {
        let k = (t / 0.01f64).round() as usize;
        let lhs = flow.dq[k] - s.omega0 * (traj.states[k].p0 - traj.states[0].p0);
        worst = worst.max((lhs - f_int[k]).abs());
    }
    check(worst < 1e-7, format!("max residual {worst:.2e} at t ∈ {{10, 50, 100}}"))
}

fn markov_limit() -> Outcome {
    let p = bp(0.1, 0.4, 1.0);
    let s = SystemParams::new(1.0, 1.0).unwrap();
    let long = tcl2::propagate(&p, &s, &s.gibbs_state(), &TimeGrid::new(200.0, 0.01).unwrap()).map_err(|e| e.to_string())?;
    let c = long.coefficients.last().unwrap();
    let gamma = bath::markov_rate(&p, 1.0);
    let n = bath::thermal_occupation(&p, 1.0).map_err(|e| e.to_string())?;
    let azz_rel = (c.a_zz / (-gamma * (1.0 + 2.0 * n)) - 1.0).abs();
    let bz_rel = (c.b_z / -gamma - 1.0).abs();

    let s1 = SystemParams::new(1.0, 5.0).unwrap();
    let init = s1.gibbs_state();
    let traj = tcl2::propagate(&p, &s1, &init, &TimeGrid::default()).map_err(|e| e.to_string())?;
    let mut pop: f64 = 0.0;
    for (k, &t) in traj.times.iter().enumerate().filter(|(_, &t)| t >= 80.0) {
        let bm = tcl2::born_markov_population(t, &p, &s1, init.p0).map_err(|e| e.to_string())?;
        pop = pop.max((traj.states[k].p0 - bm).abs());
    }
    check(
        azz_rel < 0.01 && bz_rel < 0.01 && pop < 0.01,
        format!("a_zz(200) off by {:.3}%, b_z(200) off by {:.3}%, max |Δρ00| on [80, 100] = {pop:.2e}", azz_rel * 100.0, bz_rel * 100.0),
    )
}

fn first_local_min(theta: &[f64]) -> Option<f64> {
    let peak = (1..theta.len() - 1).find(|&k| theta[k] > 0.0 && theta[k] >= theta[k - 1] && theta[k] > theta[k + 1])?;
    (peak + 1..theta.len() - 1).find(|&k| theta[k] <= theta[k - 1] && theta[k] < theta[k + 1]).map(|k| theta[k])
}

fn fig1b() -> Outcome {
    let start = Instant::now();
    let s = SystemParams::new(1.0, 5.0).unwrap();
    let mut minima = Vec::new();
    let mut peaks_positive = true;
    let mut lowest_at_5 = 0.0;
    for &temp in &[1.0, 3.0, 5.0] {
        let p = bp(0.1, 0.4, temp);
        let traj = tcl2::propagate(&p, &s, &s.gibbs_state(), &TimeGrid::default()).map_err(|e| e.to_string())?;
        let theta = energetics::energy_flow(&traj, &p, &s).map_err(|e| e.to_string())?.theta;
        let first_peak = (1..theta.len() - 1).find(|&k| theta[k] >= theta[k - 1] && theta[k] > theta[k + 1]);
        peaks_positive &= first_peak.is_some_and(|k| theta[k] > 0.0);
        minima.push(first_local_min(&theta).unwrap_or(f64::NAN));
        if temp == 5.0 {
            lowest_at_5 = theta.iter().cloned().fold(f64::INFINITY, f64::min);
        }
    }
    let monotone = minima[0] > minima[1] && minima[1] > minima[2];
    let (fast, t) = timed(Duration::from_secs(10), start);
    check(
        peaks_positive && monotone && lowest_at_5 < 0.0 && fast,
        format!("positive first peaks {peaks_positive}, first minima {minima:.4?} for T_E = 1, 3, 5, min θ at T_E = 5 is {lowest_at_5:.3e}, {t}"),
    )
}

fn blp_oracle() -> Outcome {
    let grid = TimeGrid::default();
    let axis = [0.2, 0.5, 1.0, 2.0, 5.0];
    let (mut closed, mut oracle, mut markov): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &cutoff in &axis {
        for &temp in &axis {
            let p = bp(0.1, cutoff, temp);
            let s = SystemParams::new(1.0, temp).unwrap();
            let num = nonmarkov::blp_measure(&p, &s, &grid, &StatePair::canonical()).map_err(|e| e.to_string())?.value;
            let cf = nonmarkov::blp_closed_form(&p, &s, &grid).map_err(|e| e.to_string())?.value;
            let or = nonmarkov::blp_equatorial_oracle(&p, &s, &grid).map_err(|e| e.to_string())?.value;
            let bm = nonmarkov::blp_measure_born_markov(&p, &s, &grid, &StatePair::canonical()).map_err(|e| e.to_string())?.value;
            closed = closed.max((num - cf).abs());
            oracle = oracle.max((num - or).abs());
            markov = markov.max(bm.abs());
        }
    }
    check(
        closed < 1e-6 && markov < 1e-8,
        format!(
            "max |N − closed form| = {closed:.2e}, max |N − equatorial oracle| = {oracle:.2e}, max |N_Born-Markov| = {markov:.2e} on 5×5"
        ),
    )
}

fn near_curve(spec: &GridSpec, io: usize, it: usize) -> bool {
    let width = (spec.omega_range.1 - spec.omega_range.0) / spec.n_omega as f64;
    bath::resonance_curve(spec.temp(it), 1.0).is_ok_and(|r| (spec.omega(io) - r).abs() <= width)
}

fn off_curve_max(map: &HeatmapGrid) -> f64 {
    let spec = &map.spec;
    let mut m: f64 = 0.0;
    for it in 0..spec.n_temp {
        for io in 0..spec.n_omega {
            if !near_curve(spec, io, it) {
                m = m.max(map.value(io, it));
            }
        }
    }
    m
}

fn resonance_suppression(backflow: &HeatmapGrid, blp: &HeatmapGrid, elapsed: Duration) -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::default();
    let (bf_max, blp_max) = (off_curve_max(backflow), off_curve_max(blp));
    let mut ok = true;
    let mut rows = Vec::new();
    for &temp in &[0.5, 1.0, 2.0] {
        let cutoff = bath::resonance_curve(temp, 1.0).map_err(|e| e.to_string())?;
        let p = bp(0.1, cutoff, temp);
        let s = SystemParams::new(1.0, temp).unwrap();
        let bf = energetics::backflow_measure(&p, &s, &grid, &energetics::InitStateStrategy::FixedEqualTemps)
            .map_err(|e| e.to_string())?
            .value;
        let n = nonmarkov::blp_measure(&p, &s, &grid, &StatePair::canonical()).map_err(|e| e.to_string())?.value;
        let (bf_rel, n_rel) = (bf / bf_max, n / blp_max);
        ok &= bf_rel < 0.05 && n_rel < 1e-4;
        rows.push(format!("T_E = {temp}: backflow/max {bf_rel:.2e}, BLP/max {n_rel:.2e}"));
    }
    let (fast, t) = timed(Duration::from_secs(600), start - elapsed);
    check(ok && fast, format!("{} (thresholds 5e-2, 1e-4), {t}", rows.join("; ")))
}

fn strictness(backflow: &HeatmapGrid, blp: &HeatmapGrid) -> Outcome {
    let (bf_max, _, _) = backflow.argmax().ok_or("empty backflow map")?;
    let (blp_max, _, _) = blp.argmax().ok_or("empty BLP map")?;
    let violations: Vec<usize> = (0..backflow.values.len())
        .filter(|&i| backflow.values[i] > 1e-6 * bf_max && blp.values[i] <= 1e-6 * blp_max || blp.values[i].is_nan())
        .collect();
    let positive = backflow.values.iter().filter(|&&v| v > 1e-6 * bf_max).count();
    check(
        violations.is_empty() && backflow.failed_cells.is_empty() && blp.failed_cells.is_empty(),
        format!("{positive} backflow-positive cells on 10×10, {} without BLP: {violations:?}", violations.len()),
    )
}

fn hygiene() -> Outcome {
    let p = bp(0.1, 0.4, 1.0);
    let s = SystemParams::new(1.0, 5.0).unwrap();
    let coarse = tcl2::propagate(&p, &s, &s.gibbs_state(), &TimeGrid::default()).map_err(|e| e.to_string())?;
    let fine = tcl2::propagate(&p, &s, &s.gibbs_state(), &TimeGrid::default().halved()).map_err(|e| e.to_string())?;
    let halving = (coarse.states.last().unwrap().p0 - fine.states.last().unwrap().p0).abs();

    let spec = GridSpec::new((0.2, 5.0), (0.2, 5.0), 3, 3).unwrap();
    let grid = TimeGrid::default();
    let mut runs = Vec::new();
    for jobs in [Some(1), Some(1), Some(2), Some(4), None] {
        let bf = sweep::sweep_backflow(&spec, 0.1, &grid, jobs).map_err(|e| e.to_string())?;
        let n = sweep::sweep_blp(&spec, 0.1, &grid, jobs).map_err(|e| e.to_string())?;
        let bits: Vec<u64> = bf.values.iter().chain(&n.values).map(|v| v.to_bits()).collect();
        runs.push(bits);
    }
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    check(
        halving < 1e-7 && identical,
        format!("|Δρ00(100)| under step halving {halving:.2e}, sweeps bit-identical across repeats and jobs 1/2/4/auto: {identical}"),
    )
}

fn desk_scale() -> Outcome {
    let start = Instant::now();
    let spec = GridSpec::default();
    let grid = TimeGrid::default();
    let bf = sweep::sweep_backflow(&spec, 0.1, &grid, None).map_err(|e| e.to_string())?;
    let n = sweep::sweep_blp(&spec, 0.1, &grid, None).map_err(|e| e.to_string())?;
    let (fast, t) = timed(Duration::from_secs(1800), start);
    let (v, io, it) = bf.argmax().ok_or("empty map")?;
    let (om, te) = (spec.omega(io), spec.temp(it));
    let region = te >= 3.5 && (0.5..=1.5).contains(&om);
    let failed = bf.failed_cells.len() + n.failed_cells.len();
    check(
        fast && region && failed == 0,
        format!(
            "two 50×50 maps in {t} on {} worker(s); backflow max {v:.4e} at Ω = {om:.3}, T_E = {te:.3}; {failed} failed cells",
            rayon::current_num_threads()
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = vec![
        (1, kernel_oracle()),
        (2, theta_routes()),
        (3, decomposition()),
        (4, markov_limit()),
        (5, fig1b()),
        (6, blp_oracle()),
    ];

    let start = Instant::now();
    let spec = GridSpec::new((0.2, 5.0), (0.2, 5.0), 10, 10).unwrap();
    let grid = TimeGrid::default();
    let maps = sweep::sweep_backflow(&spec, 0.1, &grid, None).and_then(|bf| Ok((bf, sweep::sweep_blp(&spec, 0.1, &grid, None)?)));
    let elapsed = start.elapsed();
    match &maps {
        Ok((bf, n)) => {
            results.push((7, resonance_suppression(bf, n, elapsed)));
            results.push((8, strictness(bf, n)));
        }
        Err(e) => {
            results.push((7, Err(e.to_string())));
            results.push((8, Err(e.to_string())));
        }
    }
    results.push((9, hygiene()));
    results.push((10, desk_scale()));

    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(d) => println!("criterion {n}: PASS  {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n}: FAIL  {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
