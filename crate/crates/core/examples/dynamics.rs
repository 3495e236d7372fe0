//! TCL2 and Born-Markov population dynamics with the running coefficients.

use backflow::{tcl2, BathParams, Result, SystemParams, TimeGrid};

fn main() -> Result<()> {
    let p = BathParams::new(0.1, 0.4, 1.0)?;
    let s = SystemParams::new(1.0, 5.0)?;
    let init = s.gibbs_state();
    let traj = tcl2::propagate(&p, &s, &init, &TimeGrid::default())?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "rho00", "rho00_BM", "a_zz", "b_z");
    for k in (0..traj.len()).step_by(1000) {
        let t = traj.times[k];
        let bm = tcl2::born_markov_population(t, &p, &s, init.p0)?;
        let c = &traj.coefficients[k];
        println!("{t:>6.1} {:>12.8} {:>12.8} {:>12.4e} {:>12.4e}", traj.states[k].p0, bm, c.a_zz, c.b_z);
    }
    Ok(())
}
