//! Energy flow θ(t) and the backflow measure for a few bath temperatures.

use backflow::energetics::{self, InitStateStrategy};
use backflow::{tcl2, BathParams, Result, SystemParams, TimeGrid};

fn main() -> Result<()> {
    let grid = TimeGrid::default();
    for temp in [1.0, 3.0, 5.0] {
        let p = BathParams::new(0.1, 0.4, temp)?;
        let s = SystemParams::new(1.0, temp)?;
        let traj = tcl2::propagate(&p, &s, &s.gibbs_state(), &grid)?;
        let flow = energetics::energy_flow(&traj, &p, &s)?;
        let r = energetics::backflow_measure(&p, &s, &grid, &InitStateStrategy::FixedEqualTemps)?;
        println!(
            "T_E = {temp}: backflow {:.6e}, <dq>(100) = {:.6e}, first negative interval {:?}",
            r.value,
            flow.dq.last().copied().unwrap_or(0.0),
            r.negativity_intervals.first()
        );
    }
    Ok(())
}
