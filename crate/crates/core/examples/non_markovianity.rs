//! BLP measure by TCL2 propagation, the equatorial oracle and the Born-Markov limit.

use backflow::nonmarkov::{self, StatePair};
use backflow::{BathParams, Result, SystemParams, TimeGrid};

fn main() -> Result<()> {
    let grid = TimeGrid::default();
    for (cutoff, temp) in [(0.4, 0.5), (1.0, 5.0), (3.0, 0.5)] {
        let p = BathParams::new(0.1, cutoff, temp)?;
        let s = SystemParams::new(1.0, temp)?;
        let tcl = nonmarkov::blp_measure(&p, &s, &grid, &StatePair::canonical())?;
        let oracle = nonmarkov::blp_equatorial_oracle(&p, &s, &grid)?;
        let markov = nonmarkov::blp_measure_born_markov(&p, &s, &grid, &StatePair::canonical())?;
        println!(
            "Ω = {cutoff}, T_E = {temp}: N = {:.6e} (oracle {:.6e}, Born-Markov {:.1e}), {} regrowth intervals",
            tcl.value,
            oracle.value,
            markov.value,
            tcl.regrowth_intervals.len()
        );
    }
    Ok(())
}
