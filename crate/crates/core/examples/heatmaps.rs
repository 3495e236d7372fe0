//! Coarse backflow and BLP maps over (Ω, T_E) with the resonance curve.

use backflow::sweep::{self, GridSpec, HeatmapGrid};
use backflow::{Result, TimeGrid};

fn show(name: &str, map: &HeatmapGrid) {
    let spec = &map.spec;
    println!("{name}");
    for it in (0..spec.n_temp).rev() {
        let row: Vec<String> = (0..spec.n_omega).map(|io| format!("{:9.2e}", map.value(io, it))).collect();
        println!("T_E {:5.2} | {}", spec.temp(it), row.join(" "));
    }
    if let Some((v, io, it)) = map.argmax() {
        println!("max {v:.4e} at Ω = {:.2}, T_E = {:.2}\n", spec.omega(io), spec.temp(it));
    }
}

fn main() -> Result<()> {
    let spec = GridSpec::new((0.2, 5.0), (0.2, 5.0), 6, 6)?;
    let grid = TimeGrid::default();
    show("backflow", &sweep::sweep_backflow(&spec, 0.1, &grid, None)?);
    show("BLP", &sweep::sweep_blp(&spec, 0.1, &grid, None)?);
    show("|resonance deviation|", &sweep::sweep_resonance_deviation(&spec, 0.1)?);
    for (t, om) in sweep::resonance_overlay((0.5, 2.0))?.iter().step_by(50) {
        println!("resonance curve: T_E = {t:.2}, Ω = {om:.4}");
    }
    Ok(())
}
