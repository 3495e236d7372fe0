//! Bath correlation kernels D1, D2 and the resonance curve.

use backflow::{bath, BathParams, Result};

fn main() -> Result<()> {
    let p = BathParams::new(0.1, 0.4, 5.0)?;
    println!("{:>6} {:>14} {:>14}", "t", "D1", "D2");
    for k in 0..=10 {
        let t = k as f64;
        println!("{t:>6.1} {:>14.6e} {:>14.6e}", bath::noise_kernel(t, &p)?, bath::dissipation_kernel(t, &p));
    }
    for temp in [0.5, 1.0, 2.0] {
        println!("resonance cutoff at T_E = {temp}: {:.4}", bath::resonance_curve(temp, 1.0)?);
    }
    Ok(())
}
