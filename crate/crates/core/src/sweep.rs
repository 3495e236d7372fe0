//! Parameter-grid evaluation of the backflow, BLP and resonance-deviation
//! measures over (Ω, T_E).
//!
//! Cells are the centers of a uniform grid over the closed ranges. Values are
//! stored row-major with T_E as the row index and Ω as the column index, so
//! `values[it * n_omega + io]` belongs to `(omega(io), temp(it))`. Cells are
//! evaluated in parallel into pre-assigned slots; output does not depend on
//! the number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{self, BathParams};
use crate::energetics::{self, InitStateStrategy};
use crate::error::{Error, Result};
use crate::nonmarkov::{self, StatePair};
use crate::tcl2::{SystemParams, TimeGrid};

/// Samples of the resonance curve emitted by [`resonance_overlay`].
pub const OVERLAY_SAMPLES: usize = 481;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub omega_range: (f64, f64),
    pub temp_range: (f64, f64),
    pub n_omega: usize,
    pub n_temp: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { omega_range: (0.2, 5.0), temp_range: (0.2, 5.0), n_omega: 50, n_temp: 50 }
    }
}

impl GridSpec {
    pub fn new(omega_range: (f64, f64), temp_range: (f64, f64), n_omega: usize, n_temp: usize) -> Result<Self> {
        let g = Self { omega_range, temp_range, n_omega, n_temp };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("Ω", self.omega_range), ("T_E", self.temp_range)] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::Domain(format!("{name} range must satisfy 0 < min < max, got {lo}:{hi}")));
            }
        }
        if self.n_omega < 2 || self.n_temp < 2 {
            return Err(Error::Domain(format!(
                "grid needs at least 2×2 cells, got {}×{}",
                self.n_omega, self.n_temp
            )));
        }
        Ok(())
    }

    pub fn omega(&self, i: usize) -> f64 {
        center(self.omega_range, self.n_omega, i)
    }

    pub fn temp(&self, i: usize) -> f64 {
        center(self.temp_range, self.n_temp, i)
    }

    pub fn cells(&self) -> usize {
        self.n_omega * self.n_temp
    }

    /// (Ω, T_E) of the cell at flat index `idx`.
    pub fn cell(&self, idx: usize) -> (f64, f64) {
        (self.omega(idx % self.n_omega), self.temp(idx / self.n_omega))
    }
}

fn center((lo, hi): (f64, f64), n: usize, i: usize) -> f64 {
    lo + (i as f64 + 0.5) * (hi - lo) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Backflow,
    Blp,
    /// |∂ωJ_eff| at ω0.
    ResonanceDeviation,
    /// Signed ∂ωJ_eff at ω0.
    ResonanceDeviationSigned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapMeta {
    pub kind: MeasureKind,
    pub lambda: f64,
    pub omega0: f64,
    /// Absent for the closed-form resonance maps.
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub i_omega: usize,
    pub i_temp: usize,
    pub omega_c: f64,
    pub temp: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub spec: GridSpec,
    pub meta: HeatmapMeta,
    /// Row-major, rows indexed by T_E. Failed cells hold NaN.
    pub values: Vec<f64>,
    pub failed_cells: Vec<FailedCell>,
}

impl HeatmapGrid {
    pub fn value(&self, i_omega: usize, i_temp: usize) -> f64 {
        self.values[i_temp * self.spec.n_omega + i_omega]
    }

    /// Largest value over successful cells, with its (i_omega, i_temp).
    pub fn argmax(&self) -> Option<(f64, usize, usize)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .fold(None, |best: Option<(f64, usize)>, (i, &v)| match best {
                Some((b, _)) if b >= v => best,
                _ => Some((v, i)),
            })
            .map(|(v, i)| (v, i % self.spec.n_omega, i / self.spec.n_omega))
    }
}

/// Worker-count control for a sweep. `None` uses rayon's default.
fn run_cells<F>(spec: &GridSpec, jobs: Option<usize>, f: F) -> Result<(Vec<f64>, Vec<FailedCell>)>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    spec.validate()?;
    let eval = || -> Vec<Result<f64>> {
        (0..spec.cells())
            .into_par_iter()
            .map(|idx| {
                let (om, te) = spec.cell(idx);
                f(om, te)
            })
            .collect()
    };
    let results = match jobs {
        Some(0) => return Err(Error::Input("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Input(format!("cannot build thread pool: {e}")))?
            .install(eval),
        None => eval(),
    };

    let mut values = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                let (omega_c, temp) = spec.cell(idx);
                log::warn!("cell (Ω = {omega_c}, T_E = {temp}) failed: {e}");
                failed.push(FailedCell {
                    i_omega: idx % spec.n_omega,
                    i_temp: idx / spec.n_omega,
                    omega_c,
                    temp,
                    error: e.to_string(),
                });
                values.push(f64::NAN);
            }
        }
    }
    Ok((values, failed))
}

/// Backflow measure with T_S = T_E in every cell, ω0 = 1.
pub fn sweep_backflow(spec: &GridSpec, lambda: f64, grid: &TimeGrid, jobs: Option<usize>) -> Result<HeatmapGrid> {
    grid.validate()?;
    let (values, failed_cells) = run_cells(spec, jobs, |om, te| {
        let p = BathParams::new(lambda, om, te)?;
        let s = SystemParams::new(1.0, te)?;
        Ok(energetics::backflow_measure(&p, &s, grid, &InitStateStrategy::FixedEqualTemps)?.value)
    })?;
    Ok(HeatmapGrid { spec: *spec, meta: dynamic_meta(MeasureKind::Backflow, lambda, grid), values, failed_cells })
}

/// Canonical-pair BLP measure in every cell, ω0 = 1.
pub fn sweep_blp(spec: &GridSpec, lambda: f64, grid: &TimeGrid, jobs: Option<usize>) -> Result<HeatmapGrid> {
    grid.validate()?;
    let pair = StatePair::canonical();
    let (values, failed_cells) = run_cells(spec, jobs, |om, te| {
        let p = BathParams::new(lambda, om, te)?;
        let s = SystemParams::new(1.0, te)?;
        Ok(nonmarkov::blp_measure(&p, &s, grid, &pair)?.value)
    })?;
    Ok(HeatmapGrid { spec: *spec, meta: dynamic_meta(MeasureKind::Blp, lambda, grid), values, failed_cells })
}

/// |∂ωJ_eff| at ω0 = 1 in every cell.
pub fn sweep_resonance_deviation(spec: &GridSpec, lambda: f64) -> Result<HeatmapGrid> {
    let mut g = sweep_resonance_deviation_signed(spec, lambda)?;
    g.values.iter_mut().for_each(|v| *v = v.abs());
    g.meta.kind = MeasureKind::ResonanceDeviation;
    Ok(g)
}

/// Signed ∂ωJ_eff at ω0 = 1 in every cell.
pub fn sweep_resonance_deviation_signed(spec: &GridSpec, lambda: f64) -> Result<HeatmapGrid> {
    let (values, failed_cells) =
        run_cells(spec, Some(1), |om, te| bath::resonance_deviation(&BathParams::new(lambda, om, te)?, 1.0))?;
    let meta = HeatmapMeta { kind: MeasureKind::ResonanceDeviationSigned, lambda, omega0: 1.0, t_max: None, dt: None };
    Ok(HeatmapGrid { spec: *spec, meta, values, failed_cells })
}

fn dynamic_meta(kind: MeasureKind, lambda: f64, grid: &TimeGrid) -> HeatmapMeta {
    HeatmapMeta { kind, lambda, omega0: 1.0, t_max: Some(grid.t_max), dt: Some(grid.dt) }
}

/// (T_E, Ω_res) pairs of the resonance curve at [`OVERLAY_SAMPLES`] uniformly
/// spaced temperatures spanning `temp_range`.
pub fn resonance_overlay(temp_range: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = temp_range;
    let step = (hi - lo) / (OVERLAY_SAMPLES - 1) as f64;
    (0..OVERLAY_SAMPLES)
        .map(|i| {
            let t = lo + i as f64 * step;
            Ok((t, bath::resonance_curve(t, 1.0)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GridSpec {
        GridSpec::new((0.3, 2.0), (0.5, 3.0), 3, 2).unwrap()
    }

    #[test]
    fn cell_centers() {
        let g = GridSpec::default();
        assert!((g.omega(0) - 0.248).abs() < 1e-12);
        assert!((g.temp(49) - 4.952).abs() < 1e-12);
        let t = toy();
        assert_eq!(t.cell(4), (t.omega(1), t.temp(1)));
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new((0.0, 1.0), (0.2, 5.0), 4, 4).is_err());
        assert!(GridSpec::new((1.0, 1.0), (0.2, 5.0), 4, 4).is_err());
        assert!(GridSpec::new((0.2, 5.0), (0.2, 5.0), 1, 4).is_err());
    }

    #[test]
    fn decoupled_maps_are_zero() {
        let spec = GridSpec::new((0.2, 5.0), (0.2, 5.0), 2, 2).unwrap();
        let g = TimeGrid::new(10.0, 0.05).unwrap();
        for map in [sweep_backflow(&spec, 0.0, &g, None).unwrap(), sweep_blp(&spec, 0.0, &g, None).unwrap()] {
            assert!(map.failed_cells.is_empty());
            assert!(map.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let g = TimeGrid::new(20.0, 0.05).unwrap();
        let a = sweep_backflow(&toy(), 0.1, &g, Some(1)).unwrap();
        let b = sweep_backflow(&toy(), 0.1, &g, Some(3)).unwrap();
        assert_eq!(a, b);
        let bits = |m: &HeatmapGrid| m.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn cells_match_direct_evaluation() {
        let g = TimeGrid::new(20.0, 0.05).unwrap();
        let map = sweep_blp(&toy(), 0.1, &g, None).unwrap();
        let (om, te) = (toy().omega(2), toy().temp(1));
        let direct = nonmarkov::blp_measure(
            &BathParams::new(0.1, om, te).unwrap(),
            &SystemParams::new(1.0, te).unwrap(),
            &g,
            &StatePair::canonical(),
        )
        .unwrap();
        assert_eq!(map.value(2, 1), direct.value);
    }

    #[test]
    fn deviation_scales_with_lambda_and_changes_sign() {
        let spec = GridSpec::new((0.2, 12.0), (0.9, 1.1), 40, 2).unwrap();
        let a = sweep_resonance_deviation_signed(&spec, 0.1).unwrap();
        let b = sweep_resonance_deviation_signed(&spec, 0.2).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((y - 2.0 * x).abs() <= 1e-15 * y.abs());
        }
        let row: Vec<f64> = (0..40).map(|i| a.value(i, 0)).collect();
        assert!(row[0] < 0.0 && row[39] > 0.0);
        let abs = sweep_resonance_deviation(&spec, 0.1).unwrap();
        assert!(abs.values.iter().zip(&a.values).all(|(x, y)| *x == y.abs()));
    }

    #[test]
    fn deviation_vanishes_on_curve() {
        for &t in &[0.5, 1.0, 2.0] {
            let om = bath::resonance_curve(t, 1.0).unwrap();
            let d = bath::resonance_deviation(&BathParams::new(0.1, om, t).unwrap(), 1.0).unwrap();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn overlay_contains_unit_temperature() {
        let o = resonance_overlay((0.2, 5.0)).unwrap();
        assert_eq!(o.len(), OVERLAY_SAMPLES);
        let (t, om) = o[80];
        assert!((t - 1.0).abs() < 1e-12);
        assert!((om - 6.7077).abs() < 1e-4);
    }

    #[test]
    fn argmax_skips_failed_cells() {
        let map = HeatmapGrid {
            spec: toy(),
            meta: HeatmapMeta { kind: MeasureKind::Blp, lambda: 0.1, omega0: 1.0, t_max: None, dt: None },
            values: vec![0.1, f64::NAN, 0.5, 0.2, 0.3, 0.0],
            failed_cells: Vec::new(),
        };
        assert_eq!(map.argmax(), Some((0.5, 2, 0)));
    }
}
