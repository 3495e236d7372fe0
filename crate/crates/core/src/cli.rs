//! Command-line surface: argument parsing, layered configuration, and CSV/JSON
//! writers for every data product.
//!
//! Settings resolve as flag > `--config` JSON file > built-in default. All
//! computation runs with ω0 = 1; `--omega0` only rescales emitted columns.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bath::{self, BathParams};
use crate::energetics;
use crate::error::{Error, Result};
use crate::nonmarkov::{self, StatePair};
use crate::sweep::{self, FailedCell, GridSpec, HeatmapGrid, MeasureKind};
use crate::tcl2::{self, SystemParams, TimeGrid};

pub const GENERATED_BY: &str = concat!("backflow ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "backflow", version, about = "Energy backflow and BLP non-Markovianity in the spin-boson model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time series of ρ00, θ, ⟨Δq⟩ and coefficients for one parameter set.
    Trace {
        #[command(flatten)]
        common: CommonArgs,
        /// Add the canonical-pair trace distance column.
        #[arg(long)]
        blp: bool,
    },
    /// Energy-backflow heatmap over (Ω, T_E) with T_S = T_E.
    BackflowMap(MapArgs),
    /// BLP non-Markovianity heatmap over (Ω, T_E).
    BlpMap(MapArgs),
    /// |∂ωJ_eff| at ω0 over (Ω, T_E).
    ResonanceMap(MapArgs),
    /// Noise and dissipation kernels on the time grid.
    Kernels {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Cutoff frequency Ω.
    #[arg(long, allow_negative_numbers = true)]
    pub cutoff: Option<f64>,
    /// Bath temperature T_E.
    #[arg(long, allow_negative_numbers = true)]
    pub bath_temp: Option<f64>,
    /// Effective temperature T_S of the initial Gibbs state.
    #[arg(long, allow_negative_numbers = true)]
    pub sys_temp: Option<f64>,
    /// Output scale: physical value of ω0 in the caller's units.
    #[arg(long, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Output file; standard output when absent (trace and kernels only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Flat JSON object with any of the settings above (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for map sweeps.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Cells as N_omega x N_temp, e.g. 50x50.
    #[arg(long)]
    pub grid: Option<String>,
    /// Ω range as min:max.
    #[arg(long)]
    pub omega_range: Option<String>,
    /// T_E range as min:max.
    #[arg(long)]
    pub temp_range: Option<String>,
    /// Also write the resonance curve (T_E, Ω_res).
    #[arg(long)]
    pub resonance_overlay: bool,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lambda: Option<f64>,
    pub cutoff: Option<f64>,
    pub bath_temp: Option<f64>,
    pub sys_temp: Option<f64>,
    pub omega0: Option<f64>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub grid: Option<String>,
    pub omega_range: Option<String>,
    pub temp_range: Option<String>,
    pub resonance_overlay: Option<bool>,
    pub blp: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub lambda: f64,
    pub cutoff: f64,
    pub bath_temp: f64,
    pub sys_temp: f64,
    pub omega0: f64,
    pub grid: TimeGrid,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: Option<usize>,
    pub map: GridSpec,
    pub resonance_overlay: bool,
    pub blp: bool,
}

impl RunConfig {
    pub fn bath(&self) -> Result<BathParams> {
        BathParams::new(self.lambda, self.cutoff, self.bath_temp)
    }

    pub fn system(&self) -> Result<SystemParams> {
        SystemParams::new(1.0, self.sys_temp)
    }
}

fn layer<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Merges flags, config file and defaults, then validates the parameters the
/// subcommand will use.
pub fn resolve(command: &Command) -> Result<RunConfig> {
    let (common, map, blp_flag) = match command {
        Command::Trace { common, blp } => (common, None, *blp),
        Command::Kernels { common } => (common, None, false),
        Command::BackflowMap(m) | Command::BlpMap(m) | Command::ResonanceMap(m) => (&m.common, Some(m), false),
    };
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let defaults = GridSpec::default();

    let map_spec = {
        let grid = map.and_then(|m| m.grid.clone()).or(file.grid.clone());
        let (n_omega, n_temp) = grid.as_deref().map(parse_cells).transpose()?.unwrap_or((defaults.n_omega, defaults.n_temp));
        let omega_range = map.and_then(|m| m.omega_range.clone()).or(file.omega_range.clone());
        let temp_range = map.and_then(|m| m.temp_range.clone()).or(file.temp_range.clone());
        GridSpec {
            omega_range: omega_range.as_deref().map(parse_range).transpose()?.unwrap_or(defaults.omega_range),
            temp_range: temp_range.as_deref().map(parse_range).transpose()?.unwrap_or(defaults.temp_range),
            n_omega,
            n_temp,
        }
    };
    let overlay_flag = map.is_some_and(|m| m.resonance_overlay);

    let cfg = RunConfig {
        lambda: layer(common.lambda, file.lambda, 0.1),
        cutoff: layer(common.cutoff, file.cutoff, 0.4),
        bath_temp: layer(common.bath_temp, file.bath_temp, 1.0),
        sys_temp: layer(common.sys_temp, file.sys_temp, 5.0),
        omega0: layer(common.omega0, file.omega0, 1.0),
        grid: TimeGrid {
            t_max: layer(common.t_max, file.t_max, TimeGrid::default().t_max),
            dt: layer(common.dt, file.dt, TimeGrid::default().dt),
        },
        out: common.out.clone().or(file.out),
        format: layer(common.format, file.format, Format::Csv),
        jobs: common.jobs.or(file.jobs),
        map: map_spec,
        resonance_overlay: overlay_flag || file.resonance_overlay.unwrap_or(false),
        blp: blp_flag || file.blp.unwrap_or(false),
    };

    if !(cfg.omega0 > 0.0 && cfg.omega0.is_finite()) {
        return Err(Error::Domain(format!("--omega0 must be positive, got {}", cfg.omega0)));
    }
    if cfg.jobs == Some(0) {
        return Err(Error::Input("--jobs must be at least 1".into()));
    }
    match command {
        Command::Trace { .. } => {
            cfg.bath()?;
            cfg.system()?;
            cfg.grid.validate()?;
        }
        Command::Kernels { .. } => {
            cfg.bath()?;
            cfg.grid.validate()?;
        }
        Command::BackflowMap(_) | Command::BlpMap(_) | Command::ResonanceMap(_) => {
            if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
                return Err(Error::Domain(format!("λ must be non-negative, got {}", cfg.lambda)));
            }
            cfg.map.validate()?;
            if !matches!(command, Command::ResonanceMap(_)) {
                cfg.grid.validate()?;
            }
            if cfg.out.is_none() {
                return Err(Error::Input("map subcommands need --out".into()));
            }
        }
    }
    Ok(cfg)
}

/// Shortest representation that parses back to the same bits; plain decimal
/// for moderate magnitudes, exponent form otherwise.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn parse_cells(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Input(format!("grid must look like 50x50, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Input(format!("range must look like 0.2:5, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// Process exit code for an error: 2 for invalid input, 3 for numerical failure.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Precondition(_) | Error::Input(_) | Error::Io(_) => 2,
        Error::Pole(_) | Error::Convergence(_) | Error::Numerics(_) => 3,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(&cli.command)?;
    log::info!("resolved configuration: {cfg:?}");
    match &cli.command {
        Command::Trace { .. } => cmd_trace(&cfg),
        Command::Kernels { .. } => cmd_kernels(&cfg),
        Command::BackflowMap(_) => cmd_map(&cfg, MeasureKind::Backflow),
        Command::BlpMap(_) => cmd_map(&cfg, MeasureKind::Blp),
        Command::ResonanceMap(_) => cmd_map(&cfg, MeasureKind::ResonanceDeviation),
    }
}

/// Column table with per-column output scale factors.
struct Table {
    header: Vec<&'static str>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    fn new() -> Self {
        Self { header: Vec::new(), columns: Vec::new() }
    }

    fn push(&mut self, name: &'static str, values: Vec<f64>, scale: f64) {
        let values = if scale == 1.0 { values } else { values.into_iter().map(|v| v * scale).collect() };
        self.header.push(name);
        self.columns.push(values);
    }

    fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        let rows = self.columns.first().map_or(0, Vec::len);
        let mut line = String::new();
        for r in 0..rows {
            line.clear();
            for (i, col) in self.columns.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format_float(col[r]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        let n = self.columns.first().map_or(0, Vec::len);
        (0..n).map(|r| self.columns.iter().map(|c| c[r]).collect()).collect()
    }
}

#[derive(Serialize)]
struct SeriesJson<'a> {
    generated_by: &'static str,
    kind: &'static str,
    config: &'a RunConfig,
    header: &'a [&'static str],
    rows: Vec<Vec<f64>>,
}

fn emit_table(cfg: &RunConfig, kind: &'static str, table: &Table) -> Result<()> {
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => table.write_csv(&mut buf)?,
        Format::Json => {
            let doc = SeriesJson { generated_by: GENERATED_BY, kind, config: cfg, header: &table.header, rows: table.rows() };
            serde_json::to_writer_pretty(&mut buf, &doc).map_err(|e| Error::Io(e.to_string()))?;
            buf.push(b'\n');
        }
    }
    match &cfg.out {
        Some(path) => fs::write(path, buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

/// TCL2 and Born-Markov time series from the Gibbs state at `sys_temp`.
pub fn cmd_trace(cfg: &RunConfig) -> Result<()> {
    let (p, s) = (cfg.bath()?, cfg.system()?);
    let init = s.gibbs_state();
    let traj = tcl2::propagate(&p, &s, &init, &cfg.grid)?;
    let flow = energetics::energy_flow(&traj, &p, &s)?;
    let rho_markov = traj
        .times
        .iter()
        .map(|&t| tcl2::born_markov_population(t, &p, &s, init.p0))
        .collect::<Result<Vec<_>>>()?;

    let w = cfg.omega0;
    let mut table = Table::new();
    table.push("t", traj.times.clone(), 1.0 / w);
    table.push("rho00", traj.states.iter().map(|st| st.p0).collect(), 1.0);
    table.push("theta", flow.theta, w * w);
    table.push("theta_alt", flow.theta_alt, w * w);
    table.push("dq", flow.dq, w);
    table.push("f", flow.f_term, w * w);
    table.push("rho00_markov", rho_markov, 1.0);
    table.push("theta_markov", flow.markov_theta, w * w);
    table.push("a_zz", traj.coefficients.iter().map(|c| c.a_zz).collect(), w);
    table.push("b_z", traj.coefficients.iter().map(|c| c.b_z).collect(), w);
    if cfg.blp {
        let r = nonmarkov::blp_measure(&p, &s, &cfg.grid, &StatePair::canonical())?;
        log::info!("BLP measure {:.6e}", r.value);
        table.push("D_trace", r.distance_trace, 1.0);
    }
    emit_table(cfg, "trace", &table)
}

/// D1, D1/D1(0) and D2 on the time grid.
pub fn cmd_kernels(cfg: &RunConfig) -> Result<()> {
    let p = cfg.bath()?;
    let times = cfg.grid.times();
    let d1 = times.iter().map(|&t| bath::noise_kernel(t, &p)).collect::<Result<Vec<_>>>()?;
    let d2: Vec<f64> = times.iter().map(|&t| bath::dissipation_kernel(t, &p)).collect();
    let norm = d1[0];
    let d1n = d1.iter().map(|v| if norm == 0.0 { 0.0 } else { v / norm }).collect();

    let w = cfg.omega0;
    let mut table = Table::new();
    table.push("t", times, 1.0 / w);
    table.push("D1", d1, w * w);
    table.push("D1_normalized", d1n, 1.0);
    table.push("D2", d2, w * w);
    emit_table(cfg, "kernels", &table)
}

/// Sidecar metadata of a heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub generated_by: String,
    pub kind: MeasureKind,
    pub lambda: f64,
    pub omega0: f64,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub grid: GridSpec,
    pub failed_cells: Vec<FailedCell>,
}

#[derive(Serialize)]
struct MapJson<'a> {
    #[serde(flatten)]
    meta: &'a MapMeta,
    /// Rows of (omega_c, T_E, value).
    cells: Vec<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resonance_overlay: Option<Vec<[f64; 2]>>,
}

/// Scale of a measure under a change of ω0 units.
fn measure_scale(kind: MeasureKind, w: f64) -> f64 {
    match kind {
        MeasureKind::Backflow => w,
        MeasureKind::Blp | MeasureKind::ResonanceDeviation | MeasureKind::ResonanceDeviationSigned => 1.0,
    }
}

pub fn cmd_map(cfg: &RunConfig, kind: MeasureKind) -> Result<()> {
    let heat = match kind {
        MeasureKind::Backflow => sweep::sweep_backflow(&cfg.map, cfg.lambda, &cfg.grid, cfg.jobs)?,
        MeasureKind::Blp => sweep::sweep_blp(&cfg.map, cfg.lambda, &cfg.grid, cfg.jobs)?,
        MeasureKind::ResonanceDeviation => sweep::sweep_resonance_deviation(&cfg.map, cfg.lambda)?,
        MeasureKind::ResonanceDeviationSigned => sweep::sweep_resonance_deviation_signed(&cfg.map, cfg.lambda)?,
    };
    if !heat.failed_cells.is_empty() {
        log::warn!("{} of {} cells failed", heat.failed_cells.len(), heat.spec.cells());
    }
    let overlay = if cfg.resonance_overlay { Some(sweep::resonance_overlay(cfg.map.temp_range)?) } else { None };
    let out = cfg.out.as_deref().ok_or_else(|| Error::Input("map subcommands need --out".into()))?;
    write_map(out, cfg.format, cfg.omega0, &heat, overlay.as_deref())
}

fn map_meta(heat: &HeatmapGrid, w: f64) -> MapMeta {
    let mut grid = heat.spec;
    grid.omega_range = (grid.omega_range.0 * w, grid.omega_range.1 * w);
    grid.temp_range = (grid.temp_range.0 * w, grid.temp_range.1 * w);
    MapMeta {
        generated_by: GENERATED_BY.to_string(),
        kind: heat.meta.kind,
        lambda: heat.meta.lambda,
        omega0: w,
        t_max: heat.meta.t_max.map(|t| t / w),
        dt: heat.meta.dt.map(|t| t / w),
        grid,
        failed_cells: heat.failed_cells.clone(),
    }
}

/// Writes the heatmap to `out`. CSV output gets a JSON sidecar next to it
/// (same stem, `.json`) and, with an overlay, a `<stem>_overlay.csv`.
pub fn write_map(
    out: &Path,
    format: Format,
    w: f64,
    heat: &HeatmapGrid,
    overlay: Option<&[(f64, f64)]>,
) -> Result<()> {
    let scale = measure_scale(heat.meta.kind, w);
    let cells: Vec<[f64; 3]> = (0..heat.spec.cells())
        .map(|idx| {
            let (om, te) = heat.spec.cell(idx);
            [om * w, te * w, heat.values[idx] * scale]
        })
        .collect();
    let overlay: Option<Vec<[f64; 2]>> = overlay.map(|o| o.iter().map(|&(t, om)| [t * w, om * w]).collect());
    let meta = map_meta(heat, w);

    match format {
        Format::Csv => {
            let mut buf = String::from("omega_c,T_E,value\n");
            for [om, te, v] in &cells {
                buf.push_str(&format!("{},{},{}\n", format_float(*om), format_float(*te), format_float(*v)));
            }
            fs::write(out, buf)?;
            let sidecar = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
            fs::write(sidecar_path(out), sidecar + "\n")?;
            if let Some(o) = overlay {
                let mut buf = String::from("T_E,omega_res\n");
                for [t, om] in o {
                    buf.push_str(&format!("{},{}\n", format_float(t), format_float(om)));
                }
                fs::write(overlay_path(out), buf)?;
            }
        }
        Format::Json => {
            let doc = MapJson { meta: &meta, cells, resonance_overlay: overlay };
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
            fs::write(out, text + "\n")?;
        }
    }
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub fn overlay_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_overlay.csv"))
}
