//! Preset runs: simulation, tables and the run manifest.

use crate::constants::{from_db, to_db};
use crate::error::{Error, Result};
use crate::metrology::{
    allan_deviation, contrast_from_variance, lo_stability, octave_factors, sql_stability,
    subtract_quadrature, xi_squared, AllanSeries,
};
use crate::sequence::{
    run_self_comparison, survival_sequence, ClockConfig, PhaseSchedule, Preset, PulseSequence,
    Settings, Simulator, StatePrep,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// Version of the manifest and table layout.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Anything `run_preset` can produce: a simulated preset or the analytic
/// stability table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum Report {
    Preset(Preset),
    SqlTable,
}

impl Report {
    pub fn all() -> Vec<Report> {
        let mut v: Vec<Report> = Preset::ALL.into_iter().map(Report::Preset).collect();
        v.push(Report::SqlTable);
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            Report::Preset(p) => p.name(),
            Report::SqlTable => "sql_table",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Report::Preset(p) => p.description(),
            Report::SqlTable => "quantum-noise-limited stability for the measured configurations",
        }
    }

    /// Default settings; the stability table uses the clock defaults.
    pub fn settings(self) -> Settings {
        match self {
            Report::Preset(p) => p.settings(),
            Report::SqlTable => Preset::ClockR1.settings(),
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Report {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "sql_table" {
            return Ok(Report::SqlTable);
        }
        s.parse().map(Report::Preset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format \"{other}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Trials per measurement point, or cycles for clock presets.
    pub trials: usize,
    pub format: OutputFormat,
    pub out_dir: PathBuf,
}

/// Record of one run, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub preset: String,
    /// Settings with every calibrated quantity filled in.
    pub settings: Settings,
    /// Configuration simulated (absent for the analytic table).
    pub resolved: Option<ClockConfig>,
    pub seed: u64,
    pub trials: usize,
    pub format: OutputFormat,
    pub outputs: Vec<String>,
    pub runtime_s: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: RunManifest = serde_json::from_str(&text)?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "manifest schema version {} is not supported (expected {SCHEMA_VERSION})",
                manifest.schema_version
            )));
        }
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyRow {
    pub angle_rad: f64,
    pub xi2_db: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub tau_s: f64,
    pub xi2: f64,
    pub xi_w2: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllanRow {
    pub tau_s: f64,
    pub adev: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqlRow {
    pub label: String,
    pub tau_r_s: f64,
    pub t_cycle_s: f64,
    pub n_atoms: usize,
    pub xi_w2: f64,
    /// Fractional stability at 1 s of averaging.
    pub sigma: f64,
}

/// Settings with the calibrated shear and depolarization of `cfg` filled in,
/// so that re-resolving them reproduces `cfg` without recalibration.
pub fn materialize(settings: &Settings, cfg: &ClockConfig) -> Settings {
    let mut s = settings.clone();
    match cfg.state_prep {
        StatePrep::Css { depolarization } => s.prep_depolarization = Some(depolarization),
        StatePrep::Sss {
            shear,
            depolarization,
            ..
        } => {
            s.shear = Some(shear);
            s.prep_depolarization = Some(depolarization);
        }
    }
    s
}

/// Tomography angles: quadratic spacing around the noise minimum, reaching ±π/2.
fn tomography_angles(center: f64) -> Vec<f64> {
    (-12i32..=12)
        .map(|i| center + (i.signum() as f64) * FRAC_PI_2 * (i as f64 / 12.0).powi(2))
        .collect()
}

pub fn tomography_table(
    cfg: &ClockConfig,
    seq: &PulseSequence,
    trials: usize,
) -> Result<Vec<TomographyRow>> {
    let (center, _) = Simulator::new(cfg, seq)?
        .prepared_state()
        .tomography_minimum()?;
    tomography_angles(center.sin().atan2(center.cos()))
        .into_iter()
        .map(|angle| {
            let set = Simulator::new(cfg, &seq.with_tomography_angle(angle))?
                .batch(trials, PhaseSchedule::Sampled)?;
            let xi = xi_squared(&set.sz_detected(), cfg.n_atoms)?;
            Ok(TomographyRow {
                angle_rad: angle,
                xi2_db: to_db(xi.value),
                ci_lo: to_db(xi.ci_lo),
                ci_hi: to_db(xi.ci_hi),
            })
        })
        .collect()
}

/// Dark times of the survival scans besides the preset's own Ramsey time, s.
pub const SURVIVAL_DARK_TIMES: [f64; 7] = [0.01, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Spin noise along `Sz` and Ramsey contrast after a dark time `tau`, with
/// the preparation of `cfg` unchanged.
pub fn survival_point(cfg: &ClockConfig, tau: f64, trials: usize) -> Result<SurvivalRow> {
    let mut c = cfg.clone();
    c.tau_r = tau;
    c.t_cycle = c.t_cycle.max(tau);
    let seq = survival_sequence(&c)?;
    let noise = Simulator::new(&c, &seq)?.batch(trials, PhaseSchedule::Sampled)?;
    let xi2 = xi_squared(&noise.sz_detected(), c.n_atoms)?.value;
    let fringe = Simulator::new(&c, &seq.with_ramsey_readout())?
        .batch(trials, PhaseSchedule::UniformRandom)?;
    let contrast = contrast_from_variance(&fringe.sz_detected(), c.n_atoms, c.noise.sigma_d2)?;
    Ok(SurvivalRow {
        tau_s: tau,
        xi2,
        xi_w2: xi2 / (contrast * contrast),
        contrast,
    })
}

pub fn survival_table(cfg: &ClockConfig, trials: usize) -> Result<Vec<SurvivalRow>> {
    std::iter::once(cfg.tau_r)
        .chain(SURVIVAL_DARK_TIMES)
        .map(|tau| survival_point(cfg, tau, trials))
        .collect()
}

fn allan_rows(a: &AllanSeries, label: &str) -> Vec<AllanRow> {
    (0..a.len())
        .map(|i| AllanRow {
            tau_s: a.taus[i],
            adev: a.adev[i],
            ci_lo: a.ci_lo[i],
            ci_hi: a.ci_hi[i],
            label: label.to_string(),
        })
        .collect()
}

fn model_rows(taus: &[f64], label: &str, at_1s: f64) -> Vec<AllanRow> {
    taus.iter()
        .map(|&t| {
            let v = at_1s / t.sqrt();
            AllanRow {
                tau_s: t,
                adev: v,
                ci_lo: v,
                ci_hi: v,
                label: label.to_string(),
            }
        })
        .collect()
}

/// LO-noise reference clock paired with a clock preset: the long Ramsey time
/// sequence, sharing atom number, timing, noise and seed with `settings`.
pub fn reference_clock(settings: &Settings) -> Result<(ClockConfig, PulseSequence)> {
    let defaults = Preset::ClockR2.settings();
    let s = Settings {
        tau_r: defaults.tau_r,
        state: defaults.state,
        shear: None,
        prep_depolarization: None,
        squeeze_axis: defaults.squeeze_axis,
        target_contrast: defaults.target_contrast,
        ..settings.clone()
    };
    Preset::ClockR2.build(&s)
}

/// Allan deviations of a clock preset: the open-loop clock itself, the LO
/// reference, the clock with the reference removed in quadrature, and the
/// analytic projection-noise and LO lines.
pub fn clock_table(
    preset: Preset,
    settings: &Settings,
    cfg: &ClockConfig,
    seq: &PulseSequence,
    cycles: usize,
) -> Result<Vec<AllanRow>> {
    let factors = octave_factors(cycles);
    let mut rows = Vec::new();
    let (series, reference) = if preset == Preset::ClockR2 {
        let (a, _) = run_self_comparison(cfg, seq, cfg, seq, cycles)?;
        (a, None)
    } else {
        let (rcfg, rseq) = reference_clock(settings)?;
        let (a, r) = run_self_comparison(cfg, seq, &rcfg, &rseq, cycles)?;
        (a, Some(r))
    };
    let total = allan_deviation(&series, &factors)?;
    rows.extend(allan_rows(&total, preset.name()));
    if let Some(r) = reference {
        let lo = allan_deviation(&r, &factors)?;
        rows.extend(allan_rows(&lo, Preset::ClockR2.name()));
        let atomic = subtract_quadrature(&total, &lo, 1.0)?;
        rows.extend(allan_rows(&atomic, &format!("{}_minus_lo", preset.name())));
    }
    let sql = sql_stability(cfg.omega0, cfg.tau_r, cfg.t_cycle, cfg.n_atoms, 1.0, 1.0)?;
    rows.extend(model_rows(&total.taus, "sql", sql));
    let lo = lo_stability(cfg.noise.delta_omega, cfg.omega0, cfg.t_cycle);
    rows.extend(model_rows(&total.taus, "lo_model", lo));
    Ok(rows)
}

/// Analytic stabilities: projection-noise limit, the coherent and squeezed
/// clocks at their nominal Wineland parameters, and a larger-ensemble,
/// long-interrogation projection.
pub fn sql_table(settings: &Settings) -> Result<Vec<SqlRow>> {
    let sigma_d2 = settings.noise.sigma_d2;
    let css_c = Preset::ClockC1.settings().target_contrast.unwrap_or(1.0);
    let sss_c = settings.target_contrast.unwrap_or(1.0);
    let rows = [
        (
            "sql",
            settings.tau_r,
            settings.t_cycle,
            settings.n_atoms,
            1.0,
        ),
        (
            "css_c1",
            settings.tau_r,
            settings.t_cycle,
            settings.n_atoms,
            (1.0 + sigma_d2) / css_c.powi(2),
        ),
        (
            "sss_r1",
            settings.tau_r,
            settings.t_cycle,
            settings.n_atoms,
            (from_db(settings.target_xi2_db) + sigma_d2) / sss_c.powi(2),
        ),
        ("what_if", 0.3, 0.6, 1000, from_db(-13.0)),
    ];
    rows.into_iter()
        .map(|(label, tau_r, t_cycle, n, xi_w2)| {
            Ok(SqlRow {
                label: label.to_string(),
                tau_r_s: tau_r,
                t_cycle_s: t_cycle,
                n_atoms: n,
                xi_w2,
                sigma: sql_stability(settings.omega0, tau_r, t_cycle, n, xi_w2, 1.0)?,
            })
        })
        .collect()
}

fn write_table<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: OutputFormat,
    rows: &[T],
) -> Result<String> {
    let name = format!("{stem}.{}", format.extension());
    let path = dir.join(&name);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
            for row in rows {
                w.serialize(row).map_err(csv_error)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(rows)?;
            text.push('\n');
            std::fs::write(&path, text)?;
        }
    }
    Ok(name)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv output: {other:?}")),
    }
}

/// Runs a report with fully specified `settings` and writes its tables and
/// `manifest.json` into `opts.out_dir`.
pub fn run_preset(report: Report, settings: &Settings, opts: &RunOptions) -> Result<RunManifest> {
    let start = Instant::now();
    if opts.trials < 2 {
        return Err(crate::error::invalid("trials", "must be at least 2"));
    }
    std::fs::create_dir_all(&opts.out_dir)?;
    let dir = opts.out_dir.as_path();
    let mut outputs = Vec::new();
    let (settings, resolved) = match report {
        Report::SqlTable => {
            outputs.push(write_table(
                dir,
                "sql_table",
                opts.format,
                &sql_table(settings)?,
            )?);
            (settings.clone(), None)
        }
        Report::Preset(preset) => {
            let (cfg, seq) = preset.build(settings)?;
            match preset {
                Preset::Tomography => {
                    let rows = tomography_table(&cfg, &seq, opts.trials)?;
                    outputs.push(write_table(dir, "tomography", opts.format, &rows)?);
                }
                Preset::SurvivalCss | Preset::SurvivalSssZ => {
                    let rows = survival_table(&cfg, opts.trials)?;
                    outputs.push(write_table(dir, "survival", opts.format, &rows)?);
                }
                Preset::ClockC1 | Preset::ClockR1 | Preset::ClockR2 => {
                    let rows = clock_table(preset, settings, &cfg, &seq, opts.trials)?;
                    outputs.push(write_table(dir, "allan", opts.format, &rows)?);
                }
            }
            (materialize(settings, &cfg), Some(cfg))
        }
    };
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        preset: report.name().to_string(),
        seed: settings.seed,
        settings,
        resolved,
        trials: opts.trials,
        format: opts.format,
        outputs,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}
