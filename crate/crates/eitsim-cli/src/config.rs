//! Configuration resolution: JSON config file plus flag overrides, with
//! flags winning. The `EITSIM_UNITS` environment variable supplies the
//! default unit system for parameter files that do not declare one.

use clap::{Parser, ValueEnum};
use eitsim::polariton::{CouplingSchedule, MemoryDocument, MemoryParams};
use eitsim::units::UnitSystem;
use serde::Deserialize;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Fidelity vs. ground-state decoherence rate, one curve per storage time.
    FidelityVsGamma,
    /// Fidelity vs. storage time, one curve per decoherence rate.
    FidelityVsTime,
    /// Fidelity of the retrieved Bell state over the efficiency plane.
    BellFidelitySurface,
    /// Minimum CH combination over the efficiency plane, with the violation
    /// boundary contour.
    ChSurface,
    /// Critical mean storage efficiency for CH violation.
    Threshold,
    /// Cross-route validation suites.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Reproduce grid data and validation reports for the EIT memory model.
#[derive(Debug, Parser)]
#[command(name = "eitsim", version, about)]
pub struct Cli {
    /// JSON sweep configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Which experiment to run.
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,

    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format (grids default to csv, scalar summaries to json).
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Seed for the randomized validation suites.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads for sweep evaluation.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// On-disk sweep configuration. Every field is optional; defaults
/// reproduce the published figures.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub experiment: Option<Experiment>,
    /// Path to a memory parameter/schedule document (see `MemoryDocument`).
    pub params_path: Option<PathBuf>,
    pub gamma21_range: Option<[f64; 2]>,
    pub gamma21_points: Option<usize>,
    pub storage_times: Option<Vec<f64>>,
    pub storage_time_range: Option<[f64; 2]>,
    pub storage_time_points: Option<usize>,
    pub gamma21_values: Option<Vec<f64>>,
    pub eta_points: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: Experiment,
    pub gamma21_range: [f64; 2],
    pub gamma21_points: usize,
    pub storage_times: Vec<f64>,
    pub storage_time_range: [f64; 2],
    pub storage_time_points: usize,
    pub gamma21_values: Vec<f64>,
    pub eta_points: usize,
    pub base: MemoryBase,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
    pub workers: usize,
}

/// Physical baseline for fidelity sweeps: everything except the swept
/// variable.
#[derive(Debug, Clone)]
pub struct MemoryBase {
    pub params: MemoryParams,
    pub omega_in: f64,
    pub t1: f64,
    pub retrieval_tail: f64,
}

impl MemoryBase {
    /// Strong-coupling resonant defaults in Gamma units.
    fn default_resonant() -> Self {
        MemoryBase {
            params: MemoryParams::new(0.0, 1.0, 0.0, 0.0, 1e4).expect("valid defaults"),
            omega_in: 1e3,
            t1: 0.2,
            retrieval_tail: 0.2,
        }
    }

    fn from_document(params: MemoryParams, schedule: &CouplingSchedule) -> Self {
        MemoryBase {
            params,
            omega_in: schedule.omega(0.0),
            t1: schedule.t1(),
            retrieval_tail: schedule.t_end() - schedule.t2(),
        }
    }

    /// Instantaneous-switching storage schedule with this baseline and the
    /// given storage time.
    pub fn schedule(&self, storage_time: f64) -> eitsim::Result<CouplingSchedule> {
        let t2 = self.t1 + storage_time;
        CouplingSchedule::storage_protocol(self.omega_in, self.t1, t2, t2 + self.retrieval_tail, 0.0)
    }

    pub fn with_gamma21(&self, gamma21: f64) -> eitsim::Result<MemoryParams> {
        MemoryParams::new(
            gamma21,
            self.params.gamma31,
            self.params.delta,
            self.params.delta_p,
            self.params.coupling_strength_sq,
        )
    }
}

fn read_to_string(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))
}

pub fn resolve(cli: &Cli) -> Result<Resolved, ConfigError> {
    let file: SweepFile = match &cli.config {
        Some(path) => serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| err(format!("invalid config {}: {e}", path.display())))?,
        None => SweepFile::default(),
    };

    let experiment = cli
        .experiment
        .or(file.experiment)
        .ok_or_else(|| err("no experiment selected (use --experiment or the config file)"))?;

    let default_units = std::env::var("EITSIM_UNITS")
        .ok()
        .map(|v| {
            UnitSystem::from_label(&v)
                .ok_or_else(|| err(format!("EITSIM_UNITS must be 'gamma' or 'si', got '{v}'")))
        })
        .transpose()?
        .unwrap_or_default();

    let base = match &file.params_path {
        Some(path) => {
            let doc = MemoryDocument::from_json(&read_to_string(path)?)
                .map_err(|e| err(format!("invalid parameter file {}: {e}", path.display())))?;
            let (params, schedule) = doc
                .resolve(default_units)
                .map_err(|e| err(format!("invalid parameters in {}: {e}", path.display())))?;
            MemoryBase::from_document(params, &schedule)
        }
        None => MemoryBase::default_resonant(),
    };

    let resolved = Resolved {
        experiment,
        gamma21_range: file.gamma21_range.unwrap_or([0.0, 1.0]),
        gamma21_points: file.gamma21_points.unwrap_or(100),
        storage_times: file.storage_times.unwrap_or_else(|| vec![1.0, 5.0, 10.0]),
        storage_time_range: file.storage_time_range.unwrap_or([0.0, 10.0]),
        storage_time_points: file.storage_time_points.unwrap_or(100),
        gamma21_values: file.gamma21_values.unwrap_or_else(|| vec![0.01, 0.05, 0.1]),
        eta_points: file.eta_points.unwrap_or(21),
        base,
        out: cli.out.clone().or(file.out),
        format: cli.format.or(file.format),
        seed: cli.seed.or(file.seed).unwrap_or(eitsim::validate::DEFAULT_SEED),
        workers: cli
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    };

    // Sweep sanity: ranges non-empty, point counts at least 2.
    match experiment {
        Experiment::FidelityVsGamma => {
            if resolved.gamma21_points < 2 {
                return Err(err("gamma21_points must be >= 2"));
            }
            if resolved.gamma21_range[1] <= resolved.gamma21_range[0] {
                return Err(err("gamma21_range must be non-empty"));
            }
            if resolved.storage_times.is_empty() {
                return Err(err("storage_times must be non-empty"));
            }
        }
        Experiment::FidelityVsTime => {
            if resolved.storage_time_points < 2 {
                return Err(err("storage_time_points must be >= 2"));
            }
            if resolved.storage_time_range[1] <= resolved.storage_time_range[0] {
                return Err(err("storage_time_range must be non-empty"));
            }
            if resolved.gamma21_values.is_empty() {
                return Err(err("gamma21_values must be non-empty"));
            }
        }
        Experiment::BellFidelitySurface | Experiment::ChSurface => {
            if resolved.eta_points < 2 {
                return Err(err("eta_points must be >= 2"));
            }
        }
        Experiment::Threshold | Experiment::Validate => {}
    }
    if resolved.workers == 0 {
        return Err(err("workers must be >= 1"));
    }
    Ok(resolved)
}
