//! Simulation studies: convergence curves, timing, iterations versus
//! dimension, and the unequal-size / weighted extension.
//!
//! Every runner takes an [`ExperimentSpec`] and an output directory and
//! returns an in-memory report alongside the CSV files it writes.
//! Replication `r` draws its data from `RngState::new(base_seed + r)`:
//! first the source rows, then the target rows, then the source weights
//! (random scheme only), then one `u64` used as the engine seed.

mod config;
mod convergence;
mod extension;
mod kvd;
mod plot;
mod stats;
mod timing;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::engine::{EngineConfig, Strategy};
use crate::error::{Error, Result};
use crate::oracle::closed_form_w2;
use crate::par::Execution;
use crate::rng::RngState;
use crate::sample::{gaussian_points, GaussianSpec, Sample};

pub use config::{parse_execution, Settings, KEYS};
pub use convergence::{
    run_convergence_experiment, summarize_traces, CellSummary, ConvergenceReport, SummaryRow,
    CELLS_HEADER, REACH_REL_TOL, SUMMARY_HEADER,
};
pub use extension::{run_extension_experiment, ExtensionCell, ExtensionReport};
pub use kvd::{run_k_vs_d_experiment, KvdReport, KvdRow};
pub use plot::{plot_summary, render_svg, Series};
pub use stats::{least_squares, mean_sd, LinearFit};
pub use timing::{run_timing_experiment, TimingReport, TimingRow};

/// Which runner a spec is meant for. Only affects the preset defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Convergence,
    Timing,
    KVersusD,
    Extension,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "simulate",
            ExperimentKind::Timing => "timing",
            ExperimentKind::KVersusD => "kvd",
            ExperimentKind::Extension => "extension",
        }
    }
}

/// How observation weights are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScheme {
    #[default]
    Uniform,
    /// Independent `U(0, 1]` weights on both samples, then normalized.
    Random,
}

impl WeightScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(WeightScheme::Uniform),
            "random" => Ok(WeightScheme::Random),
            other => Err(Error::InvalidParameter(format!(
                "unknown weight scheme {other:?} (expected uniform or random)"
            ))),
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two Gaussians with constant means and AR(1) covariances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPair {
    pub mean_x: f64,
    pub mean_y: f64,
    pub rho_x: f64,
    pub rho_y: f64,
}

impl Default for GaussianPair {
    fn default() -> Self {
        Self {
            mean_x: -2.0,
            mean_y: 2.0,
            rho_x: 0.8,
            rho_y: 0.5,
        }
    }
}

impl GaussianPair {
    pub fn specs(&self, d: usize) -> Result<(GaussianSpec, GaussianSpec)> {
        Ok((
            GaussianSpec::ar1(d, self.mean_x, self.rho_x)?,
            GaussianSpec::ar1(d, self.mean_y, self.rho_y)?,
        ))
    }

    /// Population W₂ between the two Gaussians.
    pub fn ground_truth(&self, d: usize) -> Result<f64> {
        let (a, b) = self.specs(d)?;
        closed_form_w2(&a, &b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub dims: Vec<usize>,
    pub pair: GaussianPair,
    pub n_x: usize,
    pub n_y: usize,
    pub weights: WeightScheme,
    pub methods: Vec<Strategy>,
    pub replications: usize,
    pub base_seed: u64,
    /// `seed` is ignored; each cell derives its own.
    pub engine: EngineConfig,
    pub execution: Execution,
}

impl ExperimentSpec {
    /// Desk-scale defaults for each experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let engine = EngineConfig {
            record_timing: false,
            ..EngineConfig::default()
        };
        let base = Self {
            name: kind.as_str().to_owned(),
            dims: vec![10],
            pair: GaussianPair::default(),
            n_x: 2000,
            n_y: 2000,
            weights: WeightScheme::Uniform,
            methods: vec![Strategy::ppmm()],
            replications: 10,
            base_seed: 0,
            engine,
            execution: Execution::Parallel,
        };
        match kind {
            ExperimentKind::Convergence => base,
            ExperimentKind::Timing => Self {
                methods: vec![Strategy::ppmm(), Strategy::random(), Strategy::sliced(10)],
                engine: EngineConfig {
                    record_timing: true,
                    ..engine
                },
                execution: Execution::Sequential,
                ..base
            },
            ExperimentKind::KVersusD => Self {
                dims: vec![5, 10, 15, 20, 25, 30],
                ..base
            },
            ExperimentKind::Extension => Self {
                dims: vec![5],
                n_x: 60,
                n_y: 20,
                weights: WeightScheme::Random,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one dimension is required".into(),
            ));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be >= 1, got {d}"
            )));
        }
        if self.n_x < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_x must be >= 2, got {}",
                self.n_x
            )));
        }
        if self.n_y < 1 {
            return Err(Error::InvalidParameter("n_y must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one method is required".into(),
            ));
        }
        for m in &self.methods {
            m.validate()?;
        }
        for &d in &self.dims {
            self.pair.specs(d)?;
        }
        self.engine.validate()
    }

    /// Source sample, target sample and engine seed of replication `rep`
    /// at dimension `d`.
    pub fn generate(&self, d: usize, rep: usize) -> Result<(Sample, Sample, u64)> {
        let (a, b) = self.pair.specs(d)?;
        let mut rng = RngState::new(self.base_seed.wrapping_add(rep as u64));
        let px = gaussian_points(&a, self.n_x, &mut rng)?;
        let py = gaussian_points(&b, self.n_y, &mut rng)?;
        let (x, y) = match self.weights {
            WeightScheme::Uniform => (Sample::new(px)?, Sample::new(py)?),
            WeightScheme::Random => {
                let wx = random_weights(self.n_x, &mut rng);
                let wy = random_weights(self.n_y, &mut rng);
                (Sample::with_weights(px, wx)?, Sample::with_weights(py, wy)?)
            }
        };
        Ok((x, y, rng.next_u64()))
    }

    /// Engine configuration for one cell.
    pub fn engine_for(&self, seed: u64) -> EngineConfig {
        EngineConfig {
            seed,
            ..self.engine
        }
    }
}

fn random_weights(n: usize, rng: &mut RngState) -> DVector<f64> {
    DVector::from_fn(n, |_, _| 1.0 - rng.uniform())
}

/// `traces/{method}_d{d}_rep{rep:03}.csv`
pub fn trace_path(out: &Path, method: &Strategy, d: usize, rep: usize) -> PathBuf {
    out.join("traces")
        .join(format!("{method}_d{d}_rep{rep:03}.csv"))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Write through a temporary sibling and rename into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Render rows with the csv writer into memory.
pub(crate) fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.to_string()))
}

pub(crate) fn failure_tag(err: &Error) -> String {
    format!("failed:{}", err.kind())
}
