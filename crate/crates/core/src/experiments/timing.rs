use std::path::Path;
use std::time::Instant;

use super::{csv_bytes, ensure_dir, failure_tag, write_atomic, ExperimentSpec};
use crate::engine::{fit, Strategy};
use crate::error::Result;
use crate::experiments::stats::mean_sd;

pub const TIMING_HEADER: [&str; 10] = [
    "method",
    "d",
    "per_iteration_ms_mean",
    "per_iteration_ms_sd",
    "total_ms_mean",
    "total_ms_sd",
    "iterations_mean",
    "iterations_sd",
    "replications",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: Strategy,
    pub d: usize,
    /// Wall time of each successful run divided by its iteration count.
    pub per_iteration_ms: Vec<f64>,
    /// Wall time of each successful `fit` call, i.e. time to converge.
    pub total_ms: Vec<f64>,
    pub iterations: Vec<usize>,
    pub failures: Vec<String>,
}

impl TimingRow {
    pub fn per_iteration_mean(&self) -> f64 {
        mean_sd(&self.per_iteration_ms).0
    }

    pub fn total_mean(&self) -> f64 {
        mean_sd(&self.total_ms).0
    }

    fn row(&self) -> Vec<String> {
        let (pm, ps) = mean_sd(&self.per_iteration_ms);
        let (tm, ts) = mean_sd(&self.total_ms);
        let its: Vec<f64> = self.iterations.iter().map(|&k| k as f64).collect();
        let (im, is) = mean_sd(&its);
        let status = if self.failures.is_empty() {
            "ok".to_owned()
        } else {
            self.failures.join(";")
        };
        vec![
            self.method.to_string(),
            self.d.to_string(),
            pm.to_string(),
            ps.to_string(),
            tm.to_string(),
            ts.to_string(),
            im.to_string(),
            is.to_string(),
            self.total_ms.len().to_string(),
            status,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn row(&self, method: &Strategy, d: usize) -> Option<&TimingRow> {
        self.rows.iter().find(|r| &r.method == method && r.d == d)
    }
}

/// Time every (method, d) over the replications and write `timing.csv`.
/// Cells always run one after another so they do not compete for cores;
/// the spec's execution mode is ignored.
pub fn run_timing_experiment(spec: &ExperimentSpec, out: &Path) -> Result<TimingReport> {
    spec.validate()?;
    ensure_dir(out)?;
    let mut rows = Vec::new();
    for &d in &spec.dims {
        let data = (0..spec.replications)
            .map(|rep| spec.generate(d, rep))
            .collect::<Result<Vec<_>>>()?;
        for method in &spec.methods {
            let mut row = TimingRow {
                method: *method,
                d,
                per_iteration_ms: Vec::new(),
                total_ms: Vec::new(),
                iterations: Vec::new(),
                failures: Vec::new(),
            };
            for (rep, (x, y, seed)) in data.iter().enumerate() {
                let config = spec.engine_for(*seed);
                let started = Instant::now();
                match fit(x, y, *method, &config) {
                    Ok(outcome) => {
                        let ms = started.elapsed().as_secs_f64() * 1e3;
                        let k = outcome.trace.iterations().max(1);
                        row.per_iteration_ms.push(ms / k as f64);
                        row.total_ms.push(ms);
                        row.iterations.push(outcome.trace.iterations());
                    }
                    Err(e) => row
                        .failures
                        .push(format!("{}:rep{rep:03}", failure_tag(&e))),
                }
            }
            rows.push(row);
        }
    }
    let table: Vec<Vec<String>> = rows.iter().map(TimingRow::row).collect();
    write_atomic(&out.join("timing.csv"), &csv_bytes(&TIMING_HEADER, &table)?)?;
    Ok(TimingReport { rows })
}
