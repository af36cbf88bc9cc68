use std::collections::BTreeMap;
use std::path::Path;

use super::{csv_bytes, ensure_dir, failure_tag, trace_path, write_atomic, ExperimentSpec};
use crate::engine::{fit, write_trace_csv, ConvergenceTrace, Strategy, Termination, TraceRecord};
use crate::error::Result;
use crate::experiments::stats::mean_sd;
use crate::par::map_cells;

pub const SUMMARY_HEADER: [&str; 8] = [
    "method",
    "d",
    "iteration",
    "mean_w_hat",
    "sd_w_hat",
    "replications",
    "ground_truth",
    "status",
];

pub const CELLS_HEADER: [&str; 9] = [
    "method",
    "d",
    "rep",
    "iterations",
    "termination",
    "final_w_hat",
    "reach_iteration",
    "ground_truth",
    "status",
];

/// A run has "reached" the truth once `|Ŵ - W| / W` drops to this level.
pub const REACH_REL_TOL: f64 = 0.1;

/// One (method, dimension, replication) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub method: Strategy,
    pub d: usize,
    pub rep: usize,
    pub records: Vec<TraceRecord>,
    pub termination: Option<Termination>,
    pub ground_truth: f64,
    /// `ok` or `failed:<error kind>`.
    pub status: String,
}

impl CellSummary {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_w_hat(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.w_hat_displacement)
    }

    pub fn relative_error(&self) -> f64 {
        (self.final_w_hat() - self.ground_truth).abs() / self.ground_truth
    }

    /// First iteration whose estimate is within [`REACH_REL_TOL`] of the
    /// ground truth.
    pub fn reach_iteration(&self) -> Option<usize> {
        self.records
            .iter()
            .find(|r| {
                (r.w_hat_displacement - self.ground_truth).abs()
                    <= REACH_REL_TOL * self.ground_truth
            })
            .map(|r| r.iteration)
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.method.to_string(),
            self.d.to_string(),
            self.rep.to_string(),
            self.iterations().to_string(),
            self.termination.map_or("", |t| t.as_str()).to_owned(),
            self.final_w_hat().to_string(),
            self.reach_iteration()
                .map_or(String::new(), |k| k.to_string()),
            self.ground_truth.to_string(),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub d: usize,
    pub iteration: usize,
    pub mean_w_hat: f64,
    pub sd_w_hat: f64,
    pub replications: usize,
    pub ground_truth: f64,
    pub status: String,
}

impl SummaryRow {
    pub(crate) fn row(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.d.to_string(),
            self.iteration.to_string(),
            self.mean_w_hat.to_string(),
            self.sd_w_hat.to_string(),
            self.replications.to_string(),
            self.ground_truth.to_string(),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub cells: Vec<CellSummary>,
    pub summary: Vec<SummaryRow>,
}

impl ConvergenceReport {
    pub fn cells_for<'a>(
        &'a self,
        method: &'a Strategy,
        d: usize,
    ) -> impl Iterator<Item = &'a CellSummary> + 'a {
        self.cells
            .iter()
            .filter(move |c| &c.method == method && c.d == d)
    }
}

/// Per-iteration mean and standard deviation across replications. Traces
/// that stopped early contribute their last value to later iterations; an
/// empty trace counts as zero displacement.
pub fn summarize_traces(
    method: &str,
    d: usize,
    ground_truth: f64,
    traces: &[Vec<f64>],
) -> Vec<SummaryRow> {
    let longest = traces.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .map(|k| {
            let values: Vec<f64> = traces
                .iter()
                .map(|t| t.get(k).or(t.last()).copied().unwrap_or(0.0))
                .collect();
            let (mean, sd) = mean_sd(&values);
            SummaryRow {
                method: method.to_owned(),
                d,
                iteration: k + 1,
                mean_w_hat: mean,
                sd_w_hat: sd,
                replications: traces.len(),
                ground_truth,
                status: "ok".into(),
            }
        })
        .collect()
}

/// Run every (method, d, replication) cell, write one trace per cell plus
/// `summary.csv` and `cells.csv` into `out`.
pub fn run_convergence_experiment(spec: &ExperimentSpec, out: &Path) -> Result<ConvergenceReport> {
    spec.validate()?;
    ensure_dir(out)?;
    let truths: BTreeMap<usize, f64> = spec
        .dims
        .iter()
        .map(|&d| spec.pair.ground_truth(d).map(|t| (d, t)))
        .collect::<Result<_>>()?;

    let mut grid = Vec::new();
    for method in &spec.methods {
        for &d in &spec.dims {
            for rep in 0..spec.replications {
                grid.push((*method, d, rep));
            }
        }
    }
    let cells = map_cells(spec.execution, &grid, |&(method, d, rep)| {
        run_cell(spec, out, method, d, rep, truths[&d])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut summary = Vec::new();
    for method in &spec.methods {
        for &d in &spec.dims {
            let group: Vec<&CellSummary> = cells
                .iter()
                .filter(|c| &c.method == method && c.d == d)
                .collect();
            let traces: Vec<Vec<f64>> = group
                .iter()
                .filter(|c| c.ok())
                .map(|c| c.records.iter().map(|r| r.w_hat_displacement).collect())
                .collect();
            summary.extend(summarize_traces(
                &method.to_string(),
                d,
                truths[&d],
                &traces,
            ));
            for c in group.iter().filter(|c| !c.ok()) {
                summary.push(SummaryRow {
                    method: method.to_string(),
                    d,
                    iteration: 0,
                    mean_w_hat: f64::NAN,
                    sd_w_hat: f64::NAN,
                    replications: 0,
                    ground_truth: truths[&d],
                    status: format!("{}:rep{:03}", c.status, c.rep),
                });
            }
        }
    }

    let rows: Vec<Vec<String>> = summary.iter().map(SummaryRow::row).collect();
    write_atomic(
        &out.join("summary.csv"),
        &csv_bytes(&SUMMARY_HEADER, &rows)?,
    )?;
    let rows: Vec<Vec<String>> = cells.iter().map(CellSummary::row).collect();
    write_atomic(&out.join("cells.csv"), &csv_bytes(&CELLS_HEADER, &rows)?)?;
    Ok(ConvergenceReport { cells, summary })
}

fn run_cell(
    spec: &ExperimentSpec,
    out: &Path,
    method: Strategy,
    d: usize,
    rep: usize,
    ground_truth: f64,
) -> Result<CellSummary> {
    let outcome = spec
        .generate(d, rep)
        .and_then(|(x, y, seed)| fit(&x, &y, method, &spec.engine_for(seed)));
    let (trace, status) = match outcome {
        Ok(o) => (o.trace, "ok".to_owned()),
        Err(e) => (
            ConvergenceTrace {
                records: Vec::new(),
                termination: Termination::MaxIterations,
            },
            failure_tag(&e),
        ),
    };
    let ok = status == "ok";
    if ok {
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).expect("in-memory write");
        write_atomic(&trace_path(out, &method, d, rep), &buf)?;
    }
    Ok(CellSummary {
        method,
        d,
        rep,
        termination: ok.then_some(trace.termination),
        records: trace.records,
        ground_truth,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::read_trace_csv;
    use crate::experiments::ExperimentKind;

    fn small() -> ExperimentSpec {
        let mut s = ExperimentSpec::preset(ExperimentKind::Convergence);
        s.dims = vec![3];
        s.n_x = 200;
        s.n_y = 200;
        s.replications = 3;
        s.engine.max_iterations = 30;
        s
    }

    #[test]
    fn carry_forward() {
        let rows = summarize_traces("m", 2, 1.0, &[vec![3.0, 2.0, 1.0], vec![5.0]]);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].mean_w_hat, 4.0);
        assert_eq!(rows[2].mean_w_hat, 3.0);
        assert_eq!(rows[2].sd_w_hat, 8.0f64.sqrt());
        assert!(rows.iter().all(|r| r.replications == 2));
    }

    #[test]
    fn writes_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small();
        let report = run_convergence_experiment(&spec, dir.path()).unwrap();
        assert_eq!(report.cells.len(), 3);
        for c in &report.cells {
            assert!(c.ok());
            let f = std::fs::File::open(trace_path(dir.path(), &c.method, 3, c.rep)).unwrap();
            assert_eq!(read_trace_csv(f).unwrap(), c.records);
        }
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(text.starts_with(&SUMMARY_HEADER.join(",")));
        assert!(dir.path().join("cells.csv").exists());
    }

    #[test]
    fn failures_are_tagged() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small();
        spec.replications = 1;
        // squared mean gap overflows, so the pooled covariance is not finite
        spec.pair.mean_x = -1e200;
        spec.pair.mean_y = 1e200;
        let report = run_convergence_experiment(&spec, dir.path()).unwrap();
        assert!(report.cells.iter().all(|c| !c.ok()));
        assert_eq!(report.summary.len(), 1);
        assert_eq!(report.summary[0].status, "failed:eigen:rep000");
        assert!(!trace_path(dir.path(), &Strategy::ppmm(), 3, 0).exists());
    }
}
