use std::path::Path;

use super::convergence::{summarize_traces, SummaryRow, SUMMARY_HEADER};
use super::{csv_bytes, ensure_dir, failure_tag, trace_path, write_atomic, ExperimentSpec};
use crate::engine::{fit, write_trace_csv, Strategy, TraceRecord};
use crate::error::Result;
use crate::experiments::stats::mean_sd;
use crate::oracle::{exact_discrete_w2, DISCRETE_ORACLE_MAX_CELLS};
use crate::par::map_cells;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionCell {
    pub method: Strategy,
    pub d: usize,
    pub rep: usize,
    pub records: Vec<TraceRecord>,
    /// Exact discrete W_p of the drawn samples, when within the size guard.
    pub oracle: Option<f64>,
    pub status: String,
}

impl ExtensionCell {
    pub fn final_w_hat(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.w_hat_displacement)
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.oracle.map(|o| (self.final_w_hat() - o).abs() / o)
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionReport {
    pub cells: Vec<ExtensionCell>,
    pub warnings: Vec<String>,
}

/// Unequal sizes and/or random weights, scored against the exact discrete
/// oracle. Writes per-cell traces, `extension.csv` and `summary.csv`.
/// When `n_x * n_y` exceeds the oracle guard the oracle columns are left
/// out and a warning is returned.
pub fn run_extension_experiment(spec: &ExperimentSpec, out: &Path) -> Result<ExtensionReport> {
    spec.validate()?;
    ensure_dir(out)?;
    let mut warnings = Vec::new();
    let with_oracle = spec.n_x.saturating_mul(spec.n_y) <= DISCRETE_ORACLE_MAX_CELLS;
    if !with_oracle {
        warnings.push(format!(
            "oracle skipped: n_x*n_y = {} exceeds {DISCRETE_ORACLE_MAX_CELLS}",
            spec.n_x.saturating_mul(spec.n_y)
        ));
    }
    let mut grid = Vec::new();
    for method in &spec.methods {
        for &d in &spec.dims {
            for rep in 0..spec.replications {
                grid.push((*method, d, rep));
            }
        }
    }
    let cells = map_cells(
        spec.execution,
        &grid,
        |&(method, d, rep)| -> Result<ExtensionCell> {
            let run = spec.generate(d, rep).and_then(|(x, y, seed)| {
                let config = spec.engine_for(seed);
                let outcome = fit(&x, &y, method, &config)?;
                let oracle = if with_oracle {
                    Some(exact_discrete_w2(&x, &y, config.p)?)
                } else {
                    None
                };
                Ok((outcome.trace, oracle))
            });
            match run {
                Ok((trace, oracle)) => {
                    let mut buf = Vec::new();
                    write_trace_csv(&trace, &mut buf).expect("in-memory write");
                    write_atomic(&trace_path(out, &method, d, rep), &buf)?;
                    Ok(ExtensionCell {
                        method,
                        d,
                        rep,
                        records: trace.records,
                        oracle,
                        status: "ok".into(),
                    })
                }
                Err(e) => Ok(ExtensionCell {
                    method,
                    d,
                    rep,
                    records: Vec::new(),
                    oracle: None,
                    status: failure_tag(&e),
                }),
            }
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut header = vec![
        "method",
        "d",
        "rep",
        "n_x",
        "n_y",
        "iterations",
        "final_w_hat",
    ];
    if with_oracle {
        header.extend(["oracle_w2", "relative_error"]);
    }
    header.push("status");
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            let mut row = vec![
                c.method.to_string(),
                c.d.to_string(),
                c.rep.to_string(),
                spec.n_x.to_string(),
                spec.n_y.to_string(),
                c.records.len().to_string(),
                c.final_w_hat().to_string(),
            ];
            if with_oracle {
                row.push(c.oracle.map_or(String::new(), |v| v.to_string()));
                row.push(c.relative_error().map_or(String::new(), |v| v.to_string()));
            }
            row.push(c.status.clone());
            row
        })
        .collect();
    write_atomic(&out.join("extension.csv"), &csv_bytes(&header, &rows)?)?;

    let mut summary: Vec<SummaryRow> = Vec::new();
    for method in &spec.methods {
        for &d in &spec.dims {
            let group: Vec<&ExtensionCell> = cells
                .iter()
                .filter(|c| &c.method == method && c.d == d && c.status == "ok")
                .collect();
            let oracles: Vec<f64> = group.iter().filter_map(|c| c.oracle).collect();
            let truth = mean_sd(&oracles).0;
            let traces: Vec<Vec<f64>> = group
                .iter()
                .map(|c| c.records.iter().map(|r| r.w_hat_displacement).collect())
                .collect();
            summary.extend(summarize_traces(&method.to_string(), d, truth, &traces));
        }
    }
    let rows: Vec<Vec<String>> = summary.iter().map(SummaryRow::row).collect();
    write_atomic(
        &out.join("summary.csv"),
        &csv_bytes(&SUMMARY_HEADER, &rows)?,
    )?;
    Ok(ExtensionReport { cells, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn oracle_columns_present_under_guard() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::preset(ExperimentKind::Extension);
        spec.replications = 2;
        spec.engine.max_iterations = 20;
        let report = run_extension_experiment(&spec, dir.path()).unwrap();
        assert!(report.warnings.is_empty());
        assert!(report.cells.iter().all(|c| c.oracle.is_some()));
        let text = std::fs::read_to_string(dir.path().join("extension.csv")).unwrap();
        assert!(text.lines().next().unwrap().contains("oracle_w2"));
    }

    #[test]
    fn oracle_omitted_over_guard() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::preset(ExperimentKind::Extension);
        spec.n_x = 200;
        spec.n_y = 100;
        spec.replications = 1;
        spec.engine.max_iterations = 5;
        let report = run_extension_experiment(&spec, dir.path()).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert!(report.cells.iter().all(|c| c.oracle.is_none()));
        let text = std::fs::read_to_string(dir.path().join("extension.csv")).unwrap();
        assert!(!text.lines().next().unwrap().contains("oracle_w2"));
    }
}
