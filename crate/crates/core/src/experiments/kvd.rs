use std::path::Path;

use super::{csv_bytes, ensure_dir, failure_tag, write_atomic, ExperimentSpec};
use crate::engine::{fit, Strategy};
use crate::error::{Error, Result};
use crate::experiments::stats::{least_squares, mean_sd, LinearFit};
use crate::par::map_cells;

pub const KVD_HEADER: [&str; 6] = ["method", "d", "mean_k", "sd_k", "replications", "status"];
pub const KVD_FIT_HEADER: [&str; 5] = ["method", "slope", "intercept", "r_squared", "points"];
pub const KVD_CELLS_HEADER: [&str; 6] = ["method", "d", "rep", "k", "termination", "status"];

#[derive(Debug, Clone, PartialEq)]
pub struct KvdRow {
    pub method: Strategy,
    pub d: usize,
    /// Iterations to converge of each successful replication.
    pub ks: Vec<usize>,
    pub failures: Vec<String>,
}

impl KvdRow {
    pub fn mean_sd(&self) -> (f64, f64) {
        let ks: Vec<f64> = self.ks.iter().map(|&k| k as f64).collect();
        mean_sd(&ks)
    }
}

#[derive(Debug, Clone)]
pub struct KvdReport {
    pub rows: Vec<KvdRow>,
    /// Regression of per-dimension mean K on d, one per method.
    pub fits: Vec<(Strategy, LinearFit)>,
}

/// Iterations to converge against dimension. Writes `kvd.csv`,
/// `kvd_cells.csv` and `kvd_fit.csv`.
pub fn run_k_vs_d_experiment(spec: &ExperimentSpec, out: &Path) -> Result<KvdReport> {
    spec.validate()?;
    if spec.dims.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "k-vs-d needs at least 4 dimensions, got {}",
            spec.dims.len()
        )));
    }
    ensure_dir(out)?;
    let mut grid = Vec::new();
    for method in &spec.methods {
        for &d in &spec.dims {
            for rep in 0..spec.replications {
                grid.push((*method, d, rep));
            }
        }
    }
    let results = map_cells(spec.execution, &grid, |&(method, d, rep)| {
        spec.generate(d, rep)
            .and_then(|(x, y, seed)| fit(&x, &y, method, &spec.engine_for(seed)))
            .map(|o| (o.trace.iterations(), o.trace.termination))
    });

    let mut cell_rows = Vec::new();
    let mut rows = Vec::new();
    for method in &spec.methods {
        for &d in &spec.dims {
            let mut row = KvdRow {
                method: *method,
                d,
                ks: Vec::new(),
                failures: Vec::new(),
            };
            for ((m, dd, rep), res) in grid.iter().zip(&results) {
                if m != method || *dd != d {
                    continue;
                }
                match res {
                    Ok((k, term)) => {
                        row.ks.push(*k);
                        cell_rows.push(vec![
                            method.to_string(),
                            d.to_string(),
                            rep.to_string(),
                            k.to_string(),
                            term.as_str().to_owned(),
                            "ok".to_owned(),
                        ]);
                    }
                    Err(e) => {
                        row.failures.push(format!("{}:rep{rep:03}", failure_tag(e)));
                        cell_rows.push(vec![
                            method.to_string(),
                            d.to_string(),
                            rep.to_string(),
                            String::new(),
                            String::new(),
                            failure_tag(e),
                        ]);
                    }
                }
            }
            rows.push(row);
        }
    }

    let mut fits = Vec::new();
    let mut fit_rows = Vec::new();
    for method in &spec.methods {
        let (ds, ks): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| &r.method == method && !r.ks.is_empty())
            .map(|r| (r.d as f64, r.mean_sd().0))
            .unzip();
        if let Ok(f) = least_squares(&ds, &ks) {
            fit_rows.push(vec![
                method.to_string(),
                f.slope.to_string(),
                f.intercept.to_string(),
                f.r_squared.to_string(),
                ds.len().to_string(),
            ]);
            fits.push((*method, f));
        }
    }

    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (m, s) = r.mean_sd();
            let status = if r.failures.is_empty() {
                "ok".to_owned()
            } else {
                r.failures.join(";")
            };
            vec![
                r.method.to_string(),
                r.d.to_string(),
                m.to_string(),
                s.to_string(),
                r.ks.len().to_string(),
                status,
            ]
        })
        .collect();
    write_atomic(&out.join("kvd.csv"), &csv_bytes(&KVD_HEADER, &table)?)?;
    write_atomic(
        &out.join("kvd_cells.csv"),
        &csv_bytes(&KVD_CELLS_HEADER, &cell_rows)?,
    )?;
    write_atomic(
        &out.join("kvd_fit.csv"),
        &csv_bytes(&KVD_FIT_HEADER, &fit_rows)?,
    )?;
    Ok(KvdReport { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    fn small() -> ExperimentSpec {
        let mut s = ExperimentSpec::preset(ExperimentKind::KVersusD);
        s.dims = vec![2, 3, 4, 5];
        s.n_x = 100;
        s.n_y = 100;
        s.replications = 1;
        s.engine.max_iterations = 20;
        s
    }

    #[test]
    fn single_replication_has_zero_sd() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_k_vs_d_experiment(&small(), dir.path()).unwrap();
        assert_eq!(report.rows.len(), 4);
        for r in &report.rows {
            assert_eq!(r.ks.len(), 1);
            assert_eq!(r.mean_sd().1, 0.0);
        }
    }

    #[test]
    fn huge_tolerance_gives_one_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small();
        spec.replications = 2;
        spec.engine.tolerance = 1.0;
        let report = run_k_vs_d_experiment(&spec, dir.path()).unwrap();
        assert!(report.rows.iter().all(|r| r.ks == vec![1, 1]));
        // constant response: zero slope
        assert_eq!(report.fits[0].1.slope, 0.0);
    }

    #[test]
    fn needs_four_dims() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small();
        spec.dims = vec![2, 3, 4];
        assert!(run_k_vs_d_experiment(&spec, dir.path()).is_err());
    }
}
