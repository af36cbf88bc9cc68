//! On-disk formats for traces and estimates.
//!
//! An estimate directory holds `manifest.txt` (key=value lines),
//! `directions.csv` (`step,slice,x1..xd`) and one `maps/step<k>_slice<l>.csv`
//! per fitted 1D map.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DVector;

use super::{
    ConvergenceTrace, EngineConfig, MongeMapEstimate, Step, Strategy, Termination, TraceRecord,
};
use crate::directions::Direction;
use crate::error::{Error, Result};
use crate::transport1d::Map1D;

pub const TRACE_HEADER: &str =
    "iteration,w_hat_displacement,w_hat_direction_proxy,save_lambda1,elapsed_ms";

pub fn write_trace_csv<W: Write>(trace: &ConvergenceTrace, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration,
            r.w_hat_displacement,
            r.w_hat_direction_proxy,
            r.save_lambda1,
            r.elapsed_ms
        )?;
    }
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != TRACE_HEADER {
        return Err(Error::Csv(format!("unexpected trace header {header:?}")));
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Csv(format!("bad trace row {rec:?}")))
        };
        records.push(TraceRecord {
            iteration: rec
                .get(0)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Csv(format!("bad iteration in {rec:?}")))?,
            w_hat_displacement: f(1)?,
            w_hat_direction_proxy: f(2)?,
            save_lambda1: f(3)?,
            elapsed_ms: f(4)?,
        });
    }
    Ok(records)
}

fn map_file_name(step: usize, slice: usize) -> String {
    format!("step{step:05}_slice{slice:03}.csv")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Write `estimate` into `dir` (created if missing). `termination` is echoed
/// into the manifest when given.
pub fn write_estimate(
    estimate: &MongeMapEstimate,
    termination: Option<Termination>,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    let maps_dir = dir.join("maps");
    fs::create_dir_all(&maps_dir).map_err(|e| Error::io(&maps_dir, e))?;

    let manifest_path = dir.join("manifest.txt");
    let mut m = create(&manifest_path)?;
    let cfg = &estimate.config;
    let io = |e| Error::io(&manifest_path, e);
    writeln!(m, "# projection pursuit Monge map estimate").map_err(io)?;
    writeln!(m, "strategy={}", estimate.strategy).map_err(io)?;
    writeln!(m, "slices={}", estimate.strategy.slices).map_err(io)?;
    writeln!(m, "mean_adjust={}", estimate.strategy.mean_adjust).map_err(io)?;
    writeln!(m, "source_dim={}", estimate.source_dim).map_err(io)?;
    writeln!(m, "steps={}", estimate.steps.len()).map_err(io)?;
    writeln!(m, "max_iterations={}", cfg.max_iterations).map_err(io)?;
    writeln!(m, "tolerance={}", cfg.tolerance).map_err(io)?;
    writeln!(m, "p={}", cfg.p).map_err(io)?;
    writeln!(m, "seed={}", cfg.seed).map_err(io)?;
    writeln!(m, "ridge={}", cfg.ridge).map_err(io)?;
    if let Some(t) = termination {
        writeln!(m, "termination={}", t.as_str()).map_err(io)?;
    }
    m.flush().map_err(io)?;

    let dir_path = dir.join("directions.csv");
    let mut dw = create(&dir_path)?;
    let io = |e| Error::io(&dir_path, e);
    let cols: Vec<String> = (1..=estimate.source_dim).map(|j| format!("x{j}")).collect();
    writeln!(dw, "step,slice,{}", cols.join(",")).map_err(io)?;
    for (k, step) in estimate.steps.iter().enumerate() {
        for (l, (d, map)) in step.directions.iter().zip(&step.maps).enumerate() {
            let v: Vec<String> = d.as_vector().iter().map(|x| x.to_string()).collect();
            writeln!(dw, "{},{},{}", k + 1, l + 1, v.join(",")).map_err(io)?;
            let path = maps_dir.join(map_file_name(k + 1, l + 1));
            let mut mw = create(&path)?;
            map.write_csv(&mut mw).map_err(|e| Error::io(&path, e))?;
            mw.flush().map_err(|e| Error::io(&path, e))?;
        }
    }
    dw.flush().map_err(io)
}

fn parse_manifest(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .collect()
}

fn field<T: std::str::FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<T> {
    m.get(key)
        .ok_or_else(|| Error::InvalidEstimate(format!("manifest missing '{key}'")))?
        .parse()
        .map_err(|_| Error::InvalidEstimate(format!("manifest has bad '{key}'")))
}

/// Inverse of [`write_estimate`].
pub fn read_estimate(dir: impl AsRef<Path>) -> Result<(MongeMapEstimate, Option<Termination>)> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.txt");
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let m = parse_manifest(&text);
    let strategy = Strategy::parse(&field::<String>(&m, "strategy")?)?;
    let source_dim: usize = field(&m, "source_dim")?;
    let steps: usize = field(&m, "steps")?;
    let config = EngineConfig {
        max_iterations: field(&m, "max_iterations")?,
        tolerance: field(&m, "tolerance")?,
        p: field(&m, "p")?,
        seed: field(&m, "seed")?,
        ridge: field(&m, "ridge")?,
        record_timing: true,
    };
    let termination = m
        .get("termination")
        .map(|t| Termination::parse(t))
        .transpose()?;

    let dir_path = dir.join("directions.csv");
    let file = File::open(&dir_path).map_err(|e| Error::io(&dir_path, e))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let mut out: Vec<Step> = (0..steps)
        .map(|_| Step {
            directions: Vec::new(),
            maps: Vec::new(),
        })
        .collect();
    for rec in rdr.records() {
        let rec = rec?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidEstimate(format!("bad direction row {rec:?}")))?;
        if nums.len() != source_dim + 2 {
            return Err(Error::InvalidEstimate(format!("bad direction row {rec:?}")));
        }
        let (k, l) = (nums[0] as usize, nums[1] as usize);
        if k == 0 || k > steps {
            return Err(Error::InvalidEstimate(format!(
                "step index {k} out of range"
            )));
        }
        let direction = Direction::from_unit(DVector::from_column_slice(&nums[2..]))?;
        let path = dir.join("maps").join(map_file_name(k, l));
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let map = Map1D::read_csv(BufReader::new(f))?;
        out[k - 1].directions.push(direction);
        out[k - 1].maps.push(map);
    }
    if out.iter().any(|s| s.directions.is_empty()) {
        return Err(Error::InvalidEstimate("step without directions".into()));
    }
    Ok((
        MongeMapEstimate {
            steps: out,
            source_dim,
            strategy,
            config,
        },
        termination,
    ))
}
