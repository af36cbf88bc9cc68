//! `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Keys
//! match the CLI flag names; `-` and `_` are interchangeable. List values
//! (`method`, `dims`) are comma separated.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{ExperimentSpec, WeightScheme};
use crate::engine::Strategy;
use crate::error::{Error, Result};
use crate::par::Execution;

/// Every recognised key, in canonical spelling.
pub const KEYS: [&str; 19] = [
    "method",
    "slices",
    "max_iter",
    "tol",
    "p",
    "seed",
    "out",
    "reps",
    "dims",
    "n",
    "n_x",
    "n_y",
    "weights",
    "mean_x",
    "mean_y",
    "rho_x",
    "rho_y",
    "ridge",
    "execution",
];

/// Optional overrides collected from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub method: Option<Vec<String>>,
    pub slices: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub p: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub reps: Option<usize>,
    pub dims: Option<Vec<usize>>,
    /// Sets both sample sizes unless `n_x` / `n_y` are given.
    pub n: Option<usize>,
    pub n_x: Option<usize>,
    pub n_y: Option<usize>,
    pub weights: Option<WeightScheme>,
    pub mean_x: Option<f64>,
    pub mean_y: Option<f64>,
    pub rho_x: Option<f64>,
    pub rho_y: Option<f64>,
    pub ridge: Option<f64>,
    pub execution: Option<Execution>,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Parse `sequential` or `parallel`.
pub fn parse_execution(value: &str) -> Result<Execution> {
    match value.trim().to_ascii_lowercase().as_str() {
        "sequential" => Ok(Execution::Sequential),
        "parallel" => Ok(Execution::Parallel),
        other => Err(Error::InvalidParameter(format!(
            "execution: expected sequential or parallel, got {other:?}"
        ))),
    }
}

impl Settings {
    /// Parse config text. Unknown keys and repeated keys are errors.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected key=value, got {line:?}"),
            })?;
            let key = key.trim().replace('-', "_");
            if seen.contains(&key) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key {key}"),
                });
            }
            s.set(&key, value.trim()).map_err(|e| Error::Config {
                line: line_no,
                message: match e {
                    Error::InvalidParameter(m) => m,
                    other => other.to_string(),
                },
            })?;
            seen.push(key);
        }
        Ok(s)
    }

    pub fn load_config(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_config(&text)
    }

    /// Set one key from its string form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        match key.as_str() {
            "method" => {
                let list: Vec<String> = value
                    .split(',')
                    .map(|m| m.trim().to_owned())
                    .filter(|m| !m.is_empty())
                    .collect();
                if list.is_empty() {
                    return Err(Error::InvalidParameter("method: empty list".into()));
                }
                for m in &list {
                    Strategy::parse(m)?;
                }
                self.method = Some(list);
            }
            "slices" => self.slices = Some(parse_num(&key, value)?),
            "max_iter" => self.max_iter = Some(parse_num(&key, value)?),
            "tol" => self.tol = Some(parse_num(&key, value)?),
            "p" => self.p = Some(parse_num(&key, value)?),
            "seed" => self.seed = Some(parse_num(&key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "reps" => self.reps = Some(parse_num(&key, value)?),
            "dims" => self.dims = Some(parse_list(&key, value)?),
            "n" => self.n = Some(parse_num(&key, value)?),
            "n_x" => self.n_x = Some(parse_num(&key, value)?),
            "n_y" => self.n_y = Some(parse_num(&key, value)?),
            "weights" => self.weights = Some(WeightScheme::parse(value)?),
            "mean_x" => self.mean_x = Some(parse_num(&key, value)?),
            "mean_y" => self.mean_y = Some(parse_num(&key, value)?),
            "rho_x" => self.rho_x = Some(parse_num(&key, value)?),
            "rho_y" => self.rho_y = Some(parse_num(&key, value)?),
            "ridge" => self.ridge = Some(parse_num(&key, value)?),
            "execution" => self.execution = Some(parse_execution(value)?),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown key {other:?} (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// `self` with every field set in `top` replaced by `top`'s value.
    pub fn overlay(&self, top: &Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => {
                Settings { $($f: top.$f.clone().or_else(|| self.$f.clone())),* }
            };
        }
        pick!(
            method, slices, max_iter, tol, p, seed, out, reps, dims, n, n_x, n_y, weights, mean_x,
            mean_y, rho_x, rho_y, ridge, execution
        )
    }

    /// Methods with `slices` applied to every sliced entry given without an
    /// explicit count.
    pub fn strategies(&self) -> Result<Option<Vec<Strategy>>> {
        let Some(list) = &self.method else {
            return Ok(self.slices.map(|l| vec![Strategy::sliced(l)]));
        };
        list.iter()
            .map(|m| {
                let s = Strategy::parse(m)?;
                let bare = m.trim().eq_ignore_ascii_case("sliced");
                Ok(match self.slices {
                    Some(l) if bare => Strategy::sliced(l),
                    _ => s,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Apply the overrides to `spec` and validate the result.
    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        if let Some(methods) = self.strategies()? {
            spec.methods = methods;
        }
        if let Some(v) = self.max_iter {
            spec.engine.max_iterations = v;
        }
        if let Some(v) = self.tol {
            spec.engine.tolerance = v;
        }
        if let Some(v) = self.p {
            spec.engine.p = v;
        }
        if let Some(v) = self.ridge {
            spec.engine.ridge = v;
        }
        if let Some(v) = self.seed {
            spec.base_seed = v;
        }
        if let Some(v) = self.reps {
            spec.replications = v;
        }
        if let Some(v) = &self.dims {
            spec.dims = v.clone();
        }
        if let Some(n) = self.n {
            spec.n_x = n;
            spec.n_y = n;
        }
        if let Some(v) = self.n_x {
            spec.n_x = v;
        }
        if let Some(v) = self.n_y {
            spec.n_y = v;
        }
        if let Some(v) = self.weights {
            spec.weights = v;
        }
        if let Some(v) = self.mean_x {
            spec.pair.mean_x = v;
        }
        if let Some(v) = self.mean_y {
            spec.pair.mean_y = v;
        }
        if let Some(v) = self.rho_x {
            spec.pair.rho_x = v;
        }
        if let Some(v) = self.rho_y {
            spec.pair.rho_y = v;
        }
        if let Some(v) = self.execution {
            spec.execution = v;
        }
        spec.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn parses_keys_and_comments() {
        let s = Settings::parse_config(
            "# desk run\nmethod = ppmm, random\n\nmax-iter=150 # cap\ndims=5,10\nweights=random\nexecution=sequential\n",
        )
        .unwrap();
        assert_eq!(s.method, Some(vec!["ppmm".to_owned(), "random".to_owned()]));
        assert_eq!(s.max_iter, Some(150));
        assert_eq!(s.dims, Some(vec![5, 10]));
        assert_eq!(s.weights, Some(WeightScheme::Random));
        assert_eq!(s.execution, Some(Execution::Sequential));
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("tol=1e-5\nbogus\n", 2),
            ("tol=abc\n", 1),
            ("\n\ncolour=red\n", 3),
            ("seed=1\nseed=2\n", 2),
            ("method=ppmm,nope\n", 1),
        ] {
            match Settings::parse_config(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn flags_win_over_config() {
        let file = Settings::parse_config("tol=1e-3\nseed=5\nreps=4\n").unwrap();
        let flags = Settings {
            seed: Some(9),
            ..Settings::default()
        };
        let merged = file.overlay(&flags);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.tol, Some(1e-3));
        assert_eq!(merged.reps, Some(4));
    }

    #[test]
    fn slices_apply_to_bare_sliced() {
        let s = Settings {
            method: Some(vec!["sliced".into(), "sliced20".into(), "ppmm".into()]),
            slices: Some(50),
            ..Settings::default()
        };
        assert_eq!(
            s.strategies().unwrap().unwrap(),
            vec![Strategy::sliced(50), Strategy::sliced(20), Strategy::ppmm()]
        );
    }

    #[test]
    fn apply_sets_spec() {
        let mut spec = ExperimentSpec::preset(ExperimentKind::Convergence);
        let s = Settings::parse_config("n=500\nn_y=100\nreps=2\nseed=7\ntol=0\np=1\nrho_x=0.3")
            .unwrap();
        s.apply(&mut spec).unwrap();
        assert_eq!(
            (spec.n_x, spec.n_y, spec.replications, spec.base_seed),
            (500, 100, 2, 7)
        );
        assert_eq!(spec.engine.tolerance, 0.0);
        assert_eq!(spec.engine.p, 1.0);
        assert_eq!(spec.pair.rho_x, 0.3);
        let bad = Settings {
            reps: Some(0),
            ..Settings::default()
        };
        assert!(bad.apply(&mut spec).is_err());
    }
}
