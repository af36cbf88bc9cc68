//! Weighted point clouds, CSV ingestion and synthetic Gaussian sampling.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, sym_eigen_desc, MatrixRoot};
use crate::rng::RngState;

/// Column name recognised as observation weights in CSV input.
pub const WEIGHT_COLUMN: &str = "weight";

/// A weighted empirical distribution: `n` observations in `R^d`.
///
/// Weights are always stored normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: DMatrix<f64>,
    weights: DVector<f64>,
    uniform: bool,
}

impl Sample {
    /// Uniformly weighted sample.
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        let n = points.nrows();
        Self::validate_points(&points)?;
        let weights = DVector::from_element(n, 1.0 / n as f64);
        Ok(Self {
            points,
            weights,
            uniform: true,
        })
    }

    /// Sample with arbitrary nonnegative weights, normalized here.
    pub fn with_weights(points: DMatrix<f64>, weights: DVector<f64>) -> Result<Self> {
        Self::validate_points(&points)?;
        let n = points.nrows();
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: weights.len(),
            });
        }
        for (row, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column: WEIGHT_COLUMN.into(),
                });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight {
                    row: row + 1,
                    value: w,
                });
            }
        }
        let positive = weights.iter().filter(|&&w| w > 0.0).count();
        if positive < n.min(2) {
            return Err(Error::InvalidSample(format!(
                "need at least {} strictly positive weights, found {positive}",
                n.min(2)
            )));
        }
        // summed in sorted order so row permutations give identical weights
        let mut sorted_w: Vec<f64> = weights.iter().copied().collect();
        sorted_w.sort_by(f64::total_cmp);
        let total: f64 = sorted_w.iter().sum();
        let uniform = weights.iter().all(|&w| w == weights[0]);
        let weights = if uniform {
            DVector::from_element(n, 1.0 / n as f64)
        } else {
            weights / total
        };
        Ok(Self {
            points,
            weights,
            uniform,
        })
    }

    fn validate_points(points: &DMatrix<f64>) -> Result<()> {
        if points.nrows() == 0 {
            return Err(Error::InvalidSample("sample has no observations".into()));
        }
        if points.ncols() == 0 {
            return Err(Error::InvalidSample("sample has no features".into()));
        }
        for j in 0..points.ncols() {
            for i in 0..points.nrows() {
                if !points[(i, j)].is_finite() {
                    return Err(Error::NonFinite {
                        row: i + 1,
                        column: format!("x{}", j + 1),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// True when every observation carries weight `1/n`.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Same weights, new coordinates. Used by the engine for `X^{[k]}`.
    pub(crate) fn with_points_unchecked(&self, points: DMatrix<f64>) -> Self {
        debug_assert_eq!(points.shape(), self.points.shape());
        Self {
            points,
            weights: self.weights.clone(),
            uniform: self.uniform,
        }
    }

    pub(crate) fn points_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.points
    }

    /// Weighted mean of the rows.
    pub fn mean(&self) -> DVector<f64> {
        (self.points.transpose() * &self.weights).into_owned()
    }

    /// Projection `X ξ` onto a direction.
    pub fn project(&self, direction: &DVector<f64>) -> DVector<f64> {
        &self.points * direction
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.points.row(i).into_owned()
    }

    /// Row indices in lexicographic order of (coordinates, weight). Two
    /// row permutations of the same sample map to the same ordered sample.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&a, &b| {
            for j in 0..self.dim() {
                let o = self.points[(a, j)].total_cmp(&self.points[(b, j)]);
                if o.is_ne() {
                    return o;
                }
            }
            self.weights[a].total_cmp(&self.weights[b])
        });
        idx
    }

    /// Rows permuted by `perm` (row `i` of the result is row `perm[i]`).
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: perm.len(),
            });
        }
        let points = DMatrix::from_fn(self.n(), self.dim(), |i, j| self.points[(perm[i], j)]);
        let weights = DVector::from_fn(self.n(), |i, _| self.weights[perm[i]]);
        Ok(Self {
            points,
            weights,
            uniform: self.uniform,
        })
    }
}

/// Read a sample from CSV.
///
/// All columns except the weight column are features, in file order. The
/// weight column is `weight_column` if given, otherwise a column named
/// `weight` when present.
pub fn load_sample(path: impl AsRef<Path>, weight_column: Option<&str>) -> Result<Sample> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_sample(BufReader::new(file), weight_column)
}

pub fn read_sample<R: std::io::Read>(reader: R, weight_column: Option<&str>) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let weight_idx = match weight_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Csv(format!("weight column '{name}' not found")))?,
        ),
        None => headers.iter().position(|h| h == WEIGHT_COLUMN),
    };
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| Some(i) != weight_idx)
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::Csv("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut weights = Vec::new();
    let mut rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                Error::Csv(format!(
                    "row {row}, column {}: cannot parse '{raw}' as a number",
                    headers[i]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: headers[i].clone(),
                });
            }
            Ok(v)
        };
        for &i in &feature_idx {
            values.push(cell(i)?);
        }
        if let Some(wi) = weight_idx {
            let w = cell(wi)?;
            if w < 0.0 {
                return Err(Error::NegativeWeight { row, value: w });
            }
            weights.push(w);
        }
        rows += 1;
    }
    if rows < 2 {
        return Err(Error::InvalidSample(format!(
            "need at least 2 rows, found {rows}"
        )));
    }
    let points = DMatrix::from_row_slice(rows, feature_idx.len(), &values);
    if weight_idx.is_some() {
        Sample::with_weights(points, DVector::from_vec(weights))
    } else {
        Sample::new(points)
    }
}

/// Write a sample as CSV with header `x1,…,xd,weight`.
pub fn save_sample(sample: &Sample, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_sample(sample, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_sample<W: Write>(sample: &Sample, out: &mut W) -> std::io::Result<()> {
    let header: Vec<String> = (1..=sample.dim()).map(|j| format!("x{j}")).collect();
    writeln!(out, "{},{}", header.join(","), WEIGHT_COLUMN)?;
    for i in 0..sample.n() {
        for j in 0..sample.dim() {
            write!(out, "{},", sample.points[(i, j)])?;
        }
        writeln!(out, "{}", sample.weights[i])?;
    }
    Ok(())
}

/// Multivariate normal parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianSpec {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidParameter("empty mean vector".into()));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: covariance.nrows(),
            });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite gaussian parameter".into(),
            ));
        }
        let asym = max_asymmetry(&covariance);
        if asym > 1e-10 {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let eig = sym_eigen_desc(&covariance)?;
        let min = eig.values[d - 1];
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        Ok(Self { mean, covariance })
    }

    /// Mean filled with a constant and AR(1) covariance.
    pub fn ar1(d: usize, mean_value: f64, rho: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(d, mean_value),
            ar1_covariance(d, rho)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

/// Draw `n` i.i.d. rows `mean + L z` with `L` the symmetric square root of
/// the covariance. Normals are consumed row by row.
pub fn sample_gaussian(spec: &GaussianSpec, n: usize, rng: &mut RngState) -> Result<Sample> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "gaussian sample needs n >= 2, got {n}"
        )));
    }
    Sample::new(gaussian_points(spec, n, rng)?)
}

/// Raw `n × d` Gaussian draws; no lower bound on `n` beyond one.
pub(crate) fn gaussian_points(
    spec: &GaussianSpec,
    n: usize,
    rng: &mut RngState,
) -> Result<DMatrix<f64>> {
    let d = spec.dim();
    let root = MatrixRoot::new(&spec.covariance)?.root;
    let mut z = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            z[(i, j)] = rng.standard_normal();
        }
    }
    // root is symmetric, so z·rootᵀ = z·root
    let mut points = z * root;
    for mut row in points.row_iter_mut() {
        row += spec.mean.transpose();
    }
    Ok(points)
}

/// AR(1) correlation matrix: entry `(i, j)` is `rho^{|i-j|}`.
pub fn ar1_covariance(d: usize, rho: f64) -> Result<DMatrix<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "AR(1) coefficient must satisfy |rho| < 1, got {rho}"
        )));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| {
        rho.powi(i.abs_diff(j) as i32)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen_desc;

    #[test]
    fn load_uniform_default() {
        let s = read_sample("x1,x2\n0,0\n1,1\n2,2".as_bytes(), None).unwrap();
        assert_eq!((s.n(), s.dim()), (3, 2));
        assert!(s.is_uniform());
        for &w in s.weights().iter() {
            assert_eq!(w, 1.0 / 3.0);
        }
        assert_eq!(s.points()[(2, 1)], 2.0);
    }

    #[test]
    fn load_normalizes_weight_column() {
        let s = read_sample("x1,weight,x2\n0,1,5\n1,1,6\n2,2,7".as_bytes(), None).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.weights().as_slice(), &[0.25, 0.25, 0.5]);
        assert!(!s.is_uniform());
        // column order preserved, weight column skipped
        assert_eq!(s.points()[(0, 1)], 5.0);
    }

    #[test]
    fn load_named_weight_column() {
        let s = read_sample("a,b,w\n0,0,3\n1,1,1".as_bytes(), Some("w")).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.weights().as_slice(), &[0.75, 0.25]);
        assert!(read_sample("a,b\n0,0\n1,1".as_bytes(), Some("w")).is_err());
    }

    #[test]
    fn load_rejects_nan_with_location() {
        let err = read_sample("x1,x2\n0,0\n1,NaN\n".as_bytes(), None).unwrap_err();
        match err {
            Error::NonFinite { row, column } => {
                assert_eq!(row, 2);
                assert_eq!(column, "x2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_rejects_negative_weight_and_short_input() {
        assert!(matches!(
            read_sample("x,weight\n0,1\n1,-1".as_bytes(), None),
            Err(Error::NegativeWeight { row: 2, .. })
        ));
        assert!(matches!(
            read_sample("x\n0".as_bytes(), None),
            Err(Error::InvalidSample(_))
        ));
        assert!(matches!(
            read_sample("x,y\n0,1\n1".as_bytes(), None),
            Err(Error::Csv(_))
        ));
        assert!(matches!(
            read_sample("x,y\n0,1\n1,abc".as_bytes(), None),
            Err(Error::Csv(_))
        ));
    }

    #[test]
    fn weights_need_two_positive() {
        let p = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        assert!(Sample::with_weights(p.clone(), DVector::from_vec(vec![1.0, 0.0, 0.0])).is_err());
        assert!(Sample::with_weights(p, DVector::from_vec(vec![1.0, 0.0, 1.0])).is_ok());
    }

    #[test]
    fn save_load_round_trip() {
        let p = DMatrix::from_row_slice(3, 2, &[0.1, -2.5, 1e-17, 3.0, 7.25, 1.0 / 3.0]);
        let s = Sample::with_weights(p, DVector::from_vec(vec![0.2, 0.3, 0.7])).unwrap();
        let mut buf = Vec::new();
        write_sample(&s, &mut buf).unwrap();
        let back = read_sample(buf.as_slice(), None).unwrap();
        assert!((back.points() - s.points()).amax() <= 1e-12);
        assert!((back.weights() - s.weights()).amax() <= 1e-12);
    }

    #[test]
    fn ar1_examples() {
        let m = ar1_covariance(2, 0.5).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        assert_eq!(ar1_covariance(3, 0.0).unwrap(), DMatrix::identity(3, 3));
        let m = ar1_covariance(3, 0.8).unwrap();
        assert!((m[(0, 2)] - 0.64).abs() < 1e-15);
        assert!(ar1_covariance(3, 1.0).is_err());
        assert!(ar1_covariance(3, -1.5).is_err());
    }

    #[test]
    fn ar1_positive_definite_up_to_100() {
        for d in [1, 2, 10, 50, 100] {
            for rho in [-0.95, -0.5, 0.0, 0.5, 0.8, 0.95] {
                let eig = sym_eigen_desc(&ar1_covariance(d, rho).unwrap()).unwrap();
                assert!(eig.values[d - 1] > 0.0, "d={d} rho={rho}");
            }
        }
    }

    #[test]
    fn gaussian_spec_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            GaussianSpec::new(DVector::zeros(2), bad),
            Err(Error::NotSymmetric { .. })
        ));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            GaussianSpec::new(DVector::zeros(2), indefinite),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn gaussian_mean_close_to_zero() {
        // standard error 1/sqrt(1e5) ≈ 0.0032; 0.02 is over 6σ
        let spec = GaussianSpec::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let s = sample_gaussian(&spec, 100_000, &mut RngState::new(11)).unwrap();
        for m in s.mean().iter() {
            assert!(m.abs() < 0.02, "mean {m}");
        }
    }

    #[test]
    fn gaussian_covariance_close_to_identity() {
        // sd of a sample covariance entry at n=1e5 is about 0.0045
        let spec =
            GaussianSpec::new(DVector::from_element(2, 3.0), DMatrix::identity(2, 2)).unwrap();
        let s = sample_gaussian(&spec, 100_000, &mut RngState::new(12)).unwrap();
        let mean = s.mean();
        let n = s.n() as f64;
        for a in 0..2 {
            for b in 0..2 {
                let c: f64 = (0..s.n())
                    .map(|i| (s.points()[(i, a)] - mean[a]) * (s.points()[(i, b)] - mean[b]))
                    .sum::<f64>()
                    / n;
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((c - target).abs() < 0.03, "cov[{a},{b}] = {c}");
            }
        }
    }

    #[test]
    fn gaussian_is_deterministic() {
        let spec = GaussianSpec::ar1(4, 1.0, 0.8).unwrap();
        let a = sample_gaussian(&spec, 50, &mut RngState::new(5)).unwrap();
        let b = sample_gaussian(&spec, 50, &mut RngState::new(5)).unwrap();
        assert!(a
            .points()
            .iter()
            .zip(b.points().iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(sample_gaussian(&spec, 1, &mut RngState::new(5)).is_err());
    }
}
