//! Projection direction selection.
//!
//! [`save_direction`] picks the direction along which the whitened second
//! moments of the two samples disagree the most (sliced average variance
//! estimation with two slices). [`random_sphere_direction`] serves the
//! random and sliced baselines.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{dot, inverse_sqrt_floored, spectral_map, sym_eigen_desc, symmetrize};
use crate::rng::RngState;
use crate::sample::Sample;

/// Relative floor on pooled covariance eigenvalues before inversion.
pub const DEFAULT_RIDGE: f64 = 1e-10;

/// Leading SAVE eigenvalues below `DEGENERATE_EIGEN_FACTOR * d` raise the
/// degenerate-direction flag.
pub const DEGENERATE_EIGEN_FACTOR: f64 = 1e-8;

/// Eigenvalues closer than this to the leading one are treated as tied.
const EIGEN_TIE_TOL: f64 = 1e-10;

/// Mean gaps below this fraction of the combined spread count as zero.
const MEAN_GAP_REL_TOL: f64 = 1e-8;

/// Whitened mean gap must exceed this multiple of the largest whitened
/// group standard deviation before mean adjustment kicks in.
pub const MEAN_SHIFT_RATIO: f64 = 0.5;

/// Unit vector in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(DVector<f64>);

impl Direction {
    /// Normalize `v`; fails on a zero or non-finite vector.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter(
                "direction must be a finite nonzero vector".into(),
            ));
        }
        Ok(Self(v / norm))
    }

    /// Accept an already-normalized vector as is (norm within 1e-10 of one).
    pub fn from_unit(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !((norm - 1.0).abs() <= 1e-10) {
            return Err(Error::InvalidParameter(format!(
                "direction norm {norm} is not 1"
            )));
        }
        Ok(Self(v))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Self(-&self.0)
    }

    /// Absolute cosine with another direction.
    pub fn abs_cos(&self, other: &Direction) -> f64 {
        self.0.dot(&other.0).abs().min(1.0)
    }
}

/// Diagnostics of one SAVE direction computation.
#[derive(Debug, Clone)]
pub struct SaveDecomposition {
    /// Covariance of the two samples pooled with equal group mass.
    pub pooled_covariance: DMatrix<f64>,
    /// `pooled_covariance^{-1/2}` (floored).
    pub whitener: DMatrix<f64>,
    /// Whitened covariances of the source and target about their own means.
    pub group_covariances: [DMatrix<f64>; 2],
    /// `((Σ₁ - I)² + (Σ₂ - I)²) / 4`
    pub save_matrix: DMatrix<f64>,
    /// Descending.
    pub eigenvalues: DVector<f64>,
    /// Leading eigenvector of the SAVE matrix, before unwhitening.
    pub leading_eigenvector: DVector<f64>,
    /// Raised when no second-moment discrepancy remains.
    pub degenerate: bool,
}

impl SaveDecomposition {
    pub fn leading_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Number of eigenvalues above `tol`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&v| v > tol).count()
    }

    /// One-row CSV: header `lambda1,…,lambdad`, then the eigenvalues.
    pub fn write_eigenvalues_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.eigenvalues.len())
            .map(|i| format!("lambda{i}"))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        let row: Vec<String> = self.eigenvalues.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))
    }
}

/// `Σᵢ wᵢ (xᵢ - c)(xᵢ - c)ᵀ` with the sample's normalized weights.
pub fn weighted_covariance(sample: &Sample, center: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = sample.dim();
    if center.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: center.len(),
        });
    }
    let n = sample.n();
    let w = sample.weights().as_slice();
    let mut centered = sample.points().clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-center[j]);
    }
    let data = centered.as_slice();
    let mut weighted = vec![0.0; n];
    let mut cov = DMatrix::zeros(d, d);
    for a in 0..d {
        let ca = &data[a * n..(a + 1) * n];
        for (wi, (&v, &wt)) in weighted.iter_mut().zip(ca.iter().zip(w)) {
            *wi = v * wt;
        }
        for b in a..d {
            let cb = &data[b * n..(b + 1) * n];
            let s = dot(&weighted, cb);
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }
    Ok(cov)
}

fn check_dims(x: &Sample, y: &Sample) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    Ok(())
}

/// Flip sign so the largest-magnitude coordinate (first on ties) is positive.
fn fix_sign(mut v: DVector<f64>) -> DVector<f64> {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

fn lexicographically_greater(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x > y;
        }
    }
    false
}

/// SAVE direction between a source and a target sample.
///
/// 1. pooled covariance of the stacked sample about the pooled mean;
/// 2. covariances of the whitened source and target about their own means;
/// 3. leading eigenvector `ξ` of `((Σ₁ - I)² + (Σ₂ - I)²) / 4`;
///
/// and returns `Σ^{-1/2} ξ` normalized. Each sample contributes half of the
/// pooled mass regardless of its size.
pub fn save_direction(
    x: &Sample,
    y: &Sample,
    ridge: f64,
) -> Result<(Direction, SaveDecomposition)> {
    check_dims(x, y)?;
    save_from_moments(&Moments::of(x)?, &Moments::of(y)?, ridge)
}

/// Weighted mean and covariance of one sample.
#[derive(Debug, Clone)]
pub struct Moments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl Moments {
    pub fn of(sample: &Sample) -> Result<Self> {
        let mean = sample.mean();
        let covariance = weighted_covariance(sample, &mean)?;
        Ok(Self { mean, covariance })
    }

    /// `sqrt(E‖x - mean‖²)`
    pub fn rms_spread(&self) -> f64 {
        self.covariance.trace().max(0.0).sqrt()
    }
}

/// [`save_direction`] from precomputed moments.
pub fn save_from_moments(
    mx: &Moments,
    my: &Moments,
    ridge: f64,
) -> Result<(Direction, SaveDecomposition)> {
    if mx.mean.len() != my.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mx.mean.len(),
            actual: my.mean.len(),
        });
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }
    let d = mx.mean.len();
    let (cov_x, cov_y) = (&mx.covariance, &my.covariance);
    let pooled_mean = (&mx.mean + &my.mean) * 0.5;
    // equal-mass mixture: ½(Cx + Cy) + ¼ (mx − my)(mx − my)ᵀ
    let gap = &mx.mean - &my.mean;
    let pooled = symmetrize(&((cov_x + cov_y) * 0.5 + &gap * gap.transpose() * 0.25));
    let scale = pooled.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let magnitude = pooled_mean.amax().max(1.0);
    if !(scale > f64::EPSILON * f64::EPSILON * magnitude * magnitude) {
        return Err(Error::DegenerateCovariance);
    }
    let whitener = inverse_sqrt_floored(&pooled, ridge)?;
    // directions where the pooled covariance hit the floor carry no spread in
    // either sample and are excluded from the comparison
    let pooled_eig = sym_eigen_desc(&pooled)?;
    let floor = ridge * pooled_eig.values[0];
    let range = spectral_map(&pooled_eig, |v| if v > floor { 1.0 } else { 0.0 });

    let sigma1 = symmetrize(&(&whitener * cov_x * &whitener));
    let sigma2 = symmetrize(&(&whitener * cov_y * &whitener));
    let a = &sigma1 - &range;
    let b = &sigma2 - &range;
    let save_matrix = symmetrize(&((&a * &a + &b * &b) * 0.25));

    let eig = sym_eigen_desc(&save_matrix)?;
    let lead = eig.values[0];
    let mut xi = fix_sign(eig.vectors.column(0).into_owned());
    for k in 1..d {
        if lead - eig.values[k] > EIGEN_TIE_TOL {
            break;
        }
        let candidate = fix_sign(eig.vectors.column(k).into_owned());
        if lexicographically_greater(&candidate, &xi) {
            xi = candidate;
        }
    }

    let direction = Direction::new(fix_sign(&whitener * &xi))?;
    let degenerate = lead < DEGENERATE_EIGEN_FACTOR * d as f64;
    let decomposition = SaveDecomposition {
        pooled_covariance: pooled,
        whitener,
        group_covariances: [sigma1, sigma2],
        save_matrix,
        eigenvalues: eig.values,
        leading_eigenvector: xi,
        degenerate,
    };
    Ok((direction, decomposition))
}

/// Normalized `mean(y) - mean(x)`, or `None` when the gap is negligible
/// relative to the spread of the two samples.
pub fn mean_gap_direction(x: &Sample, y: &Sample) -> Result<Option<Direction>> {
    check_dims(x, y)?;
    mean_gap_from_moments(&Moments::of(x)?, &Moments::of(y)?)
}

pub fn mean_gap_from_moments(mx: &Moments, my: &Moments) -> Result<Option<Direction>> {
    let gap = &my.mean - &mx.mean;
    let norm = gap.norm();
    let spread = mx.rms_spread() + my.rms_spread();
    let scale = spread.max(mx.mean.norm().max(my.mean.norm()) * f64::EPSILON);
    if norm > MEAN_GAP_REL_TOL * scale && norm > 0.0 {
        Ok(Some(Direction::new(gap)?))
    } else {
        Ok(None)
    }
}

/// True when the whitened mean gap exceeds [`MEAN_SHIFT_RATIO`] times the
/// largest whitened group standard deviation.
pub fn mean_shift_dominates(x: &Sample, y: &Sample, decomposition: &SaveDecomposition) -> bool {
    shift_dominates(&(y.mean() - x.mean()), decomposition)
}

pub(crate) fn shift_dominates(gap: &DVector<f64>, decomposition: &SaveDecomposition) -> bool {
    let gap = &decomposition.whitener * gap;
    let largest_var = decomposition
        .group_covariances
        .iter()
        .map(|c| c.diagonal().amax())
        .fold(0.0f64, f64::max);
    gap.norm() > MEAN_SHIFT_RATIO * largest_var.sqrt()
}

/// Uniform direction on the unit sphere via a normalized Gaussian vector.
pub fn random_sphere_direction(d: usize, rng: &mut RngState) -> Result<Direction> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    loop {
        let v = DVector::from_fn(d, |_, _| rng.standard_normal());
        if v.norm() > 0.0 {
            return Direction::new(v);
        }
    }
}
