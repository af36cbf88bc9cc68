//! Projection pursuit estimation of the Monge map.
//!
//! Each iteration picks a direction `ξ`, fits the monotone 1D map `φ` between
//! the projections `X ξ` and `Y ξ`, and moves every source point along `ξ`:
//! `X ← X + (φ(Xξ) − Xξ) ξᵀ`. The sliced baseline averages `L` such
//! displacements per iteration.

mod io;

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::directions::{
    mean_gap_from_moments, random_sphere_direction, save_from_moments, shift_dominates, Direction,
    Moments, DEFAULT_RIDGE,
};
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::sample::Sample;
use crate::transport1d::{fit_1d_map, Map1D, ScalarSample};

pub use io::{read_estimate, read_trace_csv, write_estimate, write_trace_csv, TRACE_HEADER};

/// Guards the relative-change denominator against division by zero.
pub const ABS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Ppmm,
    Random,
    Sliced,
}

/// How each iteration chooses its direction(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Number of slices `L`; only used by [`StrategyKind::Sliced`].
    pub slices: usize,
    /// Use the mean-gap direction when the whitened mean shift dominates.
    /// Only used by [`StrategyKind::Ppmm`].
    pub mean_adjust: bool,
}

impl Strategy {
    pub fn ppmm() -> Self {
        Self {
            kind: StrategyKind::Ppmm,
            slices: 1,
            mean_adjust: false,
        }
    }

    pub fn random() -> Self {
        Self {
            kind: StrategyKind::Random,
            slices: 1,
            mean_adjust: false,
        }
    }

    pub fn sliced(slices: usize) -> Self {
        Self {
            kind: StrategyKind::Sliced,
            slices,
            mean_adjust: false,
        }
    }

    pub fn with_mean_adjust(mut self, on: bool) -> Self {
        self.mean_adjust = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.slices == 0 {
            return Err(Error::InvalidParameter("slices must be >= 1".into()));
        }
        Ok(())
    }

    /// Directions used per iteration.
    pub fn group_size(&self) -> usize {
        match self.kind {
            StrategyKind::Sliced => self.slices,
            _ => 1,
        }
    }

    /// Parse `ppmm`, `ppmm+mean`, `random`, `sliced` (10 slices),
    /// `sliced20` or `sliced:20`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "ppmm" => return Ok(Self::ppmm()),
            "ppmm+mean" => return Ok(Self::ppmm().with_mean_adjust(true)),
            "random" => return Ok(Self::random()),
            "sliced" => return Ok(Self::sliced(10)),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("sliced") {
            let rest = rest
                .trim_start_matches([':', '(', '='])
                .trim_end_matches(')');
            let l: usize = rest
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad slice count in '{s}'")))?;
            let st = Self::sliced(l);
            st.validate()?;
            return Ok(st);
        }
        Err(Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StrategyKind::Ppmm if self.mean_adjust => write!(f, "ppmm+mean"),
            StrategyKind::Ppmm => write!(f, "ppmm"),
            StrategyKind::Random => write!(f, "random"),
            StrategyKind::Sliced => write!(f, "sliced{}", self.slices),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub max_iterations: usize,
    /// Relative change of the displacement estimate that counts as converged.
    pub tolerance: f64,
    /// Cost order.
    pub p: f64,
    pub seed: u64,
    pub ridge: f64,
    /// When false, `elapsed_ms` is recorded as zero so traces are
    /// reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-5,
            p: 2.0,
            seed: 0,
            ridge: DEFAULT_RIDGE,
            record_timing: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter("tolerance must be >= 0".into()));
        }
        if !(self.p >= 1.0) || self.p.fract() != 0.0 || !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "p must be a positive integer, got {}",
                self.p
            )));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidParameter("ridge must be >= 0".into()));
        }
        Ok(())
    }
}

/// One iteration of the estimate: a single `(direction, map)` pair for
/// ppmm/random, or `L` pairs whose displacements are averaged for sliced.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub directions: Vec<Direction>,
    pub maps: Vec<Map1D>,
}

/// The composed map `X ↦ X^{[K]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MongeMapEstimate {
    pub steps: Vec<Step>,
    pub source_dim: usize,
    pub strategy: Strategy,
    pub config: EngineConfig,
}

impl MongeMapEstimate {
    pub fn empty(source_dim: usize, strategy: Strategy, config: EngineConfig) -> Self {
        Self {
            steps: Vec::new(),
            source_dim,
            strategy,
            config,
        }
    }

    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    MaxIterations,
    Degenerate,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::MaxIterations => "max_iterations",
            Termination::Degenerate => "degenerate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tolerance" => Ok(Termination::Tolerance),
            "max_iterations" => Ok(Termination::MaxIterations),
            "degenerate" => Ok(Termination::Degenerate),
            other => Err(Error::InvalidParameter(format!(
                "unknown termination '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 1-based.
    pub iteration: usize,
    /// `Ŵ_p(X^{[k]}, X)`: cost of moving each source point to its image.
    pub w_hat_displacement: f64,
    /// 1D transport cost along this iteration's direction(s) before the step.
    pub w_hat_direction_proxy: f64,
    /// Leading SAVE eigenvalue, `-1` for the random baselines.
    pub save_lambda1: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
}

impl ConvergenceTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_displacement(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.w_hat_displacement)
    }

    pub fn total_ms(&self) -> f64 {
        self.records.iter().map(|r| r.elapsed_ms).sum()
    }
}

/// Everything [`fit`] produces.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub estimate: MongeMapEstimate,
    pub trace: ConvergenceTrace,
    /// `X^{[K]}`, the source sample after the last step.
    pub transported: Sample,
}

/// `(Σᵢ wᵢ ‖xᵢ − yᵢ‖^p)^{1/p}` over paired rows, weights taken from `x`.
pub fn empirical_wasserstein(x: &Sample, y: &Sample, p: f64) -> Result<f64> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            actual: y.n(),
        });
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    Ok(paired_cost(x.points(), y.points(), x.weights(), p))
}

fn paired_cost(a: &DMatrix<f64>, b: &DMatrix<f64>, weights: &DVector<f64>, p: f64) -> f64 {
    let n = a.nrows();
    let mut sq = vec![0.0; n];
    for j in 0..a.ncols() {
        let ca = a.column(j);
        let cb = b.column(j);
        for i in 0..n {
            let diff = ca[i] - cb[i];
            sq[i] += diff * diff;
        }
    }
    let total: f64 = sq
        .iter()
        .zip(weights.iter())
        .map(|(&s, &w)| w * if p == 2.0 { s } else { s.sqrt().powf(p) })
        .sum();
    total.powf(1.0 / p)
}

fn scalar_projection(sample: &Sample, projection: DVector<f64>) -> Result<ScalarSample> {
    let values = projection.data.into();
    if sample.is_uniform() {
        ScalarSample::uniform(values)
    } else {
        ScalarSample::weighted(values, sample.weights().as_slice().to_vec())
    }
}

/// `φ(t) − t` for each projected value.
fn displacement(map: &Map1D, projected: &DVector<f64>) -> DVector<f64> {
    projected.map(|t| map.apply(t) - t)
}

/// `X += (1/L) Σ_l δ_l ξ_lᵀ`
fn apply_displacements(points: &mut DMatrix<f64>, deltas: &[DVector<f64>], dirs: &[Direction]) {
    if deltas.len() == 1 {
        points.ger(1.0, &deltas[0], dirs[0].as_vector(), 1.0);
        return;
    }
    let mut update = DMatrix::zeros(points.nrows(), points.ncols());
    for (delta, dir) in deltas.iter().zip(dirs) {
        update.ger(1.0, delta, dir.as_vector(), 1.0);
    }
    *points += update / deltas.len() as f64;
}

fn check_direction(d: usize, dir: &Direction) -> Result<()> {
    if dir.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: dir.dim(),
        });
    }
    Ok(())
}

struct GroupStep {
    next: Sample,
    maps: Vec<Map1D>,
    /// p-th powers of the per-direction 1D costs.
    cost_pow: Vec<f64>,
}

fn group_step(x: &Sample, y: &Sample, dirs: &[Direction], p: f64) -> Result<GroupStep> {
    if dirs.is_empty() {
        return Err(Error::InvalidParameter("empty direction list".into()));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    let mut maps = Vec::with_capacity(dirs.len());
    let mut deltas = Vec::with_capacity(dirs.len());
    let mut cost_pow = Vec::with_capacity(dirs.len());
    for dir in dirs {
        check_direction(x.dim(), dir)?;
        let tx = x.project(dir.as_vector());
        let ty = y.project(dir.as_vector());
        let map = fit_1d_map(
            &scalar_projection(x, tx.clone())?,
            &scalar_projection(y, ty)?,
        )?;
        let delta = displacement(&map, &tx);
        cost_pow.push(
            delta
                .iter()
                .zip(x.weights().iter())
                .map(|(d, w)| w * d.abs().powf(p))
                .sum(),
        );
        deltas.push(delta);
        maps.push(map);
    }
    let mut next = x.clone();
    apply_displacements(next.points_mut(), &deltas, dirs);
    Ok(GroupStep {
        next,
        maps,
        cost_pow,
    })
}

/// One projection pursuit update along `direction`.
pub fn ppmm_step(x_current: &Sample, y: &Sample, direction: &Direction) -> Result<(Sample, Map1D)> {
    let mut g = group_step(x_current, y, std::slice::from_ref(direction), 2.0)?;
    Ok((g.next, g.maps.pop().expect("one map per direction")))
}

/// Average of the 1D displacement fields along `directions`, all fitted on
/// the same current sample.
pub fn sliced_step(
    x_current: &Sample,
    y: &Sample,
    directions: &[Direction],
) -> Result<(Sample, Vec<Map1D>)> {
    let g = group_step(x_current, y, directions, 2.0)?;
    Ok((g.next, g.maps))
}

/// Run the iterative estimator.
///
/// Stops when the relative change of `Ŵ_p(X^{[k]}, X)` between consecutive
/// iterations, `|W_k − W_{k−1}| / max(W_{k−1}, W_k, ε)`, is at most the
/// tolerance (with `W_0 = 0`), after `max_iterations`, or, for ppmm, when
/// neither second moments nor means differ anymore.
pub fn fit(
    x: &Sample,
    y: &Sample,
    strategy: Strategy,
    config: &EngineConfig,
) -> Result<FitOutcome> {
    strategy.validate()?;
    config.validate()?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    // fixed row order makes every floating-point sum independent of the
    // caller's row order
    let order = x.canonical_order();
    let x = &x.permute_rows(&order)?;
    let y = &y.permute_rows(&y.canonical_order())?;
    let d = x.dim();
    let p = config.p;
    let mut rng = RngState::new(config.seed);
    let mut estimate = MongeMapEstimate::empty(d, strategy, *config);
    let mut records = Vec::new();
    let mut current = x.clone();
    let mut previous_w = 0.0f64;
    let mut termination = Termination::MaxIterations;
    let target_moments = match strategy.kind {
        StrategyKind::Ppmm => Some(Moments::of(y)?),
        _ => None,
    };

    for iteration in 1..=config.max_iterations {
        let started = Instant::now();
        let mut degenerate = false;
        let (dirs, lambda1) = match strategy.kind {
            StrategyKind::Ppmm => {
                let my = target_moments.as_ref().expect("ppmm target moments");
                let mx = Moments::of(&current)?;
                let gap = mean_gap_from_moments(&mx, my)?;
                let (dir, dec) = match save_from_moments(&mx, my, config.ridge) {
                    Ok(found) => found,
                    // both samples collapsed to single points
                    Err(Error::DegenerateCovariance) => match gap {
                        Some(g) => {
                            let g = vec![g];
                            let step = group_step(&current, y, &g, p)?;
                            let w = paired_cost(step.next.points(), x.points(), x.weights(), p);
                            let proxy = step.cost_pow[0].powf(1.0 / p);
                            current = step.next;
                            estimate.steps.push(Step {
                                directions: g,
                                maps: step.maps,
                            });
                            records.push(TraceRecord {
                                iteration,
                                w_hat_displacement: w,
                                w_hat_direction_proxy: proxy,
                                save_lambda1: 0.0,
                                elapsed_ms: if config.record_timing {
                                    started.elapsed().as_secs_f64() * 1e3
                                } else {
                                    0.0
                                },
                            });
                            termination = Termination::Degenerate;
                            break;
                        }
                        None => {
                            termination = Termination::Degenerate;
                            break;
                        }
                    },
                    Err(e) => return Err(e),
                };
                degenerate = dec.degenerate && gap.is_none();
                let dir = match gap {
                    Some(g)
                        if strategy.mean_adjust
                            && shift_dominates(&(&my.mean - &mx.mean), &dec) =>
                    {
                        g
                    }
                    _ => dir,
                };
                (vec![dir], dec.leading_eigenvalue())
            }
            StrategyKind::Random => (vec![random_sphere_direction(d, &mut rng)?], -1.0),
            StrategyKind::Sliced => {
                let dirs = (0..strategy.slices)
                    .map(|_| random_sphere_direction(d, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                (dirs, -1.0)
            }
        };
        let g = group_step(&current, y, &dirs, p)?;
        if g.next.points().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIteration { iteration });
        }
        let proxy = (g.cost_pow.iter().sum::<f64>() / g.cost_pow.len() as f64).powf(1.0 / p);
        let w = paired_cost(g.next.points(), x.points(), x.weights(), p);
        if !w.is_finite() || !proxy.is_finite() {
            return Err(Error::NonFiniteIteration { iteration });
        }
        current = g.next;
        estimate.steps.push(Step {
            directions: dirs,
            maps: g.maps,
        });
        let elapsed_ms = if config.record_timing {
            started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        records.push(TraceRecord {
            iteration,
            w_hat_displacement: w,
            w_hat_direction_proxy: proxy,
            save_lambda1: lambda1,
            elapsed_ms,
        });

        if degenerate {
            termination = Termination::Degenerate;
            break;
        }
        let change = (w - previous_w).abs() / previous_w.max(w).max(ABS_EPS);
        if change <= config.tolerance {
            termination = Termination::Tolerance;
            break;
        }
        previous_w = w;
    }

    let mut inverse = vec![0; order.len()];
    for (i, &o) in order.iter().enumerate() {
        inverse[o] = i;
    }
    Ok(FitOutcome {
        estimate,
        trace: ConvergenceTrace {
            records,
            termination,
        },
        transported: current.permute_rows(&inverse)?,
    })
}

/// Push new points through every stored step. Maps clamp outside their
/// knot range.
pub fn apply_map(estimate: &MongeMapEstimate, points: &Sample) -> Result<Sample> {
    if points.dim() != estimate.source_dim {
        return Err(Error::DimensionMismatch {
            expected: estimate.source_dim,
            actual: points.dim(),
        });
    }
    let mut out = points.points().clone();
    for step in &estimate.steps {
        if step.directions.len() != step.maps.len() || step.directions.is_empty() {
            return Err(Error::InvalidEstimate(
                "step with mismatched directions and maps".into(),
            ));
        }
        let deltas: Vec<DVector<f64>> = step
            .directions
            .iter()
            .zip(&step.maps)
            .map(|(dir, map)| displacement(map, &(&out * dir.as_vector())))
            .collect();
        apply_displacements(&mut out, &deltas, &step.directions);
    }
    Ok(points.with_points_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{sample_gaussian, GaussianSpec};

    fn sample(rows: usize, cols: usize, data: &[f64]) -> Sample {
        Sample::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    fn e(d: usize, i: usize) -> Direction {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        Direction::new(v).unwrap()
    }

    #[test]
    fn wasserstein_examples() {
        let x = sample(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(empirical_wasserstein(&x, &x, 2.0).unwrap(), 0.0);
        let y = sample(2, 2, &[3.0, 4.0, 4.0, 5.0]);
        assert!((empirical_wasserstein(&x, &y, 2.0).unwrap() - 5.0).abs() < 1e-12);
        let a = sample(2, 1, &[0.0, 0.0]);
        let b = sample(2, 1, &[1.0, 3.0]);
        assert!((empirical_wasserstein(&a, &b, 2.0).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert!((empirical_wasserstein(&a, &b, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(empirical_wasserstein(&x, &a, 2.0).is_err());
    }

    #[test]
    fn step_update_arithmetic() {
        let x = sample(2, 2, &[1.0, 2.0, 0.0, 7.0]);
        let y = sample(2, 2, &[4.0, 0.0, 3.0, 0.0]);
        let (next, map) = ppmm_step(&x, &y, &e(2, 0)).unwrap();
        assert_eq!(map.apply(1.0), 4.0);
        assert_eq!(next.row(0).as_slice(), &[4.0, 2.0]);
        assert_eq!(next.row(1).as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn step_identity_when_projections_match() {
        let x = sample(3, 2, &[1.0, 2.0, 0.0, 7.0, -1.0, 3.0]);
        let y = sample(3, 2, &[0.0, 9.0, 1.0, -4.0, -1.0, 0.0]);
        let (next, _) = ppmm_step(&x, &y, &e(2, 0)).unwrap();
        assert_eq!(next.points(), x.points());
    }

    #[test]
    fn sliced_single_direction_matches_ppmm() {
        let mut rng = RngState::new(1);
        let x = sample_gaussian(&GaussianSpec::ar1(3, 0.0, 0.5).unwrap(), 50, &mut rng).unwrap();
        let y = sample_gaussian(&GaussianSpec::ar1(3, 1.0, 0.2).unwrap(), 50, &mut rng).unwrap();
        let dir = random_sphere_direction(3, &mut rng).unwrap();
        let (a, _) = ppmm_step(&x, &y, &dir).unwrap();
        let (b, maps) = sliced_step(&x, &y, std::slice::from_ref(&dir)).unwrap();
        assert_eq!(maps.len(), 1);
        assert_eq!(a.points(), b.points());
        let (c, _) = sliced_step(&x, &y, &[dir.clone(), dir.clone(), dir.clone()]).unwrap();
        assert!((a.points() - c.points()).amax() < 1e-12);
        let (same, _) = sliced_step(&x, &x, &[dir, e(3, 1)]).unwrap();
        assert_eq!(same.points(), x.points());
        assert!(sliced_step(&x, &y, &[]).is_err());
    }

    #[test]
    fn fit_identical_samples_is_degenerate() {
        let x = sample_gaussian(
            &GaussianSpec::ar1(3, 0.0, 0.5).unwrap(),
            100,
            &mut RngState::new(2),
        )
        .unwrap();
        let out = fit(&x, &x, Strategy::ppmm(), &EngineConfig::default()).unwrap();
        assert_eq!(out.trace.termination, Termination::Degenerate);
        assert_eq!(out.trace.iterations(), 1);
        assert!(out.trace.records[0].w_hat_displacement < 1e-8);
    }

    #[test]
    fn huge_tolerance_stops_after_one_iteration() {
        let mut rng = RngState::new(3);
        let x = sample_gaussian(&GaussianSpec::ar1(4, -2.0, 0.8).unwrap(), 200, &mut rng).unwrap();
        let y = sample_gaussian(&GaussianSpec::ar1(4, 2.0, 0.5).unwrap(), 200, &mut rng).unwrap();
        let cfg = EngineConfig {
            tolerance: 1.0,
            ..EngineConfig::default()
        };
        for st in [Strategy::ppmm(), Strategy::random(), Strategy::sliced(5)] {
            let out = fit(&x, &y, st, &cfg).unwrap();
            assert_eq!(out.trace.iterations(), 1, "{st}");
            assert_eq!(out.trace.termination, Termination::Tolerance);
        }
    }

    #[test]
    fn trace_and_estimate_lengths_agree() {
        let mut rng = RngState::new(4);
        let x = sample_gaussian(&GaussianSpec::ar1(3, -1.0, 0.8).unwrap(), 100, &mut rng).unwrap();
        let y = sample_gaussian(&GaussianSpec::ar1(3, 1.0, 0.5).unwrap(), 100, &mut rng).unwrap();
        let cfg = EngineConfig {
            max_iterations: 7,
            tolerance: 0.0,
            ..EngineConfig::default()
        };
        for st in [
            Strategy::ppmm(),
            Strategy::random(),
            Strategy::sliced(3),
            Strategy::ppmm().with_mean_adjust(true),
        ] {
            let out = fit(&x, &y, st, &cfg).unwrap();
            assert_eq!(out.trace.iterations(), 7);
            assert_eq!(out.estimate.iterations(), 7);
            assert_eq!(out.trace.termination, Termination::MaxIterations);
            for step in &out.estimate.steps {
                assert_eq!(step.directions.len(), st.group_size());
                for dir in &step.directions {
                    assert!((dir.as_vector().norm() - 1.0).abs() < 1e-10);
                }
            }
            let lambda_expected_negative = st.kind != StrategyKind::Ppmm;
            assert!(
                out.trace
                    .records
                    .iter()
                    .all(|r| (r.save_lambda1 < 0.0) == lambda_expected_negative
                        && r.elapsed_ms >= 0.0)
            );
        }
    }

    #[test]
    fn config_validation() {
        let x = sample(2, 1, &[0.0, 1.0]);
        let bad = [
            EngineConfig {
                max_iterations: 0,
                ..EngineConfig::default()
            },
            EngineConfig {
                tolerance: -1.0,
                ..EngineConfig::default()
            },
            EngineConfig {
                p: 1.5,
                ..EngineConfig::default()
            },
        ];
        for cfg in bad {
            assert!(fit(&x, &x, Strategy::random(), &cfg).is_err());
        }
        assert!(fit(&x, &x, Strategy::sliced(0), &EngineConfig::default()).is_err());
        let y = sample(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(fit(&x, &y, Strategy::random(), &EngineConfig::default()).is_err());
    }

    #[test]
    fn strategy_parse_and_display() {
        for s in ["ppmm", "random", "sliced10", "sliced50", "ppmm+mean"] {
            assert_eq!(Strategy::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(Strategy::parse("sliced:20").unwrap(), Strategy::sliced(20));
        assert_eq!(Strategy::parse("SLICED(10)").unwrap(), Strategy::sliced(10));
        assert!(Strategy::parse("sliced0").is_err());
        assert!(Strategy::parse("auction").is_err());
    }

    #[test]
    fn apply_map_empty_is_identity() {
        let x = sample(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let est = MongeMapEstimate::empty(2, Strategy::ppmm(), EngineConfig::default());
        assert_eq!(apply_map(&est, &x).unwrap(), x);
        let bad = sample(2, 1, &[1.0, 2.0]);
        assert!(apply_map(&est, &bad).is_err());
    }
}
