//! Projection pursuit Monge map estimation.
//!
//! Estimates the optimal transport (Monge) map between two empirical samples
//! by repeatedly solving one-dimensional transport problems along chosen
//! projection directions. The default strategy picks each direction with
//! sliced average variance estimation (SAVE) on the current residual
//! discrepancy; random-direction and sliced-average baselines are included
//! for comparison, together with exact oracles (closed-form Gaussian W₂, a
//! small discrete transport solver) and a reproducible experiment harness.
//!
//! ```no_run
//! use ppmm::{fit, sample_gaussian, EngineConfig, GaussianSpec, RngState, Strategy};
//!
//! let mut rng = RngState::new(1);
//! let x = sample_gaussian(&GaussianSpec::ar1(10, -2.0, 0.8)?, 2000, &mut rng)?;
//! let y = sample_gaussian(&GaussianSpec::ar1(10, 2.0, 0.5)?, 2000, &mut rng)?;
//! let out = fit(&x, &y, Strategy::ppmm(), &EngineConfig::default())?;
//! println!("W2 estimate {}", out.trace.final_displacement());
//! # Ok::<(), ppmm::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod directions;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod sample;
pub mod transport1d;

pub use directions::{
    mean_gap_direction, mean_shift_dominates, random_sphere_direction, save_direction,
    weighted_covariance, Direction, Moments, SaveDecomposition,
};
pub use engine::{
    apply_map, empirical_wasserstein, fit, ppmm_step, read_estimate, read_trace_csv, sliced_step,
    write_estimate, write_trace_csv, ConvergenceTrace, EngineConfig, FitOutcome, MongeMapEstimate,
    Step, Strategy, StrategyKind, Termination, TraceRecord,
};
pub use error::{Error, Result};
pub use linalg::MatrixRoot;
pub use oracle::{closed_form_w2, exact_discrete_w2};
pub use par::Execution;
pub use rng::RngState;
pub use sample::{ar1_covariance, load_sample, sample_gaussian, save_sample, GaussianSpec, Sample};
pub use transport1d::{
    apply_1d_map, exact_assignment_cost, fit_1d_map, Extrapolation, Map1D, ScalarSample,
};
