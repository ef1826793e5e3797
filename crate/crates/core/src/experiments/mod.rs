//! End-to-end experiments: the Gaussian mean example, logistic-regression
//! transfer, and noisy gradient descent. Each produces one [`ResultRow`]
//! per grid point.
//!
//! Randomness is organised as a tree of [`RngStream`]s: grid point `g`
//! draws from `root.child(g)` and trial `k` inside it from a further
//! `child(k)`, so rows are reproducible individually and independent of
//! thread scheduling.

pub mod config;
pub mod gaussian;
pub mod logistic;
pub mod noisy_gd;
pub mod output;
pub mod parts;

pub use config::{Experiment, ExperimentConfig, ExperimentKind, Preset};
pub use gaussian::run_gaussian_experiment;
pub use logistic::run_logistic_experiment;
pub use noisy_gd::run_noisy_gd_experiment;
pub use output::{emit_csv, write_csv, ResultRow};
pub use parts::evaluate_parts;

use crate::error::{Error, Result};
use crate::model::{sample, DistributionSpec, Instance, Loss, LossModel, RngStream};
use crate::par;
use crate::risk::{squared_gaussian_risk, Estimate};

/// Runs whichever experiment `cfg` describes.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    match cfg.experiment() {
        Experiment::GaussianMean => run_gaussian_experiment(cfg),
        Experiment::LogisticTransfer => run_logistic_experiment(cfg),
        Experiment::NoisyGd => run_noisy_gd_experiment(cfg),
    }
}

// Root stream ids, one per purpose.
const STREAM_GAUSSIAN: u64 = 1;
const STREAM_LOGISTIC: u64 = 2;
const STREAM_NOISY_GD: u64 = 3;
// Children of an experiment root that are not grid points.
const AUX_KL: u64 = 1 << 32;
const AUX_POOL: u64 = (1 << 32) + 1;
const AUX_W_STAR: u64 = (1 << 32) + 2;
const AUX_PROBE: u64 = (1 << 32) + 3;

/// `f(k, rng.child(k))` for `k < count`, in index order.
pub(crate) fn run_trials<T, F>(count: usize, rng: &RngStream, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &RngStream) -> Result<T> + Sync,
{
    par::map_indexed(count, |k| f(k, &rng.child(k as u64)))
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::TrialFailed {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Target population risk `L_μ'(w)`: exact for squared loss under a scalar
/// Gaussian, otherwise the mean over a fixed evaluation pool shared by all
/// trials (common random numbers).
pub(crate) enum TargetRisk {
    ClosedForm { mean: f64, variance: f64 },
    Pool(Vec<Instance>),
}

impl TargetRisk {
    pub(crate) fn new(loss: &LossModel, spec: &DistributionSpec, pool_size: usize, rng: &RngStream) -> Result<Self> {
        match (loss, spec) {
            (LossModel::SquaredError, DistributionSpec::ScalarGaussian { mean, variance }) => {
                Ok(TargetRisk::ClosedForm {
                    mean: *mean,
                    variance: *variance,
                })
            }
            _ => Ok(TargetRisk::Pool(sample(spec, pool_size, rng)?)),
        }
    }

    pub(crate) fn eval(&self, loss: &LossModel, w: &[f64]) -> f64 {
        match self {
            TargetRisk::ClosedForm { mean, variance } => squared_gaussian_risk(w[0], *mean, *variance),
            TargetRisk::Pool(pool) => pool.iter().map(|z| loss.eval(w, z)).sum::<f64>() / pool.len() as f64,
        }
    }
}

pub(crate) fn estimate(xs: &[f64]) -> Estimate {
    Estimate::from_samples(xs)
}
