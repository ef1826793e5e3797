//! Source-only estimation of a Gaussian mean, evaluated on a shifted
//! target: `Z_i ~ N(m, σ²)`, `W = mean(Z)`, squared loss, target
//! `N(m', σ²)`.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Normal};

use super::config::{ExperimentKind, GaussianConfig, GaussianSimulation};
use super::output::ResultRow;
use super::{estimate, run_trials, ExperimentConfig, STREAM_GAUSSIAN};
use crate::bounds::{beta0_report, gaussian_example_exact, gaussian_example_report, CgfEnvelope, Side};
use crate::divergence::kl_scalar_gaussian;
use crate::error::{Error, Result};
use crate::mi::{default_bins, histogram_mi_with, HistogramOptions, TrialRecord};
use crate::model::{Hypothesis, Instance, RngStream};

/// One simulated training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTrial {
    pub w: f64,
    /// The first training sample, the representative for MI estimation.
    pub z1: f64,
    pub empirical_risk: f64,
    /// `L_target(W) - L̂(W)`.
    pub gen: f64,
    /// `L_target(W) - L_target(m')`.
    pub excess: f64,
}

/// Simulates one trial with `n` source samples.
pub fn gaussian_trial(g: &GaussianConfig, n: usize, rng: &RngStream) -> Result<GaussianTrial> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let sd = g.variance.sqrt();
    let mut r = rng.rng();
    let normal = Normal::new(g.source_mean, sd).map_err(|e| Error::invalid("variance", e.to_string()))?;
    let (w, z1, scatter) = match g.simulation {
        GaussianSimulation::Direct => {
            let zs: Vec<f64> = (0..n).map(|_| normal.sample(&mut r)).collect();
            let w = zs.iter().sum::<f64>() / n as f64;
            (w, zs[0], zs.iter().map(|z| (z - w).powi(2)).sum::<f64>())
        }
        GaussianSimulation::SufficientStatistics => {
            let z1 = normal.sample(&mut r);
            if n == 1 {
                (z1, z1, 0.0)
            } else {
                let rest = (n - 1) as f64;
                let e: f64 = r.sample(rand_distr::StandardNormal);
                let m_rest = g.source_mean + sd / rest.sqrt() * e;
                // Σ_{i≥2} (Z_i - M_rest)² ~ σ² χ²_{n-2}, independent of M_rest.
                let inner = if n > 2 {
                    g.variance * ChiSquared::new(rest - 1.0).expect("positive dof").sample(&mut r)
                } else {
                    0.0
                };
                let w = (z1 + rest * m_rest) / n as f64;
                (w, z1, inner + rest * (m_rest - w).powi(2) + (z1 - w).powi(2))
            }
        }
    };
    let empirical_risk = scatter / n as f64;
    let excess = (w - g.target_mean).powi(2);
    let population = excess + g.variance;
    Ok(GaussianTrial {
        w,
        z1,
        empirical_risk,
        gen: population - empirical_risk,
        excess,
    })
}

/// Per `n`: exact generalization error and MI, measured generalization
/// error over the configured trials, the closed-form bound, and the
/// `ψ*⁻¹` bound fed with the histogram MI estimate.
pub fn run_gaussian_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let ExperimentKind::GaussianMean(g) = &cfg.kind else {
        return Err(Error::Unsupported("not a Gaussian-mean configuration".into()));
    };
    cfg.validate()?;
    let c = &cfg.common;
    let root = RngStream::new(c.seed, STREAM_GAUSSIAN);
    let kl = kl_scalar_gaussian(g.source_mean, g.target_mean, g.variance)?;
    let bins = c.bins.unwrap_or_else(|| default_bins(c.trials, 1, 1));
    let opts = HistogramOptions {
        bins_per_dim: bins,
        miller_madow: c.miller_madow,
    };

    let mut rows = Vec::with_capacity(g.n_grid.len());
    for (gi, &n) in g.n_grid.iter().enumerate() {
        let trials = run_trials(c.trials, &root.child(gi as u64), |_, r| gaussian_trial(g, n, r))?;
        let gens: Vec<f64> = trials.iter().map(|t| t.gen).collect();
        let excesses: Vec<f64> = trials.iter().map(|t| t.excess).collect();
        let gen = estimate(&gens);
        let excess = estimate(&excesses);

        let pairs: Vec<(Vec<f64>, Vec<f64>)> = trials.iter().map(|t| (vec![t.w], vec![t.z1])).collect();
        let mi = histogram_mi_with(&pairs, opts)?;

        let env = CgfEnvelope::gaussian_example(n, g.variance, g.target_mean - g.source_mean)?;
        let mi_report = beta0_report(&env, &vec![mi.value; n], kl, n, Side::Minus)?;
        let closed = gaussian_example_report(n, g.variance, kl)?;
        let (exact_gen, exact_mi) = gaussian_example_exact(n, g.variance, kl)?;

        let mut flags = Vec::new();
        if mi.degenerate {
            flags.push("mi-degenerate".to_string());
        }
        rows.push(ResultRow {
            experiment: "gaussian".into(),
            grid_key: "n".into(),
            grid_value: n,
            n,
            alpha: 0.0,
            beta: 0.0,
            trials: c.trials,
            measured_gen: gen.value,
            measured_gen_stderr: gen.stderr,
            measured_excess: Some(excess.value),
            measured_excess_stderr: Some(excess.stderr),
            exact_gen: Some(exact_gen),
            exact_mi: Some(exact_mi),
            mi_target: None,
            mi_source: Some(mi.value),
            kl,
            mi_bound: mi_report.total,
            closed_form_bound: Some(closed.total),
            flags,
            reports: vec![mi_report, closed],
            trial_records: if c.keep_records {
                trials
                    .iter()
                    .map(|t| TrialRecord {
                        w: Hypothesis::scalar(t.w),
                        z_source_rep: Instance::scalar(t.z1),
                        z_target_rep: None,
                    })
                    .collect()
            } else {
                Vec::new()
            },
            ..Default::default()
        });
    }
    Ok(rows)
}
