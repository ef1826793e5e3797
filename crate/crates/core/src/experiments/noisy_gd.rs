//! Noisy gradient descent: measured generalization error of `W(T)` against
//! the information-budget bound, for each `T` in a grid.

use super::config::ExperimentKind;
use super::output::ResultRow;
use super::{estimate, run_trials, ExperimentConfig, TargetRisk, AUX_KL, AUX_POOL, AUX_PROBE, STREAM_NOISY_GD};
use crate::bounds::{noisy_gd_info_budget, noisy_gd_report, NoisyGdSchedule, SubgaussianProxy};
use crate::divergence::kl_divergence;
use crate::error::{Error, Result};
use crate::grid::GridSearch;
use crate::mi::TrialRecord;
use crate::model::{norm, Hypothesis, RngStream, TransferDataset};
use crate::optimizers::{grad_norm_bound_estimate, noisy_gd_run};
use crate::risk::{weighted_risk_raw, RiskWeights};

const GRAD_PROBES: usize = 10_000;

struct NoisyTrial {
    record: TrialRecord,
    /// Generalization error of `W(T)` for each `T` in the grid.
    gens: Vec<f64>,
    k_violation: bool,
    max_iterate_norm: f64,
}

/// Runs `max(T grid)` noisy steps per trial and reads off `W(T)` for every
/// grid value, so all rows share trials.
///
/// `r²` is the empirical loss range over the first trial's target sample
/// and every hypothesis within the largest iterate norm seen in any trial.
pub fn run_noisy_gd_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let ExperimentKind::NoisyGd(g) = &cfg.kind else {
        return Err(Error::Unsupported("not a noisy-GD configuration".into()));
    };
    cfg.validate()?;
    let c = &cfg.common;
    let root = RngStream::new(c.seed, STREAM_NOISY_GD);
    let d = g.source.feature_dim();
    let weights = RiskWeights::new(g.alpha, g.beta)?;
    let radius_hint = 3.0;

    let k_st = match g.k_st {
        Some(k) => k,
        None => grad_norm_bound_estimate(&g.loss, radius_hint, &g.source, &g.target, GRAD_PROBES, &root.child(AUX_PROBE))?
            .preferred(),
    };
    let t_max = *g.t_grid.iter().max().expect("validated nonempty");
    let schedule = NoisyGdSchedule::constant(t_max, g.eta, g.noise_sigma, d, k_st, g.noise)?;
    let kl = kl_divergence(&g.source, &g.target, c.mc_samples, &root.child(AUX_KL))?.value;
    let target_risk = TargetRisk::new(&g.loss, &g.target, c.mc_samples, &root.child(AUX_POOL))?;
    let w0 = Hypothesis::new(g.w0.clone().unwrap_or_else(|| vec![0.0; d]));

    let draw = |r: &RngStream| TransferDataset::sample(&g.source, &g.target, g.beta, g.n, &r.child(0));
    let trials = run_trials(c.trials, &root.child(0), |_, r| {
        let data = draw(r)?;
        let trace = noisy_gd_run(&g.loss, &data, &weights, &schedule, &w0, &r.child(1))?;
        let gens = g
            .t_grid
            .iter()
            .map(|&t| {
                let w = &trace.iterates[t].w;
                Ok(target_risk.eval(&g.loss, w) - weighted_risk_raw(&g.loss, w, &data, &weights)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(NoisyTrial {
            record: TrialRecord {
                w: trace.last().clone(),
                z_source_rep: data.source()[0].clone(),
                z_target_rep: data.target().first().cloned(),
            },
            gens,
            k_violation: trace.k_violation,
            max_iterate_norm: trace.iterates.iter().map(|h| norm(&h.w)).fold(0.0, f64::max),
        })
    })?;

    let data0 = draw(&root.child(0).child(0))?;
    let trace0 = noisy_gd_run(&g.loss, &data0, &weights, &schedule, &w0, &root.child(0).child(0).child(1))?;
    let reach = trials.iter().map(|t| t.max_iterate_norm).fold(0.0, f64::max);
    let search = GridSearch::for_dim(d, (reach * 2.0).ceil().max(1.0) / 2.0).with_resolution(g.grid_resolution);
    let trajectory: Vec<Vec<f64>> = trace0.iterates.iter().map(|h| h.w.clone()).collect();
    let r2 = SubgaussianProxy::empirical(&g.loss, data0.target(), &search, &trajectory)?;
    let violations = trials.iter().filter(|t| t.k_violation).count();

    let mut rows = Vec::with_capacity(g.t_grid.len());
    for (i, &t) in g.t_grid.iter().enumerate() {
        let sched = schedule.truncated(t)?;
        let budget = noisy_gd_info_budget(&sched)?;
        let report = noisy_gd_report(&sched, r2.r2, kl, &weights, g.n)?;
        let gens: Vec<f64> = trials.iter().map(|tr| tr.gens[i]).collect();
        let gen = estimate(&gens);
        let mut flags = Vec::new();
        if violations > 0 {
            flags.push(format!("k-violation={violations}"));
        }
        rows.push(ResultRow {
            experiment: "noisy-gd".into(),
            grid_key: "T".into(),
            grid_value: t,
            n: g.n,
            alpha: weights.alpha(),
            beta: weights.beta(),
            trials: c.trials,
            measured_gen: gen.value,
            measured_gen_stderr: gen.stderr,
            kl,
            r2: Some(r2.r2),
            info_budget: Some(budget),
            k_st: Some(k_st),
            mi_bound: report.total,
            k_violations: Some(violations),
            flags,
            reports: vec![report],
            trial_records: if c.keep_records && i == 0 {
                trials.iter().map(|t| t.record.clone()).collect()
            } else {
                Vec::new()
            },
            trace: (c.keep_records && i == 0).then(|| trace0.clone()),
            ..Default::default()
        });
    }
    Ok(rows)
}
