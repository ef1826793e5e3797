//! Empirical, weighted-empirical and population risks, and the distance
//! `d_W(μ, μ') = sup_w |L_μ(w) - L_μ'(w)|`.
//!
//! Generalization error is `L_target(W) - L̂_α(W, S, S')`.

use crate::error::{ensure_positive, Error, Result};
use crate::grid::GridSearch;
use crate::model::{sample_with, DistributionSpec, Hypothesis, Instance, Loss, LossModel, RngStream, TransferDataset};

/// Mixing weight `α` of the target empirical risk, and the target fraction `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskWeights {
    alpha: f64,
    beta: f64,
}

impl RiskWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid("alpha", format!("must lie in [0,1], got {alpha}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid("beta", format!("must lie in [0,1), got {beta}")));
        }
        if beta == 0.0 && alpha != 0.0 {
            return Err(Error::invalid(
                "alpha",
                "no target samples (β = 0) requires α = 0",
            ));
        }
        Ok(RiskWeights { alpha, beta })
    }

    /// Source-only training: `α = β = 0`.
    pub fn source_only() -> Self {
        RiskWeights {
            alpha: 0.0,
            beta: 0.0,
        }
    }

    /// `α = β = n_t / (n_s + n_t)`.
    pub fn balanced(n_target: usize, n_source: usize) -> Result<Self> {
        let beta = n_target as f64 / (n_target + n_source) as f64;
        Self::new(beta, beta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `L_α(w) = (1 - α) L_μ(w) + α L_μ'(w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedPopulationRisk {
    pub value: f64,
    pub alpha: f64,
}

impl MixedPopulationRisk {
    pub fn new(source_risk: f64, target_risk: f64, alpha: f64) -> Self {
        MixedPopulationRisk {
            value: (1.0 - alpha) * source_risk + alpha * target_risk,
            alpha,
        }
    }
}

/// A Monte Carlo (or exact) mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// Sample mean and standard error of the mean.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Estimate {
                value: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Estimate {
                value: mean,
                stderr: f64::NAN,
            };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }
}

pub(crate) fn mean_loss<L: Loss + ?Sized>(loss: &L, w: &[f64], samples: &[Instance]) -> f64 {
    samples.iter().map(|z| loss.eval(w, z)).sum::<f64>() / samples.len() as f64
}

/// `L̂(w, S) = (1/m) Σ ℓ(w, Z_i)`.
pub fn empirical_risk<L: Loss + ?Sized>(loss: &L, w: &Hypothesis, samples: &[Instance]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    Ok(mean_loss(loss, &w.w, samples))
}

/// `L̂_α(w) = α L̂(w, S') + (1 - α) L̂(w, S)`.
pub fn weighted_empirical_risk<L: Loss + ?Sized>(
    loss: &L,
    w: &Hypothesis,
    data: &TransferDataset,
    weights: &RiskWeights,
) -> Result<f64> {
    weighted_risk_raw(loss, &w.w, data, weights)
}

pub(crate) fn weighted_risk_raw<L: Loss + ?Sized>(
    loss: &L,
    w: &[f64],
    data: &TransferDataset,
    weights: &RiskWeights,
) -> Result<f64> {
    let a = weights.alpha();
    let target = if a > 0.0 {
        if data.target().is_empty() {
            return Err(Error::invalid(
                "alpha",
                "α > 0 needs at least one target sample",
            ));
        }
        a * mean_loss(loss, w, data.target())
    } else {
        0.0
    };
    let source = if a < 1.0 {
        (1.0 - a) * mean_loss(loss, w, data.source())
    } else {
        0.0
    };
    Ok(target + source)
}

/// Gradient of `L̂_α` at `w`, written into `out`.
pub(crate) fn weighted_gradient<L: Loss + ?Sized>(
    loss: &L,
    w: &[f64],
    data: &TransferDataset,
    weights: &RiskWeights,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let mut g = vec![0.0; w.len()];
    let a = weights.alpha();
    for (samples, weight) in [(data.target(), a), (data.source(), 1.0 - a)] {
        if weight == 0.0 || samples.is_empty() {
            continue;
        }
        let scale = weight / samples.len() as f64;
        for z in samples {
            loss.gradient_into(w, z, &mut g);
            for (o, gi) in out.iter_mut().zip(&g) {
                *o += scale * gi;
            }
        }
    }
}

/// `L_spec(w)`. Squared error under a scalar Gaussian uses the closed form
/// `(w - m)² + σ²`; everything else is a Monte Carlo mean over
/// `mc_samples` fresh draws.
pub fn population_risk(
    loss: &LossModel,
    w: &Hypothesis,
    spec: &DistributionSpec,
    mc_samples: usize,
    rng: &RngStream,
) -> Result<Estimate> {
    if mc_samples == 0 {
        return Err(Error::invalid("mc_samples", "must be positive"));
    }
    if let (LossModel::SquaredError, DistributionSpec::ScalarGaussian { mean, variance }) = (loss, spec) {
        return Ok(Estimate::exact(squared_gaussian_risk(w.w[0], *mean, *variance)));
    }
    population_risk_mc(loss, w, spec, mc_samples, rng)
}

/// Monte Carlo branch of [`population_risk`], available for every pair.
pub fn population_risk_mc<L: Loss + ?Sized>(
    loss: &L,
    w: &Hypothesis,
    spec: &DistributionSpec,
    mc_samples: usize,
    rng: &RngStream,
) -> Result<Estimate> {
    if mc_samples == 0 {
        return Err(Error::invalid("mc_samples", "must be positive"));
    }
    let mut g = rng.rng();
    const BATCH: usize = 4096;
    let mut remaining = mc_samples;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    while remaining > 0 {
        let m = remaining.min(BATCH);
        for z in sample_with(spec, m, &mut g) {
            let l = loss.eval(&w.w, &z);
            sum += l;
            sumsq += l * l;
        }
        remaining -= m;
    }
    let n = mc_samples as f64;
    let mean = sum / n;
    let var = if mc_samples > 1 {
        ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    })
}

pub fn squared_gaussian_risk(w: f64, mean: f64, variance: f64) -> f64 {
    (w - mean).powi(2) + variance
}

/// `gen(W) = L_target(W) - L̂_α(W, S, S')` for one realised hypothesis.
pub fn generalization_error_measured(
    loss: &LossModel,
    w: &Hypothesis,
    data: &TransferDataset,
    weights: &RiskWeights,
    target_spec: &DistributionSpec,
    mc_samples: usize,
    rng: &RngStream,
) -> Result<Estimate> {
    let pop = population_risk(loss, w, target_spec, mc_samples, rng)?;
    let emp = weighted_empirical_risk(loss, w, data, weights)?;
    Ok(Estimate {
        value: pop.value - emp,
        stderr: pop.stderr,
    })
}

/// Exact `d_W` for squared loss between two scalar Gaussians over the
/// hypothesis interval `[-radius, radius]`.
///
/// The risk gap `(w - m)² - (w - m')² = 2w(m' - m) + m² - m'²` is affine in
/// `w`, so the supremum sits at an endpoint.
pub fn d_w_exact_quadratic(
    spec_source: &DistributionSpec,
    spec_target: &DistributionSpec,
    radius: f64,
) -> Result<f64> {
    ensure_positive("radius", radius)?;
    match (spec_source, spec_target) {
        (
            DistributionSpec::ScalarGaussian { mean: m, variance: vs },
            DistributionSpec::ScalarGaussian { mean: mp, variance: vt },
        ) => {
            let gap = |w: f64| {
                (squared_gaussian_risk(w, *m, *vs) - squared_gaussian_risk(w, *mp, *vt)).abs()
            };
            Ok(gap(radius).max(gap(-radius)))
        }
        _ => Err(Error::Unsupported(
            "exact d_W needs two scalar Gaussian specs".into(),
        )),
    }
}

/// Plug-in `d̂_W = sup_{‖w‖ ≤ R} |L̂(w, S) - L̂(w, S')|` by grid search.
pub fn d_w_empirical<L: Loss + ?Sized>(
    loss: &L,
    s: &[Instance],
    s_prime: &[Instance],
    search: &GridSearch,
) -> Result<f64> {
    if s.is_empty() || s_prime.is_empty() {
        return Err(Error::Empty("d_W samples"));
    }
    let dim = hypothesis_dim(&s[0]);
    let (_, v) = search.maximize(dim, |w| (mean_loss(loss, w, s) - mean_loss(loss, w, s_prime)).abs())?;
    Ok(v.max(0.0))
}

/// Hypothesis dimension implied by an instance: the feature dimension.
pub(crate) fn hypothesis_dim(z: &Instance) -> usize {
    z.x.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample;
    use approx::assert_relative_eq;

    fn scalars(v: &[f64]) -> Vec<Instance> {
        v.iter().map(|&z| Instance::scalar(z)).collect()
    }

    #[test]
    fn empirical_risk_basic() {
        let r = empirical_risk(&LossModel::SquaredError, &Hypothesis::scalar(0.0), &scalars(&[1.0, -1.0])).unwrap();
        assert_eq!(r, 1.0);
        assert!(empirical_risk(&LossModel::SquaredError, &Hypothesis::scalar(0.0), &[]).is_err());
    }

    #[test]
    fn logistic_risk_at_origin() {
        let s = sample(&DistributionSpec::logistic_source(), 5, &RngStream::new(1, 2)).unwrap();
        let r = empirical_risk(&LossModel::LogisticCrossEntropy, &Hypothesis::zeros(2), &s).unwrap();
        assert_relative_eq!(r, std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn empirical_risk_matches_direct_sum() {
        let s = sample(&DistributionSpec::logistic_target(), 1000, &RngStream::new(2, 2)).unwrap();
        let l = LossModel::LogisticCrossEntropy;
        let w = Hypothesis::new(vec![0.4, -1.1]);
        let direct: f64 = s.iter().map(|z| l.loss_eval(&w, z).unwrap()).sum::<f64>() / 1000.0;
        assert!((empirical_risk(&l, &w, &s).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn weighted_risk_hand_arithmetic() {
        let data = TransferDataset::new(scalars(&[1.0, 3.0]), scalars(&[0.0, 2.0])).unwrap();
        let w = Hypothesis::scalar(0.0);
        // target losses {1, 9} mean 5; source {0, 4} mean 2
        let r = weighted_empirical_risk(&LossModel::SquaredError, &w, &data, &RiskWeights::new(0.3, 0.5).unwrap()).unwrap();
        assert_relative_eq!(r, 0.3 * 5.0 + 0.7 * 2.0, epsilon = 1e-14);
        let only_target = weighted_empirical_risk(&LossModel::SquaredError, &w, &data, &RiskWeights::new(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(only_target, 5.0);
    }

    #[test]
    fn alpha_equal_beta_is_plain_mean() {
        let data = TransferDataset::new(scalars(&[1.0, 3.0, -2.0]), scalars(&[0.5, 2.0, 7.0])).unwrap();
        let w = Hypothesis::scalar(0.25);
        let l = LossModel::SquaredError;
        let weighted = weighted_empirical_risk(&l, &w, &data, &RiskWeights::new(0.5, 0.5).unwrap()).unwrap();
        let all: Vec<Instance> = data.all().cloned().collect();
        assert!((weighted - empirical_risk(&l, &w, &all).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn weights_validation() {
        assert!(RiskWeights::new(0.2, 0.0).is_err());
        assert!(RiskWeights::new(1.2, 0.5).is_err());
        assert!(RiskWeights::new(0.5, 1.0).is_err());
        let w = RiskWeights::balanced(100, 2000).unwrap();
        assert_eq!(w.alpha(), 100.0 / 2100.0);
        assert_eq!(w.alpha(), w.beta());
    }

    #[test]
    fn alpha_positive_needs_targets() {
        let data = TransferDataset::source_only(scalars(&[1.0])).unwrap();
        let w = RiskWeights { alpha: 0.5, beta: 0.0 };
        assert!(weighted_empirical_risk(&LossModel::SquaredError, &Hypothesis::scalar(0.0), &data, &w).is_err());
    }

    #[test]
    fn population_risk_closed_form() {
        let spec = DistributionSpec::scalar_gaussian(1.0, 1.0).unwrap();
        let r = population_risk(&LossModel::SquaredError, &Hypothesis::scalar(0.0), &spec, 1, &RngStream::new(0, 0)).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.stderr, 0.0);
        let s2 = DistributionSpec::scalar_gaussian(0.7, 2.5).unwrap();
        let at_mean = population_risk(&LossModel::SquaredError, &Hypothesis::scalar(0.7), &s2, 1, &RngStream::new(0, 0)).unwrap();
        assert_eq!(at_mean.value, 2.5);
    }

    #[test]
    fn closed_form_agrees_with_mc() {
        let spec = DistributionSpec::scalar_gaussian(0.3, 1.7).unwrap();
        let mut g = RngStream::new(99, 1).rng();
        use rand::Rng;
        for k in 0..20 {
            let w = Hypothesis::scalar(g.random_range(-3.0..3.0));
            let exact = population_risk(&LossModel::SquaredError, &w, &spec, 1, &RngStream::new(0, 0)).unwrap();
            let mc = population_risk_mc(&LossModel::SquaredError, &w, &spec, 200_000, &RngStream::new(5, k)).unwrap();
            assert!((exact.value - mc.value).abs() <= 4.0 * mc.stderr, "{} vs {}±{}", exact.value, mc.value, mc.stderr);
        }
    }

    #[test]
    fn d_w_exact_examples() {
        let r = |m: f64, mp: f64| {
            d_w_exact_quadratic(
                &DistributionSpec::scalar_gaussian(m, 1.0).unwrap(),
                &DistributionSpec::scalar_gaussian(mp, 1.0).unwrap(),
                3.0,
            )
            .unwrap()
        };
        assert_eq!(r(0.0, 0.0), 0.0);
        assert_eq!(r(0.0, 1.0), 7.0);
        assert_eq!(r(0.0, -1.0), 7.0);
        assert!(d_w_exact_quadratic(&DistributionSpec::logistic_source(), &DistributionSpec::logistic_target(), 3.0).is_err());
    }

    #[test]
    fn d_w_empirical_identical_is_zero() {
        let s = sample(&DistributionSpec::logistic_source(), 200, &RngStream::new(1, 1)).unwrap();
        let v = d_w_empirical(&LossModel::LogisticCrossEntropy, &s, &s, &GridSearch::for_dim(2, 3.0).with_resolution(16)).unwrap();
        assert_eq!(v, 0.0);
        assert!(d_w_empirical(&LossModel::LogisticCrossEntropy, &s, &[], &GridSearch::for_dim(2, 3.0)).is_err());
    }

    #[test]
    fn d_w_empirical_close_to_exact_quadratic() {
        let src = DistributionSpec::scalar_gaussian(0.0, 1.0).unwrap();
        let tgt = DistributionSpec::scalar_gaussian(1.0, 1.0).unwrap();
        let s = sample(&src, 50_000, &RngStream::new(4, 1)).unwrap();
        let sp = sample(&tgt, 50_000, &RngStream::new(4, 2)).unwrap();
        let est = d_w_empirical(&LossModel::SquaredError, &s, &sp, &GridSearch::for_dim(1, 3.0)).unwrap();
        let exact = d_w_exact_quadratic(&src, &tgt, 3.0).unwrap();
        assert!((est - exact).abs() <= 0.05 * exact, "{est} vs {exact}");
    }
}
