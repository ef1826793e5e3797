//! Domain types: instances, hypotheses, the two distribution families,
//! loss functions and seeded random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Sigmoid probabilities are clamped to `[P_CLAMP, 1 - P_CLAMP]` before logs.
pub const P_CLAMP: f64 = 1e-12;

/// One training example `z = (x, y)`.
///
/// For the scalar Gaussian family the instance is the scalar `z` itself
/// (stored as a 1-vector `x`) and `y` is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub x: Vec<f64>,
    pub y: Option<u8>,
}

impl Instance {
    pub fn scalar(z: f64) -> Self {
        Instance { x: vec![z], y: None }
    }

    pub fn labeled(x: Vec<f64>, y: u8) -> Self {
        Instance { x, y: Some(y) }
    }

    /// Flat numeric view `(x..., y)` used by histogram estimators.
    pub fn features(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        if let Some(y) = self.y {
            v.push(f64::from(y));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainTag {
    Source,
    Target,
}

impl std::fmt::Display for DomainTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainTag::Source => f.write_str("source"),
            DomainTag::Target => f.write_str("target"),
        }
    }
}

/// Number of target samples `round(βn)` and source samples `n - round(βn)`.
pub fn split_counts(beta: f64, n: usize) -> (usize, usize) {
    let target = (beta * n as f64).round() as usize;
    let target = target.min(n);
    (target, n - target)
}

/// `βn` target samples followed by `(1-β)n` source samples.
#[derive(Debug, Clone)]
pub struct TransferDataset {
    target: Vec<Instance>,
    source: Vec<Instance>,
    beta: f64,
}

impl TransferDataset {
    /// Wraps existing samples; `β` is the target fraction.
    pub fn new(target: Vec<Instance>, source: Vec<Instance>) -> Result<Self> {
        let n = target.len() + source.len();
        if n == 0 {
            return Err(Error::Empty("transfer dataset"));
        }
        if source.is_empty() {
            return Err(Error::invalid(
                "beta",
                "β must be < 1: at least one source sample is required",
            ));
        }
        let beta = target.len() as f64 / n as f64;
        Ok(TransferDataset {
            target,
            source,
            beta,
        })
    }

    pub fn source_only(source: Vec<Instance>) -> Result<Self> {
        Self::new(Vec::new(), source)
    }

    /// Draws `round(βn)` target and the remaining source samples.
    pub fn sample(
        source: &DistributionSpec,
        target: &DistributionSpec,
        beta: f64,
        n: usize,
        rng: &RngStream,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid("beta", format!("must lie in [0,1), got {beta}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        let (n_t, n_s) = split_counts(beta, n);
        let target_samples = if n_t > 0 {
            sample(target, n_t, &rng.child(0))?
        } else {
            Vec::new()
        };
        let source_samples = sample(source, n_s, &rng.child(1))?;
        Self::new(target_samples, source_samples)
    }

    pub fn target(&self) -> &[Instance] {
        &self.target
    }

    pub fn source(&self) -> &[Instance] {
        &self.source
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.target.len() + self.source.len()
    }

    /// Target then source, in training order.
    pub fn all(&self) -> impl Iterator<Item = &Instance> {
        self.target.iter().chain(self.source.iter())
    }
}

/// A weight vector, optionally constrained to a Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub w: Vec<f64>,
    pub constraint_radius: Option<f64>,
}

impl Hypothesis {
    pub fn new(w: Vec<f64>) -> Self {
        Hypothesis {
            w,
            constraint_radius: None,
        }
    }

    /// Constrained hypothesis; fails if `w` lies outside the ball.
    pub fn constrained(w: Vec<f64>, radius: f64) -> Result<Self> {
        ensure_positive("constraint_radius", radius)?;
        if norm(&w) > radius * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "w",
                format!("‖w‖ = {} exceeds radius {radius}", norm(&w)),
            ));
        }
        Ok(Hypothesis {
            w,
            constraint_radius: Some(radius),
        })
    }

    pub fn scalar(w: f64) -> Self {
        Hypothesis::new(vec![w])
    }

    pub fn zeros(d: usize) -> Self {
        Hypothesis::new(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection onto the ball of the given radius.
///
/// The result's computed norm never exceeds `radius`, so projecting twice
/// is the same as projecting once.
pub fn project_ball(w: &mut [f64], radius: f64) {
    let r = norm(w);
    if r > radius {
        let mut s = radius / r;
        // Rounding in the rescale can leave the norm an ulp above the radius.
        for _ in 0..4 {
            let scaled: Vec<f64> = w.iter().map(|a| a * s).collect();
            if norm(&scaled) <= radius {
                w.copy_from_slice(&scaled);
                return;
            }
            s *= 1.0 - f64::EPSILON;
        }
        w.iter_mut().for_each(|a| *a *= s);
    }
}

/// The two parametric families: scalar Gaussians for the mean-estimation
/// example and box-truncated diagonal Gaussians with logistic labels.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    ScalarGaussian {
        mean: f64,
        variance: f64,
    },
    TruncatedGaussianLogistic {
        mean: [f64; 2],
        diag_variance: [f64; 2],
        box_halfwidth: f64,
        label_weights: [f64; 2],
    },
}

impl DistributionSpec {
    pub fn scalar_gaussian(mean: f64, variance: f64) -> Result<Self> {
        ensure_finite("mean", mean)?;
        ensure_positive("variance", variance)?;
        Ok(DistributionSpec::ScalarGaussian { mean, variance })
    }

    pub fn truncated_logistic(
        mean: [f64; 2],
        diag_variance: [f64; 2],
        box_halfwidth: f64,
        label_weights: [f64; 2],
    ) -> Result<Self> {
        for m in mean {
            ensure_finite("mean", m)?;
        }
        for v in diag_variance {
            ensure_positive("diag_variance", v)?;
        }
        ensure_positive("box_halfwidth", box_halfwidth)?;
        for w in label_weights {
            ensure_finite("label_weights", w)?;
        }
        Ok(DistributionSpec::TruncatedGaussianLogistic {
            mean,
            diag_variance,
            box_halfwidth,
            label_weights,
        })
    }

    /// Source of the logistic transfer example: `N(0, 2I)` truncated to
    /// `|x_i| < 6`, labels from `w_s = (0.5, -1)`.
    pub fn logistic_source() -> Self {
        DistributionSpec::TruncatedGaussianLogistic {
            mean: [0.0, 0.0],
            diag_variance: [2.0, 2.0],
            box_halfwidth: 6.0,
            label_weights: [0.5, -1.0],
        }
    }

    /// Target of the logistic transfer example: `N((-2, 2), I)` truncated to
    /// `|x_i| < 6`, labels from `w_t = (-0.5, 1.5)`.
    pub fn logistic_target() -> Self {
        DistributionSpec::TruncatedGaussianLogistic {
            mean: [-2.0, 2.0],
            diag_variance: [1.0, 1.0],
            box_halfwidth: 6.0,
            label_weights: [-0.5, 1.5],
        }
    }

    pub fn is_labeled(&self) -> bool {
        matches!(self, DistributionSpec::TruncatedGaussianLogistic { .. })
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            DistributionSpec::ScalarGaussian { .. } => 1,
            DistributionSpec::TruncatedGaussianLogistic { .. } => 2,
        }
    }

    /// Log density of the feature vector, including the truncation
    /// normalizer. `-∞` outside the support.
    pub fn feature_log_density(&self, x: &[f64]) -> f64 {
        match self {
            DistributionSpec::ScalarGaussian { mean, variance } => {
                normal_log_pdf(x[0], *mean, variance.sqrt())
            }
            DistributionSpec::TruncatedGaussianLogistic {
                mean,
                diag_variance,
                box_halfwidth,
                ..
            } => {
                let mut lp = 0.0;
                for i in 0..2 {
                    if x[i].abs() >= *box_halfwidth {
                        return f64::NEG_INFINITY;
                    }
                    let sd = diag_variance[i].sqrt();
                    lp += normal_log_pdf(x[i], mean[i], sd)
                        - truncation_mass(mean[i], sd, *box_halfwidth).ln();
                }
                lp
            }
        }
    }

    /// `P(y = 1 | x)` for the labeled family.
    pub fn label_probability(&self, x: &[f64]) -> Option<f64> {
        match self {
            DistributionSpec::ScalarGaussian { .. } => None,
            DistributionSpec::TruncatedGaussianLogistic { label_weights, .. } => {
                Some(sigmoid(dot(label_weights, x)))
            }
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let u = (x - mean) / sd;
    -0.5 * u * u - sd.ln() - 0.5 * (2.0 * PI).ln()
}

/// Probability mass of `N(mean, sd²)` inside `(-h, h)`.
pub fn truncation_mass(mean: f64, sd: f64, h: f64) -> f64 {
    normal_cdf((h - mean) / sd) - normal_cdf((-h - mean) / sd)
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// A seeded, splittable random stream.
///
/// Each `(seed, stream_id)` pair selects an independent ChaCha8 keystream,
/// so parallel trials with distinct ids never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A derived stream for sub-task `index`.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x5851_f42d))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// IID draws from `spec`.
///
/// Truncated features are rejection-sampled coordinate-wise; the box is a
/// product set and the covariance is diagonal, so this is exact.
pub fn sample(spec: &DistributionSpec, count: usize, rng: &RngStream) -> Result<Vec<Instance>> {
    if count == 0 {
        return Err(Error::invalid("count", "must be positive"));
    }
    let mut g = rng.rng();
    Ok(sample_with(spec, count, &mut g))
}

pub(crate) fn sample_with<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    count: usize,
    g: &mut R,
) -> Vec<Instance> {
    match spec {
        DistributionSpec::ScalarGaussian { mean, variance } => {
            let sd = variance.sqrt();
            (0..count)
                .map(|_| {
                    let e: f64 = g.sample(StandardNormal);
                    Instance::scalar(mean + sd * e)
                })
                .collect()
        }
        DistributionSpec::TruncatedGaussianLogistic {
            mean,
            diag_variance,
            box_halfwidth,
            label_weights,
        } => (0..count)
            .map(|_| {
                let mut x = vec![0.0; 2];
                for i in 0..2 {
                    let sd = diag_variance[i].sqrt();
                    x[i] = loop {
                        let e: f64 = g.sample(StandardNormal);
                        let v = mean[i] + sd * e;
                        if v.abs() < *box_halfwidth {
                            break v;
                        }
                    };
                }
                let p = sigmoid(dot(label_weights, &x));
                let y = u8::from(g.random::<f64>() < p);
                Instance::labeled(x, y)
            })
            .collect(),
    }
}

/// A non-negative loss with a gradient in `w`.
pub trait Loss: Sync {
    fn eval(&self, w: &[f64], z: &Instance) -> f64;
    fn gradient_into(&self, w: &[f64], z: &Instance, out: &mut [f64]);

    fn gradient(&self, w: &[f64], z: &Instance) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        self.gradient_into(w, z, &mut g);
        g
    }
}

/// The two losses used in the worked examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossModel {
    /// `(w - z)²` on scalars.
    SquaredError,
    /// Binary cross-entropy of `sigmoid(wᵀx)` against `y`.
    LogisticCrossEntropy,
}

impl Loss for LossModel {
    fn eval(&self, w: &[f64], z: &Instance) -> f64 {
        match self {
            LossModel::SquaredError => {
                let d = w[0] - z.x[0];
                d * d
            }
            LossModel::LogisticCrossEntropy => {
                let t = dot(w, &z.x);
                let y = f64::from(z.y.unwrap_or(0));
                // -(y ln p + (1-y) ln(1-p)) = softplus(t) - y t
                let raw = softplus(t) - y * t;
                raw.clamp(-(-P_CLAMP).ln_1p(), -P_CLAMP.ln())
            }
        }
    }

    fn gradient_into(&self, w: &[f64], z: &Instance, out: &mut [f64]) {
        match self {
            LossModel::SquaredError => out[0] = 2.0 * (w[0] - z.x[0]),
            LossModel::LogisticCrossEntropy => {
                let y = f64::from(z.y.unwrap_or(0));
                let r = sigmoid(dot(w, &z.x)) - y;
                for (o, xi) in out.iter_mut().zip(&z.x) {
                    *o = r * xi;
                }
            }
        }
    }
}

impl LossModel {
    /// Checked evaluation: validates dimensions and labels.
    pub fn loss_eval(&self, w: &Hypothesis, z: &Instance) -> Result<f64> {
        self.check(w, z)?;
        Ok(self.eval(&w.w, z))
    }

    pub fn loss_gradient(&self, w: &Hypothesis, z: &Instance) -> Result<Vec<f64>> {
        self.check(w, z)?;
        Ok(self.gradient(&w.w, z))
    }

    fn check(&self, w: &Hypothesis, z: &Instance) -> Result<()> {
        match self {
            LossModel::SquaredError => {
                if w.dim() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: w.dim(),
                    });
                }
                if z.x.len() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: z.x.len(),
                    });
                }
            }
            LossModel::LogisticCrossEntropy => {
                if w.dim() != z.x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: w.dim(),
                        got: z.x.len(),
                    });
                }
                if z.y.is_none() {
                    return Err(Error::invalid("z", "logistic loss needs a label"));
                }
            }
        }
        Ok(())
    }
}
