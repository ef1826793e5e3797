//! KL divergence, total variation and the `φ(x) = |x - 1|` divergence
//! between the example distributions, plus differential entropies of
//! noise models.

use std::f64::consts::{E, PI};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::model::{dot, sample_with, softplus, DistributionSpec, RngStream};
use crate::risk::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    Kl,
    Tv,
    PhiL1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    pub value: f64,
    /// Present for Monte Carlo estimates only.
    pub stderr: Option<f64>,
}

impl DivergenceValue {
    /// `D_φ = 2·TV` for the same pair.
    pub fn to_phi_l1(self) -> Option<DivergenceValue> {
        match self.kind {
            DivergenceKind::Tv => Some(DivergenceValue {
                kind: DivergenceKind::PhiL1,
                value: 2.0 * self.value,
                stderr: self.stderr.map(|s| 2.0 * s),
            }),
            DivergenceKind::PhiL1 => Some(self),
            DivergenceKind::Kl => None,
        }
    }
}

/// `D(N(m, σ²) ‖ N(m', σ²)) = (m - m')² / (2σ²)`.
pub fn kl_scalar_gaussian(m: f64, m_prime: f64, variance: f64) -> Result<f64> {
    ensure_finite("m", m)?;
    ensure_finite("m_prime", m_prime)?;
    ensure_positive("variance", variance)?;
    Ok((m - m_prime).powi(2) / (2.0 * variance))
}

/// KL between Bernoulli laws, with `0 log 0 = 0`.
pub fn bernoulli_kl(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0,1], got {p}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid("q", format!("must lie in [0,1], got {q}")));
    }
    if (q == 0.0 && p > 0.0) || (q == 1.0 && p < 1.0) {
        return Err(Error::invalid("q", "p is not absolutely continuous w.r.t. q"));
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    Ok((term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0))
}

/// `KL(Bern(σ(a)) ‖ Bern(σ(b)))` computed from logits so that saturated
/// probabilities never round to 0 or 1.
pub fn bernoulli_kl_logits(a: f64, b: f64) -> f64 {
    // ln σ(t) = -softplus(-t), ln(1 - σ(t)) = -softplus(t)
    let p = crate::model::sigmoid(a);
    let log_p = -softplus(-a);
    let log_1p = -softplus(a);
    let log_q = -softplus(-b);
    let log_1q = -softplus(b);
    (p * (log_p - log_q) + (1.0 - p) * (log_1p - log_1q)).max(0.0)
}

/// Feature and label parts of `D(μ ‖ μ')` for the logistic family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlDecomposition {
    pub feature_kl: f64,
    pub label_kl: f64,
    pub total: f64,
    pub stderr: f64,
}

/// `D(μ(X,Y) ‖ μ'(X,Y)) = D(P_X ‖ P'_X) + E_{x∼P_X} D(P_{Y|x} ‖ P'_{Y|x})`,
/// both terms by Monte Carlo over source feature draws.
pub fn kl_decomposed_logistic(
    source: &DistributionSpec,
    target: &DistributionSpec,
    mc_samples: usize,
    rng: &RngStream,
) -> Result<KlDecomposition> {
    let (box_s, ws, box_t, wt) = match (source, target) {
        (
            DistributionSpec::TruncatedGaussianLogistic {
                box_halfwidth: bs,
                label_weights: ws,
                ..
            },
            DistributionSpec::TruncatedGaussianLogistic {
                box_halfwidth: bt,
                label_weights: wt,
                ..
            },
        ) => (*bs, *ws, *bt, *wt),
        _ => {
            return Err(Error::Unsupported(
                "KL decomposition needs two truncated-logistic specs".into(),
            ))
        }
    };
    if box_s != box_t {
        return Err(Error::invalid(
            "box_halfwidth",
            "source and target truncation boxes differ",
        ));
    }
    if mc_samples < 2 {
        return Err(Error::invalid("mc_samples", "need at least 2 draws"));
    }
    let mut g = rng.rng();
    let (mut f_sum, mut l_sum, mut t_sum, mut t_sq) = (0.0, 0.0, 0.0, 0.0);
    const BATCH: usize = 4096;
    let mut remaining = mc_samples;
    while remaining > 0 {
        let m = remaining.min(BATCH);
        for z in sample_with(source, m, &mut g) {
            let f = source.feature_log_density(&z.x) - target.feature_log_density(&z.x);
            let l = bernoulli_kl_logits(dot(&ws, &z.x), dot(&wt, &z.x));
            f_sum += f;
            l_sum += l;
            t_sum += f + l;
            t_sq += (f + l) * (f + l);
        }
        remaining -= m;
    }
    let n = mc_samples as f64;
    let feature_kl = f_sum / n;
    let label_kl = l_sum / n;
    let mean = t_sum / n;
    let var = ((t_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(KlDecomposition {
        feature_kl,
        label_kl,
        total: feature_kl + label_kl,
        stderr: (var / n).sqrt(),
    })
}

/// KL between the example distributions: closed form for equal-variance
/// scalar Gaussians, the Monte Carlo decomposition for the logistic family.
pub fn kl_divergence(
    source: &DistributionSpec,
    target: &DistributionSpec,
    mc_samples: usize,
    rng: &RngStream,
) -> Result<Estimate> {
    match (source, target) {
        (
            DistributionSpec::ScalarGaussian { mean: m, variance: v },
            DistributionSpec::ScalarGaussian { mean: mp, variance: vp },
        ) => {
            // general variances
            let kl = 0.5 * (v / vp + (m - mp).powi(2) / vp - 1.0 + (vp / v).ln());
            Ok(Estimate::exact(kl.max(0.0)))
        }
        _ => {
            let d = kl_decomposed_logistic(source, target, mc_samples, rng)?;
            Ok(Estimate {
                value: d.total.max(0.0),
                stderr: d.stderr,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMethod {
    Quadrature1D,
    GridQuadrature2D,
}

/// Nodes per axis for the 2-D grid quadrature.
pub const TV_GRID_NODES: usize = 400;
const TV_1D_NODES: usize = 200_000;

/// `TV(a, b) = ½ ∫ |p_a - p_b|` by deterministic quadrature.
///
/// Scalar Gaussians integrate over ±10 standard deviations around both
/// means. The logistic family integrates the joint `(x, y)` density over
/// the truncation box with a midpoint rule.
pub fn tv_distance(
    spec_a: &DistributionSpec,
    spec_b: &DistributionSpec,
    method: TvMethod,
) -> Result<DivergenceValue> {
    let value = match (spec_a, spec_b, method) {
        (
            DistributionSpec::ScalarGaussian { mean: ma, variance: va },
            DistributionSpec::ScalarGaussian { mean: mb, variance: vb },
            TvMethod::Quadrature1D,
        ) => {
            let sd = va.max(*vb).sqrt();
            let lo = ma.min(*mb) - 10.0 * sd;
            let hi = ma.max(*mb) + 10.0 * sd;
            let h = (hi - lo) / TV_1D_NODES as f64;
            let mut acc = 0.0;
            for i in 0..TV_1D_NODES {
                let x = [lo + (i as f64 + 0.5) * h];
                acc += (spec_a.feature_log_density(&x).exp() - spec_b.feature_log_density(&x).exp()).abs();
            }
            0.5 * acc * h
        }
        (
            DistributionSpec::TruncatedGaussianLogistic { box_halfwidth: ha, .. },
            DistributionSpec::TruncatedGaussianLogistic { box_halfwidth: hb, .. },
            TvMethod::GridQuadrature2D,
        ) => {
            let half = ha.max(*hb);
            let m = TV_GRID_NODES;
            let h = 2.0 * half / m as f64;
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let x = [-half + (i as f64 + 0.5) * h, -half + (j as f64 + 0.5) * h];
                    let pa = spec_a.feature_log_density(&x).exp();
                    let pb = spec_b.feature_log_density(&x).exp();
                    let qa = spec_a.label_probability(&x).unwrap_or(0.0);
                    let qb = spec_b.label_probability(&x).unwrap_or(0.0);
                    acc += (pa * qa - pb * qb).abs() + (pa * (1.0 - qa) - pb * (1.0 - qb)).abs();
                }
            }
            0.5 * acc * h * h
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "total variation for this spec pair with {method:?}"
            )))
        }
    };
    Ok(DivergenceValue {
        kind: DivergenceKind::Tv,
        value: value.clamp(0.0, 1.0),
        stderr: None,
    })
}

/// `D_φ(a ‖ b) = ∫ |p_a - p_b|` for `φ(x) = |x - 1|`.
pub fn phi_divergence_l1(
    spec_a: &DistributionSpec,
    spec_b: &DistributionSpec,
    method: TvMethod,
) -> Result<DivergenceValue> {
    Ok(tv_distance(spec_a, spec_b, method)?
        .to_phi_l1()
        .expect("TV converts to φ-divergence"))
}

/// Differential entropy of `N(0, σ² I_d)`: `(d/2) ln(2πe σ²)`.
pub fn gaussian_entropy(variance: f64, d: usize) -> Result<f64> {
    ensure_positive("variance", variance)?;
    if d == 0 {
        return Err(Error::invalid("d", "must be positive"));
    }
    Ok(0.5 * d as f64 * (2.0 * PI * E * variance).ln())
}

/// Differential entropy of `d` IID zero-mean uniforms with variance `σ²`
/// (width `σ√12`): `d ln(σ√12)`.
pub fn uniform_entropy(variance: f64, d: usize) -> Result<f64> {
    ensure_positive("variance", variance)?;
    if d == 0 {
        return Err(Error::invalid("d", "must be positive"));
    }
    Ok(d as f64 * (variance.sqrt() * 12f64.sqrt()).ln())
}
