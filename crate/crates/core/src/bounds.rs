//! Bound evaluators.
//!
//! * `ψ*⁻¹` inversion of a cumulant-generating-function envelope.
//! * Expected generalization error from per-sample mutual information and
//!   the source/target KL divergence (general envelope, subgaussian, and
//!   the chain-rule relaxation).
//! * High-probability excess risk with the `d_W` distance, and the
//!   total-variation variant.
//! * Noisy gradient descent with a closed-form information budget.
//! * The Rademacher-complexity comparison bound.
//! * Closed forms for the Gaussian mean example.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::divergence::{gaussian_entropy, uniform_entropy};
use crate::error::{ensure_nonneg, ensure_positive, Error, Result};
use crate::grid::GridSearch;
use crate::model::{split_counts, Instance, Loss, RngStream};
use crate::par;
use crate::report::{BoundReport, TheoremTag};
use crate::risk::{hypothesis_dim, RiskWeights};

// ---------------------------------------------------------------------------
// CGF envelopes and ψ*⁻¹
// ---------------------------------------------------------------------------

type PsiFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum EnvelopeKind {
    /// `ψ(λ) = r²λ²/2` on all of ℝ.
    Subgaussian { r2: f64 },
    /// `ψ(λ) = σ_ℓ⁴λ² + 2λ²σ_ℓ²Δ / (1 + 2|λ|σ_ℓ²)` with `Δ = (m - m')²`,
    /// the squared-loss envelope of the Gaussian mean example.
    GaussianExample { sigma_l2: f64, mean_gap_sq: f64 },
    Custom(PsiFn),
}

impl fmt::Debug for EnvelopeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvelopeKind::Subgaussian { r2 } => write!(f, "Subgaussian {{ r2: {r2} }}"),
            EnvelopeKind::GaussianExample { sigma_l2, mean_gap_sq } => write!(
                f,
                "GaussianExample {{ sigma_l2: {sigma_l2}, mean_gap_sq: {mean_gap_sq} }}"
            ),
            EnvelopeKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A convex upper bound `ψ` on the centered-loss CGF, valid on
/// `(b_minus, b_plus)`.
#[derive(Debug, Clone)]
pub struct CgfEnvelope {
    pub kind: EnvelopeKind,
    pub b_minus: f64,
    pub b_plus: f64,
}

impl CgfEnvelope {
    pub fn subgaussian(r2: f64) -> Result<Self> {
        ensure_positive("r2", r2)?;
        Ok(CgfEnvelope {
            kind: EnvelopeKind::Subgaussian { r2 },
            b_minus: f64::NEG_INFINITY,
            b_plus: f64::INFINITY,
        })
    }

    /// Envelope for squared loss when `W` is the mean of `n` draws from
    /// `N(m, σ²)`: `σ_ℓ² = (n+1)σ²/n`.
    pub fn gaussian_example(n: usize, variance: f64, mean_gap: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("n", "must be positive"));
        }
        ensure_positive("variance", variance)?;
        Ok(CgfEnvelope {
            kind: EnvelopeKind::GaussianExample {
                sigma_l2: (n as f64 + 1.0) / n as f64 * variance,
                mean_gap_sq: mean_gap * mean_gap,
            },
            b_minus: f64::NEG_INFINITY,
            b_plus: f64::INFINITY,
        })
    }

    pub fn custom<F>(psi: F, b_minus: f64, b_plus: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(b_minus < 0.0 && b_plus > 0.0) {
            return Err(Error::invalid(
                "interval",
                format!("need b_minus < 0 < b_plus, got ({b_minus}, {b_plus})"),
            ));
        }
        Ok(CgfEnvelope {
            kind: EnvelopeKind::Custom(Arc::new(psi)),
            b_minus,
            b_plus,
        })
    }

    pub fn psi(&self, lambda: f64) -> f64 {
        match &self.kind {
            EnvelopeKind::Subgaussian { r2 } => 0.5 * r2 * lambda * lambda,
            EnvelopeKind::GaussianExample { sigma_l2, mean_gap_sq } => {
                let l2 = lambda * lambda;
                sigma_l2 * sigma_l2 * l2
                    + 2.0 * l2 * sigma_l2 * mean_gap_sq / (1.0 + 2.0 * lambda.abs() * sigma_l2)
            }
            EnvelopeKind::Custom(f) => f(lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `inf_{λ ∈ (0, b₊)} (x + ψ(λ)) / λ`
    Plus,
    /// `inf_{λ ∈ (0, -b₋)} (x + ψ(-λ)) / λ`
    Minus,
}

const LAMBDA_MIN: f64 = 1e-8;
const LAMBDA_MAX: f64 = 1e8;
const LAMBDA_GRID: usize = 200;
const GOLDEN_RTOL: f64 = 1e-10;

/// `ψ*⁻¹_±(x)`. Subgaussian envelopes use the closed form `√(2r²x)`.
pub fn psi_star_inverse(env: &CgfEnvelope, x: f64, side: Side) -> Result<f64> {
    ensure_nonneg("x", x)?;
    if let EnvelopeKind::Subgaussian { r2 } = env.kind {
        return Ok((2.0 * r2 * x).sqrt());
    }
    psi_star_inverse_numeric(env, x, side)
}

/// Numeric `ψ*⁻¹`: a 200-point log grid on
/// `[1e-8, min(b(1 - 1e-9), 1e8)]` followed by golden-section refinement
/// around the best node. The objective is unimodal for convex `ψ`.
pub fn psi_star_inverse_numeric(env: &CgfEnvelope, x: f64, side: Side) -> Result<f64> {
    ensure_nonneg("x", x)?;
    let (b, sign) = match side {
        Side::Plus => (env.b_plus, 1.0),
        Side::Minus => (-env.b_minus, -1.0),
    };
    let hi = (b * (1.0 - 1e-9)).min(LAMBDA_MAX);
    if !(hi > LAMBDA_MIN) {
        return Err(Error::invalid(
            "envelope",
            format!("empty λ interval for side {side:?} (b = {b})"),
        ));
    }
    let f = |lambda: f64| (x + env.psi(sign * lambda)) / lambda;
    let ratio = (hi / LAMBDA_MIN).ln() / (LAMBDA_GRID - 1) as f64;
    let grid: Vec<f64> = (0..LAMBDA_GRID)
        .map(|i| (LAMBDA_MIN.ln() + ratio * i as f64).exp().min(hi))
        .collect();
    let values: Vec<f64> = grid.iter().map(|&l| f(l)).collect();
    let mut best = 0;
    for i in 1..LAMBDA_GRID {
        if values[i] < values[best] {
            best = i;
        }
    }
    let mut lo = grid[best.saturating_sub(1)];
    let mut up = grid[(best + 1).min(LAMBDA_GRID - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = up - inv_phi * (up - lo);
    let mut d = lo + inv_phi * (up - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..500 {
        if (up - lo) <= GOLDEN_RTOL * c.abs().max(LAMBDA_MIN) {
            break;
        }
        if fc < fd {
            up = d;
            d = c;
            fd = fc;
            c = up - inv_phi * (up - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (up - lo);
            fd = f(d);
        }
    }
    let refined = fc.min(fd);
    let value = refined.min(values[best]);
    if !value.is_finite() {
        return Err(Error::invalid("envelope", "ψ*⁻¹ is not finite"));
    }
    Ok(value.max(0.0))
}

// ---------------------------------------------------------------------------
// Expected generalization error
// ---------------------------------------------------------------------------

fn check_group_lengths(mi_target: &[f64], mi_source: &[f64], beta: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let (n_t, n_s) = split_counts(beta, n);
    if mi_target.len() != n_t {
        return Err(Error::LengthMismatch {
            what: "target information terms",
            expected: n_t,
            got: mi_target.len(),
        });
    }
    if mi_source.len() != n_s {
        return Err(Error::LengthMismatch {
            what: "source information terms",
            expected: n_s,
            got: mi_source.len(),
        });
    }
    for &v in mi_target.iter().chain(mi_source) {
        ensure_nonneg("information term", v)?;
    }
    Ok(())
}

/// `Σ_i g(x_i)` with memoisation of consecutive equal inputs (groups are
/// usually constant).
fn sum_mapped<F: Fn(f64) -> Result<f64>>(xs: &[f64], g: F) -> Result<f64> {
    let mut acc = 0.0;
    let mut last: Option<(f64, f64)> = None;
    for &x in xs {
        let v = match last {
            Some((lx, lv)) if lx == x => lv,
            _ => g(x)?,
        };
        last = Some((x, v));
        acc += v;
    }
    Ok(acc)
}

/// Upper and lower bounds on the expected generalization error for a
/// general envelope, `β > 0`:
///
/// `upper = (α/βn) Σ_T ψ*⁻¹₋(I_i) + ((1-α)/(1-β)n) Σ_S ψ*⁻¹₋(I_i + D)`,
/// `lower = -[same with ψ*⁻¹₊]`.
pub fn gen_bound_theorem1(
    env: &CgfEnvelope,
    mi_target: &[f64],
    mi_source: &[f64],
    kl: f64,
    weights: &RiskWeights,
    n: usize,
) -> Result<(f64, f64)> {
    let up = theorem1_report(env, mi_target, mi_source, kl, weights, n, Side::Minus)?;
    let low = theorem1_report(env, mi_target, mi_source, kl, weights, n, Side::Plus)?;
    Ok((up.total, -low.total))
}

/// One side of [`gen_bound_theorem1`] as a report (`Side::Minus` gives the
/// upper bound).
pub fn theorem1_report(
    env: &CgfEnvelope,
    mi_target: &[f64],
    mi_source: &[f64],
    kl: f64,
    weights: &RiskWeights,
    n: usize,
    side: Side,
) -> Result<BoundReport> {
    let (a, b) = (weights.alpha(), weights.beta());
    if b == 0.0 {
        return Err(Error::invalid("beta", "β = 0: use the source-only bound"));
    }
    ensure_nonneg("kl", kl)?;
    check_group_lengths(mi_target, mi_source, b, n)?;
    let nf = n as f64;
    let mut r = BoundReport::new(TheoremTag::Theorem1, a, b, n);
    r.target_term = a / (b * nf) * sum_mapped(mi_target, |i| psi_star_inverse(env, i, side))?;
    r.source_term =
        (1.0 - a) / ((1.0 - b) * nf) * sum_mapped(mi_source, |i| psi_star_inverse(env, i + kl, side))?;
    r.mi_terms_target = mi_target.to_vec();
    r.mi_terms_source = mi_source.to_vec();
    r.divergence_term = kl;
    if let EnvelopeKind::Subgaussian { r2 } = env.kind {
        r.r2 = Some(r2);
    }
    if side == Side::Plus {
        r.notes.push("bounds -E[gen] (lower side)".into());
    }
    Ok(r.finish())
}

/// Source-only (`β = 0`) bounds `(1/n) Σ ψ*⁻¹∓(I_i + D)`; returns
/// `(upper, lower)`.
pub fn gen_bound_beta0(env: &CgfEnvelope, mi: &[f64], kl: f64, n: usize) -> Result<(f64, f64)> {
    let up = beta0_report(env, mi, kl, n, Side::Minus)?;
    let low = beta0_report(env, mi, kl, n, Side::Plus)?;
    Ok((up.total, -low.total))
}

pub fn beta0_report(env: &CgfEnvelope, mi: &[f64], kl: f64, n: usize, side: Side) -> Result<BoundReport> {
    if mi.is_empty() {
        return Err(Error::Empty("information terms"));
    }
    ensure_nonneg("kl", kl)?;
    check_group_lengths(&[], mi, 0.0, n)?;
    let mut r = BoundReport::new(TheoremTag::SourceOnly, 0.0, 0.0, n);
    r.source_term = sum_mapped(mi, |i| psi_star_inverse(env, i + kl, side))? / n as f64;
    r.mi_terms_source = mi.to_vec();
    r.divergence_term = kl;
    if let EnvelopeKind::Subgaussian { r2 } = env.kind {
        r.r2 = Some(r2);
    }
    Ok(r.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxyProvenance {
    Analytic,
    EmpiricalRange,
}

/// A subgaussian variance proxy `r²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgaussianProxy {
    pub r2: f64,
    pub provenance: ProxyProvenance,
}

impl SubgaussianProxy {
    pub fn analytic(r2: f64) -> Result<Self> {
        ensure_positive("r2", r2)?;
        Ok(SubgaussianProxy {
            r2,
            provenance: ProxyProvenance::Analytic,
        })
    }

    /// `(b - a)² / 4` for a loss with values in `[a, b]`.
    pub fn from_range(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::invalid("range", format!("need min < max, got [{min}, {max}]")));
        }
        Ok(SubgaussianProxy {
            r2: (max - min).powi(2) / 4.0,
            provenance: ProxyProvenance::EmpiricalRange,
        })
    }

    /// Empirical range of `ℓ(w, z)` over the hypothesis grid, any extra
    /// hypotheses (e.g. the training trajectory) and the target samples.
    pub fn empirical<L: Loss + ?Sized>(
        loss: &L,
        target_samples: &[Instance],
        search: &GridSearch,
        extra: &[Vec<f64>],
    ) -> Result<Self> {
        if target_samples.is_empty() {
            return Err(Error::Empty("target samples"));
        }
        let mut pts = search.points(hypothesis_dim(&target_samples[0]))?;
        pts.extend(extra.iter().cloned());
        let ranges = par::map_indexed(pts.len(), |i| {
            target_samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
                let l = loss.eval(&pts[i], z);
                (lo.min(l), hi.max(l))
            })
        });
        let (lo, hi) = ranges
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.min(c), b.max(d)));
        Self::from_range(lo, hi)
    }
}

/// `|E gen| ≤ (α√(2r²)/βn) Σ_T √I_i + ((1-α)√(2r²)/(1-β)n) Σ_S √(I_i + D)`;
/// with `β = 0` this is `(√(2r²)/n) Σ √(I_i + D)` over the `n` source terms.
pub fn gen_bound_subgaussian(
    r2: &SubgaussianProxy,
    mi_target: &[f64],
    mi_source: &[f64],
    kl: f64,
    weights: &RiskWeights,
    n: usize,
) -> Result<f64> {
    Ok(subgaussian_report(r2, mi_target, mi_source, kl, weights, n)?.total)
}

pub fn subgaussian_report(
    r2: &SubgaussianProxy,
    mi_target: &[f64],
    mi_source: &[f64],
    kl: f64,
    weights: &RiskWeights,
    n: usize,
) -> Result<BoundReport> {
    ensure_positive("r2", r2.r2)?;
    ensure_nonneg("kl", kl)?;
    let (a, b) = (weights.alpha(), weights.beta());
    check_group_lengths(mi_target, mi_source, b, n)?;
    let nf = n as f64;
    let c = (2.0 * r2.r2).sqrt();
    let mut r = BoundReport::new(TheoremTag::Subgaussian, a, b, n);
    if b > 0.0 {
        r.target_term = a * c / (b * nf) * sum_mapped(mi_target, |i| Ok(i.sqrt()))?;
    }
    r.source_term = (1.0 - a) * c / ((1.0 - b) * nf) * sum_mapped(mi_source, |i| Ok((i + kl).sqrt()))?;
    r.r2 = Some(r2.r2);
    r.mi_terms_target = mi_target.to_vec();
    r.mi_terms_source = mi_source.to_vec();
    r.divergence_term = kl;
    if r2.provenance == ProxyProvenance::EmpiricalRange {
        r.notes.push("r² from the empirical loss range".into());
    }
    Ok(r.finish())
}

/// Chain-rule relaxation `√(2r²(I(W;S)/n + D))`.
pub fn gen_bound_chain_rule(r2: f64, mi_full: f64, kl: f64, n: usize) -> Result<f64> {
    Ok(chain_rule_report(r2, mi_full, kl, n)?.total)
}

pub fn chain_rule_report(r2: f64, mi_full: f64, kl: f64, n: usize) -> Result<BoundReport> {
    ensure_nonneg("r2", r2)?;
    ensure_nonneg("mi_full", mi_full)?;
    ensure_nonneg("kl", kl)?;
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let mut r = BoundReport::new(TheoremTag::ChainRule, 0.0, 0.0, n);
    r.source_term = (2.0 * r2 * (mi_full / n as f64 + kl)).sqrt();
    r.r2 = Some(r2);
    r.mi_terms_source = vec![mi_full];
    r.divergence_term = kl;
    r.notes.push("information term is I(W;S) for the whole sample".into());
    Ok(r.finish())
}

// ---------------------------------------------------------------------------
// Excess risk
// ---------------------------------------------------------------------------

/// High-probability excess risk:
/// `gen + √(α²/β + (1-α)²/(1-β)) √(2r² ln(2/δ)/n) + (1-α) d_W + ε`.
///
/// With `β = 0` the concentration factor is 1 and `d_w` must be the
/// single-hypothesis gap `|L_μ(w*) - L_μ'(w*)|`, which enters unweighted.
pub fn excess_bound_theorem2(
    gen_bound: f64,
    r2: f64,
    weights: &RiskWeights,
    n: usize,
    delta: f64,
    d_w: f64,
    epsilon: f64,
) -> Result<f64> {
    Ok(excess_report(gen_bound, r2, weights, n, delta, d_w, epsilon)?.total)
}

pub fn excess_report(
    gen_bound: f64,
    r2: f64,
    weights: &RiskWeights,
    n: usize,
    delta: f64,
    d_w: f64,
    epsilon: f64,
) -> Result<BoundReport> {
    check_delta(delta)?;
    ensure_nonneg("gen_bound", gen_bound)?;
    ensure_nonneg("r2", r2)?;
    ensure_nonneg("d_w", d_w)?;
    ensure_nonneg("epsilon", epsilon)?;
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let (a, b) = (weights.alpha(), weights.beta());
    let factor = if b == 0.0 {
        1.0
    } else {
        (a * a / b + (1.0 - a).powi(2) / (1.0 - b)).sqrt()
    };
    let mut r = BoundReport::new(TheoremTag::ExcessRisk, a, b, n);
    r.source_term = gen_bound;
    r.concentration_term = factor * (2.0 * r2 * (2.0 / delta).ln() / n as f64).sqrt();
    r.d_w_term = if b == 0.0 { d_w } else { (1.0 - a) * d_w };
    r.epsilon_slack = epsilon;
    r.r2 = Some(r2);
    r.delta = Some(delta);
    r.divergence_term = d_w;
    r.notes.push("source term carries the generalization bound; n ≥ n₀(δ, ε) is not checked".into());
    Ok(r.finish())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("delta", format!("must lie in (0,1), got {delta}")))
    }
}

/// Total-variation excess-risk bound for a loss bounded by `σ_∞`:
/// `(ασ/βn) Σ_T I_φ + ((1-α)σ/(1-β)n) Σ_S (I_φ + 2 TV) + ε`.
#[allow(clippy::too_many_arguments)]
pub fn gen_bound_phi(
    sigma_inf: f64,
    phi_mi_target: &[f64],
    phi_mi_source: &[f64],
    tv: f64,
    weights: &RiskWeights,
    n: usize,
    epsilon: f64,
) -> Result<f64> {
    Ok(phi_report(sigma_inf, phi_mi_target, phi_mi_source, tv, weights, n, epsilon)?.total)
}

pub fn phi_report(
    sigma_inf: f64,
    phi_mi_target: &[f64],
    phi_mi_source: &[f64],
    tv: f64,
    weights: &RiskWeights,
    n: usize,
    epsilon: f64,
) -> Result<BoundReport> {
    ensure_positive("sigma_inf", sigma_inf)?;
    if !(0.0..=1.0).contains(&tv) {
        return Err(Error::invalid("tv", format!("must lie in [0,1], got {tv}")));
    }
    ensure_nonneg("epsilon", epsilon)?;
    let (a, b) = (weights.alpha(), weights.beta());
    check_group_lengths(phi_mi_target, phi_mi_source, b, n)?;
    let nf = n as f64;
    let mut r = BoundReport::new(TheoremTag::PhiDivergence, a, b, n);
    if b > 0.0 {
        r.target_term = a * sigma_inf / (b * nf) * phi_mi_target.iter().sum::<f64>();
    }
    r.source_term =
        (1.0 - a) * sigma_inf / ((1.0 - b) * nf) * phi_mi_source.iter().map(|i| i + 2.0 * tv).sum::<f64>();
    r.epsilon_slack = epsilon;
    r.mi_terms_target = phi_mi_target.to_vec();
    r.mi_terms_source = phi_mi_source.to_vec();
    r.divergence_term = tv;
    Ok(r.finish())
}

// ---------------------------------------------------------------------------
// Noisy gradient descent
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    /// IID zero-mean uniform coordinates with the scheduled variance.
    UniformZeroMean,
}

/// Step sizes, noise scales and the gradient-norm bound `K` of a noisy
/// gradient descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyGdSchedule {
    pub eta: Vec<f64>,
    pub noise_sigma: Vec<f64>,
    pub d: usize,
    pub k_st: f64,
    /// Differential entropy `h(n_t)` of each noise increment.
    pub noise_entropy: Vec<f64>,
    pub noise: NoiseKind,
}

impl NoisyGdSchedule {
    pub fn new(eta: Vec<f64>, noise_sigma: Vec<f64>, d: usize, k_st: f64, noise: NoiseKind) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::invalid("T", "schedule needs at least one step"));
        }
        if eta.len() != noise_sigma.len() {
            return Err(Error::LengthMismatch {
                what: "noise_sigma",
                expected: eta.len(),
                got: noise_sigma.len(),
            });
        }
        if d == 0 {
            return Err(Error::invalid("d", "must be positive"));
        }
        ensure_positive("k_st", k_st)?;
        for &e in &eta {
            ensure_nonneg("eta", e)?;
        }
        for &s in &noise_sigma {
            ensure_nonneg("noise_sigma", s)?;
        }
        // σ_t = 0 is allowed for running the iteration; its entropy is -∞
        // and any step with η_t > 0 makes the budget infinite.
        let noise_entropy = noise_sigma
            .iter()
            .map(|&s| {
                if s == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                match noise {
                    NoiseKind::Gaussian => gaussian_entropy(s * s, d),
                    NoiseKind::UniformZeroMean => uniform_entropy(s * s, d),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NoisyGdSchedule {
            eta,
            noise_sigma,
            d,
            k_st,
            noise_entropy,
            noise,
        })
    }

    /// `T` identical steps.
    pub fn constant(t: usize, eta: f64, sigma: f64, d: usize, k_st: f64, noise: NoiseKind) -> Result<Self> {
        Self::new(vec![eta; t], vec![sigma; t], d, k_st, noise)
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// First `t` steps.
    pub fn truncated(&self, t: usize) -> Result<Self> {
        if t == 0 || t > self.len() {
            return Err(Error::invalid("T", format!("must lie in 1..={}", self.len())));
        }
        Self::new(self.eta[..t].to_vec(), self.noise_sigma[..t].to_vec(), self.d, self.k_st, self.noise)
    }
}

/// Per-step contributions to the information budget:
/// `(d/2) ln(2πe (η²K² + dσ²)/d) - h(n_t)`.
///
/// For Gaussian noise this is evaluated as `(d/2) ln(1 + η²K²/(dσ²))`.
pub fn info_budget_terms(schedule: &NoisyGdSchedule) -> Vec<f64> {
    let d = schedule.d as f64;
    let k2 = schedule.k_st * schedule.k_st;
    schedule
        .eta
        .iter()
        .zip(&schedule.noise_sigma)
        .zip(&schedule.noise_entropy)
        .map(|((eta, sigma), h)| {
            if *sigma == 0.0 {
                // Deterministic step: data-independent only when η_t = 0.
                return if *eta == 0.0 { 0.0 } else { f64::INFINITY };
            }
            match schedule.noise {
                NoiseKind::Gaussian => 0.5 * d * (eta * eta * k2 / (d * sigma * sigma)).ln_1p(),
                NoiseKind::UniformZeroMean => {
                    0.5 * d * (2.0 * PI * E * (eta * eta * k2 + d * sigma * sigma) / d).ln() - h
                }
            }
        })
        .collect()
}

/// `Î(S)`, the summed information budget of a schedule.
pub fn noisy_gd_info_budget(schedule: &NoisyGdSchedule) -> Result<f64> {
    if schedule.is_empty() {
        return Err(Error::invalid("T", "schedule needs at least one step"));
    }
    let total: f64 = info_budget_terms(schedule).iter().sum();
    if !total.is_finite() {
        return Err(Error::invalid("schedule", "information budget is not finite"));
    }
    Ok(total)
}

/// `α√(2r² Î/(βn)) + (1-α)√(2r²(Î/((1-β)n) + D))`.
pub fn noisy_gd_gen_bound(
    schedule: &NoisyGdSchedule,
    r2: f64,
    kl: f64,
    weights: &RiskWeights,
    n: usize,
) -> Result<f64> {
    Ok(noisy_gd_report(schedule, r2, kl, weights, n)?.total)
}

pub fn noisy_gd_report(
    schedule: &NoisyGdSchedule,
    r2: f64,
    kl: f64,
    weights: &RiskWeights,
    n: usize,
) -> Result<BoundReport> {
    let budget = noisy_gd_info_budget(schedule)?;
    noisy_gd_report_from_budget(budget, r2, kl, weights, n)
}

/// [`noisy_gd_report`] for a precomputed budget `Î`.
pub fn noisy_gd_report_from_budget(
    budget: f64,
    r2: f64,
    kl: f64,
    weights: &RiskWeights,
    n: usize,
) -> Result<BoundReport> {
    ensure_nonneg("information budget", budget)?;
    ensure_nonneg("r2", r2)?;
    ensure_nonneg("kl", kl)?;
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let (a, b) = (weights.alpha(), weights.beta());
    let nf = n as f64;
    let mut r = BoundReport::new(TheoremTag::NoisyGd, a, b, n);
    if b > 0.0 {
        r.target_term = a * (2.0 * r2 * budget / (b * nf)).sqrt();
    }
    r.source_term = (1.0 - a) * (2.0 * r2 * (budget / ((1.0 - b) * nf) + kl)).sqrt();
    r.r2 = Some(r2);
    r.mi_terms_source = vec![budget];
    r.divergence_term = kl;
    r.notes.push("information term is the budget Î(S)".into());
    Ok(r.finish())
}

// ---------------------------------------------------------------------------
// Rademacher comparison bound
// ---------------------------------------------------------------------------

/// Monte Carlo draws of `sup_w Σ_i σ_i ℓ(z_i, w)` for independent
/// Rademacher sign vectors; draw `k` uses `rng.child(k)`.
pub fn rademacher_sup_draws<L: Loss + ?Sized>(
    loss: &L,
    samples: &[Instance],
    search: &GridSearch,
    draws: usize,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let dim = hypothesis_dim(&samples[0]);
    let pts = search.points(dim)?;
    let out = par::map_indexed(draws, |k| {
        let mut g = rng.child(k as u64).rng();
        let signs: Vec<f64> = (0..samples.len())
            .map(|_| if g.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        search
            .maximize_over(&pts, |w| {
                samples.iter().zip(&signs).map(|(z, s)| s * loss.eval(w, z)).sum::<f64>()
            })
            .map(|(_, v)| v)
    });
    out.into_iter().collect()
}

/// `E_{σ, Z}[sup_w σ ℓ(Z, w)]` with `Z` uniform over `samples`; the sign
/// expectation is exact: `½(sup_w ℓ - inf_w ℓ)` per sample.
pub fn single_sample_rademacher<L: Loss + ?Sized>(
    loss: &L,
    samples: &[Instance],
    search: &GridSearch,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let pts = search.points(hypothesis_dim(&samples[0]))?;
    let per = par::map_indexed(samples.len(), |i| -> Result<f64> {
        let z = &samples[i];
        let (_, hi) = search.maximize_over(&pts, |w| loss.eval(w, z))?;
        let (_, neg_lo) = search.maximize_over(&pts, |w| -loss.eval(w, z))?;
        Ok(0.5 * (hi + neg_lo))
    });
    let mut acc = 0.0;
    for v in per {
        acc += v?;
    }
    Ok(acc / samples.len() as f64)
}

/// Inputs of [`rademacher_gen_bound`] besides the samples.
#[derive(Debug, Clone, Copy)]
pub struct RademacherParams {
    pub r2: f64,
    pub delta: f64,
    pub d_w: f64,
    pub mc_sigma_draws: usize,
}

/// Minimum number of Rademacher sign draws.
pub const MIN_SIGMA_DRAWS: usize = 50;

/// `(1-α) d_W + 2α E_{σ⊗μ}[sup_w σℓ(Z,w)] + (2(1-α)/βn) E_σ[sup_w Σ_{S'} σ_i ℓ(z_i,w)]
///  + 3α√(r ln(4/δ)/βn) + (1-α)√(2r² ln(2/δ)(α²/βn + (1-α)²/((1-β)n)))`.
///
/// `source` plays the role of `μ` in the single-sample term and
/// `target` is the `βn`-sample `S'`. The third concentration term uses
/// `r = √r²` exactly as the published statement prints it.
pub fn rademacher_gen_bound<L: Loss + ?Sized>(
    loss: &L,
    source: &[Instance],
    target: &[Instance],
    search: &GridSearch,
    weights: &RiskWeights,
    params: RademacherParams,
    rng: &RngStream,
) -> Result<BoundReport> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::Empty("Rademacher samples"));
    }
    let (a, b) = (weights.alpha(), weights.beta());
    if b == 0.0 {
        return Err(Error::invalid("beta", "Rademacher bound needs β > 0"));
    }
    if params.mc_sigma_draws < MIN_SIGMA_DRAWS {
        return Err(Error::invalid(
            "mc_sigma_draws",
            format!("need at least {MIN_SIGMA_DRAWS}, got {}", params.mc_sigma_draws),
        ));
    }
    check_delta(params.delta)?;
    ensure_nonneg("r2", params.r2)?;
    ensure_nonneg("d_w", params.d_w)?;
    let n = source.len() + target.len();
    let nf = n as f64;
    let beta_n = target.len() as f64;

    let single = single_sample_rademacher(loss, source, search)?;
    let draws = rademacher_sup_draws(loss, target, search, params.mc_sigma_draws, rng)?;
    let multi = draws.iter().sum::<f64>() / draws.len() as f64;

    let r = params.r2.sqrt();
    let mut rep = BoundReport::new(TheoremTag::Rademacher, a, b, n);
    rep.d_w_term = (1.0 - a) * params.d_w;
    rep.complexity_term = 2.0 * a * single + 2.0 * (1.0 - a) / beta_n * multi;
    rep.concentration_term = 3.0 * a * (r * (4.0 / params.delta).ln() / beta_n).sqrt()
        + (1.0 - a)
            * (2.0 * params.r2 * (2.0 / params.delta).ln() * (a * a / beta_n + (1.0 - a).powi(2) / ((1.0 - b) * nf)))
                .sqrt();
    rep.r2 = Some(params.r2);
    rep.delta = Some(params.delta);
    rep.divergence_term = params.d_w;
    rep.notes.push(format!(
        "term 3α√(r ln(4/δ)/βn) uses r = √r² as printed; {} sign draws",
        params.mc_sigma_draws
    ));
    Ok(rep.finish())
}

// ---------------------------------------------------------------------------
// Gaussian mean example
// ---------------------------------------------------------------------------

/// `I(W_ERM; Z_i) = ½ ln(n/(n-1))` for the sample mean of `n` Gaussians.
pub fn gaussian_example_mi(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("n", "need n ≥ 2"));
    }
    let nf = n as f64;
    Ok(0.5 * (nf / (nf - 1.0)).ln())
}

/// `2((n+1)/n)σ² √(½ ln(n/(n-1))) + 2σ² D`.
pub fn gaussian_example_bound(n: usize, variance: f64, kl: f64) -> Result<f64> {
    Ok(gaussian_example_report(n, variance, kl)?.total)
}

pub fn gaussian_example_report(n: usize, variance: f64, kl: f64) -> Result<BoundReport> {
    let mi = gaussian_example_mi(n)?;
    ensure_positive("variance", variance)?;
    ensure_nonneg("kl", kl)?;
    let nf = n as f64;
    let mut r = BoundReport::new(TheoremTag::GaussianClosedForm, 0.0, 0.0, n);
    r.source_term = 2.0 * (nf + 1.0) / nf * variance * mi.sqrt() + 2.0 * variance * kl;
    r.mi_terms_source = vec![mi; n];
    r.divergence_term = kl;
    Ok(r.finish())
}

/// Exact `(E gen, I(W;Z_i))`: `E gen = 2σ²/n + 2σ² D`.
pub fn gaussian_example_exact(n: usize, variance: f64, kl: f64) -> Result<(f64, f64)> {
    let mi = gaussian_example_mi(n)?;
    ensure_positive("variance", variance)?;
    ensure_nonneg("kl", kl)?;
    Ok((2.0 * variance / n as f64 + 2.0 * variance * kl, mi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LossModel;
    use approx::assert_relative_eq;

    fn sg(r2: f64) -> SubgaussianProxy {
        SubgaussianProxy::analytic(r2).unwrap()
    }

    #[test]
    fn psi_inverse_subgaussian_examples() {
        let env = CgfEnvelope::subgaussian(0.5).unwrap();
        assert_relative_eq!(psi_star_inverse(&env, 2.0, Side::Plus).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(psi_star_inverse(&env, 0.0, Side::Minus).unwrap(), 0.0);
        assert!(psi_star_inverse(&env, -1.0, Side::Plus).is_err());
    }

    #[test]
    fn numeric_inverse_matches_closed_form() {
        let env = CgfEnvelope::subgaussian(1.7).unwrap();
        for x in [1e-4, 0.05, 0.3, 2.0, 40.0] {
            let num = psi_star_inverse_numeric(&env, x, Side::Plus).unwrap();
            let exact = (2.0 * 1.7 * x).sqrt();
            assert!((num - exact).abs() <= 1e-9 * exact, "{num} vs {exact}");
        }
    }

    #[test]
    fn bounded_interval_is_respected() {
        // ψ(λ) = λ² on (-1, 0.5): the unconstrained minimizer √x lies
        // outside for x = 1, so the infimum is attained at the boundary.
        let env = CgfEnvelope::custom(|l| l * l, -1.0, 0.5).unwrap();
        let v = psi_star_inverse(&env, 1.0, Side::Plus).unwrap();
        assert_relative_eq!(v, (1.0 + 0.25) / 0.5, max_relative = 1e-6);
        let m = psi_star_inverse(&env, 1.0, Side::Minus).unwrap();
        assert_relative_eq!(m, 2.0, max_relative = 1e-6);
        assert!(CgfEnvelope::custom(|l| l * l, 0.0, 1.0).is_err());
    }

    #[test]
    fn theorem1_examples() {
        let env = CgfEnvelope::subgaussian(1.0).unwrap();
        let w = RiskWeights::new(0.5, 0.5).unwrap();
        let (u, l) = gen_bound_theorem1(&env, &[0.0; 5], &[0.0; 5], 0.0, &w, 10).unwrap();
        assert_eq!((u, l), (0.0, 0.0));
        let (u, l) = gen_bound_theorem1(&env, &[0.1; 5], &[0.2; 5], 0.3, &w, 10).unwrap();
        assert_relative_eq!(u, -l, epsilon = 1e-12);
        let w1 = RiskWeights::new(1.0, 0.5).unwrap();
        let (a, _) = gen_bound_theorem1(&env, &[0.1; 5], &[0.2; 5], 0.3, &w1, 10).unwrap();
        let (b, _) = gen_bound_theorem1(&env, &[0.1; 5], &[9.0; 5], 7.0, &w1, 10).unwrap();
        assert_eq!(a, b);
        assert!(gen_bound_theorem1(&env, &[0.1; 4], &[0.2; 5], 0.3, &w, 10).is_err());
        assert!(gen_bound_theorem1(&env, &[], &[0.2; 10], 0.3, &RiskWeights::source_only(), 10).is_err());
    }

    #[test]
    fn beta0_examples() {
        let env = CgfEnvelope::subgaussian(1.0).unwrap();
        assert_eq!(gen_bound_beta0(&env, &[0.0; 3], 0.0, 3).unwrap().0, 0.0);
        assert_relative_eq!(gen_bound_beta0(&env, &[0.0; 4], 0.5, 4).unwrap().0, 1.0, epsilon = 1e-15);
        let a = gen_bound_beta0(&env, &[0.2; 4], 0.1, 4).unwrap().0;
        let b = gen_bound_beta0(&env, &[0.2; 40], 0.1, 40).unwrap().0;
        assert_relative_eq!(a, b, epsilon = 1e-14);
        assert!(gen_bound_beta0(&env, &[], 0.1, 0).is_err());
    }

    #[test]
    fn subgaussian_examples() {
        let w = RiskWeights::new(0.5, 0.5).unwrap();
        assert_eq!(gen_bound_subgaussian(&sg(1.0), &[0.0; 2], &[0.0; 2], 0.0, &w, 4).unwrap(), 0.0);
        let v = gen_bound_subgaussian(&sg(1.0), &[], &[0.05268], 0.5, &RiskWeights::source_only(), 1).unwrap();
        assert_relative_eq!(v, (2.0f64 * 0.55268).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(v, 1.0514, epsilon = 1e-4);
        let env = CgfEnvelope::subgaussian(2.3).unwrap();
        let t = [0.01, 0.2, 0.05];
        let s = [0.3, 0.0, 0.7, 0.1];
        let w = RiskWeights::new(0.4, 3.0 / 7.0).unwrap();
        let direct = gen_bound_subgaussian(&sg(2.3), &t, &s, 0.4, &w, 7).unwrap();
        let via_t1 = gen_bound_theorem1(&env, &t, &s, 0.4, &w, 7).unwrap().0;
        assert!((direct - via_t1).abs() <= 1e-12);
    }

    #[test]
    fn chain_rule_examples() {
        assert_eq!(gen_bound_chain_rule(1.0, 0.0, 0.0, 10).unwrap(), 0.0);
        let a = gen_bound_chain_rule(1.0, 10.0 * 0.3, 0.2, 10).unwrap();
        let b = gen_bound_chain_rule(1.0, 1000.0 * 0.3, 0.2, 1000).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);
        assert_relative_eq!(a, (2.0f64 * 0.5).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn excess_examples() {
        let w = RiskWeights::new(0.5, 0.5).unwrap();
        let r = excess_report(0.0, 0.0, &w, 10, 0.5, 0.0, 0.0).unwrap();
        assert_eq!(r.total, 0.0);
        let r = excess_report(0.0, 1.0, &w, 100, 0.05, 0.0, 0.0).unwrap();
        assert_relative_eq!(r.concentration_term, (2.0 * 40f64.ln() / 100.0).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(r.concentration_term, 0.2716, epsilon = 1e-4);
        let w1 = RiskWeights::new(1.0, 0.5).unwrap();
        assert_eq!(excess_report(0.0, 1.0, &w1, 100, 0.05, 5.0, 0.0).unwrap().d_w_term, 0.0);
        assert!(excess_bound_theorem2(0.1, 1.0, &w, 10, 1.0, 0.0, 0.0).is_err());
        assert!(excess_bound_theorem2(0.1, 1.0, &w, 10, 0.0, 0.0, 0.0).is_err());
        let src = excess_report(0.2, 1.0, &RiskWeights::source_only(), 50, 0.05, 0.3, 0.01).unwrap();
        assert_eq!(src.d_w_term, 0.3);
        assert_relative_eq!(src.concentration_term, (2.0 * 40f64.ln() / 50.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn phi_examples() {
        let w = RiskWeights::new(0.5, 0.5).unwrap();
        assert_eq!(gen_bound_phi(1.0, &[0.0; 2], &[0.0; 2], 0.0, &w, 4, 0.01).unwrap(), 0.01);
        let v = gen_bound_phi(2.0, &[0.1; 2], &[0.1; 2], 0.2, &w, 4, 0.0).unwrap();
        assert_relative_eq!(v, 0.6, epsilon = 1e-14);
        let w0 = RiskWeights::new(0.0, 0.5).unwrap();
        let a = gen_bound_phi(2.0, &[0.1; 2], &[0.1; 2], 0.2, &w0, 4, 0.0).unwrap();
        let b = gen_bound_phi(2.0, &[1.5; 2], &[0.1; 2], 0.2, &w0, 4, 0.0).unwrap();
        assert_eq!(a, b);
        assert!(gen_bound_phi(2.0, &[0.1; 3], &[0.1; 2], 0.2, &w, 4, 0.0).is_err());
    }

    #[test]
    fn info_budget_examples() {
        let s = NoisyGdSchedule::constant(1, 0.1, 0.1, 1, 1.0, NoiseKind::Gaussian).unwrap();
        assert!((noisy_gd_info_budget(&s).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-12);
        let z = NoisyGdSchedule::constant(10, 0.0, 0.3, 2, 1.0, NoiseKind::Gaussian).unwrap();
        assert_eq!(noisy_gd_info_budget(&z).unwrap(), 0.0);
        let det = NoisyGdSchedule::constant(3, 0.1, 0.0, 1, 1.0, NoiseKind::Gaussian).unwrap();
        assert!(noisy_gd_info_budget(&det).is_err());
        assert!(NoisyGdSchedule::constant(3, 0.1, -0.1, 1, 1.0, NoiseKind::Gaussian).is_err());
        let u = NoisyGdSchedule::constant(4, 0.0, 0.3, 2, 1.0, NoiseKind::UniformZeroMean).unwrap();
        assert!(noisy_gd_info_budget(&u).unwrap() > 0.0);
    }

    #[test]
    fn general_formula_agrees_with_gaussian_reduction() {
        let s = NoisyGdSchedule::new(vec![0.05, 0.2, 0.01], vec![0.1, 0.3, 0.02], 3, 2.5, NoiseKind::Gaussian).unwrap();
        let d = 3.0;
        let general: f64 = s
            .eta
            .iter()
            .zip(&s.noise_sigma)
            .zip(&s.noise_entropy)
            .map(|((e, sg), h)| 0.5 * d * (2.0 * PI * E * (e * e * 6.25 + d * sg * sg) / d).ln() - h)
            .sum();
        assert_relative_eq!(noisy_gd_info_budget(&s).unwrap(), general, epsilon = 1e-12);
    }

    #[test]
    fn noisy_gd_bound_examples() {
        let w = RiskWeights::new(0.5, 0.5).unwrap();
        assert_eq!(noisy_gd_report_from_budget(0.0, 1.0, 0.0, &w, 100).unwrap().total, 0.0);
        let v = noisy_gd_report_from_budget(1.0, 1.0, 0.25, &w, 100).unwrap().total;
        assert_relative_eq!(v, 0.5 * (2.0f64 / 50.0).sqrt() + 0.5 * (2.0 * (1.0 / 50.0 + 0.25f64)).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(v, 0.4674, epsilon = 1e-4);
        let w0 = RiskWeights::new(0.0, 0.5).unwrap();
        let v0 = noisy_gd_report_from_budget(1.0, 1.0, 0.25, &w0, 100).unwrap().total;
        assert_relative_eq!(v0, (2.0 * (1.0 / 50.0 + 0.25f64)).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn gaussian_example_values() {
        assert_relative_eq!(gaussian_example_bound(10, 1.0, 0.5).unwrap(), 1.5049, epsilon = 1e-4);
        let (g, mi) = gaussian_example_exact(10, 1.0, 0.0).unwrap();
        assert_relative_eq!(g, 0.2, epsilon = 1e-15);
        assert_relative_eq!(gaussian_example_exact(2, 1.0, 0.0).unwrap().1, 0.5 * 2f64.ln(), epsilon = 1e-15);
        assert!(mi > 0.0);
        assert!(gaussian_example_bound(1, 1.0, 0.0).is_err());
        assert!(gaussian_example_exact(1, 1.0, 0.0).is_err());
        let big = gaussian_example_bound(1_000_000, 1.0, 0.0).unwrap();
        assert!(big < 2e-3);
    }

    #[test]
    fn rademacher_zero_loss_leaves_concentration_and_dw() {
        struct Zero;
        impl Loss for Zero {
            fn eval(&self, _: &[f64], _: &Instance) -> f64 {
                0.0
            }
            fn gradient_into(&self, _: &[f64], _: &Instance, out: &mut [f64]) {
                out.iter_mut().for_each(|o| *o = 0.0);
            }
        }
        let s: Vec<Instance> = (0..20).map(|i| Instance::labeled(vec![i as f64, 1.0], 0)).collect();
        let t: Vec<Instance> = (0..20).map(|i| Instance::labeled(vec![1.0, i as f64], 1)).collect();
        let w = RiskWeights::new(0.5, 0.5).unwrap();
        let p = RademacherParams { r2: 1.0, delta: 0.05, d_w: 0.7, mc_sigma_draws: 50 };
        let search = GridSearch::for_dim(2, 3.0).with_resolution(8);
        let r = rademacher_gen_bound(&Zero, &s, &t, &search, &w, p, &RngStream::new(1, 1)).unwrap();
        assert_eq!(r.complexity_term, 0.0);
        assert_relative_eq!(r.total, r.d_w_term + r.concentration_term, epsilon = 1e-15);
        assert_relative_eq!(r.d_w_term, 0.35, epsilon = 1e-15);
        let few = RademacherParams { mc_sigma_draws: 10, ..p };
        assert!(rademacher_gen_bound(&Zero, &s, &t, &search, &w, few, &RngStream::new(1, 1)).is_err());
    }

    #[test]
    fn rademacher_mean_below_max() {
        let t = crate::model::sample(&crate::model::DistributionSpec::logistic_target(), 60, &RngStream::new(3, 3)).unwrap();
        let search = GridSearch::for_dim(2, 3.0).with_resolution(16);
        let draws = rademacher_sup_draws(&LossModel::LogisticCrossEntropy, &t, &search, 50, &RngStream::new(4, 4)).unwrap();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let max = draws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(mean <= max);
        assert!(mean > 0.0);
    }

    #[test]
    fn empirical_proxy_covers_range() {
        let t = crate::model::sample(&crate::model::DistributionSpec::logistic_target(), 100, &RngStream::new(3, 5)).unwrap();
        let p = SubgaussianProxy::empirical(&LossModel::LogisticCrossEntropy, &t, &GridSearch::for_dim(2, 3.0).with_resolution(16), &[]).unwrap();
        assert_eq!(p.provenance, ProxyProvenance::EmpiricalRange);
        // sup loss over the ball is softplus(3‖x‖) for the worst sample
        let worst = t.iter().map(|z| crate::model::norm(&z.x)).fold(0.0, f64::max);
        assert!(p.r2.sqrt() * 2.0 <= crate::model::softplus(3.0 * worst) + 1e-9);
        assert!(SubgaussianProxy::from_range(1.0, 1.0).is_err());
    }
}
