//! Evaluating a single bound from a key-value "parts" file.
//!
//! ```text
//! theorem = subgaussian
//! r2 = 1
//! alpha = 0.5
//! beta = 0.5
//! mi_target = 0.05*10
//! mi_source = 0.02*10
//! kl = 0.3
//! ```
//!
//! `n` defaults to the total number of information terms. Keys per
//! theorem:
//!
//! | theorem | keys |
//! |---|---|
//! | `theorem1`, `source-only` | `envelope` (`subgaussian` with `r2`, or `gaussian-example` with `variance`, `mean_gap`), `side` (`upper`/`lower`), `mi_target`, `mi_source`, `kl`, `alpha`, `beta`, `n` |
//! | `subgaussian` | `r2`, `mi_target`, `mi_source`, `kl`, `alpha`, `beta`, `n` |
//! | `chain-rule` | `r2`, `mi_full`, `kl`, `n` |
//! | `excess-risk` | `gen_bound`, `r2`, `alpha`, `beta`, `n`, `delta`, `d_w`, `epsilon` |
//! | `phi-divergence` | `sigma_inf`, `mi_target`, `mi_source`, `tv`, `alpha`, `beta`, `n`, `epsilon` |
//! | `noisy-gd` | `eta`, `noise_sigma` (lists, or scalars with `T`), `d`, `k_st`, `noise`, `r2`, `kl`, `alpha`, `beta`, `n` |
//! | `gaussian-closed-form` | `n`, `variance`, `kl` |

use super::config::KeyValues;
use crate::bounds::{
    beta0_report, chain_rule_report, excess_report, gaussian_example_report, noisy_gd_report, phi_report,
    subgaussian_report, theorem1_report, CgfEnvelope, NoiseKind, NoisyGdSchedule, Side, SubgaussianProxy,
};
use crate::error::{Error, Result};
use crate::report::{BoundReport, TheoremTag};
use crate::risk::RiskWeights;

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct PartsOverrides {
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config {
        line: 0,
        reason: format!("missing key `{key}`"),
    })
}

/// Parses `text` and evaluates the named bound.
pub fn evaluate_parts(text: &str, overrides: PartsOverrides) -> Result<BoundReport> {
    let mut kv = KeyValues::parse(text)?;
    let tag_raw: String = required(kv.take_raw("theorem"), "theorem")?;
    let tag = TheoremTag::parse(&tag_raw).ok_or_else(|| Error::Config {
        line: 0,
        reason: format!("unknown theorem `{tag_raw}`"),
    })?;

    let mi_target = kv.take_list::<f64>("mi_target")?.unwrap_or_default();
    let mi_source = kv.take_list::<f64>("mi_source")?.unwrap_or_default();
    let n = kv
        .take_parsed::<usize>("n")?
        .unwrap_or(mi_target.len() + mi_source.len());
    let alpha = kv.take_parsed::<f64>("alpha")?.unwrap_or(0.0);
    let beta = kv.take_parsed::<f64>("beta")?.unwrap_or(0.0);
    let kl = kv.take_parsed::<f64>("kl")?.unwrap_or(0.0);
    let file_delta = kv.take_parsed::<f64>("delta")?;
    let file_epsilon = kv.take_parsed::<f64>("epsilon")?;
    let delta = overrides.delta.or(file_delta);
    let epsilon = overrides.epsilon.or(file_epsilon).unwrap_or(0.0);

    let report = match tag {
        TheoremTag::Theorem1 | TheoremTag::SourceOnly => {
            let env = match kv.take_raw("envelope").as_deref().unwrap_or("subgaussian") {
                "subgaussian" => CgfEnvelope::subgaussian(required(kv.take_parsed("r2")?, "r2")?)?,
                "gaussian-example" => CgfEnvelope::gaussian_example(
                    n,
                    required(kv.take_parsed("variance")?, "variance")?,
                    kv.take_parsed("mean_gap")?.unwrap_or(0.0),
                )?,
                other => {
                    return Err(Error::Config {
                        line: 0,
                        reason: format!("unknown envelope `{other}`"),
                    })
                }
            };
            let side = match kv.take_raw("side").as_deref().unwrap_or("upper") {
                "upper" => Side::Minus,
                "lower" => Side::Plus,
                other => {
                    return Err(Error::Config {
                        line: 0,
                        reason: format!("unknown side `{other}` (expected upper or lower)"),
                    })
                }
            };
            if tag == TheoremTag::SourceOnly {
                beta0_report(&env, &mi_source, kl, n, side)?
            } else {
                theorem1_report(&env, &mi_target, &mi_source, kl, &RiskWeights::new(alpha, beta)?, n, side)?
            }
        }
        TheoremTag::Subgaussian => {
            let r2 = SubgaussianProxy::analytic(required(kv.take_parsed("r2")?, "r2")?)?;
            subgaussian_report(&r2, &mi_target, &mi_source, kl, &RiskWeights::new(alpha, beta)?, n)?
        }
        TheoremTag::ChainRule => chain_rule_report(
            required(kv.take_parsed("r2")?, "r2")?,
            required(kv.take_parsed("mi_full")?, "mi_full")?,
            kl,
            n,
        )?,
        TheoremTag::ExcessRisk => excess_report(
                required(kv.take_parsed("gen_bound")?, "gen_bound")?,
                required(kv.take_parsed("r2")?, "r2")?,
                &RiskWeights::new(alpha, beta)?,
                n,
                required(delta, "delta")?,
                kv.take_parsed("d_w")?.unwrap_or(0.0),
                epsilon,
            )?,
        TheoremTag::PhiDivergence => phi_report(
            required(kv.take_parsed("sigma_inf")?, "sigma_inf")?,
            &mi_target,
            &mi_source,
            required(kv.take_parsed("tv")?, "tv")?,
            &RiskWeights::new(alpha, beta)?,
            n,
            epsilon,
        )?,
        TheoremTag::NoisyGd => {
            let t = kv.take_parsed::<usize>("T")?;
            let mut eta = required(kv.take_list::<f64>("eta")?, "eta")?;
            let mut sigma = required(kv.take_list::<f64>("noise_sigma")?, "noise_sigma")?;
            if let Some(t) = t {
                for v in [&mut eta, &mut sigma] {
                    if v.len() == 1 {
                        *v = vec![v[0]; t];
                    }
                }
            }
            let noise = match kv.take_raw("noise").as_deref().unwrap_or("gaussian") {
                "gaussian" => NoiseKind::Gaussian,
                "uniform" => NoiseKind::UniformZeroMean,
                other => {
                    return Err(Error::Config {
                        line: 0,
                        reason: format!("unknown noise `{other}`"),
                    })
                }
            };
            let schedule = NoisyGdSchedule::new(
                eta,
                sigma,
                required(kv.take_parsed("d")?, "d")?,
                required(kv.take_parsed("k_st")?, "k_st")?,
                noise,
            )?;
            noisy_gd_report(
                &schedule,
                required(kv.take_parsed("r2")?, "r2")?,
                kl,
                &RiskWeights::new(alpha, beta)?,
                n,
            )?
        }
        TheoremTag::GaussianClosedForm => {
            gaussian_example_report(n, required(kv.take_parsed("variance")?, "variance")?, kl)?
        }
        TheoremTag::Rademacher => {
            return Err(Error::Unsupported(
                "the Rademacher bound needs samples; run the logistic experiment instead".into(),
            ))
        }
    };
    kv.finish()?;
    Ok(report)
}
