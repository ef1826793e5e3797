//! Key-value experiment configuration.
//!
//! One `key = value` per line; `#` starts a comment; lists are
//! comma-separated. A list entry `v*k` repeats `v` `k` times. Unknown keys
//! are errors so typos do not silently fall back to defaults.
//!
//! ```text
//! experiment = logistic
//! preset = desk
//! seed = 7
//! n_target_grid = 100, 500, 2000
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::bounds::NoiseKind;
use crate::error::{Error, Result};
use crate::model::{DistributionSpec, LossModel};
use crate::optimizers::GdConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    GaussianMean,
    LogisticTransfer,
    NoisyGd,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::GaussianMean => "gaussian",
            Experiment::LogisticTransfer => "logistic",
            Experiment::NoisyGd => "noisy-gd",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(Experiment::GaussianMean),
            "logistic" => Ok(Experiment::LogisticTransfer),
            "noisy-gd" | "noisy_gd" => Ok(Experiment::NoisyGd),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}

/// `Paper` is the full-scale setup; `Desk` is a reduced grid that runs
/// in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Paper,
    Desk,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(format!("unknown preset `{other}` (expected paper or desk)")),
        }
    }
}

/// Settings shared by every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonConfig {
    pub seed: u64,
    pub trials: usize,
    /// Size of the fixed target evaluation pool for Monte Carlo population
    /// risks, and the draw count for Monte Carlo KL.
    pub mc_samples: usize,
    /// Histogram bins per coordinate; `None` uses the default rule.
    pub bins: Option<usize>,
    pub miller_madow: bool,
    pub delta: f64,
    pub epsilon: f64,
    pub output: Option<PathBuf>,
    /// Attach per-trial records (and the first noisy-GD trace) to the rows.
    pub keep_records: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianSimulation {
    /// Draws `Z_1`, the mean of the other `n - 1` samples and their scatter
    /// (a χ² variate) instead of all `n` samples. Same joint law of
    /// `(W, Z_1, L̂)`, O(1) per trial.
    SufficientStatistics,
    /// Draws all `n` samples.
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianConfig {
    pub n_grid: Vec<usize>,
    pub variance: f64,
    pub source_mean: f64,
    pub target_mean: f64,
    pub simulation: GaussianSimulation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub n_source: usize,
    pub n_target_grid: Vec<usize>,
    pub source: DistributionSpec,
    pub target: DistributionSpec,
    /// Hypothesis ball radius.
    pub radius: f64,
    /// Grid intervals per axis for `d̂_W`, `r²` and Rademacher suprema.
    pub grid_resolution: usize,
    pub sigma_draws: usize,
    /// `w*` is trained on `w_star_factor · max n_t` target samples.
    pub w_star_factor: usize,
    pub gd: GdConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyGdConfig {
    pub loss: LossModel,
    pub source: DistributionSpec,
    pub target: DistributionSpec,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub t_grid: Vec<usize>,
    pub eta: f64,
    pub noise_sigma: f64,
    pub noise: NoiseKind,
    /// Gradient-norm bound; `None` uses the analytic ceiling when one
    /// exists, else the inflated probe maximum.
    pub k_st: Option<f64>,
    pub w0: Option<Vec<f64>>,
    pub grid_resolution: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    GaussianMean(GaussianConfig),
    LogisticTransfer(LogisticConfig),
    NoisyGd(NoisyGdConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub common: CommonConfig,
    pub kind: ExperimentKind,
}

impl ExperimentConfig {
    pub fn experiment(&self) -> Experiment {
        match self.kind {
            ExperimentKind::GaussianMean(_) => Experiment::GaussianMean,
            ExperimentKind::LogisticTransfer(_) => Experiment::LogisticTransfer,
            ExperimentKind::NoisyGd(_) => Experiment::NoisyGd,
        }
    }

    pub fn defaults(experiment: Experiment, preset: Preset) -> Self {
        let common = CommonConfig {
            seed: 0,
            trials: 100,
            mc_samples: 1_000_000,
            bins: None,
            miller_madow: false,
            delta: 0.05,
            epsilon: 0.0,
            output: None,
            keep_records: false,
        };
        match experiment {
            Experiment::GaussianMean => ExperimentConfig {
                common: CommonConfig {
                    trials: match preset {
                        Preset::Paper => 100_000,
                        Preset::Desk => 20_000,
                    },
                    ..common
                },
                kind: ExperimentKind::GaussianMean(GaussianConfig {
                    n_grid: vec![10, 100, 1000, 10_000],
                    variance: 1.0,
                    source_mean: 0.0,
                    target_mean: 1.0,
                    simulation: GaussianSimulation::SufficientStatistics,
                }),
            },
            Experiment::LogisticTransfer => {
                let (n_source, n_target_grid) = match preset {
                    Preset::Paper => (10_000, vec![100, 1000, 10_000, 100_000]),
                    Preset::Desk => (2000, vec![100, 500, 2000]),
                };
                ExperimentConfig {
                    common: CommonConfig {
                        bins: Some(8),
                        ..common
                    },
                    kind: ExperimentKind::LogisticTransfer(LogisticConfig {
                        n_source,
                        n_target_grid,
                        source: DistributionSpec::logistic_source(),
                        target: DistributionSpec::logistic_target(),
                        radius: 3.0,
                        grid_resolution: 64,
                        sigma_draws: 50,
                        w_star_factor: 10,
                        gd: GdConfig {
                            max_iters: 5000,
                            grad_tol: 1e-7,
                            ..GdConfig::default().with_radius(3.0)
                        },
                    }),
                }
            }
            Experiment::NoisyGd => ExperimentConfig {
                common: CommonConfig {
                    trials: 200,
                    bins: Some(8),
                    ..common
                },
                kind: ExperimentKind::NoisyGd(NoisyGdConfig {
                    loss: LossModel::LogisticCrossEntropy,
                    source: DistributionSpec::logistic_source(),
                    target: DistributionSpec::logistic_target(),
                    n: 400,
                    alpha: 0.5,
                    beta: 0.5,
                    t_grid: vec![25, 50, 100],
                    eta: 0.05,
                    noise_sigma: 0.1,
                    noise: NoiseKind::Gaussian,
                    k_st: None,
                    w0: None,
                    grid_resolution: 64,
                }),
            },
        }
    }

    /// Parses a configuration file. `expected` is the experiment chosen on
    /// the command line; an `experiment` key must agree with it.
    pub fn parse(text: &str, expected: Option<Experiment>) -> Result<Self> {
        Self::parse_with_preset(text, expected, None)
    }

    /// [`parse`](Self::parse) where `preset`, if given, replaces any
    /// `preset` key in the file as the base the file's keys are applied to.
    pub fn parse_with_preset(text: &str, expected: Option<Experiment>, preset: Option<Preset>) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let from_file = kv.take_parsed::<Experiment>("experiment")?;
        let experiment = match (from_file, expected) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config {
                    line: kv.line_of("experiment"),
                    reason: format!("file is for `{a}` but `{b}` was requested"),
                })
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => {
                return Err(Error::Config {
                    line: 0,
                    reason: "missing `experiment` key".into(),
                })
            }
        };
        let from_file = kv.take_parsed::<Preset>("preset")?;
        let preset = preset.or(from_file).unwrap_or_default();
        let mut cfg = Self::defaults(experiment, preset);
        cfg.apply(&mut kv)?;
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, kv: &mut KeyValues) -> Result<()> {
        let c = &mut self.common;
        kv.set("seed", &mut c.seed)?;
        kv.set("trials", &mut c.trials)?;
        kv.set("mc_samples", &mut c.mc_samples)?;
        if let Some(b) = kv.take_parsed::<usize>("bins")? {
            c.bins = Some(b);
        }
        kv.set("miller_madow", &mut c.miller_madow)?;
        kv.set("delta", &mut c.delta)?;
        kv.set("epsilon", &mut c.epsilon)?;
        kv.set("keep_records", &mut c.keep_records)?;
        if let Some(p) = kv.take_raw("output") {
            c.output = Some(PathBuf::from(p));
        }
        match &mut self.kind {
            ExperimentKind::GaussianMean(g) => {
                kv.set_list("n_grid", &mut g.n_grid)?;
                kv.set("variance", &mut g.variance)?;
                kv.set("source_mean", &mut g.source_mean)?;
                kv.set("target_mean", &mut g.target_mean)?;
                if let Some(s) = kv.take_raw("simulation") {
                    g.simulation = match s.as_str() {
                        "sufficient" => GaussianSimulation::SufficientStatistics,
                        "direct" => GaussianSimulation::Direct,
                        other => {
                            return Err(Error::Config {
                                line: kv.line_of("simulation"),
                                reason: format!("unknown simulation `{other}`"),
                            })
                        }
                    };
                }
            }
            ExperimentKind::LogisticTransfer(l) => {
                kv.set("n_source", &mut l.n_source)?;
                kv.set_list("n_target_grid", &mut l.n_target_grid)?;
                l.source = logistic_spec(kv, "source", &l.source)?;
                l.target = logistic_spec(kv, "target", &l.target)?;
                kv.set("radius", &mut l.radius)?;
                l.gd.projection_radius = Some(l.radius);
                kv.set("grid_resolution", &mut l.grid_resolution)?;
                kv.set("sigma_draws", &mut l.sigma_draws)?;
                kv.set("w_star_factor", &mut l.w_star_factor)?;
                kv.set("gd_max_iters", &mut l.gd.max_iters)?;
                kv.set("gd_tol", &mut l.gd.grad_tol)?;
            }
            ExperimentKind::NoisyGd(g) => {
                if let Some(s) = kv.take_raw("loss") {
                    g.loss = match s.as_str() {
                        "logistic" => LossModel::LogisticCrossEntropy,
                        "squared" => {
                            g.source = DistributionSpec::scalar_gaussian(0.0, 1.0)?;
                            g.target = DistributionSpec::scalar_gaussian(1.0, 1.0)?;
                            LossModel::SquaredError
                        }
                        other => {
                            return Err(Error::Config {
                                line: kv.line_of("loss"),
                                reason: format!("unknown loss `{other}`"),
                            })
                        }
                    };
                }
                match g.loss {
                    LossModel::LogisticCrossEntropy => {
                        g.source = logistic_spec(kv, "source", &g.source)?;
                        g.target = logistic_spec(kv, "target", &g.target)?;
                    }
                    LossModel::SquaredError => {
                        g.source = scalar_spec(kv, "source", &g.source)?;
                        g.target = scalar_spec(kv, "target", &g.target)?;
                    }
                }
                kv.set("n", &mut g.n)?;
                kv.set("alpha", &mut g.alpha)?;
                kv.set("beta", &mut g.beta)?;
                kv.set_list("t_grid", &mut g.t_grid)?;
                kv.set("eta", &mut g.eta)?;
                kv.set("noise_sigma", &mut g.noise_sigma)?;
                if let Some(s) = kv.take_raw("noise") {
                    g.noise = match s.as_str() {
                        "gaussian" => NoiseKind::Gaussian,
                        "uniform" => NoiseKind::UniformZeroMean,
                        other => {
                            return Err(Error::Config {
                                line: kv.line_of("noise"),
                                reason: format!("unknown noise `{other}`"),
                            })
                        }
                    };
                }
                if let Some(k) = kv.take_parsed::<f64>("k_st")? {
                    g.k_st = Some(k);
                }
                if let Some(w) = kv.take_list::<f64>("w0")? {
                    g.w0 = Some(w);
                }
                kv.set("grid_resolution", &mut g.grid_resolution)?;
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.common;
        let positive = |name: &'static str, v: usize| {
            if v == 0 {
                Err(Error::invalid(name, "must be positive"))
            } else {
                Ok(())
            }
        };
        positive("trials", c.trials)?;
        positive("mc_samples", c.mc_samples)?;
        if let Some(b) = c.bins {
            positive("bins", b)?;
        }
        if !(c.delta > 0.0 && c.delta < 1.0) {
            return Err(Error::invalid("delta", format!("must lie in (0,1), got {}", c.delta)));
        }
        if !(c.epsilon >= 0.0 && c.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be a nonnegative real"));
        }
        let nonempty = |name: &'static str, v: &[usize]| {
            if v.is_empty() {
                Err(Error::invalid(name, "grid must be nonempty"))
            } else if v.contains(&0) {
                Err(Error::invalid(name, "grid entries must be positive"))
            } else {
                Ok(())
            }
        };
        match &self.kind {
            ExperimentKind::GaussianMean(g) => {
                nonempty("n_grid", &g.n_grid)?;
                if g.n_grid.contains(&1) {
                    return Err(Error::invalid("n_grid", "need n ≥ 2"));
                }
                DistributionSpec::scalar_gaussian(g.source_mean, g.variance)?;
                DistributionSpec::scalar_gaussian(g.target_mean, g.variance)?;
            }
            ExperimentKind::LogisticTransfer(l) => {
                positive("n_source", l.n_source)?;
                nonempty("n_target_grid", &l.n_target_grid)?;
                positive("grid_resolution", l.grid_resolution)?;
                positive("w_star_factor", l.w_star_factor)?;
                if l.sigma_draws < crate::bounds::MIN_SIGMA_DRAWS {
                    return Err(Error::invalid(
                        "sigma_draws",
                        format!("need at least {}", crate::bounds::MIN_SIGMA_DRAWS),
                    ));
                }
                if !(l.radius > 0.0) {
                    return Err(Error::invalid("radius", "must be positive"));
                }
            }
            ExperimentKind::NoisyGd(g) => {
                positive("n", g.n)?;
                nonempty("t_grid", &g.t_grid)?;
                crate::risk::RiskWeights::new(g.alpha, g.beta)?;
                if !(g.eta >= 0.0) || !(g.noise_sigma > 0.0) {
                    return Err(Error::invalid("schedule", "need η ≥ 0 and σ > 0"));
                }
                if let Some(w) = &g.w0 {
                    if w.len() != g.source.feature_dim() {
                        return Err(Error::DimensionMismatch {
                            expected: g.source.feature_dim(),
                            got: w.len(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn logistic_spec(kv: &mut KeyValues, prefix: &str, base: &DistributionSpec) -> Result<DistributionSpec> {
    let DistributionSpec::TruncatedGaussianLogistic {
        mut mean,
        mut diag_variance,
        mut box_halfwidth,
        mut label_weights,
    } = base.clone()
    else {
        return Err(Error::Unsupported("expected a logistic spec".into()));
    };
    let pair = |kv: &mut KeyValues, key: String, slot: &mut [f64; 2]| -> Result<()> {
        if let Some(v) = kv.take_list::<f64>(&key)? {
            if v.len() != 2 {
                return Err(Error::Config {
                    line: kv.line_of(&key),
                    reason: format!("`{key}` needs 2 values"),
                });
            }
            *slot = [v[0], v[1]];
        }
        Ok(())
    };
    pair(kv, format!("{prefix}_mean"), &mut mean)?;
    pair(kv, format!("{prefix}_weights"), &mut label_weights)?;
    pair(kv, format!("{prefix}_variance"), &mut diag_variance)?;
    kv.set(&format!("{prefix}_box"), &mut box_halfwidth)?;
    DistributionSpec::truncated_logistic(mean, diag_variance, box_halfwidth, label_weights)
}

fn scalar_spec(kv: &mut KeyValues, prefix: &str, base: &DistributionSpec) -> Result<DistributionSpec> {
    let DistributionSpec::ScalarGaussian { mut mean, mut variance } = base.clone() else {
        return Err(Error::Unsupported("expected a scalar Gaussian spec".into()));
    };
    kv.set(&format!("{prefix}_mean"), &mut mean)?;
    kv.set(&format!("{prefix}_variance"), &mut variance)?;
    DistributionSpec::scalar_gaussian(mean, variance)
}

/// Parsed `key = value` lines, consumed key by key.
#[derive(Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
    lines: BTreeMap<String, usize>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    reason: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config {
                    line,
                    reason: "empty key".into(),
                });
            }
            if entries.insert(key.clone(), (line, v.trim().to_string())).is_some() {
                return Err(Error::Config {
                    line,
                    reason: format!("duplicate key `{key}`"),
                });
            }
        }
        let lines = entries.iter().map(|(k, (l, _))| (k.clone(), *l)).collect();
        Ok(KeyValues { entries, lines })
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    pub fn take_raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    pub fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Config {
                line,
                reason: format!("`{key}`: {e}"),
            }),
        }
    }

    pub fn take_list<T: FromStr + Clone>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        let Some((line, v)) = self.entries.remove(key) else {
            return Ok(None);
        };
        let err = |reason: String| Error::Config {
            line,
            reason: format!("`{key}`: {reason}"),
        };
        let mut out = Vec::new();
        for tok in v.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (value, count) = match tok.split_once('*') {
                Some((a, b)) => (a.trim(), b.trim().parse::<usize>().map_err(|e| err(e.to_string()))?),
                None => (tok, 1),
            };
            let parsed = value.parse::<T>().map_err(|e| err(e.to_string()))?;
            out.extend(std::iter::repeat_n(parsed, count));
        }
        Ok(Some(out))
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: fmt::Display,
    {
        if let Some(v) = self.take_parsed(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn set_list<T: FromStr + Clone>(&mut self, key: &str, slot: &mut Vec<T>) -> Result<()>
    where
        T::Err: fmt::Display,
    {
        if let Some(v) = self.take_list(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, (line, _))| *line) {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::Config {
                line,
                reason: format!("unknown key `{key}`"),
            }),
        }
    }
}
