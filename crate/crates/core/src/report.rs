//! Itemized bound reports.
//!
//! Every evaluator in [`crate::bounds`] produces a [`BoundReport`] whose
//! `total` is the sum of its additive parts:
//!
//! ```text
//! total = target_term + source_term + concentration_term
//!       + d_w_term + complexity_term + epsilon_slack
//! ```
//!
//! The raw inputs (per-sample information terms and the divergence) are
//! kept alongside so a report can be audited.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremTag {
    /// Expected generalization error via `ψ*⁻¹`, `β > 0` (upper side).
    Theorem1,
    /// Source-only variant of the `ψ*⁻¹` bound.
    SourceOnly,
    /// Subgaussian per-sample bound (both `β > 0` and `β = 0`).
    Subgaussian,
    /// Chain-rule relaxation with a full-sample information term.
    ChainRule,
    /// High-probability excess-risk bound.
    ExcessRisk,
    /// φ-divergence (total variation) excess-risk bound.
    PhiDivergence,
    /// Noisy gradient descent with the information budget.
    NoisyGd,
    /// Rademacher-complexity comparison bound.
    Rademacher,
    /// Closed form for the Gaussian mean example.
    GaussianClosedForm,
}

impl TheoremTag {
    pub const ALL: [TheoremTag; 9] = [
        TheoremTag::Theorem1,
        TheoremTag::SourceOnly,
        TheoremTag::Subgaussian,
        TheoremTag::ChainRule,
        TheoremTag::ExcessRisk,
        TheoremTag::PhiDivergence,
        TheoremTag::NoisyGd,
        TheoremTag::Rademacher,
        TheoremTag::GaussianClosedForm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremTag::Theorem1 => "theorem1",
            TheoremTag::SourceOnly => "source-only",
            TheoremTag::Subgaussian => "subgaussian",
            TheoremTag::ChainRule => "chain-rule",
            TheoremTag::ExcessRisk => "excess-risk",
            TheoremTag::PhiDivergence => "phi-divergence",
            TheoremTag::NoisyGd => "noisy-gd",
            TheoremTag::Rademacher => "rademacher",
            TheoremTag::GaussianClosedForm => "gaussian-closed-form",
        }
    }

    pub fn parse(s: &str) -> Option<TheoremTag> {
        TheoremTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for TheoremTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theorem: TheoremTag,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub r2: Option<f64>,
    pub delta: Option<f64>,
    /// Per-sample information inputs for the target group.
    pub mi_terms_target: Vec<f64>,
    /// Per-sample information inputs for the source group.
    pub mi_terms_source: Vec<f64>,
    /// The divergence input (KL, or TV for the φ-divergence bound).
    pub divergence_term: f64,
    /// Weighted contribution of the target group.
    pub target_term: f64,
    /// Weighted contribution of the source group, divergence included.
    pub source_term: f64,
    pub concentration_term: f64,
    pub d_w_term: f64,
    /// Rademacher complexity terms (zero for the information bounds).
    pub complexity_term: f64,
    pub epsilon_slack: f64,
    pub total: f64,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub(crate) fn new(theorem: TheoremTag, alpha: f64, beta: f64, n: usize) -> Self {
        BoundReport {
            theorem,
            alpha,
            beta,
            n,
            r2: None,
            delta: None,
            mi_terms_target: Vec::new(),
            mi_terms_source: Vec::new(),
            divergence_term: 0.0,
            target_term: 0.0,
            source_term: 0.0,
            concentration_term: 0.0,
            d_w_term: 0.0,
            complexity_term: 0.0,
            epsilon_slack: 0.0,
            total: 0.0,
            notes: Vec::new(),
        }
    }

    pub fn additive_total(&self) -> f64 {
        self.target_term
            + self.source_term
            + self.concentration_term
            + self.d_w_term
            + self.complexity_term
            + self.epsilon_slack
    }

    pub(crate) fn finish(mut self) -> Self {
        self.total = self.additive_total();
        self
    }

    /// Column order of [`to_csv_record`](Self::to_csv_record).
    pub const CSV_HEADER: [&'static str; 18] = [
        "theorem",
        "alpha",
        "beta",
        "n",
        "r2",
        "delta",
        "mi_target_mean",
        "mi_target_count",
        "mi_source_mean",
        "mi_source_count",
        "divergence_term",
        "target_term",
        "source_term",
        "concentration_term",
        "d_w_term",
        "complexity_term",
        "epsilon_slack",
        "total",
    ];

    /// One CSV row; reals use 17 significant digits, missing values are
    /// empty fields.
    pub fn to_csv_record(&self) -> Vec<String> {
        let mean = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        vec![
            self.theorem.to_string(),
            fmt_real(self.alpha),
            fmt_real(self.beta),
            self.n.to_string(),
            fmt_opt(self.r2),
            fmt_opt(self.delta),
            fmt_opt(mean(&self.mi_terms_target)),
            self.mi_terms_target.len().to_string(),
            fmt_opt(mean(&self.mi_terms_source)),
            self.mi_terms_source.len().to_string(),
            fmt_real(self.divergence_term),
            fmt_real(self.target_term),
            fmt_real(self.source_term),
            fmt_real(self.concentration_term),
            fmt_real(self.d_w_term),
            fmt_real(self.complexity_term),
            fmt_real(self.epsilon_slack),
            fmt_real(self.total),
        ]
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bound [{}]  n={}  α={:.6}  β={:.6}", self.theorem, self.n, self.alpha, self.beta)?;
        if let Some(r2) = self.r2 {
            writeln!(f, "  r²                  {r2:.6}")?;
        }
        if let Some(d) = self.delta {
            writeln!(f, "  δ                   {d:.6}")?;
        }
        let summary = |v: &[f64]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                format!("{} terms, mean {:.6}", v.len(), v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        writeln!(f, "  info (target)       {}", summary(&self.mi_terms_target))?;
        writeln!(f, "  info (source)       {}", summary(&self.mi_terms_source))?;
        writeln!(f, "  divergence          {:.6}", self.divergence_term)?;
        writeln!(f, "  target term         {:.6}", self.target_term)?;
        writeln!(f, "  source term         {:.6}", self.source_term)?;
        writeln!(f, "  concentration term  {:.6}", self.concentration_term)?;
        writeln!(f, "  d_W term            {:.6}", self.d_w_term)?;
        writeln!(f, "  complexity term     {:.6}", self.complexity_term)?;
        writeln!(f, "  ε slack             {:.6}", self.epsilon_slack)?;
        write!(f, "  total               {:.6}", self.total)?;
        for note in &self.notes {
            write!(f, "\n  note: {note}")?;
        }
        Ok(())
    }
}

/// 17 significant digits, round-trip exact.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for t in TheoremTag::ALL {
            assert_eq!(TheoremTag::parse(t.as_str()), Some(t));
        }
        assert_eq!(TheoremTag::parse("nope"), None);
    }

    #[test]
    fn csv_record_matches_header() {
        let mut r = BoundReport::new(TheoremTag::ChainRule, 0.0, 0.0, 10);
        r.source_term = 0.25;
        let r = r.finish();
        let rec = r.to_csv_record();
        assert_eq!(rec.len(), BoundReport::CSV_HEADER.len());
        assert_eq!(rec[17].parse::<f64>().unwrap(), 0.25);
        assert!(r.to_string().contains("chain-rule"));
    }

    #[test]
    fn real_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e17] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
        }
    }
}
