//! Result rows and CSV emission.

use std::path::Path;

use crate::error::{Error, Result};
use crate::mi::TrialRecord;
use crate::optimizers::NoisyGdTrace;
use crate::report::{fmt_opt, fmt_real, BoundReport};

/// One grid point of an experiment. Columns that do not apply to an
/// experiment are `None` and become empty CSV fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultRow {
    pub experiment: String,
    /// `n`, `n_t` or `T`.
    pub grid_key: String,
    pub grid_value: usize,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub trials: usize,
    pub measured_gen: f64,
    pub measured_gen_stderr: f64,
    pub measured_excess: Option<f64>,
    pub measured_excess_stderr: Option<f64>,
    pub exact_gen: Option<f64>,
    pub exact_mi: Option<f64>,
    pub mi_target: Option<f64>,
    pub mi_source: Option<f64>,
    pub kl: f64,
    pub r2: Option<f64>,
    pub d_w: Option<f64>,
    pub info_budget: Option<f64>,
    pub k_st: Option<f64>,
    pub mi_bound: f64,
    pub closed_form_bound: Option<f64>,
    pub excess_bound: Option<f64>,
    /// Fraction of trials whose measured excess is at most `excess_bound`.
    pub excess_coverage: Option<f64>,
    pub rademacher_bound: Option<f64>,
    /// Trials whose observed gradient norm exceeded `k_st`.
    pub k_violations: Option<usize>,
    /// `;`-separated diagnostics (degenerate MI, non-converged solvers).
    pub flags: Vec<String>,
    /// Itemized reports behind the bound columns; not part of the CSV.
    pub reports: Vec<BoundReport>,
    /// Per-trial records, filled when the configuration asks to keep them.
    pub trial_records: Vec<TrialRecord>,
    /// The first trial's noisy-GD trace, under the same condition.
    pub trace: Option<NoisyGdTrace>,
}

impl ResultRow {
    pub const CSV_HEADER: [&'static str; 27] = [
        "experiment",
        "grid_key",
        "grid_value",
        "n",
        "alpha",
        "beta",
        "trials",
        "measured_gen",
        "measured_gen_stderr",
        "measured_excess",
        "measured_excess_stderr",
        "exact_gen",
        "exact_mi",
        "mi_target",
        "mi_source",
        "kl",
        "r2",
        "d_w",
        "info_budget",
        "k_st",
        "mi_bound",
        "closed_form_bound",
        "excess_bound",
        "excess_coverage",
        "rademacher_bound",
        "k_violations",
        "flags",
    ];

    pub fn to_csv_record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.grid_key.clone(),
            self.grid_value.to_string(),
            self.n.to_string(),
            fmt_real(self.alpha),
            fmt_real(self.beta),
            self.trials.to_string(),
            fmt_real(self.measured_gen),
            fmt_real(self.measured_gen_stderr),
            fmt_opt(self.measured_excess),
            fmt_opt(self.measured_excess_stderr),
            fmt_opt(self.exact_gen),
            fmt_opt(self.exact_mi),
            fmt_opt(self.mi_target),
            fmt_opt(self.mi_source),
            fmt_real(self.kl),
            fmt_opt(self.r2),
            fmt_opt(self.d_w),
            fmt_opt(self.info_budget),
            fmt_opt(self.k_st),
            fmt_real(self.mi_bound),
            fmt_opt(self.closed_form_bound),
            fmt_opt(self.excess_bound),
            fmt_opt(self.excess_coverage),
            fmt_opt(self.rademacher_bound),
            self.k_violations.map(|k| k.to_string()).unwrap_or_default(),
            self.flags.join(";"),
        ]
    }

    /// Human-readable breakdown: the row's headline numbers followed by
    /// every bound report.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} {}={}  n={}  α={:.6}  measured gen {:.6} ± {:.6}  mi_bound {:.6}",
            self.experiment,
            self.grid_key,
            self.grid_value,
            self.n,
            self.alpha,
            self.measured_gen,
            self.measured_gen_stderr,
            self.mi_bound
        );
        if let Some(r) = self.rademacher_bound {
            s.push_str(&format!("  rademacher {r:.6}"));
        }
        if let Some(e) = self.excess_bound {
            s.push_str(&format!("  excess_bound {e:.6}"));
        }
        for f in &self.flags {
            s.push_str(&format!("\n  flag: {f}"));
        }
        for r in &self.reports {
            s.push('\n');
            s.push_str(&r.to_string());
        }
        s
    }
}

/// Writes the header plus one line per row.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Empty("result rows"));
    }
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(rows, file).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// [`emit_csv`] into any writer (stdout, buffers).
pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: Default::default(),
        source,
    };
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(ResultRow::CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        wtr.write_record(r.to_csv_record()).map_err(csv_err)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: Default::default(),
        source,
    })
}

/// Writes [`BoundReport`] rows with [`BoundReport::CSV_HEADER`].
pub fn write_reports_csv<W: std::io::Write>(reports: &[BoundReport], out: W) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: Default::default(),
        source,
    };
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(BoundReport::CSV_HEADER).map_err(csv_err)?;
    for r in reports {
        wtr.write_record(r.to_csv_record()).map_err(csv_err)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: Default::default(),
        source,
    })
}
