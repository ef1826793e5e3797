//! Per-sample mutual information `I(W; Z_i)` by repeated generation of
//! `(W, Z_i)` pairs and a histogram plug-in on a quantile product grid.
//!
//! Samples within one domain group are exchangeable, so a single estimate
//! serves every index `i` of that group: each trial records the hypothesis
//! together with the first sample of each group.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DomainTag, Hypothesis, Instance, RngStream};
use crate::par;

/// Minimum number of records accepted by the histogram estimators.
pub const MIN_RECORDS: usize = 100;
/// Largest per-side dimension the product histogram accepts.
pub const MAX_SIDE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MiEstimate {
    /// Nats, clipped at zero.
    pub value: f64,
    pub trials: usize,
    pub bins_per_dim: usize,
    pub domain: Option<DomainTag>,
    /// Set when one side is constant; the value is then 0.
    pub degenerate: bool,
}

/// One independent repetition: the trained hypothesis plus one
/// representative sample per domain group.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub w: Hypothesis,
    pub z_source_rep: Instance,
    /// Absent when the experiment has no target samples (`β = 0`).
    pub z_target_rep: Option<Instance>,
}

/// Produces one trial from a fresh dataset and a fresh training run.
pub trait TrialGenerator: Sync {
    fn generate(&self, rng: &RngStream) -> Result<TrialRecord>;
}

impl<F> TrialGenerator for F
where
    F: Fn(&RngStream) -> Result<TrialRecord> + Sync,
{
    fn generate(&self, rng: &RngStream) -> Result<TrialRecord> {
        self(rng)
    }
}

/// Runs `trials` independent repetitions; trial `k` uses `rng.child(k)`.
pub fn collect_trials<G: TrialGenerator + ?Sized>(
    generator: &G,
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<TrialRecord>> {
    if trials < MIN_RECORDS {
        return Err(Error::invalid(
            "trials",
            format!("need at least {MIN_RECORDS}, got {trials}"),
        ));
    }
    let out = par::map_indexed(trials, |k| generator.generate(&rng.child(k as u64)));
    out.into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::TrialFailed {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// `(W, Z_i)` pairs for the representative of one domain group.
pub fn group_pairs(records: &[TrialRecord], domain: DomainTag) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    records
        .iter()
        .map(|r| {
            let z = match domain {
                DomainTag::Source => Some(&r.z_source_rep),
                DomainTag::Target => r.z_target_rep.as_ref(),
            };
            z.map(|z| (r.w.w.clone(), z.features()))
                .ok_or(Error::Empty("target representative"))
        })
        .collect()
}

/// `max(5, ⌊trials^{1/(2 + d_u + d_v)}⌋)`, capped at 30.
pub fn default_bins(trials: usize, d_u: usize, d_v: usize) -> usize {
    let b = (trials as f64).powf(1.0 / (2 + d_u + d_v) as f64).floor() as usize;
    b.clamp(5, 30)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramOptions {
    pub bins_per_dim: usize,
    /// Subtract the Miller–Madow bias term `(K_u + K_v - K_uv - 1) / 2N`.
    pub miller_madow: bool,
}

impl HistogramOptions {
    pub fn new(bins_per_dim: usize) -> Self {
        HistogramOptions {
            bins_per_dim,
            miller_madow: false,
        }
    }
}

/// Plug-in `Σ p̂(u,v) ln(p̂(u,v) / p̂(u)p̂(v))`.
pub fn histogram_mi(records: &[(Vec<f64>, Vec<f64>)], bins_per_dim: usize) -> Result<MiEstimate> {
    histogram_mi_with(records, HistogramOptions::new(bins_per_dim))
}

pub fn histogram_mi_with(records: &[(Vec<f64>, Vec<f64>)], opts: HistogramOptions) -> Result<MiEstimate> {
    let table = JointTable::build(records, opts.bins_per_dim)?;
    let mut est = MiEstimate {
        value: 0.0,
        trials: records.len(),
        bins_per_dim: opts.bins_per_dim,
        domain: None,
        degenerate: table.degenerate,
    };
    if table.degenerate {
        return Ok(est);
    }
    let n = records.len() as f64;
    let mut mi = 0.0;
    for &(u, v, c) in &table.joint {
        let c = c as f64;
        mi += c / n * (c * n / (table.u_counts[u] as f64 * table.v_counts[v] as f64)).ln();
    }
    if opts.miller_madow {
        let k_u = table.u_counts.iter().filter(|&&c| c > 0).count() as f64;
        let k_v = table.v_counts.iter().filter(|&&c| c > 0).count() as f64;
        let k_uv = table.joint.len() as f64;
        mi += (k_u + k_v - k_uv - 1.0) / (2.0 * n);
    }
    est.value = mi.max(0.0);
    Ok(est)
}

/// Histogram estimate for one domain group, tagged with that group.
pub fn estimate_group_mi(
    records: &[TrialRecord],
    domain: DomainTag,
    opts: HistogramOptions,
) -> Result<MiEstimate> {
    let pairs = group_pairs(records, domain)?;
    let mut est = histogram_mi_with(&pairs, opts)?;
    est.domain = Some(domain);
    Ok(est)
}

/// `I_φ = Σ |p̂(u,v) - p̂(u)p̂(v)|` over every cell of the product grid.
pub fn phi_mi(records: &[(Vec<f64>, Vec<f64>)], bins_per_dim: usize) -> Result<f64> {
    let table = JointTable::build(records, bins_per_dim)?;
    if table.degenerate {
        return Ok(0.0);
    }
    let n = records.len() as f64;
    let mut occupied = 0.0;
    let mut product_mass_occupied = 0.0;
    for &(u, v, c) in &table.joint {
        let p = c as f64 / n;
        let q = table.u_counts[u] as f64 / n * table.v_counts[v] as f64 / n;
        occupied += (p - q).abs();
        product_mass_occupied += q;
    }
    // empty joint cells contribute their product mass
    Ok((occupied + (1.0 - product_mass_occupied).max(0.0)).min(2.0))
}

struct JointTable {
    u_counts: Vec<usize>,
    v_counts: Vec<usize>,
    /// (u cell, v cell, count) for occupied cells, sorted.
    joint: Vec<(usize, usize, usize)>,
    degenerate: bool,
}

impl JointTable {
    fn build(records: &[(Vec<f64>, Vec<f64>)], bins: usize) -> Result<Self> {
        if records.len() < MIN_RECORDS {
            return Err(Error::invalid(
                "records",
                format!("need at least {MIN_RECORDS}, got {}", records.len()),
            ));
        }
        if bins == 0 {
            return Err(Error::invalid("bins_per_dim", "must be positive"));
        }
        let d_u = records[0].0.len();
        let d_v = records[0].1.len();
        for (d, name) in [(d_u, "u"), (d_v, "v")] {
            if d == 0 || d > MAX_SIDE_DIM {
                return Err(Error::invalid(
                    "records",
                    format!("{name} has dimension {d}; histogram needs 1..={MAX_SIDE_DIM}"),
                ));
            }
        }
        for (u, v) in records {
            if u.len() != d_u {
                return Err(Error::DimensionMismatch { expected: d_u, got: u.len() });
            }
            if v.len() != d_v {
                return Err(Error::DimensionMismatch { expected: d_v, got: v.len() });
            }
            if u.iter().chain(v).any(|x| !x.is_finite()) {
                return Err(Error::invalid("records", "non-finite value"));
            }
        }
        let (u_cells, n_u) = side_cells(records.iter().map(|r| r.0.as_slice()), d_u, bins);
        let (v_cells, n_v) = side_cells(records.iter().map(|r| r.1.as_slice()), d_v, bins);
        let mut u_counts = vec![0usize; n_u];
        let mut v_counts = vec![0usize; n_v];
        for (&u, &v) in u_cells.iter().zip(&v_cells) {
            u_counts[u] += 1;
            v_counts[v] += 1;
        }
        let degenerate = n_u == 1 || n_v == 1;
        let mut pairs: Vec<(usize, usize)> = u_cells.into_iter().zip(v_cells).collect();
        pairs.sort_unstable();
        let mut joint: Vec<(usize, usize, usize)> = Vec::new();
        for p in pairs {
            match joint.last_mut() {
                Some(last) if (last.0, last.1) == p => last.2 += 1,
                _ => joint.push((p.0, p.1, 1)),
            }
        }
        Ok(JointTable {
            u_counts,
            v_counts,
            joint,
            degenerate,
        })
    }
}

/// Flattened cell index of every row and the total number of cells.
fn side_cells<'a, I>(rows: I, dim: usize, bins: usize) -> (Vec<usize>, usize)
where
    I: Iterator<Item = &'a [f64]> + Clone,
{
    let n = rows.clone().count();
    let mut flat = vec![0usize; n];
    let mut total = 1usize;
    for d in 0..dim {
        let column: Vec<f64> = rows.clone().map(|r| r[d]).collect();
        let (cells, k) = coordinate_cells(&column, bins);
        for (f, c) in flat.iter_mut().zip(cells) {
            *f = *f * k + c;
        }
        total *= k;
    }
    (flat, total)
}

/// Cells for one coordinate: one cell per distinct value when there are at
/// most `bins` of them (binary labels, discrete symbols), otherwise
/// equal-frequency bins by rank.
fn coordinate_cells(column: &[f64], bins: usize) -> (Vec<usize>, usize) {
    let mut distinct = column.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() <= bins {
        let cells = column
            .iter()
            .map(|x| distinct.binary_search_by(|d| d.total_cmp(x)).expect("value present"))
            .collect();
        return (cells, distinct.len());
    }
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]).then(a.cmp(&b)));
    let mut cells = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        cells[i] = rank * bins / n;
    }
    (cells, bins)
}

/// Writes trial records as CSV: `trial, w_1..w_d, source fields, target fields`.
pub fn write_trials_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let first = records.first().ok_or(Error::Empty("trial records"))?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    let mut header = vec!["trial".to_string()];
    header.extend((1..=first.w.dim()).map(|i| format!("w_{i}")));
    header.extend((1..=first.z_source_rep.features().len()).map(|i| format!("z_source_{i}")));
    if let Some(z) = &first.z_target_rep {
        header.extend((1..=z.features().len()).map(|i| format!("z_target_{i}")));
    }
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (k, r) in records.iter().enumerate() {
        let mut fields = vec![k.to_string()];
        fields.extend(r.w.w.iter().map(|v| format!("{v:.16e}")));
        fields.extend(r.z_source_rep.features().iter().map(|v| format!("{v:.16e}")));
        if let Some(z) = &r.z_target_rep {
            fields.extend(z.features().iter().map(|v| format!("{v:.16e}")));
        }
        writeln!(out, "{}", fields.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
