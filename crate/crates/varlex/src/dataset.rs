//! Expression-matrix ingestion, imputation, SNR gene ranking and fold planning.
//!
//! A dataset is a dense genes-by-samples matrix with string identifiers on
//! both axes and a class label per sample. Missing cells are represented as
//! `NaN` until [`impute_missing`] runs; every downstream stage requires a
//! NaN-free matrix.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Genes-by-samples expression matrix with labels.
///
/// `values` is `m` genes by `n` samples; `labels[j]` is the 0-based class
/// index of sample `j` and indexes into `class_names`.
#[derive(Debug, Clone)]
pub struct ExpressionDataset {
    pub gene_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    pub values: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

/// How to fill missing cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImputeStrategy {
    Zero,
    GeneMean,
    SampleMean,
}

impl fmt::Display for ImputeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImputeStrategy::Zero => write!(f, "zero"),
            ImputeStrategy::GeneMean => write!(f, "gene_mean"),
            ImputeStrategy::SampleMean => write!(f, "sample_mean"),
        }
    }
}

impl std::str::FromStr for ImputeStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(ImputeStrategy::Zero),
            "gene_mean" => Ok(ImputeStrategy::GeneMean),
            "sample_mean" => Ok(ImputeStrategy::SampleMean),
            other => Err(Error::config(format!("unknown impute strategy '{other}'"))),
        }
    }
}

impl ExpressionDataset {
    pub fn n_genes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Number of samples in each class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// Checks the structural invariants shared by every constructor.
    pub fn validate(&self) -> Result<()> {
        if self.gene_ids.len() != self.values.nrows() {
            return Err(Error::data(format!(
                "gene id count {} != matrix rows {}",
                self.gene_ids.len(),
                self.values.nrows()
            )));
        }
        if self.sample_ids.len() != self.values.ncols() || self.labels.len() != self.values.ncols()
        {
            return Err(Error::data(format!(
                "sample ids ({}) / labels ({}) must both match matrix columns ({})",
                self.sample_ids.len(),
                self.labels.len(),
                self.values.ncols()
            )));
        }
        let counts = self.class_counts();
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::data("every class must have at least one sample"));
        }
        Ok(())
    }

    /// New dataset restricted to the given gene rows, in the given order.
    pub fn subset_genes(&self, rows: &[usize]) -> ExpressionDataset {
        let values = DMatrix::from_fn(rows.len(), self.n_samples(), |i, j| {
            self.values[(rows[i], j)]
        });
        ExpressionDataset {
            gene_ids: rows.iter().map(|&r| self.gene_ids[r].clone()).collect(),
            sample_ids: self.sample_ids.clone(),
            values,
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// New dataset restricted to the given sample columns, in the given order.
    pub fn subset_samples(&self, cols: &[usize]) -> ExpressionDataset {
        let values = DMatrix::from_fn(self.n_genes(), cols.len(), |i, j| {
            self.values[(i, cols[j])]
        });
        ExpressionDataset {
            gene_ids: self.gene_ids.clone(),
            sample_ids: cols.iter().map(|&c| self.sample_ids[c].clone()).collect(),
            values,
            labels: cols.iter().map(|&c| self.labels[c]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

fn parse_cell(tok: &str) -> Result<f64> {
    let t = tok.trim();
    if t.is_empty() || t == "NA" {
        return Ok(f64::NAN);
    }
    t.parse::<f64>()
        .map_err(|_| Error::data(format!("cannot parse numeric cell '{t}'")))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r').to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashMap::new();
    for id in ids {
        if seen.insert(id.clone(), ()).is_some() {
            return Err(Error::data(format!("duplicate {what} id '{id}'")));
        }
    }
    Ok(())
}

/// Builds the label vector from `(sample id, class name)` pairs, indexing
/// classes in first-appearance order.
fn assign_labels(
    sample_ids: &[String],
    pairs: &[(String, String)],
) -> Result<(Vec<usize>, Vec<String>)> {
    let map: HashMap<&str, &str> = pairs.iter().map(|(s, c)| (s.as_str(), c.as_str())).collect();
    let mut class_names: Vec<String> = Vec::new();
    // first-appearance order follows the labels file, not the matrix
    for (_, c) in pairs {
        if !class_names.iter().any(|n| n == c) {
            class_names.push(c.clone());
        }
    }
    let mut labels = Vec::with_capacity(sample_ids.len());
    for sid in sample_ids {
        let class = map.get(sid.as_str()).ok_or_else(|| {
            Error::data(format!("label coverage: sample '{sid}' missing from labels"))
        })?;
        let idx = class_names.iter().position(|n| n == class).unwrap();
        labels.push(idx);
    }
    if class_names.len() < 2 {
        return Err(Error::data(format!(
            "need at least 2 classes, found {}",
            class_names.len()
        )));
    }
    Ok((labels, class_names))
}

struct RawMatrix {
    gene_ids: Vec<String>,
    sample_ids: Vec<String>,
    values: DMatrix<f64>,
    label_row: Option<Vec<String>>,
}

fn parse_matrix(path: &Path) -> Result<RawMatrix> {
    let lines = read_lines(path)?;
    if lines.len() < 2 {
        return Err(Error::data("matrix file needs a header and at least one gene row"));
    }
    let header: Vec<&str> = lines[0].split(',').map(str::trim).collect();
    if header.is_empty() || header[0] != "gene_id" {
        return Err(Error::data("matrix header must start with 'gene_id'"));
    }
    let sample_ids: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
    let n = sample_ids.len();
    if n == 0 {
        return Err(Error::data("matrix has no sample columns"));
    }

    let mut gene_ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut label_row = None;
    for line in &lines[1..] {
        let toks: Vec<&str> = line.split(',').map(str::trim).collect();
        if toks.len() != n + 1 {
            return Err(Error::data(format!(
                "row '{}' has {} cells, expected {}",
                toks[0],
                toks.len() - 1,
                n
            )));
        }
        if toks[0] == "LABEL" {
            label_row = Some(toks[1..].iter().map(|s| s.to_string()).collect());
            continue;
        }
        gene_ids.push(toks[0].to_string());
        let row: Vec<f64> = toks[1..]
            .iter()
            .map(|t| parse_cell(t))
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    check_unique(&gene_ids, "gene")?;
    check_unique(&sample_ids, "sample")?;
    let values = DMatrix::from_fn(gene_ids.len(), n, |i, j| rows[i][j]);
    Ok(RawMatrix {
        gene_ids,
        sample_ids,
        values,
        label_row,
    })
}

/// Loads a matrix CSV plus a two-column `sample_id,label` CSV.
///
/// Classes are indexed in first-appearance order of the labels file. Empty
/// cells and the literal `NA` are recorded as missing, not zero.
pub fn load_expression_csv(
    matrix_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<ExpressionDataset> {
    let raw = parse_matrix(matrix_path.as_ref())?;
    let lines = read_lines(labels_path.as_ref())?;
    let mut pairs = Vec::new();
    for line in &lines {
        let toks: Vec<&str> = line.split(',').map(str::trim).collect();
        if toks.len() != 2 {
            return Err(Error::data(format!("labels row '{line}' is not 'sample_id,label'")));
        }
        if toks[0] == "sample_id" {
            continue; // optional header
        }
        pairs.push((toks[0].to_string(), toks[1].to_string()));
    }
    let (labels, class_names) = assign_labels(&raw.sample_ids, &pairs)?;
    let ds = ExpressionDataset {
        gene_ids: raw.gene_ids,
        sample_ids: raw.sample_ids,
        values: raw.values,
        labels,
        class_names,
    };
    ds.validate()?;
    Ok(ds)
}

/// Loads the combined format: one matrix CSV whose final `LABEL` row carries
/// the class names.
pub fn load_combined_csv(matrix_path: impl AsRef<Path>) -> Result<ExpressionDataset> {
    let raw = parse_matrix(matrix_path.as_ref())?;
    let label_row = raw
        .label_row
        .ok_or_else(|| Error::data("combined format requires a LABEL row"))?;
    let pairs: Vec<(String, String)> = raw
        .sample_ids
        .iter()
        .cloned()
        .zip(label_row.into_iter())
        .collect();
    let (labels, class_names) = assign_labels(&raw.sample_ids, &pairs)?;
    let ds = ExpressionDataset {
        gene_ids: raw.gene_ids,
        sample_ids: raw.sample_ids,
        values: raw.values,
        labels,
        class_names,
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes the matrix side back out; missing cells become `NA`.
pub fn write_expression_csv(ds: &ExpressionDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    out.push_str("gene_id");
    for s in &ds.sample_ids {
        out.push(',');
        out.push_str(s);
    }
    out.push('\n');
    for i in 0..ds.n_genes() {
        out.push_str(&ds.gene_ids[i]);
        for j in 0..ds.n_samples() {
            out.push(',');
            let v = ds.values[(i, j)];
            if v.is_nan() {
                out.push_str("NA");
            } else {
                out.push_str(&format!("{v:?}"));
            }
        }
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::Io {
        path: path.as_ref().display().to_string(),
        source: e,
    })
}

/// Writes the labels side as `sample_id,label`.
pub fn write_labels_csv(ds: &ExpressionDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("sample_id,label\n");
    for (sid, &l) in ds.sample_ids.iter().zip(&ds.labels) {
        out.push_str(&format!("{},{}\n", sid, ds.class_names[l]));
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::Io {
        path: path.as_ref().display().to_string(),
        source: e,
    })
}

/// Replaces every missing cell per the strategy; observed cells are untouched.
pub fn impute_missing(ds: &ExpressionDataset, strategy: ImputeStrategy) -> Result<ExpressionDataset> {
    let (m, n) = (ds.n_genes(), ds.n_samples());
    let mut values = ds.values.clone();
    match strategy {
        ImputeStrategy::Zero => {
            for v in values.iter_mut() {
                if v.is_nan() {
                    *v = 0.0;
                }
            }
        }
        ImputeStrategy::GeneMean => {
            for i in 0..m {
                let observed: Vec<f64> =
                    (0..n).map(|j| ds.values[(i, j)]).filter(|v| !v.is_nan()).collect();
                let any_missing = observed.len() < n;
                if !any_missing {
                    continue;
                }
                if observed.is_empty() {
                    return Err(Error::data(format!(
                        "gene '{}' has no observed values; drop the gene before gene_mean imputation",
                        ds.gene_ids[i]
                    )));
                }
                let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                for j in 0..n {
                    if values[(i, j)].is_nan() {
                        values[(i, j)] = mean;
                    }
                }
            }
        }
        ImputeStrategy::SampleMean => {
            for j in 0..n {
                let observed: Vec<f64> =
                    (0..m).map(|i| ds.values[(i, j)]).filter(|v| !v.is_nan()).collect();
                if observed.len() == n {
                    continue;
                }
                if observed.is_empty() {
                    return Err(Error::data(format!(
                        "sample '{}' has no observed values",
                        ds.sample_ids[j]
                    )));
                }
                let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                for i in 0..m {
                    if values[(i, j)].is_nan() {
                        values[(i, j)] = mean;
                    }
                }
            }
        }
    }
    Ok(ExpressionDataset {
        values,
        ..ds.clone()
    })
}

/// Per-gene Golub signal-to-noise ratios `|mu1 - mu2| / (sigma1 + sigma2)`
/// with population (1/N) standard deviations. Two-class only.
pub fn snr_scores(ds: &ExpressionDataset) -> Result<Vec<f64>> {
    if ds.n_classes() != 2 {
        return Err(Error::data(format!(
            "SNR prescreen is binary-only, dataset has {} classes",
            ds.n_classes()
        )));
    }
    if ds.has_missing() {
        return Err(Error::data("impute missing values before SNR ranking"));
    }
    let cols: [Vec<usize>; 2] = [
        (0..ds.n_samples()).filter(|&j| ds.labels[j] == 0).collect(),
        (0..ds.n_samples()).filter(|&j| ds.labels[j] == 1).collect(),
    ];
    let mut scores = Vec::with_capacity(ds.n_genes());
    for i in 0..ds.n_genes() {
        let mut stat = [0.0f64; 2];
        let mut sd = [0.0f64; 2];
        for c in 0..2 {
            let vals: Vec<f64> = cols[c].iter().map(|&j| ds.values[(i, j)]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            stat[c] = mean;
            sd[c] = var.sqrt();
        }
        let denom = sd[0] + sd[1];
        if denom == 0.0 {
            scores.push(0.0);
        } else {
            scores.push((stat[0] - stat[1]).abs() / denom);
        }
    }
    Ok(scores)
}

/// Ranks genes by descending SNR and keeps the top `top_k` in ranked order.
pub fn snr_rank(ds: &ExpressionDataset, top_k: usize) -> Result<(Vec<usize>, ExpressionDataset)> {
    if top_k == 0 || top_k > ds.n_genes() {
        return Err(Error::data(format!(
            "top_k must be in 1..={}, got {top_k}",
            ds.n_genes()
        )));
    }
    let scores = snr_scores(ds)?;
    let mut order: Vec<usize> = (0..ds.n_genes()).collect();
    // stable sort keeps original gene order among exact ties
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let kept: Vec<usize> = order[..top_k].to_vec();
    let reduced = ds.subset_genes(&kept);
    Ok((order, reduced))
}

/// Repeated stratified k-fold assignment, reproducible from the seed alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    /// `assignments[repeat][fold]` = sample indices in that fold.
    pub assignments: Vec<Vec<Vec<usize>>>,
}

/// Builds a stratified fold plan. Within each repeat the class-sorted,
/// shuffled sample sequence is dealt round-robin, which bounds the per-class
/// deviation of every fold at one sample.
///
/// If some class has fewer than `k` samples, `k` is reduced to the minimum
/// class size (a warning is printed to stderr).
pub fn stratified_kfold(
    ds: &ExpressionDataset,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<FoldPlan> {
    let n = ds.n_samples();
    if k < 2 {
        return Err(Error::data("k must be at least 2"));
    }
    if k > n {
        return Err(Error::data(format!("k={k} exceeds sample count {n}")));
    }
    if repeats == 0 {
        return Err(Error::data("repeats must be at least 1"));
    }
    let min_class = *ds.class_counts().iter().min().unwrap();
    // k = n is leave-one-out; the per-class reduction only applies below that
    let k = if k == n {
        k
    } else if min_class < k {
        eprintln!("warning: smallest class has {min_class} samples; reducing k from {k}");
        min_class.max(2)
    } else {
        k
    };

    let mut assignments = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ rep as u64);
        let mut dealt: Vec<usize> = Vec::with_capacity(n);
        for class in 0..ds.n_classes() {
            let mut idx: Vec<usize> =
                (0..n).filter(|&j| ds.labels[j] == class).collect();
            idx.shuffle(&mut rng);
            dealt.extend(idx);
        }
        let mut folds = vec![Vec::new(); k];
        for (pos, sample) in dealt.into_iter().enumerate() {
            folds[pos % k].push(sample);
        }
        for f in &mut folds {
            f.sort_unstable();
        }
        assignments.push(folds);
    }
    Ok(FoldPlan {
        k,
        repeats,
        seed,
        assignments,
    })
}
