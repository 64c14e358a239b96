//! Variation-dictionary construction.
//!
//! The dictionary atoms are not the raw samples but the sparse parts of
//! their low-rank decompositions: what varies between samples, with the
//! shared background stripped out. Two builds exist: `fixed` decomposes the
//! training and test matrices as whole blocks, `changing` decomposes the
//! training matrix per class and the test samples jointly with the
//! training samples.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::ExpressionDataset;
use crate::error::{Error, Result};
use crate::rpca::{rpca_decompose, RpcaOptions};

/// Class-block structure over training columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStructure {
    /// class index per training column
    pub class_of: Vec<usize>,
    /// `blocks[p]` = ordered column indices of class `p`
    pub blocks: Vec<Vec<usize>>,
}

impl GroupStructure {
    pub fn from_labels(labels: &[usize], n_classes: usize) -> Result<Self> {
        let mut blocks = vec![Vec::new(); n_classes];
        for (j, &l) in labels.iter().enumerate() {
            if l >= n_classes {
                return Err(Error::data(format!("label {l} out of range")));
            }
            blocks[l].push(j);
        }
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::data("every class block must be nonempty"));
        }
        Ok(GroupStructure {
            class_of: labels.to_vec(),
            blocks,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.blocks.len()
    }

    /// block sizes `s_j`
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DictionaryMode {
    Fixed,
    Changing,
}

impl std::str::FromStr for DictionaryMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(DictionaryMode::Fixed),
            "changing" => Ok(DictionaryMode::Changing),
            other => Err(Error::config(format!("unknown dictionary mode '{other}'"))),
        }
    }
}

/// Sparse-part dictionary over training and test samples.
///
/// Columns are unit l2-normalized; `column_norms` keeps the pre-normalization
/// norms so the scaling is reversible. All-zero columns stay zero and are
/// listed in `degenerate_train`/`degenerate_test`.
#[derive(Debug, Clone)]
pub struct VariationDictionary {
    pub train_sparse: DMatrix<f64>,
    pub test_sparse: DMatrix<f64>,
    pub groups: GroupStructure,
    pub mode: DictionaryMode,
    pub train_norms: Vec<f64>,
    pub test_norms: Vec<f64>,
    pub degenerate_train: Vec<usize>,
    pub degenerate_test: Vec<usize>,
}

fn normalize_columns(a: &mut DMatrix<f64>) -> (Vec<f64>, Vec<usize>) {
    let mut norms = Vec::with_capacity(a.ncols());
    let mut degenerate = Vec::new();
    for j in 0..a.ncols() {
        let norm = a.column(j).norm();
        norms.push(norm);
        if norm <= 1e-12 {
            degenerate.push(j);
        } else {
            a.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    (norms, degenerate)
}

fn check_alignment(train: &ExpressionDataset, test: &ExpressionDataset) -> Result<()> {
    if train.gene_ids != test.gene_ids {
        return Err(Error::data("train and test gene sets must match in order"));
    }
    if train.has_missing() || test.has_missing() {
        return Err(Error::data("impute missing values before dictionary construction"));
    }
    Ok(())
}

/// Whole-block build: one decomposition of the training matrix and one of
/// the test matrix. `opts.lambda = None` resolves per block shape.
pub fn build_fixed_dictionary(
    train: &ExpressionDataset,
    test: &ExpressionDataset,
    opts: &RpcaOptions,
) -> Result<VariationDictionary> {
    check_alignment(train, test)?;
    let groups = GroupStructure::from_labels(&train.labels, train.n_classes())?;
    let mut train_sparse = rpca_decompose(&train.values, opts)?.sparse;
    let mut test_sparse = rpca_decompose(&test.values, opts)?.sparse;
    let (train_norms, degenerate_train) = normalize_columns(&mut train_sparse);
    let (test_norms, degenerate_test) = normalize_columns(&mut test_sparse);
    if !degenerate_train.is_empty() {
        eprintln!(
            "warning: {} training dictionary column(s) are all-zero (kept, flagged)",
            degenerate_train.len()
        );
    }
    Ok(VariationDictionary {
        train_sparse,
        test_sparse,
        groups,
        mode: DictionaryMode::Fixed,
        train_norms,
        test_norms,
        degenerate_train,
        degenerate_test,
    })
}

/// Per-class build: each class's training columns are decomposed alone;
/// test samples are decomposed jointly with the full training matrix and
/// the test-side sparse columns are kept.
///
/// With `per_sample` each test sample is appended and decomposed on its
/// own instead of the whole test batch at once.
pub fn build_changing_dictionary(
    train: &ExpressionDataset,
    test: &ExpressionDataset,
    opts: &RpcaOptions,
    per_sample: bool,
) -> Result<VariationDictionary> {
    check_alignment(train, test)?;
    let groups = GroupStructure::from_labels(&train.labels, train.n_classes())?;
    let m = train.n_genes();
    let n = train.n_samples();
    let k = test.n_samples();

    let mut train_sparse = DMatrix::zeros(m, n);
    for block in &groups.blocks {
        if block.len() < 2 {
            return Err(Error::data(
                "changing mode needs at least 2 training samples per class",
            ));
        }
        let sub = DMatrix::from_fn(m, block.len(), |i, j| train.values[(i, block[j])]);
        let sparse = rpca_decompose(&sub, opts)?.sparse;
        for (j, &col) in block.iter().enumerate() {
            train_sparse.set_column(col, &sparse.column(j));
        }
    }

    let mut test_sparse = DMatrix::zeros(m, k);
    if per_sample {
        for r in 0..k {
            let mut joint = DMatrix::zeros(m, n + 1);
            joint.view_mut((0, 0), (m, n)).copy_from(&train.values);
            joint.set_column(n, &test.values.column(r));
            let sparse = rpca_decompose(&joint, opts)?.sparse;
            test_sparse.set_column(r, &sparse.column(n));
        }
    } else {
        let mut joint = DMatrix::zeros(m, n + k);
        joint.view_mut((0, 0), (m, n)).copy_from(&train.values);
        joint.view_mut((0, n), (m, k)).copy_from(&test.values);
        let sparse = rpca_decompose(&joint, opts)?.sparse;
        test_sparse.copy_from(&sparse.view((0, n), (m, k)));
    }

    let (train_norms, degenerate_train) = normalize_columns(&mut train_sparse);
    let (test_norms, degenerate_test) = normalize_columns(&mut test_sparse);
    Ok(VariationDictionary {
        train_sparse,
        test_sparse,
        groups,
        mode: DictionaryMode::Changing,
        train_norms,
        test_norms,
        degenerate_train,
        degenerate_test,
    })
}

pub fn build_dictionary(
    train: &ExpressionDataset,
    test: &ExpressionDataset,
    mode: DictionaryMode,
    opts: &RpcaOptions,
    per_sample: bool,
) -> Result<VariationDictionary> {
    match mode {
        DictionaryMode::Fixed => build_fixed_dictionary(train, test, opts),
        DictionaryMode::Changing => build_changing_dictionary(train, test, opts, per_sample),
    }
}
