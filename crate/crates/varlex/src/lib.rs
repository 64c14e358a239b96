//! Low-rank variation dictionaries and inverse-projection group-sparse
//! classification for small-sample, high-dimensional tabular data.
//!
//! The pipeline has five stages, each usable on its own:
//!
//! 1. [`dataset`] — load genes-by-samples matrices, impute missing cells,
//!    rank genes by signal-to-noise ratio, plan stratified folds.
//! 2. [`rpca`] — split a matrix into low-rank plus sparse parts by inexact
//!    augmented Lagrange multipliers.
//! 3. [`dictionary`] — use the sparse parts as classifier atoms: the
//!    variation dictionary.
//! 4. [`solver`] — one ADMM solver for the (weighted) group-sparse
//!    representation problem behind all four classifier kinds.
//! 5. [`classify`] / [`eval`] — category-contribution-rate and
//!    reconstruction-error decisions, CSI stability scores, and repeated
//!    stratified cross-validation.
//!
//! A guided tour with the underlying math lives in the `book/` directory
//! (`mdbook serve book`). Its chapters are compiled into the [`book`]
//! module below, so every fenced snippet in the book runs as a doc-test
//! of this crate and cannot drift out of sync with the code.
//!
//! ```
//! use varlex::prelude::*;
//!
//! // a separable two-class dataset: shared rank-2 background plus
//! // class-specific sparse signatures
//! let ds = varlex::synth::generate(&SyntheticOptions {
//!     n_genes: 150,
//!     per_class: 8,
//!     seed: 1,
//!     ..Default::default()
//! })
//! .unwrap();
//!
//! let train = ds.subset_samples(&(2..16).collect::<Vec<_>>());
//! let test = ds.subset_samples(&[0, 1]);
//! let out = run_classifier(
//!     ClassifierKind::Ipgsrc,
//!     &train,
//!     &test,
//!     DictionaryMode::Fixed,
//!     &PipelineOptions::default(),
//! )
//! .unwrap();
//! assert_eq!(out.predictions.len(), 2);
//! assert_eq!(out.predictions[0].label, test.labels[0]);
//! ```

pub mod classify;
pub mod config;
pub mod dataset;
pub mod dictionary;
pub mod error;
pub mod eval;
pub mod rpca;
pub mod solver;
pub mod synth;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The user guide, one module per chapter.
///
/// The markdown sources under `book/src/` render with `mdbook build book`
/// and are included here verbatim so that `cargo test` runs every code
/// snippet the book shows.
pub mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/data.md")]
    pub mod data {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    pub mod decomposition {}
    #[doc = include_str!("../../../book/src/dictionary.md")]
    pub mod dictionary {}
    #[doc = include_str!("../../../book/src/solver.md")]
    pub mod solver {}
    #[doc = include_str!("../../../book/src/classification.md")]
    pub mod classification {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

pub mod prelude {
    pub use crate::classify::{
        classify_ccr, compute_ccr, compute_csi, reconstruction_error, run_classifier, CcrMatrix,
        Criterion, PipelineOptions, Prediction,
    };
    pub use crate::dataset::{
        impute_missing, load_combined_csv, load_expression_csv, snr_rank, stratified_kfold,
        ExpressionDataset, FoldPlan, ImputeStrategy,
    };
    pub use crate::dictionary::{
        build_changing_dictionary, build_dictionary, build_fixed_dictionary, DictionaryMode,
        GroupStructure, VariationDictionary,
    };
    pub use crate::error::{Error, Result};
    pub use crate::eval::{
        confusion_metrics, cross_validate, err, roc_auc, EvalConfig, EvaluationReport, Prescreen,
        PrescreenScope,
    };
    pub use crate::rpca::{
        default_lambda, rpca_decompose, soft_threshold, soft_threshold_scalar, svt, RpcaOptions,
        RpcaResult,
    };
    pub use crate::solver::{
        group_objective, group_shrink, ipgsr_solve, make_problem, ClassifierKind, GroupAxis,
        GroupSparseProblem,
        IpgsrSolution, SolverOptions, WeightScheme,
    };
    pub use crate::synth::SyntheticOptions;
}
