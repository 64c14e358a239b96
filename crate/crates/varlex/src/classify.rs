//! Decision criteria: category contribution rate for inverse kinds,
//! reconstruction error for forward kinds, and the classification
//! stability index shared by both.

use nalgebra::{DMatrix, DVectorView};
use serde::{Deserialize, Serialize};

use crate::dataset::ExpressionDataset;
use crate::dictionary::{build_dictionary, DictionaryMode, GroupStructure};
use crate::error::{Error, Result};
use crate::rpca::RpcaOptions;
use crate::solver::{ipgsr_solve, make_problem, ClassifierKind, SolverOptions, WeightScheme};

/// Which criterion produced a prediction's scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// higher is better
    Ccr,
    /// lower is better
    ReconstructionError,
}

/// Per-class contribution rates, classes by test samples.
#[derive(Debug, Clone)]
pub struct CcrMatrix {
    pub values: DMatrix<f64>,
    /// test columns whose coefficients were all zero (uniform column emitted)
    pub degenerate: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prediction {
    /// 0-based class index
    pub label: usize,
    pub scores: Vec<f64>,
    pub csi: f64,
    pub criterion: Criterion,
    pub tie: bool,
    pub degenerate: bool,
}

/// Category contribution rates from an inverse-projection coefficient
/// matrix (`k` test rows by `n` training columns):
///
/// `C_{j,r} = (1/s_j) * sum_{i in G_j} |m_{r,i}| / sum_i |m_{r,i}|`
///
/// `signed` uses raw coefficients instead of absolute values.
pub fn compute_ccr(m: &DMatrix<f64>, groups: &GroupStructure, signed: bool) -> Result<CcrMatrix> {
    let n = m.ncols();
    let k = m.nrows();
    if groups.class_of.len() != n {
        return Err(Error::data(format!(
            "coefficient columns ({n}) must match training samples ({})",
            groups.class_of.len()
        )));
    }
    let c = groups.n_classes();
    let sizes = groups.sizes();
    let mut values = DMatrix::zeros(c, k);
    let mut degenerate = Vec::new();
    for r in 0..k {
        let mass = |v: f64| if signed { v } else { v.abs() };
        let total: f64 = (0..n).map(|i| mass(m[(r, i)])).sum();
        if total.abs() <= f64::MIN_POSITIVE {
            degenerate.push(r);
            for j in 0..c {
                values[(j, r)] = 1.0 / n as f64;
            }
            continue;
        }
        for (j, block) in groups.blocks.iter().enumerate() {
            let class_mass: f64 = block.iter().map(|&i| mass(m[(r, i)])).sum();
            values[(j, r)] = class_mass / total / sizes[j] as f64;
        }
    }
    Ok(CcrMatrix { values, degenerate })
}

/// Stability index of a score vector: ratio of second best to best.
/// Ties give 1 (maximally unstable); 0/0 is defined as 1.
pub fn compute_csi(scores: &[f64], criterion: Criterion) -> f64 {
    assert!(scores.len() >= 2, "CSI needs at least 2 classes");
    let mut sorted: Vec<f64> = scores.to_vec();
    match criterion {
        Criterion::Ccr => {
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let (best, second) = (sorted[0], sorted[1]);
            if best == 0.0 {
                1.0
            } else {
                (second / best).clamp(0.0, 1.0)
            }
        }
        Criterion::ReconstructionError => {
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (best, second) = (sorted[0], sorted[1]);
            if second == 0.0 {
                1.0
            } else {
                (best / second).clamp(0.0, 1.0)
            }
        }
    }
}

fn argmax(scores: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    let tie = scores
        .iter()
        .enumerate()
        .any(|(i, &v)| i != best && v == scores[best]);
    (best, tie)
}

fn argmin(scores: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v < scores[best] {
            best = i;
        }
    }
    let tie = scores
        .iter()
        .enumerate()
        .any(|(i, &v)| i != best && v == scores[best]);
    (best, tie)
}

/// Argmax classification over a CCR matrix; ties break to the lowest class
/// index with the tie flag set.
pub fn classify_ccr(ccr: &CcrMatrix) -> Vec<Prediction> {
    (0..ccr.values.ncols())
        .map(|r| {
            let scores: Vec<f64> = ccr.values.column(r).iter().copied().collect();
            let (label, tie) = argmax(&scores);
            let csi = compute_csi(&scores, Criterion::Ccr);
            Prediction {
                label,
                scores,
                csi,
                criterion: Criterion::Ccr,
                tie,
                degenerate: ccr.degenerate.contains(&r),
            }
        })
        .collect()
}

/// Per-class residuals `r_j = ||y - D delta_j(alpha)||_2` where `delta_j`
/// keeps only the coefficients of class `j`'s atoms.
pub fn reconstruction_error(
    dictionary: &DMatrix<f64>,
    alpha: DVectorView<f64>,
    y: DVectorView<f64>,
    groups: &GroupStructure,
) -> Vec<f64> {
    groups
        .blocks
        .iter()
        .map(|block| {
            let mut residual = y.clone_owned();
            for &i in block {
                residual -= dictionary.column(i) * alpha[i];
            }
            residual.norm()
        })
        .collect()
}

/// Bundled options for the full pipeline.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub rpca: RpcaOptions,
    pub solver: SolverOptions,
    pub weights: WeightScheme,
    pub per_sample_dictionary: bool,
    pub signed_ccr: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            rpca: RpcaOptions::default(),
            solver: SolverOptions::default(),
            weights: WeightScheme::SqrtSize,
            per_sample_dictionary: false,
            signed_ccr: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierOutput {
    pub predictions: Vec<Prediction>,
    pub solver_converged: bool,
    pub solver_iterations: usize,
}

/// Full pipeline for one train/test split: dictionary, solve, decide.
///
/// Inverse kinds classify every test sample from the single shared solve;
/// forward kinds score each test column by class-restricted reconstruction.
pub fn run_classifier(
    kind: ClassifierKind,
    train: &ExpressionDataset,
    test: &ExpressionDataset,
    mode: DictionaryMode,
    opts: &PipelineOptions,
) -> Result<ClassifierOutput> {
    let dict = build_dictionary(train, test, mode, &opts.rpca, opts.per_sample_dictionary)?;
    let problem = make_problem(kind, &dict, opts.weights);
    let solution = ipgsr_solve(&problem, &opts.solver)?;

    let predictions = if kind.is_inverse() {
        let ccr = compute_ccr(&solution.coefficients, &dict.groups, opts.signed_ccr)?;
        classify_ccr(&ccr)
    } else {
        (0..test.n_samples())
            .map(|r| {
                let scores = reconstruction_error(
                    &dict.train_sparse,
                    solution.coefficients.column(r).as_view(),
                    dict.test_sparse.column(r).as_view(),
                    &dict.groups,
                );
                let (label, tie) = argmin(&scores);
                let csi = compute_csi(&scores, Criterion::ReconstructionError);
                let degenerate = solution.coefficients.column(r).iter().all(|&v| v == 0.0);
                Prediction {
                    label,
                    scores,
                    csi,
                    criterion: Criterion::ReconstructionError,
                    tie,
                    degenerate,
                }
            })
            .collect()
    };

    Ok(ClassifierOutput {
        predictions,
        solver_converged: solution.converged,
        solver_iterations: solution.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn groups_43() -> GroupStructure {
        GroupStructure::from_labels(&[0, 0, 0, 0, 1, 1, 1], 2).unwrap()
    }

    #[test]
    fn ccr_all_mass_on_class_one() {
        // s1 = 4, s2 = 3; all coefficient mass on class-1 columns
        let mut m = DMatrix::zeros(1, 7);
        m[(0, 0)] = 0.5;
        m[(0, 2)] = 0.5;
        let ccr = compute_ccr(&m, &groups_43(), false).unwrap();
        assert!((ccr.values[(0, 0)] - 0.25).abs() < 1e-15);
        assert_eq!(ccr.values[(1, 0)], 0.0);
    }

    #[test]
    fn ccr_uniform_mass_is_a_tie() {
        let m = DMatrix::from_element(1, 7, 0.3);
        let ccr = compute_ccr(&m, &groups_43(), false).unwrap();
        assert!((ccr.values[(0, 0)] - 1.0 / 7.0).abs() < 1e-15);
        assert!((ccr.values[(1, 0)] - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn ccr_matches_straight_line_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let labels: Vec<usize> = vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0];
        let groups = GroupStructure::from_labels(&labels, 3).unwrap();
        let m = DMatrix::from_fn(5, 10, |_, _| rng.gen_range(-1.0..1.0));
        let ccr = compute_ccr(&m, &groups, false).unwrap();
        for r in 0..5 {
            let total: f64 = (0..10).map(|i| m[(r, i)].abs()).sum();
            for j in 0..3 {
                let s_j = labels.iter().filter(|&&l| l == j).count() as f64;
                let mass: f64 = (0..10)
                    .filter(|&i| labels[i] == j)
                    .map(|i| m[(r, i)].abs())
                    .sum();
                let expect = mass / total / s_j;
                assert!((ccr.values[(j, r)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ccr_column_mass_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let groups = groups_43();
        let m = DMatrix::from_fn(6, 7, |_, _| rng.gen_range(-2.0..2.0));
        let ccr = compute_ccr(&m, &groups, false).unwrap();
        let sizes = groups.sizes();
        for r in 0..6 {
            let mass: f64 = (0..2).map(|j| sizes[j] as f64 * ccr.values[(j, r)]).sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ccr_scale_invariant_argmax() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let groups = groups_43();
        let m = DMatrix::from_fn(4, 7, |_, _| rng.gen_range(-1.0..1.0));
        let base = classify_ccr(&compute_ccr(&m, &groups, false).unwrap());
        let scaled = classify_ccr(&compute_ccr(&(&m * 37.5), &groups, false).unwrap());
        for (a, b) in base.iter().zip(&scaled) {
            assert_eq!(a.label, b.label);
            assert!((a.csi - b.csi).abs() < 1e-12);
        }
    }

    #[test]
    fn ccr_degenerate_column_is_uniform() {
        let m = DMatrix::zeros(1, 7);
        let ccr = compute_ccr(&m, &groups_43(), false).unwrap();
        assert_eq!(ccr.degenerate, vec![0]);
        let preds = classify_ccr(&ccr);
        assert!(preds[0].tie);
        assert!(preds[0].degenerate);
        assert_eq!(preds[0].csi, 1.0);
    }

    #[test]
    fn classify_argmax_and_ties() {
        let values = DMatrix::from_row_slice(2, 2, &[0.25, 1.0 / 7.0, 0.0, 1.0 / 7.0]);
        let ccr = CcrMatrix {
            values,
            degenerate: vec![],
        };
        let preds = classify_ccr(&ccr);
        assert_eq!(preds[0].label, 0);
        assert!(!preds[0].tie);
        assert_eq!(preds[1].label, 0); // tie breaks to lowest index
        assert!(preds[1].tie);
    }

    #[test]
    fn classify_matches_brute_force_max() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let values = DMatrix::from_fn(4, 20, |_, _| rng.gen_range(0.0..1.0));
        let ccr = CcrMatrix {
            values: values.clone(),
            degenerate: vec![],
        };
        let preds = classify_ccr(&ccr);
        for (r, p) in preds.iter().enumerate() {
            let mut best = 0;
            for j in 1..4 {
                if values[(j, r)] > values[(best, r)] {
                    best = j;
                }
            }
            assert_eq!(p.label, best);
        }
    }

    #[test]
    fn reconstruction_error_exact_atom() {
        let mut d = DMatrix::zeros(3, 4);
        d[(0, 0)] = 1.0;
        d[(1, 1)] = 1.0;
        d[(2, 2)] = 1.0;
        d[(0, 3)] = 1.0;
        let groups = GroupStructure::from_labels(&[0, 0, 1, 1], 2).unwrap();
        let y = d.column(2).clone_owned();
        let mut alpha = nalgebra::DVector::zeros(4);
        alpha[2] = 1.0;
        let r = reconstruction_error(&d, alpha.as_view(), y.as_view(), &groups);
        assert!(r[1].abs() < 1e-15);
        assert!((r[0] - y.norm()).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_error_zero_alpha_ties() {
        let d = DMatrix::identity(3, 3);
        let groups = GroupStructure::from_labels(&[0, 1, 1], 2).unwrap();
        let y = nalgebra::DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let alpha = nalgebra::DVector::zeros(3);
        let r = reconstruction_error(&d, alpha.as_view(), y.as_view(), &groups);
        assert_eq!(r[0], y.norm());
        assert_eq!(r[1], y.norm());
    }

    #[test]
    fn reconstruction_error_matches_loop_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let d = DMatrix::from_fn(6, 5, |_, _| rng.gen_range(-1.0..1.0));
        let labels = vec![0, 1, 0, 1, 0];
        let groups = GroupStructure::from_labels(&labels, 2).unwrap();
        let alpha = nalgebra::DVector::from_fn(5, |_, _| rng.gen_range(-1.0..1.0));
        let y = nalgebra::DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let r = reconstruction_error(&d, alpha.as_view(), y.as_view(), &groups);
        for j in 0..2 {
            let mut recon = vec![0.0; 6];
            for i in 0..5 {
                if labels[i] == j {
                    for row in 0..6 {
                        recon[row] += d[(row, i)] * alpha[i];
                    }
                }
            }
            let expect: f64 = (0..6)
                .map(|row| (y[row] - recon[row]) * (y[row] - recon[row]))
                .sum::<f64>()
                .sqrt();
            assert!((r[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn csi_examples() {
        assert!((compute_csi(&[0.5, 0.25], Criterion::Ccr) - 0.5).abs() < 1e-15);
        assert_eq!(compute_csi(&[0.3, 0.3], Criterion::Ccr), 1.0);
        assert!(
            (compute_csi(&[0.1, 0.4, 0.2], Criterion::ReconstructionError) - 0.5).abs() < 1e-15
        );
        assert_eq!(compute_csi(&[0.0, 0.0], Criterion::Ccr), 1.0);
        assert_eq!(compute_csi(&[0.0, 0.0], Criterion::ReconstructionError), 1.0);
    }

    #[test]
    fn self_classification_is_perfect() {
        let ds = crate::synth::generate(&crate::synth::SyntheticOptions {
            n_genes: 120,
            per_class: 6,
            seed: 6,
            ..Default::default()
        })
        .unwrap();
        for kind in [
            ClassifierKind::Src,
            ClassifierKind::Gsrc,
            ClassifierKind::Iprc,
            ClassifierKind::Ipgsrc,
        ] {
            let out =
                run_classifier(kind, &ds, &ds, DictionaryMode::Fixed, &PipelineOptions::default())
                    .unwrap();
            let correct = out
                .predictions
                .iter()
                .zip(&ds.labels)
                .filter(|(p, &l)| p.label == l)
                .count();
            assert_eq!(correct, ds.n_samples(), "{kind} self-classification");
        }
    }

    #[test]
    fn separable_synthetic_high_accuracy() {
        let mut total = 0usize;
        let mut correct = 0usize;
        for seed in 0..4 {
            let ds = crate::synth::generate(&crate::synth::SyntheticOptions {
                n_genes: 200,
                per_class: 10,
                seed,
                ..Default::default()
            })
            .unwrap();
            let test_idx: Vec<usize> = vec![0, 1, 10, 11];
            let train_idx: Vec<usize> =
                (0..20).filter(|j| !test_idx.contains(j)).collect();
            let train = ds.subset_samples(&train_idx);
            let test = ds.subset_samples(&test_idx);
            let out = run_classifier(
                ClassifierKind::Ipgsrc,
                &train,
                &test,
                DictionaryMode::Fixed,
                &PipelineOptions::default(),
            )
            .unwrap();
            total += test.n_samples();
            correct += out
                .predictions
                .iter()
                .zip(&test.labels)
                .filter(|(p, &l)| p.label == l)
                .count();
        }
        let acc = correct as f64 / total as f64;
        assert!(acc >= 0.95, "accuracy {acc}");
    }

    #[test]
    fn single_test_sample_contract() {
        let ds = crate::synth::generate(&crate::synth::SyntheticOptions {
            n_genes: 100,
            per_class: 6,
            seed: 8,
            ..Default::default()
        })
        .unwrap();
        let train = ds.subset_samples(&(1..12).collect::<Vec<_>>());
        let test = ds.subset_samples(&[0]);
        let out = run_classifier(
            ClassifierKind::Ipgsrc,
            &train,
            &test,
            DictionaryMode::Fixed,
            &PipelineOptions::default(),
        )
        .unwrap();
        assert_eq!(out.predictions.len(), 1);
        let p = &out.predictions[0];
        assert_eq!(p.scores.len(), 2);
        assert!(p.csi >= 0.0 && p.csi <= 1.0);
        // Eq. 12 mass identity on the emitted scores
        let counts = train.class_counts();
        let mass: f64 = p
            .scores
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| s * c as f64)
            .sum();
        assert!((mass - 1.0).abs() < 1e-9, "mass {mass}");
    }
}
