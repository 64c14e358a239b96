//! Cross-validated evaluation: confusion metrics, ROC/AUC, error reduction
//! rate, CSI distributions and box-plot summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{run_classifier, Criterion, PipelineOptions, Prediction};
use crate::dataset::{snr_rank, ExpressionDataset, FoldPlan};
use crate::dictionary::DictionaryMode;
use crate::error::{Error, Result};
use crate::solver::ClassifierKind;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub accuracy: f64,
    /// TP/(TP+FN); NaN when the truth has no positive samples
    pub sensitivity: f64,
    /// TN/(TN+FP); NaN when the truth has no negative samples
    pub specificity: f64,
    pub sensitivity_defined: bool,
    pub specificity_defined: bool,
}

/// Binary confusion rates. `positive_class` is a 0-based class index.
pub fn confusion_metrics(
    preds: &[usize],
    truth: &[usize],
    positive_class: usize,
) -> Result<ConfusionMetrics> {
    if preds.len() != truth.len() {
        return Err(Error::data("prediction and truth lengths differ"));
    }
    if preds.is_empty() {
        return Err(Error::data("empty prediction set"));
    }
    let mut tp = 0usize;
    let mut tn = 0usize;
    let mut fp = 0usize;
    let mut fne = 0usize;
    let mut correct = 0usize;
    for (&p, &t) in preds.iter().zip(truth) {
        if p == t {
            correct += 1;
        }
        match (t == positive_class, p == positive_class) {
            (true, true) => tp += 1,
            (true, false) => fne += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let accuracy = correct as f64 / preds.len() as f64;
    let sensitivity_defined = tp + fne > 0;
    let specificity_defined = tn + fp > 0;
    Ok(ConfusionMetrics {
        accuracy,
        sensitivity: if sensitivity_defined {
            tp as f64 / (tp + fne) as f64
        } else {
            f64::NAN
        },
        specificity: if specificity_defined {
            tn as f64 / (tn + fp) as f64
        } else {
            f64::NAN
        },
        sensitivity_defined,
        specificity_defined,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// Threshold-sweep ROC curve plus trapezoidal AUC. `truth[i]` marks sample
/// `i` positive. The AUC equals the Mann-Whitney pairwise statistic with
/// ties counted one half.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<(Vec<RocPoint>, f64)> {
    if scores.len() != truth.len() || scores.is_empty() {
        return Err(Error::data("scores and truth must be equal-length and nonempty"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::data("ROC scores must be finite"));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::data("ROC needs both classes present in truth"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut curve = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        // consume every sample tied at this threshold at once
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }

    let mut auc = 0.0;
    for w in curve.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
    }
    Ok((curve, auc))
}

/// Error reduction rate `(er1 - er2) / er1 * 100`, both arguments percent.
pub fn err(er1: f64, er2: f64) -> Result<f64> {
    if !(er1 > 0.0) {
        return Err(Error::data("ERR requires er1 > 0"));
    }
    Ok((er1 - er2) / er1 * 100.0)
}

/// Where SNR prescreening happens relative to the folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrescreenScope {
    /// refit on the training split of every fold (leakage-safe default)
    PerFold,
    /// once on the full dataset before splitting
    Global,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Prescreen {
    pub scope: PrescreenScope,
    pub top_k: usize,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub kind: ClassifierKind,
    pub mode: DictionaryMode,
    pub pipeline: PipelineOptions,
    pub prescreen: Option<Prescreen>,
    /// 0-based class treated as positive for binary metrics
    pub positive_class: usize,
    pub jobs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            kind: ClassifierKind::Ipgsrc,
            mode: DictionaryMode::Fixed,
            pipeline: PipelineOptions::default(),
            prescreen: None,
            positive_class: 1,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub truth: usize,
    pub predicted: usize,
    pub scores: Vec<f64>,
    pub csi: f64,
    pub tie: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    pub predictions: Vec<PredictionRecord>,
    pub accuracy: f64,
    pub solver_converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    /// fold-size-weighted mean = overall fraction correct
    pub accuracy_mean: f64,
    /// sample standard deviation over the repeat x fold cells
    pub accuracy_std: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema: String,
    pub classifier: String,
    pub per_fold: Vec<FoldRecord>,
    pub aggregate: Aggregate,
    pub roc: Vec<RocPoint>,
    pub err_vs: BTreeMap<String, f64>,
    pub csi_summary: Quartiles,
    /// median and interquartile range of per-cell error rates
    pub box_stats: Quartiles,
}

impl EvaluationReport {
    pub fn error_rate_percent(&self) -> f64 {
        (1.0 - self.aggregate.accuracy_mean) * 100.0
    }
}

fn quartiles(values: &[f64]) -> Quartiles {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let h = p * (sorted.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Quartiles {
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
    }
}

/// Signed binary score for ROC sweeping: criterion difference in favor of
/// the positive class.
fn roc_score(pred: &Prediction, positive_class: usize) -> f64 {
    let negative = 1 - positive_class;
    match pred.criterion {
        Criterion::Ccr => pred.scores[positive_class] - pred.scores[negative],
        Criterion::ReconstructionError => pred.scores[negative] - pred.scores[positive_class],
    }
}

struct Cell {
    repeat: usize,
    fold: usize,
    test_idx: Vec<usize>,
}

fn evaluate_cell(ds: &ExpressionDataset, cell: &Cell, config: &EvalConfig) -> Result<FoldRecord> {
    let train_idx: Vec<usize> = (0..ds.n_samples())
        .filter(|j| !cell.test_idx.contains(j))
        .collect();
    let mut train = ds.subset_samples(&train_idx);
    let mut test = ds.subset_samples(&cell.test_idx);
    if let Some(p) = config.prescreen {
        if p.scope == PrescreenScope::PerFold {
            let (order, reduced) = snr_rank(&train, p.top_k)?;
            train = reduced;
            test = test.subset_genes(&order[..p.top_k]);
        }
    }
    let out = run_classifier(config.kind, &train, &test, config.mode, &config.pipeline)?;
    let correct = out
        .predictions
        .iter()
        .zip(&test.labels)
        .filter(|(p, &t)| p.label == t)
        .count();
    let predictions = out
        .predictions
        .into_iter()
        .zip(test.labels.iter())
        .zip(test.sample_ids.iter())
        .map(|((p, &truth), sid)| PredictionRecord {
            sample_id: sid.clone(),
            truth,
            predicted: p.label,
            scores: p.scores,
            csi: p.csi,
            tie: p.tie,
            degenerate: p.degenerate,
        })
        .collect();
    Ok(FoldRecord {
        repeat: cell.repeat,
        fold: cell.fold,
        predictions,
        accuracy: correct as f64 / test.labels.len() as f64,
        solver_converged: out.solver_converged,
    })
}

/// Runs every repeat x fold cell and aggregates. A failed cell aborts the
/// whole report. Cells are independent; with `jobs > 1` they run in
/// parallel and are reassembled in (repeat, fold) order, so the report is
/// identical regardless of scheduling.
pub fn cross_validate(
    ds: &ExpressionDataset,
    config: &EvalConfig,
    plan: &FoldPlan,
) -> Result<EvaluationReport> {
    if ds.has_missing() {
        return Err(Error::data("impute missing values before cross-validation"));
    }
    let ds = match config.prescreen {
        Some(p) if p.scope == PrescreenScope::Global => {
            let (_, reduced) = snr_rank(ds, p.top_k)?;
            reduced
        }
        _ => ds.clone(),
    };

    let mut cells = Vec::new();
    for (repeat, folds) in plan.assignments.iter().enumerate() {
        for (fold, test_idx) in folds.iter().enumerate() {
            cells.push(Cell {
                repeat,
                fold,
                test_idx: test_idx.clone(),
            });
        }
    }

    let per_fold: Vec<FoldRecord> = if config.jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        pool.install(|| {
            cells
                .par_iter()
                .map(|cell| evaluate_cell(&ds, cell, config))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        cells
            .iter()
            .map(|cell| evaluate_cell(&ds, cell, config))
            .collect::<Result<Vec<_>>>()?
    };

    // pooled confusion and ROC over every prediction of every cell
    let mut preds = Vec::new();
    let mut truths = Vec::new();
    let mut scores = Vec::new();
    let mut csis = Vec::new();
    for rec in &per_fold {
        for p in &rec.predictions {
            preds.push(p.predicted);
            truths.push(p.truth);
            csis.push(p.csi);
        }
    }
    let binary = ds.n_classes() == 2;
    let confusion = confusion_metrics(&preds, &truths, config.positive_class)?;
    let (roc, auc) = if binary {
        for rec in &per_fold {
            for p in &rec.predictions {
                scores.push(
                    roc_score(
                        &Prediction {
                            label: p.predicted,
                            scores: p.scores.clone(),
                            csi: p.csi,
                            criterion: if config.kind.is_inverse() {
                                Criterion::Ccr
                            } else {
                                Criterion::ReconstructionError
                            },
                            tie: p.tie,
                            degenerate: p.degenerate,
                        },
                        config.positive_class,
                    ),
                );
            }
        }
        let truth_flags: Vec<bool> = truths.iter().map(|&t| t == config.positive_class).collect();
        let (curve, auc) = roc_auc(&scores, &truth_flags)?;
        (curve, Some(auc))
    } else {
        (Vec::new(), None)
    };

    let accuracy_mean = preds
        .iter()
        .zip(&truths)
        .filter(|(p, t)| p == t)
        .count() as f64
        / preds.len() as f64;
    let cell_accs: Vec<f64> = per_fold.iter().map(|r| r.accuracy).collect();
    let mean_cells = cell_accs.iter().sum::<f64>() / cell_accs.len() as f64;
    let accuracy_std = if cell_accs.len() > 1 {
        (cell_accs
            .iter()
            .map(|a| (a - mean_cells) * (a - mean_cells))
            .sum::<f64>()
            / (cell_accs.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    let error_rates: Vec<f64> = cell_accs.iter().map(|a| 1.0 - a).collect();

    Ok(EvaluationReport {
        schema: "report_v1".into(),
        classifier: config.kind.to_string(),
        per_fold,
        aggregate: Aggregate {
            accuracy_mean,
            accuracy_std,
            sensitivity: confusion.sensitivity,
            specificity: confusion.specificity,
            auc,
        },
        roc,
        err_vs: BTreeMap::new(),
        csi_summary: quartiles(&csis),
        box_stats: quartiles(&error_rates),
    })
}

/// Fills `err_vs` on `report` from baseline reports: percent of errors
/// avoided by switching each baseline to this classifier.
pub fn attach_err_comparisons(
    report: &mut EvaluationReport,
    baselines: &[(String, &EvaluationReport)],
) -> Result<()> {
    for (name, base) in baselines {
        let e = err(base.error_rate_percent(), report.error_rate_percent())?;
        report.err_vs.insert(name.clone(), e);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::stratified_kfold;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn confusion_all_correct() {
        let m = confusion_metrics(&[0, 1, 0, 1], &[0, 1, 0, 1], 1).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.sensitivity, 1.0);
        assert_eq!(m.specificity, 1.0);
    }

    #[test]
    fn confusion_two_by_two() {
        // truth [+,+,-,-], preds [+,-,-,-] with + = class 1
        let m = confusion_metrics(&[1, 0, 0, 0], &[1, 1, 0, 0], 1).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.sensitivity, 0.5);
        assert_eq!(m.specificity, 1.0);
    }

    #[test]
    fn confusion_undefined_rates_flagged() {
        let m = confusion_metrics(&[0, 0], &[0, 0], 1).unwrap();
        assert!(!m.sensitivity_defined);
        assert!(m.sensitivity.is_nan());
        assert!(m.specificity_defined);
    }

    #[test]
    fn confusion_matches_count_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let truth: Vec<usize> = (0..100).map(|_| rng.gen_range(0..2)).collect();
        let preds: Vec<usize> = (0..100).map(|_| rng.gen_range(0..2)).collect();
        let m = confusion_metrics(&preds, &truth, 1).unwrap();
        let mut counts = [[0usize; 2]; 2];
        for (&p, &t) in preds.iter().zip(&truth) {
            counts[t][p] += 1;
        }
        let acc = (counts[0][0] + counts[1][1]) as f64 / 100.0;
        let sens = counts[1][1] as f64 / (counts[1][0] + counts[1][1]) as f64;
        let spec = counts[0][0] as f64 / (counts[0][0] + counts[0][1]) as f64;
        assert!((m.accuracy - acc).abs() < 1e-15);
        assert!((m.sensitivity - sens).abs() < 1e-15);
        assert!((m.specificity - spec).abs() < 1e-15);
    }

    /// O(n^2) Mann-Whitney oracle with ties counted one half
    fn mann_whitney(scores: &[f64], truth: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &ti) in truth.iter().enumerate() {
            if !ti {
                continue;
            }
            for (j, &tj) in truth.iter().enumerate() {
                if tj {
                    continue;
                }
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
        num / den
    }

    #[test]
    fn auc_perfect_and_ties() {
        let (curve, auc) = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(auc, 1.0);
        assert_eq!(curve.first().map(|p| (p.fpr, p.tpr)), Some((0.0, 0.0)));
        assert_eq!(curve.last().map(|p| (p.fpr, p.tpr)), Some((1.0, 1.0)));
        let (_, auc) = roc_auc(&[0.5; 6], &[true, false, true, false, true, false]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = 40;
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..15) as f64) / 7.0).collect();
            let truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            if truth.iter().all(|&t| t) || truth.iter().all(|&t| !t) {
                continue;
            }
            let (_, auc) = roc_auc(&scores, &truth).unwrap();
            let oracle = mann_whitney(&scores, &truth);
            assert!((auc - oracle).abs() < 1e-12, "{auc} vs {oracle}");
        }
    }

    #[test]
    fn roc_monotone() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let truth: Vec<bool> = (0..30).map(|_| rng.gen_bool(0.5)).collect();
        let (curve, _) = roc_auc(&scores, &truth).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].fpr >= w[0].fpr);
            assert!(w[1].tpr >= w[0].tpr);
        }
    }

    #[test]
    fn single_class_truth_rejected() {
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn err_reference_values() {
        assert!((err(29.56, 11.37).unwrap() - 61.54).abs() < 5e-3);
        assert!((err(15.87, 8.51).unwrap() - 46.38).abs() < 5e-3);
        assert_eq!(err(10.0, 10.0).unwrap(), 0.0);
        assert!(err(10.0, 12.0).unwrap() < 0.0);
        assert!(err(0.0, 5.0).is_err());
    }

    #[test]
    fn majority_predictor_sanity() {
        // constant predictor accuracy equals majority proportion
        let truth: Vec<usize> = vec![0; 7].into_iter().chain(vec![1; 3]).collect();
        let preds = vec![0usize; 10];
        let m = confusion_metrics(&preds, &truth, 1).unwrap();
        assert!((m.accuracy - 0.7).abs() < 1e-15);
    }

    fn small_synth(seed: u64) -> ExpressionDataset {
        crate::synth::generate(&crate::synth::SyntheticOptions {
            n_genes: 150,
            per_class: 8,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn cross_validate_deterministic_and_accurate() {
        let ds = small_synth(4);
        let plan = stratified_kfold(&ds, 4, 2, 11).unwrap();
        let config = EvalConfig::default();
        let a = cross_validate(&ds, &config, &plan).unwrap();
        let b = cross_validate(&ds, &config, &plan).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.aggregate.accuracy_mean >= 0.9, "{}", a.aggregate.accuracy_mean);
        // weighted aggregate equals the pooled fraction correct
        let total: usize = a.per_fold.iter().map(|r| r.predictions.len()).sum();
        let correct: f64 = a
            .per_fold
            .iter()
            .map(|r| r.accuracy * r.predictions.len() as f64)
            .sum();
        assert!((a.aggregate.accuracy_mean - correct / total as f64).abs() < 1e-12);
    }

    #[test]
    fn parallel_matches_serial() {
        let ds = small_synth(5);
        let plan = stratified_kfold(&ds, 4, 1, 3).unwrap();
        let serial = cross_validate(&ds, &EvalConfig::default(), &plan).unwrap();
        let parallel = cross_validate(
            &ds,
            &EvalConfig {
                jobs: 4,
                ..EvalConfig::default()
            },
            &plan,
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&serial).unwrap(),
            serde_json::to_string(&parallel).unwrap()
        );
    }

    #[test]
    fn prescreen_per_fold_runs() {
        let ds = small_synth(6);
        let plan = stratified_kfold(&ds, 4, 1, 7).unwrap();
        let config = EvalConfig {
            prescreen: Some(Prescreen {
                scope: PrescreenScope::PerFold,
                top_k: 60,
            }),
            ..EvalConfig::default()
        };
        let report = cross_validate(&ds, &config, &plan).unwrap();
        assert!(report.aggregate.accuracy_mean >= 0.85, "{}", report.aggregate.accuracy_mean);
    }

    #[test]
    fn err_comparisons_attach() {
        let ds = small_synth(8);
        let plan = stratified_kfold(&ds, 4, 1, 9).unwrap();
        let mut main = cross_validate(&ds, &EvalConfig::default(), &plan).unwrap();
        let base = cross_validate(
            &ds,
            &EvalConfig {
                kind: ClassifierKind::Src,
                ..EvalConfig::default()
            },
            &plan,
        )
        .unwrap();
        if base.error_rate_percent() > 0.0 {
            attach_err_comparisons(&mut main, &[("src".into(), &base)]).unwrap();
            assert!(main.err_vs.contains_key("src"));
        }
    }

    #[test]
    fn quartile_helper() {
        let q = quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(q.median, 3.0);
        assert_eq!(q.q1, 2.0);
        assert_eq!(q.q3, 4.0);
    }
}
