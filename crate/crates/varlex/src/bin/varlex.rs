//! Command-line front end for the variation-dictionary classification
//! pipeline.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;

use varlex::classify::run_classifier;
use varlex::config::RunConfig;
use varlex::dataset::{
    impute_missing, load_combined_csv, load_expression_csv, snr_rank, snr_scores,
    stratified_kfold, ExpressionDataset,
};
use varlex::dictionary::{build_dictionary, DictionaryMode, GroupStructure, VariationDictionary};
use varlex::error::{Error, Result};
use varlex::eval::{attach_err_comparisons, cross_validate, EvaluationReport};
use varlex::rpca::{rpca_decompose, RpcaOptions};
use varlex::solver::{ipgsr_solve, make_problem, ClassifierKind, WeightScheme};

#[derive(Parser)]
#[command(name = "varlex", version, about = "Low-rank variation dictionaries and group-sparse classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the semantic version
    Version,
    /// Low-rank plus sparse decomposition of a matrix CSV
    Decompose {
        #[arg(long)]
        input: PathBuf,
        /// 'auto' or a positive float
        #[arg(long, default_value = "auto")]
        lambda: String,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// iteration trace CSV (iter,residual,rank,nnz)
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value = "varlex-out")]
        out_dir: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Build a variation dictionary from train/test datasets
    Dict {
        #[arg(long, default_value = "fixed")]
        mode: String,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        train_labels: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        test_labels: Option<PathBuf>,
        #[arg(long)]
        per_sample: bool,
        #[arg(long, default_value = "gene_mean")]
        impute: String,
        #[arg(long, default_value = "varlex-out")]
        out_dir: PathBuf,
    },
    /// Solve the group-sparse representation problem over a saved dictionary
    Solve {
        /// ipgsrc | iprc | gsrc | src
        #[arg(long)]
        problem: String,
        /// directory produced by `varlex dict`
        #[arg(long)]
        dict: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta1: f64,
        #[arg(long, default_value_t = 1.0)]
        beta2: f64,
        #[arg(long, default_value_t = 1.618)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long, default_value = "sqrt")]
        weights: String,
        /// iteration history CSV (iter,r_z,r_feas,objective)
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, default_value = "varlex-out")]
        out_dir: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Classify test samples against a training set
    Classify {
        #[arg(long, default_value = "ipgsrc")]
        kind: String,
        #[arg(long, default_value = "fixed")]
        mode: String,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        train_labels: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        test_labels: Option<PathBuf>,
        #[arg(long, default_value = "gene_mean")]
        impute: String,
        #[arg(long, default_value = "varlex-out")]
        out_dir: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Repeated stratified cross-validation from a run config
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// override a config key, repeatable: --set k=5
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// validate and print the resolved option set without computing
        #[arg(long)]
        dry_run: bool,
        /// exit 3 if any fold's solver fails to converge
        #[arg(long)]
        strict: bool,
    },
    /// Rank genes by signal-to-noise ratio
    RankGenes {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long, default_value = "gene_mean")]
        impute: String,
        #[arg(long, default_value = "varlex-out")]
        out_dir: PathBuf,
    },
    /// Generate the bundled synthetic benchmark dataset
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        genes: usize,
        #[arg(long, default_value_t = 30)]
        per_class: usize,
        #[arg(long, default_value = "varlex-out")]
        out_dir: PathBuf,
    },
}

fn provenance(seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("# varlex {} seed={}\n", varlex::VERSION, s),
        None => format!("# varlex {}\n", varlex::VERSION),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.display().to_string(),
            source: e,
        })?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn load_dataset(
    matrix: &Path,
    labels: Option<&Path>,
    impute: &str,
) -> Result<ExpressionDataset> {
    let ds = match labels {
        Some(l) => load_expression_csv(matrix, l)?,
        // unlabeled matrices are fine for roles that never read labels
        None => load_combined_or_plain(matrix)?,
    };
    if ds.has_missing() {
        impute_missing(&ds, impute.parse()?)
    } else {
        Ok(ds)
    }
}

fn matrix_csv(
    gene_ids: &[String],
    sample_ids: &[String],
    values: &DMatrix<f64>,
    seed: Option<u64>,
) -> String {
    let mut out = provenance(seed);
    out.push_str("gene_id");
    for s in sample_ids {
        out.push(',');
        out.push_str(s);
    }
    out.push('\n');
    for i in 0..values.nrows() {
        out.push_str(&gene_ids[i]);
        for j in 0..values.ncols() {
            out.push_str(&format!(",{:?}", values[(i, j)]));
        }
        out.push('\n');
    }
    out
}

fn cmd_decompose(
    input: &Path,
    lambda: &str,
    tol: f64,
    max_iter: usize,
    trace: Option<&Path>,
    out_dir: &Path,
    strict: bool,
) -> Result<i32> {
    let ds = load_combined_or_plain(input)?;
    let opts = RpcaOptions {
        lambda: if lambda == "auto" {
            None
        } else {
            Some(lambda.parse().map_err(|_| Error::config("bad --lambda"))?)
        },
        tol,
        max_iter,
        ..RpcaOptions::default()
    };
    let result = rpca_decompose(&ds.values, &opts)?;
    write_file(
        &out_dir.join("L.csv"),
        &matrix_csv(&ds.gene_ids, &ds.sample_ids, &result.low_rank, None),
    )?;
    write_file(
        &out_dir.join("S.csv"),
        &matrix_csv(&ds.gene_ids, &ds.sample_ids, &result.sparse, None),
    )?;
    if let Some(trace_path) = trace {
        let mut out = provenance(None);
        out.push_str("iter,residual,rank,nnz\n");
        for rec in &result.trace {
            out.push_str(&format!("{},{:?},{},{}\n", rec.iter, rec.residual, rec.rank, rec.nnz));
        }
        write_file(trace_path, &out)?;
    }
    eprintln!(
        "decomposed {}x{} in {} iterations (converged: {})",
        ds.values.nrows(),
        ds.values.ncols(),
        result.iterations,
        result.converged
    );
    Ok(if strict && !result.converged { 3 } else { 0 })
}

/// `decompose` accepts a plain matrix CSV; a LABEL row is allowed but not
/// required.
fn load_combined_or_plain(path: &Path) -> Result<ExpressionDataset> {
    match load_combined_csv(path) {
        Ok(ds) => Ok(ds),
        Err(_) => {
            // no LABEL row: fabricate a label per sample so the struct is valid
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let tmp = tempdir_path()?;
            let n = text
                .lines()
                .find(|l| !l.starts_with('#') && !l.trim().is_empty())
                .map(|l| l.split(',').count() - 1)
                .unwrap_or(0);
            let mut combined = text.trim_end().to_string();
            combined.push_str("\nLABEL");
            for j in 0..n {
                combined.push_str(if j % 2 == 0 { ",a" } else { ",b" });
            }
            combined.push('\n');
            let p = tmp.join("combined.csv");
            write_file(&p, &combined)?;
            let ds = load_combined_csv(&p);
            let _ = std::fs::remove_file(&p);
            ds
        }
    }
}

fn tempdir_path() -> Result<PathBuf> {
    let dir = std::env::temp_dir().join(format!("varlex-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    Ok(dir)
}

fn save_dictionary(dict: &VariationDictionary, out_dir: &Path, gene_ids: &[String], train_ids: &[String], test_ids: &[String], class_names: &[String]) -> Result<()> {
    write_file(
        &out_dir.join("S_X.csv"),
        &matrix_csv(gene_ids, train_ids, &dict.train_sparse, None),
    )?;
    write_file(
        &out_dir.join("S_Y.csv"),
        &matrix_csv(gene_ids, test_ids, &dict.test_sparse, None),
    )?;
    let groups = serde_json::json!({
        "class_of": dict.groups.class_of,
        "blocks": dict.groups.blocks,
        "class_names": class_names,
        "mode": if dict.mode == DictionaryMode::Fixed { "fixed" } else { "changing" },
        "train_norms": dict.train_norms,
        "test_norms": dict.test_norms,
        "degenerate_train": dict.degenerate_train,
        "degenerate_test": dict.degenerate_test,
    });
    write_file(
        &out_dir.join("groups.json"),
        &serde_json::to_string_pretty(&groups).unwrap(),
    )
}

fn load_saved_dictionary(dir: &Path) -> Result<(VariationDictionary, Vec<String>)> {
    let sx = load_combined_or_plain(&dir.join("S_X.csv"))?;
    let sy = load_combined_or_plain(&dir.join("S_Y.csv"))?;
    let groups_text = std::fs::read_to_string(dir.join("groups.json")).map_err(|e| Error::Io {
        path: dir.join("groups.json").display().to_string(),
        source: e,
    })?;
    let v: serde_json::Value = serde_json::from_str(&groups_text)
        .map_err(|e| Error::data(format!("groups.json: {e}")))?;
    let class_of: Vec<usize> = serde_json::from_value(v["class_of"].clone())
        .map_err(|e| Error::data(format!("groups.json class_of: {e}")))?;
    let class_names: Vec<String> = serde_json::from_value(v["class_names"].clone())
        .map_err(|e| Error::data(format!("groups.json class_names: {e}")))?;
    let groups = GroupStructure::from_labels(&class_of, class_names.len())?;
    let mode = if v["mode"] == "changing" {
        DictionaryMode::Changing
    } else {
        DictionaryMode::Fixed
    };
    let n = sx.values.ncols();
    let k = sy.values.ncols();
    Ok((
        VariationDictionary {
            train_sparse: sx.values,
            test_sparse: sy.values,
            groups,
            mode,
            train_norms: vec![1.0; n],
            test_norms: vec![1.0; k],
            degenerate_train: vec![],
            degenerate_test: vec![],
        },
        class_names,
    ))
}

#[allow(clippy::too_many_arguments)]
fn cmd_dict(
    mode: &str,
    train: &Path,
    train_labels: Option<&Path>,
    test: &Path,
    test_labels: Option<&Path>,
    per_sample: bool,
    impute: &str,
    out_dir: &Path,
) -> Result<i32> {
    let train_ds = load_dataset(train, train_labels, impute)?;
    let test_ds = load_dataset(test, test_labels, impute)?;
    let mode: DictionaryMode = mode.parse()?;
    let dict = build_dictionary(&train_ds, &test_ds, mode, &RpcaOptions::default(), per_sample)?;
    save_dictionary(
        &dict,
        out_dir,
        &train_ds.gene_ids,
        &train_ds.sample_ids,
        &test_ds.sample_ids,
        &train_ds.class_names,
    )?;
    eprintln!("dictionary written to {}", out_dir.display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    problem: &str,
    dict_dir: &Path,
    beta1: f64,
    beta2: f64,
    gamma: f64,
    tol: f64,
    max_iter: usize,
    weights: &str,
    history: Option<&Path>,
    out_dir: &Path,
    strict: bool,
) -> Result<i32> {
    let kind: ClassifierKind = problem.parse()?;
    let scheme: WeightScheme = weights.parse()?;
    let (dict, _) = load_saved_dictionary(dict_dir)?;
    let gsp = make_problem(kind, &dict, scheme);
    let opts = varlex::solver::SolverOptions {
        beta1,
        beta2,
        gamma1: gamma,
        gamma2: gamma,
        tol_primal: tol,
        max_iter,
        noise_eps: None,
    };
    let sol = ipgsr_solve(&gsp, &opts)?;
    let d = sol.coefficients.nrows();
    let atom_ids: Vec<String> = (0..d).map(|i| format!("atom{i}")).collect();
    let col_ids: Vec<String> = (0..sol.coefficients.ncols()).map(|j| format!("t{j}")).collect();
    write_file(
        &out_dir.join("M.csv"),
        &matrix_csv(&atom_ids, &col_ids, &sol.coefficients, None),
    )?;
    if let Some(hp) = history {
        let mut out = provenance(None);
        out.push_str("iter,r_z,r_feas,objective\n");
        for rec in &sol.history {
            out.push_str(&format!(
                "{},{:?},{:?},{:?}\n",
                rec.iter, rec.split_residual, rec.feasibility_residual, rec.objective
            ));
        }
        write_file(hp, &out)?;
    }
    eprintln!(
        "solved {problem} in {} iterations (converged: {})",
        sol.iterations, sol.converged
    );
    Ok(if strict && !sol.converged { 3 } else { 0 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_classify(
    kind: &str,
    mode: &str,
    train: &Path,
    train_labels: Option<&Path>,
    test: &Path,
    test_labels: Option<&Path>,
    impute: &str,
    out_dir: &Path,
    strict: bool,
) -> Result<i32> {
    let kind: ClassifierKind = kind.parse()?;
    let mode: DictionaryMode = mode.parse()?;
    let train_ds = load_dataset(train, train_labels, impute)?;
    let test_ds = load_dataset(test, test_labels, impute)?;
    let out = run_classifier(
        kind,
        &train_ds,
        &test_ds,
        mode,
        &varlex::classify::PipelineOptions::default(),
    )?;
    let c = train_ds.n_classes();
    let mut csv = provenance(None);
    csv.push_str("sample_id,predicted");
    for j in 0..c {
        csv.push_str(&format!(",score_{}", j + 1));
    }
    csv.push_str(",csi,flags\n");
    for (sid, p) in test_ds.sample_ids.iter().zip(&out.predictions) {
        let mut flags = Vec::new();
        if p.tie {
            flags.push("tie");
        }
        if p.degenerate {
            flags.push("degenerate");
        }
        csv.push_str(&format!("{},{}", sid, train_ds.class_names[p.label]));
        for s in &p.scores {
            csv.push_str(&format!(",{s:?}"));
        }
        csv.push_str(&format!(",{:?},{}\n", p.csi, flags.join("|")));
    }
    write_file(&out_dir.join("predictions.csv"), &csv)?;
    eprintln!("predictions written to {}", out_dir.join("predictions.csv").display());
    Ok(if strict && !out.solver_converged { 3 } else { 0 })
}

#[derive(serde::Serialize)]
struct ReportFile<'a> {
    tool_version: &'a str,
    seed: u64,
    #[serde(flatten)]
    report: &'a EvaluationReport,
}

fn write_eval_outputs(
    report: &EvaluationReport,
    seed: u64,
    out_dir: &Path,
) -> Result<()> {
    let file = ReportFile {
        tool_version: varlex::VERSION,
        seed,
        report,
    };
    write_file(
        &out_dir.join("report.json"),
        &serde_json::to_string_pretty(&file).unwrap(),
    )?;

    let mut roc = provenance(Some(seed));
    roc.push_str("fpr,tpr\n");
    for p in &report.roc {
        roc.push_str(&format!("{:?},{:?}\n", p.fpr, p.tpr));
    }
    write_file(&out_dir.join("roc.csv"), &roc)?;

    let mut folds = provenance(Some(seed));
    folds.push_str("repeat,fold,sample_id,truth,predicted,accuracy\n");
    for rec in &report.per_fold {
        for p in &rec.predictions {
            folds.push_str(&format!(
                "{},{},{},{},{},{:?}\n",
                rec.repeat, rec.fold, p.sample_id, p.truth, p.predicted, rec.accuracy
            ));
        }
    }
    write_file(&out_dir.join("folds.csv"), &folds)?;

    let mut csi = provenance(Some(seed));
    csi.push_str("repeat,fold,sample_id,csi\n");
    for rec in &report.per_fold {
        for p in &rec.predictions {
            csi.push_str(&format!(
                "{},{},{},{:?}\n",
                rec.repeat, rec.fold, p.sample_id, p.csi
            ));
        }
    }
    write_file(&out_dir.join("csi.csv"), &csi)
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    config_path: &Path,
    sets: &[String],
    kind: Option<&str>,
    mode: Option<&str>,
    k: Option<usize>,
    repeats: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    top_k: Option<usize>,
    out_dir: Option<&Path>,
    dry_run: bool,
    strict: bool,
) -> Result<i32> {
    let mut config = RunConfig::from_file(config_path)?;
    for s in sets {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| Error::config(format!("--set expects key=value, got '{s}'")))?;
        config.set(key, value)?;
    }
    if let Some(v) = kind {
        config.set("kind", v)?;
    }
    if let Some(v) = mode {
        config.set("mode", v)?;
    }
    if let Some(v) = k {
        config.set("k", &v.to_string())?;
    }
    if let Some(v) = repeats {
        config.set("repeats", &v.to_string())?;
    }
    if let Some(v) = seed {
        config.set("seed", &v.to_string())?;
    }
    if let Some(v) = jobs {
        config.set("jobs", &v.to_string())?;
    }
    if let Some(v) = top_k {
        config.set("top_k", &v.to_string())?;
    }
    if let Some(v) = out_dir {
        config.set("out_dir", &v.display().to_string())?;
    }
    config.validate()?;

    if dry_run {
        for (key, value) in config.resolved() {
            println!("{key} = {value}");
        }
        return Ok(0);
    }

    let ds = if config.synth {
        varlex::synth::generate(&config.synth_opts)?
    } else {
        load_dataset(
            config.matrix.as_ref().unwrap(),
            config.labels.as_deref(),
            &config.impute.to_string(),
        )?
    };
    let plan = stratified_kfold(&ds, config.k, config.repeats, config.seed)?;
    let eval_config = config.eval_config(&ds.class_names)?;
    let mut report = cross_validate(&ds, &eval_config, &plan)?;

    let mut baseline_reports = Vec::new();
    for &baseline in &config.baselines {
        let bc = varlex::eval::EvalConfig {
            kind: baseline,
            ..eval_config.clone()
        };
        let r = cross_validate(&ds, &bc, &plan)?;
        baseline_reports.push((baseline.to_string(), r));
    }
    let refs: Vec<(String, &EvaluationReport)> = baseline_reports
        .iter()
        .map(|(n, r)| (n.clone(), r))
        .collect();
    if !refs.is_empty() && report.error_rate_percent() < 100.0 {
        // ERR is undefined when a baseline makes zero errors; skip those
        let usable: Vec<(String, &EvaluationReport)> = refs
            .into_iter()
            .filter(|(_, r)| r.error_rate_percent() > 0.0)
            .collect();
        attach_err_comparisons(&mut report, &usable)?;
    }

    write_eval_outputs(&report, config.seed, &config.out_dir)?;
    println!(
        "accuracy {:.4} +/- {:.4}  (auc {})",
        report.aggregate.accuracy_mean,
        report.aggregate.accuracy_std,
        report
            .aggregate
            .auc
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "n/a".into())
    );
    if strict && report.per_fold.iter().any(|r| !r.solver_converged) {
        return Ok(3);
    }
    Ok(0)
}

fn cmd_rank_genes(
    matrix: &Path,
    labels: Option<&Path>,
    top_k: Option<usize>,
    impute: &str,
    out_dir: &Path,
) -> Result<i32> {
    let ds = load_dataset(matrix, labels, impute)?;
    let scores = snr_scores(&ds)?;
    let top_k = top_k.unwrap_or(ds.n_genes());
    let (order, _) = snr_rank(&ds, top_k)?;
    let mut out = provenance(None);
    out.push_str("rank,gene_id,snr\n");
    for (rank, &i) in order.iter().take(top_k).enumerate() {
        out.push_str(&format!("{},{},{:?}\n", rank + 1, ds.gene_ids[i], scores[i]));
    }
    write_file(&out_dir.join("genes.csv"), &out)?;
    eprintln!("ranked genes written to {}", out_dir.join("genes.csv").display());
    Ok(0)
}

fn cmd_synth(seed: u64, genes: usize, per_class: usize, out_dir: &Path) -> Result<i32> {
    let ds = varlex::synth::generate(&varlex::synth::SyntheticOptions {
        n_genes: genes,
        per_class,
        seed,
        ..Default::default()
    })?;
    write_file(
        &out_dir.join("matrix.csv"),
        &matrix_csv(&ds.gene_ids, &ds.sample_ids, &ds.values, Some(seed)),
    )?;
    let mut labels = provenance(Some(seed));
    labels.push_str("sample_id,label\n");
    for (sid, &l) in ds.sample_ids.iter().zip(&ds.labels) {
        labels.push_str(&format!("{},{}\n", sid, ds.class_names[l]));
    }
    write_file(&out_dir.join("labels.csv"), &labels)?;
    eprintln!("synthetic dataset written to {}", out_dir.display());
    Ok(0)
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io { .. } => 1,
        Error::Data(_) | Error::Numerical(_) => 2,
        Error::NonConvergence(_) => 3,
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Version => {
            println!("varlex {}", varlex::VERSION);
            Ok(0)
        }
        Command::Decompose {
            input,
            lambda,
            tol,
            max_iter,
            trace,
            out_dir,
            strict,
        } => cmd_decompose(&input, &lambda, tol, max_iter, trace.as_deref(), &out_dir, strict),
        Command::Dict {
            mode,
            train,
            train_labels,
            test,
            test_labels,
            per_sample,
            impute,
            out_dir,
        } => cmd_dict(
            &mode,
            &train,
            train_labels.as_deref(),
            &test,
            test_labels.as_deref(),
            per_sample,
            &impute,
            &out_dir,
        ),
        Command::Solve {
            problem,
            dict,
            beta1,
            beta2,
            gamma,
            tol,
            max_iter,
            weights,
            history,
            out_dir,
            strict,
        } => cmd_solve(
            &problem,
            &dict,
            beta1,
            beta2,
            gamma,
            tol,
            max_iter,
            &weights,
            history.as_deref(),
            &out_dir,
            strict,
        ),
        Command::Classify {
            kind,
            mode,
            train,
            train_labels,
            test,
            test_labels,
            impute,
            out_dir,
            strict,
        } => cmd_classify(
            &kind,
            &mode,
            &train,
            train_labels.as_deref(),
            &test,
            test_labels.as_deref(),
            &impute,
            &out_dir,
            strict,
        ),
        Command::Eval {
            config,
            sets,
            kind,
            mode,
            k,
            repeats,
            seed,
            jobs,
            top_k,
            out_dir,
            dry_run,
            strict,
        } => cmd_eval(
            &config,
            &sets,
            kind.as_deref(),
            mode.as_deref(),
            k,
            repeats,
            seed,
            jobs,
            top_k,
            out_dir.as_deref(),
            dry_run,
            strict,
        ),
        Command::RankGenes {
            matrix,
            labels,
            top_k,
            impute,
            out_dir,
        } => cmd_rank_genes(&matrix, labels.as_deref(), top_k, &impute, &out_dir),
        Command::Synth {
            seed,
            genes,
            per_class,
            out_dir,
        } => cmd_synth(seed, genes, per_class, &out_dir),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}
