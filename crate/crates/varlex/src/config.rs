//! Flat `key=value` run configuration shared by the CLI subcommands.
//!
//! Every key can also be supplied on the command line (`--set key=value`,
//! or a dedicated flag where one exists); the command line wins.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::classify::PipelineOptions;
use crate::dataset::ImputeStrategy;
use crate::dictionary::DictionaryMode;
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, Prescreen, PrescreenScope};
use crate::rpca::RpcaOptions;
use crate::solver::{ClassifierKind, SolverOptions, WeightScheme};
use crate::synth::SyntheticOptions;

/// Resolved run configuration. Defaults match the library defaults; the
/// dataset comes either from `matrix`/`labels` paths or, when `synth` is
/// set, from the bundled generator.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub matrix: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub synth: bool,
    pub synth_opts: SyntheticOptions,

    pub kind: ClassifierKind,
    pub mode: DictionaryMode,
    pub impute: ImputeStrategy,

    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub jobs: usize,

    pub top_k: Option<usize>,
    pub prescreen_scope: PrescreenScope,

    pub rpca: RpcaOptions,
    pub solver: SolverOptions,
    pub weights: WeightScheme,
    pub per_sample: bool,
    pub signed_ccr: bool,

    /// class name treated as positive; default = second class in order
    pub positive_class: Option<String>,
    pub baselines: Vec<ClassifierKind>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            matrix: None,
            labels: None,
            synth: false,
            synth_opts: SyntheticOptions::default(),
            kind: ClassifierKind::Ipgsrc,
            mode: DictionaryMode::Fixed,
            impute: ImputeStrategy::GeneMean,
            k: 10,
            repeats: 10,
            seed: 0,
            jobs: 1,
            top_k: None,
            prescreen_scope: PrescreenScope::PerFold,
            rpca: RpcaOptions::default(),
            solver: SolverOptions::default(),
            weights: WeightScheme::SqrtSize,
            per_sample: false,
            signed_ccr: false,
            positive_class: None,
            baselines: Vec::new(),
            out_dir: PathBuf::from("varlex-out"),
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::config(format!("expected boolean, got '{other}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("cannot parse '{v}' for key '{key}'")))
}

impl RunConfig {
    /// Reads a flat key=value file. Lines starting with `#` are comments.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut config = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("{}:{}: expected key=value", path.display(), lineno + 1))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "matrix" => self.matrix = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "synth" => self.synth = parse_bool(value)?,
            "synth_seed" => self.synth_opts.seed = parse_num(key, value)?,
            "synth_genes" => self.synth_opts.n_genes = parse_num(key, value)?,
            "synth_per_class" => self.synth_opts.per_class = parse_num(key, value)?,
            "synth_signature_rows" => self.synth_opts.signature_rows = parse_num(key, value)?,
            "synth_magnitude" => self.synth_opts.signature_magnitude = parse_num(key, value)?,
            "synth_noise" => self.synth_opts.noise_sigma = parse_num(key, value)?,
            "kind" => self.kind = value.parse()?,
            "mode" => self.mode = value.parse()?,
            "impute" => self.impute = value.parse()?,
            "k" => self.k = parse_num(key, value)?,
            "repeats" => self.repeats = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "jobs" => self.jobs = parse_num(key, value)?,
            "top_k" => {
                self.top_k = if value == "none" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "prescreen" => {
                self.prescreen_scope = match value {
                    "per-fold" => PrescreenScope::PerFold,
                    "global" => PrescreenScope::Global,
                    other => {
                        return Err(Error::config(format!("unknown prescreen scope '{other}'")))
                    }
                }
            }
            "rpca_lambda" => {
                self.rpca.lambda = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "rpca_mu0" => {
                self.rpca.mu0 = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "rpca_rho" => self.rpca.rho = parse_num(key, value)?,
            "rpca_tol" => self.rpca.tol = parse_num(key, value)?,
            "rpca_max_iter" => self.rpca.max_iter = parse_num(key, value)?,
            "beta1" => self.solver.beta1 = parse_num(key, value)?,
            "beta2" => self.solver.beta2 = parse_num(key, value)?,
            "gamma1" => self.solver.gamma1 = parse_num(key, value)?,
            "gamma2" => self.solver.gamma2 = parse_num(key, value)?,
            "tol" => self.solver.tol_primal = parse_num(key, value)?,
            "max_iter" => self.solver.max_iter = parse_num(key, value)?,
            "noise_eps" => {
                self.solver.noise_eps = if value == "none" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "weights" => self.weights = value.parse()?,
            "per_sample" => self.per_sample = parse_bool(value)?,
            "signed_ccr" => self.signed_ccr = parse_bool(value)?,
            "positive_class" => self.positive_class = Some(value.to_string()),
            "baselines" => {
                self.baselines = value
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.synth {
            let matrix = self
                .matrix
                .as_ref()
                .ok_or_else(|| Error::config("config needs 'matrix' (or synth=true)"))?;
            if !matrix.exists() {
                return Err(Error::config(format!("matrix path {} does not exist", matrix.display())));
            }
            if let Some(labels) = &self.labels {
                if !labels.exists() {
                    return Err(Error::config(format!(
                        "labels path {} does not exist",
                        labels.display()
                    )));
                }
            }
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs must be at least 1"));
        }
        self.rpca.validate()?;
        self.solver.validate()?;
        Ok(())
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            rpca: self.rpca.clone(),
            solver: self.solver.clone(),
            weights: self.weights,
            per_sample_dictionary: self.per_sample,
            signed_ccr: self.signed_ccr,
        }
    }

    /// Resolves the evaluation config against a loaded dataset (needed for
    /// the positive-class name lookup).
    pub fn eval_config(&self, class_names: &[String]) -> Result<EvalConfig> {
        let positive_class = match &self.positive_class {
            Some(name) => class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::config(format!("positive_class '{name}' not in dataset")))?,
            None => {
                if class_names.len() == 2 {
                    1
                } else {
                    0
                }
            }
        };
        Ok(EvalConfig {
            kind: self.kind,
            mode: self.mode,
            pipeline: self.pipeline_options(),
            prescreen: self.top_k.map(|top_k| Prescreen {
                scope: self.prescreen_scope,
                top_k,
            }),
            positive_class,
            jobs: self.jobs,
        })
    }

    /// Key/value view of the resolved options, for `--dry-run` output.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        put(
            "matrix",
            self.matrix
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into()),
        );
        put(
            "labels",
            self.labels
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into()),
        );
        put("synth", self.synth.to_string());
        if self.synth {
            put("synth_seed", self.synth_opts.seed.to_string());
            put("synth_genes", self.synth_opts.n_genes.to_string());
            put("synth_per_class", self.synth_opts.per_class.to_string());
        }
        put("kind", self.kind.to_string());
        put(
            "mode",
            match self.mode {
                DictionaryMode::Fixed => "fixed".into(),
                DictionaryMode::Changing => "changing".into(),
            },
        );
        put("impute", self.impute.to_string());
        put("k", self.k.to_string());
        put("repeats", self.repeats.to_string());
        put("seed", self.seed.to_string());
        put("jobs", self.jobs.to_string());
        put(
            "top_k",
            self.top_k.map(|k| k.to_string()).unwrap_or_else(|| "none".into()),
        );
        put(
            "prescreen",
            match self.prescreen_scope {
                PrescreenScope::PerFold => "per-fold".into(),
                PrescreenScope::Global => "global".into(),
            },
        );
        put(
            "rpca_lambda",
            self.rpca
                .lambda
                .map(|l| l.to_string())
                .unwrap_or_else(|| "auto".into()),
        );
        put("rpca_rho", self.rpca.rho.to_string());
        put("rpca_tol", self.rpca.tol.to_string());
        put("rpca_max_iter", self.rpca.max_iter.to_string());
        put("beta1", self.solver.beta1.to_string());
        put("beta2", self.solver.beta2.to_string());
        put("gamma1", self.solver.gamma1.to_string());
        put("gamma2", self.solver.gamma2.to_string());
        put("tol", self.solver.tol_primal.to_string());
        put("max_iter", self.solver.max_iter.to_string());
        put(
            "weights",
            match self.weights {
                WeightScheme::SqrtSize => "sqrt".into(),
                WeightScheme::Unit => "unit".into(),
            },
        );
        put("per_sample", self.per_sample.to_string());
        put("signed_ccr", self.signed_ccr.to_string());
        put(
            "baselines",
            self.baselines
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("out_dir", self.out_dir.display().to_string());
        map
    }
}
