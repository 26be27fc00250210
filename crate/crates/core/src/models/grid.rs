//! Hyperparameter grid search on a validation split, and stratified k-fold cross-validation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::TextClassifier;
use super::ovo::{ClassWeight, SvmConfig};
use super::svm::SolverParams;
use crate::annotate::taxonomy::Level;
use crate::corpus::{stratified_folds, LabeledSet};
use crate::error::{Error, Result};
use crate::eval::{MacroMetrics, MetricsReport, ReportMeta};
use crate::features::{SparseVector, TfIdfModel};
use crate::preprocess::{PreprocessConfig, TokenSequence};

pub const DEFAULT_C_VALUES: [f64; 8] = [0.01, 0.05, 0.1, 0.2, 0.46, 0.5, 0.82, 1.0];
pub const DEFAULT_TOP_N: [Option<usize>; 4] = [Some(10_000), Some(25_000), Some(50_000), None];
pub const KERNEL: &str = "linear";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ngram_max: Vec<usize>,
    pub top_n: Vec<Option<usize>>,
    pub c: Vec<f64>,
    pub class_weight: Vec<ClassWeight>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            ngram_max: vec![1, 2],
            top_n: DEFAULT_TOP_N.to_vec(),
            c: DEFAULT_C_VALUES.to_vec(),
            class_weight: vec![ClassWeight::Balanced, ClassWeight::None],
        }
    }
}

impl GridSpec {
    /// Configurations in lattice order (ngram, top_n, C, class weight).
    pub fn configs(&self) -> Vec<SvmConfig> {
        let mut out = Vec::new();
        for &ngram_max in &self.ngram_max {
            for &top_n in &self.top_n {
                for &c in &self.c {
                    for &class_weight in &self.class_weight {
                        out.push(SvmConfig { c, class_weight, ngram_max, top_n });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub config: SvmConfig,
    pub validation: Option<MacroMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    /// Sorted by validation macro-F1, best first; failed configurations last.
    pub results: Vec<GridResult>,
    pub best: Option<SvmConfig>,
    pub kernel: String,
    pub note: String,
}

impl GridOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,ngram_max,top_n,C,class_weight,kernel,macro_precision,macro_recall,macro_f1,accuracy,error\n");
        for (rank, r) in self.results.iter().enumerate() {
            let top = r.config.top_n.map_or("none".to_string(), |n| n.to_string());
            let m = r.validation.map_or(",,,".to_string(), |m| {
                format!("{:.6},{:.6},{:.6},{:.6}", m.precision, m.recall, m.f1, m.accuracy)
            });
            let err = r.error.as_deref().unwrap_or("").replace(',', ";");
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                rank + 1,
                r.config.ngram_max,
                top,
                r.config.c,
                r.config.class_weight,
                self.kernel,
                m,
                err
            )
            .unwrap();
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

struct Prepared {
    docs_train: Vec<TokenSequence>,
    labels_train: Vec<&'static str>,
    docs_val: Vec<TokenSequence>,
    labels_val: Vec<&'static str>,
}

fn prepare(train: &LabeledSet, validation: &LabeledSet, level: Level, pre: &PreprocessConfig) -> Prepared {
    let docs = |s: &LabeledSet| s.entries.par_iter().map(|e| pre.process(&e.tweet.text)).collect::<Vec<_>>();
    Prepared {
        docs_train: docs(train),
        labels_train: train.labels(level),
        docs_val: docs(validation),
        labels_val: validation.labels(level),
    }
}

fn evaluate_config(
    config: &SvmConfig,
    features: &(TfIdfModel, Vec<SparseVector>, Vec<SparseVector>),
    p: &Prepared,
    level: Level,
    pre: &PreprocessConfig,
    solver: &SolverParams,
) -> Result<MacroMetrics> {
    let (tfidf, x_train, x_val) = features;
    let (clf, _) = TextClassifier::train_vectors(tfidf.clone(), x_train, &p.labels_train, level, config, pre, solver)?;
    let pred: Vec<&str> = x_val.iter().map(|x| clf.ovo.predict(x)).collect();
    let report = MetricsReport::evaluate(&p.labels_val, &pred, &level.class_names(), ReportMeta::default())?;
    Ok(report.macros())
}

/// Vocabulary plus train and validation vectors for one (ngram, top_n) pair.
type Featurized = (TfIdfModel, Vec<SparseVector>, Vec<SparseVector>);

/// Trains every configuration on `train` and ranks them by validation macro-F1.
/// A failing configuration is recorded and the search continues.
pub fn grid_search(
    train: &LabeledSet,
    validation: &LabeledSet,
    level: Level,
    grid: &GridSpec,
    preprocess: &PreprocessConfig,
    solver: &SolverParams,
) -> Result<GridOutcome> {
    let configs = grid.configs();
    if configs.is_empty() {
        return Err(Error::InvalidInput("empty hyperparameter grid".into()));
    }
    if train.is_empty() || validation.is_empty() {
        return Err(Error::InvalidInput("grid search needs non-empty train and validation sets".into()));
    }
    let p = prepare(train, validation, level, preprocess);

    // One vocabulary per (ngram_max, top_n) pair, shared by the C / class-weight variants.
    let mut keys: Vec<(usize, Option<usize>)> = configs.iter().map(|c| (c.ngram_max, c.top_n)).collect();
    keys.dedup();
    keys.sort();
    keys.dedup();
    let features: HashMap<(usize, Option<usize>), Result<Featurized>> = keys
        .par_iter()
        .map(|&(ngram, top)| {
            let built = TfIdfModel::build(&p.docs_train, ngram, top).map(|m| {
                let xt = m.vectorize_all(&p.docs_train);
                let xv = m.vectorize_all(&p.docs_val);
                (m, xt, xv)
            });
            ((ngram, top), built)
        })
        .collect();

    let mut results: Vec<GridResult> = configs
        .par_iter()
        .map(|config| {
            let outcome = config.validate().and_then(|_| match &features[&(config.ngram_max, config.top_n)] {
                Ok(f) => evaluate_config(config, f, &p, level, preprocess, solver),
                Err(e) => Err(Error::InvalidInput(e.to_string())),
            });
            match outcome {
                Ok(m) => GridResult { config: config.clone(), validation: Some(m), error: None },
                Err(e) => {
                    log::warn!("grid config {config} failed: {e}");
                    GridResult { config: config.clone(), validation: None, error: Some(e.to_string()) }
                }
            }
        })
        .collect();
    // stable: equal scores keep lattice order
    results.sort_by(|a, b| {
        let fa = a.validation.map_or(f64::NEG_INFINITY, |m| m.f1);
        let fb = b.validation.map_or(f64::NEG_INFINITY, |m| m.f1);
        fb.total_cmp(&fa)
    });
    let best = results.iter().find(|r| r.validation.is_some()).map(|r| r.config.clone());
    Ok(GridOutcome {
        results,
        best,
        kernel: KERNEL.into(),
        note: "only the linear kernel is searched".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub folds: Vec<MetricsReport>,
    pub mean: MetricsReport,
}

/// Stratified k-fold cross-validation of one configuration on `data`.
pub fn cross_validate(
    data: &LabeledSet,
    level: Level,
    k: usize,
    config: &SvmConfig,
    preprocess: &PreprocessConfig,
    solver: &SolverParams,
    seed: u64,
) -> Result<CvOutcome> {
    let labels = data.labels(level);
    let fold_of = stratified_folds(&labels, k, seed)?;
    let docs: Vec<TokenSequence> = data.entries.par_iter().map(|e| preprocess.process(&e.tweet.text)).collect();
    let classes = level.class_names();
    let folds: Vec<Result<MetricsReport>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (mut tr_docs, mut tr_labels, mut te_docs, mut te_labels) = (vec![], vec![], vec![], vec![]);
            for (i, &f) in fold_of.iter().enumerate() {
                if f == fold {
                    te_docs.push(docs[i].clone());
                    te_labels.push(labels[i]);
                } else {
                    tr_docs.push(docs[i].clone());
                    tr_labels.push(labels[i]);
                }
            }
            let (clf, _) = TextClassifier::train_tokens(&tr_docs, &tr_labels, level, config, preprocess, solver)?;
            let pred: Vec<&str> = te_docs.iter().map(|d| clf.predict_tokens(d)).collect();
            let meta = ReportMeta {
                model: "tfidf_svm".into(),
                task: level.to_string(),
                split: format!("fold{}", fold + 1),
                seed: Some(seed),
                run: None,
                runs_averaged: None,
            };
            MetricsReport::evaluate(&te_labels, &pred, &classes, meta)
        })
        .collect();
    let folds = folds.into_iter().collect::<Result<Vec<_>>>()?;
    let mean = MetricsReport::mean(
        &folds,
        ReportMeta {
            model: "tfidf_svm".into(),
            task: level.to_string(),
            split: "cv_mean".into(),
            seed: Some(seed),
            run: None,
            runs_averaged: None,
        },
    )?;
    Ok(CvOutcome { folds, mean })
}
