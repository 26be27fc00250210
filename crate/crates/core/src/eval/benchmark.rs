use crate::annotate::taxonomy::Level;
use crate::corpus::{LabeledSet, SplitSet};
use crate::error::Result;
use crate::eval::metrics::{MetricsReport, ReportMeta};
use crate::models::{Model, PredictionSet};

/// Predictions for one run: either a model applied to the split, or precomputed labels keyed by id.
pub enum RunPredictions {
    Model(Model),
    External(PredictionSet),
}

impl RunPredictions {
    fn predict(&self, set: &LabeledSet) -> Result<Vec<String>> {
        match self {
            RunPredictions::Model(m) => Ok(m.predict_batch(&set.texts()).into_iter().map(String::from).collect()),
            RunPredictions::External(p) => Ok(p.aligned(&set.ids())?.into_iter().map(String::from).collect()),
        }
    }
}

pub struct BenchmarkSource {
    pub name: String,
    pub runs: Vec<RunPredictions>,
}

/// The validation and test parts of a split, named.
pub fn eval_splits(split: &SplitSet) -> [(&'static str, &LabeledSet); 2] {
    [("validation", &split.validation), ("test", &split.test)]
}

/// One report per source, run and split, plus a mean report per source and split
/// when a source has several runs.
pub fn benchmark(
    sources: &[BenchmarkSource],
    splits: &[(&str, &LabeledSet)],
    level: Level,
    seed: Option<u64>,
) -> Result<Vec<MetricsReport>> {
    let classes = level.class_names();
    let mut out = Vec::new();
    for source in sources {
        for &(split_name, set) in splits {
            let truth = set.labels(level);
            let mut runs = Vec::with_capacity(source.runs.len());
            for (i, run) in source.runs.iter().enumerate() {
                let pred = run.predict(set)?;
                let meta = ReportMeta {
                    model: source.name.clone(),
                    task: level.to_string(),
                    split: split_name.into(),
                    seed,
                    run: (source.runs.len() > 1).then_some(i + 1),
                    runs_averaged: None,
                };
                runs.push(MetricsReport::evaluate(&truth, &pred, &classes, meta)?);
            }
            if runs.len() > 1 {
                let meta = ReportMeta {
                    model: source.name.clone(),
                    task: level.to_string(),
                    split: split_name.into(),
                    seed,
                    run: None,
                    runs_averaged: None,
                };
                let mean = MetricsReport::mean(&runs, meta)?;
                out.extend(runs);
                out.push(mean);
            } else {
                out.extend(runs);
            }
        }
    }
    Ok(out)
}
