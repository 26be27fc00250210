//! One-vs-one multi-class linear SVM.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svm::{train_binary_svm, ClassCosts, LinearModel, SolverParams, TrainInfo};
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    Balanced,
    None,
}

impl fmt::Display for ClassWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassWeight::Balanced => "balanced",
            ClassWeight::None => "none",
        })
    }
}

impl FromStr for ClassWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(ClassWeight::Balanced),
            "none" => Ok(ClassWeight::None),
            other => Err(Error::InvalidInput(format!("class weight must be `balanced` or `none`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub class_weight: ClassWeight,
    pub ngram_max: usize,
    pub top_n: Option<usize>,
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidInput(format!("C must be positive, got {}", self.c)));
        }
        if !(1..=2).contains(&self.ngram_max) {
            return Err(Error::InvalidInput(format!("ngram_max must be 1 or 2, got {}", self.ngram_max)));
        }
        if self.top_n == Some(0) {
            return Err(Error::InvalidInput("top_n must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, class_weight: ClassWeight::None, ngram_max: 1, top_n: None }
    }
}

impl fmt::Display for SvmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let top = self.top_n.map_or("all".to_string(), |n| n.to_string());
        write!(f, "ngrams=1..{} top_n={} C={} class_weight={}", self.ngram_max, top, self.c, self.class_weight)
    }
}

/// `n / (k · n_c)` for every class; errors if any declared class is absent.
pub fn balanced_weights<S: AsRef<str>>(labels: &[S], classes: &[String]) -> Result<BTreeMap<String, f64>> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("balanced weights of an empty label list".into()));
    }
    let mut counts: BTreeMap<&str, usize> = classes.iter().map(|c| (c.as_str(), 0)).collect();
    for l in labels {
        match counts.get_mut(l.as_ref()) {
            Some(c) => *c += 1,
            None => {
                return Err(Error::UnknownLabel { label: l.as_ref().to_string(), context: "class weighting".into() })
            }
        }
    }
    let n = labels.len() as f64;
    let k = classes.len() as f64;
    counts
        .into_iter()
        .map(|(c, count)| {
            if count == 0 {
                Err(Error::ClassTooSmall { class: c.to_string(), count: 0, required: 1 })
            } else {
                Ok((c.to_string(), n / (k * count as f64)))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    /// Index of the class voted for on a positive decision.
    pub first: usize,
    pub second: usize,
    pub model: LinearModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvOModel {
    pub classes: Vec<String>,
    pub dim: usize,
    pub pairs: Vec<PairModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvOTrainInfo {
    pub pairs: Vec<((usize, usize), TrainInfo)>,
}

impl OvOModel {
    /// Votes per class and the summed decision values oriented toward each class.
    pub fn scores(&self, x: &SparseVector) -> (Vec<usize>, Vec<f64>) {
        let k = self.classes.len();
        let mut votes = vec![0usize; k];
        let mut margin = vec![0.0; k];
        for p in &self.pairs {
            let d = p.model.decision(x);
            if d > 0.0 {
                votes[p.first] += 1;
            } else {
                votes[p.second] += 1;
            }
            margin[p.first] += d;
            margin[p.second] -= d;
        }
        (votes, margin)
    }

    /// Most votes wins; ties go to the larger summed decision value, then class order.
    pub fn predict_index(&self, x: &SparseVector) -> usize {
        let (votes, margin) = self.scores(x);
        let mut best = 0;
        for c in 1..votes.len() {
            if votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best]) {
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, x: &SparseVector) -> &str {
        &self.classes[self.predict_index(x)]
    }
}

/// One binary SVM per class pair, trained on that pair's examples only.
pub fn train_ovo(
    x: &[SparseVector],
    labels: &[usize],
    classes: &[String],
    dim: usize,
    c: f64,
    class_weight: ClassWeight,
    params: &SolverParams,
) -> Result<(OvOModel, OvOTrainInfo)> {
    if x.len() != labels.len() {
        return Err(Error::InvalidInput(format!("{} vectors but {} labels", x.len(), labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
        return Err(Error::InvalidInput(format!("label index {bad} outside {} classes", classes.len())));
    }
    let k = classes.len();
    let present = (0..k).filter(|c| labels.contains(c)).count();
    if present < 2 {
        return Err(Error::Degenerate(format!("need at least 2 classes present, found {present}")));
    }
    let pair_ids: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let trained: Vec<Result<(PairModel, TrainInfo)>> = pair_ids
        .par_iter()
        .map(|&(i, j)| {
            let members: Vec<usize> = (0..labels.len()).filter(|&n| labels[n] == i || labels[n] == j).collect();
            let xs: Vec<SparseVector> = members.iter().map(|&n| x[n].clone()).collect();
            let ys: Vec<i8> = members.iter().map(|&n| if labels[n] == i { 1 } else { -1 }).collect();
            let costs = match class_weight {
                ClassWeight::None => ClassCosts::UNIT,
                ClassWeight::Balanced => {
                    let pos = ys.iter().filter(|&&y| y > 0).count() as f64;
                    let neg = ys.len() as f64 - pos;
                    let n = ys.len() as f64;
                    if pos == 0.0 || neg == 0.0 {
                        ClassCosts::UNIT
                    } else {
                        ClassCosts { positive: n / (2.0 * pos), negative: n / (2.0 * neg) }
                    }
                }
            };
            let pair_params = SolverParams { seed: params.seed.wrapping_add((i * k + j) as u64), ..params.clone() };
            let (model, info) =
                train_binary_svm(&xs, &ys, dim, c, costs, (&classes[i], &classes[j]), &pair_params).map_err(|e| {
                    match e {
                        Error::Degenerate(msg) => {
                            Error::Degenerate(format!("pair {} vs {}: {msg}", classes[i], classes[j]))
                        }
                        other => other,
                    }
                })?;
            Ok((PairModel { first: i, second: j, model }, info))
        })
        .collect();
    let mut pairs = Vec::with_capacity(trained.len());
    let mut infos = Vec::with_capacity(trained.len());
    for r in trained {
        let (p, info) = r?;
        infos.push(((p.first, p.second), info));
        pairs.push(p);
    }
    Ok((OvOModel { classes: classes.to_vec(), dim, pairs }, OvOTrainInfo { pairs: infos }))
}
