use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::binomial::clopper_pearson;
use crate::error::{Error, Result};

pub const CONFIDENCE: f64 = 0.95;

/// Rows are true labels, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: Vec<String>) -> Self {
        let k = classes.len();
        ConfusionMatrix { classes, counts: vec![vec![0; k]; k] }
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn column_total(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn index_of(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::InvalidInput("confusion matrices over different classes".into()));
        }
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
        Ok(())
    }

    /// Row-normalized percentages (each non-empty row sums to 100).
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        (0..self.k())
            .map(|i| {
                let t = self.row_total(i);
                self.counts[i]
                    .iter()
                    .map(|&c| if t == 0 { 0.0 } else { 100.0 * c as f64 / t as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for c in &self.classes {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&self.classes[i]);
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_normalized_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for c in &self.classes {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for (i, row) in self.row_normalized().iter().enumerate() {
            out.push_str(&self.classes[i]);
            for v in row {
                write!(out, ",{v:.2}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Counts (true, predicted) pairs over the declared classes.
pub fn confusion<S: AsRef<str>, T: AsRef<str>>(truth: &[S], pred: &[T], classes: &[String]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "{} true labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("confusion matrix of zero items".into()));
    }
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let lookup = |l: &str, what: &str| {
        index.get(l).copied().ok_or_else(|| Error::UnknownLabel {
            label: l.to_string(),
            context: format!("{what} label outside declared classes"),
        })
    };
    let mut cm = ConfusionMatrix::zeros(classes.to_vec());
    for (t, p) in truth.iter().zip(pred) {
        let i = lookup(t.as_ref(), "true")?;
        let j = lookup(p.as_ref(), "predicted")?;
        cm.counts[i][j] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub precision_ci: Option<(f64, f64)>,
    pub recall_ci: Option<(f64, f64)>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Precision, recall, F1 and their exact intervals for one class. Undefined ratios are 0.
pub fn class_metrics(cm: &ConfusionMatrix, class: usize) -> ClassMetrics {
    let tp = cm.counts[class][class];
    let predicted = cm.column_total(class);
    let actual = cm.row_total(class);
    let precision = ratio(tp, predicted);
    let recall = ratio(tp, actual);
    let ci = |n: u64| (n > 0).then(|| clopper_pearson(tp, n, CONFIDENCE).expect("tp <= n"));
    ClassMetrics {
        class: cm.classes[class].clone(),
        precision,
        recall,
        f1: f1_score(precision, recall),
        support: actual,
        precision_ci: ci(predicted),
        recall_ci: ci(actual),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Unweighted means of the per-class metrics, plus accuracy.
pub fn macro_metrics(cm: &ConfusionMatrix) -> MacroMetrics {
    let per: Vec<ClassMetrics> = (0..cm.k()).map(|i| class_metrics(cm, i)).collect();
    macro_from(&per, ratio(cm.trace(), cm.total()))
}

fn macro_from(per: &[ClassMetrics], accuracy: f64) -> MacroMetrics {
    let k = per.len().max(1) as f64;
    MacroMetrics {
        precision: per.iter().map(|m| m.precision).sum::<f64>() / k,
        recall: per.iter().map(|m| m.recall).sum::<f64>() / k,
        f1: per.iter().map(|m| m.f1).sum::<f64>() / k,
        accuracy,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub model: String,
    pub task: String,
    pub split: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<usize>,
    /// Number of runs averaged into this report (mean reports only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs_averaged: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub meta: ReportMeta,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub accuracy_ci: Option<(f64, f64)>,
}

impl MetricsReport {
    pub fn from_confusion(cm: ConfusionMatrix, meta: ReportMeta) -> Self {
        let per_class: Vec<ClassMetrics> = (0..cm.k()).map(|i| class_metrics(&cm, i)).collect();
        let total = cm.total();
        let m = macro_from(&per_class, ratio(cm.trace(), total));
        let accuracy_ci = (total > 0).then(|| clopper_pearson(cm.trace(), total, CONFIDENCE).expect("trace <= total"));
        MetricsReport {
            meta,
            confusion: cm,
            per_class,
            macro_precision: m.precision,
            macro_recall: m.recall,
            macro_f1: m.f1,
            accuracy: m.accuracy,
            accuracy_ci,
        }
    }

    pub fn evaluate<S: AsRef<str>, T: AsRef<str>>(
        truth: &[S],
        pred: &[T],
        classes: &[String],
        meta: ReportMeta,
    ) -> Result<Self> {
        Ok(Self::from_confusion(confusion(truth, pred, classes)?, meta))
    }

    pub fn macros(&self) -> MacroMetrics {
        MacroMetrics {
            precision: self.macro_precision,
            recall: self.macro_recall,
            f1: self.macro_f1,
            accuracy: self.accuracy,
        }
    }

    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|m| m.class == name)
    }

    /// Per-class recall keyed by class name, for prevalence adjustment.
    pub fn recalls(&self) -> HashMap<String, f64> {
        self.per_class.iter().map(|m| (m.class.clone(), m.recall)).collect()
    }

    /// Averages metrics over runs; the confusion matrix is the sum over runs.
    pub fn mean(reports: &[MetricsReport], meta: ReportMeta) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::InvalidInput("mean of zero reports".into()))?;
        let mut cm = ConfusionMatrix::zeros(first.confusion.classes.clone());
        for r in reports {
            cm.add(&r.confusion)?;
        }
        let n = reports.len() as f64;
        let avg = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let per_class = (0..first.per_class.len())
            .map(|i| {
                let field = |g: &dyn Fn(&ClassMetrics) -> f64| reports.iter().map(|r| g(&r.per_class[i])).sum::<f64>() / n;
                ClassMetrics {
                    class: first.per_class[i].class.clone(),
                    precision: field(&|m| m.precision),
                    recall: field(&|m| m.recall),
                    f1: field(&|m| m.f1),
                    support: first.per_class[i].support,
                    precision_ci: None,
                    recall_ci: None,
                }
            })
            .collect();
        Ok(MetricsReport {
            meta: ReportMeta { runs_averaged: Some(reports.len()), ..meta },
            confusion: cm,
            per_class,
            macro_precision: avg(&|r| r.macro_precision),
            macro_recall: avg(&|r| r.macro_recall),
            macro_f1: avg(&|r| r.macro_f1),
            accuracy: avg(&|r| r.accuracy),
            accuracy_ci: None,
        })
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Half-up rounding to two decimals, for display only.
pub fn round2(x: f64) -> f64 {
    ((x * 100.0) + 0.5 + 1e-9).floor() / 100.0
}

pub fn fmt2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

/// Aligned macro table: one row per report, `Pr Re F1 Acc` columns.
pub fn render_macro_table(reports: &[MetricsReport]) -> String {
    let width = reports.iter().map(|r| r.meta.model.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}  {:<10}  {:>5} {:>5} {:>5} {:>5}\n", "Model", "Split", "Pr", "Re", "F1", "Acc");
    for r in reports {
        let split = match (r.meta.run, r.meta.runs_averaged) {
            (Some(run), _) => format!("{} #{run}", r.meta.split),
            (_, Some(n)) => format!("{} x{n}", r.meta.split),
            _ => r.meta.split.clone(),
        };
        writeln!(
            out,
            "{:<width$}  {:<10}  {:>5} {:>5} {:>5} {:>5}",
            r.meta.model,
            split,
            fmt2(r.macro_precision),
            fmt2(r.macro_recall),
            fmt2(r.macro_f1),
            fmt2(r.accuracy)
        )
        .unwrap();
    }
    out
}

/// Per-class table with intervals.
pub fn render_class_table(report: &MetricsReport) -> String {
    let width = report.per_class.iter().map(|m| m.class.len()).max().unwrap_or(5).max(5);
    let ci = |c: Option<(f64, f64)>| match c {
        Some((lo, hi)) => format!("{}-{}", fmt2(lo), fmt2(hi)),
        None => "n/a".into(),
    };
    let mut out = format!(
        "{:<width$}  {:>5} {:>11}  {:>5} {:>11}  {:>5}  {:>7}\n",
        "Class", "Pr", "95% CI", "Re", "95% CI", "F1", "Support"
    );
    for m in &report.per_class {
        writeln!(
            out,
            "{:<width$}  {:>5} {:>11}  {:>5} {:>11}  {:>5}  {:>7}",
            m.class,
            fmt2(m.precision),
            ci(m.precision_ci),
            fmt2(m.recall),
            ci(m.recall_ci),
            fmt2(m.f1),
            m.support
        )
        .unwrap();
    }
    out
}
