//! Prediction files (`id,label` CSV) produced by this tool or by external models.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::taxonomy::Level;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub model: String,
    pub level: Level,
    /// tweet id → label at `level`
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct Row {
    id: String,
    label: String,
}

impl PredictionSet {
    pub fn new(model: impl Into<String>, level: Level) -> Self {
        PredictionSet { model: model.into(), level, labels: BTreeMap::new() }
    }

    /// Adds one prediction; fine labels are coarsened to the set's level.
    pub fn insert(&mut self, id: &str, label: &str) -> Result<()> {
        let mapped = self.level.coarsen(label).ok_or_else(|| Error::UnknownLabel {
            label: label.to_string(),
            context: format!("id `{id}`, level {}", self.level),
        })?;
        if self.labels.insert(id.to_string(), mapped.to_string()).is_some() {
            return Err(Error::DuplicateId(id.to_string()));
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels for `ids` in order, failing on the first id without a prediction.
    pub fn aligned<'a>(&'a self, ids: &[&str]) -> Result<Vec<&'a str>> {
        ids.iter()
            .map(|id| self.get(id).ok_or_else(|| Error::MissingPrediction(id.to_string())))
            .collect()
    }
}

/// Reads a CSV with header `id,label`. Unknown labels and repeated ids are errors.
pub fn load_external_predictions(path: &Path, level: Level, model: &str) -> Result<PredictionSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(file, level, model).map_err(|e| match e {
        Error::UnknownLabel { label, context } => Error::UnknownLabel {
            label,
            context: format!("{}: {context}", path.display()),
        },
        other => other,
    })
}

pub fn read_predictions<R: std::io::Read>(reader: R, level: Level, model: &str) -> Result<PredictionSet> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["id", "label"] {
        return Err(Error::InvalidInput(format!("expected header `id,label`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut set = PredictionSet::new(model, level);
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        let label = row.label.trim();
        let row_no = i + 2;
        let mapped = level.coarsen(label).ok_or_else(|| Error::UnknownLabel {
            label: label.to_string(),
            context: format!("row {row_no}, level {level}"),
        })?;
        if set.labels.insert(row.id.clone(), mapped.to_string()).is_some() {
            return Err(Error::DuplicateId(format!("{} (row {row_no})", row.id)));
        }
    }
    Ok(set)
}

/// Writes `id,label` rows in the given order.
pub fn write_predictions<'a>(path: &Path, rows: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "label"])?;
    for (id, label) in rows {
        w.write_record([id, label])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
