use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predicts the most frequent training label for every input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub classes: Vec<String>,
    pub label: String,
}

impl MajorityModel {
    pub fn predict(&self) -> &str {
        &self.label
    }
}

/// Ties go to the class listed first in `classes`.
pub fn train_majority<S: AsRef<str>>(labels: &[S], classes: &[String]) -> Result<MajorityModel> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("majority model needs at least one label".into()));
    }
    let mut counts = vec![0usize; classes.len()];
    for l in labels {
        let l = l.as_ref();
        let i = classes.iter().position(|c| c == l).ok_or_else(|| Error::UnknownLabel {
            label: l.to_string(),
            context: "majority training label".into(),
        })?;
        counts[i] += 1;
    }
    let best = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("non-empty class list");
    Ok(MajorityModel { classes: classes.to_vec(), label: classes[best].clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cls(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn examples() {
        let c = cls(&["A", "B"]);
        assert_eq!(train_majority(&["A", "A", "B"], &c).unwrap().predict(), "A");
        assert_eq!(train_majority(&["B", "A"], &c).unwrap().predict(), "A");
        assert_eq!(train_majority(&["B", "B", "A"], &c).unwrap().predict(), "B");
        assert!(train_majority::<&str>(&[], &c).is_err());
        assert!(train_majority(&["C"], &c).is_err());
    }
}
