//! Labeling rounds and their seeded sampling strategies.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{matches_keywords, FilterConfig, Provenance, Tweet};
use crate::error::{Error, Result};
use crate::models::PredictionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    KeywordSeeded,
    ModelSeeded,
    Random,
}

impl Strategy {
    pub fn provenance(self) -> Provenance {
        match self {
            Strategy::KeywordSeeded => Provenance::KeywordSeeded,
            Strategy::ModelSeeded => Provenance::ModelSeeded,
            Strategy::Random => Provenance::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    /// Total number of tweets (random rounds).
    Total(usize),
    /// The same count for every available category.
    EachCategory(usize),
    PerCategory(BTreeMap<String, usize>),
}

impl Targets {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Targets::Total(n) | Targets::EachCategory(n) => *n > 0,
            Targets::PerCategory(m) => !m.is_empty() && m.values().all(|n| *n > 0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation { field: "targets", message: "target counts must be positive".into() })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSpec {
    pub strategy: Strategy,
    pub targets: Targets,
    pub coders: Vec<String>,
    #[serde(default)]
    pub adjudicator: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Name of a loaded prediction set; required for model-seeded rounds.
    #[serde(default)]
    pub predictions: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundStatus {
    Open,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub id: u64,
    pub spec: RoundSpec,
    pub tweet_ids: Vec<String>,
    pub status: RoundStatus,
    /// Shortfalls against the targets, if any.
    pub warnings: Vec<String>,
    pub created_at: DateTime<Utc>,
}

impl Round {
    pub fn is_coder(&self, coder: &str) -> bool {
        self.spec.coders.iter().any(|c| c == coder)
    }

    pub fn is_adjudicator(&self, coder: &str) -> bool {
        self.spec.adjudicator.as_deref() == Some(coder)
    }

    pub fn contains(&self, tweet_id: &str) -> bool {
        self.tweet_ids.iter().any(|t| t == tweet_id)
    }
}

/// Per-category keyword lists used to seed rounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryKeywords {
    pub categories: BTreeMap<String, FilterConfig>,
}

impl CategoryKeywords {
    /// Lines of `category<TAB>phrase`; `#` comments and blank lines ignored.
    pub fn parse(content: &str) -> Result<Self> {
        let mut phrases: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, phrase) = line
                .split_once('\t')
                .ok_or_else(|| Error::InvalidInput(format!("category keyword line {} lacks a tab", i + 1)))?;
            phrases.entry(cat.trim().to_string()).or_default().push(phrase.trim().to_string());
        }
        let categories = phrases
            .into_iter()
            .map(|(c, p)| Ok((c, FilterConfig::new(&p, &[] as &[&str])?)))
            .collect::<Result<_>>()?;
        Ok(CategoryKeywords { categories })
    }

    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/category_keywords.tsv")).expect("builtin category keywords are valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub struct SamplingContext<'a> {
    pub pool: &'a [Tweet],
    /// Tweets already placed in earlier rounds.
    pub used: &'a HashSet<String>,
    pub keywords: &'a CategoryKeywords,
    pub predictions: Option<&'a PredictionSet>,
}

fn category_targets(targets: &Targets, available: &[String]) -> Result<Vec<(String, usize)>> {
    match targets {
        Targets::EachCategory(n) => Ok(available.iter().map(|c| (c.clone(), *n)).collect()),
        Targets::PerCategory(m) => Ok(m.iter().map(|(c, n)| (c.clone(), *n)).collect()),
        Targets::Total(_) => {
            Err(Error::Validation { field: "targets", message: "seeded rounds need per-category targets".into() })
        }
    }
}

struct Draw<'a> {
    rng: ChaCha8Rng,
    chosen: Vec<String>,
    taken: HashSet<&'a str>,
    warnings: Vec<String>,
}

impl<'a> Draw<'a> {
    /// Shuffles the not-yet-taken part of `group` and keeps up to `want`.
    fn take(&mut self, label: &str, mut group: Vec<&'a Tweet>, want: usize) {
        group.retain(|t| !self.taken.contains(t.id.as_str()));
        group.shuffle(&mut self.rng);
        let got = group.len().min(want);
        for t in &group[..got] {
            self.taken.insert(t.id.as_str());
            self.chosen.push(t.id.clone());
        }
        if got < want {
            let msg = format!("{label}: wanted {want}, pool had {got}");
            log::warn!("partial round, {msg}");
            self.warnings.push(msg);
        }
    }
}

/// Draws tweet ids for a round. Returns the ids and any shortfall warnings.
pub fn sample_round(spec: &RoundSpec, ctx: &SamplingContext) -> Result<(Vec<String>, Vec<String>)> {
    spec.targets.validate()?;
    if spec.coders.is_empty() || spec.coders.iter().any(|c| c.trim().is_empty()) {
        return Err(Error::Validation { field: "coders", message: "a round needs at least one named coder".into() });
    }
    let mut unique = HashSet::new();
    if !spec.coders.iter().all(|c| unique.insert(c)) {
        return Err(Error::Validation { field: "coders", message: "coder names must be distinct".into() });
    }
    if let Some(a) = &spec.adjudicator {
        if spec.coders.contains(a) {
            return Err(Error::Validation { field: "adjudicator", message: "the adjudicator cannot also be a coder".into() });
        }
    }
    let candidates: Vec<&Tweet> = ctx.pool.iter().filter(|t| !ctx.used.contains(&t.id)).collect();
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no unsampled tweets left in the pool".into()));
    }
    let mut draw = Draw { rng: ChaCha8Rng::seed_from_u64(spec.seed), chosen: Vec::new(), taken: HashSet::new(), warnings: Vec::new() };

    match spec.strategy {
        Strategy::Random => {
            let Targets::Total(n) = spec.targets else {
                return Err(Error::Validation { field: "targets", message: "random rounds take a total count".into() });
            };
            draw.take("total", candidates, n);
        }
        Strategy::KeywordSeeded => {
            let available: Vec<String> = ctx.keywords.categories.keys().cloned().collect();
            for (cat, want) in category_targets(&spec.targets, &available)? {
                let config = ctx.keywords.categories.get(&cat).ok_or_else(|| Error::Validation {
                    field: "targets",
                    message: format!("no keyword list for category {cat}"),
                })?;
                let group = candidates.iter().copied().filter(|t| matches_keywords(&t.text, config)).collect();
                draw.take(&cat, group, want);
            }
        }
        Strategy::ModelSeeded => {
            let preds = ctx.predictions.ok_or_else(|| Error::Validation {
                field: "predictions",
                message: "model-seeded rounds need a prediction set".into(),
            })?;
            let mut available: Vec<String> = preds.labels.values().cloned().collect();
            available.sort();
            available.dedup();
            for (label, want) in category_targets(&spec.targets, &available)? {
                let group = candidates.iter().copied().filter(|t| preds.get(&t.id) == Some(label.as_str())).collect();
                draw.take(&label, group, want);
            }
        }
    }
    Ok((draw.chosen, draw.warnings))
}
