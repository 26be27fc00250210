//! Annotation workflow: rounds, task queues, submissions, disagreement review, agreement and export.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::rounds::{sample_round, CategoryKeywords, Round, RoundSpec, RoundStatus, SamplingContext};
use super::rules::{derive, DimensionAnnotation};
use super::store::{Event, LabelRecord, LabelStore};
use super::taxonomy::{FineCategory, Level};
use crate::corpus::{LabeledEntry, LabeledSet, Tweet};
use crate::error::{Error, Result};
use crate::eval::{cohens_kappa, KappaResult};
use crate::models::PredictionSet;
use crate::preprocess::normalize;

pub struct Annotator {
    pool: Vec<Tweet>,
    index: HashMap<String, usize>,
    pub keywords: CategoryKeywords,
    pub predictions: BTreeMap<String, PredictionSet>,
    pub store: LabelStore,
    clock: Box<dyn Fn() -> DateTime<Utc> + Send + Sync>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskView {
    pub round: u64,
    pub tweet_id: String,
    pub text: String,
    pub normalized: String,
    pub done: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub coder: String,
    pub tweet_id: String,
    #[serde(default)]
    pub dims: Option<DimensionAnnotation>,
    /// Direct category, accepted from the round's adjudicator only.
    #[serde(default)]
    pub category: Option<FineCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub record: LabelRecord,
    pub adjudication_suggested: Option<String>,
    pub history: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub tweet_id: String,
    pub text: String,
    /// coder → label at the requested level
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementReport {
    pub level: Level,
    pub items: Vec<Disagreement>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Latest,
    Adjudicated,
}

impl std::str::FromStr for Resolution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latest" => Ok(Resolution::Latest),
            "adjudicated" => Ok(Resolution::Adjudicated),
            _ => Err(Error::InvalidInput(format!("unknown resolution `{s}` (expected latest or adjudicated)"))),
        }
    }
}

impl Annotator {
    pub fn new(pool: Vec<Tweet>, keywords: CategoryKeywords, store: LabelStore) -> Result<Self> {
        let mut index = HashMap::with_capacity(pool.len());
        for (i, t) in pool.iter().enumerate() {
            if index.insert(t.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(t.id.clone()));
            }
        }
        Ok(Annotator { pool, index, keywords, predictions: BTreeMap::new(), store, clock: Box::new(Utc::now) })
    }

    pub fn with_clock(mut self, clock: impl Fn() -> DateTime<Utc> + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn add_predictions(&mut self, name: impl Into<String>, set: PredictionSet) {
        self.predictions.insert(name.into(), set);
    }

    pub fn tweet(&self, id: &str) -> Option<&Tweet> {
        self.index.get(id).map(|&i| &self.pool[i])
    }

    pub fn rounds(&self) -> &[Round] {
        &self.store.rounds
    }

    pub fn create_round(&mut self, spec: RoundSpec) -> Result<Round> {
        let predictions = match &spec.predictions {
            Some(name) => Some(
                self.predictions
                    .get(name)
                    .ok_or_else(|| Error::NotFound(format!("prediction set {name}")))?,
            ),
            None => None,
        };
        let used: HashSet<String> = self.store.rounds.iter().flat_map(|r| r.tweet_ids.iter().cloned()).collect();
        let ctx = SamplingContext { pool: &self.pool, used: &used, keywords: &self.keywords, predictions };
        let (tweet_ids, warnings) = sample_round(&spec, &ctx)?;
        if tweet_ids.is_empty() {
            return Err(Error::InvalidInput(format!("no tweets matched the round targets: {}", warnings.join("; "))));
        }
        let round = Round {
            id: self.store.next_round_id(),
            spec,
            tweet_ids,
            status: if warnings.is_empty() { RoundStatus::Open } else { RoundStatus::Partial },
            warnings,
            created_at: (self.clock)(),
        };
        self.store.append(Event::RoundCreated(round.clone()))?;
        Ok(round)
    }

    fn check_member(round: &Round, coder: &str) -> Result<()> {
        if round.is_coder(coder) || round.is_adjudicator(coder) {
            Ok(())
        } else {
            Err(Error::NotFound(format!("coder {coder} in round {}", round.id)))
        }
    }

    /// The first round tweet this coder has not labeled yet, in round order.
    pub fn next_task(&self, round_id: u64, coder: &str) -> Result<Option<TaskView>> {
        let round = self.store.round(round_id)?;
        Self::check_member(round, coder)?;
        let done: HashSet<&str> = self
            .store
            .records
            .iter()
            .filter(|r| r.round == round_id && r.coder == coder)
            .map(|r| r.tweet_id.as_str())
            .collect();
        let next = round.tweet_ids.iter().find(|id| !done.contains(id.as_str()));
        Ok(next.map(|id| {
            let tweet = self.tweet(id).expect("round tweets come from the pool");
            TaskView {
                round: round_id,
                tweet_id: id.clone(),
                text: tweet.text.clone(),
                normalized: normalize(&tweet.text),
                done: done.len(),
                total: round.tweet_ids.len(),
            }
        }))
    }

    pub fn submit_label(&mut self, round_id: u64, sub: Submission) -> Result<SubmitOutcome> {
        let round = self.store.round(round_id)?;
        Self::check_member(round, &sub.coder)?;
        if !round.contains(&sub.tweet_id) {
            return Err(Error::NotFound(format!("tweet {} in round {round_id}", sub.tweet_id)));
        }
        let (category, is_override, adjudication_suggested) = match (&sub.dims, sub.category) {
            (Some(dims), direct) => {
                let d = derive(dims)?;
                if let Some(c) = direct {
                    if c != d.category {
                        return Err(Error::Validation {
                            field: "category",
                            message: format!("dimensions derive {} but {} was given", d.category, c),
                        });
                    }
                }
                (d.category, false, d.adjudication_suggested)
            }
            (None, Some(c)) => {
                if !round.is_adjudicator(&sub.coder) {
                    return Err(Error::Validation {
                        field: "category",
                        message: "only the round adjudicator may set a category without dimensions".into(),
                    });
                }
                (c, true, None)
            }
            (None, None) => {
                return Err(Error::Validation { field: "dims", message: "dimensions are required".into() });
            }
        };
        let record = LabelRecord {
            seq: self.store.next_seq(),
            tweet_id: sub.tweet_id,
            coder: sub.coder,
            round: round_id,
            dims: sub.dims,
            category,
            is_override,
            timestamp: (self.clock)(),
        };
        self.store.append(Event::LabelSubmitted(record.clone()))?;
        let history = self
            .store
            .records
            .iter()
            .filter(|r| r.round == round_id && r.tweet_id == record.tweet_id && r.coder == record.coder)
            .count();
        Ok(SubmitOutcome { record, adjudication_suggested, history })
    }

    /// Current labels of the round's coders (adjudicator excluded), by tweet then coder.
    fn coder_labels(&self, round: &Round) -> BTreeMap<String, BTreeMap<String, FineCategory>> {
        let mut out: BTreeMap<String, BTreeMap<String, FineCategory>> = BTreeMap::new();
        for r in self.store.current(round.id) {
            if round.is_coder(&r.coder) {
                out.entry(r.tweet_id.clone()).or_default().insert(r.coder.clone(), r.category);
            }
        }
        out
    }

    fn adjudicated(&self, round: &Round) -> HashMap<String, FineCategory> {
        self.store
            .current(round.id)
            .into_iter()
            .filter(|r| round.is_adjudicator(&r.coder))
            .map(|r| (r.tweet_id.clone(), r.category))
            .collect()
    }

    /// Tweets whose coders disagree at `level`. Adjudicated tweets are left out unless asked for.
    pub fn disagreements(&self, round_id: u64, level: Level, include_resolved: bool) -> Result<DisagreementReport> {
        let round = self.store.round(round_id)?;
        let adjudicated = self.adjudicated(round);
        let mut warnings = Vec::new();
        let mut items = Vec::new();
        let mut overlap = 0;
        for (tweet_id, labels) in self.coder_labels(round) {
            if labels.len() < 2 {
                continue;
            }
            overlap += 1;
            let mapped: BTreeMap<String, String> =
                labels.into_iter().map(|(c, l)| (c, l.at_level(level).to_string())).collect();
            let first = mapped.values().next().expect("two labels");
            if mapped.values().all(|l| l == first) || (!include_resolved && adjudicated.contains_key(&tweet_id)) {
                continue;
            }
            let text = self.tweet(&tweet_id).map(|t| t.text.clone()).unwrap_or_default();
            items.push(Disagreement { tweet_id, text, labels: mapped });
        }
        if overlap == 0 {
            let msg = format!("round {round_id} has no tweet labeled by two coders");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        Ok(DisagreementReport { level, items, warnings })
    }

    /// Kappa between two coders on their jointly labeled tweets at `level`.
    /// With `exclude`, tweets that either coder put in that class are dropped.
    pub fn live_kappa(
        &self,
        round_id: u64,
        level: Level,
        exclude: Option<&str>,
        coders: Option<(&str, &str)>,
    ) -> Result<KappaResult> {
        let round = self.store.round(round_id)?;
        let (a, b) = match coders {
            Some(pair) => pair,
            None if round.spec.coders.len() >= 2 => (round.spec.coders[0].as_str(), round.spec.coders[1].as_str()),
            None => return Err(Error::InvalidInput(format!("round {round_id} has fewer than two coders"))),
        };
        if let Some(x) = exclude {
            if level.parse_label(x).is_none() {
                return Err(Error::UnknownLabel { label: x.into(), context: format!("{level}-class kappa exclusion") });
            }
        }
        let (mut la, mut lb) = (Vec::new(), Vec::new());
        for labels in self.coder_labels(round).values() {
            if let (Some(x), Some(y)) = (labels.get(a), labels.get(b)) {
                let (x, y) = (x.at_level(level), y.at_level(level));
                if exclude.is_some_and(|e| e == x || e == y) {
                    continue;
                }
                la.push(x);
                lb.push(y);
            }
        }
        if la.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "coders {a} and {b} share {} labeled tweets in round {round_id}; kappa needs at least 2",
                la.len()
            )));
        }
        cohens_kappa(&la, &lb)
    }

    /// One label per tweet across `rounds` (all rounds when empty).
    pub fn export_labeled(&self, rounds: &[u64], resolution: Resolution) -> Result<LabeledSet> {
        let selected: Vec<&Round> = if rounds.is_empty() {
            self.store.rounds.iter().collect()
        } else {
            rounds.iter().map(|id| self.store.round(*id)).collect::<Result<_>>()?
        };
        let mut chosen: BTreeMap<String, (u64, FineCategory, &Round)> = BTreeMap::new();
        let mut unresolved = Vec::new();
        for round in &selected {
            let adjudicated = self.adjudicated(round);
            let labels = self.coder_labels(round);
            let current = self.store.current(round.id);
            for tweet_id in &round.tweet_ids {
                let picked = match resolution {
                    Resolution::Latest => current.iter().filter(|r| &r.tweet_id == tweet_id).max_by_key(|r| r.seq).map(|r| (r.seq, r.category)),
                    Resolution::Adjudicated => {
                        let seq = current.iter().filter(|r| &r.tweet_id == tweet_id).map(|r| r.seq).max().unwrap_or(0);
                        match (adjudicated.get(tweet_id), labels.get(tweet_id)) {
                            (Some(c), _) => Some((seq, *c)),
                            (None, Some(by_coder)) => {
                                let first = *by_coder.values().next().expect("non-empty");
                                if by_coder.values().all(|c| *c == first) {
                                    Some((seq, first))
                                } else {
                                    unresolved.push(tweet_id.clone());
                                    None
                                }
                            }
                            (None, None) => None,
                        }
                    }
                };
                if let Some((seq, category)) = picked {
                    let keep = chosen.get(tweet_id).is_none_or(|(s, _, _)| seq > *s);
                    if keep {
                        chosen.insert(tweet_id.clone(), (seq, category, round));
                    }
                }
            }
        }
        if !unresolved.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} disagreements lack an adjudicator label: {}",
                unresolved.len(),
                unresolved.join(", ")
            )));
        }
        let entries = chosen
            .into_iter()
            .map(|(id, (_, label, round))| LabeledEntry {
                tweet: self.tweet(&id).expect("round tweets come from the pool").clone(),
                label,
                provenance: round.spec.strategy.provenance(),
            })
            .collect();
        LabeledSet::new(entries)
    }

    /// Current records as CSV: `id,coder,category,round,timestamp` followed by the dimension columns.
    pub fn export_csv(&self) -> String {
        let mut out = String::from(
            "id,coder,category,round,timestamp,message_type,perspective,person,serious,focus_on_bereaved,mentions_case,override\n",
        );
        for round in &self.store.rounds {
            for r in self.store.current(round.id) {
                write!(out, "{},{},{},{},{}", csv_field(&r.tweet_id), csv_field(&r.coder), r.category, r.round, r.timestamp.to_rfc3339())
                    .unwrap();
                match &r.dims {
                    Some(d) => write!(
                        out,
                        ",{},{},{},{},{},{}",
                        d.message_type.as_str(),
                        d.perspective.as_str(),
                        d.person.as_str(),
                        d.serious,
                        d.focus_on_bereaved,
                        d.mentions_case
                    )
                    .unwrap(),
                    None => out.push_str(",,,,,,"),
                }
                writeln!(out, ",{}", r.is_override).unwrap();
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::rounds::{Strategy, Targets};
    use crate::annotate::rules::{MessageType, Perspective, Person};

    pub(crate) fn pool(n: usize) -> Vec<Tweet> {
        (0..n)
            .map(|i| Tweet {
                id: format!("t{i}"),
                text: format!("Post {i} https://x.y/{i}"),
                timestamp: "2019-05-01T12:00:00Z".parse().unwrap(),
                is_retweet_flagged: false,
            })
            .collect()
    }

    fn annotator(n: usize) -> Annotator {
        Annotator::new(pool(n), CategoryKeywords::builtin(), LabelStore::in_memory())
            .unwrap()
            .with_clock(|| "2021-02-03T04:05:06Z".parse().unwrap())
    }

    fn random_round(a: &mut Annotator, n: usize) -> Round {
        a.create_round(RoundSpec {
            strategy: Strategy::Random,
            targets: Targets::Total(n),
            coders: vec!["ana".into(), "ben".into()],
            adjudicator: Some("cy".into()),
            seed: 1,
            predictions: None,
        })
        .unwrap()
    }

    fn personal(p: Perspective) -> DimensionAnnotation {
        DimensionAnnotation::new(MessageType::PersonalExperience, p, Person::First)
    }

    fn submit(a: &mut Annotator, round: u64, coder: &str, tweet: &str, dims: DimensionAnnotation) -> SubmitOutcome {
        a.submit_label(round, Submission { coder: coder.into(), tweet_id: tweet.into(), dims: Some(dims), category: None }).unwrap()
    }

    #[test]
    fn next_task_walks_round_per_coder() {
        let mut a = annotator(10);
        let r = random_round(&mut a, 3);
        let mut seen = Vec::new();
        while let Some(t) = a.next_task(r.id, "ana").unwrap() {
            assert_eq!(t.done, seen.len());
            assert!(t.normalized.contains("http"));
            seen.push(t.tweet_id.clone());
            submit(&mut a, r.id, "ana", &t.tweet_id, personal(Perspective::SolutionCoping));
        }
        assert_eq!(seen.len(), 3);
        assert_eq!(seen.iter().collect::<HashSet<_>>().len(), 3);
        // double coding: the second coder still sees everything
        assert_eq!(a.next_task(r.id, "ben").unwrap().unwrap().tweet_id, seen[0]);
        assert!(a.next_task(r.id, "zed").is_err());
        assert!(a.next_task(99, "ana").is_err());
    }

    #[test]
    fn resubmission_keeps_history() {
        let mut a = annotator(5);
        let r = random_round(&mut a, 2);
        let t = &r.tweet_ids[0];
        let first = submit(&mut a, r.id, "ana", t, personal(Perspective::ProblemSuffering));
        assert_eq!(first.record.category, FineCategory::SuicidalIdeationAttempts);
        let second = submit(&mut a, r.id, "ana", t, personal(Perspective::SolutionCoping));
        assert_eq!(second.history, 2);
        assert_eq!(a.store.records.len(), 2);
        let current = a.store.current(r.id);
        assert_eq!(current.len(), 1);
        assert_eq!(current[0].category, FineCategory::Coping);
    }

    #[test]
    fn invalid_submissions() {
        let mut a = annotator(5);
        let r = random_round(&mut a, 2);
        let t = r.tweet_ids[0].clone();
        let bad = DimensionAnnotation { serious: false, ..DimensionAnnotation::new(MessageType::CallForAction, Perspective::SolutionCoping, Person::NotApplicable) };
        let e = a.submit_label(r.id, Submission { coder: "ana".into(), tweet_id: t.clone(), dims: Some(bad), category: None }).unwrap_err();
        assert!(matches!(e, Error::Validation { field: "serious", .. }));
        let e = a.submit_label(r.id, Submission { coder: "ana".into(), tweet_id: t.clone(), dims: None, category: Some(FineCategory::Coping) });
        assert!(e.is_err());
        let outside = a.submit_label(r.id, Submission { coder: "ana".into(), tweet_id: "nope".into(), dims: Some(personal(Perspective::Both)), category: None });
        assert!(matches!(outside, Err(Error::NotFound(_))));
        assert!(a.store.records.is_empty());
    }

    #[test]
    fn disagreement_levels_and_adjudication() {
        let mut a = annotator(5);
        let r = random_round(&mut a, 2);
        let (t0, t1) = (r.tweet_ids[0].clone(), r.tweet_ids[1].clone());
        let report = a.disagreements(r.id, Level::Fine, false).unwrap();
        assert!(report.items.is_empty());
        assert_eq!(report.warnings.len(), 1);

        submit(&mut a, r.id, "ana", &t0, personal(Perspective::SolutionCoping));
        submit(&mut a, r.id, "ben", &t0, personal(Perspective::ProblemSuffering));
        submit(&mut a, r.id, "ana", &t1, personal(Perspective::SolutionCoping));
        submit(&mut a, r.id, "ben", &t1, personal(Perspective::SolutionCoping));
        assert_eq!(a.disagreements(r.id, Level::Fine, false).unwrap().items.len(), 1);
        assert_eq!(a.disagreements(r.id, Level::Task1, false).unwrap().items.len(), 1);
        assert!(a.disagreements(r.id, Level::Task2, false).unwrap().items.is_empty());

        assert!(a.export_labeled(&[r.id], Resolution::Adjudicated).is_err());
        let latest = a.export_labeled(&[r.id], Resolution::Latest).unwrap();
        assert_eq!(latest.len(), 2);

        a.submit_label(r.id, Submission { coder: "cy".into(), tweet_id: t0.clone(), dims: None, category: Some(FineCategory::Coping) }).unwrap();
        assert!(a.disagreements(r.id, Level::Fine, false).unwrap().items.is_empty());
        assert_eq!(a.disagreements(r.id, Level::Fine, true).unwrap().items.len(), 1);
        let set = a.export_labeled(&[r.id], Resolution::Adjudicated).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.entries.iter().all(|e| e.label == FineCategory::Coping));
    }

    #[test]
    fn kappa_and_exclusion() {
        let mut a = annotator(60);
        let r = random_round(&mut a, 50);
        for t in r.tweet_ids.clone() {
            submit(&mut a, r.id, "ana", &t, personal(Perspective::SolutionCoping));
            submit(&mut a, r.id, "ben", &t, personal(Perspective::SolutionCoping));
        }
        assert_eq!(a.live_kappa(r.id, Level::Task1, None, None).unwrap().kappa, 1.0);
        assert!(a.live_kappa(r.id, Level::Task1, Some("coping"), None).is_err());
        assert!(a.live_kappa(r.id, Level::Task1, Some("bogus"), None).is_err());
    }

    #[test]
    fn export_csv_rows() {
        let mut a = annotator(5);
        let r = random_round(&mut a, 1);
        submit(&mut a, r.id, "ana", &r.tweet_ids[0], personal(Perspective::Both));
        let csv = a.export_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("id,coder,category,round,timestamp"));
        assert!(lines[1].contains(",ana,coping,1,2021-02-03T04:05:06+00:00,personal_experience,both,first,true,false,false,false"));
    }

    #[test]
    fn rounds_do_not_reuse_tweets() {
        let mut a = annotator(6);
        let r1 = random_round(&mut a, 4);
        let r2 = random_round(&mut a, 4);
        assert_eq!(r2.tweet_ids.len(), 2);
        assert_eq!(r2.status, RoundStatus::Partial);
        assert!(r2.tweet_ids.iter().all(|t| !r1.tweet_ids.contains(t)));
        assert!(random_round_err(&mut a));
    }

    fn random_round_err(a: &mut Annotator) -> bool {
        a.create_round(RoundSpec {
            strategy: Strategy::Random,
            targets: Targets::Total(1),
            coders: vec!["ana".into()],
            adjudicator: None,
            seed: 1,
            predictions: None,
        })
        .is_err()
    }
}
