//! Posting ingestion, keyword/exclusion/retweet/duplicate filtering and stratified splits.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotate::taxonomy::{FineCategory, Level};
use crate::error::{Error, Result};
use crate::preprocess::{normalize, tokenize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    #[serde(rename = "created_at")]
    pub timestamp: DateTime<Utc>,
    #[serde(rename = "retweet", default, skip_serializing_if = "std::ops::Not::not")]
    pub is_retweet_flagged: bool,
}

impl Tweet {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TweetSet {
    pub tweets: Vec<Tweet>,
}

impl TweetSet {
    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn retain(&self, mut keep: impl FnMut(&Tweet) -> bool) -> TweetSet {
        TweetSet {
            tweets: self.tweets.iter().filter(|t| keep(t)).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub set: TweetSet,
    pub skipped: usize,
}

fn parse_record<T: for<'de> Deserialize<'de>>(line: &str) -> std::result::Result<T, String> {
    serde_json::from_str(line).map_err(|e| e.to_string())
}

fn check_tweet(t: &Tweet) -> std::result::Result<(), String> {
    if t.id.is_empty() {
        return Err("empty id".into());
    }
    if t.text.is_empty() {
        return Err("empty text".into());
    }
    Ok(())
}

/// Reads JSON-lines postings. Malformed lines and repeated ids are skipped with a warning.
pub fn load_tweets(path: &Path) -> Result<LoadReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = parse_record::<Tweet>(&line).and_then(|t| check_tweet(&t).map(|_| t));
        match parsed {
            Ok(t) if seen.insert(t.id.clone()) => report.set.tweets.push(t),
            Ok(t) => {
                log::warn!("{}:{}: duplicate id `{}` skipped", path.display(), lineno + 1, t.id);
                report.skipped += 1;
            }
            Err(msg) => {
                log::warn!("{}:{}: skipping malformed record: {msg}", path.display(), lineno + 1);
                report.skipped += 1;
            }
        }
    }
    Ok(report)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_tweets(path: &Path, set: &TweetSet) -> Result<()> {
    write_jsonl(path, &set.tweets)
}

/// A keyword phrase or exclusion pattern; `Prefix` patterns match the start of a token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Literal(String),
    Prefix(String),
}

impl Pattern {
    pub fn parse(raw: &str) -> Result<Pattern> {
        let term = collapse_whitespace(&raw.to_lowercase());
        if term.is_empty() || term == "*" {
            return Err(Error::InvalidInput(format!("empty pattern `{raw}`")));
        }
        let body = term.strip_suffix('*');
        let core = body.unwrap_or(&term);
        if core.contains('*') {
            return Err(Error::InvalidInput(format!(
                "wildcard `*` allowed only as final character: `{raw}`"
            )));
        }
        Ok(match body {
            Some(prefix) => Pattern::Prefix(prefix.to_string()),
            None => Pattern::Literal(term),
        })
    }

    fn matches(&self, haystack: &str, tokens: &[String]) -> bool {
        match self {
            Pattern::Literal(s) => haystack.contains(s.as_str()),
            Pattern::Prefix(p) if p.contains(' ') => {
                // Multi-word prefix: all but the final word must match literally.
                haystack.split(' ').collect::<Vec<_>>().windows(p.split(' ').count()).any(|w| {
                    let joined = w.join(" ");
                    joined.starts_with(p.as_str())
                })
            }
            Pattern::Prefix(p) => tokens.iter().any(|t| t.starts_with(p.as_str())),
        }
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterConfig {
    pub keywords: Vec<Pattern>,
    pub exclusions: Vec<Pattern>,
}

impl FilterConfig {
    pub fn new<K: AsRef<str>, E: AsRef<str>>(keywords: &[K], exclusions: &[E]) -> Result<Self> {
        Ok(FilterConfig {
            keywords: keywords.iter().map(|k| Pattern::parse(k.as_ref())).collect::<Result<_>>()?,
            exclusions: exclusions.iter().map(|k| Pattern::parse(k.as_ref())).collect::<Result<_>>()?,
        })
    }

    /// The shipped search-term and exclusion lists.
    pub fn builtin() -> Self {
        let kw = parse_term_lines(include_str!("../data/keywords.txt"));
        let ex = parse_term_lines(include_str!("../data/exclusions.txt"));
        FilterConfig::new(&kw, &ex).expect("builtin term lists are valid")
    }

    pub fn from_files(keywords: &Path, exclusions: &Path) -> Result<Self> {
        let kw = load_term_file(keywords)?;
        let ex = load_term_file(exclusions)?;
        FilterConfig::new(&kw, &ex)
    }
}

/// One term per line; blank lines and `#` comments ignored.
pub fn parse_term_lines(content: &str) -> Vec<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_term_file(path: &Path) -> Result<Vec<String>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_term_lines(&content))
}

struct Prepared {
    text: String,
    tokens: Vec<String>,
}

fn prepare(text: &str) -> Prepared {
    let text = collapse_whitespace(&text.to_lowercase());
    let tokens = tokenize(&text).tokens;
    Prepared { text, tokens }
}

pub fn matches_keywords(text: &str, config: &FilterConfig) -> bool {
    let p = prepare(text);
    config.keywords.iter().any(|k| k.matches(&p.text, &p.tokens))
}

pub fn is_excluded(text: &str, config: &FilterConfig) -> bool {
    let p = prepare(text);
    config.exclusions.iter().any(|k| k.matches(&p.text, &p.tokens))
}

/// Metadata flag, or a manual `RT @`/`MT @` marker standing as its own token.
pub fn is_retweet(tweet: &Tweet) -> bool {
    if tweet.is_retweet_flagged {
        return true;
    }
    let words: Vec<&str> = tweet.text.split_whitespace().collect();
    words.windows(2).any(|w| {
        let marker = w[0].trim_start_matches(|c: char| !c.is_alphanumeric());
        (marker == "RT" || marker == "MT") && w[1].starts_with('@')
    })
}

fn dedupe_key(text: &str) -> String {
    collapse_whitespace(&normalize(text))
}

/// Keeps the first posting per normalized text, preserving order.
pub fn dedupe(set: &TweetSet) -> TweetSet {
    let mut seen = HashSet::new();
    set.retain(|t| seen.insert(dedupe_key(&t.text)))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub input: usize,
    pub malformed: usize,
    pub outside_dates: usize,
    pub after_keywords: usize,
    pub excluded: usize,
    pub after_exclusions: usize,
    pub retweets_removed: usize,
    pub after_retweets: usize,
    pub duplicates_removed: usize,
    pub output: usize,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub keep_retweets: bool,
    pub since: Option<NaiveDate>,
    pub until: Option<NaiveDate>,
}

/// keyword → exclusion → retweet → duplicate pipeline. Date bounds are inclusive.
pub fn ingest(set: &TweetSet, config: &FilterConfig, opts: &IngestOptions) -> (TweetSet, IngestStats) {
    let mut stats = IngestStats { input: set.len(), ..Default::default() };
    let dated = set.retain(|t| {
        opts.since.is_none_or(|d| t.date() >= d) && opts.until.is_none_or(|d| t.date() <= d)
    });
    stats.outside_dates = set.len() - dated.len();
    let kw = dated.retain(|t| matches_keywords(&t.text, config));
    stats.after_keywords = kw.len();
    let ex = kw.retain(|t| !is_excluded(&t.text, config));
    stats.excluded = kw.len() - ex.len();
    stats.after_exclusions = ex.len();
    let rt = if opts.keep_retweets { ex.clone() } else { ex.retain(|t| !is_retweet(t)) };
    stats.retweets_removed = ex.len() - rt.len();
    stats.after_retweets = rt.len();
    let out = if opts.keep_retweets { rt } else { dedupe(&rt) };
    stats.duplicates_removed = stats.after_retweets - out.len();
    stats.output = out.len();
    (out, stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    KeywordSeeded,
    ModelSeeded,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledEntry {
    #[serde(flatten)]
    pub tweet: Tweet,
    pub label: FineCategory,
    #[serde(default = "default_provenance")]
    pub provenance: Provenance,
}

fn default_provenance() -> Provenance {
    Provenance::Random
}

impl LabeledEntry {
    pub fn label_at(&self, level: Level) -> &'static str {
        self.label.at_level(level)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub entries: Vec<LabeledEntry>,
}

impl LabeledSet {
    pub fn new(entries: Vec<LabeledEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.tweet.id.as_str()) {
                return Err(Error::DuplicateId(e.tweet.id.clone()));
            }
        }
        Ok(LabeledSet { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self, level: Level) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.label_at(level)).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.tweet.text.as_str()).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.tweet.id.as_str()).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LabeledEntry = parse_record(&line).map_err(|msg| {
                Error::InvalidInput(format!("{}:{}: {msg}", path.display(), lineno + 1))
            })?;
            check_tweet(&entry.tweet)
                .map_err(|msg| Error::InvalidInput(format!("{}:{}: {msg}", path.display(), lineno + 1)))?;
            entries.push(entry);
        }
        LabeledSet::new(entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const DEFAULT: SplitRatios = SplitRatios { train: 0.64, validation: 0.16, test: 0.20 };

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidInput(format!("split ratios must be positive: {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!("split ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub train: LabeledSet,
    pub validation: LabeledSet,
    pub test: LabeledSet,
    pub ratios: SplitRatios,
    pub seed: u64,
}

/// Largest-remainder apportionment of `n` items. Equal remainders go to the earlier part.
pub fn apportion(n: usize, ratios: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    // Tolerate representation error such as 0.6 * 5 = 2.9999999999999996.
    let mut counts: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    let frac = |i: usize| exact[i] - counts[i] as f64;
    order.sort_by(|&a, &b| {
        frac(b)
            .partial_cmp(&frac(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Groups item indices by class, in first-seen class order sorted by name.
pub(crate) fn group_by_class<'a>(labels: &[&'a str]) -> BTreeMap<&'a str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    groups
}

/// Per-class shuffled, largest-remainder split over the fine categories.
pub fn stratified_split(set: &LabeledSet, ratios: SplitRatios, seed: u64) -> Result<SplitSet> {
    stratified_split_at(set, ratios, seed, Level::Fine)
}

/// Like [`stratified_split`] but stratifying on the labels of the given taxonomy level.
pub fn stratified_split_at(set: &LabeledSet, ratios: SplitRatios, seed: u64, level: Level) -> Result<SplitSet> {
    ratios.validate()?;
    let labels = set.labels(level);
    let groups = group_by_class(&labels);
    for (class, members) in &groups {
        if members.len() < 3 {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count: members.len(),
                required: 3,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part_of = vec![0usize; set.len()];
    for members in groups.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let counts = apportion(shuffled.len(), &ratios.as_array());
        let mut it = shuffled.into_iter();
        for (part, &count) in counts.iter().enumerate() {
            for idx in it.by_ref().take(count) {
                part_of[idx] = part;
            }
        }
    }
    let mut parts: [Vec<LabeledEntry>; 3] = Default::default();
    for (entry, &p) in set.entries.iter().zip(&part_of) {
        parts[p].push(entry.clone());
    }
    let [train, validation, test] = parts;
    Ok(SplitSet {
        train: LabeledSet { entries: train },
        validation: LabeledSet { entries: validation },
        test: LabeledSet { entries: test },
        ratios,
        seed,
    })
}

/// Stratified k-fold assignment: returns the fold index of every item.
pub fn stratified_folds(labels: &[&str], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {k}")));
    }
    let groups = group_by_class(labels);
    if groups.len() < 2 {
        return Err(Error::Degenerate("cross-validation needs at least two classes".into()));
    }
    for (class, members) in &groups {
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count: members.len(),
                required: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    // Continue the round-robin across classes so fold sizes stay balanced overall.
    let mut next = 0usize;
    for members in groups.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        for idx in shuffled {
            fold_of[idx] = next % k;
            next += 1;
        }
    }
    Ok(fold_of)
}

/// Count of entries per label at a level, keyed by label.
pub fn class_counts<'a>(labels: impl IntoIterator<Item = &'a str>) -> HashMap<&'a str, usize> {
    let mut counts = HashMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use regex::Regex;

    fn tweet(id: &str, text: &str) -> Tweet {
        Tweet {
            id: id.into(),
            text: text.into(),
            timestamp: "2017-03-01T12:00:00Z".parse().unwrap(),
            is_retweet_flagged: false,
        }
    }

    #[test]
    fn load_examples() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        std::fs::write(
            &p,
            concat!(
                r#"{"id":"1","text":"a","created_at":"2016-01-01T00:00:00Z"}"#, "\n",
                r#"{"id":"2","text":"b","created_at":"2016-01-02T00:00:00Z","retweet":true}"#, "\n",
                r#"{"id":"3","text":"c","created_at":"2016-01-03T00:00:00+02:00"}"#, "\n",
            ),
        )
        .unwrap();
        let r = load_tweets(&p).unwrap();
        assert_eq!(r.set.len(), 3);
        assert_eq!(r.skipped, 0);
        assert!(r.set.tweets[1].is_retweet_flagged);
        assert_eq!(r.set.tweets[2].date().to_string(), "2016-01-02");

        std::fs::write(
            &p,
            concat!(
                r#"{"id":"1","text":"a","created_at":"2016-01-01T00:00:00Z"}"#, "\n",
                "{not json\n",
                r#"{"id":"2","text":"b","created_at":"2016-01-02T00:00:00Z"}"#, "\n",
            ),
        )
        .unwrap();
        let r = load_tweets(&p).unwrap();
        assert_eq!((r.set.len(), r.skipped), (2, 1));

        std::fs::write(&p, "").unwrap();
        let r = load_tweets(&p).unwrap();
        assert_eq!((r.set.len(), r.skipped), (0, 0));

        assert!(matches!(load_tweets(&dir.path().join("missing.jsonl")), Err(Error::Io { .. })));
    }

    #[test]
    fn keyword_examples() {
        let cfg = FilterConfig::builtin();
        assert!(matches_keywords("He took his life yesterday", &cfg));
        assert!(!matches_keywords("nice weather today", &cfg));
        assert!(matches_keywords("SUICIDE prevention works", &cfg));
        assert!(matches_keywords("she  ended   her\tlife", &cfg));
        assert!(matches_keywords("suicides rising", &cfg));
    }

    #[test]
    fn exclusion_examples() {
        let cfg = FilterConfig::builtin();
        assert!(is_excluded("Suicide Squad trailer is lit", &cfg));
        assert!(is_excluded("that vote was political suicide", &cfg));
        assert!(!is_excluded("call the lifeline now", &cfg));
        assert!(is_excluded("new #SuicideGirls set", &cfg));
        assert!(is_excluded("Clinton's campaign", &cfg));
        // prefix patterns only match token starts
        assert!(!is_excluded("notsuicidegirl", &cfg));
    }

    #[test]
    fn pattern_validation() {
        assert_eq!(Pattern::parse("SuicideGirl*").unwrap(), Pattern::Prefix("suicidegirl".into()));
        assert!(Pattern::parse("").is_err());
        assert!(Pattern::parse("a*b").is_err());
        assert!(Pattern::parse("*").is_err());
    }

    #[test]
    fn retweet_examples() {
        let mut t = tweet("1", "so sad");
        t.is_retweet_flagged = true;
        assert!(is_retweet(&t));
        assert!(is_retweet(&tweet("2", "RT @user: so sad")));
        assert!(is_retweet(&tweet("3", "wow MT @news: update")));
        assert!(!is_retweet(&tweet("4", "the ART of living")));
        assert!(!is_retweet(&tweet("5", "rt @user lowercase marker")));
    }

    #[test]
    fn retweet_matches_token_regex_oracle() {
        let oracle = Regex::new(r"(?:^|\s)[^\w\s]*(?:RT|MT)\s+@").unwrap();
        let cases = [
            "the ART of living",
            "RT @a hi",
            "xRT @a",
            "\"RT @a quoted",
            "PART @b",
            "MT @c",
            "RT@d glued",
            "ends with RT",
            "SMART @home",
        ];
        for c in cases {
            assert_eq!(is_retweet(&tweet("x", c)), oracle.is_match(c), "{c}");
        }
    }

    #[test]
    fn dedupe_examples() {
        let s = TweetSet { tweets: vec![tweet("1", "same text"), tweet("2", "same text")] };
        assert_eq!(dedupe(&s).len(), 1);
        let s = TweetSet {
            tweets: vec![tweet("1", "look https://a.b now"), tweet("2", "look https://c.d now")],
        };
        let d = dedupe(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d.tweets[0].id, "1");
        let s = TweetSet { tweets: vec![tweet("1", "a"), tweet("2", "b"), tweet("3", "c")] };
        assert_eq!(dedupe(&s), s);
    }

    #[test]
    fn ingest_counts() {
        let cfg = FilterConfig::builtin();
        let set = TweetSet {
            tweets: vec![
                tweet("1", "suicide prevention month"),
                tweet("2", "Suicide Squad was great"),
                tweet("3", "RT @x: suicide prevention month"),
                tweet("4", "suicide prevention month"),
                tweet("5", "hello"),
            ],
        };
        let (out, stats) = ingest(&set, &cfg, &IngestOptions::default());
        assert_eq!(out.len(), 1);
        assert_eq!(stats.after_keywords, 4);
        assert_eq!(stats.excluded, 1);
        assert_eq!(stats.retweets_removed, 1);
        assert_eq!(stats.duplicates_removed, 1);
        let (out, stats) = ingest(&set, &cfg, &IngestOptions { keep_retweets: true, ..Default::default() });
        assert_eq!(out.len(), 3);
        assert_eq!(stats.retweets_removed, 0);
    }

    fn labeled(n_per_class: &[(FineCategory, usize)]) -> LabeledSet {
        let mut entries = Vec::new();
        for &(label, n) in n_per_class {
            for i in 0..n {
                entries.push(LabeledEntry {
                    tweet: tweet(&format!("{label}-{i}"), &format!("text {label} {i}")),
                    label,
                    provenance: Provenance::Random,
                });
            }
        }
        LabeledSet::new(entries).unwrap()
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(5, &[0.6, 0.2, 0.2]), vec![3, 1, 1]);
        // 6.4 / 1.6 / 2.0 → floors 6/1/2, the spare item goes to the largest remainder (0.6).
        assert_eq!(apportion(10, &[0.64, 0.16, 0.20]), vec![6, 2, 2]);
        // 1.92 / 0.48 / 0.6 → 1/0/0 then remainders .92 and .6 win.
        assert_eq!(apportion(3, &[0.64, 0.16, 0.20]), vec![2, 0, 1]);
        // equal remainders favour training
        assert_eq!(apportion(1, &[0.5, 0.5 - 1e-12, 1e-12]), vec![1, 0, 0]);
    }

    #[test]
    fn split_examples() {
        let set = labeled(&[(FineCategory::Coping, 5)]);
        let s = stratified_split(&set, SplitRatios { train: 0.6, validation: 0.2, test: 0.2 }, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (3, 1, 1));

        let set = labeled(&[(FineCategory::Coping, 10), (FineCategory::Awareness, 7)]);
        let s = stratified_split(&set, SplitRatios::DEFAULT, 7).unwrap();
        let coping = |ls: &LabeledSet| ls.entries.iter().filter(|e| e.label == FineCategory::Coping).count();
        assert_eq!((coping(&s.train), coping(&s.validation), coping(&s.test)), (6, 2, 2));
        let again = stratified_split(&set, SplitRatios::DEFAULT, 7).unwrap();
        assert_eq!(s, again);

        let set = labeled(&[(FineCategory::Coping, 10), (FineCategory::LivesSaved, 2)]);
        match stratified_split(&set, SplitRatios::DEFAULT, 7) {
            Err(Error::ClassTooSmall { class, .. }) => assert_eq!(class, "lives_saved"),
            other => panic!("expected ClassTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn folds_balanced() {
        let labels: Vec<&str> = (0..50).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
        let folds = stratified_folds(&labels, 5, 3).unwrap();
        for f in 0..5 {
            assert_eq!(folds.iter().filter(|&&x| x == f).count(), 10);
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 3).unwrap());
        assert!(stratified_folds(&["a"; 10], 5, 1).is_err());
    }

    proptest! {
        #[test]
        fn filter_composition(texts in proptest::collection::vec("[a-zA-Z ]{0,30}( suicide| political suicide| clinton| trump)?", 0..30)) {
            let cfg = FilterConfig::builtin();
            let set = TweetSet { tweets: texts.iter().enumerate().map(|(i, t)| tweet(&i.to_string(), t)).collect() };
            let (_, stats) = ingest(&set, &cfg, &IngestOptions::default());
            prop_assert!(stats.after_exclusions <= stats.after_keywords);
            prop_assert!(stats.after_keywords <= stats.input);
        }

        #[test]
        fn case_invariance(t in "[a-zA-Z ]{0,20}(Suicide Squad|SUICIDE|Took His Life|clintons)?[a-zA-Z ]{0,10}") {
            let cfg = FilterConfig::builtin();
            for v in [t.to_uppercase(), t.to_lowercase()] {
                prop_assert_eq!(matches_keywords(&v, &cfg), matches_keywords(&t, &cfg));
                prop_assert_eq!(is_excluded(&v, &cfg), is_excluded(&t, &cfg));
            }
        }

        #[test]
        fn dedupe_idempotent(texts in proptest::collection::vec("(a|b|c|@x|https://q\\.r)( (a|b|@y))?", 0..20)) {
            let set = TweetSet { tweets: texts.iter().enumerate().map(|(i, t)| tweet(&i.to_string(), t)).collect() };
            let once = dedupe(&set);
            prop_assert!(once.len() <= set.len());
            prop_assert_eq!(dedupe(&once), once);
        }

        #[test]
        fn split_partitions(counts in proptest::collection::vec(3usize..40, 1..5), seed in 0u64..1000) {
            let classes = [FineCategory::Coping, FineCategory::Awareness, FineCategory::Prevention, FineCategory::OffTopic];
            let spec: Vec<_> = counts.iter().zip(classes).map(|(&n, c)| (c, n)).collect();
            let set = labeled(&spec);
            let s = stratified_split(&set, SplitRatios::DEFAULT, seed).unwrap();
            let mut ids: Vec<_> = s.train.ids().into_iter().chain(s.validation.ids()).chain(s.test.ids()).collect();
            prop_assert_eq!(ids.len(), set.len());
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), set.len());
            for &(class, n) in &spec {
                let c = |ls: &LabeledSet| ls.entries.iter().filter(|e| e.label == class).count();
                let parts = [c(&s.train), c(&s.validation), c(&s.test)];
                prop_assert_eq!(parts.iter().sum::<usize>(), n);
                for (got, r) in parts.iter().zip([0.64, 0.16, 0.20]) {
                    prop_assert!((*got as f64 - r * n as f64).abs() <= 1.0 + 1e-9);
                }
            }
            prop_assert_eq!(s, stratified_split(&set, SplitRatios::DEFAULT, seed).unwrap());
        }
    }
}
