//! Seeded synthetic labeled corpus: each class has its own keyword vocabulary mixed into
//! shared filler words. Used for end-to-end checks where real posts are unavailable.

use chrono::{DateTime, Duration, Utc};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotate::taxonomy::FineCategory;
use crate::corpus::{LabeledEntry, LabeledSet, Provenance, Tweet};

const IDEATION: &[&str] = &[
    "hopeless", "tonight", "cant", "anymore", "end", "pills", "worthless", "tired", "disappear", "burden", "goodbye",
    "alone", "empty", "numb", "plan",
];
const COPING: &[&str] = &[
    "recovered", "survived", "grateful", "therapy", "stronger", "years", "clean", "healing", "journey", "today",
    "proud", "better", "overcame", "hope", "alive",
];
const AWARENESS: &[&str] = &[
    "statistics", "rates", "study", "research", "rising", "percent", "teens", "data", "report", "veterans", "leading",
    "cause", "increase", "survey", "risk",
];
const PREVENTION: &[&str] = &[
    "lifeline", "hotline", "call", "text", "reach", "support", "talk", "helpline", "free", "available", "warning",
    "signs", "listen", "check", "resources",
];
const CASES: &[&str] = &[
    "police", "found", "dead", "singer", "actor", "died", "confirmed", "family", "statement", "investigation",
    "bridge", "student", "tragic", "rip", "breaking",
];
const OTHER: &[&str] = &[
    "movie", "lol", "squad", "song", "band", "game", "gym", "workout", "diet", "career", "joke", "album", "meme",
    "series", "fans",
];
const NOISE: &[&str] = &[
    "the", "a", "and", "of", "to", "in", "is", "it", "that", "this", "for", "on", "with", "was", "as", "at", "be",
    "by", "from", "people", "about", "just", "so", "what", "all", "when", "one", "time", "more", "some", "now",
    "like", "know", "think", "see", "really", "would", "other", "them", "then", "there", "their", "out", "up",
    "very", "new", "day", "week", "thing", "way", "well", "still", "even", "much", "many", "also", "said", "get",
    "got", "going", "make", "made", "back", "want", "need", "good", "first", "last", "long", "little", "world",
    "life", "man", "woman", "friend", "place", "work", "home", "school", "city", "night", "morning", "year", "read",
    "heard", "share", "post", "look", "feel", "says", "every", "never", "always", "here", "why", "how", "who",
];

/// Task 1 class share of the shipped test distribution (57/42/63/91/103/285).
const CLASS_WEIGHTS: [f64; 6] = [57.0, 42.0, 63.0, 91.0, 103.0, 285.0];

const IRRELEVANT_FINE: [FineCategory; 7] = [
    FineCategory::NewsSuicidal,
    FineCategory::NewsCoping,
    FineCategory::BereavedNegative,
    FineCategory::BereavedCoping,
    FineCategory::LivesSaved,
    FineCategory::SuicideOther,
    FineCategory::OffTopic,
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    /// Probability that a token comes from the class vocabulary rather than the filler.
    pub signal: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub days: i64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { docs: 3000, signal: 0.3, min_len: 10, max_len: 22, days: 365, seed: 7 }
    }
}

fn vocab(class: usize) -> &'static [&'static str] {
    [IDEATION, COPING, AWARENESS, PREVENTION, CASES, OTHER][class]
}

fn fine_for(class: usize, rng: &mut ChaCha8Rng) -> FineCategory {
    match class {
        0 => FineCategory::SuicidalIdeationAttempts,
        1 => FineCategory::Coping,
        2 => FineCategory::Awareness,
        3 => FineCategory::Prevention,
        4 => FineCategory::SuicideCases,
        _ => *IRRELEVANT_FINE.choose(rng).expect("non-empty"),
    }
}

/// Every post carries the word "suicide" so it passes the keyword filter.
pub fn generate(config: &SynthConfig) -> LabeledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let classes = WeightedIndex::new(CLASS_WEIGHTS).expect("positive weights");
    let start: DateTime<Utc> = "2019-01-01T00:00:00Z".parse().expect("valid date");
    let entries = (0..config.docs)
        .map(|i| {
            let class = classes.sample(&mut rng);
            let len = rng.gen_range(config.min_len..=config.max_len);
            let mut words: Vec<&str> = (0..len)
                .map(|_| {
                    let pool = if rng.gen_bool(config.signal) { vocab(class) } else { NOISE };
                    *pool.choose(&mut rng).expect("non-empty")
                })
                .collect();
            let at = rng.gen_range(0..=words.len());
            words.insert(at, "suicide");
            let offset = Duration::seconds(rng.gen_range(0..config.days.max(1) * 86_400));
            LabeledEntry {
                tweet: Tweet {
                    id: format!("s{i:05}"),
                    text: words.join(" "),
                    timestamp: start + offset,
                    is_retweet_flagged: false,
                },
                label: fine_for(class, &mut rng),
                provenance: Provenance::Random,
            }
        })
        .collect();
    LabeledSet::new(entries).expect("generated ids are unique")
}
