//! Text normalization, tokenization and the optional token-removal strategies.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const URL_MARKER: &str = "http";
pub const MENTION_MARKER: &str = "@user";
pub const DEFAULT_MAX_TOKENS: usize = 80;

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").expect("url regex"));
static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("mention regex"));
static PICTOGRAPHIC_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\p{Extended_Pictographic}$").expect("emoji regex"));
static EMOJI_COMPONENT_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[\p{Emoji_Modifier}\u{FE0F}\u{FE0E}\u{20E3}\u{E0020}-\u{E007F}]$").expect("emoji component regex")
});

static BUILTIN_STOPWORDS: LazyLock<HashSet<String>> =
    LazyLock::new(|| parse_word_list(include_str!("../data/stopwords_en.txt")));

/// The shipped 179-word English stopword list.
pub fn builtin_stopwords() -> &'static HashSet<String> {
    &BUILTIN_STOPWORDS
}

fn parse_word_list(content: &str) -> HashSet<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Replace URLs with `http`, mentions with `@user`, then lowercase.
pub fn normalize(text: &str) -> String {
    let no_urls = URL_RE.replace_all(text, URL_MARKER);
    let no_mentions = MENTION_RE.replace_all(&no_urls, MENTION_MARKER);
    no_mentions.to_lowercase()
}

pub fn is_emoji(c: char) -> bool {
    let mut buf = [0u8; 4];
    PICTOGRAPHIC_RE.is_match(c.encode_utf8(&mut buf))
}

fn is_emoji_component(c: char) -> bool {
    let mut buf = [0u8; 4];
    EMOJI_COMPONENT_RE.is_match(c.encode_utf8(&mut buf))
}

fn is_word_char(c: char) -> bool {
    (c.is_alphanumeric() || c == '_' || is_mark(c)) && !is_emoji(c)
}

fn is_mark(c: char) -> bool {
    // Combining diacritics stay attached to the preceding letter.
    matches!(c as u32, 0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence::new(iter.into_iter().map(Into::into).collect())
    }
}

/// Split normalized text into word runs, single punctuation characters and single emoji.
///
/// Word runs keep interior apostrophes and hyphens (`don't`, `1-800-273-8255`). An `@`
/// directly followed by word characters stays one token, so the mention marker survives.
/// Emoji keep their trailing modifiers, variation selectors and zero-width-joined parts.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, &mut tokens);
    }
    TokenSequence::new(tokens)
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_word_char(c) || (c == '@' && chars.get(i + 1).is_some_and(|&n| is_word_char(n))) {
            let start = i;
            i += 1;
            loop {
                match chars.get(i) {
                    Some(&n) if is_word_char(n) => i += 1,
                    Some(&n) if is_joiner(n) && chars.get(i + 1).is_some_and(|&m| is_word_char(m)) => {
                        i += 2
                    }
                    _ => break,
                }
            }
            out.push(chars[start..i].iter().collect());
        } else if is_emoji(c) {
            let start = i;
            i += 1;
            loop {
                match chars.get(i) {
                    Some(&n) if is_emoji_component(n) => i += 1,
                    Some('\u{200D}') if chars.get(i + 1).is_some_and(|&m| is_emoji(m)) => i += 2,
                    _ => break,
                }
            }
            out.push(chars[start..i].iter().collect());
        } else {
            out.push(c.to_string());
            i += 1;
        }
    }
}

/// How "remove digits" is interpreted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitRemoval {
    /// Drop tokens made only of digits.
    #[default]
    WholeTokens,
    /// Strip digit characters from every token, dropping tokens left empty.
    Characters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    #[serde(default)]
    pub remove_digits: bool,
    #[serde(default)]
    pub digit_mode: DigitRemoval,
    #[serde(default)]
    pub remove_punctuation: bool,
    #[serde(default)]
    pub remove_stopwords: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma_table: Option<BTreeMap<String, String>>,
    pub max_tokens: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            remove_digits: false,
            digit_mode: DigitRemoval::WholeTokens,
            remove_punctuation: false,
            remove_stopwords: false,
            stopwords: None,
            lemma_table: None,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_tokens == 0 {
            return Err(Error::InvalidInput("max_tokens must be at least 1".into()));
        }
        Ok(())
    }

    /// normalize → tokenize → strategy → truncate.
    pub fn process(&self, text: &str) -> TokenSequence {
        truncate(&apply_strategy(tokenize(&normalize(text)), self), self.max_tokens)
    }
}

fn is_all_digits(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_numeric())
}

fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric() && !is_emoji(c) && !is_emoji_component(c))
}

pub fn apply_strategy(seq: TokenSequence, config: &PreprocessConfig) -> TokenSequence {
    let stopwords: Option<HashSet<&str>> = config.remove_stopwords.then(|| match &config.stopwords {
        Some(list) => list.iter().map(String::as_str).collect(),
        None => BUILTIN_STOPWORDS.iter().map(String::as_str).collect(),
    });
    let mut out = Vec::with_capacity(seq.tokens.len());
    for token in seq.tokens {
        let token = if config.remove_digits && config.digit_mode == DigitRemoval::Characters {
            let stripped: String = token.chars().filter(|c| !c.is_numeric()).collect();
            if stripped.is_empty() {
                continue;
            }
            stripped
        } else {
            token
        };
        if config.remove_digits && is_all_digits(&token) {
            continue;
        }
        if config.remove_punctuation && is_punctuation_token(&token) {
            continue;
        }
        if stopwords.as_ref().is_some_and(|s| s.contains(token.as_str())) {
            continue;
        }
        let token = match config.lemma_table.as_ref().and_then(|t| t.get(&token)) {
            Some(lemma) => lemma.clone(),
            None => token,
        };
        out.push(token);
    }
    TokenSequence::new(out)
}

pub fn truncate(seq: &TokenSequence, max_tokens: usize) -> TokenSequence {
    TokenSequence::new(seq.tokens.iter().take(max_tokens).cloned().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub mean: f64,
    pub count: usize,
    /// (fraction, nearest-rank length) in the requested order.
    pub percentiles: Vec<(f64, usize)>,
}

/// Nearest-rank percentiles of sequence lengths, plus the mean length.
pub fn length_percentiles(corpus: &[TokenSequence], percentiles: &[f64]) -> Result<LengthStats> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("length percentiles of an empty corpus".into()));
    }
    let mut lengths: Vec<usize> = corpus.iter().map(TokenSequence::len).collect();
    lengths.sort_unstable();
    let n = lengths.len();
    let mean = lengths.iter().sum::<usize>() as f64 / n as f64;
    let mut out = Vec::with_capacity(percentiles.len());
    for &p in percentiles {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!("percentile {p} outside [0, 1]")));
        }
        // Guard against 0.95 * 20 = 19.000000000000004 style rounding.
        let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
        out.push((p, lengths[rank.min(n) - 1]));
    }
    Ok(LengthStats { mean, count: n, percentiles: out })
}

pub fn load_stopwords(path: &Path) -> Result<Vec<String>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut words: Vec<String> = parse_word_list(&content).into_iter().collect();
    words.sort();
    Ok(words)
}

/// `token<TAB>lemma` per line.
pub fn load_lemma_table(path: &Path) -> Result<BTreeMap<String, String>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = BTreeMap::new();
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (token, lemma) = line.split_once('\t').ok_or_else(|| {
            Error::InvalidInput(format!("{}:{}: expected token<TAB>lemma", path.display(), lineno + 1))
        })?;
        table.insert(token.trim().to_string(), lemma.trim().to_string());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> TokenSequence {
        s.iter().copied().collect()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("Check https://t.co/Ab1 NOW @Anna"), "check http now @user");
        assert_eq!(normalize("no urls here"), "no urls here");
        assert_eq!(normalize("@a @b http://x.y http://z.w"), "@user @user http http");
        assert_eq!(normalize("see www.Example.org/X"), "see http");
        assert_eq!(normalize("HTTPS://EXAMPLE.COM"), "http");
    }

    #[test]
    fn normalize_keeps_emoji() {
        assert_eq!(normalize("So sad 😢🙏"), "so sad 😢🙏");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("now !!"), toks(&["now", "!", "!"]));
        assert_eq!(tokenize("don't stop"), toks(&["don't", "stop"]));
        assert_eq!(tokenize(""), toks(&[]));
        assert_eq!(tokenize("call 1-800-273-8255 now"), toks(&["call", "1-800-273-8255", "now"]));
        assert_eq!(tokenize("@user: http."), toks(&["@user", ":", "http", "."]));
        assert_eq!(tokenize("'quoted' -dash- end-"), toks(&["'", "quoted", "'", "-", "dash", "-", "end", "-"]));
    }

    #[test]
    fn tokenize_emoji() {
        assert_eq!(tokenize("sad😢😢"), toks(&["sad", "😢", "😢"]));
        assert_eq!(tokenize("🙏🏽 pray"), toks(&["🙏🏽", "pray"]));
        assert_eq!(tokenize("❤️"), toks(&["❤️"]));
        assert_eq!(tokenize("👨‍👩‍👧"), toks(&["👨‍👩‍👧"]));
    }

    #[test]
    fn strategy_examples() {
        let digits = PreprocessConfig { remove_digits: true, ..Default::default() };
        let seq = toks(&["call", "1-800-273-8255", "now"]);
        assert_eq!(apply_strategy(seq.clone(), &digits), seq);
        assert_eq!(apply_strategy(toks(&["in", "2019", "ok"]), &digits), toks(&["in", "ok"]));

        let chars = PreprocessConfig {
            remove_digits: true,
            digit_mode: DigitRemoval::Characters,
            ..Default::default()
        };
        assert_eq!(apply_strategy(toks(&["a1b", "22"]), &chars), toks(&["ab"]));

        let punct = PreprocessConfig { remove_punctuation: true, ..Default::default() };
        assert_eq!(apply_strategy(toks(&["a", "!", "cat"]), &punct), toks(&["a", "cat"]));
        assert_eq!(apply_strategy(toks(&["😢", "@user", "..."]), &punct), toks(&["😢", "@user"]));

        let stop = PreprocessConfig { remove_stopwords: true, ..Default::default() };
        assert_eq!(apply_strategy(toks(&["i", "am", "not", "okay"]), &stop), toks(&["okay"]));

        let lemma = PreprocessConfig {
            lemma_table: Some(BTreeMap::from([("tried".to_string(), "try".to_string())])),
            ..Default::default()
        };
        assert_eq!(apply_strategy(toks(&["i", "tried"]), &lemma), toks(&["i", "try"]));
    }

    #[test]
    fn stopword_list_size() {
        assert_eq!(builtin_stopwords().len(), 179);
    }

    #[test]
    fn truncate_examples() {
        let long: TokenSequence = (0..100).map(|i| i.to_string()).collect();
        let cut = truncate(&long, 80);
        assert_eq!(cut.len(), 80);
        assert_eq!(cut.tokens[..], long.tokens[..80]);
        let short: TokenSequence = (0..5).map(|i| i.to_string()).collect();
        assert_eq!(truncate(&short, 80), short);
        let exact: TokenSequence = (0..80).map(|i| i.to_string()).collect();
        assert_eq!(truncate(&exact, 80), exact);
    }

    #[test]
    fn percentile_examples() {
        let corpus: Vec<TokenSequence> = (1..=10)
            .map(|k| (0..k * 10).map(|i| i.to_string()).collect())
            .collect();
        let stats = length_percentiles(&corpus, &[0.95, 0.5]).unwrap();
        assert_eq!(stats.percentiles, vec![(0.95, 100), (0.5, 50)]);
        assert_eq!(stats.mean, 55.0);

        let single = vec![(0..7).map(|i| i.to_string()).collect::<TokenSequence>()];
        let s = length_percentiles(&single, &[0.01, 0.5, 0.99, 1.0]).unwrap();
        assert!(s.percentiles.iter().all(|&(_, l)| l == 7));

        let constant: Vec<TokenSequence> =
            (0..9).map(|_| (0..25).map(|i| i.to_string()).collect()).collect();
        let s = length_percentiles(&constant, &[0.1, 0.95, 0.99]).unwrap();
        assert_eq!(s.mean, 25.0);
        assert!(s.percentiles.iter().all(|&(_, l)| l == 25));

        assert!(length_percentiles(&[], &[0.5]).is_err());
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                "[A-Za-z]{1,8}",
                "[0-9]{1,4}",
                "[!?.,:;'\"#-]{1,3}",
                Just("https://t.co/AbC".to_string()),
                Just("@Some_User".to_string()),
                Just("don't".to_string()),
                Just("😢".to_string()),
                Just("🙏🏽".to_string()),
                Just("ÄÖü".to_string()),
            ],
            0..20,
        )
        .prop_map(|parts| parts.join(" "))
    }

    proptest! {
        #[test]
        fn normalize_idempotent(t in text_strategy()) {
            let once = normalize(&t);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn no_uppercase_tokens(t in text_strategy()) {
            for tok in tokenize(&normalize(&t)).iter() {
                prop_assert!(!tok.chars().any(char::is_uppercase), "token {}", tok);
            }
        }

        #[test]
        fn tokens_well_formed(t in text_strategy()) {
            for tok in tokenize(&t).iter() {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn tokenize_round_trip(t in text_strategy()) {
            let seq = tokenize(&normalize(&t));
            prop_assert_eq!(tokenize(&seq.join()), seq);
        }

        #[test]
        fn all_off_is_identity(t in text_strategy()) {
            let seq = tokenize(&normalize(&t));
            prop_assert_eq!(apply_strategy(seq.clone(), &PreprocessConfig::default()), seq);
        }

        #[test]
        fn truncate_is_prefix(t in text_strategy(), m in 1usize..30) {
            let seq = tokenize(&t);
            let cut = truncate(&seq, m);
            prop_assert!(cut.len() <= m);
            prop_assert_eq!(&seq.tokens[..cut.len()], &cut.tokens[..]);
        }
    }
}
