//! N-gram vocabularies and smoothed TF-IDF weighting: `tf · ln((N + 1) / (df + 1))`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

pub const TFIDF_FORMAT_VERSION: u32 = 1;

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub pairs: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary (index, value) pairs: sorts, sums duplicates, drops zeros.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|p| p.1 != 0.0);
        SparseVector { pairs: out }
    }

    pub fn dense(values: &[f64]) -> Self {
        SparseVector::from_pairs(values.iter().copied().enumerate().collect())
    }

    pub fn nnz(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(i, v)| w.get(i).copied().unwrap_or(0.0) * v)
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.pairs.iter().map(|p| p.1 * p.1).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(self.pairs.iter().map(|&(i, v)| (i, v * factor)).collect())
    }

    pub fn max_index(&self) -> Option<usize> {
        self.pairs.last().map(|p| p.0)
    }
}

/// All n-grams of order 1..=ngram_max, space-joined, in document order.
pub fn ngrams(doc: &TokenSequence, ngram_max: usize) -> impl Iterator<Item = String> + '_ {
    (1..=ngram_max).flat_map(move |n| doc.tokens.windows(n).map(|w| w.join(" ")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub version: u32,
    pub ngram_max: usize,
    pub top_n: Option<usize>,
    pub n_docs: usize,
    /// Terms in column order; column `i` is `terms[i]`.
    pub terms: Vec<String>,
    /// Document frequency per column.
    pub df: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TfIdfModel {
    /// Vocabulary over the corpus; with `top_n`, keeps the most frequent terms by total
    /// count (ties lexicographic). Columns are assigned in lexicographic term order.
    pub fn build(corpus: &[TokenSequence], ngram_max: usize, top_n: Option<usize>) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidInput("cannot build a vocabulary from an empty corpus".into()));
        }
        if !(1..=2).contains(&ngram_max) {
            return Err(Error::InvalidInput(format!("ngram_max must be 1 or 2, got {ngram_max}")));
        }
        if top_n == Some(0) {
            return Err(Error::InvalidInput("top_n must be positive".into()));
        }
        // term -> (total count, document frequency)
        let mut stats: HashMap<String, (usize, usize)> = HashMap::new();
        for doc in corpus {
            let mut in_doc: HashMap<String, usize> = HashMap::new();
            for g in ngrams(doc, ngram_max) {
                *in_doc.entry(g).or_insert(0) += 1;
            }
            for (g, c) in in_doc {
                let e = stats.entry(g).or_insert((0, 0));
                e.0 += c;
                e.1 += 1;
            }
        }
        let mut ranked: Vec<(String, usize, usize)> = stats.into_iter().map(|(t, (tf, df))| (t, tf, df)).collect();
        if let Some(cap) = top_n {
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(cap);
        }
        ranked.sort_by(|a, b| a.0.cmp(&b.0));
        let (terms, df): (Vec<String>, Vec<usize>) = ranked.into_iter().map(|(t, _, df)| (t, df)).unzip();
        let mut model = TfIdfModel {
            version: TFIDF_FORMAT_VERSION,
            ngram_max,
            top_n,
            n_docs: corpus.len(),
            terms,
            df,
            index: HashMap::new(),
        };
        model.reindex();
        Ok(model)
    }

    fn reindex(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df_of(&self, term: &str) -> Option<usize> {
        self.column(term).map(|c| self.df[c])
    }

    pub fn idf(&self, column: usize) -> f64 {
        ((self.n_docs as f64 + 1.0) / (self.df[column] as f64 + 1.0)).ln()
    }

    pub fn vectorize(&self, doc: &TokenSequence) -> SparseVector {
        let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
        for g in ngrams(doc, self.ngram_max) {
            if let Some(c) = self.column(&g) {
                *tf.entry(c).or_insert(0) += 1;
            }
        }
        let pairs = tf
            .into_iter()
            .map(|(c, n)| (c, n as f64 * self.idf(c)))
            .filter(|p| p.1 != 0.0)
            .collect();
        SparseVector { pairs }
    }

    pub fn vectorize_all(&self, docs: &[TokenSequence]) -> Vec<SparseVector> {
        use rayon::prelude::*;
        docs.par_iter().map(|d| self.vectorize(d)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != TFIDF_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!("unsupported tf-idf model version {}", self.version)));
        }
        if self.terms.len() != self.df.len() {
            return Err(Error::InvalidInput("terms and df lengths differ".into()));
        }
        if self.df.iter().any(|&d| d == 0 || d > self.n_docs) {
            return Err(Error::InvalidInput("document frequency outside [1, N]".into()));
        }
        if self.terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("terms must be unique and sorted".into()));
        }
        Ok(())
    }

    /// Restores the lookup index after deserialization.
    pub fn finish_load(mut self) -> Result<Self> {
        self.validate()?;
        self.reindex();
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<TfIdfModel>(s)?.finish_load()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Convenience wrapper for `TfIdfModel::build`.
pub fn build_vocab(corpus: &[TokenSequence], ngram_max: usize, top_n: Option<usize>) -> Result<TfIdfModel> {
    TfIdfModel::build(corpus, ngram_max, top_n)
}

pub fn tfidf_vector(doc: &TokenSequence, model: &TfIdfModel) -> SparseVector {
    model.vectorize(doc)
}
