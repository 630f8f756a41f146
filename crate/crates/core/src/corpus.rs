//! Corpus ingestion: tokenization, vocabulary construction, document encoding and
//! the unigram distribution negatives are drawn from.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};

pub type WordId = usize;
pub type DocId = usize;

/// Default exponent applied to word counts for negative sampling.
pub const DEFAULT_NEGATIVE_POWER: f64 = 0.75;

/// Split a line into lowercased whitespace-delimited tokens.
pub fn tokenize(line: &str) -> impl Iterator<Item = String> + '_ {
    line.split_whitespace().map(str::to_lowercase)
}

/// Read a corpus file: one document per line.
///
/// Blank lines are kept as empty documents so line numbers stay meaningful;
/// [`encode`] drops them.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(|l| tokenize(l).collect()).collect())
}

/// Read a category-name file: one name per line, multiword names joined by `_`.
pub fn read_category_names(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut names = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = tokenize(line);
        let name = toks.next().unwrap();
        if toks.next().is_some() {
            return Err(Error::parse(
                path,
                lineno + 1,
                "category name contains whitespace; join multiword names with '_'",
            ));
        }
        names.push(name);
    }
    if names.is_empty() {
        return Err(Error::parse(path, 0, "no category names"));
    }
    Ok(names)
}

/// Bidirectional word/id map with corpus counts.
///
/// Ids are assigned by descending count, ties broken lexicographically, so the
/// mapping is a pure function of the token multiset.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, WordId>,
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    pub fn build<D, T>(docs: D, min_count: u64) -> Result<Self>
    where
        D: IntoIterator,
        D::Item: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        if min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be >= 1".into()));
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for doc in docs {
            for tok in doc {
                let tok = tok.as_ref();
                match counts.get_mut(tok) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(tok.to_owned(), 1);
                    }
                }
            }
        }
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut retained: Vec<(String, u64)> =
            counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        if retained.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        retained.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Self::from_sorted(retained, min_count))
    }

    /// Rebuild a vocabulary from `(word, count)` pairs already in id order.
    pub fn from_entries(entries: Vec<(String, u64)>, min_count: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        let vocab = Self::from_sorted(entries, min_count);
        if vocab.index.len() != vocab.words.len() {
            return Err(Error::InvalidConfig("duplicate vocabulary entry".into()));
        }
        Ok(vocab)
    }

    fn from_sorted(entries: Vec<(String, u64)>, min_count: u64) -> Self {
        let (words, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let total_tokens = counts.iter().sum();
        Vocabulary {
            words,
            counts,
            index,
            total_tokens,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id]
    }

    pub fn count(&self, id: WordId) -> u64 {
        self.counts[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of the counts of retained words.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }
}

/// Convenience wrapper around [`Vocabulary::build`].
pub fn build_vocabulary<D, T>(docs: D, min_count: u64) -> Result<Vocabulary>
where
    D: IntoIterator,
    D::Item: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    Vocabulary::build(docs, min_count)
}

/// Documents as sequences of vocabulary ids. Empty documents are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EncodedCorpus {
    documents: Vec<Vec<WordId>>,
}

impl EncodedCorpus {
    pub fn from_documents(documents: Vec<Vec<WordId>>) -> Self {
        EncodedCorpus {
            documents: documents.into_iter().filter(|d| !d.is_empty()).collect(),
        }
    }

    pub fn documents(&self) -> &[Vec<WordId>] {
        &self.documents
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }
}

/// Map tokens to ids, dropping out-of-vocabulary tokens and documents left empty.
pub fn encode<D, T>(docs: D, vocab: &Vocabulary) -> EncodedCorpus
where
    D: IntoIterator,
    D::Item: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let documents = docs
        .into_iter()
        .map(|doc| {
            doc.into_iter()
                .filter_map(|t| vocab.id(t.as_ref()))
                .collect::<Vec<_>>()
        })
        .filter(|d| !d.is_empty())
        .collect();
    EncodedCorpus { documents }
}

pub fn decode<'a>(doc: &[WordId], vocab: &'a Vocabulary) -> Vec<&'a str> {
    doc.iter().map(|&id| vocab.word(id)).collect()
}

/// Sampling distribution over words proportional to `count^power`.
#[derive(Clone, Debug)]
pub struct NegativeTable {
    weights: Vec<f64>,
    power: f64,
    alias: Option<WeightedAliasIndex<f64>>,
}

impl NegativeTable {
    pub fn new(vocab: &Vocabulary, power: f64) -> Result<Self> {
        Self::from_counts(vocab.counts(), power)
    }

    pub fn from_counts(counts: &[u64], power: f64) -> Result<Self> {
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "negative-sampling power must be finite and >= 0, got {power}"
            )));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        if weights.is_empty() || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::EmptyVocabulary { min_count: 0 });
        }
        let alias = if weights.len() >= 2 {
            Some(
                WeightedAliasIndex::new(weights.clone())
                    .map_err(|e| Error::InvalidConfig(format!("negative table: {e}")))?,
            )
        } else {
            None
        };
        Ok(NegativeTable {
            weights,
            power,
            alias,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Normalized sampling probability of `id` (without exclusion).
    pub fn probability(&self, id: WordId) -> f64 {
        self.weights[id] / self.weights.iter().sum::<f64>()
    }

    /// Draw a word different from `exclude`; excluded draws are rejected and redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, exclude: WordId) -> Result<WordId> {
        let alias = self.alias.as_ref().ok_or(Error::NoNegatives)?;
        let others: f64 = self
            .weights
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != exclude)
            .map(|(_, &w)| w)
            .sum::<f64>();
        if others <= 0.0 {
            return Err(Error::NoNegatives);
        }
        loop {
            let id = alias.sample(rng);
            if id != exclude {
                return Ok(id);
            }
        }
    }

    /// Like [`sample`](Self::sample) but skips the exclusion-mass check; for hot loops
    /// where the table is known to hold at least two positive-weight words.
    #[inline]
    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, rng: &mut R, exclude: WordId) -> WordId {
        let alias = self.alias.as_ref().expect("negative table with >= 2 words");
        loop {
            let id = alias.sample(rng);
            if id != exclude {
                return id;
            }
        }
    }
}
