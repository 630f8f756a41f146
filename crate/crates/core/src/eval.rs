//! Topic quality and specificity metrics: document-level NPMI coherence, mean
//! accuracy against judged labels, and hypernym direction from κ.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedCorpus, Vocabulary, WordId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topic {
    pub category: String,
    pub terms: Vec<String>,
}

/// Top terms per category.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TopicSet {
    pub topics: Vec<Topic>,
}

impl TopicSet {
    pub fn new(topics: Vec<Topic>) -> Self {
        TopicSet { topics }
    }

    /// Parse `category<TAB>term1,term2,...` lines.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut topics = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (cat, terms) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, i + 1, "expected category<TAB>terms"))?;
            let terms = terms
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect();
            topics.push(Topic {
                category: cat.trim().to_owned(),
                terms,
            });
        }
        Ok(TopicSet { topics })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Sorted ids of the documents containing each word.
fn document_sets(corpus: &EncodedCorpus, words: &[WordId]) -> HashMap<WordId, Vec<u32>> {
    let mut sets: HashMap<WordId, Vec<u32>> = words.iter().map(|&w| (w, Vec::new())).collect();
    for (d, doc) in corpus.documents().iter().enumerate() {
        for &w in doc {
            if let Some(s) = sets.get_mut(&w) {
                if s.last() != Some(&(d as u32)) {
                    s.push(d as u32);
                }
            }
        }
    }
    sets
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Normalized PMI from document counts.
///
/// Zero co-occurrence gives -1; a pair present in every document gives 1.
/// Results are clamped to [-1, 1] against rounding.
pub fn npmi<F: Scalar>(df_a: usize, df_b: usize, df_ab: usize, n_docs: usize) -> F {
    if df_ab == 0 {
        return -F::one();
    }
    let n = F::from_usize(n_docs).unwrap();
    let lp = |c: usize| (F::from_usize(c).unwrap() / n).ln();
    let l_ab = lp(df_ab);
    if l_ab == F::zero() {
        return F::one();
    }
    let v = (lp(df_a) + lp(df_b) - l_ab) / l_ab;
    v.max(-F::one()).min(F::one())
}

/// Mean NPMI over unordered term pairs of each topic, averaged over topics.
pub fn topic_coherence<F: Scalar>(
    topics: &TopicSet,
    corpus: &EncodedCorpus,
    vocab: &Vocabulary,
) -> Result<F> {
    let mut ids: Vec<Vec<WordId>> = Vec::with_capacity(topics.topics.len());
    for t in &topics.topics {
        if t.terms.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "topic '{}' has fewer than 2 terms",
                t.category
            )));
        }
        let row = t
            .terms
            .iter()
            .map(|w| vocab.id(w).ok_or_else(|| Error::TermNotInCorpus(w.clone())))
            .collect::<Result<Vec<_>>>()?;
        ids.push(row);
    }
    if ids.is_empty() {
        return Err(Error::InvalidConfig("no topics".into()));
    }
    let all: Vec<WordId> = ids.iter().flatten().copied().collect();
    let sets = document_sets(corpus, &all);
    for (t, row) in topics.topics.iter().zip(&ids) {
        for (term, id) in t.terms.iter().zip(row) {
            if sets[id].is_empty() {
                return Err(Error::TermNotInCorpus(term.clone()));
            }
        }
    }
    let n_docs = corpus.doc_count();
    let mut total = F::zero();
    for row in &ids {
        let mut sum = F::zero();
        let mut pairs = 0usize;
        for i in 0..row.len() {
            for j in i + 1..row.len() {
                let (a, b) = (&sets[&row[i]], &sets[&row[j]]);
                sum += npmi::<F>(a.len(), b.len(), intersection_size(a, b), n_docs);
                pairs += 1;
            }
        }
        total += sum / F::from_usize(pairs).unwrap();
    }
    Ok(total / F::from_usize(ids.len()).unwrap())
}

/// Judged membership of `(category, term)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Labels {
    judgments: HashMap<(String, String), bool>,
}

impl Labels {
    pub fn insert(&mut self, category: &str, term: &str, belongs: bool) {
        self.judgments
            .insert((category.to_owned(), term.to_owned()), belongs);
    }

    pub fn get(&self, category: &str, term: &str) -> Option<bool> {
        self.judgments
            .get(&(category.to_owned(), term.to_owned()))
            .copied()
    }

    /// Parse `category<TAB>term<TAB>0|1` lines.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut labels = Labels::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [cat, term, flag] = fields[..] else {
                return Err(Error::parse(path, i + 1, "expected category<TAB>term<TAB>0|1"));
            };
            let belongs = match flag {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::parse(path, i + 1, format!("label must be 0 or 1, got '{other}'")))
                }
            };
            labels.insert(cat, term, belongs);
        }
        Ok(labels)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Mean over categories of the fraction of terms judged to belong.
pub fn mean_accuracy(topics: &TopicSet, labels: &Labels) -> Result<f64> {
    let mut gaps = Vec::new();
    let mut total = 0.0;
    let mut n = 0usize;
    for t in &topics.topics {
        if t.terms.is_empty() {
            continue;
        }
        let mut hits = 0usize;
        for term in &t.terms {
            match labels.get(&t.category, term) {
                Some(true) => hits += 1,
                Some(false) => {}
                None => gaps.push(format!("{}/{}", t.category, term)),
            }
        }
        total += hits as f64 / t.terms.len() as f64;
        n += 1;
    }
    if !gaps.is_empty() {
        return Err(Error::MissingLabels(gaps));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("no terms to score".into()));
    }
    Ok(total / n as f64)
}

/// A hyponym/hypernym pair; the gold hypernym is `hypernym`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntailmentPair {
    pub hyponym: String,
    pub hypernym: String,
}

impl EntailmentPair {
    pub fn new(hyponym: impl Into<String>, hypernym: impl Into<String>) -> Self {
        EntailmentPair {
            hyponym: hyponym.into(),
            hypernym: hypernym.into(),
        }
    }
}

/// Parse `hyponym<TAB>hypernym` lines.
pub fn parse_pairs(text: &str, path: &Path) -> Result<Vec<EntailmentPair>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected hyponym<TAB>hypernym"))?;
        let (a, b) = (a.trim().to_lowercase(), b.trim().to_lowercase());
        if a == b {
            return Err(Error::parse(path, i + 1, "pair members must differ"));
        }
        pairs.push(EntailmentPair::new(a, b));
    }
    Ok(pairs)
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<EntailmentPair>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs(&text, path)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    /// The named word is predicted to be the hypernym.
    Hypernym(String),
    Undecided,
}

/// The word with the smaller κ is the more general one, hence the hypernym.
///
/// Returns `None` if either word is out of vocabulary.
pub fn entailment_direction<F: Scalar>(
    a: &str,
    b: &str,
    kappa: &[F],
    vocab: &Vocabulary,
) -> Option<Direction> {
    let ka = kappa[vocab.id(a)?];
    let kb = kappa[vocab.id(b)?];
    Some(if ka < kb {
        Direction::Hypernym(a.to_owned())
    } else if kb < ka {
        Direction::Hypernym(b.to_owned())
    } else {
        Direction::Undecided
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EntailmentReport {
    pub total: usize,
    pub evaluated: usize,
    pub correct: usize,
    pub undecided: usize,
    pub skipped_oov: usize,
    /// `None` when every pair was skipped.
    pub accuracy: Option<f64>,
    /// Fraction of pairs with both words in vocabulary.
    pub coverage: f64,
}

pub fn entailment_accuracy<F: Scalar>(
    pairs: &[EntailmentPair],
    kappa: &[F],
    vocab: &Vocabulary,
) -> EntailmentReport {
    let mut r = EntailmentReport {
        total: pairs.len(),
        ..Default::default()
    };
    for p in pairs {
        match entailment_direction(&p.hyponym, &p.hypernym, kappa, vocab) {
            None => r.skipped_oov += 1,
            Some(dir) => {
                r.evaluated += 1;
                match dir {
                    Direction::Hypernym(w) if w == p.hypernym => r.correct += 1,
                    Direction::Hypernym(_) => {}
                    Direction::Undecided => r.undecided += 1,
                }
            }
        }
    }
    if r.evaluated > 0 {
        r.accuracy = Some(r.correct as f64 / r.evaluated as f64);
    }
    r.coverage = if r.total == 0 {
        0.0
    } else {
        r.evaluated as f64 / r.total as f64
    };
    r
}

/// Evaluate a `hyponym<TAB>hypernym` file.
pub fn entailment_accuracy_file<F: Scalar>(
    path: impl AsRef<Path>,
    kappa: &[F],
    vocab: &Vocabulary,
) -> Result<EntailmentReport> {
    let pairs = read_pairs(path)?;
    if pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    Ok(entailment_accuracy(&pairs, kappa, vocab))
}

/// JSON metrics report; absent metrics are omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entailment_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(flatten, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}
