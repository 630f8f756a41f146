//! The mining driver: alternate training passes with one representative-word
//! selection per category, starting from the category names alone.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, EncodedCorpus, NegativeTable, Vocabulary, WordId};
use crate::embedding::{
    train_pass, EmbeddingState, LinearDecay, PassStats, TopicLabels, TrainConfig,
};
use crate::error::{Error, Result};
use crate::retrieval::{candidate_pool, select_representative, CandidatePool};
use crate::scalar::Scalar;

/// Everything `mine` needs besides its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MineConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub min_count: u64,
    /// Minimum count for retrieval candidates; `None` means `min_count`.
    pub min_count_retrieval: Option<u64>,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            train: TrainConfig::default(),
            min_count: 5,
            min_count_retrieval: None,
        }
    }
}

impl MineConfig {
    pub fn min_count_retrieval(&self) -> u64 {
        self.min_count_retrieval.unwrap_or(self.min_count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Name,
    Retrieved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub word: WordId,
    pub origin: Origin,
    /// Iteration (1-based) the word was retrieved in; 0 for the category name.
    pub iteration: usize,
}

/// Per-category ordered representative-word sets, pairwise disjoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSets {
    sets: Vec<Vec<SeedEntry>>,
}

impl SeedSets {
    /// One set per category, each holding just the category name.
    pub fn from_names(names: &[WordId]) -> Result<Self> {
        let distinct: HashSet<_> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(Error::InvalidConfig("duplicate category name".into()));
        }
        Ok(SeedSets {
            sets: names
                .iter()
                .map(|&w| {
                    vec![SeedEntry {
                        word: w,
                        origin: Origin::Name,
                        iteration: 0,
                    }]
                })
                .collect(),
        })
    }

    pub fn n_categories(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, category: usize) -> &[SeedEntry] {
        &self.sets[category]
    }

    pub fn name(&self, category: usize) -> WordId {
        self.sets[category][0].word
    }

    pub fn contains(&self, word: WordId) -> bool {
        self.sets.iter().flatten().any(|e| e.word == word)
    }

    /// Category whose set contains `word`.
    pub fn owner(&self, word: WordId) -> Option<usize> {
        self.sets
            .iter()
            .position(|s| s.iter().any(|e| e.word == word))
    }

    pub fn push(&mut self, category: usize, word: WordId, iteration: usize) -> Result<()> {
        if self.contains(word) {
            return Err(Error::InvalidConfig(format!(
                "word {word} already belongs to a seed set"
            )));
        }
        self.sets[category].push(SeedEntry {
            word,
            origin: Origin::Retrieved,
            iteration,
        });
        Ok(())
    }

    pub fn labels(&self, vocab_size: usize) -> TopicLabels {
        let ids: Vec<Vec<WordId>> = self
            .sets
            .iter()
            .map(|s| s.iter().map(|e| e.word).collect())
            .collect();
        TopicLabels::from_sets(vocab_size, &ids)
    }
}

/// A retrieved term with the values it was selected under.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopicTerm {
    pub term: String,
    pub iteration: usize,
    pub kappa: f64,
    pub similarity: f64,
    /// κ of the category name at selection time.
    pub name_kappa: f64,
    pub rank_sim: usize,
    pub rank_spec: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryTopic {
    pub category: String,
    pub terms: Vec<TopicTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionLog {
    pub category: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub stats: PassStats,
    pub selections: Vec<SelectionLog>,
}

/// Final topics (category names excluded), the config they came from and a
/// per-iteration log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MiningResult {
    pub topics: Vec<CategoryTopic>,
    pub config: MineConfig,
    pub log: Vec<IterationLog>,
}

impl MiningResult {
    /// Term lists per category, in selection order.
    pub fn term_lists(&self) -> Vec<Vec<String>> {
        self.topics
            .iter()
            .map(|t| t.terms.iter().map(|x| x.term.clone()).collect())
            .collect()
    }

    /// `category<TAB>term1,term2,...` per line.
    pub fn topics_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.topics {
            let terms: Vec<&str> = t.terms.iter().map(|x| x.term.as_str()).collect();
            let _ = writeln!(out, "{}\t{}", t.category, terms.join(","));
        }
        out
    }

    /// One line per retrieved term with its κ and cosine similarity to the category.
    pub fn details_tsv(&self) -> String {
        let mut out = String::from(
            "category\trank\tterm\tkappa\tsimilarity\tcategory_kappa\titeration\trank_sim\trank_spec\n",
        );
        for t in &self.topics {
            for (i, x) in t.terms.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}",
                    t.category,
                    i + 1,
                    x.term,
                    x.kappa,
                    x.similarity,
                    x.name_kappa,
                    x.iteration,
                    x.rank_sim,
                    x.rank_spec
                );
            }
        }
        out
    }

    pub fn log_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.log)?)
    }
}

/// Result of a mining run together with the trained model it came from.
#[derive(Clone, Debug)]
pub struct MiningRun<F> {
    pub result: MiningResult,
    pub state: EmbeddingState<F>,
    pub vocab: Vocabulary,
    pub corpus: EncodedCorpus,
    pub seeds: SeedSets,
    pub category_names: Vec<String>,
}

/// Mine topics from a corpus file (one document per line).
pub fn mine<F: Scalar>(
    corpus_path: impl AsRef<Path>,
    category_names: &[String],
    config: &MineConfig,
) -> Result<MiningRun<F>> {
    let docs = corpus::read_corpus(corpus_path)?;
    mine_documents(&docs, category_names, config)
}

/// Mine topics from already tokenized documents.
pub fn mine_documents<F: Scalar, D: AsRef<[T]>, T: AsRef<str>>(
    docs: &[D],
    category_names: &[String],
    config: &MineConfig,
) -> Result<MiningRun<F>> {
    config.train.validate()?;
    if category_names.is_empty() {
        return Err(Error::InvalidConfig("no category names".into()));
    }
    let vocab = Vocabulary::build(
        docs.iter().map(|d| d.as_ref().iter().map(|t| t.as_ref())),
        config.min_count,
    )?;
    let names: Vec<String> = category_names.iter().map(|n| n.to_lowercase()).collect();
    let name_ids = names
        .iter()
        .map(|n| vocab.id(n).ok_or_else(|| Error::MissingCategory(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    let corpus = corpus::encode(
        docs.iter().map(|d| d.as_ref().iter().map(|t| t.as_ref())),
        &vocab,
    );
    info!(
        "vocabulary {} words, {} documents, {} tokens",
        vocab.len(),
        corpus.doc_count(),
        corpus.token_count()
    );
    let table = NegativeTable::new(&vocab, config.train.negative_power)?;
    let pool = candidate_pool(&vocab, &name_ids, config.min_count_retrieval())?;
    let mut seeds = SeedSets::from_names(&name_ids)?;
    let mut state =
        EmbeddingState::<F>::init(vocab.len(), corpus.doc_count(), names.len(), &config.train)?;

    let result = run_iterations(
        &mut state, &vocab, &corpus, &table, &pool, &mut seeds, &names, config,
    )?;
    Ok(MiningRun {
        result,
        state,
        vocab,
        corpus,
        seeds,
        category_names: names,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_iterations<F: Scalar>(
    state: &mut EmbeddingState<F>,
    vocab: &Vocabulary,
    corpus: &EncodedCorpus,
    table: &NegativeTable,
    pool: &CandidatePool,
    seeds: &mut SeedSets,
    names: &[String],
    config: &MineConfig,
) -> Result<MiningResult> {
    let train = &config.train;
    let schedule = LinearDecay::for_run(train, corpus);
    let mut topics: Vec<CategoryTopic> = names
        .iter()
        .map(|n| CategoryTopic {
            category: n.clone(),
            terms: Vec::new(),
        })
        .collect();
    let mut log = Vec::with_capacity(train.max_iter);

    for iteration in 1..=train.max_iter {
        let labels = seeds.labels(vocab.len());
        let stats = train_pass(state, corpus, &labels, table, train, &schedule, iteration - 1)?;
        debug!(
            "iteration {iteration}: local {:.4} global {:.4} topic {:.4}",
            stats.local_loss, stats.global_loss, stats.topic_loss
        );

        let mut selections = Vec::with_capacity(names.len());
        for (cat, name) in names.iter().enumerate() {
            let name_id = seeds.name(cat);
            let picked = select_representative(state, vocab, cat, name_id, pool, |w| {
                seeds.contains(w)
            });
            match picked {
                Ok(r) => {
                    seeds.push(cat, r.word, iteration)?;
                    let term = vocab.word(r.word).to_owned();
                    topics[cat].terms.push(TopicTerm {
                        term: term.clone(),
                        iteration,
                        kappa: r.kappa.to_f64_lossy(),
                        similarity: r.sim.to_f64_lossy(),
                        name_kappa: state.kappa[name_id].to_f64_lossy(),
                        rank_sim: r.rank_sim,
                        rank_spec: r.rank_spec,
                    });
                    selections.push(SelectionLog {
                        category: name.clone(),
                        term: Some(term),
                        error: None,
                    });
                }
                Err(e) => {
                    warn!("iteration {iteration}, category {name}: {e}");
                    selections.push(SelectionLog {
                        category: name.clone(),
                        term: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
        log.push(IterationLog {
            iteration,
            stats,
            selections,
        });
    }

    Ok(MiningResult {
        topics,
        config: config.clone(),
        log,
    })
}
