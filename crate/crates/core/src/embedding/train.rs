use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedCorpus, NegativeTable, WordId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::sgd::Sgd;
use super::state::{EmbeddingState, TrainConfig, TrainMode};

/// Fraction of the initial learning rate reached at the end of training.
pub const LR_FLOOR_FRACTION: f64 = 0.01;

/// Learning rate decaying linearly from `initial` to `initial / 100` over the
/// planned number of tokens.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearDecay {
    initial: f64,
    total_tokens: u64,
}

impl LinearDecay {
    pub fn new(initial: f64, total_tokens: u64) -> Self {
        LinearDecay {
            initial,
            total_tokens: total_tokens.max(1),
        }
    }

    /// Schedule covering `config.max_iter` passes over `corpus`.
    pub fn for_run(config: &TrainConfig, corpus: &EncodedCorpus) -> Self {
        Self::new(
            config.initial_lr,
            (corpus.token_count() * config.max_iter) as u64,
        )
    }

    pub fn lr_at(&self, processed: u64) -> f64 {
        let progress = (processed as f64 / self.total_tokens as f64).min(1.0);
        self.initial * (1.0 - (1.0 - LR_FLOOR_FRACTION) * progress)
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }
}

/// Category label per word, derived from the seed sets: `Some(i)` when the word is in `S_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopicLabels {
    labels: Vec<Option<u32>>,
}

impl TopicLabels {
    pub fn new(vocab_size: usize) -> Self {
        TopicLabels {
            labels: vec![None; vocab_size],
        }
    }

    pub fn from_sets<S: AsRef<[WordId]>>(vocab_size: usize, sets: &[S]) -> Self {
        let mut labels = Self::new(vocab_size);
        for (i, set) in sets.iter().enumerate() {
            for &w in set.as_ref() {
                labels.set(w, i);
            }
        }
        labels
    }

    pub fn set(&mut self, word: WordId, category: usize) {
        self.labels[word] = Some(category as u32);
    }

    #[inline]
    pub fn get(&self, word: WordId) -> Option<usize> {
        self.labels[word].map(|c| c as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.iter().all(Option::is_none)
    }
}

/// Mean losses and step counts of one pass.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PassStats {
    pub tokens: u64,
    pub local_steps: u64,
    pub global_steps: u64,
    pub topic_steps: u64,
    pub local_loss: f64,
    pub global_loss: f64,
    pub topic_loss: f64,
    pub final_lr: f64,
}

#[derive(Default)]
struct Accum {
    tokens: u64,
    local: (u64, f64),
    global: (u64, f64),
    topic: (u64, f64),
    last_lr: f64,
}

impl Accum {
    fn merge(&mut self, o: Accum) {
        self.tokens += o.tokens;
        self.local.0 += o.local.0;
        self.local.1 += o.local.1;
        self.global.0 += o.global.0;
        self.global.1 += o.global.1;
        self.topic.0 += o.topic.0;
        self.topic.1 += o.topic.1;
        self.last_lr = self.last_lr.max(o.last_lr);
    }

    fn finish(self) -> PassStats {
        let mean = |(n, s): (u64, f64)| if n == 0 { 0.0 } else { s / n as f64 };
        PassStats {
            tokens: self.tokens,
            local_steps: self.local.0,
            global_steps: self.global.0,
            topic_steps: self.topic.0,
            local_loss: mean(self.local),
            global_loss: mean(self.global),
            topic_loss: mean(self.topic),
            final_lr: self.last_lr,
        }
    }
}

fn pass_seed(seed: u64, pass: usize, worker: usize) -> u64 {
    seed ^ (pass as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (worker as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

struct Worker<'a, F> {
    corpus: &'a EncodedCorpus,
    labels: &'a TopicLabels,
    table: &'a NegativeTable,
    config: &'a TrainConfig,
    schedule: &'a LinearDecay,
    progress: &'a AtomicU64,
    rng: ChaCha8Rng,
    sgd: Sgd<F>,
    negs: Vec<usize>,
}

impl<F: Scalar> Worker<'_, F> {
    fn run(&mut self, state: &mut EmbeddingState<F>, docs: std::ops::Range<usize>) -> Result<Accum> {
        let mut acc = Accum::default();
        let h = self.config.window;
        let k = self.config.negatives;
        let n_docs = self.corpus.doc_count();
        let weight = F::of(self.config.topic_weight);
        let topic_on = self.config.topic_weight > 0.0;
        for doc_id in docs {
            let doc = &self.corpus.documents()[doc_id];
            for (i, &center) in doc.iter().enumerate() {
                let processed = self.progress.fetch_add(1, Ordering::Relaxed);
                let lr_f = self.schedule.lr_at(processed);
                let lr = F::of(lr_f);
                acc.last_lr = lr_f;
                acc.tokens += 1;

                let lo = i.saturating_sub(h);
                let hi = (i + h + 1).min(doc.len());
                for (j, &context) in doc.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    self.negs.clear();
                    for _ in 0..k {
                        self.negs.push(self.table.sample_unchecked(&mut self.rng, context));
                    }
                    let loss = self.sgd.local_step(state, center, context, &self.negs, lr)?;
                    acc.local.0 += 1;
                    acc.local.1 += loss.to_f64_lossy();
                }

                // no negative documents exist in a single-document corpus
                if n_docs >= 2 {
                    self.negs.clear();
                    for _ in 0..k {
                        let neg = loop {
                            let d = self.rng.random_range(0..n_docs);
                            if d != doc_id {
                                break d;
                            }
                        };
                        self.negs.push(neg);
                    }
                    let loss = self.sgd.global_step(state, center, doc_id, &self.negs, lr)?;
                    acc.global.0 += 1;
                    acc.global.1 += loss.to_f64_lossy();
                }

                if topic_on {
                    if let Some(label) = self.labels.get(center) {
                        let loss = self.sgd.topic_step(state, center, label, lr, weight)?;
                        acc.topic.0 += 1;
                        acc.topic.1 += loss.to_f64_lossy();
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// Shares one state between hogwild workers.
struct SharedState<F>(*mut EmbeddingState<F>);

// SAFETY: workers write to the same parameter buffers without synchronization.
// The buffers are never resized during a pass, so every pointer stays valid;
// concurrent element updates may be lost, which hogwild SGD tolerates.
unsafe impl<F: Send> Send for SharedState<F> {}
unsafe impl<F: Send> Sync for SharedState<F> {}

/// One full pass over the corpus.
///
/// For every token: a local step against each context inside the window
/// (truncated at document boundaries), a global step against its document,
/// and a category step when the token is in some seed set. `pass` is the
/// zero-based pass index, used to position the learning-rate schedule and to
/// seed the sampler.
pub fn train_pass<F: Scalar>(
    state: &mut EmbeddingState<F>,
    corpus: &EncodedCorpus,
    labels: &TopicLabels,
    table: &NegativeTable,
    config: &TrainConfig,
    schedule: &LinearDecay,
    pass: usize,
) -> Result<PassStats> {
    config.validate()?;
    if table.len() < 2 {
        return Err(Error::NoNegatives);
    }
    if state.vocab_size() != table.len() || state.doc_count() != corpus.doc_count() {
        return Err(Error::InvalidConfig(
            "state shape does not match corpus".into(),
        ));
    }
    let start = (pass * corpus.token_count()) as u64;
    let progress = AtomicU64::new(start);
    let dim = state.dim();
    let worker = |w: usize| Worker {
        corpus,
        labels,
        table,
        config,
        schedule,
        progress: &progress,
        rng: ChaCha8Rng::seed_from_u64(pass_seed(config.seed, pass, w)),
        sgd: Sgd::new(dim),
        negs: Vec::with_capacity(config.negatives),
    };

    match config.mode {
        TrainMode::Deterministic | TrainMode::Parallel { threads: 1 } => {
            let mut wk = worker(0);
            let acc = wk.run(state, 0..corpus.doc_count())?;
            Ok(acc.finish())
        }
        TrainMode::Parallel { threads } => {
            let n = corpus.doc_count();
            let threads = threads.min(n.max(1));
            let chunk = n.div_ceil(threads);
            let mut workers: Vec<_> = (0..threads).map(worker).collect();
            let shared = SharedState(state as *mut EmbeddingState<F>);
            let shared = &shared;
            let results: Vec<Result<Accum>> = std::thread::scope(|s| {
                let handles: Vec<_> = workers
                    .iter_mut()
                    .enumerate()
                    .map(|(t, wk)| {
                        let range = (t * chunk).min(n)..((t + 1) * chunk).min(n);
                        s.spawn(move || {
                            // SAFETY: see `SharedState`.
                            let state = unsafe { &mut *shared.0 };
                            wk.run(state, range)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            });
            state.normalize_all();
            let mut total = Accum::default();
            for r in results {
                total.merge(r?);
            }
            Ok(total.finish())
        }
    }
}
