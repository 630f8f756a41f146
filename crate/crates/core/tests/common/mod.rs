//! Synthetic corpora with planted structure, shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct PlantedBlocks {
    pub docs: Vec<Vec<String>>,
    pub names: Vec<String>,
    /// Block index of every generated word.
    pub block_of: HashMap<String, usize>,
}

/// Two disjoint vocabulary blocks that never co-occur.
///
/// Inside a block, documents are about one of `subtopics` themes. Each block has
/// one root word present across all its themes (used as the category name), a
/// tier of mid-level words shared by several themes, and theme-specific words.
pub struct BlockSpec {
    pub n_docs: usize,
    pub doc_len: usize,
    pub subtopics: usize,
    pub specific_per_subtopic: usize,
    pub mid_words: usize,
    pub mids_per_subtopic: usize,
    pub p_root: f64,
    pub p_mid: f64,
}

impl Default for BlockSpec {
    fn default() -> Self {
        BlockSpec {
            n_docs: 2000,
            doc_len: 20,
            subtopics: 6,
            specific_per_subtopic: 8,
            mid_words: 12,
            mids_per_subtopic: 6,
            p_root: 0.1,
            p_mid: 0.2,
        }
    }
}

impl BlockSpec {
    pub fn words_per_block(&self) -> usize {
        1 + self.mid_words + self.subtopics * self.specific_per_subtopic
    }
}

pub fn planted_blocks(seed: u64, spec: &BlockSpec) -> PlantedBlocks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefixes = ["alpha", "beta"];
    let mut block_of = HashMap::new();
    let mut names = Vec::new();
    // per block: root, per-subtopic mid lists, per-subtopic specific lists
    let mut layout = Vec::new();
    for (b, p) in prefixes.iter().enumerate() {
        let root = format!("{p}");
        block_of.insert(root.clone(), b);
        names.push(root.clone());
        let mids: Vec<String> = (0..spec.mid_words).map(|m| format!("{p}_mid{m}")).collect();
        let mut mids_of = vec![Vec::new(); spec.subtopics];
        // each mid word is attached to `span` consecutive themes
        let span = spec.mids_per_subtopic * spec.subtopics / spec.mid_words;
        for (m, w) in mids.iter().enumerate() {
            for k in 0..span {
                mids_of[(m + k) % spec.subtopics].push(w.clone());
            }
            block_of.insert(w.clone(), b);
        }
        let specific: Vec<Vec<String>> = (0..spec.subtopics)
            .map(|s| {
                (0..spec.specific_per_subtopic)
                    .map(|j| {
                        let w = format!("{p}_t{s}_w{j}");
                        block_of.insert(w.clone(), b);
                        w
                    })
                    .collect()
            })
            .collect();
        layout.push((root, mids_of, specific));
    }
    let docs = (0..spec.n_docs)
        .map(|_| {
            let b = rng.random_range(0..prefixes.len());
            let (root, mids_of, specific) = &layout[b];
            let s = rng.random_range(0..spec.subtopics);
            (0..spec.doc_len)
                .map(|_| {
                    let r: f64 = rng.random();
                    if r < spec.p_root {
                        root.clone()
                    } else if r < spec.p_root + spec.p_mid && !mids_of[s].is_empty() {
                        mids_of[s].choose(&mut rng).unwrap().clone()
                    } else {
                        specific[s].choose(&mut rng).unwrap().clone()
                    }
                })
                .collect()
        })
        .collect();
    PlantedBlocks {
        docs,
        names,
        block_of,
    }
}

/// Fraction of each category's terms that fall in its name's block, averaged.
pub fn planted_macc(blocks: &PlantedBlocks, terms: &[Vec<String>]) -> f64 {
    let mut total = 0.0;
    for (cat, list) in terms.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let want = blocks.block_of[&blocks.names[cat]];
        let hits = list.iter().filter(|t| blocks.block_of.get(*t) == Some(&want)).count();
        total += hits as f64 / list.len() as f64;
    }
    total / terms.len() as f64
}

pub struct PlantedHierarchy {
    pub docs: Vec<Vec<String>>,
    /// (hyponym, hypernym)
    pub pairs: Vec<(String, String)>,
    pub parents: Vec<String>,
}

/// Parent words whose contexts are the union of their children's contexts.
///
/// Every child owns a pool of context words. A document picks one child; each
/// context token comes from that child's pool, or with probability `noise`
/// from the pooled context vocabulary of all children. Mentions name the child
/// or its parent, the parent with probability 1/3 of the child's share per
/// child so that parent and child token counts match in expectation. A
/// parent's context distribution is then the mixture of its children's.
pub fn planted_hierarchy(seed: u64, n_parents: usize, n_docs: usize) -> PlantedHierarchy {
    planted_hierarchy_with(seed, n_parents, n_docs, 0.5)
}

pub fn planted_hierarchy_with(seed: u64, n_parents: usize, n_docs: usize, noise: f64) -> PlantedHierarchy {
    let children_per_parent = 3;
    let pool_size = 8;
    let doc_len = 16;
    let mentions = 3;
    let parent_share = 1.0 / (1.0 + children_per_parent as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parents: Vec<String> = (0..n_parents).map(|p| format!("parent{p}")).collect();
    let mut children = Vec::new();
    for (p, parent) in parents.iter().enumerate() {
        for c in 0..children_per_parent {
            let child = format!("child{p}_{c}");
            let pool: Vec<String> = (0..pool_size).map(|k| format!("ctx{p}_{c}_{k}")).collect();
            children.push((child, parent.clone(), pool));
        }
    }
    let all_ctx: Vec<String> = children.iter().flat_map(|c| c.2.iter().cloned()).collect();
    let docs = (0..n_docs)
        .map(|_| {
            let (child, parent, pool) = children.choose(&mut rng).unwrap();
            let mut doc: Vec<String> = (0..doc_len)
                .map(|_| {
                    let from = if rng.random_bool(noise) { &all_ctx } else { pool };
                    from.choose(&mut rng).unwrap().clone()
                })
                .collect();
            for _ in 0..mentions {
                let w = if rng.random_bool(parent_share) { parent } else { child };
                let at = rng.random_range(0..=doc.len());
                doc.insert(at, w.clone());
            }
            doc
        })
        .collect();
    let pairs = children
        .iter()
        .map(|(c, p, _)| (c.clone(), p.clone()))
        .collect();
    PlantedHierarchy {
        docs,
        pairs,
        parents,
    }
}

/// Two target words `sharp` and `broad` whose contexts are drawn from a
/// discrete vMF over context words placed on S², with a shared mean direction
/// and concentrations `k_sharp > k_broad`. Filler documents around random
/// directions train the context words themselves.
pub fn vmf_contexts(seed: u64, n_docs: usize, k_sharp: f64, k_broad: f64) -> Vec<Vec<String>> {
    use rand_distr::{weighted::WeightedIndex, Distribution, StandardNormal};
    let n_ctx = 60;
    let doc_len = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.map(|x| x / n)
    };
    let dirs: Vec<[f64; 3]> = (0..n_ctx).map(|_| unit(&mut rng)).collect();
    let mu = unit(&mut rng);
    let sampler = |mean: &[f64; 3], k: f64| {
        WeightedIndex::new(dirs.iter().map(|x| (k * (x[0] * mean[0] + x[1] * mean[1] + x[2] * mean[2])).exp()))
            .unwrap()
    };
    let sharp = sampler(&mu, k_sharp);
    let broad = sampler(&mu, k_broad);
    (0..n_docs)
        .map(|i| {
            let (target, dist) = match i % 3 {
                0 => (Some("sharp"), sharp.clone()),
                1 => (Some("broad"), broad.clone()),
                _ => (None, sampler(&unit(&mut rng), 4.0)),
            };
            let mut doc: Vec<String> = (0..doc_len).map(|_| format!("ctx{}", dist.sample(&mut rng))).collect();
            if let Some(t) = target {
                for _ in 0..2 {
                    let at = rng.random_range(0..=doc.len());
                    doc.insert(at, t.to_owned());
                }
            }
            doc
        })
        .collect()
}

/// Documents drawn from a fixed Zipf-like table over `n_types` word types.
pub fn zipf_docs(seed: u64, n_docs: usize, doc_len: usize, n_types: usize) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (1..=n_types).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let cdf: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect();
    (0..n_docs)
        .map(|_| {
            (0..doc_len)
                .map(|_| {
                    let r: f64 = rng.random();
                    let i = cdf.partition_point(|&c| c < r).min(n_types - 1);
                    format!("w{i}")
                })
                .collect()
        })
        .collect()
}

/// Embedding training alone, without category supervision.
pub fn train_plain(
    docs: &[Vec<String>],
    config: &cate::TrainConfig,
    min_count: u64,
) -> (cate::EmbeddingState<f64>, cate::Vocabulary) {
    use cate::embedding::{init_state, train_pass, LinearDecay, TopicLabels};
    let vocab = cate::Vocabulary::build(docs, min_count).unwrap();
    let corpus = cate::encode(docs, &vocab);
    let table = cate::NegativeTable::new(&vocab, config.negative_power).unwrap();
    let mut state = init_state(vocab.len(), corpus.doc_count(), 1, config).unwrap();
    let labels = TopicLabels::new(vocab.len());
    let schedule = LinearDecay::for_run(config, &corpus);
    for pass in 0..config.max_iter {
        train_pass(&mut state, &corpus, &labels, &table, config, &schedule, pass).unwrap();
    }
    (state, vocab)
}

pub mod fd {
    use cate::embedding::sgd::{global_gradient, global_loss, local_gradient, local_loss, topic_gradient, topic_loss};
    use cate::embedding::{init_state, EmbeddingState, Rows, TrainConfig};
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub const EPS: f64 = 1e-5;

    #[derive(Clone, Copy)]
    pub enum Block {
        U,
        V,
        D,
        C,
    }

    fn rows(s: &mut EmbeddingState<f64>, b: Block) -> &mut Rows<f64> {
        match b {
            Block::U => &mut s.u,
            Block::V => &mut s.v,
            Block::D => &mut s.d,
            Block::C => &mut s.c,
        }
    }

    /// ‖a - b‖ / max(‖a‖, ‖b‖), with a floor for vanishing gradients.
    pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        diff / na.max(nb).max(1e-8)
    }

    fn numeric_row(
        state: &EmbeddingState<f64>,
        block: Block,
        row: usize,
        loss: &dyn Fn(&EmbeddingState<f64>) -> f64,
    ) -> Vec<f64> {
        let mut s = state.clone();
        let dim = s.dim();
        (0..dim)
            .map(|i| {
                let x = rows(&mut s, block).row(row)[i];
                rows(&mut s, block).row_mut(row)[i] = x + EPS;
                let up = loss(&s);
                rows(&mut s, block).row_mut(row)[i] = x - EPS;
                let down = loss(&s);
                rows(&mut s, block).row_mut(row)[i] = x;
                (up - down) / (2.0 * EPS)
            })
            .collect()
    }

    fn numeric_kappa(state: &EmbeddingState<f64>, w: usize, loss: &dyn Fn(&EmbeddingState<f64>) -> f64) -> f64 {
        let mut s = state.clone();
        let k = s.kappa[w];
        s.kappa[w] = k + EPS;
        let up = loss(&s);
        s.kappa[w] = k - EPS;
        let down = loss(&s);
        (up - down) / (2.0 * EPS)
    }

    struct Setup {
        state: EmbeddingState<f64>,
        rng: ChaCha8Rng,
    }

    fn setup(seed: u64, n_cats: usize) -> Setup {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = TrainConfig {
            dim: rng.random_range(2..=16),
            seed,
            ..TrainConfig::default()
        };
        let vocab = rng.random_range(8..30);
        let docs = rng.random_range(8..30);
        let mut state = init_state(vocab, docs, n_cats, &cfg).unwrap();
        for k in state.kappa.iter_mut() {
            *k = rng.random_range(0.05..6.0);
        }
        Setup { state, rng }
    }

    /// Largest relative error over every parameter block of one random local step.
    pub fn local(seed: u64) -> f64 {
        neg_sampling(seed, Block::V, |s, w, t, n| local_loss(s, w, t, n), |s, w, t, n| {
            local_gradient(s, w, t, n)
        })
    }

    pub fn global(seed: u64) -> f64 {
        neg_sampling(seed, Block::D, |s, w, t, n| global_loss(s, w, t, n), |s, w, t, n| {
            global_gradient(s, w, t, n)
        })
    }

    fn neg_sampling(
        seed: u64,
        target_block: Block,
        loss: impl Fn(&EmbeddingState<f64>, usize, usize, &[usize]) -> f64,
        grad: impl Fn(&EmbeddingState<f64>, usize, usize, &[usize]) -> cate::embedding::sgd::NegSamplingGradient<f64>,
    ) -> f64 {
        let Setup { state, mut rng } = setup(seed, 2);
        let n_targets = match target_block {
            Block::D => state.doc_count(),
            _ => state.vocab_size(),
        };
        let word = rng.random_range(0..state.vocab_size());
        let k = rng.random_range(1..=5);
        // distinct targets so each row gets exactly one gradient term
        let ids = sample(&mut rng, n_targets, k + 1).into_vec();
        let (pos, negs) = (ids[0], &ids[1..]);
        let f = |s: &EmbeddingState<f64>| loss(s, word, pos, negs);
        let g = grad(&state, word, pos, negs);
        let mut worst = rel_error(&g.source, &numeric_row(&state, Block::U, word, &f));
        for (id, ga) in ids.iter().zip(&g.targets) {
            worst = worst.max(rel_error(ga, &numeric_row(&state, target_block, *id, &f)));
        }
        worst.max(rel_error(&[g.kappa], &[numeric_kappa(&state, word, &f)]))
    }

    pub fn topic(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let n_cats = rng.random_range(2..=6);
        let Setup { state, mut rng } = setup(seed, n_cats);
        let word = rng.random_range(0..state.vocab_size());
        let label = rng.random_range(0..n_cats);
        let f = |s: &EmbeddingState<f64>| topic_loss(s, word, label);
        let g = topic_gradient(&state, word, label);
        let mut worst = rel_error(&g.word, &numeric_row(&state, Block::U, word, &f));
        for (j, gc) in g.categories.iter().enumerate() {
            worst = worst.max(rel_error(gc, &numeric_row(&state, Block::C, j, &f)));
        }
        worst
    }
}

/// Independent reference for the representative-word rule.
pub mod pools {
    use cate::embedding::{init_state, EmbeddingState, TrainConfig};
    use cate::Vocabulary;

    /// Exhaustive rule: rank the feasible words, then scan for the smallest
    /// (product, rank_sim, id) triple.
    pub fn brute_force(cands: &[(usize, f64, f64)], threshold: f64) -> Option<usize> {
        let feasible: Vec<_> = cands.iter().filter(|c| c.2 > threshold).collect();
        let mut best: Option<(usize, usize, usize)> = None;
        for a in &feasible {
            let rank_sim = 1 + feasible
                .iter()
                .filter(|b| b.1 > a.1 || (b.1 == a.1 && b.0 < a.0))
                .count();
            let rank_spec = 1 + feasible
                .iter()
                .filter(|b| b.2 < a.2 || (b.2 == a.2 && b.0 < a.0))
                .count();
            let key = (rank_sim * rank_spec, rank_sim, a.0);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        best.map(|b| b.2)
    }

    pub fn state_with(sims_kappa: &[(f64, f64)], seed: u64) -> EmbeddingState<f64> {
        let cfg = TrainConfig {
            dim: 3,
            seed,
            ..TrainConfig::default()
        };
        let mut s = init_state(sims_kappa.len(), 2, 1, &cfg).unwrap();
        s.c.row_mut(0).copy_from_slice(&[1.0, 0.0, 0.0]);
        for (w, &(sim, k)) in sims_kappa.iter().enumerate() {
            let r = (1.0 - sim * sim).sqrt();
            s.u.row_mut(w).copy_from_slice(&[sim, r, 0.0]);
            s.kappa[w] = k;
        }
        s
    }

    pub fn vocab_of(n: usize) -> Vocabulary {
        Vocabulary::from_entries((0..n).map(|i| (format!("w{i}"), (100 - i) as u64)).collect(), 1).unwrap()
    }
}
