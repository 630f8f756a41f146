//! Category representative word selection.
//!
//! A candidate `w` for category `c` must be strictly more specific than the
//! category name (`κ_w > κ_name`) and not already selected. Among those, the
//! word minimizing `rank_sim(w, c) · rank_spec(w)` wins, where `rank_sim`
//! orders by cosine similarity to the category vector (high first) and
//! `rank_spec` orders by κ (low first). Ranks are taken over the feasible set.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{Vocabulary, WordId};
use crate::embedding::EmbeddingState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default band multipliers of the coarse-to-fine presentation.
pub const DEFAULT_BAND_MULTIPLIERS: [f64; 4] = [1.0, 1.25, 1.5, 1.75];

/// Words eligible for retrieval: frequent enough and not a category name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidatePool {
    words: Vec<WordId>,
}

impl CandidatePool {
    pub fn from_words(mut words: Vec<WordId>) -> Result<Self> {
        words.sort_unstable();
        words.dedup();
        if words.is_empty() {
            return Err(Error::EmptyPool(0));
        }
        Ok(CandidatePool { words })
    }

    pub fn words(&self) -> &[WordId] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: WordId) -> bool {
        self.words.binary_search(&w).is_ok()
    }
}

pub fn candidate_pool(
    vocab: &Vocabulary,
    category_names: &[WordId],
    min_count_retrieval: u64,
) -> Result<CandidatePool> {
    let words: Vec<WordId> = (0..vocab.len())
        .filter(|&w| vocab.count(w) >= min_count_retrieval && !category_names.contains(&w))
        .collect();
    if words.is_empty() {
        return Err(Error::EmptyPool(min_count_retrieval));
    }
    Ok(CandidatePool { words })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate<F> {
    pub word: WordId,
    pub sim: F,
    pub kappa: F,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankedCandidate<F> {
    pub word: WordId,
    pub sim: F,
    pub kappa: F,
    /// 1-based rank by similarity, descending.
    pub rank_sim: usize,
    /// 1-based rank by κ, ascending.
    pub rank_spec: usize,
}

impl<F> RankedCandidate<F> {
    pub fn rank_product(&self) -> u64 {
        self.rank_sim as u64 * self.rank_spec as u64
    }
}

fn cmp_f<F: Scalar>(a: F, b: F) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Rank every candidate; ties in either key are broken by word id.
pub fn rank_candidates<F: Scalar>(cands: &[Candidate<F>]) -> Vec<RankedCandidate<F>> {
    let n = cands.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rank_sim = vec![0; n];
    let mut rank_spec = vec![0; n];

    order.sort_by(|&a, &b| {
        cmp_f(cands[b].sim, cands[a].sim).then(cands[a].word.cmp(&cands[b].word))
    });
    for (r, &i) in order.iter().enumerate() {
        rank_sim[i] = r + 1;
    }
    order.sort_by(|&a, &b| {
        cmp_f(cands[a].kappa, cands[b].kappa).then(cands[a].word.cmp(&cands[b].word))
    });
    for (r, &i) in order.iter().enumerate() {
        rank_spec[i] = r + 1;
    }
    cands
        .iter()
        .enumerate()
        .map(|(i, c)| RankedCandidate {
            word: c.word,
            sim: c.sim,
            kappa: c.kappa,
            rank_sim: rank_sim[i],
            rank_spec: rank_spec[i],
        })
        .collect()
}

/// Apply the rank-product rule to candidates whose κ exceeds `kappa_threshold`.
///
/// Returns `None` when no candidate is more specific than the threshold.
pub fn select_by_rank_product<F: Scalar>(
    cands: &[Candidate<F>],
    kappa_threshold: F,
) -> Option<RankedCandidate<F>> {
    let feasible: Vec<Candidate<F>> = cands
        .iter()
        .copied()
        .filter(|c| c.kappa > kappa_threshold)
        .collect();
    rank_candidates(&feasible).into_iter().min_by(|a, b| {
        a.rank_product()
            .cmp(&b.rank_product())
            .then(a.rank_sim.cmp(&b.rank_sim))
            .then(a.word.cmp(&b.word))
    })
}

/// Similarity and κ of every pool word not rejected by `excluded`.
pub fn candidates_for<F: Scalar>(
    state: &EmbeddingState<F>,
    category: usize,
    pool: &CandidatePool,
    excluded: impl Fn(WordId) -> bool,
) -> Vec<Candidate<F>> {
    pool.words()
        .iter()
        .copied()
        .filter(|&w| !excluded(w))
        .map(|w| Candidate {
            word: w,
            sim: state.category_similarity(w, category),
            kappa: state.kappa[w],
        })
        .collect()
}

/// Pick the next representative word of `category`, whose name token is `name`.
///
/// `excluded` rejects words already selected (for this or any other category).
pub fn select_representative<F: Scalar>(
    state: &EmbeddingState<F>,
    vocab: &Vocabulary,
    category: usize,
    name: WordId,
    pool: &CandidatePool,
    excluded: impl Fn(WordId) -> bool,
) -> Result<RankedCandidate<F>> {
    let cands = candidates_for(state, category, pool, |w| w == name || excluded(w));
    select_by_rank_product(&cands, state.kappa[name])
        .ok_or_else(|| Error::NoSpecificCandidate(vocab.word(name).to_owned()))
}

/// One κ band of the coarse-to-fine presentation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecificityBucket<F> {
    pub lower: F,
    /// `None` for the open top band.
    pub upper: Option<F>,
    /// Band words with their similarity, most similar first.
    pub words: Vec<(WordId, F)>,
}

impl<F: Scalar> SpecificityBucket<F> {
    pub fn contains(&self, kappa: F) -> bool {
        kappa > self.lower && self.upper.is_none_or(|u| kappa <= u)
    }
}

/// Group pool words into κ bands `(m_j κ_c, m_{j+1} κ_c]` plus `(m_last κ_c, ∞)`,
/// keeping the `top_m` most category-similar words of each band.
pub fn specificity_buckets<F: Scalar>(
    state: &EmbeddingState<F>,
    category: usize,
    name: WordId,
    pool: &CandidatePool,
    multipliers: &[f64],
    top_m: usize,
) -> Result<Vec<SpecificityBucket<F>>> {
    let kappa_c = state.kappa[name];
    if kappa_c <= F::zero() {
        return Err(Error::InvalidConfig(
            "category name has non-positive specificity".into(),
        ));
    }
    let mut buckets = band_edges(kappa_c, multipliers)?
        .into_iter()
        .map(|(lower, upper)| SpecificityBucket {
            lower,
            upper,
            words: Vec::new(),
        })
        .collect::<Vec<_>>();
    for c in candidates_for(state, category, pool, |w| w == name) {
        if let Some(b) = buckets.iter_mut().find(|b| b.contains(c.kappa)) {
            b.words.push((c.word, c.sim));
        }
    }
    for b in &mut buckets {
        b.words
            .sort_by(|x, y| cmp_f(y.1, x.1).then(x.0.cmp(&y.0)));
        b.words.truncate(top_m);
    }
    Ok(buckets)
}

/// Band boundaries for the given multipliers; the last band is open above.
pub fn band_edges<F: Scalar>(kappa_c: F, multipliers: &[f64]) -> Result<Vec<(F, Option<F>)>> {
    if multipliers.is_empty() {
        return Err(Error::InvalidConfig("no band multipliers".into()));
    }
    if multipliers.windows(2).any(|w| w[0] >= w[1]) || multipliers[0] <= 0.0 {
        return Err(Error::InvalidConfig(
            "band multipliers must be positive and strictly increasing".into(),
        ));
    }
    let edges: Vec<F> = multipliers.iter().map(|&m| F::of(m) * kappa_c).collect();
    Ok(edges
        .iter()
        .enumerate()
        .map(|(j, &lo)| (lo, edges.get(j + 1).copied()))
        .collect())
}

/// κ rounded half away from zero to three decimals.
pub fn fmt_kappa<F: Scalar>(k: F) -> String {
    format!("{:.3}", (k.to_f64_lossy() * 1000.0).round() / 1000.0)
}

/// A report section: category name, its κ and its bands.
pub struct BucketSection<'a, F> {
    pub category: &'a str,
    pub kappa_c: F,
    pub buckets: &'a [SpecificityBucket<F>],
}

/// Plain-text table, one section per category, one line per κ band.
pub fn format_bucket_report<F: Scalar>(sections: &[BucketSection<'_, F>], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (i, s) in sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{} (kappa_c = {})", s.category, fmt_kappa(s.kappa_c));
        for b in s.buckets {
            let range = match b.upper {
                Some(u) => format!("{} < kappa <= {}", fmt_kappa(b.lower), fmt_kappa(u)),
                None => format!("kappa > {}", fmt_kappa(b.lower)),
            };
            let words: Vec<&str> = b.words.iter().map(|&(w, _)| vocab.word(w)).collect();
            let line = format!("  {:<28}{}", range, words.join(", "));
            let _ = writeln!(out, "{}", line.trim_end());
        }
    }
    out
}
