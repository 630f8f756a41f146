//! Single SGD steps for the three objective terms.
//!
//! The local and global terms use a negative-sampling surrogate of the
//! κ-scaled softmax: with score `s(x) = κ_w · (u_w · t_x)` the loss is
//! `-log σ(s(pos)) - Σ_neg log σ(-s(neg))`. The category term is the exact
//! cross-entropy of the category softmax. Gradients are evaluated at the
//! current parameters, applied, and the touched rows projected back onto the
//! unit sphere.

use crate::error::{Error, Result, StepKind};
use crate::scalar::{dot, normalize, sigmoid, softplus, Scalar};

use super::state::{EmbeddingState, Rows};

/// Analytic gradient of a negative-sampling loss, before any update is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct NegSamplingGradient<F> {
    pub loss: F,
    /// d loss / d u_w
    pub source: Vec<F>,
    /// d loss / d t_x for the positive target followed by each negative, in order.
    pub targets: Vec<Vec<F>>,
    /// d loss / d κ_w
    pub kappa: F,
}

/// Analytic gradient of the category cross-entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicGradient<F> {
    pub loss: F,
    /// d loss / d u_w
    pub word: Vec<F>,
    /// d loss / d c_j, one row per category.
    pub categories: Vec<Vec<F>>,
}

/// Reusable scratch buffers for the training hot loop.
#[derive(Clone, Debug, Default)]
pub struct Sgd<F> {
    grad_u: Vec<F>,
    u_old: Vec<F>,
    coef: Vec<F>,
    logits: Vec<F>,
}

impl<F: Scalar> Sgd<F> {
    pub fn new(dim: usize) -> Self {
        Sgd {
            grad_u: vec![F::zero(); dim],
            u_old: vec![F::zero(); dim],
            coef: Vec::new(),
            logits: Vec::new(),
        }
    }

    /// Fills `grad_u`, `coef` (dL/ds per target) and returns `(loss, dL/dκ)`.
    fn neg_sampling(
        &mut self,
        source: &[F],
        kappa: F,
        targets: &Rows<F>,
        positive: usize,
        negatives: &[usize],
    ) -> (F, F) {
        let p = source.len();
        self.grad_u.clear();
        self.grad_u.resize(p, F::zero());
        self.coef.clear();
        let mut loss = F::zero();
        let mut grad_kappa = F::zero();
        let ids = std::iter::once((positive, true)).chain(negatives.iter().map(|&n| (n, false)));
        for (id, is_pos) in ids {
            let t = targets.row(id);
            let cos = dot(source, t);
            let s = kappa * cos;
            let g = if is_pos {
                loss += softplus(-s);
                sigmoid(s) - F::one()
            } else {
                loss += softplus(s);
                sigmoid(s)
            };
            grad_kappa += g * cos;
            let gk = g * kappa;
            for (gu, &x) in self.grad_u.iter_mut().zip(t) {
                *gu += gk * x;
            }
            self.coef.push(g);
        }
        (loss, grad_kappa)
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_neg_sampling(
        &mut self,
        kind: StepKind,
        sources: &mut Rows<F>,
        targets: &mut Rows<F>,
        kappa: &mut [F],
        kappa_min: F,
        word: usize,
        positive: usize,
        negatives: &[usize],
        lr: F,
    ) -> Result<F> {
        let k = kappa[word];
        let (loss, grad_kappa) =
            self.neg_sampling(sources.row(word), k, targets, positive, negatives);
        let finite = loss.is_finite()
            && grad_kappa.is_finite()
            && self.grad_u.iter().all(|g| g.is_finite());
        if !finite {
            return Err(Error::Divergence {
                kind,
                word,
                target: positive,
                lr: lr.to_f64_lossy(),
            });
        }

        self.u_old.clear();
        self.u_old.extend_from_slice(sources.row(word));

        let ids = std::iter::once(positive).chain(negatives.iter().copied());
        for (id, &g) in ids.zip(&self.coef) {
            let scale = lr * g * k;
            let t = targets.row_mut(id);
            for (x, &u) in t.iter_mut().zip(&self.u_old) {
                *x -= scale * u;
            }
        }
        let u = sources.row_mut(word);
        for (x, &g) in u.iter_mut().zip(&self.grad_u) {
            *x -= lr * g;
        }
        normalize(u);
        normalize(targets.row_mut(positive));
        for &n in negatives {
            normalize(targets.row_mut(n));
        }
        kappa[word] = (k - lr * grad_kappa).max(kappa_min);
        Ok(loss)
    }

    /// One step on the local (word-context) term.
    pub fn local_step(
        &mut self,
        state: &mut EmbeddingState<F>,
        center: usize,
        context: usize,
        negatives: &[usize],
        lr: F,
    ) -> Result<F> {
        let EmbeddingState {
            u, v, kappa, kappa_min, ..
        } = state;
        self.apply_neg_sampling(
            StepKind::Local,
            u,
            v,
            kappa,
            *kappa_min,
            center,
            context,
            negatives,
            lr,
        )
    }

    /// One step on the global (word-document) term.
    pub fn global_step(
        &mut self,
        state: &mut EmbeddingState<F>,
        word: usize,
        doc: usize,
        negative_docs: &[usize],
        lr: F,
    ) -> Result<F> {
        let EmbeddingState {
            u, d, kappa, kappa_min, ..
        } = state;
        self.apply_neg_sampling(
            StepKind::Global,
            u,
            d,
            kappa,
            *kappa_min,
            word,
            doc,
            negative_docs,
            lr,
        )
    }

    /// Fills `coef` with `p_j - 1[j = label]` and returns the cross-entropy.
    fn topic(&mut self, word_vec: &[F], categories: &Rows<F>, label: usize) -> F {
        self.logits.clear();
        self.logits
            .extend(categories.iter_rows().map(|c| dot(c, word_vec)));
        let max = self.logits.iter().copied().fold(F::neg_infinity(), F::max);
        let z: F = self.logits.iter().map(|&l| (l - max).exp()).sum();
        let log_z = max + z.ln();
        let loss = log_z - self.logits[label];
        self.coef.clear();
        for (j, &l) in self.logits.iter().enumerate() {
            let p = (l - log_z).exp();
            self.coef
                .push(if j == label { p - F::one() } else { p });
        }
        loss
    }

    /// One step on the category term, scaled by `weight · lr`.
    pub fn topic_step(
        &mut self,
        state: &mut EmbeddingState<F>,
        word: usize,
        label: usize,
        lr: F,
        weight: F,
    ) -> Result<F> {
        let loss = self.topic(state.u.row(word), &state.c, label);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                kind: StepKind::Topic,
                word,
                target: label,
                lr: lr.to_f64_lossy(),
            });
        }
        let step = lr * weight;
        self.u_old.clear();
        self.u_old.extend_from_slice(state.u.row(word));
        let u = state.u.row_mut(word);
        for (j, &g) in self.coef.iter().enumerate() {
            let c = state.c.row(j);
            for (x, &cj) in u.iter_mut().zip(c) {
                *x -= step * g * cj;
            }
        }
        normalize(u);
        for (j, &g) in self.coef.iter().enumerate() {
            let c = state.c.row_mut(j);
            for (x, &uw) in c.iter_mut().zip(&self.u_old) {
                *x -= step * g * uw;
            }
            normalize(c);
        }
        Ok(loss)
    }
}

fn neg_sampling_gradient<F: Scalar>(
    source: &[F],
    kappa: F,
    targets: &Rows<F>,
    positive: usize,
    negatives: &[usize],
) -> NegSamplingGradient<F> {
    let mut sgd = Sgd::new(source.len());
    let (loss, grad_kappa) = sgd.neg_sampling(source, kappa, targets, positive, negatives);
    let ids = std::iter::once(positive).chain(negatives.iter().copied());
    let targets = ids
        .zip(&sgd.coef)
        .map(|(_, &g)| source.iter().map(|&x| g * kappa * x).collect())
        .collect();
    NegSamplingGradient {
        loss,
        source: sgd.grad_u,
        targets,
        kappa: grad_kappa,
    }
}

fn neg_sampling_loss<F: Scalar>(
    source: &[F],
    kappa: F,
    targets: &Rows<F>,
    positive: usize,
    negatives: &[usize],
) -> F {
    let pos = softplus(-kappa * dot(source, targets.row(positive)));
    negatives
        .iter()
        .fold(pos, |acc, &n| acc + softplus(kappa * dot(source, targets.row(n))))
}

/// Surrogate loss of the local term at the current parameters.
pub fn local_loss<F: Scalar>(
    state: &EmbeddingState<F>,
    center: usize,
    context: usize,
    negatives: &[usize],
) -> F {
    neg_sampling_loss(state.u.row(center), state.kappa[center], &state.v, context, negatives)
}

pub fn local_gradient<F: Scalar>(
    state: &EmbeddingState<F>,
    center: usize,
    context: usize,
    negatives: &[usize],
) -> NegSamplingGradient<F> {
    neg_sampling_gradient(state.u.row(center), state.kappa[center], &state.v, context, negatives)
}

/// Surrogate loss of the global term at the current parameters.
pub fn global_loss<F: Scalar>(
    state: &EmbeddingState<F>,
    word: usize,
    doc: usize,
    negative_docs: &[usize],
) -> F {
    neg_sampling_loss(state.u.row(word), state.kappa[word], &state.d, doc, negative_docs)
}

pub fn global_gradient<F: Scalar>(
    state: &EmbeddingState<F>,
    word: usize,
    doc: usize,
    negative_docs: &[usize],
) -> NegSamplingGradient<F> {
    neg_sampling_gradient(state.u.row(word), state.kappa[word], &state.d, doc, negative_docs)
}

/// Cross-entropy `-log p(label | word)` under the category softmax.
pub fn topic_loss<F: Scalar>(state: &EmbeddingState<F>, word: usize, label: usize) -> F {
    Sgd::new(state.dim()).topic(state.u.row(word), &state.c, label)
}

pub fn topic_gradient<F: Scalar>(
    state: &EmbeddingState<F>,
    word: usize,
    label: usize,
) -> TopicGradient<F> {
    let mut sgd = Sgd::new(state.dim());
    let u = state.u.row(word);
    let loss = sgd.topic(u, &state.c, label);
    let mut grad_u = vec![F::zero(); u.len()];
    let mut categories = Vec::with_capacity(sgd.coef.len());
    for (j, &g) in sgd.coef.iter().enumerate() {
        for (gu, &c) in grad_u.iter_mut().zip(state.c.row(j)) {
            *gu += g * c;
        }
        categories.push(u.iter().map(|&x| g * x).collect());
    }
    TopicGradient {
        loss,
        word: grad_u,
        categories,
    }
}

/// Category posterior `p(c_j | w)`: softmax over `c_j · u_w`.
pub fn category_posterior<F: Scalar>(state: &EmbeddingState<F>, word: usize) -> Vec<F> {
    let u = state.u.row(word);
    let logits: Vec<F> = state.c.iter_rows().map(|c| dot(c, u)).collect();
    softmax(&logits)
}

pub(crate) fn softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Allocating form of [`Sgd::local_step`].
pub fn local_step<F: Scalar>(
    state: &mut EmbeddingState<F>,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: F,
) -> Result<F> {
    Sgd::new(state.dim()).local_step(state, center, context, negatives, lr)
}

/// Allocating form of [`Sgd::global_step`].
pub fn global_step<F: Scalar>(
    state: &mut EmbeddingState<F>,
    word: usize,
    doc: usize,
    negative_docs: &[usize],
    lr: F,
) -> Result<F> {
    Sgd::new(state.dim()).global_step(state, word, doc, negative_docs, lr)
}

/// Allocating form of [`Sgd::topic_step`].
pub fn topic_step<F: Scalar>(
    state: &mut EmbeddingState<F>,
    word: usize,
    label: usize,
    lr: F,
    weight: F,
) -> Result<F> {
    Sgd::new(state.dim()).topic_step(state, word, label, lr, weight)
}
