use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm, normalize, Scalar};

/// Lower bound κ is clamped to after every update.
pub const DEFAULT_KAPPA_MIN: f64 = 1e-3;

/// Dense row-major matrix; one parameter vector per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Rows<F> {
    data: Vec<F>,
    dim: usize,
}

impl<F: Scalar> Rows<F> {
    pub fn zeros(n_rows: usize, dim: usize) -> Self {
        Rows {
            data: vec![F::zero(); n_rows * dim],
            dim,
        }
    }

    pub fn from_vec(data: Vec<F>, dim: usize) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::InvalidConfig(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        Ok(Rows { data, dim })
    }

    fn random_unit<R: rand::Rng>(n_rows: usize, dim: usize, rng: &mut R) -> Self {
        let mut rows = Self::zeros(n_rows, dim);
        for r in 0..n_rows {
            let row = rows.row_mut(r);
            loop {
                for x in row.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *x = F::of(z);
                }
                if norm(row) > F::zero() {
                    break;
                }
            }
            normalize(row);
        }
        rows
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn n_rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn normalize_rows(&mut self) {
        for row in self.data.chunks_exact_mut(self.dim) {
            normalize(row);
        }
    }

    /// Largest `| ‖row‖ - 1 |` over all rows.
    pub fn max_norm_deviation(&self) -> F {
        self.iter_rows()
            .map(|r| (norm(r) - F::one()).abs())
            .fold(F::zero(), F::max)
    }
}

/// How a training pass schedules its updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum TrainMode {
    /// One worker, bitwise reproducible for a fixed seed.
    #[default]
    Deterministic,
    /// Lock-free shared updates from several workers; unit norms are restored at pass end.
    Parallel { threads: usize },
}

/// Hyperparameters of the embedding objective and its optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub max_iter: usize,
    pub initial_lr: f64,
    /// Weight λ of the category (topic) term.
    pub topic_weight: f64,
    pub seed: u64,
    pub kappa_min: f64,
    pub negative_power: f64,
    pub mode: TrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            max_iter: 10,
            initial_lr: 0.025,
            topic_weight: 1.0,
            seed: 0,
            kappa_min: DEFAULT_KAPPA_MIN,
            negative_power: crate::corpus::DEFAULT_NEGATIVE_POWER,
            mode: TrainMode::Deterministic,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.dim < 2 {
            return bad("dim must be >= 2 (the unit sphere is degenerate below that)");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be >= 1");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be >= 1");
        }
        if !(self.initial_lr.is_finite() && self.initial_lr > 0.0) {
            return bad("initial_lr must be a positive finite number");
        }
        if !(self.topic_weight.is_finite() && self.topic_weight >= 0.0) {
            return bad("topic_weight must be finite and >= 0");
        }
        if !(self.kappa_min.is_finite() && self.kappa_min >= 0.0) {
            return bad("kappa_min must be finite and >= 0");
        }
        if let TrainMode::Parallel { threads } = self.mode {
            if threads == 0 {
                return bad("threads must be >= 1");
            }
        }
        Ok(())
    }
}

/// All model parameters: input/output word vectors, document vectors,
/// category vectors (every row on the unit sphere) and per-word specificity κ.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingState<F> {
    pub u: Rows<F>,
    pub v: Rows<F>,
    pub d: Rows<F>,
    pub c: Rows<F>,
    pub kappa: Vec<F>,
    pub kappa_min: F,
}

impl<F: Scalar> EmbeddingState<F> {
    /// Random unit rows from the config's seed and κ = 1 for every word.
    pub fn init(
        vocab_size: usize,
        doc_count: usize,
        n_categories: usize,
        config: &TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if vocab_size == 0 {
            return Err(Error::InvalidConfig("empty vocabulary".into()));
        }
        if n_categories == 0 {
            return Err(Error::InvalidConfig("at least one category required".into()));
        }
        let p = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let u = Rows::random_unit(vocab_size, p, &mut rng);
        let v = Rows::random_unit(vocab_size, p, &mut rng);
        let d = Rows::random_unit(doc_count, p, &mut rng);
        let c = Rows::random_unit(n_categories, p, &mut rng);
        Ok(EmbeddingState {
            u,
            v,
            d,
            c,
            kappa: vec![F::one(); vocab_size],
            kappa_min: F::of(config.kappa_min),
        })
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn vocab_size(&self) -> usize {
        self.kappa.len()
    }

    pub fn doc_count(&self) -> usize {
        self.d.n_rows()
    }

    pub fn n_categories(&self) -> usize {
        self.c.n_rows()
    }

    /// Cosine similarity between a word's input vector and a category vector.
    /// Both are unit rows, so this is their dot product.
    pub fn category_similarity(&self, word: usize, category: usize) -> F {
        crate::scalar::dot(self.u.row(word), self.c.row(category))
    }

    pub fn normalize_all(&mut self) {
        self.u.normalize_rows();
        self.v.normalize_rows();
        self.d.normalize_rows();
        self.c.normalize_rows();
    }

    /// Largest deviation of any stored vector norm from 1.
    pub fn max_norm_deviation(&self) -> F {
        [&self.u, &self.v, &self.d, &self.c]
            .iter()
            .map(|m| m.max_norm_deviation())
            .fold(F::zero(), F::max)
    }
}

/// Free-function form of [`EmbeddingState::init`].
pub fn init_state<F: Scalar>(
    vocab_size: usize,
    doc_count: usize,
    n_categories: usize,
    config: &TrainConfig,
) -> Result<EmbeddingState<F>> {
    EmbeddingState::init(vocab_size, doc_count, n_categories, config)
}
