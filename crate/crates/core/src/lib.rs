//! Category-guided discriminative topic mining.
//!
//! Given a corpus and a handful of category names, jointly trains spherical
//! word, document and category embeddings together with a per-word
//! distributional specificity κ, then grows each category's set of
//! representative terms one word per iteration.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choice.

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod io;
pub mod miner;
pub mod retrieval;
pub mod scalar;

pub use corpus::{
    build_vocabulary, decode, encode, DocId, EncodedCorpus, NegativeTable, Vocabulary, WordId,
};
pub use embedding::{EmbeddingState, TrainConfig, TrainMode};
pub use error::{Error, Result};
pub use eval::{MetricsReport, TopicSet};
pub use io::Checkpoint;
pub use miner::{mine, mine_documents, MineConfig, MiningResult, MiningRun, SeedSets};
pub use scalar::Scalar;

/// Default scalar for training and evaluation.
pub type Real = f64;

pub type State = EmbeddingState<Real>;
pub type State32 = EmbeddingState<f32>;
pub type State64 = EmbeddingState<f64>;

pub type Run = MiningRun<Real>;
pub type Run32 = MiningRun<f32>;

pub type ModelCheckpoint = Checkpoint<Real>;
