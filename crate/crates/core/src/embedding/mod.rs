//! Model parameters and their optimization.

pub mod sgd;
pub mod state;
pub mod train;
pub mod vmf;

pub use sgd::{
    category_posterior, global_gradient, global_loss, global_step, local_gradient, local_loss,
    local_step, topic_gradient, topic_loss, topic_step, NegSamplingGradient, Sgd, TopicGradient,
};
pub use state::{init_state, EmbeddingState, Rows, TrainConfig, TrainMode, DEFAULT_KAPPA_MIN};
pub use train::{train_pass, LinearDecay, PassStats, TopicLabels};
pub use vmf::{ln_bessel_i_half_order, vmf_log_density, vmf_log_normalizer};
