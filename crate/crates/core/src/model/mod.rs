//! Dense-math core and the gated convolutional aspect classifier.
//!
//! Everything runs in `f64`. Gradients are derived by hand for the fixed
//! operation set of the classifier, so there is no tape or graph.

mod adam;
mod checkpoint;
mod gcae;
mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, load_checkpoint_matching, save_checkpoint, FORMAT_VERSION, MAGIC};
pub use gcae::{
    cross_entropy, encode_batch, softmax_backward, Example, Forward, Gcae, Mode, LOG_EPS,
};
pub use params::{init_params, reinit_head, ModelConfig, ParamSet};
pub use tensor::Tensor;
