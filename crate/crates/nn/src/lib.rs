//! A small, fully deterministic neural network engine for 3D shape
//! classification. Two families share one decomposition: a latent
//! translation stage, a pooling step onto a fixed-width latent vector, and
//! a dense head. Everything runs in f32 with pinned operation order, so a
//! seed reproduces training bit for bit and max-pool ties are meaningful.

mod io;
mod model;
mod point;
mod spec;
mod tensor;
mod train;
mod volum;
mod weights;

pub use io::{load_model, save_model};
pub use model::{argmax_lowest, softmax, ConvTrace, ForwardTrace, Model, ModelInput, Prediction};
pub use spec::{ConvStage, ModelSpec};
pub use tensor::Tensor;
pub use train::{accuracy, dataset_inputs, loss_and_grads, train, BatchEval, EpochStats, TrainConfig, TrainLog};
pub use weights::Weights;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bad architecture: {0}")]
    BadSpec(String),

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("bad input: {0}")]
    BadInput(String),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("weights file {path}: {msg}")]
    WeightsFormat { path: String, msg: String },

    #[error("I/O on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Shapes(#[from] iso3d_shapes::Error),
}
