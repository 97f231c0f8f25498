//! Sequence-to-sequence variational autoencoder over SMILES tokens with
//! manual backpropagation.

mod checkpoint;
mod linalg;
mod model;
mod params;
mod sample;
mod train;
mod vocab;

pub use checkpoint::{digest, from_bytes, load_checkpoint, load_checkpoint_for, save_checkpoint, to_bytes, FORMAT_VERSION, MAGIC};
pub use linalg::{softmax, Matrix};
pub use model::{decode_logits, elbo_grad, elbo_loss, encode, kl_divergence, reparameterize, Loss, LOGVAR_MAX, LOGVAR_MIN};
pub use params::{ModelDims, VaeParams};
pub use sample::{greedy_decode, sample};
pub use train::{evaluate, finetune, train, EpochLoss, TrainConfig, TrainResult};
pub use vocab::{Vocabulary, BOS, EOS, PAD, VOCAB_SIZE};

#[derive(Debug, thiserror::Error)]
pub enum VaeError {
    #[error("unknown character {character:?} at position {position}")]
    UnknownCharacter { character: char, position: usize },
    #[error("sequence of {len} tokens exceeds maximum length {max_len}")]
    TooLong { len: usize, max_len: usize },
    #[error("token index {token} at position {position} is outside the vocabulary")]
    OutOfVocabulary { token: usize, position: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("non-finite loss or parameters in epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error("checkpoint shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
