//! Reference implementations of common stereo super-resolution building
//! blocks: parallax attention, stereo cross-attention, pixel shuffle,
//! weight-space ensembling, the training losses with analytic gradients and
//! stereo-consistent augmentation.
//!
//! These are numeric references, not a training framework. Everything runs
//! in `f64` on small inputs so results can be checked against brute-force
//! oracles and finite differences.

use alloc::string::String;

use thiserror::Error;

pub mod augment;
mod dft;
pub mod ensemble;
pub mod feature;
pub mod loss;
pub mod pam;
pub mod scam;
pub mod shuffle;

pub use augment::{augment, AugmentOp};
pub use ensemble::{ensemble_params, ModelParams};
pub use feature::FeatureMap;
pub use loss::{bp_loss, charbonnier_loss, fft_loss, l1_loss, total_loss, LossConfig, LossKind, Reduction};
pub use pam::{pam_forward, PamOutput};
pub use scam::{scam_forward, ScamParams};
pub use shuffle::{pixel_shuffle, pixel_unshuffle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),
    #[error("{channels} channels are not divisible by r^2 = {r2}")]
    ChannelsNotDivisible { channels: usize, r2: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("bad ensemble weights: {0}")]
    BadWeights(String),
    #[error("scale mismatch: {0}")]
    ScaleMismatch(String),
    #[error("unknown loss kind {0:?}")]
    UnknownKind(String),
    #[error("unsupported augmentation {0:?}")]
    UnsupportedOp(String),
    #[error("{0} needs a partner sample")]
    MissingPartner(&'static str),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
