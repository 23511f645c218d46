//! The end-to-end autoencoder: one small encoder per user whose masked
//! outputs are superposed, passed through gain and AWGN, and decoded by a
//! shared network. After training the encoders are read out as codebooks.

mod masks;
mod model;
mod train;

pub use masks::{make_dcma_masks, DcmaMasks};
pub use model::{
    ae_forward, build_autoencoder, AeForward, AeGradients, Autoencoder, EncoderArch, NoiseSource,
    StructureReport,
};
pub use train::{train_autoencoder, AeEpochStats, AeHyper, AeOutcome, CoverageReport};
