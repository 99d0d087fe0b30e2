//! Two-factor biometric authentication: iris codes and fingerprint minutiae
//! gated in sequence, with a file-backed template repository and audit log.
//!
//! The crate is organized bottom-up:
//!
//! - [`imaging`]: grayscale rasters, PGM I/O, interpolation, smoothing
//! - [`iris`]: localization, rubber-sheet normalization, Gabor phase codes
//! - [`matching`]: masked Hamming distance and threshold decisions
//! - [`fingerprint`]: binarization, thinning, minutiae, matching
//! - [`store`]: template files and the audit log
//! - [`authflow`]: enrollment and the two-stage authentication session
//! - [`eval`]: FAR/FRR threshold sweeps
//! - [`synth`]: seeded synthetic eyes and fingerprints

pub mod authflow;
pub mod bits;
pub mod eval;
pub mod fingerprint;
pub mod imaging;
pub mod iris;
pub mod matching;
pub mod pipeline;
pub mod store;
pub mod synth;

pub use imaging::GrayImage;
pub use pipeline::PipelineConfig;
