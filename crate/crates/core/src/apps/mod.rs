//! Downstream uses of the residual: polarity detection from differenced
//! skewness, and the deterministic excitation component from PCA over
//! GCI-synchronous residual frames.

pub mod dsm;
pub mod polarity;

pub use dsm::{extract_residual_frames, pca, pulse_concentration, EigenModel, ResidualFrames};
pub use polarity::{
    detect_polarity, glottal_approximation, PolarityConfig, PolarityVerdict,
    POLARITY_SIGN_CONVENTION,
};
