//! Sparse linear prediction for speech: l2, weighted l2 and l1 solvers, the
//! maximum-phase (MaxP) residual, sparsity metrics, pitch and GCI tracking,
//! a synthetic mixed-phase signal generator and two residual applications.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod error;
pub mod lp;
pub mod maxp;
pub mod metrics;
pub mod pitch;
pub mod resample;
pub mod signal;
pub mod synth;
pub mod wav;

pub use error::{Error, Result};
pub use lp::LpModel;
pub use maxp::{analyze_utterance, maxp_analyze, MaxPConfig, MaxPResult, Method};
pub use signal::SampleBuffer;
