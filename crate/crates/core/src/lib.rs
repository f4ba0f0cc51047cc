//! Computational core for web and routing analytics: CP decomposition of
//! update tensors with event extraction and betweenness-based localization,
//! similarity-driven seeded discovery, naive Bayes framing detection, and
//! graph-Laplacian semi-supervised and transfer sentiment classification.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod corpus;
pub mod discovery;
pub mod error;
pub mod events;
pub mod io;
pub mod locate;
pub mod numerics;
pub mod par;
pub mod sentiment;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
