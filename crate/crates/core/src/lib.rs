//! Cross-lingual sequence labeling by back-attention knowledge transfer.
//!
//! A frozen source-language BiLSTM-CRF tagger is run over the translation of
//! every low-resource sentence. Its BiLSTM states are carried back onto the
//! original tokens through the translation attention (`T = A R`) and
//! concatenated with the target tagger's own BiLSTM states in front of a
//! linear-chain CRF.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, checkpoints and
//! the command line live in the `ban` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attention;
pub mod corpus;
pub mod crf;
mod error;
pub mod eval;
pub mod gradcheck;
pub mod numerics;
pub mod seqmodel;
pub mod source_model;
pub mod synthetic;
pub mod training;
pub mod transfer;

pub use error::{Error, Result};
pub use numerics::{Matrix, Rng};
