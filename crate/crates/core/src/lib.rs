//! A desk-scale hybrid machine translation system: a phrase-based
//! statistical translator (IBM Model 1 alignment, Kneser-Ney language
//! model, stack decoding) whose output is post-edited by an LSTM
//! sequence-to-sequence model, plus the preprocessing and evaluation
//! machinery around both.

pub mod decoder;
pub mod error;
pub mod align;
pub mod lm;
pub mod metrics;
pub mod phrase;
pub mod pipeline;
pub mod seq2seq;
pub mod text;

pub use error::{Error, Result};
