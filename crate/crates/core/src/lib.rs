//! Finite-state transducers, bimachines and the synthetic task generators
//! built on them: pre-training corpora, generalization splits, prefix
//! encodings, probing metrics and prefix similarity.

pub mod bimachine;
pub mod encoding;
pub mod error;
pub mod fst;
pub mod io;
pub mod metrics;
pub mod par;
pub mod prefix;
pub mod sampling;
pub mod splits;
pub mod symbols;
pub mod walk;

pub use bimachine::{Bimachine, Dfa};
pub use encoding::{decode_fst, encode_fst, PrefixEncoding};
pub use error::{Error, Result};
pub use fst::{minimize, Fst, StateId, StateSequence, Transduction, Transition};
pub use par::Execution;
pub use symbols::{Symbol, SymbolTable};
