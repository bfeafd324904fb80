//! Concept-level completion and is-a probing on top of masked language models.
//!
//! The crate lifts a token-level fill-mask model to ranked *concepts*:
//! completions gathered across paraphrases of the input, reduced with PCA and
//! exact t-SNE, clustered under cosine distance and weighted by score and
//! repetition. It also measures how well a model's answers respect an is-a
//! hierarchy (retrieval, asymmetry, transitivity, property inheritance) and
//! scores ranked outputs against human annotations.
//!
//! All model access goes through [`backend::Backend`]; the
//! [`backend::FixtureStore`] transport replays recorded responses so every
//! computation here runs without a model.

pub mod backend;
pub mod clustering;
pub mod concepts;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod isa_probe;
pub mod pipeline;

pub use error::{Error, Result};
