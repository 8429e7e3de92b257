//! Bias-aware demonstration search for few-shot prompts.
//!
//! The crate measures how biased a prompt is by probing it with
//! content-free input and reading off how far the model's label
//! distribution is from uniform. On top of that metric it searches
//! demonstration subsets and orders: an exhaustive oracle, a top-k pick of
//! individually fair demonstrations, and a greedy head-insertion search.

pub mod analysis;
pub mod backend;
pub mod calibration;
pub mod context;
pub mod error;
pub mod fairness;
pub mod prompt;
pub mod search;

pub use context::PromptContext;
pub use error::{Error, ErrorClass, Result};
