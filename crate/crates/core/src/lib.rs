//! Core algorithms for benchmarking the context-adaptivity of LLM tutoring
//! recommendations.
//!
//! The crate is `no_std` (with `alloc`) and holds everything that is pure
//! computation: the tutoring-scenario data model, single-component context
//! ablation, placeholder-template prompt rendering, the embedding-space
//! randomization test with bootstrap null and Cohen's d, instruction-following
//! format checks, proportion confidence intervals, and a small PCA for
//! diversity analysis.
//!
//! IO, HTTP backends, caching, and the pipeline CLI live in the companion
//! `tutorbench` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ablation;
pub mod analysis;
pub mod prompt;
pub mod quality;
pub mod scenario;
pub mod stats;

mod linalg;

#[cfg(test)]
pub mod testutil;

pub use ablation::{effective_context, generate_variants, ContextComponent, ScenarioVariant};
pub use scenario::{ChatTurn, Corpus, Speaker, TutoringScenario};
