//! Pipeline crate: corpus and template IO, chat/embedding backends with
//! caching and retry, the external soundness-scorer protocol, resumable
//! stage orchestration, and report rendering. The pure algorithms live in
//! `tutorbench-core`.

pub mod backends;
pub mod config;
pub mod corpus_io;
pub mod export;
pub mod pipeline;
pub mod report;
pub mod scorer;
pub mod template_io;
