//! Analytics toolkit for hackathon project corpora.
//!
//! The crate ingests JSONL snapshots of hackathons, projects, participants
//! and cloned repositories, then derives creativity-oriented measures:
//!
//! - [`corpus`]: domain model, snapshot loading, cross-reference validation
//!   and the preprocessing funnel.
//! - [`imports`]: import extraction for Python, Node.js, Java, C# and PHP
//!   plus non-code data profiling of repository trees.
//! - [`novelty`]: per-year package co-occurrence atypicality via a
//!   degree-preserving Monte-Carlo null model and log-smoothed z-scores.
//! - [`collab`]: collaboration accumulators, weighted-winning scores, team
//!   interest/skill features and competition ratios.
//! - [`classify`]: usefulness flags, the creative/non-creative label and the
//!   regression-ready feature table.
//! - [`stats`]: correlations plus fixed-effects and random-intercept
//!   logistic regression with marginal/conditional R².
//! - [`agreement`]: score bucketing, Cohen's kappa and Fleiss' kappa.
//! - [`judge`]: rubric prompts, chat-endpoint jury execution, score parsing
//!   and embedding-based description distances.
//! - [`pipeline`]: end-to-end orchestration with a reproducible manifest.

pub mod agreement;
pub mod classify;
pub mod collab;
pub mod corpus;
pub mod imports;
pub mod jsonl;
pub mod judge;
pub mod novelty;
pub mod pipeline;
pub mod rng;
pub mod stats;
