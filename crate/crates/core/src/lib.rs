//! Toolkit for building and evaluating evidence-conditioned claim
//! verification datasets from sectioned clinical-style reports.
//!
//! The core object is a labeled verifier row: a case, a claim about one
//! concept's state, and an evidence package drawn from per-concept pools.
//! Rows fall into four categories: gold-state support (C, positive),
//! opposite-state support (D), and paired non-support rows with the claim
//! present (A) and absent (B). Around that sit evidence interventions
//! (remove, swap, held-out redraw, prefix truncation), channel-masked
//! scoring, threshold selection, bootstrap uncertainty, paired condition
//! comparison, and decision policies, all orchestrated by a deterministic,
//! resumable pipeline.
//!
//! Every random choice flows from named seeds through stable hashing, so
//! identical configs and inputs reproduce identical artifacts byte for byte.
//! The `parallel` feature (on by default) runs data-parallel loops on a
//! thread pool; disabling it yields a fully sequential build with identical
//! outputs.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod evidence;
pub mod exec;
pub mod fixture;
pub mod hashing;
pub mod interventions;
pub mod io;
pub mod pipeline;
pub mod registry;
pub mod scoring;
pub mod supervision;
pub mod synth;
pub mod text;

pub use error::{Error, ErrorKind, Result};
