//! Retraction impact analysis over citation corpora.
//!
//! The crate ingests bibliographic records, detects retracted papers, builds
//! matched treatment/control cohorts for six kinds of retracted or related
//! entities and tests whether post-retraction impact differs. Topic-level
//! effects are screened with a Granger-causality F-test. A synthetic corpus
//! generator with planted effects serves as ground truth for the whole
//! pipeline.

pub mod annotation;
pub mod cli;
pub mod cohort;
pub mod corpus;
pub mod error;
pub mod impact;
pub mod report;
pub mod stats;
pub mod synth;
pub mod topics;

pub use error::{Error, Result};
