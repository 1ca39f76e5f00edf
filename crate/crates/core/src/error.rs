use thiserror::Error;

use crate::annotation::AnnotationError;
use crate::cohort::CohortError;
use crate::corpus::CorpusError;
use crate::impact::ImpactError;
use crate::stats::StatsError;
use crate::synth::SynthError;
use crate::topics::TopicsError;

/// Crate-level error. Each variant carries the module that raised it so the
/// CLI can attribute failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("annotation: {0}")]
    Annotation(#[from] AnnotationError),
    #[error("impact: {0}")]
    Impact(#[from] ImpactError),
    #[error("cohort: {0}")]
    Cohort(#[from] CohortError),
    #[error("stats: {0}")]
    Stats(#[from] StatsError),
    #[error("topics: {0}")]
    Topics(#[from] TopicsError),
    #[error("synth: {0}")]
    Synth(#[from] SynthError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report: {0}")]
    Report(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
