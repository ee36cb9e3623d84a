//! Case-based reasoning over process quality situations.
//!
//! A case pairs a quality situation (Cp, Cpk, NCR, ENCR) with the control
//! scenario applied to it, the objectives set for that scenario and, once the
//! review period is over, the observed results.

mod case;
mod retrieval;
mod revision;
mod situation;

pub use case::{
    Case, CaseBase, CaseContext, CaseId, CaseStatus, Origin, RetrievalProvenance, ScenarioId,
};
pub use retrieval::{
    adapt, distance, rank_cases, retrieve, Recommendation, RetrievalConfig, RetrievalResult,
};
pub use revision::{evaluate_outcome, revise, Outcome, RevisionAction};
pub use situation::{FieldViolation, Objectives, QualitySituation};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CbrError {
    #[error("validation failed: {}", format_violations(.0))]
    Validation(Vec<FieldViolation>),
    #[error("invalid retrieval configuration: {0}")]
    InvalidConfig(String),
    #[error("case {0} does not exist")]
    DanglingCase(CaseId),
    #[error("case {0} has no observed results")]
    MissingObserved(CaseId),
    #[error("automatic case {0} has no retrieval distance")]
    MissingRetrieval(CaseId),
    #[error("case {id} has status {status:?}; only satisfactory or failed cases can be retained")]
    NotClosed { id: CaseId, status: CaseStatus },
    #[error("case base integrity: {0}")]
    Integrity(String),
}

fn format_violations(v: &[FieldViolation]) -> String {
    v.iter()
        .map(|f| format!("{}: {}", f.field, f.message))
        .collect::<Vec<_>>()
        .join("; ")
}
