//! Decision sessions: one pass from entering a quality situation to retaining
//! the resulting case.
//!
//! ```text
//! Created -> SituationEntered -> AutoRecommended -> ScenarioSelected
//!                             \                 \-> ManualRequired
//!                              -> ManualRequired -> ManualEvaluated -> ScenarioSelected
//!                                                                  \-> ManualRequired
//! ScenarioSelected -> Applied -> ResultsRecorded -> Closed
//! ```

mod catalog;
mod session;

pub use catalog::{ControlScenario, ScenarioCatalog};
pub use session::{
    CloseOutcome, ConsistencyCheck, ConsistencyPolicy, DecisionSession, ManualEvaluation,
    ReviewPeriod, SessionId, SessionRegistry, SessionState, SubmitOutcome, ThresholdChange,
    Transition,
};

use thiserror::Error;

use crate::cbr::CbrError;
use crate::mcdm::McdmError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkflowError {
    #[error("cannot {action} a session in state {from}")]
    IllegalTransition {
        from: SessionState,
        action: &'static str,
    },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario `{0}` already exists")]
    DuplicateScenario(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("session {0} not found")]
    UnknownSession(SessionId),
    #[error("judgments for {criterion} are inconsistent (CR = {ratio:.3} > {threshold})")]
    Inconsistent {
        criterion: String,
        ratio: f64,
        threshold: f64,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Cbr(#[from] CbrError),
    #[error(transparent)]
    Mcdm(#[from] McdmError),
}
