use serde::{Deserialize, Serialize};

use super::case::{Case, Origin};
use super::retrieval::RetrievalConfig;
use super::situation::{Objectives, QualitySituation};
use super::CbrError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Satisfactory,
    Unsatisfactory,
}

/// Objectives are reached when capability is at or above target and
/// non-conformity at or below it, on all four indicators.
pub fn evaluate_outcome(observed: &QualitySituation, objectives: &Objectives) -> Outcome {
    let reached = observed.cp >= objectives.cp
        && observed.cpk >= objectives.cpk
        && observed.ncr <= objectives.ncr
        && observed.encr <= objectives.encr;
    if reached {
        Outcome::Satisfactory
    } else {
        Outcome::Unsatisfactory
    }
}

/// What to do with a case once its results are in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RevisionAction {
    RetainSatisfactory,
    /// Re-open the pairwise judgments of the manual evaluation.
    RepairManual,
    /// The source case was not similar enough: tighten the threshold.
    RepairThreshold {
        previous: f64,
        new_threshold: f64,
        failed_distance: f64,
    },
}

pub fn revise(
    case: &Case,
    outcome: Outcome,
    cfg: &RetrievalConfig,
) -> Result<RevisionAction, CbrError> {
    if case.observed.is_none() {
        return Err(CbrError::MissingObserved(case.id));
    }
    match (outcome, case.origin) {
        (Outcome::Satisfactory, _) => Ok(RevisionAction::RetainSatisfactory),
        (Outcome::Unsatisfactory, Origin::Manual) => Ok(RevisionAction::RepairManual),
        (Outcome::Unsatisfactory, Origin::Automatic) => {
            let failed = case
                .retrieval
                .ok_or(CbrError::MissingRetrieval(case.id))?
                .distance;
            let candidate = (1.0 - cfg.repair_margin) * failed;
            Ok(RevisionAction::RepairThreshold {
                previous: cfg.threshold,
                new_threshold: cfg.threshold.min(candidate).max(0.0),
                failed_distance: failed,
            })
        }
    }
}
