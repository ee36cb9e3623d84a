use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::situation::{Objectives, QualitySituation};
use super::CbrError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseId(pub u64);

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Identifier of a control scenario, e.g. `S2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScenarioId(pub String);

impl ScenarioId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ScenarioId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Process operation and product characteristic a situation refers to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseContext {
    #[serde(default)]
    pub operation: String,
    #[serde(default)]
    pub characteristic: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Chosen by the decision maker through the multi-criteria evaluation.
    Manual,
    /// Recommended from a similar source case and accepted.
    Automatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Provisional,
    Satisfactory,
    Failed,
}

/// Where an automatic solution came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalProvenance {
    pub source_case: CaseId,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: CaseId,
    #[serde(default)]
    pub context: CaseContext,
    pub situation: QualitySituation,
    pub scenario_id: ScenarioId,
    pub objectives: Objectives,
    #[serde(default)]
    pub observed: Option<QualitySituation>,
    pub origin: Origin,
    pub status: CaseStatus,
    /// Set for automatic cases.
    #[serde(default)]
    pub retrieval: Option<RetrievalProvenance>,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub closed_at: Option<DateTime<Utc>>,
}

impl Case {
    /// A provisional case; its id is assigned on retention.
    pub fn provisional(
        context: CaseContext,
        situation: QualitySituation,
        scenario_id: ScenarioId,
        objectives: Objectives,
        origin: Origin,
        created_at: DateTime<Utc>,
    ) -> Self {
        Self {
            id: CaseId(0),
            context,
            situation,
            scenario_id,
            objectives,
            observed: None,
            origin,
            status: CaseStatus::Provisional,
            retrieval: None,
            created_at,
            closed_at: None,
        }
    }

    pub fn validate(&self) -> Result<(), CbrError> {
        self.situation.validate()?;
        if let Some(observed) = &self.observed {
            observed.validate()?;
        }
        if self.status != CaseStatus::Provisional && self.observed.is_none() {
            return Err(CbrError::MissingObserved(self.id));
        }
        if self.scenario_id.0.trim().is_empty() {
            return Err(CbrError::Integrity(format!(
                "case {} has an empty scenario id",
                self.id
            )));
        }
        if let Some(r) = &self.retrieval {
            if !(r.distance.is_finite() && r.distance >= 0.0) {
                return Err(CbrError::Integrity(format!(
                    "case {} has an invalid retrieval distance {}",
                    self.id, r.distance
                )));
            }
        }
        Ok(())
    }

    pub fn is_retrievable(&self) -> bool {
        self.status == CaseStatus::Satisfactory
    }
}

/// Retained cases in retention order. Ids strictly increase.
///
/// Retrievals only read; retention is serialized by the caller.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Case>", into = "Vec<Case>")]
pub struct CaseBase {
    cases: Vec<Case>,
}

impl CaseBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a base from stored cases, checking every invariant.
    pub fn from_cases(cases: Vec<Case>) -> Result<Self, CbrError> {
        for (i, case) in cases.iter().enumerate() {
            if case.id.0 == 0 {
                return Err(CbrError::Integrity(format!(
                    "case at position {} has no id",
                    i + 1
                )));
            }
            if let Some(prev) = i.checked_sub(1).map(|p| &cases[p]) {
                if case.id == prev.id {
                    return Err(CbrError::Integrity(format!(
                        "duplicate case id {}",
                        case.id
                    )));
                }
                if case.id < prev.id {
                    return Err(CbrError::Integrity(format!(
                        "case ids out of order: {} after {}",
                        case.id, prev.id
                    )));
                }
            }
            if case.status == CaseStatus::Provisional {
                return Err(CbrError::NotClosed {
                    id: case.id,
                    status: case.status,
                });
            }
            case.validate()?;
        }
        Ok(Self { cases })
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn get(&self, id: CaseId) -> Option<&Case> {
        self.cases
            .binary_search_by_key(&id, |c| c.id)
            .ok()
            .map(|i| &self.cases[i])
    }

    pub fn next_id(&self) -> CaseId {
        CaseId(self.cases.last().map_or(1, |c| c.id.0 + 1))
    }

    /// Appends a closed case under the next id and returns that id. Existing
    /// cases are never touched.
    pub fn retain(&mut self, mut case: Case) -> Result<CaseId, CbrError> {
        if case.status == CaseStatus::Provisional {
            return Err(CbrError::NotClosed {
                id: case.id,
                status: case.status,
            });
        }
        case.validate()?;
        let id = self.next_id();
        case.id = id;
        self.cases.push(case);
        Ok(id)
    }
}

impl TryFrom<Vec<Case>> for CaseBase {
    type Error = CbrError;

    fn try_from(cases: Vec<Case>) -> Result<Self, Self::Error> {
        Self::from_cases(cases)
    }
}

impl From<CaseBase> for Vec<Case> {
    fn from(base: CaseBase) -> Self {
        base.cases
    }
}
