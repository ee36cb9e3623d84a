use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::WorkflowError;
use crate::cbr::ScenarioId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlScenario {
    pub id: ScenarioId,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Free-form sampling plan settings (sample size, frequency, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, String>,
}

impl ControlScenario {
    pub fn new(id: &str, name: &str) -> Self {
        Self {
            id: ScenarioId::new(id),
            name: name.to_string(),
            description: String::new(),
            parameters: BTreeMap::new(),
        }
    }

    fn validate(&self) -> Result<(), WorkflowError> {
        if self.id.as_str().trim().is_empty() {
            return Err(WorkflowError::InvalidScenario(
                "scenario id is empty".into(),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(WorkflowError::InvalidScenario(format!(
                "scenario {} has an empty name",
                self.id
            )));
        }
        Ok(())
    }
}

/// Ordered set of control scenarios, unique by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ControlScenario>", into = "Vec<ControlScenario>")]
pub struct ScenarioCatalog {
    scenarios: Vec<ControlScenario>,
}

impl Default for ScenarioCatalog {
    /// The four scenarios of the reference deployment. Only S2 and S3 have
    /// known names; S1 and S4 are placeholders meant to be edited.
    fn default() -> Self {
        Self {
            scenarios: vec![
                ControlScenario::new("S1", "S1 (name unspecified)"),
                ControlScenario::new("S2", "Sampling control by measure (simple plan)"),
                ControlScenario::new("S3", "Sampling control by measure (double plan)"),
                ControlScenario::new("S4", "S4 (name unspecified)"),
            ],
        }
    }
}

impl ScenarioCatalog {
    pub fn new(scenarios: Vec<ControlScenario>) -> Result<Self, WorkflowError> {
        let mut catalog = Self {
            scenarios: Vec::new(),
        };
        for s in scenarios {
            catalog.add(s)?;
        }
        Ok(catalog)
    }

    pub fn scenarios(&self) -> &[ControlScenario] {
        &self.scenarios
    }

    pub fn get(&self, id: &str) -> Option<&ControlScenario> {
        self.scenarios.iter().find(|s| s.id.as_str() == id)
    }

    pub fn require(&self, id: &str) -> Result<&ControlScenario, WorkflowError> {
        self.get(id)
            .ok_or_else(|| WorkflowError::UnknownScenario(id.to_string()))
    }

    pub fn add(&mut self, scenario: ControlScenario) -> Result<(), WorkflowError> {
        scenario.validate()?;
        if self.get(scenario.id.as_str()).is_some() {
            return Err(WorkflowError::DuplicateScenario(scenario.id.0));
        }
        self.scenarios.push(scenario);
        Ok(())
    }

    /// Replaces the scenario with the same id.
    pub fn update(&mut self, scenario: ControlScenario) -> Result<(), WorkflowError> {
        scenario.validate()?;
        let slot = self
            .scenarios
            .iter_mut()
            .find(|s| s.id == scenario.id)
            .ok_or_else(|| WorkflowError::UnknownScenario(scenario.id.0.clone()))?;
        *slot = scenario;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

impl TryFrom<Vec<ControlScenario>> for ScenarioCatalog {
    type Error = WorkflowError;

    fn try_from(v: Vec<ControlScenario>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ScenarioCatalog> for Vec<ControlScenario> {
    fn from(c: ScenarioCatalog) -> Self {
        c.scenarios
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog() {
        let c = ScenarioCatalog::default();
        assert_eq!(c.len(), 4);
        assert_eq!(
            c.require("S2").unwrap().name,
            "Sampling control by measure (simple plan)"
        );
        assert_eq!(
            c.require("S3").unwrap().name,
            "Sampling control by measure (double plan)"
        );
        assert!(matches!(
            c.require("S9"),
            Err(WorkflowError::UnknownScenario(_))
        ));
    }

    #[test]
    fn edits() {
        let mut c = ScenarioCatalog::default();
        assert!(matches!(
            c.add(ControlScenario::new("S2", "dup")),
            Err(WorkflowError::DuplicateScenario(_))
        ));
        assert!(c.add(ControlScenario::new("S5", "")).is_err());
        c.add(ControlScenario::new("S5", "100% control")).unwrap();
        c.update(ControlScenario::new("S1", "Full inspection"))
            .unwrap();
        assert_eq!(c.require("S1").unwrap().name, "Full inspection");
        assert!(c.update(ControlScenario::new("S8", "x")).is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioCatalog>(&json).unwrap(), c);
        assert!(serde_json::from_str::<ScenarioCatalog>(
            r#"[{"id":"S1","name":"a"},{"id":"S1","name":"b"}]"#
        )
        .is_err());
    }
}
