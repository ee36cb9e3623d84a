//! Multi-criteria evaluation of control scenarios.
//!
//! This is the "manual choice" engine: AHP priority vectors derived from
//! pairwise judgment matrices give each alternative a local priority per
//! criterion, and a Choquet integral over a capacity aggregates those local
//! priorities into a single score that accounts for interactions between
//! criteria.
//!
//! Everything in here is a pure function of its inputs.

mod ahp;
mod capacity;
mod choquet;
mod fit;
mod pairwise;
mod ranking;

pub use ahp::{
    consistency_ratio, geometric_mean_priorities, priority_vector, priority_vector_with,
    random_index, EigenOptions, PriorityMethod, PriorityResult, PriorityVector,
    CONSISTENCY_THRESHOLD,
};
pub use capacity::{interaction_index, mobius, shapley, zeta, Capacity, MobiusRepresentation};
pub use choquet::{choquet, choquet_from_mobius};
pub use fit::{fit_capacity, fit_capacity_with, CapacityFit, FitOptions, DEFAULT_FIT_TOLERANCE};
pub use pairwise::{
    saaty_scale_violations, validate_pairwise, PairwiseMatrix, ValidationReport, Violation,
    ViolationKind,
};
pub use ranking::{rank_alternatives, rank_scores, EvaluationTable, ScoredAlternative};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest criteria set supported by capacities and the random-index table.
pub const MAX_CRITERIA: usize = 9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McdmError {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("matrix is empty")]
    Empty,
    #[error("invalid pairwise matrix: {0}")]
    InvalidMatrix(ValidationReport),
    #[error("unsupported dimension {n} (maximum is {max})")]
    UnsupportedDimension { n: usize, max: usize },
    #[error("invalid criteria set: {0}")]
    InvalidCriteria(String),
    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),
    #[error("value {value} for criterion `{criterion}` is outside [0, 1]")]
    Domain { criterion: String, value: f64 },
    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid capacity: {0}")]
    InvalidCapacity(String),
    #[error("capacity is not monotone: value({subset}) = {subset_value} exceeds value({superset}) = {superset_value}")]
    NotMonotone {
        subset: String,
        subset_value: f64,
        superset: String,
        superset_value: f64,
    },
    #[error("invalid evaluation table: {0}")]
    InvalidTable(String),
    #[error("capacity fit failed: {0}")]
    Fit(String),
}

/// Ordered, duplicate-free list of criterion identifiers.
///
/// The position of a criterion in this list is its bit in a [`Subset`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct CriteriaSet(Vec<String>);

impl CriteriaSet {
    pub fn new<I, S>(ids: I) -> Result<Self, McdmError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(McdmError::InvalidCriteria("criteria set is empty".into()));
        }
        if ids.len() > MAX_CRITERIA {
            return Err(McdmError::UnsupportedDimension {
                n: ids.len(),
                max: MAX_CRITERIA,
            });
        }
        for (i, id) in ids.iter().enumerate() {
            if id.trim().is_empty() {
                return Err(McdmError::InvalidCriteria(format!(
                    "criterion at position {} has an empty id",
                    i + 1
                )));
            }
            if ids[..i].contains(id) {
                return Err(McdmError::InvalidCriteria(format!(
                    "duplicate criterion `{id}`"
                )));
            }
        }
        Ok(Self(ids))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.0.iter().position(|c| c == id)
    }

    /// The subset containing every criterion.
    pub fn full(&self) -> Subset {
        Subset((1u32 << self.len()) - 1)
    }

    /// Number of subsets, `2^n`.
    pub fn subset_count(&self) -> usize {
        1usize << self.len()
    }

    pub fn subset_of<S: AsRef<str>>(&self, ids: &[S]) -> Result<Subset, McdmError> {
        let mut bits = 0u32;
        for id in ids {
            let i = self
                .index_of(id.as_ref())
                .ok_or_else(|| McdmError::UnknownCriterion(id.as_ref().to_string()))?;
            bits |= 1 << i;
        }
        Ok(Subset(bits))
    }

    pub fn names_of(&self, subset: Subset) -> Vec<String> {
        subset.members().map(|i| self.0[i].clone()).collect()
    }

    /// Human-readable label such as `{Risk, Time}`.
    pub fn label(&self, subset: Subset) -> String {
        format!("{{{}}}", self.names_of(subset).join(", "))
    }
}

impl Default for CriteriaSet {
    fn default() -> Self {
        Self(vec!["Risk".into(), "Cost".into(), "Time".into()])
    }
}

impl TryFrom<Vec<String>> for CriteriaSet {
    type Error = McdmError;

    fn try_from(ids: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(ids)
    }
}

impl From<CriteriaSet> for Vec<String> {
    fn from(set: CriteriaSet) -> Self {
        set.0
    }
}

/// A subset of a [`CriteriaSet`], encoded as a bitmask over criterion positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn with(self, i: usize) -> Subset {
        Subset(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Subset {
        Subset(self.0 & !(1 << i))
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Positions of the criteria in this subset, ascending.
    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.0 & (1 << i) != 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_criteria_are_risk_cost_time() {
        let set = CriteriaSet::default();
        assert_eq!(set.ids(), ["Risk", "Cost", "Time"]);
        assert_eq!(set.full(), Subset(0b111));
        assert_eq!(set.subset_count(), 8);
    }

    #[test]
    fn criteria_set_rejects_duplicates_and_empty() {
        assert!(CriteriaSet::new(Vec::<String>::new()).is_err());
        assert!(CriteriaSet::new(["a", "b", "a"]).is_err());
        assert!(CriteriaSet::new((0..10).map(|i| format!("c{i}"))).is_err());
    }

    #[test]
    fn subset_labels() {
        let set = CriteriaSet::default();
        let s = set.subset_of(&["Time", "Risk"]).unwrap();
        assert_eq!(s, Subset(0b101));
        assert_eq!(set.label(s), "{Risk, Time}");
        assert!(matches!(
            set.subset_of(&["Quality"]),
            Err(McdmError::UnknownCriterion(_))
        ));
    }
}
