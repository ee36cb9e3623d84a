use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::ahp::PriorityVector;
use super::capacity::Capacity;
use super::choquet::choquet;
use super::{CriteriaSet, McdmError};

/// Default slack on column sums.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-6;

/// Local priorities of `k` alternatives under `n` criteria. Each column is a
/// priority vector over the alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableWire", into = "TableWire")]
pub struct EvaluationTable {
    criteria: CriteriaSet,
    alternatives: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TableRow {
    alternative: String,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableWire {
    criteria: CriteriaSet,
    rows: Vec<TableRow>,
}

impl TryFrom<TableWire> for EvaluationTable {
    type Error = McdmError;

    fn try_from(wire: TableWire) -> Result<Self, Self::Error> {
        let (alternatives, rows) = wire
            .rows
            .into_iter()
            .map(|r| (r.alternative, r.values))
            .unzip();
        EvaluationTable::new(wire.criteria, alternatives, rows)
    }
}

impl From<EvaluationTable> for TableWire {
    fn from(t: EvaluationTable) -> Self {
        TableWire {
            criteria: t.criteria,
            rows: t
                .alternatives
                .into_iter()
                .zip(t.rows)
                .map(|(alternative, values)| TableRow {
                    alternative,
                    values,
                })
                .collect(),
        }
    }
}

impl EvaluationTable {
    pub fn new(
        criteria: CriteriaSet,
        alternatives: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, McdmError> {
        Self::with_tolerance(criteria, alternatives, rows, COLUMN_SUM_TOLERANCE)
    }

    pub fn with_tolerance(
        criteria: CriteriaSet,
        alternatives: Vec<String>,
        rows: Vec<Vec<f64>>,
        tolerance: f64,
    ) -> Result<Self, McdmError> {
        if alternatives.is_empty() {
            return Err(McdmError::InvalidTable("no alternatives".into()));
        }
        if alternatives.len() != rows.len() {
            return Err(McdmError::Shape {
                expected: alternatives.len(),
                got: rows.len(),
            });
        }
        for (i, id) in alternatives.iter().enumerate() {
            if id.trim().is_empty() {
                return Err(McdmError::InvalidTable(format!(
                    "alternative at row {} has an empty id",
                    i + 1
                )));
            }
            if alternatives[..i].contains(id) {
                return Err(McdmError::InvalidTable(format!(
                    "duplicate alternative `{id}`"
                )));
            }
        }
        for (id, row) in alternatives.iter().zip(&rows) {
            if row.len() != criteria.len() {
                return Err(McdmError::Shape {
                    expected: criteria.len(),
                    got: row.len(),
                });
            }
            for (v, c) in row.iter().zip(criteria.ids()) {
                if !(v.is_finite() && (0.0..=1.0).contains(v)) {
                    return Err(McdmError::InvalidTable(format!(
                        "{id} / {c} = {v} is outside [0, 1]"
                    )));
                }
            }
        }
        let table = Self {
            criteria,
            alternatives,
            rows,
        };
        for (c, sum) in table.criteria.ids().iter().zip(table.column_sums()) {
            if (sum - 1.0).abs() > tolerance {
                return Err(McdmError::InvalidTable(format!(
                    "column {c} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(table)
    }

    /// Assembles a table from one priority vector per criterion.
    pub fn from_columns(
        criteria: CriteriaSet,
        alternatives: Vec<String>,
        columns: &[PriorityVector],
    ) -> Result<Self, McdmError> {
        if columns.len() != criteria.len() {
            return Err(McdmError::Shape {
                expected: criteria.len(),
                got: columns.len(),
            });
        }
        if let Some(c) = columns.iter().find(|c| c.len() != alternatives.len()) {
            return Err(McdmError::Shape {
                expected: alternatives.len(),
                got: c.len(),
            });
        }
        let rows = (0..alternatives.len())
            .map(|a| columns.iter().map(|c| c[a]).collect())
            .collect();
        Self::new(criteria, alternatives, rows)
    }

    pub fn criteria(&self) -> &CriteriaSet {
        &self.criteria
    }

    pub fn alternatives(&self) -> &[String] {
        &self.alternatives
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, alternative: &str) -> Option<&[f64]> {
        self.alternatives
            .iter()
            .position(|a| a == alternative)
            .map(|i| self.rows[i].as_slice())
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.criteria.len())
            .map(|j| self.rows.iter().map(|r| r[j]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAlternative {
    pub alternative: String,
    pub score: f64,
    /// 1 is best.
    pub rank: usize,
}

/// Ranks by descending score; equal scores are ordered by ascending id.
/// The result is sorted best first.
pub fn rank_scores(ids: &[String], scores: &[f64]) -> Vec<ScoredAlternative> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => ids[a].cmp(&ids[b]),
        other => other,
    });
    order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| ScoredAlternative {
            alternative: ids[i].clone(),
            score: scores[i],
            rank: pos + 1,
        })
        .collect()
}

/// Scores every alternative with the Choquet integral and ranks them.
pub fn rank_alternatives(
    table: &EvaluationTable,
    cap: &Capacity,
) -> Result<Vec<ScoredAlternative>, McdmError> {
    if table.criteria.len() != cap.criteria().len() {
        return Err(McdmError::Shape {
            expected: cap.criteria().len(),
            got: table.criteria.len(),
        });
    }
    if &table.criteria != cap.criteria() {
        return Err(McdmError::InvalidCriteria(format!(
            "table criteria {:?} differ from capacity criteria {:?}",
            table.criteria.ids(),
            cap.criteria().ids()
        )));
    }
    let scores = table
        .rows
        .iter()
        .map(|row| choquet(row, cap))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rank_scores(&table.alternatives, &scores))
}
