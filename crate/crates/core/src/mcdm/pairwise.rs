use std::fmt;

use serde::{Deserialize, Serialize};

use super::McdmError;

const RECIPROCITY_TOLERANCE: f64 = 1e-9;

/// Square matrix of pairwise judgment ratios.
///
/// Entry `(i, j)` states how strongly item `i` is preferred to item `j`.
/// Construction only enforces squareness; reciprocity, the unit diagonal and
/// positivity are reported by [`validate_pairwise`] so that a bad matrix can
/// be shown back to the decision maker with every offending cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairwiseWire", into = "PairwiseWire")]
pub struct PairwiseMatrix {
    label: String,
    n: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PairwiseWire {
    #[serde(default)]
    label: String,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<PairwiseWire> for PairwiseMatrix {
    type Error = McdmError;

    fn try_from(wire: PairwiseWire) -> Result<Self, Self::Error> {
        PairwiseMatrix::from_rows(wire.rows).map(|m| m.with_label(wire.label))
    }
}

impl From<PairwiseMatrix> for PairwiseWire {
    fn from(m: PairwiseMatrix) -> Self {
        PairwiseWire {
            rows: m.rows(),
            label: m.label,
        }
    }
}

impl PairwiseMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, McdmError> {
        let n = rows.len();
        if n == 0 {
            return Err(McdmError::Empty);
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(McdmError::NotSquare {
                    row: i + 1,
                    len: row.len(),
                    expected: n,
                });
            }
            entries.extend(row);
        }
        Ok(Self {
            label: String::new(),
            n,
            entries,
        })
    }

    /// Builds a reciprocal matrix from its strict upper triangle, given row by
    /// row: `(1,2), (1,3), ..., (1,n), (2,3), ...`.
    pub fn from_upper_triangle(n: usize, upper: &[f64]) -> Result<Self, McdmError> {
        if n == 0 {
            return Err(McdmError::Empty);
        }
        let expected = n * (n - 1) / 2;
        if upper.len() != expected {
            return Err(McdmError::Shape {
                expected,
                got: upper.len(),
            });
        }
        let mut entries = vec![1.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                entries[i * n + j] = upper[k];
                entries[j * n + i] = 1.0 / upper[k];
                k += 1;
            }
        }
        Ok(Self {
            label: String::new(),
            n,
            entries,
        })
    }

    /// The perfectly consistent matrix `a[i][j] = w[i] / w[j]`.
    pub fn from_weights(weights: &[f64]) -> Result<Self, McdmError> {
        if weights.is_empty() {
            return Err(McdmError::Empty);
        }
        let n = weights.len();
        let entries = (0..n * n)
            .map(|k| weights[k / n] / weights[k % n])
            .collect();
        Ok(Self {
            label: String::new(),
            n,
            entries,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Zero-based entry access.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Diagonal entry differs from 1.
    Diagonal,
    /// `a[i][j] * a[j][i]` differs from 1.
    Reciprocity,
    /// Entry is zero, negative or not finite.
    NonPositive,
}

/// One offending cell. Positions are 1-based, as shown to the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| {
                let what = match v.kind {
                    ViolationKind::Diagonal => "diagonal entry is not 1",
                    ViolationKind::Reciprocity => "not reciprocal",
                    ViolationKind::NonPositive => "not a positive number",
                };
                format!("({},{}) = {}: {}", v.row, v.col, v.value, what)
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Reports every diagonal, positivity and reciprocity violation.
///
/// Reciprocity is checked once per pair and reported at the lower-triangle
/// position `(i, j)` with `i > j`.
pub fn validate_pairwise(m: &PairwiseMatrix) -> ValidationReport {
    let n = m.size();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let a = m.get(i, j);
            if !(a.is_finite() && a > 0.0) {
                violations.push(Violation {
                    kind: ViolationKind::NonPositive,
                    row: i + 1,
                    col: j + 1,
                    value: a,
                });
            } else if i == j && (a - 1.0).abs() > RECIPROCITY_TOLERANCE {
                violations.push(Violation {
                    kind: ViolationKind::Diagonal,
                    row: i + 1,
                    col: j + 1,
                    value: a,
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (m.get(i, j), m.get(j, i));
            let positive = a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0;
            if positive && (a * b - 1.0).abs() > RECIPROCITY_TOLERANCE {
                violations.push(Violation {
                    kind: ViolationKind::Reciprocity,
                    row: i + 1,
                    col: j + 1,
                    value: a,
                });
            }
        }
    }
    violations.sort_by_key(|v| (v.row, v.col));
    ValidationReport { violations }
}

const SAATY_SCALE: [f64; 17] = [
    1.0 / 9.0,
    1.0 / 8.0,
    1.0 / 7.0,
    1.0 / 6.0,
    1.0 / 5.0,
    1.0 / 4.0,
    1.0 / 3.0,
    1.0 / 2.0,
    1.0,
    2.0,
    3.0,
    4.0,
    5.0,
    6.0,
    7.0,
    8.0,
    9.0,
];

/// Off-diagonal cells (1-based) whose value is not on the 1/9..9 judgment scale.
pub fn saaty_scale_violations(m: &PairwiseMatrix) -> Vec<(usize, usize)> {
    let n = m.size();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let a = m.get(i, j);
            if !SAATY_SCALE.iter().any(|s| (a - s).abs() <= 1e-6 * s) {
                out.push((i + 1, j + 1));
            }
        }
    }
    out
}
