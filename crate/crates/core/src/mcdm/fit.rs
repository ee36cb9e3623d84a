//! Recovering a capacity from observed scores.
//!
//! For a fixed row, the Choquet integral is linear in the capacity values of
//! the coalitions induced by that row's sort order. Fitting a monotone
//! capacity that minimizes the worst absolute score error is therefore a
//! linear program:
//!
//! ```text
//! minimize t
//!   s.t.  |Σ_S coef[r][S] · v(S) + const[r] - target[r]| <= t   for every row r
//!         v(S) <= v(S ∪ {i})                                  for every S, i ∉ S
//!         0 <= v(S) <= 1
//! ```
//!
//! The LP optimum is then snapped to a grid (0.001 by default), which keeps
//! monotonicity because rounding is itself monotone.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use serde::{Deserialize, Serialize};

use super::capacity::Capacity;
use super::choquet::choquet;
use super::ranking::EvaluationTable;
use super::{McdmError, Subset};

pub const DEFAULT_FIT_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Grid the fitted values are rounded to. `None` keeps the raw LP optimum.
    pub resolution: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            resolution: Some(0.001),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityFit {
    pub capacity: Capacity,
    /// Largest `|choquet(row) - target|` over all rows.
    pub max_deviation: f64,
    pub scores: Vec<f64>,
}

impl CapacityFit {
    pub fn is_feasible(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }
}

pub fn fit_capacity(table: &EvaluationTable, targets: &[f64]) -> Result<CapacityFit, McdmError> {
    fit_capacity_with(table, targets, FitOptions::default())
}

/// Linear coefficients of one row's Choquet integral: `(constant, [(subset, coef)])`.
pub(crate) fn choquet_terms(row: &[f64], full: Subset) -> (f64, Vec<(Subset, f64)>) {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    let mut upper = full;
    let mut previous = 0.0;
    let mut constant = 0.0;
    let mut terms = Vec::new();
    for i in order {
        let step = row[i] - previous;
        if upper == full {
            constant += step;
        } else if step != 0.0 {
            terms.push((upper, step));
        }
        previous = row[i];
        upper = upper.without(i);
    }
    (constant, terms)
}

pub fn fit_capacity_with(
    table: &EvaluationTable,
    targets: &[f64],
    opts: FitOptions,
) -> Result<CapacityFit, McdmError> {
    if targets.len() != table.rows().len() {
        return Err(McdmError::Shape {
            expected: table.rows().len(),
            got: targets.len(),
        });
    }
    if let Some(t) = targets
        .iter()
        .find(|t| !(t.is_finite() && (0.0..=1.0).contains(*t)))
    {
        return Err(McdmError::Fit(format!("target {t} is outside [0, 1]")));
    }
    let criteria = table.criteria().clone();
    let n = criteria.len();
    let full = criteria.full();
    let count = criteria.subset_count();

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Option<Variable>> = (0..count)
        .map(|s| (s != 0 && s != full.index()).then(|| lp.add_var(0.0, (0.0, 1.0))))
        .collect();
    let slack = lp.add_var(1.0, (0.0, f64::INFINITY));

    for (row, &target) in table.rows().iter().zip(targets) {
        let (constant, terms) = choquet_terms(row, full);
        let mut expr: Vec<(Variable, f64)> = terms
            .iter()
            .filter_map(|(s, c)| vars[s.index()].map(|v| (v, *c)))
            .collect();
        expr.push((slack, -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, target - constant);
        if let Some(last) = expr.last_mut() {
            last.1 = 1.0;
        }
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, target - constant);
    }

    for s in 0..count {
        let s = Subset(s as u32);
        let Some(lower) = vars[s.index()] else {
            continue;
        };
        for i in (0..n).filter(|&i| !s.contains(i)) {
            if let Some(upper) = vars[s.with(i).index()] {
                lp.add_constraint([(lower, 1.0), (upper, -1.0)], ComparisonOp::Le, 0.0);
            }
        }
    }

    let solution = lp
        .solve()
        .map_err(|e| McdmError::Fit(e.to_string()))?
        .into_solution()
        .map_err(|_| McdmError::Fit("solver was interrupted".into()))?;

    let snap = |x: f64| match opts.resolution {
        Some(res) if res > 0.0 => {
            let steps = (1.0 / res).round();
            (x * steps).round() / steps
        }
        _ => x,
    };
    let mut values: Vec<f64> = vars
        .iter()
        .map(|v| v.map_or(0.0, |v| snap(solution.var_value(v)).clamp(0.0, 1.0)))
        .collect();
    values[full.index()] = 1.0;
    // Solver round-off can leave an inequality violated by a few ulps.
    for s in 0..count {
        let mut v = values[s];
        for i in Subset(s as u32).members() {
            v = v.max(values[s ^ (1 << i)]);
        }
        values[s] = v;
    }
    let capacity = Capacity::from_values(criteria, values)?;
    let scores = table
        .rows()
        .iter()
        .map(|row| choquet(row, &capacity))
        .collect::<Result<Vec<_>, _>>()?;
    let max_deviation = scores
        .iter()
        .zip(targets)
        .map(|(s, t)| (s - t).abs())
        .fold(0.0, f64::max);
    Ok(CapacityFit {
        capacity,
        max_deviation,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcdm::CriteriaSet;

    fn table(rows: Vec<Vec<f64>>) -> EvaluationTable {
        let ids = (1..=rows.len()).map(|i| format!("S{i}")).collect();
        EvaluationTable::new(CriteriaSet::default(), ids, rows).unwrap()
    }

    #[test]
    fn recovers_weighted_sum_targets() {
        let t = table(vec![
            vec![0.5, 0.1, 0.2],
            vec![0.3, 0.6, 0.1],
            vec![0.2, 0.3, 0.7],
        ]);
        let w = [0.5, 0.3, 0.2];
        let targets: Vec<f64> = t
            .rows()
            .iter()
            .map(|r| r.iter().zip(w).map(|(x, w)| x * w).sum())
            .collect();
        let fit = fit_capacity(&t, &targets).unwrap();
        assert!(fit.max_deviation <= 0.001, "{}", fit.max_deviation);
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        // A single row can only score between its min and max.
        let t = EvaluationTable::new(
            CriteriaSet::default(),
            vec!["S1".into()],
            vec![vec![1.0, 1.0, 1.0]],
        )
        .unwrap();
        let fit = fit_capacity(&t, &[0.5]).unwrap();
        assert!((fit.max_deviation - 0.5).abs() < 1e-9);
        assert!(!fit.is_feasible(0.49));
    }

    #[test]
    fn terms_follow_sort_order() {
        let (c, terms) = choquet_terms(&[0.664, 0.042, 0.036], Subset(0b111));
        assert!((c - 0.036).abs() < 1e-15);
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].0, Subset(0b011));
        assert_eq!(terms[1].0, Subset(0b001));
    }

    #[test]
    fn shape_errors() {
        let t = table(vec![vec![1.0, 1.0, 1.0]]);
        assert!(matches!(
            fit_capacity(&t, &[0.1, 0.2]),
            Err(McdmError::Shape { .. })
        ));
        assert!(fit_capacity(&t, &[1.5]).is_err());
    }
}
