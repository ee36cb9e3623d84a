use super::capacity::{Capacity, MobiusRepresentation};
use super::{McdmError, Subset};

/// Discrete Choquet integral of `values` (one per criterion, in `[0, 1]`)
/// with respect to `cap`.
///
/// Values are visited in ascending order, ties broken by criterion position;
/// each increment is weighted by the capacity of the criteria at or above it.
pub fn choquet(values: &[f64], cap: &Capacity) -> Result<f64, McdmError> {
    check_inputs(values, cap.criteria().ids())?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut upper = cap.criteria().full();
    let mut previous = 0.0;
    let mut total = 0.0;
    for i in order {
        total += (values[i] - previous) * cap.value(upper);
        previous = values[i];
        upper = upper.without(i);
    }
    Ok(total)
}

/// Choquet integral through the Möbius form: `Σ_T m(T) · min_{i ∈ T} x_i`.
pub fn choquet_from_mobius(values: &[f64], mr: &MobiusRepresentation) -> Result<f64, McdmError> {
    check_inputs(values, mr.criteria().ids())?;
    let masses = mr.masses();
    Ok(masses
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, m)| **m != 0.0)
        .map(|(s, m)| {
            let lowest = Subset(s as u32)
                .members()
                .map(|i| values[i])
                .fold(f64::INFINITY, f64::min);
            m * lowest
        })
        .sum())
}

fn check_inputs(values: &[f64], criteria: &[String]) -> Result<(), McdmError> {
    if values.len() != criteria.len() {
        return Err(McdmError::Shape {
            expected: criteria.len(),
            got: values.len(),
        });
    }
    for (v, c) in values.iter().zip(criteria) {
        if !(v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(McdmError::Domain {
                criterion: c.clone(),
                value: *v,
            });
        }
    }
    Ok(())
}
