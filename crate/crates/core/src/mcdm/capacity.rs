//! Capacities (fuzzy measures) and their Möbius representation.
//!
//! A capacity assigns a weight to every coalition of criteria. It is stored as
//! a dense table of `2^n` values indexed by [`Subset`] bitmask.
//!
//! Möbius masses are kept as exact rationals. Every `f64` is a dyadic
//! rational, so the transform and its inverse are computed without rounding
//! and `zeta(mobius(c))` reproduces `c` bit for bit.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::ahp::PriorityVector;
use super::{CriteriaSet, McdmError, Subset};

/// Slack allowed when a Möbius representation is turned into a capacity.
const ZETA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CapacityWire", into = "CapacityWire")]
pub struct Capacity {
    criteria: CriteriaSet,
    values: Vec<f64>,
}

impl Capacity {
    /// Builds a capacity from a dense table indexed by subset bitmask.
    pub fn from_values(criteria: CriteriaSet, values: Vec<f64>) -> Result<Self, McdmError> {
        let expected = criteria.subset_count();
        if values.len() != expected {
            return Err(McdmError::Shape {
                expected,
                got: values.len(),
            });
        }
        for (s, v) in values.iter().enumerate() {
            if !(v.is_finite() && (0.0..=1.0).contains(v)) {
                return Err(McdmError::InvalidCapacity(format!(
                    "value({}) = {} is outside [0, 1]",
                    criteria.label(Subset(s as u32)),
                    v
                )));
            }
        }
        if values[0] != 0.0 {
            return Err(McdmError::InvalidCapacity(format!(
                "value of the empty set is {}, expected 0",
                values[0]
            )));
        }
        let full = criteria.full().index();
        if values[full] != 1.0 {
            return Err(McdmError::InvalidCapacity(format!(
                "value of the full set is {}, expected 1",
                values[full]
            )));
        }
        if let Some((sub, sup)) = first_monotonicity_violation(&values, criteria.len(), 0.0) {
            return Err(McdmError::NotMonotone {
                subset: criteria.label(sub),
                subset_value: values[sub.index()],
                superset: criteria.label(sup),
                superset_value: values[sup.index()],
            });
        }
        Ok(Self { criteria, values })
    }

    pub fn from_fn(criteria: CriteriaSet, f: impl Fn(Subset) -> f64) -> Result<Self, McdmError> {
        let values = (0..criteria.subset_count())
            .map(|s| f(Subset(s as u32)))
            .collect();
        Self::from_values(criteria, values)
    }

    /// Additive capacity: the value of a coalition is the sum of its members'
    /// weights.
    pub fn additive(criteria: CriteriaSet, weights: &[f64]) -> Result<Self, McdmError> {
        if weights.len() != criteria.len() {
            return Err(McdmError::Shape {
                expected: criteria.len(),
                got: weights.len(),
            });
        }
        PriorityVector::new(weights.to_vec())?;
        let full = criteria.full();
        Self::from_fn(criteria, |s| {
            if s == full {
                1.0
            } else {
                s.members().map(|i| weights[i]).sum::<f64>().min(1.0)
            }
        })
    }

    /// Zero on every proper subset. The Choquet integral becomes the minimum.
    pub fn min_capacity(criteria: CriteriaSet) -> Self {
        let full = criteria.full();
        Self::from_fn(criteria, |s| if s == full { 1.0 } else { 0.0 })
            .expect("min capacity is valid")
    }

    /// One on every non-empty subset. The Choquet integral becomes the maximum.
    pub fn max_capacity(criteria: CriteriaSet) -> Self {
        Self::from_fn(criteria, |s| if s.is_empty() { 0.0 } else { 1.0 })
            .expect("max capacity is valid")
    }

    pub fn criteria(&self) -> &CriteriaSet {
        &self.criteria
    }

    pub fn value(&self, s: Subset) -> f64 {
        self.values[s.index()]
    }

    /// Dense table indexed by subset bitmask.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_of<S: AsRef<str>>(&self, ids: &[S]) -> Result<f64, McdmError> {
        Ok(self.value(self.criteria.subset_of(ids)?))
    }

    pub fn is_additive(&self, tolerance: f64) -> bool {
        (0..self.values.len()).all(|s| {
            let s = Subset(s as u32);
            let sum: f64 = s.members().map(|i| self.values[1 << i]).sum();
            (self.value(s) - sum).abs() <= tolerance
        })
    }
}

/// First pair `(S, S ∪ {i})` where the value drops by more than `slack`.
fn first_monotonicity_violation(values: &[f64], n: usize, slack: f64) -> Option<(Subset, Subset)> {
    for s in 0..values.len() {
        let s = Subset(s as u32);
        for i in 0..n {
            if !s.contains(i) {
                let sup = s.with(i);
                if values[s.index()] > values[sup.index()] + slack {
                    return Some((s, sup));
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct SubsetValue {
    pub subset: Vec<String>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CapacityWire {
    criteria: CriteriaSet,
    values: Vec<SubsetValue>,
}

impl TryFrom<CapacityWire> for Capacity {
    type Error = McdmError;

    fn try_from(wire: CapacityWire) -> Result<Self, Self::Error> {
        let criteria = wire.criteria;
        let mut values: Vec<Option<f64>> = vec![None; criteria.subset_count()];
        values[0] = Some(0.0);
        values[criteria.full().index()] = Some(1.0);
        let mut seen = vec![false; values.len()];
        for entry in wire.values {
            let s = criteria.subset_of(&entry.subset)?;
            if std::mem::replace(&mut seen[s.index()], true) {
                return Err(McdmError::InvalidCapacity(format!(
                    "subset {} listed twice",
                    criteria.label(s)
                )));
            }
            values[s.index()] = Some(entry.value);
        }
        let dense = values
            .iter()
            .enumerate()
            .map(|(s, v)| {
                v.ok_or_else(|| {
                    McdmError::InvalidCapacity(format!(
                        "missing value for subset {}",
                        criteria.label(Subset(s as u32))
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Capacity::from_values(criteria, dense)
    }
}

impl From<Capacity> for CapacityWire {
    fn from(c: Capacity) -> Self {
        let values = c
            .values
            .iter()
            .enumerate()
            .map(|(s, &value)| SubsetValue {
                subset: c.criteria.names_of(Subset(s as u32)),
                value,
            })
            .collect();
        CapacityWire {
            criteria: c.criteria,
            values,
        }
    }
}

/// Möbius masses of a set function, held exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MobiusWire", into = "MobiusWire")]
pub struct MobiusRepresentation {
    criteria: CriteriaSet,
    masses: Vec<BigRational>,
}

impl MobiusRepresentation {
    /// Builds a representation from a sparse list of masses; subsets not
    /// listed carry zero mass.
    pub fn from_masses<S: AsRef<str>>(
        criteria: CriteriaSet,
        masses: &[(&[S], f64)],
    ) -> Result<Self, McdmError> {
        let mut dense = vec![BigRational::zero(); criteria.subset_count()];
        for (ids, m) in masses {
            let s = criteria.subset_of(ids)?;
            dense[s.index()] = exact(*m).ok_or_else(|| {
                McdmError::InvalidCapacity(format!("mass of {} is not finite", criteria.label(s)))
            })?;
        }
        if !dense[0].is_zero() {
            return Err(McdmError::InvalidCapacity(
                "the empty set must carry zero mass".into(),
            ));
        }
        Ok(Self {
            criteria,
            masses: dense,
        })
    }

    pub fn criteria(&self) -> &CriteriaSet {
        &self.criteria
    }

    /// Mass of `s`, rounded to the nearest `f64`.
    pub fn mass(&self, s: Subset) -> f64 {
        to_f64(&self.masses[s.index()])
    }

    pub fn masses(&self) -> Vec<f64> {
        self.masses.iter().map(to_f64).collect()
    }

    /// Largest coalition size carrying non-zero mass.
    pub fn additivity_order(&self) -> usize {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(s, _)| Subset(s as u32).len())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MobiusWire {
    criteria: CriteriaSet,
    masses: Vec<SubsetValue>,
}

impl TryFrom<MobiusWire> for MobiusRepresentation {
    type Error = McdmError;

    fn try_from(wire: MobiusWire) -> Result<Self, Self::Error> {
        let masses: Vec<(&[String], f64)> = wire
            .masses
            .iter()
            .map(|e| (e.subset.as_slice(), e.value))
            .collect();
        MobiusRepresentation::from_masses(wire.criteria, &masses)
    }
}

impl From<MobiusRepresentation> for MobiusWire {
    fn from(m: MobiusRepresentation) -> Self {
        let masses = (0..m.masses.len())
            .filter(|&s| !m.masses[s].is_zero())
            .map(|s| SubsetValue {
                subset: m.criteria.names_of(Subset(s as u32)),
                value: m.mass(Subset(s as u32)),
            })
            .collect();
        MobiusWire {
            criteria: m.criteria,
            masses,
        }
    }
}

fn exact(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Möbius transform: `m(S) = Σ_{T ⊆ S} (-1)^{|S \ T|} v(T)`.
pub fn mobius(cap: &Capacity) -> MobiusRepresentation {
    let n = cap.criteria.len();
    let mut masses: Vec<BigRational> = cap
        .values
        .iter()
        .map(|&v| exact(v).expect("capacity values are finite"))
        .collect();
    for i in 0..n {
        for s in 0..masses.len() {
            if s & (1 << i) != 0 {
                let lower = masses[s ^ (1 << i)].clone();
                masses[s] -= lower;
            }
        }
    }
    MobiusRepresentation {
        criteria: cap.criteria.clone(),
        masses,
    }
}

/// Zeta transform: `v(S) = Σ_{T ⊆ S} m(T)`.
///
/// Fails when the induced set function is not a capacity. Deviations within
/// 1e-9 (typically from masses entered as decimals) are absorbed.
pub fn zeta(mr: &MobiusRepresentation) -> Result<Capacity, McdmError> {
    let criteria = &mr.criteria;
    let n = criteria.len();
    let mut sums = mr.masses.clone();
    for i in 0..n {
        for s in 0..sums.len() {
            if s & (1 << i) != 0 {
                let lower = sums[s ^ (1 << i)].clone();
                sums[s] += lower;
            }
        }
    }
    let mut values: Vec<f64> = sums.iter().map(to_f64).collect();
    let full = criteria.full().index();
    if values[0] != 0.0 {
        return Err(McdmError::InvalidCapacity(
            "the empty set must carry zero mass".into(),
        ));
    }
    if (values[full] - 1.0).abs() > ZETA_TOLERANCE {
        return Err(McdmError::InvalidCapacity(format!(
            "masses sum to {}, expected 1",
            values[full]
        )));
    }
    if let Some(s) = (0..values.len()).find(|&s| values[s] < -ZETA_TOLERANCE) {
        return Err(McdmError::NotMonotone {
            subset: "{}".into(),
            subset_value: 0.0,
            superset: criteria.label(Subset(s as u32)),
            superset_value: values[s],
        });
    }
    if let Some((sub, sup)) = first_monotonicity_violation(&values, n, ZETA_TOLERANCE) {
        return Err(McdmError::NotMonotone {
            subset: criteria.label(sub),
            subset_value: values[sub.index()],
            superset: criteria.label(sup),
            superset_value: values[sup.index()],
        });
    }
    values[full] = 1.0;
    // Bitmask order visits every subset after all of its subsets.
    for s in 0..values.len() {
        let mut v = values[s].clamp(0.0, 1.0);
        for i in Subset(s as u32).members() {
            v = v.max(values[s ^ (1 << i)]);
        }
        values[s] = v;
    }
    Capacity::from_values(criteria.clone(), values)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Shapley importance of each criterion.
pub fn shapley(cap: &Capacity) -> PriorityVector {
    let n = cap.criteria.len();
    let weights: Vec<f64> = (0..n)
        .map(|s| factorial(n - s - 1) * factorial(s) / factorial(n))
        .collect();
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            (0..cap.values.len())
                .map(|s| Subset(s as u32))
                .filter(|s| !s.contains(i))
                .map(|s| weights[s.len()] * (cap.value(s.with(i)) - cap.value(s)))
                .sum()
        })
        .collect();
    PriorityVector::normalized(phi).expect("shapley values of a capacity sum to one")
}

/// Pairwise interaction index: positive for synergy, negative for redundancy.
pub fn interaction_index(cap: &Capacity, a: &str, b: &str) -> Result<f64, McdmError> {
    let criteria = &cap.criteria;
    let i = criteria
        .index_of(a)
        .ok_or_else(|| McdmError::UnknownCriterion(a.to_string()))?;
    let j = criteria
        .index_of(b)
        .ok_or_else(|| McdmError::UnknownCriterion(b.to_string()))?;
    if i == j {
        return Err(McdmError::InvalidCriteria(format!(
            "interaction needs two distinct criteria, got `{a}` twice"
        )));
    }
    let n = criteria.len();
    let total = (0..cap.values.len())
        .map(|s| Subset(s as u32))
        .filter(|s| !s.contains(i) && !s.contains(j))
        .map(|s| {
            let k = s.len();
            let w = factorial(n - k - 2) * factorial(k) / factorial(n - 1);
            let delta = cap.value(s.with(i).with(j)) - cap.value(s.with(i)) - cap.value(s.with(j))
                + cap.value(s);
            w * delta
        })
        .sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> CriteriaSet {
        CriteriaSet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn rejects_non_monotone() {
        let set = CriteriaSet::new(["a", "b", "c"]).unwrap();
        let values = vec![0.0, 0.7, 0.2, 0.5, 0.1, 0.7, 0.3, 1.0];
        match Capacity::from_values(set, values).unwrap_err() {
            McdmError::NotMonotone {
                subset, superset, ..
            } => {
                assert_eq!(subset, "{a}");
                assert_eq!(superset, "{a, b}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_normalization() {
        assert!(Capacity::from_values(two(), vec![0.1, 0.3, 0.3, 1.0]).is_err());
        assert!(Capacity::from_values(two(), vec![0.0, 0.3, 0.3, 0.9]).is_err());
        assert!(Capacity::from_values(two(), vec![0.0, 0.3, 0.3]).is_err());
    }

    #[test]
    fn additive_capacity_has_no_higher_order_mass() {
        // Dyadic weights: every subset sum is exact.
        let cap = Capacity::additive(CriteriaSet::default(), &[0.5, 0.25, 0.25]).unwrap();
        let m = mobius(&cap);
        assert_eq!(m.additivity_order(), 1);

        // Decimal weights: pair sums are rounded, leaving residual mass.
        let cap = Capacity::additive(CriteriaSet::default(), &[0.5, 0.3, 0.2]).unwrap();
        let m = mobius(&cap);
        for s in (0..8u32).map(Subset).filter(|s| s.len() >= 2) {
            assert!(m.mass(s).abs() < 1e-15, "mass of {s:?} = {}", m.mass(s));
        }
    }

    #[test]
    fn min_capacity_mass_on_full_set() {
        let m = mobius(&Capacity::min_capacity(two()));
        assert_eq!(m.masses(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn zeta_rejects_non_monotone_masses() {
        let mr = MobiusRepresentation::from_masses(
            two(),
            &[
                (&["a"][..], 0.8),
                (&["b"][..], 0.6),
                (&["a", "b"][..], -0.4),
            ],
        )
        .unwrap();
        // Induces (0, 0.8, 0.6, 1.0).
        assert!(zeta(&mr).is_ok());
        let bad = MobiusRepresentation::from_masses(
            two(),
            &[
                (&["a"][..], 1.2),
                (&["b"][..], 0.3),
                (&["a", "b"][..], -0.5),
            ],
        )
        .unwrap();
        assert!(matches!(zeta(&bad), Err(McdmError::NotMonotone { .. })));
        let unnormalized = MobiusRepresentation::from_masses(two(), &[(&["a"][..], 0.5)]).unwrap();
        assert!(matches!(
            zeta(&unnormalized),
            Err(McdmError::InvalidCapacity(_))
        ));
    }

    #[test]
    fn decimal_two_additive_masses() {
        let mr = MobiusRepresentation::from_masses(
            CriteriaSet::default(),
            &[
                (&["Risk"][..], 0.1),
                (&["Cost"][..], 0.2),
                (&["Time"][..], 0.7),
            ],
        )
        .unwrap();
        let cap = zeta(&mr).unwrap();
        assert_eq!(cap.value(cap.criteria().full()), 1.0);
        assert!((cap.value_of(&["Risk", "Cost"]).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn shapley_of_additive_is_weights() {
        let cap = Capacity::additive(CriteriaSet::default(), &[0.5, 0.3, 0.2]).unwrap();
        let phi = shapley(&cap);
        for (got, want) in phi.as_slice().iter().zip([0.5, 0.3, 0.2]) {
            assert!((got - want).abs() < 1e-12);
        }
        for (a, b) in [("Risk", "Cost"), ("Risk", "Time"), ("Cost", "Time")] {
            assert!(interaction_index(&cap, a, b).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn shapley_of_min_capacity_is_uniform() {
        let phi = shapley(&Capacity::min_capacity(CriteriaSet::default()));
        for w in phi.as_slice() {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_signs() {
        let set = two();
        let min = Capacity::min_capacity(set.clone());
        let max = Capacity::max_capacity(set);
        assert!((interaction_index(&min, "a", "b").unwrap() - 1.0).abs() < 1e-12);
        assert!((interaction_index(&max, "a", "b").unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            interaction_index(&min, "a", "z"),
            Err(McdmError::UnknownCriterion(_))
        ));
        assert!(interaction_index(&min, "a", "a").is_err());
    }

    #[test]
    fn capacity_json_shape() {
        let cap = Capacity::additive(two(), &[0.25, 0.75]).unwrap();
        let json = serde_json::to_value(&cap).unwrap();
        assert_eq!(json["criteria"], serde_json::json!(["a", "b"]));
        assert_eq!(json["values"].as_array().unwrap().len(), 4);
        let back: Capacity = serde_json::from_value(json).unwrap();
        assert_eq!(back, cap);

        // Trivial subsets may be omitted; every other subset is required.
        let sparse = serde_json::json!({
            "criteria": ["a", "b"],
            "values": [{"subset": ["a"], "value": 0.25}, {"subset": ["b"], "value": 0.75}]
        });
        assert_eq!(serde_json::from_value::<Capacity>(sparse).unwrap(), cap);
        let missing = serde_json::json!({
            "criteria": ["a", "b"],
            "values": [{"subset": ["a"], "value": 0.25}]
        });
        assert!(serde_json::from_value::<Capacity>(missing).is_err());
        let non_monotone = serde_json::json!({
            "criteria": ["a", "b"],
            "values": [{"subset": ["a"], "value": 0.25}, {"subset": ["b"], "value": 0.75},
                       {"subset": ["a", "b"], "value": 0.5}]
        });
        assert!(serde_json::from_value::<Capacity>(non_monotone).is_err());
    }
}
