use serde::{Deserialize, Serialize};

use super::pairwise::{validate_pairwise, PairwiseMatrix};
use super::{McdmError, MAX_CRITERIA};

/// Consistency ratios above this are flagged to the decision maker.
pub const CONSISTENCY_THRESHOLD: f64 = 0.10;

const SUM_TOLERANCE: f64 = 1e-9;

// Saaty's random consistency indices, n = 1..=9.
const RANDOM_INDEX: [f64; 9] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45];

/// Random consistency index for an `n x n` matrix, if tabulated.
pub fn random_index(n: usize) -> Option<f64> {
    n.checked_sub(1).and_then(|i| RANDOM_INDEX.get(i)).copied()
}

/// Non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PriorityVector(Vec<f64>);

impl PriorityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, McdmError> {
        if weights.is_empty() {
            return Err(McdmError::Empty);
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(McdmError::InvalidTable(format!(
                "priority weight {w} is negative or not finite"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(McdmError::InvalidTable(format!(
                "priority weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    /// Scales non-negative weights so they sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self, McdmError> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(McdmError::InvalidTable(
                "weights cannot be normalized".into(),
            ));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for PriorityVector {
    type Error = McdmError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<PriorityVector> for Vec<f64> {
    fn from(v: PriorityVector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for PriorityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityMethod {
    Eigenvector,
    /// Power iteration hit its cap; weights are row geometric means.
    GeometricMeanFallback,
    GeometricMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityResult {
    pub weights: PriorityVector,
    /// Principal eigenvalue estimate.
    pub lambda_max: f64,
    pub method: PriorityMethod,
    pub iterations: usize,
}

impl PriorityResult {
    pub fn consistency_ratio(&self) -> Result<f64, McdmError> {
        ratio_from_lambda(self.lambda_max, self.weights.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Max-norm change between successive normalized iterates.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

/// Principal-eigenvector priorities of a valid pairwise matrix.
pub fn priority_vector(m: &PairwiseMatrix) -> Result<PriorityResult, McdmError> {
    priority_vector_with(m, EigenOptions::default())
}

pub fn priority_vector_with(
    m: &PairwiseMatrix,
    opts: EigenOptions,
) -> Result<PriorityResult, McdmError> {
    ensure_valid(m)?;
    let n = m.size();
    let mut w = vec![1.0 / n as f64; n];
    for iteration in 1..=opts.max_iterations {
        let y = m.mul_vec(&w);
        let sum: f64 = y.iter().sum();
        let next: Vec<f64> = y.iter().map(|v| v / sum).collect();
        let delta = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next;
        if delta < opts.tolerance {
            // Since w sums to one, the entries of A·w sum to lambda.
            let lambda_max = m.mul_vec(&w).iter().sum();
            return Ok(PriorityResult {
                weights: PriorityVector::normalized(w)?,
                lambda_max,
                method: PriorityMethod::Eigenvector,
                iterations: iteration,
            });
        }
    }
    let mut fallback = geometric_mean_priorities(m)?;
    fallback.method = PriorityMethod::GeometricMeanFallback;
    fallback.iterations = opts.max_iterations;
    Ok(fallback)
}

/// Row geometric-mean priorities. `lambda_max` is estimated as the mean of
/// `(A·w)_i / w_i`.
pub fn geometric_mean_priorities(m: &PairwiseMatrix) -> Result<PriorityResult, McdmError> {
    ensure_valid(m)?;
    let n = m.size();
    let means: Vec<f64> = (0..n)
        .map(|i| {
            let log_sum: f64 = (0..n).map(|j| m.get(i, j).ln()).sum();
            (log_sum / n as f64).exp()
        })
        .collect();
    let weights = PriorityVector::normalized(means)?;
    let aw = m.mul_vec(weights.as_slice());
    let lambda_max = aw
        .iter()
        .zip(weights.as_slice())
        .map(|(a, w)| a / w)
        .sum::<f64>()
        / n as f64;
    Ok(PriorityResult {
        weights,
        lambda_max,
        method: PriorityMethod::GeometricMean,
        iterations: 0,
    })
}

/// `((lambda_max - n) / (n - 1)) / RI(n)`, zero for `n <= 2`.
pub fn consistency_ratio(m: &PairwiseMatrix) -> Result<f64, McdmError> {
    check_dimension(m.size())?;
    if m.size() <= 2 {
        ensure_valid(m)?;
        return Ok(0.0);
    }
    priority_vector(m)?.consistency_ratio()
}

fn ratio_from_lambda(lambda_max: f64, n: usize) -> Result<f64, McdmError> {
    check_dimension(n)?;
    if n <= 2 {
        return Ok(0.0);
    }
    let ci = (lambda_max - n as f64) / (n as f64 - 1.0);
    let ri = random_index(n).unwrap_or(f64::NAN);
    // lambda_max >= n holds exactly; rounding can push it a hair below.
    Ok((ci / ri).max(0.0))
}

fn check_dimension(n: usize) -> Result<(), McdmError> {
    if n > MAX_CRITERIA {
        return Err(McdmError::UnsupportedDimension {
            n,
            max: MAX_CRITERIA,
        });
    }
    Ok(())
}

fn ensure_valid(m: &PairwiseMatrix) -> Result<(), McdmError> {
    let report = validate_pairwise(m);
    if report.is_valid() {
        Ok(())
    } else {
        Err(McdmError::InvalidMatrix(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn saaty_example() -> PairwiseMatrix {
        PairwiseMatrix::from_upper_triangle(3, &[3.0, 5.0, 3.0]).unwrap()
    }

    #[test]
    fn all_ones_gives_uniform_weights() {
        let m = PairwiseMatrix::from_rows(vec![vec![1.0; 3]; 3]).unwrap();
        let r = priority_vector(&m).unwrap();
        for w in r.weights.as_slice() {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(consistency_ratio(&m).unwrap(), 0.0);
    }

    #[test]
    fn consistent_matrix_recovers_weights() {
        let m = PairwiseMatrix::from_weights(&[0.6, 0.3, 0.1]).unwrap();
        let r = priority_vector(&m).unwrap();
        for (got, want) in r.weights.as_slice().iter().zip([0.6, 0.3, 0.1]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!(consistency_ratio(&m).unwrap() < 1e-6);
    }

    #[test]
    fn classic_three_by_three() {
        let r = priority_vector(&saaty_example()).unwrap();
        let w = r.weights.as_slice();
        assert!((w[0] - 0.637).abs() < 0.005);
        assert!((w[1] - 0.258).abs() < 0.005);
        assert!((w[2] - 0.105).abs() < 0.005);
        assert_eq!(r.method, PriorityMethod::Eigenvector);
        let cr = consistency_ratio(&saaty_example()).unwrap();
        assert!((cr - 0.03).abs() < 0.01, "cr = {cr}");
    }

    #[test]
    fn iteration_cap_falls_back_to_geometric_mean() {
        let opts = EigenOptions {
            tolerance: 1e-10,
            max_iterations: 1,
        };
        let r = priority_vector_with(&saaty_example(), opts).unwrap();
        assert_eq!(r.method, PriorityMethod::GeometricMeanFallback);
        let gm = geometric_mean_priorities(&saaty_example()).unwrap();
        assert_eq!(r.weights, gm.weights);
    }

    #[test]
    fn two_by_two_has_zero_ratio() {
        let m = PairwiseMatrix::from_upper_triangle(2, &[7.0]).unwrap();
        assert_eq!(consistency_ratio(&m).unwrap(), 0.0);
    }

    #[test]
    fn ten_by_ten_ratio_unsupported() {
        let m = PairwiseMatrix::from_rows(vec![vec![1.0; 10]; 10]).unwrap();
        assert!(priority_vector(&m).is_ok());
        assert!(matches!(
            consistency_ratio(&m),
            Err(McdmError::UnsupportedDimension { n: 10, .. })
        ));
    }

    #[test]
    fn invalid_matrix_rejected() {
        let m = PairwiseMatrix::from_rows(vec![vec![1.0, 3.0], vec![0.4, 1.0]]).unwrap();
        assert!(matches!(
            priority_vector(&m),
            Err(McdmError::InvalidMatrix(_))
        ));
    }

    #[test]
    fn random_index_table() {
        assert_eq!(random_index(3), Some(0.58));
        assert_eq!(random_index(9), Some(1.45));
        assert_eq!(random_index(10), None);
        assert_eq!(random_index(0), None);
    }
}
