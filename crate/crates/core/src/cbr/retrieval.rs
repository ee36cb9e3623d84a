use serde::{Deserialize, Serialize};

use super::case::{CaseBase, CaseId, ScenarioId};
use super::situation::QualitySituation;
use super::CbrError;

/// Retrieval settings chosen by the decision maker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct RetrievalConfig {
    /// A source case is eligible only if its distance is strictly below this.
    pub threshold: f64,
    /// Minkowski exponent, at least 1.
    pub order_p: f64,
    /// Weights on `[cp, cpk, ncr, encr]`.
    pub attribute_weights: [f64; 4],
    /// Fraction shaved off a failed recommendation's distance when the
    /// threshold is repaired.
    pub repair_margin: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            threshold: 10.0,
            order_p: 1.0,
            attribute_weights: [1.0; 4],
            repair_margin: 0.05,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    threshold: f64,
    #[serde(default = "one")]
    order_p: f64,
    #[serde(default = "unit_weights")]
    attribute_weights: [f64; 4],
    #[serde(default = "default_margin")]
    repair_margin: f64,
}

fn one() -> f64 {
    1.0
}

fn unit_weights() -> [f64; 4] {
    [1.0; 4]
}

fn default_margin() -> f64 {
    0.05
}

impl TryFrom<RawConfig> for RetrievalConfig {
    type Error = CbrError;

    fn try_from(r: RawConfig) -> Result<Self, Self::Error> {
        let cfg = RetrievalConfig {
            threshold: r.threshold,
            order_p: r.order_p,
            attribute_weights: r.attribute_weights,
            repair_margin: r.repair_margin,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<RetrievalConfig> for RawConfig {
    fn from(c: RetrievalConfig) -> Self {
        RawConfig {
            threshold: c.threshold,
            order_p: c.order_p,
            attribute_weights: c.attribute_weights,
            repair_margin: c.repair_margin,
        }
    }
}

impl RetrievalConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CbrError> {
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(CbrError::InvalidConfig(format!(
                "threshold must be a non-negative number, got {}",
                self.threshold
            )));
        }
        if !(self.order_p.is_finite() && self.order_p >= 1.0) {
            return Err(CbrError::InvalidConfig(format!(
                "order_p must be at least 1, got {}",
                self.order_p
            )));
        }
        if self
            .attribute_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(CbrError::InvalidConfig(
                "attribute weights must be non-negative".into(),
            ));
        }
        if self.attribute_weights.iter().all(|w| *w == 0.0) {
            return Err(CbrError::InvalidConfig(
                "at least one attribute weight must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.repair_margin) {
            return Err(CbrError::InvalidConfig(format!(
                "repair_margin must be in [0, 1), got {}",
                self.repair_margin
            )));
        }
        Ok(())
    }
}

/// Weighted Minkowski distance `(Σ w_k |a_k - b_k|^p)^(1/p)` over
/// `[cp, cpk, ncr, encr]`. With the defaults this is the plain sum of
/// absolute differences.
pub fn distance(a: &QualitySituation, b: &QualitySituation, cfg: &RetrievalConfig) -> f64 {
    let diffs = a
        .attributes()
        .into_iter()
        .zip(b.attributes())
        .map(|(x, y)| (x - y).abs())
        .zip(cfg.attribute_weights);
    let p = cfg.order_p;
    if p == 1.0 {
        diffs.map(|(d, w)| w * d).sum()
    } else if p == 2.0 {
        diffs.map(|(d, w)| w * d * d).sum::<f64>().sqrt()
    } else {
        diffs.map(|(d, w)| w * d.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub case_id: CaseId,
    pub distance: f64,
}

/// Nearest satisfactory case strictly within the threshold.
///
/// Equal distances resolve to the most recently retained case.
pub fn retrieve(
    target: &QualitySituation,
    base: &CaseBase,
    cfg: &RetrievalConfig,
) -> Option<RetrievalResult> {
    let mut best: Option<RetrievalResult> = None;
    // Ascending ids, so `<=` lets a later case win a tie.
    for case in base.cases().iter().filter(|c| c.is_retrievable()) {
        let d = distance(target, &case.situation, cfg);
        if best.is_none_or(|b| d <= b.distance) {
            best = Some(RetrievalResult {
                case_id: case.id,
                distance: d,
            });
        }
    }
    best.filter(|b| b.distance < cfg.threshold)
}

/// Every satisfactory case ordered by distance to `target` (closest first,
/// ties to the larger id), regardless of the threshold.
pub fn rank_cases(
    target: &QualitySituation,
    base: &CaseBase,
    cfg: &RetrievalConfig,
) -> Vec<RetrievalResult> {
    let mut out: Vec<RetrievalResult> = base
        .cases()
        .iter()
        .filter(|c| c.is_retrievable())
        .map(|c| RetrievalResult {
            case_id: c.id,
            distance: distance(target, &c.situation, cfg),
        })
        .collect();
    out.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(b.case_id.cmp(&a.case_id))
    });
    out
}

/// An automatic recommendation, with a link back to the source case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub scenario_id: ScenarioId,
    pub distance: f64,
    pub source_case: CaseId,
}

/// Reuses the source case's solution unchanged.
pub fn adapt(result: &RetrievalResult, base: &CaseBase) -> Result<Recommendation, CbrError> {
    let source = base
        .get(result.case_id)
        .ok_or(CbrError::DanglingCase(result.case_id))?;
    Ok(Recommendation {
        scenario_id: source.scenario_id.clone(),
        distance: result.distance,
        source_case: source.id,
    })
}
