use serde::{Deserialize, Serialize};

use super::CbrError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldViolation {
    pub field: String,
    pub message: String,
}

impl FieldViolation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Quality state of one process operation and product characteristic.
///
/// `ncr` and `encr` are in percentage points (10 means 10 %).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIndicators", into = "RawIndicators")]
pub struct QualitySituation {
    pub cp: f64,
    pub cpk: f64,
    pub ncr: f64,
    pub encr: f64,
}

/// Target indicator values the applied scenario is expected to reach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIndicators", into = "RawIndicators")]
pub struct Objectives {
    pub cp: f64,
    pub cpk: f64,
    pub ncr: f64,
    pub encr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RawIndicators {
    cp: f64,
    cpk: f64,
    ncr: f64,
    encr: f64,
}

fn check_indicators(cp: f64, cpk: f64, ncr: f64, encr: f64, prefix: &str) -> Vec<FieldViolation> {
    let mut out = Vec::new();
    let field = |name: &str| format!("{prefix}{name}");
    for (name, v) in [("cp", cp), ("cpk", cpk), ("ncr", ncr), ("encr", encr)] {
        if !v.is_finite() {
            out.push(FieldViolation::new(&field(name), "must be a finite number"));
        }
    }
    if cp.is_finite() && cp < 0.0 {
        out.push(FieldViolation::new(
            &field("cp"),
            format!("{cp} is negative"),
        ));
    }
    for (name, v) in [("ncr", ncr), ("encr", encr)] {
        if v.is_finite() && !(0.0..=100.0).contains(&v) {
            out.push(FieldViolation::new(
                &field(name),
                format!("{v} is outside 0..=100 percent"),
            ));
        }
    }
    out
}

impl QualitySituation {
    pub fn new(cp: f64, cpk: f64, ncr: f64, encr: f64) -> Result<Self, CbrError> {
        Self::checked(cp, cpk, ncr, encr, "")
    }

    /// Like [`QualitySituation::new`], prefixing violated field names
    /// (e.g. `"observed."`).
    pub fn checked(cp: f64, cpk: f64, ncr: f64, encr: f64, prefix: &str) -> Result<Self, CbrError> {
        let violations = check_indicators(cp, cpk, ncr, encr, prefix);
        if violations.is_empty() {
            Ok(Self { cp, cpk, ncr, encr })
        } else {
            Err(CbrError::Validation(violations))
        }
    }

    pub fn validate(&self) -> Result<(), CbrError> {
        Self::new(self.cp, self.cpk, self.ncr, self.encr).map(|_| ())
    }

    /// Non-fatal remarks about the entry. Cpk cannot exceed Cp for a real
    /// process, but entry noise is tolerated.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.cpk > self.cp {
            out.push(format!(
                "cpk ({}) exceeds cp ({}); check the capability study",
                self.cpk, self.cp
            ));
        }
        out
    }

    /// `[cp, cpk, ncr, encr]`
    pub fn attributes(&self) -> [f64; 4] {
        [self.cp, self.cpk, self.ncr, self.encr]
    }
}

impl Objectives {
    pub fn new(cp: f64, cpk: f64, ncr: f64, encr: f64) -> Result<Self, CbrError> {
        Self::checked(cp, cpk, ncr, encr, "")
    }

    pub fn checked(cp: f64, cpk: f64, ncr: f64, encr: f64, prefix: &str) -> Result<Self, CbrError> {
        let violations = check_indicators(cp, cpk, ncr, encr, prefix);
        if violations.is_empty() {
            Ok(Self { cp, cpk, ncr, encr })
        } else {
            Err(CbrError::Validation(violations))
        }
    }

    pub fn validate(&self) -> Result<(), CbrError> {
        Self::new(self.cp, self.cpk, self.ncr, self.encr).map(|_| ())
    }
}

impl TryFrom<RawIndicators> for QualitySituation {
    type Error = CbrError;

    fn try_from(r: RawIndicators) -> Result<Self, Self::Error> {
        Self::new(r.cp, r.cpk, r.ncr, r.encr)
    }
}

impl From<QualitySituation> for RawIndicators {
    fn from(s: QualitySituation) -> Self {
        RawIndicators {
            cp: s.cp,
            cpk: s.cpk,
            ncr: s.ncr,
            encr: s.encr,
        }
    }
}

impl TryFrom<RawIndicators> for Objectives {
    type Error = CbrError;

    fn try_from(r: RawIndicators) -> Result<Self, Self::Error> {
        Self::new(r.cp, r.cpk, r.ncr, r.encr)
    }
}

impl From<Objectives> for RawIndicators {
    fn from(o: Objectives) -> Self {
        RawIndicators {
            cp: o.cp,
            cpk: o.cpk,
            ncr: o.ncr,
            encr: o.encr,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(QualitySituation::new(1.2, 1.2, 10.0, 3.0).is_ok());
        let err = QualitySituation::new(-0.1, 1.0, 150.0, -1.0).unwrap_err();
        let CbrError::Validation(v) = err else {
            panic!("expected validation error")
        };
        let fields: Vec<_> = v.iter().map(|f| f.field.as_str()).collect();
        assert_eq!(fields, ["cp", "ncr", "encr"]);
        assert!(QualitySituation::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn negative_cpk_allowed_but_cpk_above_cp_warns() {
        let s = QualitySituation::new(0.8, -0.2, 40.0, 5.0).unwrap();
        assert!(s.warnings().is_empty());
        let s = QualitySituation::new(0.9, 1.0, 47.0, 10.0).unwrap();
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn deserialization_validates() {
        let ok: QualitySituation =
            serde_json::from_str(r#"{"cp":1.2,"cpk":1.2,"ncr":10,"encr":3}"#).unwrap();
        assert_eq!(ok.attributes(), [1.2, 1.2, 10.0, 3.0]);
        assert!(
            serde_json::from_str::<QualitySituation>(r#"{"cp":1,"cpk":1,"ncr":150,"encr":3}"#)
                .is_err()
        );
        assert!(
            serde_json::from_str::<Objectives>(r#"{"cp":1,"cpk":1.2,"ncr":15,"encr":-3}"#).is_err()
        );
    }

    #[test]
    fn prefixed_field_names() {
        let CbrError::Validation(v) =
            QualitySituation::checked(1.0, 1.0, 101.0, 0.0, "observed.").unwrap_err()
        else {
            panic!()
        };
        assert_eq!(v[0].field, "observed.ncr");
    }
}
