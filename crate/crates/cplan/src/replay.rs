//! Scripted session sequences, one JSON object per line.
//!
//! ```text
//! {"op": "create_session", "as": "first"}
//! {"op": "situation", "session": "first", "cp": 1.2, "cpk": 1.2, "ncr": 10, "encr": 3,
//!  "objectives": {"cp": 1, "cpk": 1, "ncr": 15, "encr": 5},
//!  "expect": {"state": "ManualRequired"}}
//! {"op": "decision", "session": "first", "action": "accept", "expect_error": "illegal_transition"}
//! ```
//!
//! Every step runs through the same service as the HTTP API and its response
//! (the HTTP response body) is matched against `expect`: objects match when
//! every expected key matches, numbers within `tolerance` (default 1e-9),
//! arrays element by element. `expect_error` requires the step to fail with
//! that error code. Blank lines and lines starting with `#` are skipped.
//! See `docs/replay.md` for the list of operations.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cplan_core::cbr::Case;
use cplan_core::store::{decode_document, SystemConfig, CASES_FILE};
use cplan_core::workflow::SessionId;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::ApiError;
use crate::service::{
    parse_situation, ApplyRequest, CreateSessionRequest, DecisionRequest, Indicators,
    ManualRequest, SelectionRequest, Service, SituationRequest,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Keys consumed by the runner itself rather than passed to the operation.
const CONTROL_KEYS: [&str; 8] = [
    "op",
    "session",
    "as",
    "successor_as",
    "expect",
    "expect_error",
    "tolerance",
    "step",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub line: usize,
    pub op: String,
    pub label: Option<String>,
    pub passed: bool,
    pub message: Option<String>,
}

impl StepReport {
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} line {:>3} {}",
            if self.passed { "ok  " } else { "FAIL" },
            self.line,
            self.op
        );
        if let Some(label) = &self.label {
            let _ = write!(out, " ({label})");
        }
        if let Some(m) = &self.message {
            let _ = write!(out, ": {m}");
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReplayReport {
    pub steps: Vec<StepReport>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.passed)
    }

    pub fn failures(&self) -> usize {
        self.steps.iter().filter(|s| !s.passed).count()
    }
}

/// Runs a script file. Relative file references resolve against the
/// script's directory.
pub fn run_file(service: &mut Service, script: &Path) -> Result<ReplayReport, ApiError> {
    let text = std::fs::read_to_string(script)
        .map_err(|e| ApiError::validation(format!("{}: {e}", script.display())))?;
    let base = script.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(run(service, &text, &base))
}

pub fn run(service: &mut Service, script: &str, base: &Path) -> ReplayReport {
    let mut runner = Runner {
        service,
        base: base.to_path_buf(),
        names: HashMap::new(),
    };
    let mut report = ReplayReport::default();
    for (i, line) in script.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        report.steps.push(runner.step(i + 1, trimmed));
    }
    report
}

struct Runner<'a> {
    service: &'a mut Service,
    base: PathBuf,
    names: HashMap<String, SessionId>,
}

impl Runner<'_> {
    fn step(&mut self, line: usize, text: &str) -> StepReport {
        let mut report = StepReport {
            line,
            op: "?".into(),
            label: None,
            passed: false,
            message: None,
        };
        let step: Map<String, Value> = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => {
                report.message = Some(format!("not a JSON object: {e}"));
                return report;
            }
        };
        report.op = step
            .get("op")
            .and_then(Value::as_str)
            .unwrap_or("?")
            .to_string();
        report.label = step.get("step").and_then(Value::as_str).map(String::from);
        let tolerance = step
            .get("tolerance")
            .and_then(Value::as_f64)
            .unwrap_or(DEFAULT_TOLERANCE);
        let expect_error = step.get("expect_error").and_then(Value::as_str);
        let result = self.execute(&report.op, &step);
        let verdict = match (result, expect_error) {
            (Ok(_), Some(code)) => Err(format!("expected error `{code}` but the step succeeded")),
            (Err(e), Some(code)) if e.code.as_str() == code => Ok(()),
            (Err(e), Some(code)) => Err(format!("expected error `{code}`, got {e}")),
            (Err(e), None) => Err(e.to_string()),
            (Ok(actual), None) => match step.get("expect") {
                Some(expected) => matches(expected, &actual, tolerance, "$"),
                None => Ok(()),
            },
        };
        match verdict {
            Ok(()) => report.passed = true,
            Err(m) => report.message = Some(m),
        }
        report
    }

    fn session(&self, step: &Map<String, Value>) -> Result<SessionId, ApiError> {
        match step.get("session") {
            Some(Value::String(name)) => self
                .names
                .get(name)
                .copied()
                .ok_or_else(|| ApiError::validation(format!("no session named `{name}`"))),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(SessionId)
                .ok_or_else(|| ApiError::validation(format!("bad session id {n}"))),
            _ => Err(ApiError::validation("step needs a `session`")),
        }
    }

    /// The step's operation arguments: everything except the control keys.
    /// String values under `file_keys` are loaded from JSON files.
    fn args<T: DeserializeOwned>(
        &self,
        step: &Map<String, Value>,
        file_keys: &[&str],
    ) -> Result<T, ApiError> {
        let mut args = Map::new();
        for (k, v) in step {
            if CONTROL_KEYS.contains(&k.as_str()) {
                continue;
            }
            let v = match v {
                Value::String(path) if file_keys.contains(&k.as_str()) => self.load_json(path)?,
                other => other.clone(),
            };
            args.insert(k.clone(), v);
        }
        serde_json::from_value(Value::Object(args)).map_err(|e| ApiError::validation(e.to_string()))
    }

    fn load_json(&self, path: &str) -> Result<Value, ApiError> {
        let full = self.base.join(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| ApiError::validation(format!("{}: {e}", full.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ApiError::validation(format!("{}: {e}", full.display())))
    }

    fn execute(&mut self, op: &str, step: &Map<String, Value>) -> Result<Value, ApiError> {
        let out = match op {
            "create_session" => {
                let req: CreateSessionRequest = self.args(step, &[])?;
                let view = self.service.create_session(req)?;
                if let Some(name) = step.get("as").and_then(Value::as_str) {
                    self.names.insert(name.to_string(), view.session.id());
                }
                to_value(view)
            }
            "situation" => {
                let id = self.session(step)?;
                let req: SituationRequest = self.args(step, &[])?;
                to_value(self.service.submit_situation(id, req)?)
            }
            "decision" => {
                let id = self.session(step)?;
                let req: DecisionRequest = self.args(step, &[])?;
                to_value(self.service.decide(id, req)?)
            }
            "manual" => {
                let id = self.session(step)?;
                let req: ManualRequest =
                    self.args(step, &["matrices", "table", "capacity", "mobius"])?;
                to_value(self.service.manual(id, req)?)
            }
            "select" => {
                let id = self.session(step)?;
                let req: SelectionRequest = self.args(step, &[])?;
                to_value(self.service.select(id, req)?)
            }
            "objectives" => {
                let id = self.session(step)?;
                let req: Indicators = self.args(step, &[])?;
                to_value(self.service.update_objectives(id, req)?)
            }
            "apply" => {
                let id = self.session(step)?;
                let req: ApplyRequest = self.args(step, &[])?;
                to_value(self.service.apply(id, req)?)
            }
            "results" => {
                let id = self.session(step)?;
                let req: Indicators = self.args(step, &[])?;
                to_value(self.service.record_results(id, req)?)
            }
            "close" => {
                let id = self.session(step)?;
                let view = self.service.close(id)?;
                if let (Some(name), Some(next)) = (
                    step.get("successor_as").and_then(Value::as_str),
                    view.outcome.successor,
                ) {
                    self.names.insert(name.to_string(), next);
                }
                to_value(view)
            }
            "get_session" => to_value(self.service.session(self.session(step)?)?),
            "audit" => to_value(self.service.audit(self.session(step)?)?),
            "get_config" => to_value(self.service.config()),
            "set_config" => {
                let mut current = to_value(self.service.config());
                if let Some(patch) = step.get("config") {
                    merge(&mut current, patch);
                }
                let config: SystemConfig = serde_json::from_value(current)?;
                to_value(self.service.set_config(config)?)
            }
            "list_cases" => to_value(self.service.cases()),
            "import_cases" => {
                let cases = match step.get("cases") {
                    Some(Value::String(path)) => self.load_json(path)?,
                    Some(v) => v.clone(),
                    None => return Err(ApiError::validation("import_cases needs `cases`")),
                };
                to_value(self.service.import_cases(cases_from_json(cases)?)?)
            }
            "lookup" => {
                let threshold = step.get("threshold").and_then(Value::as_f64);
                let mut args = step.clone();
                args.remove("threshold");
                let raw: Indicators = self.args(&args, &[])?;
                to_value(self.service.lookup(&parse_situation(raw)?, threshold)?)
            }
            "health" => to_value(self.service.health()),
            other => return Err(ApiError::validation(format!("unknown op `{other}`"))),
        };
        Ok(out)
    }
}

fn to_value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("responses serialize")
}

/// Accepts a bare array of cases or a stored `cases.json` envelope.
pub fn cases_from_json(v: Value) -> Result<Vec<Case>, ApiError> {
    if v.get("schema_version").is_some() {
        let bytes = serde_json::to_vec(&v)?;
        let base: cplan_core::cbr::CaseBase = decode_document(CASES_FILE, &bytes)?;
        return Ok(base.cases().to_vec());
    }
    Ok(serde_json::from_value(v)?)
}

fn merge(target: &mut Value, patch: &Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                merge(t.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (t, p) => *t = p.clone(),
    }
}

/// Partial structural match of `actual` against `expected`.
pub fn matches(expected: &Value, actual: &Value, tolerance: f64, path: &str) -> Result<(), String> {
    match (expected, actual) {
        (Value::Object(e), Value::Object(a)) => {
            for (k, ev) in e {
                let sub = format!("{path}.{k}");
                match a.get(k) {
                    Some(av) => matches(ev, av, tolerance, &sub)?,
                    None if ev.is_null() => {}
                    None => return Err(format!("{sub} is missing")),
                }
            }
            Ok(())
        }
        (Value::Array(e), Value::Array(a)) => {
            if e.len() != a.len() {
                return Err(format!(
                    "{path} has {} elements, expected {}",
                    a.len(),
                    e.len()
                ));
            }
            for (i, (ev, av)) in e.iter().zip(a).enumerate() {
                matches(ev, av, tolerance, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        (Value::Number(e), Value::Number(a)) => {
            let (e, a) = (
                e.as_f64().unwrap_or(f64::NAN),
                a.as_f64().unwrap_or(f64::NAN),
            );
            if (e - a).abs() <= tolerance {
                Ok(())
            } else {
                Err(format!(
                    "{path} = {a}, expected {e} (tolerance {tolerance})"
                ))
            }
        }
        (e, a) if e == a => Ok(()),
        (e, a) => Err(format!("{path} = {a}, expected {e}")),
    }
}
