//! Operations shared by the HTTP handlers, the CLI and `replay`.
//!
//! Every mutation runs on a copy of the state. The audit events are appended
//! and the documents saved before the copy replaces the live state, so a
//! failed step (illegal transition, validation, disk error) leaves the
//! service exactly as it was.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use cplan_core::cbr::{
    adapt, rank_cases, retrieve, Case, CaseContext, CaseId, FieldViolation, Objectives,
    QualitySituation, Recommendation,
};
use cplan_core::mcdm::{zeta, Capacity, EvaluationTable, MobiusRepresentation, PairwiseMatrix};
use cplan_core::store::{AuditEvent, AuditKind, Store, SystemConfig, SystemState};
use cplan_core::workflow::{
    CloseOutcome, ControlScenario, DecisionSession, ManualEvaluation, ReviewPeriod,
    ScenarioCatalog, SessionId, SessionState, SubmitOutcome,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ApiError, ErrorCode};

/// Raw indicator values as entered; checked field by field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Indicators {
    pub cp: f64,
    pub cpk: f64,
    pub ncr: f64,
    pub encr: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub context: Option<CaseContext>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SituationRequest {
    pub cp: f64,
    pub cpk: f64,
    pub ncr: f64,
    pub encr: f64,
    pub objectives: Indicators,
    #[serde(default)]
    pub context: Option<CaseContext>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionAction {
    Accept,
    Reject,
    /// Leave a finished evaluation and go back to the judgments.
    BackToManual,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub action: DecisionAction,
}

/// Either pairwise matrices (one per criterion) or a ready table, and either
/// a capacity or its Möbius masses. Parts are kept as raw JSON so that
/// semantic problems (non-monotone capacity, bad column sums) surface as
/// domain errors rather than syntax errors.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManualRequest {
    #[serde(default)]
    pub alternatives: Option<Vec<String>>,
    #[serde(default)]
    pub matrices: Option<Value>,
    #[serde(default)]
    pub table: Option<Value>,
    #[serde(default)]
    pub capacity: Option<Value>,
    #[serde(default)]
    pub mobius: Option<Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRequest {
    pub scenario_id: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplyRequest {
    #[serde(default)]
    pub duration_secs: Option<u64>,
    #[serde(default)]
    pub basis: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub session: DecisionSession,
    pub next_states: Vec<SessionState>,
}

impl From<&DecisionSession> for SessionView {
    fn from(s: &DecisionSession) -> Self {
        Self {
            session: s.clone(),
            next_states: s.state().successors().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateView {
    pub state: SessionState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManualView {
    pub state: SessionState,
    #[serde(flatten)]
    pub evaluation: ManualEvaluation,
}

#[derive(Debug, Clone, Serialize)]
pub struct CloseView {
    pub state: SessionState,
    #[serde(flatten)]
    pub outcome: CloseOutcome,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub cases: usize,
    pub sessions: usize,
    pub scenarios: usize,
    pub threshold: f64,
}

/// One-shot retrieval result used by `recommend`.
#[derive(Debug, Clone, Serialize)]
pub struct Lookup {
    pub recommendation: Option<Recommendation>,
    /// Closest satisfactory case even when it is outside the threshold.
    pub nearest: Option<(CaseId, f64)>,
    pub threshold: f64,
}

fn invalid(violations: Vec<FieldViolation>) -> ApiError {
    let message = violations
        .iter()
        .map(|v| format!("{}: {}", v.field, v.message))
        .collect::<Vec<_>>()
        .join("; ");
    ApiError {
        code: ErrorCode::ValidationFailed,
        message,
        details: violations,
    }
}

fn situation_of(i: Indicators, prefix: &str) -> Result<QualitySituation, Vec<FieldViolation>> {
    match QualitySituation::checked(i.cp, i.cpk, i.ncr, i.encr, prefix) {
        Ok(s) => Ok(s),
        Err(cplan_core::cbr::CbrError::Validation(v)) => Err(v),
        Err(e) => Err(vec![FieldViolation {
            field: prefix.trim_end_matches('.').to_string(),
            message: e.to_string(),
        }]),
    }
}

fn objectives_of(i: Indicators, prefix: &str) -> Result<Objectives, Vec<FieldViolation>> {
    match Objectives::checked(i.cp, i.cpk, i.ncr, i.encr, prefix) {
        Ok(o) => Ok(o),
        Err(cplan_core::cbr::CbrError::Validation(v)) => Err(v),
        Err(e) => Err(vec![FieldViolation {
            field: prefix.trim_end_matches('.').to_string(),
            message: e.to_string(),
        }]),
    }
}

pub fn parse_situation(i: Indicators) -> Result<QualitySituation, ApiError> {
    situation_of(i, "").map_err(invalid)
}

fn domain<T: DeserializeOwned>(what: &str, v: Value) -> Result<T, ApiError> {
    serde_json::from_value(v)
        .map_err(|e| ApiError::new(ErrorCode::DomainError, format!("{what}: {e}")))
}

/// Transitions added since `from`, as audit events.
fn transition_events(s: &DecisionSession, from: usize) -> Vec<AuditEvent> {
    let mut out = Vec::new();
    for t in &s.audit()[from..] {
        out.push(AuditEvent {
            timestamp: t.at,
            session_id: Some(s.id()),
            kind: AuditKind::Transition,
            before: json!(t.from),
            after: json!({ "state": t.to, "note": t.note }),
        });
        if let (Some(rec), SessionState::AutoRecommended) = (&t.recommendation, t.to) {
            out.push(AuditEvent {
                timestamp: t.at,
                session_id: Some(s.id()),
                kind: AuditKind::Recommendation,
                before: Value::Null,
                after: json!(rec),
            });
        }
    }
    out
}

pub struct Service {
    store: Store,
    state: SystemState,
}

impl Service {
    /// Opens a data directory and loads it. Leftover temporary files from an
    /// interrupted save are returned so the caller can report them.
    pub fn open(dir: impl Into<PathBuf>) -> Result<(Self, Vec<PathBuf>), ApiError> {
        let store = Store::open(dir)?;
        let loaded = store.load()?;
        Ok((
            Self {
                store,
                state: loaded.state,
            },
            loaded.leftovers,
        ))
    }

    pub fn dir(&self) -> &Path {
        self.store.dir()
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    fn mutate<R>(
        &mut self,
        f: impl FnOnce(&mut SystemState, DateTime<Utc>) -> Result<(R, Vec<AuditEvent>), ApiError>,
    ) -> Result<R, ApiError> {
        let mut next = self.state.clone();
        let (out, events) = f(&mut next, Utc::now())?;
        self.store.append_audit(&events)?;
        self.store.save(&next)?;
        self.state = next;
        Ok(out)
    }

    /// Runs `f` on one session and records the transitions it made.
    fn on_session<R>(
        &mut self,
        id: SessionId,
        f: impl FnOnce(&mut DecisionSession, &mut SystemState, DateTime<Utc>) -> Result<R, ApiError>,
    ) -> Result<R, ApiError> {
        self.mutate(|state, now| {
            let mut session = state.sessions.require(id)?.clone();
            let before = session.audit().len();
            let out = f(&mut session, state, now)?;
            let events = transition_events(&session, before);
            *state.sessions.require_mut(id)? = session;
            Ok((out, events))
        })
    }

    pub fn health(&self) -> Health {
        Health {
            status: "ok",
            cases: self.state.cases.len(),
            sessions: self.state.sessions.len(),
            scenarios: self.state.scenarios.len(),
            threshold: self.state.config.retrieval.threshold,
        }
    }

    pub fn sessions(&self) -> Vec<SessionView> {
        self.state
            .sessions
            .sessions()
            .iter()
            .map(SessionView::from)
            .collect()
    }

    pub fn session(&self, id: SessionId) -> Result<SessionView, ApiError> {
        Ok(self.state.sessions.require(id)?.into())
    }

    pub fn create_session(&mut self, req: CreateSessionRequest) -> Result<SessionView, ApiError> {
        self.mutate(|state, now| {
            let s = state.sessions.create(req.context.unwrap_or_default(), now);
            let event = AuditEvent {
                timestamp: now,
                session_id: Some(s.id()),
                kind: AuditKind::Transition,
                before: Value::Null,
                after: json!({ "state": s.state() }),
            };
            Ok((SessionView::from(&*s), vec![event]))
        })
    }

    pub fn submit_situation(
        &mut self,
        id: SessionId,
        req: SituationRequest,
    ) -> Result<SubmitOutcome, ApiError> {
        let raw = Indicators {
            cp: req.cp,
            cpk: req.cpk,
            ncr: req.ncr,
            encr: req.encr,
        };
        let mut violations = Vec::new();
        let situation = situation_of(raw, "").map_err(|v| violations.extend(v)).ok();
        let objectives = objectives_of(req.objectives, "objectives.")
            .map_err(|v| violations.extend(v))
            .ok();
        let (Some(situation), Some(objectives)) = (situation, objectives) else {
            return Err(invalid(violations));
        };
        self.on_session(id, |s, state, now| {
            if let Some(ctx) = req.context {
                s.set_context(ctx)?;
            }
            Ok(s.submit_situation(
                situation,
                objectives,
                &state.cases,
                &state.config.retrieval,
                now,
            )?)
        })
    }

    pub fn decide(&mut self, id: SessionId, req: DecisionRequest) -> Result<StateView, ApiError> {
        self.on_session(id, |s, _, now| {
            let state = match req.action {
                DecisionAction::Accept => s.accept_recommendation(now)?,
                DecisionAction::Reject => s.reject_recommendation(now)?,
                DecisionAction::BackToManual => s.back_to_manual(now)?,
            };
            Ok(StateView {
                state,
                selected: s.selected().map(|x| x.0.clone()),
            })
        })
    }

    pub fn manual(&mut self, id: SessionId, req: ManualRequest) -> Result<ManualView, ApiError> {
        let capacity: Capacity = match (req.capacity, req.mobius) {
            (Some(c), None) => domain("capacity", c)?,
            (None, Some(m)) => {
                let masses: MobiusRepresentation = domain("mobius", m)?;
                zeta(&masses)?
            }
            _ => {
                return Err(ApiError::field(
                    "capacity",
                    "give exactly one of `capacity` or `mobius`",
                ))
            }
        };
        enum Source {
            Matrices(Vec<PairwiseMatrix>),
            Table(EvaluationTable),
        }
        let source = match (req.matrices, req.table) {
            (Some(m), None) => Source::Matrices(domain("matrices", m)?),
            (None, Some(t)) => Source::Table(domain("table", t)?),
            _ => {
                return Err(ApiError::field(
                    "matrices",
                    "give exactly one of `matrices` or `table`",
                ))
            }
        };
        let alternatives = req.alternatives;
        self.on_session(id, move |s, state, now| {
            let evaluation = match source {
                Source::Table(table) => {
                    s.manual_evaluate_table(&state.scenarios, table, capacity, now)?
                }
                Source::Matrices(matrices) => {
                    let matrices = order_matrices(matrices, &capacity)?;
                    let alternatives = alternatives.unwrap_or_else(|| {
                        state
                            .scenarios
                            .scenarios()
                            .iter()
                            .map(|x| x.id.0.clone())
                            .collect()
                    });
                    s.manual_evaluate(
                        &state.scenarios,
                        alternatives,
                        matrices,
                        capacity,
                        &state.config.consistency,
                        now,
                    )?
                }
            };
            Ok(ManualView {
                state: SessionState::ManualEvaluated,
                evaluation: evaluation.clone(),
            })
        })
    }

    pub fn select(&mut self, id: SessionId, req: SelectionRequest) -> Result<StateView, ApiError> {
        self.on_session(id, |s, state, now| {
            let next = s.confirm_selection(&state.scenarios, &req.scenario_id, now)?;
            Ok(StateView {
                state: next,
                selected: Some(req.scenario_id),
            })
        })
    }

    pub fn update_objectives(
        &mut self,
        id: SessionId,
        req: Indicators,
    ) -> Result<SessionView, ApiError> {
        let objectives = objectives_of(req, "objectives.").map_err(invalid)?;
        self.mutate(|state, now| {
            let s = state.sessions.require_mut(id)?;
            let before = s.objectives().copied();
            s.update_objectives(objectives)?;
            let event = AuditEvent {
                timestamp: now,
                session_id: Some(id),
                kind: AuditKind::Transition,
                before: json!({ "objectives": before }),
                after: json!({ "objectives": objectives }),
            };
            Ok((SessionView::from(&*s), vec![event]))
        })
    }

    pub fn apply(&mut self, id: SessionId, req: ApplyRequest) -> Result<StateView, ApiError> {
        self.on_session(id, |s, _, now| {
            let period = ReviewPeriod {
                duration_secs: req.duration_secs,
                basis: req.basis,
            };
            Ok(StateView {
                state: s.apply(period, now)?,
                selected: s.selected().map(|x| x.0.clone()),
            })
        })
    }

    pub fn record_results(
        &mut self,
        id: SessionId,
        req: Indicators,
    ) -> Result<StateView, ApiError> {
        let observed = situation_of(req, "").map_err(invalid)?;
        self.on_session(id, |s, _, now| {
            Ok(StateView {
                state: s.record_results(observed, now)?,
                selected: s.selected().map(|x| x.0.clone()),
            })
        })
    }

    pub fn close(&mut self, id: SessionId) -> Result<CloseView, ApiError> {
        self.mutate(|state, now| {
            let next_id = state.sessions.next_id();
            let mut session = state.sessions.require(id)?.clone();
            let before = session.audit().len();
            let (outcome, successor) =
                session.close(&mut state.cases, &mut state.config.retrieval, next_id, now)?;
            let mut events = vec![AuditEvent {
                timestamp: now,
                session_id: Some(id),
                kind: AuditKind::Revision,
                before: Value::Null,
                after: json!({ "outcome": outcome.outcome, "action": outcome.action }),
            }];
            if let Some(change) = outcome.threshold_change {
                events.push(AuditEvent {
                    timestamp: now,
                    session_id: Some(id),
                    kind: AuditKind::ThresholdChange,
                    before: json!(change.previous),
                    after: json!(change.new),
                });
            }
            events.push(AuditEvent {
                timestamp: now,
                session_id: Some(id),
                kind: AuditKind::Retention,
                before: Value::Null,
                after: json!({ "case_id": outcome.case_id, "status": outcome.status }),
            });
            events.extend(transition_events(&session, before));
            *state.sessions.require_mut(id)? = session;
            if let Some(next) = successor {
                events.extend(transition_events(&next, 0));
                state.sessions.insert(next)?;
            }
            let view = CloseView {
                state: SessionState::Closed,
                outcome,
                threshold: state.config.retrieval.threshold,
            };
            Ok((view, events))
        })
    }

    pub fn audit(&self, id: SessionId) -> Result<Vec<AuditEvent>, ApiError> {
        self.state.sessions.require(id)?;
        Ok(self.store.read_audit(id)?)
    }

    pub fn cases(&self) -> &[Case] {
        self.state.cases.cases()
    }

    /// Retains closed cases from elsewhere under fresh ids, in order.
    pub fn import_cases(&mut self, cases: Vec<Case>) -> Result<Vec<CaseId>, ApiError> {
        self.mutate(|state, now| {
            let mut ids = Vec::with_capacity(cases.len());
            let mut events = Vec::with_capacity(cases.len());
            for (i, case) in cases.into_iter().enumerate() {
                let original = case.id;
                if let Some(r) = &case.retrieval {
                    if state.cases.get(r.source_case).is_none() {
                        return Err(ApiError::field(
                            &format!("cases[{i}].retrieval.source_case"),
                            format!("case {} does not exist", r.source_case),
                        ));
                    }
                }
                let id = state.cases.retain(case).map_err(|e| {
                    let mut err = ApiError::from(e);
                    err.message = format!("cases[{i}]: {}", err.message);
                    err
                })?;
                events.push(AuditEvent {
                    timestamp: now,
                    session_id: None,
                    kind: AuditKind::CaseImport,
                    before: json!(original),
                    after: json!(id),
                });
                ids.push(id);
            }
            Ok((ids, events))
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.state.config
    }

    pub fn set_config(&mut self, config: SystemConfig) -> Result<SystemConfig, ApiError> {
        config.retrieval.validate()?;
        let t = config.consistency.threshold;
        if !(t.is_finite() && t >= 0.0) {
            return Err(ApiError::field(
                "consistency.threshold",
                format!("{t} is not a non-negative number"),
            ));
        }
        self.mutate(|state, now| {
            let event = AuditEvent {
                timestamp: now,
                session_id: None,
                kind: AuditKind::ConfigChange,
                before: json!(state.config),
                after: json!(config),
            };
            state.config = config.clone();
            Ok((config, vec![event]))
        })
    }

    pub fn scenarios(&self) -> &ScenarioCatalog {
        &self.state.scenarios
    }

    pub fn add_scenario(&mut self, scenario: ControlScenario) -> Result<ControlScenario, ApiError> {
        self.mutate(|state, now| {
            state.scenarios.add(scenario.clone())?;
            let event = catalog_event(now, Value::Null, json!(scenario));
            Ok((scenario, vec![event]))
        })
    }

    pub fn update_scenario(
        &mut self,
        scenario: ControlScenario,
    ) -> Result<ControlScenario, ApiError> {
        self.mutate(|state, now| {
            let before = json!(state.scenarios.get(scenario.id.as_str()));
            state.scenarios.update(scenario.clone())?;
            let event = catalog_event(now, before, json!(scenario));
            Ok((scenario, vec![event]))
        })
    }

    pub fn replace_scenarios(
        &mut self,
        catalog: ScenarioCatalog,
    ) -> Result<ScenarioCatalog, ApiError> {
        if catalog.is_empty() {
            return Err(ApiError::validation("the scenario catalog cannot be empty"));
        }
        self.mutate(|state, now| {
            let event = catalog_event(now, json!(state.scenarios), json!(catalog));
            state.scenarios = catalog.clone();
            Ok((catalog, vec![event]))
        })
    }

    /// Retrieval against the current base without opening a session.
    pub fn lookup(
        &self,
        situation: &QualitySituation,
        threshold: Option<f64>,
    ) -> Result<Lookup, ApiError> {
        lookup(&self.state, situation, threshold)
    }
}

fn catalog_event(now: DateTime<Utc>, before: Value, after: Value) -> AuditEvent {
    AuditEvent {
        timestamp: now,
        session_id: None,
        kind: AuditKind::CatalogChange,
        before,
        after,
    }
}

/// Puts labelled matrices into the capacity's criteria order. Unlabelled
/// matrices are taken positionally.
fn order_matrices(
    mut matrices: Vec<PairwiseMatrix>,
    capacity: &Capacity,
) -> Result<Vec<PairwiseMatrix>, ApiError> {
    if matrices.iter().any(|m| m.label().is_empty()) {
        return Ok(matrices);
    }
    let criteria = capacity.criteria();
    for m in &matrices {
        if criteria.index_of(m.label()).is_none() {
            return Err(ApiError::field(
                "matrices",
                format!("`{}` is not a criterion of the capacity", m.label()),
            ));
        }
    }
    matrices.sort_by_key(|m| criteria.index_of(m.label()));
    Ok(matrices)
}

pub fn lookup(
    state: &SystemState,
    situation: &QualitySituation,
    threshold: Option<f64>,
) -> Result<Lookup, ApiError> {
    let mut cfg = state.config.retrieval.clone();
    if let Some(t) = threshold {
        cfg.threshold = t;
        cfg.validate()?;
    }
    let recommendation = match retrieve(situation, &state.cases, &cfg) {
        Some(hit) => Some(adapt(&hit, &state.cases)?),
        None => None,
    };
    let nearest = rank_cases(situation, &state.cases, &cfg)
        .first()
        .map(|r| (r.case_id, r.distance));
    Ok(Lookup {
        recommendation,
        nearest,
        threshold: cfg.threshold,
    })
}
