use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::catalog::ScenarioCatalog;
use super::WorkflowError;
use crate::cbr::{
    adapt, evaluate_outcome, retrieve, revise, Case, CaseBase, CaseContext, CaseId, CaseStatus,
    Objectives, Origin, Outcome, QualitySituation, Recommendation, RetrievalConfig,
    RetrievalProvenance, RevisionAction, ScenarioId,
};
use crate::mcdm::{
    priority_vector, rank_alternatives, saaty_scale_violations, validate_pairwise, Capacity,
    EvaluationTable, McdmError, PairwiseMatrix, PriorityMethod, ScoredAlternative,
    CONSISTENCY_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub u64);

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionState {
    Created,
    SituationEntered,
    AutoRecommended,
    ManualRequired,
    ManualEvaluated,
    ScenarioSelected,
    Applied,
    ResultsRecorded,
    Closed,
}

impl SessionState {
    pub const ALL: [SessionState; 9] = [
        SessionState::Created,
        SessionState::SituationEntered,
        SessionState::AutoRecommended,
        SessionState::ManualRequired,
        SessionState::ManualEvaluated,
        SessionState::ScenarioSelected,
        SessionState::Applied,
        SessionState::ResultsRecorded,
        SessionState::Closed,
    ];

    pub fn successors(self) -> &'static [SessionState] {
        use SessionState::*;
        match self {
            Created => &[SituationEntered],
            SituationEntered => &[AutoRecommended, ManualRequired],
            AutoRecommended => &[ScenarioSelected, ManualRequired],
            ManualRequired => &[ManualEvaluated],
            ManualEvaluated => &[ScenarioSelected, ManualRequired],
            ScenarioSelected => &[Applied],
            Applied => &[ResultsRecorded],
            ResultsRecorded => &[Closed],
            Closed => &[],
        }
    }

    pub fn can_move_to(self, next: SessionState) -> bool {
        self.successors().contains(&next)
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One edge taken by a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: SessionState,
    pub to: SessionState,
    pub at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommendation: Option<Recommendation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// The period T after which results are read. Recorded only; nothing is
/// scheduled from it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewPeriod {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_secs: Option<u64>,
    /// How T was chosen, e.g. "two production batches".
    #[serde(default)]
    pub basis: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsistencyPolicy {
    pub threshold: f64,
    /// Reject evaluations with an inconsistent matrix instead of warning.
    pub strict: bool,
}

impl Default for ConsistencyPolicy {
    fn default() -> Self {
        Self {
            threshold: CONSISTENCY_THRESHOLD,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub criterion: String,
    /// `None` when the matrix is too large for the random-index table.
    pub ratio: Option<f64>,
    pub method: PriorityMethod,
    pub acceptable: bool,
}

/// Artifacts of one manual evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualEvaluation {
    /// One matrix per criterion over the alternatives; empty when the table
    /// was supplied directly.
    #[serde(default)]
    pub matrices: Vec<PairwiseMatrix>,
    #[serde(default)]
    pub consistency: Vec<ConsistencyCheck>,
    pub capacity: Capacity,
    pub table: EvaluationTable,
    pub ranking: Vec<ScoredAlternative>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ManualEvaluation {
    pub fn best(&self) -> Option<&ScoredAlternative> {
        self.ranking.first()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub state: SessionState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recommendation: Option<Recommendation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChange {
    pub previous: f64,
    pub new: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloseOutcome {
    pub case_id: CaseId,
    pub outcome: Outcome,
    pub status: CaseStatus,
    pub action: RevisionAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_change: Option<ThresholdChange>,
    /// Session re-opened for adjusting the judgments after a failed manual choice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub successor: Option<SessionId>,
}

/// One pass from situation entry to case retention.
///
/// Every operation checks the current state first and leaves the session
/// untouched when it fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSession {
    id: SessionId,
    #[serde(default)]
    context: CaseContext,
    state: SessionState,
    #[serde(default)]
    situation: Option<QualitySituation>,
    #[serde(default)]
    objectives: Option<Objectives>,
    #[serde(default)]
    recommendation: Option<Recommendation>,
    #[serde(default)]
    evaluation: Option<ManualEvaluation>,
    /// Evaluation of the failed predecessor, offered for adjustment.
    #[serde(default)]
    prior_evaluation: Option<ManualEvaluation>,
    #[serde(default)]
    selected: Option<ScenarioId>,
    #[serde(default)]
    origin: Option<Origin>,
    #[serde(default)]
    period: Option<ReviewPeriod>,
    #[serde(default)]
    observed: Option<QualitySituation>,
    created_at: DateTime<Utc>,
    #[serde(default)]
    applied_at: Option<DateTime<Utc>>,
    #[serde(default)]
    results_at: Option<DateTime<Utc>>,
    #[serde(default)]
    closed_at: Option<DateTime<Utc>>,
    #[serde(default)]
    predecessor: Option<SessionId>,
    #[serde(default)]
    closing: Option<CloseOutcome>,
    #[serde(default)]
    audit: Vec<Transition>,
}

impl DecisionSession {
    pub fn new(id: SessionId, context: CaseContext, now: DateTime<Utc>) -> Self {
        Self {
            id,
            context,
            state: SessionState::Created,
            situation: None,
            objectives: None,
            recommendation: None,
            evaluation: None,
            prior_evaluation: None,
            selected: None,
            origin: None,
            period: None,
            observed: None,
            created_at: now,
            applied_at: None,
            results_at: None,
            closed_at: None,
            predecessor: None,
            closing: None,
            audit: Vec::new(),
        }
    }

    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn context(&self) -> &CaseContext {
        &self.context
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn situation(&self) -> Option<&QualitySituation> {
        self.situation.as_ref()
    }

    pub fn objectives(&self) -> Option<&Objectives> {
        self.objectives.as_ref()
    }

    pub fn recommendation(&self) -> Option<&Recommendation> {
        self.recommendation.as_ref()
    }

    pub fn evaluation(&self) -> Option<&ManualEvaluation> {
        self.evaluation.as_ref()
    }

    pub fn prior_evaluation(&self) -> Option<&ManualEvaluation> {
        self.prior_evaluation.as_ref()
    }

    pub fn selected(&self) -> Option<&ScenarioId> {
        self.selected.as_ref()
    }

    pub fn origin(&self) -> Option<Origin> {
        self.origin
    }

    pub fn period(&self) -> Option<&ReviewPeriod> {
        self.period.as_ref()
    }

    pub fn observed(&self) -> Option<&QualitySituation> {
        self.observed.as_ref()
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        self.created_at
    }

    pub fn applied_at(&self) -> Option<DateTime<Utc>> {
        self.applied_at
    }

    pub fn results_at(&self) -> Option<DateTime<Utc>> {
        self.results_at
    }

    pub fn closed_at(&self) -> Option<DateTime<Utc>> {
        self.closed_at
    }

    pub fn predecessor(&self) -> Option<SessionId> {
        self.predecessor
    }

    pub fn closing(&self) -> Option<&CloseOutcome> {
        self.closing.as_ref()
    }

    pub fn audit(&self) -> &[Transition] {
        &self.audit
    }

    pub fn is_closed(&self) -> bool {
        self.state == SessionState::Closed
    }

    fn guard(&self, allowed: &[SessionState], action: &'static str) -> Result<(), WorkflowError> {
        if allowed.contains(&self.state) {
            Ok(())
        } else {
            Err(WorkflowError::IllegalTransition {
                from: self.state,
                action,
            })
        }
    }

    fn step(
        &mut self,
        to: SessionState,
        now: DateTime<Utc>,
        recommendation: Option<Recommendation>,
        note: Option<String>,
    ) {
        debug_assert!(self.state.can_move_to(to), "{} -> {}", self.state, to);
        self.audit.push(Transition {
            from: self.state,
            to,
            at: now,
            recommendation,
            note,
        });
        self.state = to;
    }

    /// Sets the operation and characteristic; only before the situation is entered.
    pub fn set_context(&mut self, context: CaseContext) -> Result<(), WorkflowError> {
        self.guard(&[SessionState::Created], "change the context of")?;
        self.context = context;
        Ok(())
    }

    /// Enters the situation and objectives, then looks for a similar case.
    pub fn submit_situation(
        &mut self,
        situation: QualitySituation,
        objectives: Objectives,
        base: &CaseBase,
        cfg: &RetrievalConfig,
        now: DateTime<Utc>,
    ) -> Result<SubmitOutcome, WorkflowError> {
        self.guard(&[SessionState::Created], "submit a situation to")?;
        situation.validate()?;
        objectives.validate()?;
        let recommendation = match retrieve(&situation, base, cfg) {
            Some(hit) => Some(adapt(&hit, base)?),
            None => None,
        };
        self.situation = Some(situation);
        self.objectives = Some(objectives);
        self.step(SessionState::SituationEntered, now, None, None);
        match &recommendation {
            Some(rec) => {
                self.recommendation = Some(rec.clone());
                self.step(SessionState::AutoRecommended, now, Some(rec.clone()), None);
            }
            None => self.step(
                SessionState::ManualRequired,
                now,
                None,
                Some("no similar case within the threshold".into()),
            ),
        }
        Ok(SubmitOutcome {
            state: self.state,
            recommendation,
            warnings: situation.warnings(),
        })
    }

    pub fn accept_recommendation(
        &mut self,
        now: DateTime<Utc>,
    ) -> Result<SessionState, WorkflowError> {
        self.guard(
            &[SessionState::AutoRecommended],
            "accept a recommendation in",
        )?;
        let rec = self
            .recommendation
            .clone()
            .ok_or_else(|| WorkflowError::Invalid("session has no recommendation".into()))?;
        self.selected = Some(rec.scenario_id.clone());
        self.origin = Some(Origin::Automatic);
        self.step(
            SessionState::ScenarioSelected,
            now,
            Some(rec),
            Some("accepted".into()),
        );
        Ok(self.state)
    }

    /// Falls back to manual choice. The threshold is left alone.
    pub fn reject_recommendation(
        &mut self,
        now: DateTime<Utc>,
    ) -> Result<SessionState, WorkflowError> {
        self.guard(
            &[SessionState::AutoRecommended],
            "reject a recommendation in",
        )?;
        let rec = self.recommendation.clone();
        self.step(
            SessionState::ManualRequired,
            now,
            rec,
            Some("rejected".into()),
        );
        Ok(self.state)
    }

    /// Builds the evaluation table from one pairwise matrix per criterion of
    /// `capacity` (in criteria order) over `alternatives`, then ranks.
    pub fn manual_evaluate(
        &mut self,
        catalog: &ScenarioCatalog,
        alternatives: Vec<String>,
        matrices: Vec<PairwiseMatrix>,
        capacity: Capacity,
        policy: &ConsistencyPolicy,
        now: DateTime<Utc>,
    ) -> Result<&ManualEvaluation, WorkflowError> {
        self.guard(
            &[SessionState::ManualRequired, SessionState::ManualEvaluated],
            "evaluate",
        )?;
        check_alternatives(catalog, &alternatives)?;
        let criteria = capacity.criteria().clone();
        if matrices.len() != criteria.len() {
            return Err(McdmError::Shape {
                expected: criteria.len(),
                got: matrices.len(),
            }
            .into());
        }
        let mut columns = Vec::with_capacity(matrices.len());
        let mut consistency = Vec::with_capacity(matrices.len());
        let mut warnings = Vec::new();
        let mut labelled = Vec::with_capacity(matrices.len());
        for (m, criterion) in matrices.into_iter().zip(criteria.ids()) {
            if !m.label().is_empty() && m.label() != criterion {
                return Err(WorkflowError::Invalid(format!(
                    "matrix `{}` given where criterion `{criterion}` was expected",
                    m.label()
                )));
            }
            if m.size() != alternatives.len() {
                return Err(McdmError::Shape {
                    expected: alternatives.len(),
                    got: m.size(),
                }
                .into());
            }
            let report = validate_pairwise(&m);
            if !report.is_valid() {
                return Err(McdmError::InvalidMatrix(report).into());
            }
            let off_scale = saaty_scale_violations(&m);
            if !off_scale.is_empty() {
                warnings.push(format!(
                    "{criterion}: {} judgment(s) off the 1-9 scale",
                    off_scale.len()
                ));
            }
            let pr = priority_vector(&m)?;
            if pr.method == PriorityMethod::GeometricMeanFallback {
                warnings.push(format!(
                    "{criterion}: eigenvector did not converge, using geometric means"
                ));
            }
            let ratio = pr.consistency_ratio().ok();
            let acceptable = ratio.is_none_or(|r| r <= policy.threshold);
            match ratio {
                Some(r) if !acceptable => {
                    if policy.strict {
                        return Err(WorkflowError::Inconsistent {
                            criterion: criterion.clone(),
                            ratio: r,
                            threshold: policy.threshold,
                        });
                    }
                    warnings.push(format!(
                        "{criterion}: consistency ratio {r:.3} exceeds {}",
                        policy.threshold
                    ));
                }
                None => warnings.push(format!(
                    "{criterion}: no consistency ratio for {} alternatives",
                    m.size()
                )),
                _ => {}
            }
            consistency.push(ConsistencyCheck {
                criterion: criterion.clone(),
                ratio,
                method: pr.method,
                acceptable,
            });
            columns.push(pr.weights);
            labelled.push(m.with_label(criterion.clone()));
        }
        let table = EvaluationTable::from_columns(criteria, alternatives, &columns)?;
        let ranking = rank_alternatives(&table, &capacity)?;
        self.finish_evaluation(
            ManualEvaluation {
                matrices: labelled,
                consistency,
                capacity,
                table,
                ranking,
                warnings,
            },
            now,
        )
    }

    /// Ranks an evaluation table supplied as is.
    pub fn manual_evaluate_table(
        &mut self,
        catalog: &ScenarioCatalog,
        table: EvaluationTable,
        capacity: Capacity,
        now: DateTime<Utc>,
    ) -> Result<&ManualEvaluation, WorkflowError> {
        self.guard(
            &[SessionState::ManualRequired, SessionState::ManualEvaluated],
            "evaluate",
        )?;
        check_alternatives(catalog, table.alternatives())?;
        let ranking = rank_alternatives(&table, &capacity)?;
        self.finish_evaluation(
            ManualEvaluation {
                matrices: Vec::new(),
                consistency: Vec::new(),
                capacity,
                table,
                ranking,
                warnings: Vec::new(),
            },
            now,
        )
    }

    fn finish_evaluation(
        &mut self,
        evaluation: ManualEvaluation,
        now: DateTime<Utc>,
    ) -> Result<&ManualEvaluation, WorkflowError> {
        if self.state == SessionState::ManualEvaluated {
            self.step(
                SessionState::ManualRequired,
                now,
                None,
                Some("re-evaluation".into()),
            );
        }
        let note = evaluation
            .best()
            .map(|b| format!("best alternative {}", b.alternative));
        self.evaluation = Some(evaluation);
        self.step(SessionState::ManualEvaluated, now, None, note);
        Ok(self.evaluation.as_ref().expect("just stored"))
    }

    pub fn back_to_manual(&mut self, now: DateTime<Utc>) -> Result<SessionState, WorkflowError> {
        self.guard(
            &[SessionState::ManualEvaluated],
            "return to manual choice from",
        )?;
        self.step(SessionState::ManualRequired, now, None, None);
        Ok(self.state)
    }

    pub fn confirm_selection(
        &mut self,
        catalog: &ScenarioCatalog,
        scenario: &str,
        now: DateTime<Utc>,
    ) -> Result<SessionState, WorkflowError> {
        self.guard(&[SessionState::ManualEvaluated], "select a scenario in")?;
        let s = catalog.require(scenario)?;
        self.selected = Some(s.id.clone());
        self.origin = Some(Origin::Manual);
        self.step(
            SessionState::ScenarioSelected,
            now,
            None,
            Some(format!("selected {}", s.id)),
        );
        Ok(self.state)
    }

    /// Objectives stay editable until the scenario is applied.
    pub fn update_objectives(&mut self, objectives: Objectives) -> Result<(), WorkflowError> {
        self.guard(
            &[
                SessionState::SituationEntered,
                SessionState::AutoRecommended,
                SessionState::ManualRequired,
                SessionState::ManualEvaluated,
                SessionState::ScenarioSelected,
            ],
            "update objectives of",
        )?;
        objectives.validate()?;
        self.objectives = Some(objectives);
        Ok(())
    }

    pub fn apply(
        &mut self,
        period: ReviewPeriod,
        now: DateTime<Utc>,
    ) -> Result<SessionState, WorkflowError> {
        self.guard(&[SessionState::ScenarioSelected], "apply")?;
        self.period = Some(period);
        self.applied_at = Some(now);
        self.step(SessionState::Applied, now, None, None);
        Ok(self.state)
    }

    pub fn record_results(
        &mut self,
        observed: QualitySituation,
        now: DateTime<Utc>,
    ) -> Result<SessionState, WorkflowError> {
        self.guard(&[SessionState::Applied], "record results for")?;
        observed.validate()?;
        self.observed = Some(observed);
        self.results_at = Some(now);
        self.step(SessionState::ResultsRecorded, now, None, None);
        Ok(self.state)
    }

    /// Evaluates the results, revises, and retains the case in `base`.
    ///
    /// A failed automatic case tightens `cfg.threshold`. A failed manual case
    /// returns a successor session, numbered `successor_id`, waiting in
    /// `ManualRequired` with this session's evaluation preloaded.
    pub fn close(
        &mut self,
        base: &mut CaseBase,
        cfg: &mut RetrievalConfig,
        successor_id: SessionId,
        now: DateTime<Utc>,
    ) -> Result<(CloseOutcome, Option<DecisionSession>), WorkflowError> {
        self.guard(&[SessionState::ResultsRecorded], "close")?;
        let missing =
            |what: &str| WorkflowError::Invalid(format!("session {} has no {what}", self.id));
        let situation = self.situation.ok_or_else(|| missing("situation"))?;
        let objectives = self.objectives.ok_or_else(|| missing("objectives"))?;
        let observed = self.observed.ok_or_else(|| missing("results"))?;
        let scenario = self
            .selected
            .clone()
            .ok_or_else(|| missing("selected scenario"))?;
        let origin = self.origin.ok_or_else(|| missing("origin"))?;

        let outcome = evaluate_outcome(&observed, &objectives);
        let mut case = Case::provisional(
            self.context.clone(),
            situation,
            scenario,
            objectives,
            origin,
            self.created_at,
        );
        case.observed = Some(observed);
        case.closed_at = Some(now);
        if origin == Origin::Automatic {
            case.retrieval = self.recommendation.as_ref().map(|r| RetrievalProvenance {
                source_case: r.source_case,
                distance: r.distance,
            });
        }
        case.status = match outcome {
            Outcome::Satisfactory => CaseStatus::Satisfactory,
            Outcome::Unsatisfactory => CaseStatus::Failed,
        };
        let action = revise(&case, outcome, cfg)?;
        let case_id = base.retain(case)?;

        let mut threshold_change = None;
        let mut successor = None;
        match action {
            RevisionAction::RetainSatisfactory => {}
            RevisionAction::RepairThreshold {
                previous,
                new_threshold,
                ..
            } => {
                cfg.threshold = new_threshold;
                threshold_change = Some(ThresholdChange {
                    previous,
                    new: new_threshold,
                });
            }
            RevisionAction::RepairManual => {
                let mut next = DecisionSession::new(successor_id, self.context.clone(), now);
                next.situation = Some(situation);
                next.objectives = Some(objectives);
                next.prior_evaluation = self.evaluation.clone();
                next.predecessor = Some(self.id);
                next.step(SessionState::SituationEntered, now, None, None);
                next.step(
                    SessionState::ManualRequired,
                    now,
                    None,
                    Some(format!(
                        "judgments re-opened after session {} failed",
                        self.id
                    )),
                );
                successor = Some(next);
            }
        }
        let summary = CloseOutcome {
            case_id,
            outcome,
            status: match outcome {
                Outcome::Satisfactory => CaseStatus::Satisfactory,
                Outcome::Unsatisfactory => CaseStatus::Failed,
            },
            action,
            threshold_change,
            successor: successor.as_ref().map(|s| s.id),
        };
        self.closed_at = Some(now);
        self.closing = Some(summary.clone());
        self.step(
            SessionState::Closed,
            now,
            None,
            Some(format!("retained as case {case_id}")),
        );
        Ok((summary, successor))
    }

    /// Checks that a stored session is internally consistent.
    pub fn validate(&self) -> Result<(), WorkflowError> {
        use SessionState::*;
        let bad = |msg: String| {
            Err(WorkflowError::Invalid(format!(
                "session {}: {msg}",
                self.id
            )))
        };
        let mut at = Created;
        for (i, t) in self.audit.iter().enumerate() {
            if t.from != at {
                return bad(format!(
                    "transition {} starts at {} but the session was in {at}",
                    i + 1,
                    t.from
                ));
            }
            if !t.from.can_move_to(t.to) {
                return bad(format!(
                    "transition {} ({} -> {}) is not allowed",
                    i + 1,
                    t.from,
                    t.to
                ));
            }
            at = t.to;
        }
        if at != self.state {
            return bad(format!(
                "audit trail ends in {at} but state is {}",
                self.state
            ));
        }
        if self
            .audit
            .iter()
            .any(|t| t.to == AutoRecommended && t.recommendation.is_none())
        {
            return bad("recommendation without provenance".into());
        }
        let reached = |s: SessionState| self.audit.iter().any(|t| t.to == s);
        if reached(SituationEntered) && (self.situation.is_none() || self.objectives.is_none()) {
            return bad("situation entered without situation or objectives".into());
        }
        if reached(AutoRecommended) && self.recommendation.is_none() {
            return bad("recommendation missing".into());
        }
        if self.state == ManualEvaluated && self.evaluation.is_none() {
            return bad("evaluation missing".into());
        }
        if reached(ScenarioSelected) && (self.selected.is_none() || self.origin.is_none()) {
            return bad("selection missing".into());
        }
        if reached(Applied) && self.period.is_none() {
            return bad("review period missing".into());
        }
        if reached(ResultsRecorded) && self.observed.is_none() {
            return bad("results missing".into());
        }
        if reached(Closed) && self.closing.is_none() {
            return bad("closing summary missing".into());
        }
        for s in self.situation.iter().chain(&self.observed) {
            s.validate()?;
        }
        if let Some(o) = &self.objectives {
            o.validate()?;
        }
        Ok(())
    }
}

fn check_alternatives<S: AsRef<str>>(
    catalog: &ScenarioCatalog,
    alternatives: &[S],
) -> Result<(), WorkflowError> {
    for a in alternatives {
        catalog.require(a.as_ref())?;
    }
    Ok(())
}

/// All sessions, ordered by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DecisionSession>", into = "Vec<DecisionSession>")]
pub struct SessionRegistry {
    sessions: Vec<DecisionSession>,
}

impl SessionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sessions(sessions: Vec<DecisionSession>) -> Result<Self, WorkflowError> {
        for (i, s) in sessions.iter().enumerate() {
            if i > 0 && s.id <= sessions[i - 1].id {
                return Err(WorkflowError::Invalid(format!(
                    "session ids out of order: {} after {}",
                    s.id,
                    sessions[i - 1].id
                )));
            }
            s.validate()?;
        }
        Ok(Self { sessions })
    }

    pub fn sessions(&self) -> &[DecisionSession] {
        &self.sessions
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn next_id(&self) -> SessionId {
        SessionId(self.sessions.last().map_or(1, |s| s.id.0 + 1))
    }

    pub fn create(&mut self, context: CaseContext, now: DateTime<Utc>) -> &mut DecisionSession {
        let session = DecisionSession::new(self.next_id(), context, now);
        self.sessions.push(session);
        self.sessions.last_mut().expect("just pushed")
    }

    /// Adds a session built elsewhere (a repair successor). Its id must be
    /// [`SessionRegistry::next_id`].
    pub fn insert(&mut self, session: DecisionSession) -> Result<(), WorkflowError> {
        if session.id != self.next_id() {
            return Err(WorkflowError::Invalid(format!(
                "session id {} is not the next id {}",
                session.id,
                self.next_id()
            )));
        }
        self.sessions.push(session);
        Ok(())
    }

    pub fn get(&self, id: SessionId) -> Option<&DecisionSession> {
        self.sessions
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &self.sessions[i])
    }

    pub fn get_mut(&mut self, id: SessionId) -> Option<&mut DecisionSession> {
        self.sessions
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &mut self.sessions[i])
    }

    pub fn require(&self, id: SessionId) -> Result<&DecisionSession, WorkflowError> {
        self.get(id).ok_or(WorkflowError::UnknownSession(id))
    }

    pub fn require_mut(&mut self, id: SessionId) -> Result<&mut DecisionSession, WorkflowError> {
        self.get_mut(id).ok_or(WorkflowError::UnknownSession(id))
    }
}

impl TryFrom<Vec<DecisionSession>> for SessionRegistry {
    type Error = WorkflowError;

    fn try_from(v: Vec<DecisionSession>) -> Result<Self, Self::Error> {
        Self::from_sessions(v)
    }
}

impl From<SessionRegistry> for Vec<DecisionSession> {
    fn from(r: SessionRegistry) -> Self {
        r.sessions
    }
}
