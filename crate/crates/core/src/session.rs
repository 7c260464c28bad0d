//! Elicitation sessions: a problem, its beliefs, and an append-only
//! transcript of answered queries from which all state is replayed.
//!
//! On disk a session is one JSON-lines file: a header line followed by one
//! line per answered query.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{Belief, BeliefError, Component, ParameterBelief, Response};
use crate::elicit::{conditioning_set, render_query, AnchorSide, ElicitError, ExactElicitation, GambleQuery};
use crate::evoi::{ComparisonQuery, EvoiContext, QueryEvaluation};
use crate::inference::{expected_local_values, expected_tables, InferenceError, SolveCache, Solver};
use crate::model::{validate_model, FactorId, GaiModel, Outcome};
use crate::plan::CompiledPlan;
use crate::problem::{ProblemDocument, ProblemError, PROBLEM_SCHEMA};
use crate::strategy::{QueryStrategy, RandomStrategy};
use crate::utility::AnchorUtilities;

pub const TRANSCRIPT_SCHEMA: &str = "gai-session/1";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),
    #[error("evoi sessions need known anchor utilities in the problem document")]
    MissingAnchors,
    #[error("anchor utilities: {0}")]
    BadAnchors(String),
    #[error("query {got} is not the pending query{}", .expected.as_ref().map(|e| format!(" ({e})")).unwrap_or_default())]
    StaleQuery { expected: Option<String>, got: String },
    #[error("response does not fit the query: {0}")]
    BadResponse(String),
    #[error("impossible response: {0}")]
    Impossible(#[from] BeliefError),
    #[error(transparent)]
    Elicit(#[from] ElicitError),
    #[error("recommendation unavailable: {0}")]
    NotReady(String),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("corrupt transcript: {0}")]
    Corrupt(String),
    #[error("unknown session {0}")]
    NotFound(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    Exact,
    #[default]
    Evoi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionOptions {
    #[serde(default)]
    pub mode: SessionMode,
    /// Ask a random query when no query has positive EVOI.
    #[serde(default)]
    pub fallback: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions { mode: SessionMode::Evoi, fallback: false, seed: 0 }
    }
}

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now_ms(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionQuery {
    Comparison { factor: FactorId, config: usize, threshold: f64 },
    LocalGamble { factor: FactorId, config: usize },
    GlobalGamble { factor: FactorId, anchor: AnchorSide },
}

impl SessionQuery {
    fn from_gamble(q: GambleQuery) -> Self {
        match q {
            GambleQuery::Local { factor, config } => SessionQuery::LocalGamble { factor, config },
            GambleQuery::Global { factor, anchor } => SessionQuery::GlobalGamble { factor, anchor },
        }
    }

    fn gamble(&self) -> Option<GambleQuery> {
        match *self {
            SessionQuery::LocalGamble { factor, config } => Some(GambleQuery::Local { factor, config }),
            SessionQuery::GlobalGamble { factor, anchor } => Some(GambleQuery::Global { factor, anchor }),
            SessionQuery::Comparison { .. } => None,
        }
    }

    pub fn factor(&self) -> FactorId {
        match *self {
            SessionQuery::Comparison { factor, .. }
            | SessionQuery::LocalGamble { factor, .. }
            | SessionQuery::GlobalGamble { factor, .. } => factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRecord {
    pub seq: usize,
    pub query_id: String,
    pub query: SessionQuery,
    pub answer: Answer,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionHeader {
    pub schema: String,
    pub id: String,
    pub options: SessionOptions,
    pub created_ms: u64,
    pub problem: ProblemDocument,
}

/// Complete portable form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionExport {
    #[serde(flatten)]
    pub header: SessionHeader,
    pub records: Vec<ResponseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttrValue {
    pub attribute: String,
    pub value: String,
}

/// Everything a client needs to show one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCard {
    pub query_id: String,
    pub query: SessionQuery,
    pub factor_name: String,
    /// The suboutcome asked about; empty for global queries.
    pub config: Vec<AttrValue>,
    pub top: Vec<AttrValue>,
    pub bottom: Vec<AttrValue>,
    /// Attributes held at default levels while answering a local query.
    pub conditioning: Vec<AttrValue>,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evoi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob_yes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextQuery {
    Query(QueryCard),
    Complete { answered: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorContribution {
    pub factor: FactorId,
    pub name: String,
    pub expected_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub outcome: Vec<AttrValue>,
    pub values: Outcome,
    /// Expected utility on the anchor-utility scale.
    pub expected_utility: f64,
    pub contributions: Vec<FactorContribution>,
    pub answered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub factor: FactorId,
    pub factor_name: String,
    pub config: usize,
    pub values: Vec<AttrValue>,
    pub mean: f64,
    pub variance: f64,
    pub known: bool,
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSummary {
    pub query_id: String,
    pub answered: usize,
    /// EVOI of the answered query, when it was selected by EVOI.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evoi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_epu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recommendation: Option<Recommendation>,
}

#[derive(Debug, Clone)]
struct Pending {
    id: String,
    query: SessionQuery,
    evaluation: Option<QueryEvaluation>,
    prior_value: Option<f64>,
}

pub struct Session {
    header: SessionHeader,
    model: GaiModel,
    plan: CompiledPlan,
    solver: Solver,
    priors: ParameterBelief,
    beliefs: ParameterBelief,
    anchors: Option<AnchorUtilities>,
    exact: ExactElicitation,
    records: Vec<ResponseRecord>,
    pending: Option<Pending>,
    cache: Option<SolveCache>,
    updated_ms: u64,
}

impl Session {
    pub fn create(id: String, problem: ProblemDocument, options: SessionOptions, created_ms: u64) -> Result<Self, SessionError> {
        if problem.schema != PROBLEM_SCHEMA {
            return Err(ProblemError::Schema(problem.schema).into());
        }
        let model = problem.to_model()?;
        let violations = validate_model(&model);
        if !violations.is_empty() {
            return Err(SessionError::InvalidModel(violations.iter().map(ToString::to_string).collect()));
        }
        let anchors = problem.anchor_utilities.clone();
        if let Some(a) = &anchors {
            a.check(&model).map_err(|e| SessionError::BadAnchors(e.to_string()))?;
        }
        if options.mode == SessionMode::Evoi && anchors.is_none() {
            return Err(SessionError::MissingAnchors);
        }
        let priors = problem.initial_beliefs(&model)?;
        let plan = CompiledPlan::new(&model);
        let solver = Solver::new(&model);
        // infeasible models fail here, at creation
        solver.maximize(&(0..model.factor_count()).map(|j| vec![0.0; model.config_count(j)]).collect::<Vec<_>>())?;
        let exact = ExactElicitation::new(&model);
        let header = SessionHeader { schema: TRANSCRIPT_SCHEMA.into(), id, options, created_ms, problem };
        let mut s = Session {
            header,
            model,
            plan,
            solver,
            beliefs: priors.clone(),
            priors,
            anchors,
            exact,
            records: Vec::new(),
            pending: None,
            cache: None,
            updated_ms: created_ms,
        };
        s.refresh()?;
        Ok(s)
    }

    /// Rebuilds a session by replaying an exported transcript.
    pub fn restore(export: SessionExport) -> Result<Self, SessionError> {
        if export.header.schema != TRANSCRIPT_SCHEMA {
            return Err(SessionError::Corrupt(format!("unsupported schema {:?}", export.header.schema)));
        }
        let mut s = Session::create(export.header.id, export.header.problem, export.header.options, export.header.created_ms)?;
        for (k, r) in export.records.into_iter().enumerate() {
            if r.seq != k + 1 {
                return Err(SessionError::Corrupt(format!("record {} has sequence number {}", k + 1, r.seq)));
            }
            s.pending = Some(Pending { id: r.query_id.clone(), query: r.query, evaluation: None, prior_value: None });
            let ts = r.timestamp_ms;
            s.apply(&r.query_id, r.answer, ts).map_err(|e| SessionError::Corrupt(format!("record {}: {e}", k + 1)))?;
        }
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.header.id
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }

    pub fn model(&self) -> &GaiModel {
        &self.model
    }

    pub fn mode(&self) -> SessionMode {
        self.header.options.mode
    }

    pub fn beliefs(&self) -> &ParameterBelief {
        &self.beliefs
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    pub fn updated_ms(&self) -> u64 {
        self.updated_ms
    }

    pub fn export(&self) -> SessionExport {
        SessionExport { header: self.header.clone(), records: self.records.clone() }
    }

    fn refresh(&mut self) -> Result<(), SessionError> {
        self.cache = match &self.anchors {
            Some(a) => {
                let local = expected_local_values(&self.model, &self.beliefs, a)?;
                Some(SolveCache::new(&self.solver, expected_tables(&self.model, &self.plan, a, &local))?)
            }
            None => None,
        };
        Ok(())
    }

    fn ctx(&self) -> Option<EvoiContext<'_>> {
        Some(EvoiContext {
            model: &self.model,
            plan: &self.plan,
            beliefs: &self.beliefs,
            anchors: self.anchors.as_ref()?,
            solver: &self.solver,
            cache: self.cache.as_ref()?,
        })
    }

    fn attr_values(&self, attrs: &[usize], values: &[usize]) -> Vec<AttrValue> {
        attrs
            .iter()
            .zip(values)
            .map(|(&a, &v)| AttrValue {
                attribute: self.model.attributes()[a].name.clone(),
                value: self.model.attributes()[a].domain[v].clone(),
            })
            .collect()
    }

    fn config_values(&self, j: FactorId, idx: usize) -> Vec<AttrValue> {
        self.attr_values(self.model.scope(j).as_slice(), &self.model.layout(j).decode(idx))
    }

    fn card(&self, p: &Pending) -> QueryCard {
        let m = &self.model;
        let j = p.query.factor();
        let top = self.config_values(j, m.top_index(j));
        let bottom = self.config_values(j, m.bottom_index(j));
        let cond = conditioning_set(m, j);
        let cond_vals: Vec<usize> = cond.iter().map(|a| m.default_outcome().0[a]).collect();
        let conditioning = self.attr_values(cond.as_slice(), &cond_vals);
        let (config, text, conditioning) = match p.query {
            SessionQuery::Comparison { config, threshold, .. } => {
                let vals = self.config_values(j, config);
                let show = |v: &[AttrValue]| v.iter().map(|a| format!("{}={}", a.attribute, a.value)).collect::<Vec<_>>().join(", ");
                let mut text = format!(
                    "Do you prefer [{}] to the gamble <{}, [{}]; {}, [{}]>?",
                    show(&vals),
                    threshold,
                    show(&top),
                    1.0 - threshold,
                    show(&bottom)
                );
                if !conditioning.is_empty() {
                    text.push_str(&format!(" Assume {} (default levels).", show(&conditioning)));
                }
                (vals, text, conditioning)
            }
            SessionQuery::LocalGamble { config, .. } => {
                let g = p.query.gamble().expect("gamble");
                (self.config_values(j, config), render_query(m, &g), conditioning)
            }
            SessionQuery::GlobalGamble { .. } => {
                let g = p.query.gamble().expect("gamble");
                (Vec::new(), render_query(m, &g), Vec::new())
            }
        };
        QueryCard {
            query_id: p.id.clone(),
            query: p.query,
            factor_name: m.factors()[j].name.clone(),
            config,
            top,
            bottom,
            conditioning,
            text,
            evoi: p.evaluation.map(|e| e.evoi),
            epu: p.evaluation.map(|e| e.epu),
            prob_yes: p.evaluation.map(|e| e.prob_yes),
        }
    }

    /// The pending query, choosing one if none is pending.
    pub fn next_query(&mut self) -> NextQuery {
        if self.pending.is_none() {
            self.pending = self.choose();
        }
        match &self.pending {
            Some(p) => NextQuery::Query(self.card(p)),
            None => NextQuery::Complete { answered: self.records.len() },
        }
    }

    fn choose(&self) -> Option<Pending> {
        let id = format!("q{}", self.records.len() + 1);
        match self.mode() {
            SessionMode::Exact => self.exact.next_unanswered().map(|g| Pending {
                id,
                query: SessionQuery::from_gamble(g),
                evaluation: None,
                prior_value: None,
            }),
            SessionMode::Evoi => {
                let ctx = self.ctx()?;
                let prior_value = Some(ctx.current_value());
                if let Some(e) = ctx.best_local_query() {
                    let q = e.query;
                    return Some(Pending {
                        id,
                        query: SessionQuery::Comparison { factor: q.factor, config: q.config, threshold: q.threshold },
                        evaluation: Some(e),
                        prior_value,
                    });
                }
                if !self.header.options.fallback {
                    return None;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.header.options.seed);
                rng.set_stream(self.records.len() as u64);
                match RandomStrategy.select(&ctx, &mut rng)? {
                    crate::strategy::Query::Comparison(q) => Some(Pending {
                        id,
                        query: SessionQuery::Comparison { factor: q.factor, config: q.config, threshold: q.threshold },
                        evaluation: ctx.evaluate(&q).ok(),
                        prior_value,
                    }),
                    crate::strategy::Query::Direct { .. } => None,
                }
            }
        }
    }

    /// Applies an answer to the pending query `query_id`. State is unchanged
    /// on error.
    pub fn submit(&mut self, query_id: &str, answer: Answer, now_ms: u64) -> Result<ResponseSummary, SessionError> {
        let evaluation = self.pending.as_ref().filter(|p| p.id == query_id).and_then(|p| p.evaluation);
        let prior_value = self.pending.as_ref().filter(|p| p.id == query_id).and_then(|p| p.prior_value);
        self.apply(query_id, answer, now_ms)?;
        Ok(ResponseSummary {
            query_id: query_id.to_string(),
            answered: self.records.len(),
            evoi: evaluation.map(|e| e.evoi),
            prior_epu: evaluation.map(|e| e.epu),
            prior_value,
            recommendation: self.recommendation().ok(),
        })
    }

    fn apply(&mut self, query_id: &str, answer: Answer, now_ms: u64) -> Result<(), SessionError> {
        let pending = match &self.pending {
            Some(p) if p.id == query_id => p.clone(),
            other => {
                return Err(SessionError::StaleQuery {
                    expected: other.as_ref().map(|p| p.id.clone()),
                    got: query_id.to_string(),
                })
            }
        };
        match (pending.query, answer) {
            (SessionQuery::Comparison { factor, config, threshold }, Answer::Yes | Answer::No) => {
                let r = if answer == Answer::Yes { Response::Yes } else { Response::No };
                let mut next = self.beliefs.clone();
                next.update(factor, config, threshold, r)?;
                self.beliefs = next;
            }
            (q @ (SessionQuery::LocalGamble { .. } | SessionQuery::GlobalGamble { .. }), Answer::Probability(p)) => {
                let g = q.gamble().expect("gamble");
                let mut exact = self.exact.clone();
                exact.record(&self.model, &g, p)?;
                if let GambleQuery::Local { factor, config } = g {
                    if self.beliefs.get(factor, config).is_some() {
                        self.beliefs.set_known(factor, config, p)?;
                    }
                }
                if exact.is_complete() {
                    let result = exact.finish(&self.model)?;
                    for (j, t) in result.tables.iter().enumerate() {
                        for c in self.model.free_configs(j).collect::<Vec<_>>() {
                            self.beliefs.set_known(j, c, t.values[c])?;
                        }
                    }
                    self.anchors = Some(result.anchors);
                }
                self.exact = exact;
            }
            (q, a) => return Err(SessionError::BadResponse(format!("{a:?} does not answer {q:?}"))),
        }
        self.records.push(ResponseRecord {
            seq: self.records.len() + 1,
            query_id: query_id.to_string(),
            query: pending.query,
            answer,
            timestamp_ms: now_ms,
        });
        self.pending = None;
        self.updated_ms = now_ms;
        self.refresh()?;
        Ok(())
    }

    /// Drops the last answered query and replays the rest from the priors.
    pub fn undo(&mut self) -> Result<(), SessionError> {
        let mut export = self.export();
        if export.records.pop().is_none() {
            return Err(SessionError::NothingToUndo);
        }
        *self = Session::restore(export)?;
        Ok(())
    }

    pub fn recommendation(&self) -> Result<Recommendation, SessionError> {
        let (Some(anchors), Some(cache)) = (&self.anchors, &self.cache) else {
            return Err(SessionError::NotReady("anchor utilities are not known yet".into()));
        };
        let best = cache.maximum();
        let all: Vec<usize> = (0..self.model.attr_count()).collect();
        let contributions = (0..self.model.factor_count())
            .map(|j| FactorContribution {
                factor: j,
                name: self.model.factors()[j].name.clone(),
                expected_utility: cache.tables()[j][self.model.local_index(j, &best.outcome)],
            })
            .collect();
        Ok(Recommendation {
            outcome: self.attr_values(&all, &best.outcome.0),
            values: best.outcome.clone(),
            expected_utility: best.value + anchors.offset(&self.plan),
            contributions,
            answered: self.records.len(),
        })
    }

    pub fn belief_summary(&self) -> Vec<ParameterSummary> {
        self.beliefs
            .entries()
            .map(|(j, c, b)| ParameterSummary {
                factor: j,
                factor_name: self.model.factors()[j].name.clone(),
                config: c,
                values: self.config_values(j, c),
                mean: b.mean(),
                variance: b.mixture().map_or(0.0, |m| m.variance()),
                known: matches!(b, Belief::Known { .. }),
                components: b.mixture().map(|m| m.components().to_vec()).unwrap_or_default(),
            })
            .collect()
    }

    /// Posterior equality with another session, ignoring ids and timestamps.
    pub fn same_state(&self, other: &Session) -> bool {
        self.beliefs == other.beliefs && self.anchors == other.anchors && self.exact == other.exact
    }

    pub fn priors(&self) -> &ParameterBelief {
        &self.priors
    }
}

/// Sessions persisted as JSON-lines files under one directory.
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    /// Writes the full transcript of `session`, replacing any previous file.
    pub fn save(&self, session: &Session) -> Result<(), SessionError> {
        write_transcript(&self.path(session.id()), &session.export())
    }

    /// Appends the newest record; durable when this returns.
    pub fn append(&self, session: &Session) -> Result<(), SessionError> {
        let Some(r) = session.records().last() else { return self.save(session) };
        let mut f = OpenOptions::new().append(true).open(self.path(session.id()))?;
        writeln!(f, "{}", serde_json::to_string(r).expect("record serializes"))?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<Session, SessionError> {
        let path = self.path(id);
        if !path.exists() {
            return Err(SessionError::NotFound(id.to_string()));
        }
        Session::restore(read_transcript(&path)?)
    }

    /// Every stored session, keyed by id.
    pub fn load_all(&self) -> Result<HashMap<String, Session>, SessionError> {
        let mut out = HashMap::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("jsonl") {
                let s = Session::restore(read_transcript(&path)?)?;
                out.insert(s.id().to_string(), s);
            }
        }
        Ok(out)
    }
}

/// Atomically replaces `path` with the JSON-lines form of `export`.
pub fn write_transcript(path: &Path, export: &SessionExport) -> Result<(), SessionError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        writeln!(f, "{}", serde_json::to_string(&export.header).expect("header serializes"))?;
        for r in &export.records {
            writeln!(f, "{}", serde_json::to_string(r).expect("record serializes"))?;
        }
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_transcript(path: &Path) -> Result<SessionExport, SessionError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header_line = lines.next().ok_or_else(|| SessionError::Corrupt("empty transcript".into()))??;
    let header: SessionHeader = serde_json::from_str(&header_line).map_err(|e| SessionError::Corrupt(e.to_string()))?;
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| SessionError::Corrupt(e.to_string()))?);
    }
    Ok(SessionExport { header, records })
}

pub fn parse_export(text: &str) -> Result<SessionExport, SessionError> {
    serde_json::from_str(text).map_err(|e| SessionError::Corrupt(e.to_string()))
}

pub fn new_session_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Answers a comparison query from a known local value, for scripted use.
pub fn answer_from_value(value: f64, q: &ComparisonQuery) -> Answer {
    if value >= q.threshold {
        Answer::Yes
    } else {
        Answer::No
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::seven_attribute_model;
    use crate::utility::AnchorPair;

    fn problem(with_anchors: bool) -> ProblemDocument {
        let m = seven_attribute_model();
        let mut doc = ProblemDocument::from_model(&m, Some("demo".into()));
        // make the all-top outcome infeasible so that queries matter
        for pair in [["x1", "x2"], ["x4", "x5"]] {
            doc.constraints.push(crate::problem::ConstraintDoc {
                attributes: pair.iter().map(|a| a.to_string()).collect(),
                forbidden: vec![vec!["1".into(), "1".into()]],
            });
        }
        if with_anchors {
            doc.anchor_utilities = Some(AnchorUtilities {
                default: 0.3,
                factors: vec![
                    AnchorPair { top: 0.9, bottom: 0.1 },
                    AnchorPair { top: 0.8, bottom: 0.2 },
                    AnchorPair { top: 0.7, bottom: 0.0 },
                    AnchorPair { top: 0.6, bottom: 0.1 },
                    AnchorPair { top: 0.95, bottom: 0.05 },
                ],
            });
        }
        doc
    }

    fn card(s: &mut Session) -> QueryCard {
        match s.next_query() {
            NextQuery::Query(c) => c,
            NextQuery::Complete { .. } => panic!("complete"),
        }
    }

    #[test]
    fn evoi_mode_needs_anchor_utilities() {
        assert!(matches!(
            Session::create("a".into(), problem(false), SessionOptions::default(), 0),
            Err(SessionError::MissingAnchors)
        ));
        let exact = SessionOptions { mode: SessionMode::Exact, ..Default::default() };
        assert!(Session::create("a".into(), problem(false), exact, 0).is_ok());
    }

    #[test]
    fn pending_query_is_stable_and_stale_ids_are_rejected() {
        let mut s = Session::create("a".into(), problem(true), SessionOptions::default(), 0).unwrap();
        let c1 = card(&mut s);
        assert_eq!(c1, card(&mut s));
        assert_eq!(c1.query_id, "q1");
        let before = s.beliefs().clone();
        assert!(matches!(s.submit("q7", Answer::Yes, 1), Err(SessionError::StaleQuery { .. })));
        assert!(matches!(s.submit("q1", Answer::Probability(0.3), 1), Err(SessionError::BadResponse(_))));
        assert_eq!(s.beliefs(), &before);
        let summary = s.submit("q1", Answer::Yes, 1).unwrap();
        assert!(summary.prior_epu.unwrap() >= summary.prior_value.unwrap() - 1e-9);
        assert!(matches!(s.submit("q1", Answer::Yes, 2), Err(SessionError::StaleQuery { .. })));
        assert_eq!(card(&mut s).query_id, "q2");
    }

    #[test]
    fn yes_at_half_moves_mean_to_three_quarters() {
        let mut s = Session::create("a".into(), problem(true), SessionOptions::default(), 0).unwrap();
        let c = card(&mut s);
        let SessionQuery::Comparison { factor, config, threshold } = c.query else { panic!() };
        s.submit(&c.query_id, Answer::Yes, 1).unwrap();
        let m = s.beliefs().get(factor, config).unwrap().mean();
        assert!((m - (threshold + 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn export_restore_and_undo_replay() {
        let mut s = Session::create("a".into(), problem(true), SessionOptions::default(), 0).unwrap();
        let initial = s.recommendation().unwrap();
        for k in 0..8 {
            let c = card(&mut s);
            s.submit(&c.query_id, if k % 3 == 0 { Answer::No } else { Answer::Yes }, k).unwrap();
        }
        let text = serde_json::to_string(&s.export()).unwrap();
        let r = Session::restore(parse_export(&text).unwrap()).unwrap();
        assert!(r.same_state(&s));
        assert_eq!(r.recommendation().unwrap(), s.recommendation().unwrap());
        for _ in 0..8 {
            s.undo().unwrap();
        }
        assert_eq!(s.beliefs(), s.priors());
        assert_eq!(s.recommendation().unwrap(), initial);
        assert!(matches!(s.undo(), Err(SessionError::NothingToUndo)));
        assert!(parse_export("{\"schema\": 1}").is_err());
    }

    #[test]
    fn exact_mode_walks_the_plan() {
        let opts = SessionOptions { mode: SessionMode::Exact, ..Default::default() };
        let mut s = Session::create("a".into(), problem(false), opts, 0).unwrap();
        assert!(matches!(s.recommendation(), Err(SessionError::NotReady(_))));
        let mut n = 0;
        while let NextQuery::Query(c) = s.next_query() {
            let p = match c.query {
                SessionQuery::GlobalGamble { anchor: AnchorSide::Top, .. } => 0.9,
                SessionQuery::GlobalGamble { anchor: AnchorSide::Bottom, .. } => 0.1,
                _ => 0.5,
            };
            s.submit(&c.query_id, Answer::Probability(p), 0).unwrap();
            n += 1;
        }
        assert_eq!(n, ExactElicitation::new(s.model()).plan().len());
        assert!(s.recommendation().is_ok());
        assert!(s.belief_summary().iter().all(|p| p.known));
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let mut s = Session::create(new_session_id(), problem(true), SessionOptions::default(), 0).unwrap();
        store.save(&s).unwrap();
        for k in 0..3 {
            let c = card(&mut s);
            s.submit(&c.query_id, Answer::No, k).unwrap();
            store.append(&s).unwrap();
        }
        let back = store.load(s.id()).unwrap();
        assert!(back.same_state(&s));
        assert_eq!(back.export(), s.export());
        assert_eq!(store.load_all().unwrap().len(), 1);
        assert!(matches!(store.load("missing"), Err(SessionError::NotFound(_))));
    }
}
