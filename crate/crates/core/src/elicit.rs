//! Exact elicitation: local standard gambles per factor, global scaling of
//! the anchor outcomes, and assembly of the resulting utility.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AttrId, AttrSet, FactorId, GaiModel, Pin};
use crate::plan::CompiledPlan;
use crate::utility::{AnchorPair, AnchorUtilities, LocalValueTable, UtilityError, UtilityFunction};

const PIN_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ElicitError {
    #[error("answer {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("factor {factor}, configuration {config}: answer {got} contradicts pinned value {expected}")]
    PinViolation { factor: FactorId, config: usize, expected: f64, got: f64 },
    #[error("query is not part of the elicitation plan")]
    NotInPlan,
    #[error("query already answered")]
    AlreadyAnswered,
    #[error("{0} queries remain unanswered")]
    Incomplete(usize),
    #[error("answer source failed: {0}")]
    Source(String),
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorSide {
    Top,
    Bottom,
}

/// A standard-gamble query. Local queries ask for `v_i(x_i)` with every
/// attribute outside `I_i` at its default level; global queries ask for the
/// utility of the full anchor outcome `x[I_i]^⊤` or `x[I_i]^⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GambleQuery {
    Local { factor: FactorId, config: usize },
    Global { factor: FactorId, anchor: AnchorSide },
}

impl GambleQuery {
    pub fn factor(&self) -> FactorId {
        match *self {
            GambleQuery::Local { factor, .. } | GambleQuery::Global { factor, .. } => factor,
        }
    }
}

/// `M_a`: union of all factor scopes containing `a`.
pub fn neighbor_set(model: &GaiModel, a: AttrId) -> AttrSet {
    model
        .factors()
        .iter()
        .filter(|f| f.attrs.contains(a))
        .fold(AttrSet::empty(), |acc, f| acc.union(&f.attrs))
}

/// `C_i = (∪_{a ∈ I_i} M_a) \ I_i`.
pub fn conditioning_set(model: &GaiModel, i: FactorId) -> AttrSet {
    let scope = model.scope(i);
    scope
        .iter()
        .fold(AttrSet::empty(), |acc, a| acc.union(&neighbor_set(model, a)))
        .difference(scope)
}

/// Every local configuration except the top and bottom anchors, factor by
/// factor in encoding order. The default configuration is included: its
/// answer determines `u(x⁰)`.
pub fn local_query_plan(model: &GaiModel) -> Vec<GambleQuery> {
    (0..model.factor_count())
        .flat_map(|j| {
            (0..model.config_count(j))
                .filter(move |&c| !matches!(model.pin(j, c), Some(Pin::Top | Pin::Bottom)))
                .map(move |config| GambleQuery::Local { factor: j, config })
        })
        .collect()
}

/// True when the default outcome sits at the bottom anchor of every factor.
/// All bottom anchors are then the same full outcome `x⁰`.
pub fn default_is_bottom(model: &GaiModel) -> bool {
    (0..model.factor_count()).all(|j| model.default_index(j) == model.bottom_index(j))
}

/// `2m` anchor queries. When [`default_is_bottom`] holds the bottom anchors
/// share one outcome, so only factor 0's bottom is asked (`m + 1` queries).
/// Conditionally worst anchors need not make `x⁰` the worst outcome overall,
/// so its utility is still asked.
pub fn global_scaling_plan(model: &GaiModel) -> Vec<GambleQuery> {
    let shared_bottom = default_is_bottom(model);
    (0..model.factor_count())
        .flat_map(|j| {
            let mut v = vec![GambleQuery::Global { factor: j, anchor: AnchorSide::Top }];
            if !shared_bottom || j == 0 {
                v.push(GambleQuery::Global { factor: j, anchor: AnchorSide::Bottom });
            }
            v
        })
        .collect()
}

/// Attributes a query refers to.
pub fn query_attributes(model: &GaiModel, q: &GambleQuery) -> AttrSet {
    match *q {
        GambleQuery::Local { factor, .. } => model.scope(factor).union(&conditioning_set(model, factor)),
        GambleQuery::Global { .. } => AttrSet::new(0..model.attr_count()),
    }
}

fn describe_attrs(model: &GaiModel, attrs: &[AttrId], values: &[usize]) -> String {
    attrs
        .iter()
        .zip(values)
        .map(|(&a, &v)| format!("{}={}", model.attributes()[a].name, model.attributes()[a].domain[v]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Human-readable question text.
pub fn render_query(model: &GaiModel, q: &GambleQuery) -> String {
    match *q {
        GambleQuery::Local { factor, config } => {
            let c = model.decode(factor, config);
            let top = model.decode(factor, model.top_index(factor));
            let bottom = model.decode(factor, model.bottom_index(factor));
            let scope = model.scope(factor).as_slice();
            let cond = conditioning_set(model, factor);
            let d = model.default_outcome();
            let mut text = format!(
                "For what probability p would you be indifferent between [{}] and the gamble <p, [{}]; 1-p, [{}]>?",
                describe_attrs(model, scope, &c.values),
                describe_attrs(model, scope, &top.values),
                describe_attrs(model, scope, &bottom.values),
            );
            if !cond.is_empty() {
                let vals: Vec<usize> = cond.iter().map(|a| d.0[a]).collect();
                text.push_str(&format!(" Assume {} (default levels).", describe_attrs(model, cond.as_slice(), &vals)));
            }
            text
        }
        GambleQuery::Global { factor, anchor } => {
            let idx = match anchor {
                AnchorSide::Top => model.top_index(factor),
                AnchorSide::Bottom => model.bottom_index(factor),
            };
            let x = model.expand(&model.decode(factor, idx));
            let all: Vec<AttrId> = (0..model.attr_count()).collect();
            format!(
                "For what probability p would you be indifferent between the outcome [{}] and the gamble <p, best outcome; 1-p, worst outcome>?",
                describe_attrs(model, &all, &x.0)
            )
        }
    }
}

/// Supplies indifference probabilities.
pub trait AnswerSource {
    fn answer(&mut self, model: &GaiModel, query: &GambleQuery) -> Result<f64, ElicitError>;
}

impl<F> AnswerSource for F
where
    F: FnMut(&GaiModel, &GambleQuery) -> Result<f64, ElicitError>,
{
    fn answer(&mut self, model: &GaiModel, query: &GambleQuery) -> Result<f64, ElicitError> {
        self(model, query)
    }
}

#[derive(Debug, Clone)]
pub struct ElicitationResult {
    pub tables: Vec<LocalValueTable>,
    pub anchors: AnchorUtilities,
    pub warnings: Vec<String>,
}

/// Answer bookkeeping for one exact elicitation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactElicitation {
    plan: Vec<GambleQuery>,
    answers: Vec<Option<f64>>,
}

impl ExactElicitation {
    pub fn new(model: &GaiModel) -> Self {
        let mut plan = local_query_plan(model);
        plan.extend(global_scaling_plan(model));
        let answers = vec![None; plan.len()];
        ExactElicitation { plan, answers }
    }

    pub fn plan(&self) -> &[GambleQuery] {
        &self.plan
    }

    pub fn answered(&self) -> usize {
        self.answers.iter().filter(|a| a.is_some()).count()
    }

    pub fn next_unanswered(&self) -> Option<GambleQuery> {
        self.plan.iter().zip(&self.answers).find(|(_, a)| a.is_none()).map(|(q, _)| *q)
    }

    pub fn is_complete(&self) -> bool {
        self.answers.iter().all(Option::is_some)
    }

    /// Records `p` for `query`. Local answers for the top and bottom anchor
    /// configurations are accepted only if they match the pins.
    pub fn record(&mut self, model: &GaiModel, query: &GambleQuery, p: f64) -> Result<(), ElicitError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ElicitError::OutOfRange(p));
        }
        if let GambleQuery::Local { factor, config } = *query {
            let pinned = match model.pin(factor, config) {
                Some(Pin::Top) => Some(1.0),
                Some(Pin::Bottom) => Some(0.0),
                _ => None,
            };
            if let Some(expected) = pinned {
                if (p - expected).abs() > PIN_TOL {
                    return Err(ElicitError::PinViolation { factor, config, expected, got: p });
                }
                return Ok(());
            }
        }
        let k = self.plan.iter().position(|q| q == query).ok_or(ElicitError::NotInPlan)?;
        if self.answers[k].is_some() {
            return Err(ElicitError::AlreadyAnswered);
        }
        self.answers[k] = Some(p);
        Ok(())
    }

    fn answer_of(&self, q: &GambleQuery) -> Option<f64> {
        self.plan.iter().position(|x| x == q).and_then(|k| self.answers[k])
    }

    /// Builds local value tables and anchor utilities from a complete set of
    /// answers.
    pub fn finish(&self, model: &GaiModel) -> Result<ElicitationResult, ElicitError> {
        let missing = self.answers.iter().filter(|a| a.is_none()).count();
        if missing > 0 {
            return Err(ElicitError::Incomplete(missing));
        }
        let mut warnings = Vec::new();
        let shared_bottom = default_is_bottom(model);
        let m = model.factor_count();
        let factors: Vec<AnchorPair> = (0..m)
            .map(|j| {
                let top = self.answer_of(&GambleQuery::Global { factor: j, anchor: AnchorSide::Top }).unwrap_or(0.0);
                let asked = if shared_bottom { 0 } else { j };
                let bottom = self
                    .answer_of(&GambleQuery::Global { factor: asked, anchor: AnchorSide::Bottom })
                    .unwrap_or(0.0);
                AnchorPair { top, bottom }
            })
            .collect();
        for (j, a) in factors.iter().enumerate() {
            if a.top < a.bottom {
                warnings.push(format!("factor {j}: top anchor utility {} is below bottom anchor utility {}", a.top, a.bottom));
            }
        }

        let derived: Vec<f64> = (0..m)
            .map(|j| {
                let a = factors[j];
                match model.pin(j, model.default_index(j)) {
                    Some(Pin::Top) => a.top,
                    Some(Pin::Bottom) => a.bottom,
                    _ => {
                        let v = self
                            .answer_of(&GambleQuery::Local { factor: j, config: model.default_index(j) })
                            .unwrap_or(0.0);
                        a.bottom + v * a.span()
                    }
                }
            })
            .collect();
        let default = derived.first().copied().unwrap_or(0.0);
        for (j, d) in derived.iter().enumerate().skip(1) {
            if (d - default).abs() > PIN_TOL {
                warnings.push(format!("factor {j}: answers imply default utility {d}, factor 0 implies {default}"));
            }
        }
        let anchors = AnchorUtilities { default, factors };

        let tables = (0..m)
            .map(|j| {
                let values = (0..model.config_count(j))
                    .map(|c| match model.pin(j, c) {
                        Some(pin) => anchors.pinned_value(j, pin),
                        None => self.answer_of(&GambleQuery::Local { factor: j, config: c }).unwrap_or(f64::NAN),
                    })
                    .collect();
                LocalValueTable { factor: j, values }
            })
            .collect();
        for w in &warnings {
            tracing::warn!("{w}");
        }
        Ok(ElicitationResult { tables, anchors, warnings })
    }
}

/// Asks every planned query of `source` in order.
pub fn run_exact_elicitation<S: AnswerSource + ?Sized>(model: &GaiModel, source: &mut S) -> Result<ElicitationResult, ElicitError> {
    let mut state = ExactElicitation::new(model);
    while let Some(q) = state.next_unanswered() {
        let p = source.answer(model, &q)?;
        state.record(model, &q, p)?;
    }
    state.finish(model)
}

pub fn assemble_utility(model: &GaiModel, plan: &CompiledPlan, result: &ElicitationResult) -> Result<UtilityFunction, ElicitError> {
    Ok(UtilityFunction::assemble(model, plan, &result.tables, &result.anchors)?)
}
