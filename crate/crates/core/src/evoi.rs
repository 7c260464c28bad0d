//! Myopic expected value of information for local comparison queries
//! `⟨x_i^q, l⟩`: "is `v_i(x_i^q) ≥ l`?".
//!
//! A response only moves `E[v_i(x_i^q)]`, which enters the expected utility of
//! every configuration `x_i` in its dependent set linearly:
//! `d1(x_i) E[v_i(x_i^q)] + d2(x_i)`. Everything else, including the best
//! completion `r(x_i)` of the remaining factors, is fixed, so the EPU is a
//! piecewise quadratic in `l` that is evaluated and maximized in closed form.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{Belief, ParameterBelief, UniformMixture};
use crate::inference::{InferenceError, SolveCache, Solver};
use crate::model::{FactorId, GaiModel};
use crate::plan::CompiledPlan;
use crate::utility::AnchorUtilities;

/// Queries whose EVOI is at most this are uninformative.
pub const EVOI_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum EvoiError {
    #[error("no free parameter at factor {factor}, configuration {config}")]
    UnknownParameter { factor: FactorId, config: usize },
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepEntry {
    pub config: usize,
    pub coefficient: i64,
}

/// Configurations of factor `i` whose `v̄_i` references `v_i(x_q)`, with
/// aggregated coefficients.
pub fn dep_set(plan: &CompiledPlan, i: FactorId, q: usize) -> Vec<DepEntry> {
    plan.dependents(i, q).iter().map(|&(config, coefficient)| DepEntry { config, coefficient }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonQuery {
    pub factor: FactorId,
    pub config: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryEvaluation {
    pub query: ComparisonQuery,
    pub epu: f64,
    pub evoi: f64,
    pub prob_yes: f64,
}

/// Payoff lines `d1 · v + d2` of the affected configurations and the best
/// unaffected value `U_fixed`.
#[derive(Debug, Clone)]
pub struct Payoffs<'m> {
    mixture: &'m UniformMixture,
    lines: Vec<(f64, f64)>,
    fixed: f64,
}

impl Payoffs<'_> {
    fn branch(&self, p: f64, moment: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let best = self.lines.iter().map(|&(d1, d2)| d1 * moment + d2 * p).fold(f64::NEG_INFINITY, f64::max);
        if self.fixed == f64::NEG_INFINITY {
            best
        } else {
            best.max(p * self.fixed)
        }
    }

    pub fn epu(&self, l: f64) -> f64 {
        let m = self.mixture;
        self.branch(m.prob_yes_unchecked(l), m.moment_above(l)) + self.branch(m.prob_no_unchecked(l), m.moment_below(l))
    }

    /// Candidate thresholds containing the maximizer of `epu` on `[0, 1]`:
    /// density breakpoints, the ends of the range, and the stationary points
    /// of every pairing of yes-branch and no-branch payoffs.
    pub fn candidates(&self) -> Vec<f64> {
        let mut c: Vec<f64> = vec![0.0, 1.0];
        c.extend(self.mixture.breakpoints());
        let fixed = (self.fixed != f64::NEG_INFINITY).then_some(self.fixed);
        for (a, &(d1a, d2a)) in self.lines.iter().enumerate() {
            if let Some(u) = fixed {
                if d1a != 0.0 {
                    c.push((u - d2a) / d1a);
                }
            }
            for &(d1b, d2b) in &self.lines[a + 1..] {
                if d1a != d1b {
                    c.push((d2a - d2b) / (d1b - d1a));
                }
            }
        }
        c.retain(|l| l.is_finite());
        for l in &mut c {
            *l = l.clamp(0.0, 1.0);
        }
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }

    /// Best threshold; ties go to the lower `l`.
    pub fn optimal_threshold(&self) -> (f64, f64) {
        let mut best = (0.0, f64::NEG_INFINITY);
        for l in self.candidates() {
            let e = self.epu(l);
            if e > best.1 {
                best = (l, e);
            }
        }
        best
    }
}

/// Immutable snapshot of everything a query evaluation reads.
pub struct EvoiContext<'a> {
    pub model: &'a GaiModel,
    pub plan: &'a CompiledPlan,
    pub beliefs: &'a ParameterBelief,
    pub anchors: &'a AnchorUtilities,
    pub solver: &'a Solver,
    pub cache: &'a SolveCache,
}

impl<'a> EvoiContext<'a> {
    /// Current maximum expected utility.
    pub fn current_value(&self) -> f64 {
        self.cache.maximum().value
    }

    fn free_mixture(&self, i: FactorId, q: usize) -> Result<Option<&'a UniformMixture>, EvoiError> {
        match self.beliefs.get(i, q) {
            Some(Belief::Mixture { mixture }) => Ok(Some(mixture)),
            Some(Belief::Known { .. }) => Ok(None),
            None => Err(EvoiError::UnknownParameter { factor: i, config: q }),
        }
    }

    /// Payoff structure of querying `(i, q)`; `None` for a parameter that is
    /// already known exactly.
    pub fn payoffs(&self, i: FactorId, q: usize) -> Result<Option<Payoffs<'a>>, EvoiError> {
        let Some(mixture) = self.free_mixture(i, q)? else { return Ok(None) };
        let span = self.anchors.span(i);
        let mean = mixture.mean();
        let expected = &self.cache.tables()[i];
        let r = self.cache.restricted(self.solver, i);
        let dep = self.plan.dependents(i, q);
        let mut lines = Vec::with_capacity(dep.len());
        for &(x, s) in dep {
            if r[x] == f64::NEG_INFINITY {
                continue;
            }
            let d1 = span * s as f64;
            lines.push((d1, expected[x] - d1 * mean + r[x]));
        }
        let mut fixed = f64::NEG_INFINITY;
        for x in 0..expected.len() {
            if r[x] != f64::NEG_INFINITY && !dep.iter().any(|&(y, _)| y == x) {
                fixed = fixed.max(expected[x] + r[x]);
            }
        }
        Ok(Some(Payoffs { mixture, lines, fixed }))
    }

    pub fn epu(&self, query: &ComparisonQuery) -> Result<f64, EvoiError> {
        Ok(self.evaluate(query)?.epu)
    }

    pub fn evaluate(&self, query: &ComparisonQuery) -> Result<QueryEvaluation, EvoiError> {
        let l = query.threshold;
        if !(0.0..=1.0).contains(&l) {
            return Err(EvoiError::Threshold(l));
        }
        let current = self.current_value();
        Ok(match self.payoffs(query.factor, query.config)? {
            Some(p) => {
                let epu = p.epu(l);
                QueryEvaluation { query: *query, epu, evoi: epu - current, prob_yes: p.mixture.prob_yes_unchecked(l) }
            }
            None => {
                let v = self.beliefs.get(query.factor, query.config).map_or(0.0, Belief::mean);
                let prob_yes = if v >= l { 1.0 } else { 0.0 };
                QueryEvaluation { query: *query, epu: current, evoi: 0.0, prob_yes }
            }
        })
    }

    /// `(l*, EPU(l*))` for the parameter `(i, q)`.
    pub fn optimal_threshold(&self, i: FactorId, q: usize) -> Result<(f64, f64), EvoiError> {
        Ok(match self.payoffs(i, q)? {
            Some(p) if !p.lines.is_empty() => p.optimal_threshold(),
            Some(p) => (p.mixture.mean(), self.current_value()),
            None => (self.beliefs.get(i, q).map_or(0.0, Belief::mean), self.current_value()),
        })
    }

    fn evaluate_best(&self, i: FactorId, q: usize) -> Option<QueryEvaluation> {
        let p = self.payoffs(i, q).ok()??;
        if p.lines.is_empty() {
            return None;
        }
        let (l, epu) = p.optimal_threshold();
        Some(QueryEvaluation {
            query: ComparisonQuery { factor: i, config: q, threshold: l },
            epu,
            evoi: epu - self.current_value(),
            prob_yes: p.mixture.prob_yes_unchecked(l),
        })
    }

    /// Highest-EPU query over all uncertain parameters, or `None` when no
    /// query has EVOI above [`EVOI_EPS`].
    pub fn best_local_query(&self) -> Option<QueryEvaluation> {
        (0..self.model.factor_count()).into_par_iter().for_each(|i| {
            self.cache.restricted(self.solver, i);
        });
        let params: Vec<(FactorId, usize)> = self
            .beliefs
            .entries()
            .filter(|(_, _, b)| matches!(b, Belief::Mixture { .. }))
            .map(|(j, c, _)| (j, c))
            .collect();
        params
            .par_iter()
            .filter_map(|&(i, q)| self.evaluate_best(i, q))
            .max_by(preference)
            .filter(|e| e.evoi > EVOI_EPS)
    }
}

/// Total order used to pick among evaluations: higher EPU, then lower
/// factor, configuration and threshold.
fn preference(a: &QueryEvaluation, b: &QueryEvaluation) -> Ordering {
    a.epu
        .total_cmp(&b.epu)
        .then_with(|| b.query.factor.cmp(&a.query.factor))
        .then_with(|| b.query.config.cmp(&a.query.config))
        .then_with(|| b.query.threshold.total_cmp(&a.query.threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{Component, Response};
    use crate::inference::{expected_local_values, expected_tables};
    use crate::model::fixtures::seven_attribute_model;
    use crate::model::{AttrSet, AttributeSpec, Constraint, FactorAnchors, FactorScope, Outcome};
    use crate::utility::AnchorPair;

    /// One attribute with four levels: bottom 0, free 1, default 2 (pinned
    /// at 0.5), top 3 forbidden.
    fn threshold_model() -> (GaiModel, AnchorUtilities) {
        let attrs = vec![AttributeSpec { name: "a".into(), domain: (0..4).map(|v| v.to_string()).collect() }];
        let factors = vec![FactorScope { name: "f".into(), attrs: AttrSet::new([0]) }];
        let m = GaiModel::new(
            attrs,
            factors,
            Outcome(vec![2]),
            vec![FactorAnchors { top: vec![3], bottom: vec![0] }],
            vec![Constraint { attrs: vec![0], forbidden: vec![vec![3]] }],
        )
        .unwrap();
        let a = AnchorUtilities { default: 0.5, factors: vec![AnchorPair { top: 1.0, bottom: 0.0 }] };
        (m, a)
    }

    struct Fixture {
        model: GaiModel,
        plan: CompiledPlan,
        beliefs: ParameterBelief,
        anchors: AnchorUtilities,
        solver: Solver,
        cache: SolveCache,
    }

    impl Fixture {
        fn new(model: GaiModel, beliefs: ParameterBelief, anchors: AnchorUtilities) -> Self {
            let plan = CompiledPlan::new(&model);
            let solver = Solver::new(&model);
            let local = expected_local_values(&model, &beliefs, &anchors).unwrap();
            let cache = SolveCache::new(&solver, expected_tables(&model, &plan, &anchors, &local)).unwrap();
            Fixture { model, plan, beliefs, anchors, solver, cache }
        }

        fn ctx(&self) -> EvoiContext<'_> {
            EvoiContext {
                model: &self.model,
                plan: &self.plan,
                beliefs: &self.beliefs,
                anchors: &self.anchors,
                solver: &self.solver,
                cache: &self.cache,
            }
        }
    }

    #[test]
    fn symmetric_payoffs_put_threshold_at_half() {
        let (m, a) = threshold_model();
        let beliefs = ParameterBelief::uniform(&m);
        let f = Fixture::new(m, beliefs, a);
        let ctx = f.ctx();
        let (l, epu) = ctx.optimal_threshold(0, 1).unwrap();
        assert!((l - 0.5).abs() < 1e-12);
        // yes: E[v | v ≥ .5] = .75; no: keep the default at .5
        assert!((epu - (0.5 * 0.75 + 0.5 * 0.5)).abs() < 1e-12);
        let best = ctx.best_local_query().unwrap();
        assert_eq!((best.query.factor, best.query.config), (0, 1));
        assert!((best.evoi - 0.125).abs() < 1e-12);
    }

    #[test]
    fn boundary_thresholds_are_uninformative() {
        let m = seven_attribute_model();
        let beliefs = ParameterBelief::uniform(&m);
        let anchors = AnchorUtilities {
            default: 0.3,
            factors: vec![
                AnchorPair { top: 0.9, bottom: 0.1 },
                AnchorPair { top: 0.8, bottom: 0.2 },
                AnchorPair { top: 0.7, bottom: 0.0 },
                AnchorPair { top: 0.6, bottom: 0.1 },
                AnchorPair { top: 0.95, bottom: 0.05 },
            ],
        };
        let f = Fixture::new(m, beliefs, anchors);
        let ctx = f.ctx();
        for (j, c, _) in f.beliefs.entries() {
            for l in [0.0, 1.0] {
                let e = ctx.evaluate(&ComparisonQuery { factor: j, config: c, threshold: l }).unwrap();
                assert!((e.epu - ctx.current_value()).abs() < 1e-9, "{j} {c} {l}");
            }
            let (_, epu) = ctx.optimal_threshold(j, c).unwrap();
            assert!(epu - ctx.current_value() >= -1e-9);
        }
    }

    #[test]
    fn certain_beliefs_have_no_informative_query() {
        let (m, a) = threshold_model();
        let beliefs = ParameterBelief::from_fn(&m, |_, _| UniformMixture::point_like(0.3, 1e-14));
        let f = Fixture::new(m, beliefs, a);
        assert!(f.ctx().best_local_query().is_none());

        let (m, a) = threshold_model();
        let mut beliefs = ParameterBelief::uniform(&m);
        beliefs.set_known(0, 1, 0.3).unwrap();
        let f = Fixture::new(m, beliefs, a);
        assert!(f.ctx().best_local_query().is_none());
        let e = f.ctx().evaluate(&ComparisonQuery { factor: 0, config: 1, threshold: 0.5 }).unwrap();
        assert_eq!(e.evoi, 0.0);
    }

    #[test]
    fn zero_span_gives_constant_epu() {
        let (m, _) = threshold_model();
        let a = AnchorUtilities { default: 0.5, factors: vec![AnchorPair { top: 0.5, bottom: 0.5 }] };
        let beliefs = ParameterBelief::uniform(&m);
        let f = Fixture::new(m, beliefs, a);
        let ctx = f.ctx();
        for k in 0..=10 {
            let e = ctx.evaluate(&ComparisonQuery { factor: 0, config: 1, threshold: k as f64 / 10.0 }).unwrap();
            assert!(e.evoi.abs() < 1e-15);
        }
    }

    #[test]
    fn dep_set_of_last_factor() {
        let m = seven_attribute_model();
        let plan = CompiledPlan::new(&m);
        // factor {x4, x5}; x_q = (1, 0): referenced by (1,0) itself (+1 −1
        // cancels) and by (1,1) through the {x4} term.
        let dep = dep_set(&plan, 4, 2);
        assert_eq!(dep, vec![DepEntry { config: 3, coefficient: -1 }]);
        let dep = dep_set(&plan, 4, 3);
        assert_eq!(dep, vec![DepEntry { config: 3, coefficient: 1 }]);
    }

    #[test]
    fn threshold_beats_grid_on_skewed_prior() {
        let (m, a) = threshold_model();
        let prior = UniformMixture::new(vec![
            Component { lower: 0.0, upper: 0.2, weight: 0.1 },
            Component { lower: 0.2, upper: 0.45, weight: 0.5 },
            Component { lower: 0.45, upper: 1.0, weight: 0.4 },
        ])
        .unwrap();
        let mut beliefs = ParameterBelief::from_fn(&m, |_, _| prior.clone());
        beliefs.update(0, 1, 0.1, Response::Yes).unwrap();
        let f = Fixture::new(m, beliefs, a);
        let ctx = f.ctx();
        let (_, best) = ctx.optimal_threshold(0, 1).unwrap();
        for k in 0..=10_000 {
            let l = k as f64 * 1e-4;
            let e = ctx.epu(&ComparisonQuery { factor: 0, config: 1, threshold: l }).unwrap();
            assert!(best >= e - 1e-12);
        }
    }
}
