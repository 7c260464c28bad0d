//! Local value tables, anchor utilities, and evaluation of the assembled
//! utility `u'(x) = Σ_j v̄_j(x_j) (u_j^⊤ − u_j^⊥)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FactorId, GaiModel, Outcome, Pin};
use crate::plan::CompiledPlan;

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("factor {factor}: local value table has {got} entries, expected {expected}")]
    TableSize { factor: FactorId, expected: usize, got: usize },
    #[error("factor {factor}: missing local value for configuration {config}")]
    MissingEntry { factor: FactorId, config: usize },
    #[error("anchor utilities cover {got} factors, model has {expected}")]
    AnchorCount { expected: usize, got: usize },
    #[error("expected {expected} local value tables, got {got}")]
    TableCount { expected: usize, got: usize },
}

/// Dense local values of one factor, indexed by configuration encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalValueTable {
    pub factor: FactorId,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorPair {
    pub top: f64,
    pub bottom: f64,
}

impl AnchorPair {
    pub fn span(&self) -> f64 {
        self.top - self.bottom
    }
}

/// Global utilities of the anchor outcomes `x[I_j]^⊤`, `x[I_j]^⊥` and of the
/// default outcome, all on the `[0,1]` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorUtilities {
    pub default: f64,
    pub factors: Vec<AnchorPair>,
}

impl AnchorUtilities {
    pub fn span(&self, j: FactorId) -> f64 {
        self.factors[j].span()
    }

    /// Pinned local value of the default configuration,
    /// `(u(x⁰) − u_j^⊥)/(u_j^⊤ − u_j^⊥)`; zero for a degenerate span.
    pub fn default_local_value(&self, j: FactorId) -> f64 {
        let a = self.factors[j];
        if a.span() == 0.0 {
            0.0
        } else {
            (self.default - a.bottom) / a.span()
        }
    }

    /// Value a pinned configuration must take.
    pub fn pinned_value(&self, j: FactorId, pin: Pin) -> f64 {
        match pin {
            Pin::Top => 1.0,
            Pin::Bottom => 0.0,
            Pin::Default => self.default_local_value(j),
        }
    }

    /// Constant `K` with `u(x) = u'(x) + K`: each plan term carries `u_j^⊥`
    /// and the dropped empty-intersection terms carry `u(x⁰)`.
    pub fn offset(&self, plan: &CompiledPlan) -> f64 {
        self.factors
            .iter()
            .enumerate()
            .fold(self.default, |k, (j, a)| k + plan.coefficient_sum(j) as f64 * (a.bottom - self.default))
    }

    pub fn check(&self, model: &GaiModel) -> Result<(), UtilityError> {
        if self.factors.len() != model.factor_count() {
            return Err(UtilityError::AnchorCount { expected: model.factor_count(), got: self.factors.len() });
        }
        Ok(())
    }
}

/// `v̄_j(x_j)` from a factor's local value table.
pub fn vbar(plan: &CompiledPlan, table: &LocalValueTable, x: usize) -> Result<f64, UtilityError> {
    let mut s = 0.0;
    for &(q, c) in plan.expansion(table.factor, x) {
        let v = *table
            .values
            .get(q)
            .ok_or(UtilityError::MissingEntry { factor: table.factor, config: q })?;
        if v.is_nan() {
            return Err(UtilityError::MissingEntry { factor: table.factor, config: q });
        }
        s += c as f64 * v;
    }
    Ok(s)
}

pub fn evaluate_utility(
    model: &GaiModel,
    plan: &CompiledPlan,
    tables: &[LocalValueTable],
    anchors: &AnchorUtilities,
    x: &Outcome,
) -> Result<f64, UtilityError> {
    anchors.check(model)?;
    if tables.len() != model.factor_count() {
        return Err(UtilityError::TableCount { expected: model.factor_count(), got: tables.len() });
    }
    let mut u = 0.0;
    for j in 0..model.factor_count() {
        u += vbar(plan, &tables[j], model.local_index(j, x))? * anchors.span(j);
    }
    Ok(u)
}

/// Assembled utility: per-factor subutility tables `u'_j` plus the constant
/// that maps `u'` back onto the scale of the anchor utilities.
#[derive(Debug, Clone)]
pub struct UtilityFunction {
    factor_tables: Vec<Vec<f64>>,
    offset: f64,
}

impl UtilityFunction {
    pub fn assemble(
        model: &GaiModel,
        plan: &CompiledPlan,
        tables: &[LocalValueTable],
        anchors: &AnchorUtilities,
    ) -> Result<Self, UtilityError> {
        anchors.check(model)?;
        if tables.len() != model.factor_count() {
            return Err(UtilityError::TableCount { expected: model.factor_count(), got: tables.len() });
        }
        let mut factor_tables = Vec::with_capacity(model.factor_count());
        for j in 0..model.factor_count() {
            let size = model.config_count(j);
            if tables[j].values.len() != size {
                return Err(UtilityError::TableSize { factor: j, expected: size, got: tables[j].values.len() });
            }
            let span = anchors.span(j);
            factor_tables.push((0..size).map(|x| vbar(plan, &tables[j], x).map(|v| v * span)).collect::<Result<_, _>>()?);
        }
        Ok(UtilityFunction { factor_tables, offset: anchors.offset(plan) })
    }

    pub fn from_factor_tables(factor_tables: Vec<Vec<f64>>, offset: f64) -> Self {
        UtilityFunction { factor_tables, offset }
    }

    /// `u'(x)`, strategically equivalent to the elicited utility.
    pub fn evaluate(&self, model: &GaiModel, x: &Outcome) -> f64 {
        self.factor_tables.iter().enumerate().map(|(j, t)| t[model.local_index(j, x)]).sum()
    }

    /// `u'(x)` shifted onto the anchor-utility scale.
    pub fn absolute(&self, model: &GaiModel, x: &Outcome) -> f64 {
        self.evaluate(model, x) + self.offset
    }

    pub fn factor_tables(&self) -> &[Vec<f64>] {
        &self.factor_tables
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::seven_attribute_model;
    use crate::model::{AttrSet, AttributeSpec, FactorAnchors, FactorScope};

    #[test]
    fn vbar_of_last_factor_matches_closed_form() {
        let m = seven_attribute_model();
        let plan = CompiledPlan::new(&m);
        // scope {x5, x6}: v5(x5,x6) − v5(x5,x6⁰) − v5(x5⁰,x6)
        let table = LocalValueTable { factor: 4, values: vec![0.1, 0.3, 0.55, 0.9] };
        for x in 0..4 {
            let (a, b) = (x / 2, x % 2);
            let expected = table.values[x] - table.values[a * 2] - table.values[b];
            assert!((vbar(&plan, &table, x).unwrap() - expected).abs() < 1e-15);
        }
        // default configuration: all three terms hit the default entry
        assert!((vbar(&plan, &table, 0).unwrap() + 0.1).abs() < 1e-15);
    }

    #[test]
    fn missing_entry_is_an_error() {
        let m = seven_attribute_model();
        let plan = CompiledPlan::new(&m);
        let table = LocalValueTable { factor: 4, values: vec![0.1, f64::NAN, 0.5, 0.9] };
        assert!(matches!(vbar(&plan, &table, 3), Err(UtilityError::MissingEntry { .. })));
        let short = LocalValueTable { factor: 4, values: vec![0.1] };
        assert!(vbar(&plan, &short, 3).is_err());
    }

    fn singleton_model() -> GaiModel {
        let attrs = (0..3)
            .map(|i| AttributeSpec { name: format!("a{i}"), domain: vec!["0".into(), "1".into(), "2".into()] })
            .collect();
        let factors = (0..3).map(|i| FactorScope { name: format!("f{i}"), attrs: AttrSet::new([i]) }).collect();
        GaiModel::new(attrs, factors, Outcome(vec![0; 3]), vec![FactorAnchors { top: vec![2], bottom: vec![0] }; 3], vec![])
            .unwrap()
    }

    #[test]
    fn singleton_factors_reduce_to_additive_model() {
        let m = singleton_model();
        let plan = CompiledPlan::new(&m);
        let tables: Vec<_> =
            (0..3).map(|j| LocalValueTable { factor: j, values: vec![0.0, 0.25 * (j + 1) as f64, 1.0] }).collect();
        let anchors = AnchorUtilities {
            default: 0.0,
            factors: vec![AnchorPair { top: 0.5, bottom: 0.0 }, AnchorPair { top: 0.3, bottom: 0.0 }, AnchorPair { top: 0.2, bottom: 0.0 }],
        };
        for x in m.outcomes() {
            let additive: f64 = (0..3).map(|i| anchors.factors[i].top * tables[i].values[x.0[i]]).sum();
            let u = evaluate_utility(&m, &plan, &tables, &anchors, &x).unwrap();
            assert!((u - additive).abs() < 1e-12);
            let f = UtilityFunction::assemble(&m, &plan, &tables, &anchors).unwrap();
            assert!((f.absolute(&m, &x) - additive).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spans_give_zero_utility() {
        let m = seven_attribute_model();
        let plan = CompiledPlan::new(&m);
        let tables: Vec<_> = (0..m.factor_count())
            .map(|j| LocalValueTable { factor: j, values: (0..m.config_count(j)).map(|c| c as f64 / 16.0).collect() })
            .collect();
        let anchors = AnchorUtilities { default: 0.4, factors: vec![AnchorPair { top: 0.4, bottom: 0.4 }; 5] };
        for x in m.outcomes() {
            assert_eq!(evaluate_utility(&m, &plan, &tables, &anchors, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn default_local_value_pin() {
        let a = AnchorUtilities { default: 0.5, factors: vec![AnchorPair { top: 0.9, bottom: 0.1 }] };
        assert!((a.default_local_value(0) - 0.5).abs() < 1e-15);
        assert_eq!(a.pinned_value(0, Pin::Top), 1.0);
        assert_eq!(a.pinned_value(0, Pin::Bottom), 0.0);
    }
}
