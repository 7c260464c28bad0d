//! GAI model representation: attributes, factor scopes, default outcome,
//! per-factor anchors and feasibility constraints.
//!
//! Attribute values are stored as indices into the attribute's domain. Local
//! configurations of a factor are densely encoded in mixed radix over the
//! factor's (ascending) attribute list, last attribute fastest, so encoding
//! order coincides with lexicographic order of the value tuples.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type AttrId = usize;
pub type FactorId = usize;

/// Sorted set of attribute indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttrSet(Vec<AttrId>);

impl AttrSet {
    pub fn new<I: IntoIterator<Item = AttrId>>(items: I) -> Self {
        let mut v: Vec<AttrId> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        AttrSet(v)
    }

    pub fn empty() -> Self {
        AttrSet(Vec::new())
    }

    pub fn as_slice(&self) -> &[AttrId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: AttrId) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    pub fn intersection(&self, other: &AttrSet) -> AttrSet {
        AttrSet(self.0.iter().copied().filter(|a| other.contains(*a)).collect())
    }

    pub fn union(&self, other: &AttrSet) -> AttrSet {
        AttrSet::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn difference(&self, other: &AttrSet) -> AttrSet {
        AttrSet(self.0.iter().copied().filter(|a| !other.contains(*a)).collect())
    }

    pub fn is_subset(&self, other: &AttrSet) -> bool {
        self.0.iter().all(|a| other.contains(*a))
    }
}

impl fmt::Display for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<AttrId> for AttrSet {
    fn from_iter<T: IntoIterator<Item = AttrId>>(iter: T) -> Self {
        AttrSet::new(iter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorScope {
    pub name: String,
    pub attrs: AttrSet,
}

/// Full assignment, one domain index per attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Outcome(pub Vec<usize>);

impl Outcome {
    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

/// Assignment to the attributes of one factor, in scope order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocalConfig {
    pub factor: FactorId,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorAnchors {
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
}

/// Forbidden partial assignments over a scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub attrs: Vec<AttrId>,
    pub forbidden: Vec<Vec<usize>>,
}

impl Constraint {
    pub fn allows(&self, x: &Outcome) -> bool {
        !self
            .forbidden
            .iter()
            .any(|t| t.iter().zip(&self.attrs).all(|(v, a)| x.0[*a] == *v))
    }
}

/// Mixed-radix layout of a factor's local configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorLayout {
    pub radices: Vec<usize>,
    pub strides: Vec<usize>,
    pub size: usize,
}

impl FactorLayout {
    fn new(radices: Vec<usize>) -> Self {
        let mut strides = vec![0; radices.len()];
        let mut s = 1usize;
        for k in (0..radices.len()).rev() {
            strides[k] = s;
            s = s.saturating_mul(radices[k]);
        }
        FactorLayout { radices, strides, size: s }
    }

    pub fn encode(&self, values: &[usize]) -> usize {
        values.iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        for k in 0..self.radices.len() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
        out
    }
}

/// Which of the three special configurations a local configuration is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pin {
    Top,
    Bottom,
    Default,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("factor {factor} references unknown attribute {attr}")]
    UnknownAttribute { factor: FactorId, attr: AttrId },
    #[error("{what}: expected {expected} values, got {got}")]
    Arity { what: String, expected: usize, got: usize },
    #[error("{what}: value {value} out of range for attribute {attr}")]
    ValueOutOfRange { what: String, attr: AttrId, value: usize },
    #[error("anchors given for {got} factors, model has {expected}")]
    AnchorCount { expected: usize, got: usize },
    #[error("projection set {set} is not a subset of scope {scope}")]
    NotSubset { set: AttrSet, scope: AttrSet },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaiModel {
    attributes: Vec<AttributeSpec>,
    factors: Vec<FactorScope>,
    default_outcome: Outcome,
    anchors: Vec<FactorAnchors>,
    constraints: Vec<Constraint>,
    layouts: Vec<FactorLayout>,
}

impl GaiModel {
    /// Checks structural well-formedness (indices and arities). Semantic
    /// problems such as uncovered attributes are reported by [`validate_model`].
    pub fn new(
        attributes: Vec<AttributeSpec>,
        factors: Vec<FactorScope>,
        default_outcome: Outcome,
        anchors: Vec<FactorAnchors>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, ModelError> {
        let n = attributes.len();
        let check_values = |what: String, attrs: &[AttrId], vals: &[usize]| {
            if attrs.len() != vals.len() {
                return Err(ModelError::Arity { what, expected: attrs.len(), got: vals.len() });
            }
            for (a, v) in attrs.iter().zip(vals) {
                if *v >= attributes[*a].domain.len() {
                    return Err(ModelError::ValueOutOfRange { what, attr: *a, value: *v });
                }
            }
            Ok(())
        };
        for (j, f) in factors.iter().enumerate() {
            if let Some(a) = f.attrs.iter().find(|a| *a >= n) {
                return Err(ModelError::UnknownAttribute { factor: j, attr: a });
            }
        }
        let all: Vec<AttrId> = (0..n).collect();
        check_values("default outcome".into(), &all, &default_outcome.0)?;
        if anchors.len() != factors.len() {
            return Err(ModelError::AnchorCount { expected: factors.len(), got: anchors.len() });
        }
        for (j, (f, an)) in factors.iter().zip(&anchors).enumerate() {
            check_values(format!("top anchor of factor {j}"), f.attrs.as_slice(), &an.top)?;
            check_values(format!("bottom anchor of factor {j}"), f.attrs.as_slice(), &an.bottom)?;
        }
        for (k, c) in constraints.iter().enumerate() {
            if let Some(a) = c.attrs.iter().find(|a| **a >= n) {
                return Err(ModelError::UnknownAttribute { factor: k, attr: *a });
            }
            for t in &c.forbidden {
                check_values(format!("constraint {k}"), &c.attrs, t)?;
            }
        }
        let layouts = factors
            .iter()
            .map(|f| FactorLayout::new(f.attrs.iter().map(|a| attributes[a].domain.len()).collect()))
            .collect();
        Ok(GaiModel { attributes, factors, default_outcome, anchors, constraints, layouts })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn factors(&self) -> &[FactorScope] {
        &self.factors
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn default_outcome(&self) -> &Outcome {
        &self.default_outcome
    }

    pub fn anchors(&self) -> &[FactorAnchors] {
        &self.anchors
    }

    pub fn attr_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn domain_size(&self, a: AttrId) -> usize {
        self.attributes[a].domain.len()
    }

    pub fn scope(&self, j: FactorId) -> &AttrSet {
        &self.factors[j].attrs
    }

    pub fn layout(&self, j: FactorId) -> &FactorLayout {
        &self.layouts[j]
    }

    pub fn config_count(&self, j: FactorId) -> usize {
        self.layouts[j].size
    }

    pub fn outcome_count(&self) -> u128 {
        self.attributes.iter().map(|a| a.domain.len() as u128).product()
    }

    pub fn encode(&self, c: &LocalConfig) -> usize {
        self.layouts[c.factor].encode(&c.values)
    }

    pub fn decode(&self, j: FactorId, idx: usize) -> LocalConfig {
        LocalConfig { factor: j, values: self.layouts[j].decode(idx) }
    }

    /// Restriction of a full outcome to factor `j`, encoded.
    pub fn local_index(&self, j: FactorId, x: &Outcome) -> usize {
        let l = &self.layouts[j];
        self.factors[j].attrs.iter().zip(&l.strides).map(|(a, s)| x.0[a] * s).sum()
    }

    pub fn restrict(&self, j: FactorId, x: &Outcome) -> LocalConfig {
        LocalConfig { factor: j, values: self.factors[j].attrs.iter().map(|a| x.0[a]).collect() }
    }

    pub fn default_index(&self, j: FactorId) -> usize {
        self.local_index(j, &self.default_outcome)
    }

    pub fn top_index(&self, j: FactorId) -> usize {
        self.layouts[j].encode(&self.anchors[j].top)
    }

    pub fn bottom_index(&self, j: FactorId) -> usize {
        self.layouts[j].encode(&self.anchors[j].bottom)
    }

    /// Top and bottom take precedence when the default coincides with one of them.
    pub fn pin(&self, j: FactorId, idx: usize) -> Option<Pin> {
        if idx == self.top_index(j) {
            Some(Pin::Top)
        } else if idx == self.bottom_index(j) {
            Some(Pin::Bottom)
        } else if idx == self.default_index(j) {
            Some(Pin::Default)
        } else {
            None
        }
    }

    /// Encoded configurations of factor `j` that carry an uncertain parameter.
    pub fn free_configs(&self, j: FactorId) -> impl Iterator<Item = usize> + '_ {
        (0..self.config_count(j)).filter(move |&c| self.pin(j, c).is_none())
    }

    pub fn free_parameter_count(&self) -> usize {
        (0..self.factor_count()).map(|j| self.free_configs(j).count()).sum()
    }

    /// Full outcome `x[I_j]` for a local configuration: scope attributes from
    /// the configuration, all others at default.
    pub fn expand(&self, c: &LocalConfig) -> Outcome {
        let mut x = self.default_outcome.clone();
        for (a, v) in self.factors[c.factor].attrs.iter().zip(&c.values) {
            x.0[a] = *v;
        }
        x
    }

    /// `x[J]`: attributes in `set` keep their values, all others take defaults.
    pub fn project_outcome(&self, x: &Outcome, set: &AttrSet) -> Result<Outcome, ModelError> {
        if let Some(a) = set.iter().find(|a| *a >= self.attr_count()) {
            return Err(ModelError::NotSubset {
                set: set.clone(),
                scope: AttrSet::new(0..self.attr_count()).union(&AttrSet::new([a])),
            });
        }
        let mut out = self.default_outcome.clone();
        for a in set.iter() {
            out.0[a] = x.0[a];
        }
        Ok(out)
    }

    /// Projection of a local configuration; the result stays within the factor.
    pub fn project_local(&self, c: &LocalConfig, set: &AttrSet) -> Result<LocalConfig, ModelError> {
        let scope = &self.factors[c.factor].attrs;
        if !set.is_subset(scope) {
            return Err(ModelError::NotSubset { set: set.clone(), scope: scope.clone() });
        }
        let values = scope
            .iter()
            .zip(&c.values)
            .map(|(a, v)| if set.contains(a) { *v } else { self.default_outcome.0[a] })
            .collect();
        Ok(LocalConfig { factor: c.factor, values })
    }

    /// Encoded projection without the subset check; attributes of the scope
    /// outside `set` are reset to default.
    pub(crate) fn project_index(&self, j: FactorId, idx: usize, set: &AttrSet) -> usize {
        let l = &self.layouts[j];
        let mut out = 0;
        for (k, a) in self.factors[j].attrs.iter().enumerate() {
            let v = if set.contains(a) { (idx / l.strides[k]) % l.radices[k] } else { self.default_outcome.0[a] };
            out += v * l.strides[k];
        }
        out
    }

    pub fn is_feasible(&self, x: &Outcome) -> bool {
        self.constraints.iter().all(|c| c.allows(x))
    }

    /// Iterates all outcomes in lexicographic order. Only for small models.
    pub fn outcomes(&self) -> OutcomeIter {
        OutcomeIter {
            radices: self.attributes.iter().map(|a| a.domain.len()).collect(),
            next: Some(vec![0; self.attr_count()]),
        }
    }

    pub fn describe_config(&self, c: &LocalConfig) -> String {
        self.factors[c.factor]
            .attrs
            .iter()
            .zip(&c.values)
            .map(|(a, v)| format!("{}={}", self.attributes[a].name, self.attributes[a].domain[*v]))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Same model with factors reordered: `order[k]` is the old index of new factor `k`.
    pub fn with_factor_order(&self, order: &[FactorId]) -> GaiModel {
        GaiModel::new(
            self.attributes.clone(),
            order.iter().map(|&j| self.factors[j].clone()).collect(),
            self.default_outcome.clone(),
            order.iter().map(|&j| self.anchors[j].clone()).collect(),
            self.constraints.clone(),
        )
        .expect("reordering preserves well-formedness")
    }
}

pub struct OutcomeIter {
    radices: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for OutcomeIter {
    type Item = Outcome;

    fn next(&mut self) -> Option<Outcome> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut k = succ.len();
        let mut done = true;
        while k > 0 {
            k -= 1;
            succ[k] += 1;
            if succ[k] < self.radices[k] {
                done = false;
                break;
            }
            succ[k] = 0;
        }
        if !done {
            self.next = Some(succ);
        }
        Some(Outcome(cur))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DomainTooSmall { attr: AttrId },
    DuplicateLabel { attr: AttrId, label: String },
    EmptyFactor { factor: FactorId },
    AttributeUncovered { attr: AttrId },
    DuplicateFactor { first: FactorId, second: FactorId },
    AnchorsEqual { factor: FactorId },
    InfeasibleDefault { constraint: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DomainTooSmall { attr } => write!(f, "attribute {attr}: domain has fewer than 2 values"),
            Violation::DuplicateLabel { attr, label } => write!(f, "attribute {attr}: duplicate value label '{label}'"),
            Violation::EmptyFactor { factor } => write!(f, "factor {factor}: empty scope"),
            Violation::AttributeUncovered { attr } => write!(f, "attribute uncovered: {attr} is in no factor"),
            Violation::DuplicateFactor { first, second } => {
                write!(f, "duplicate factor: {second} has the same scope as {first}")
            }
            Violation::AnchorsEqual { factor } => write!(f, "factor {factor}: top and bottom anchors are equal"),
            Violation::InfeasibleDefault { constraint } => {
                write!(f, "default outcome violates constraint {constraint}")
            }
        }
    }
}

/// Semantic checks. An empty report means the model is valid.
pub fn validate_model(model: &GaiModel) -> Vec<Violation> {
    let mut out = Vec::new();
    for (a, spec) in model.attributes.iter().enumerate() {
        if spec.domain.len() < 2 {
            out.push(Violation::DomainTooSmall { attr: a });
        }
        for (k, label) in spec.domain.iter().enumerate() {
            if spec.domain[..k].contains(label) {
                out.push(Violation::DuplicateLabel { attr: a, label: label.clone() });
            }
        }
    }
    for (j, f) in model.factors.iter().enumerate() {
        if f.attrs.is_empty() {
            out.push(Violation::EmptyFactor { factor: j });
        }
        if let Some(first) = model.factors[..j].iter().position(|g| g.attrs == f.attrs) {
            out.push(Violation::DuplicateFactor { first, second: j });
        }
    }
    for a in 0..model.attr_count() {
        if !model.factors.iter().any(|f| f.attrs.contains(a)) {
            out.push(Violation::AttributeUncovered { attr: a });
        }
    }
    for (j, an) in model.anchors.iter().enumerate() {
        if an.top == an.bottom {
            out.push(Violation::AnchorsEqual { factor: j });
        }
    }
    for (k, c) in model.constraints.iter().enumerate() {
        if !c.allows(&model.default_outcome) {
            out.push(Violation::InfeasibleDefault { constraint: k });
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::seven_attribute_model;
    use super::*;

    fn two_attr() -> GaiModel {
        let attrs = vec![
            AttributeSpec { name: "a".into(), domain: vec!["a0".into(), "a1".into(), "a2".into()] },
            AttributeSpec { name: "b".into(), domain: vec!["b0".into(), "b1".into()] },
        ];
        GaiModel::new(
            attrs,
            vec![FactorScope { name: "ab".into(), attrs: AttrSet::new([0, 1]) }],
            Outcome(vec![1, 0]),
            vec![FactorAnchors { top: vec![2, 1], bottom: vec![0, 0] }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn seven_attribute_model_is_valid() {
        assert!(validate_model(&seven_attribute_model()).is_empty());
    }

    #[test]
    fn uncovered_attribute_reported() {
        let m = seven_attribute_model();
        let factors: Vec<_> = m.factors().iter().filter(|f| !f.attrs.contains(2)).cloned().collect();
        let anchors: Vec<_> = m
            .factors()
            .iter()
            .zip(m.anchors())
            .filter(|(f, _)| !f.attrs.contains(2))
            .map(|(_, a)| a.clone())
            .collect();
        let m2 = GaiModel::new(m.attributes().to_vec(), factors, m.default_outcome().clone(), anchors, vec![])
            .unwrap();
        let report = validate_model(&m2);
        assert_eq!(report, vec![Violation::AttributeUncovered { attr: 2 }]);
        assert!(report[0].to_string().contains("attribute uncovered"));
    }

    #[test]
    fn equal_anchors_and_infeasible_default_reported() {
        let m = seven_attribute_model();
        let mut anchors = m.anchors().to_vec();
        anchors[1].bottom = anchors[1].top.clone();
        let c = Constraint { attrs: vec![0, 1], forbidden: vec![vec![0, 0]] };
        let m2 = GaiModel::new(m.attributes().to_vec(), m.factors().to_vec(), m.default_outcome().clone(), anchors, vec![c])
            .unwrap();
        let report = validate_model(&m2);
        assert!(report.contains(&Violation::AnchorsEqual { factor: 1 }));
        assert!(report.contains(&Violation::InfeasibleDefault { constraint: 0 }));
    }

    #[test]
    fn duplicate_factor_and_small_domain() {
        let attrs = vec![
            AttributeSpec { name: "a".into(), domain: vec!["x".into()] },
            AttributeSpec { name: "b".into(), domain: vec!["y".into(), "y".into()] },
        ];
        let f = FactorScope { name: "f".into(), attrs: AttrSet::new([0, 1]) };
        let an = FactorAnchors { top: vec![0, 1], bottom: vec![0, 0] };
        let m = GaiModel::new(attrs, vec![f.clone(), f], Outcome(vec![0, 0]), vec![an.clone(), an], vec![]).unwrap();
        let r = validate_model(&m);
        assert!(r.contains(&Violation::DomainTooSmall { attr: 0 }));
        assert!(r.contains(&Violation::DuplicateLabel { attr: 1, label: "y".into() }));
        assert!(r.contains(&Violation::DuplicateFactor { first: 0, second: 1 }));
    }

    #[test]
    fn structural_errors() {
        let attrs = vec![AttributeSpec { name: "a".into(), domain: vec!["x".into(), "y".into()] }];
        let f = FactorScope { name: "f".into(), attrs: AttrSet::new([3]) };
        let an = FactorAnchors { top: vec![1], bottom: vec![0] };
        assert!(matches!(
            GaiModel::new(attrs.clone(), vec![f], Outcome(vec![0]), vec![an.clone()], vec![]),
            Err(ModelError::UnknownAttribute { .. })
        ));
        let f = FactorScope { name: "f".into(), attrs: AttrSet::new([0]) };
        assert!(matches!(
            GaiModel::new(attrs, vec![f], Outcome(vec![5]), vec![an], vec![]),
            Err(ModelError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let m = two_attr();
        let x = Outcome(vec![2, 1]);
        assert_eq!(m.project_outcome(&x, &AttrSet::new([0])).unwrap(), Outcome(vec![2, 0]));
        assert_eq!(m.project_outcome(&x, &AttrSet::new([0, 1])).unwrap(), x);
        assert_eq!(m.project_outcome(&x, &AttrSet::empty()).unwrap(), Outcome(vec![1, 0]));
        let c = LocalConfig { factor: 0, values: vec![2, 1] };
        assert_eq!(m.project_local(&c, &AttrSet::new([1])).unwrap().values, vec![1, 1]);
        assert!(m.project_local(&c, &AttrSet::new([5])).is_err());
        assert!(m.project_outcome(&x, &AttrSet::new([7])).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let m = seven_attribute_model();
        for x in m.outcomes().step_by(7) {
            for mask in 0u32..128 {
                let set = AttrSet::new((0..7).filter(|a| mask >> a & 1 == 1));
                let once = m.project_outcome(&x, &set).unwrap();
                assert_eq!(m.project_outcome(&once, &set).unwrap(), once);
            }
        }
    }

    #[test]
    fn encoding_is_lexicographic() {
        let m = two_attr();
        let l = m.layout(0);
        assert_eq!(l.size, 6);
        let decoded: Vec<_> = (0..6).map(|i| l.decode(i)).collect();
        let mut sorted = decoded.clone();
        sorted.sort();
        assert_eq!(decoded, sorted);
        for i in 0..6 {
            assert_eq!(l.encode(&decoded[i]), i);
        }
    }

    #[test]
    fn pins_and_free_parameters() {
        let m = two_attr();
        // default (1,0) = 2, top (2,1) = 5, bottom (0,0) = 0
        assert_eq!(m.pin(0, 5), Some(Pin::Top));
        assert_eq!(m.pin(0, 0), Some(Pin::Bottom));
        assert_eq!(m.pin(0, 2), Some(Pin::Default));
        assert_eq!(m.free_configs(0).collect::<Vec<_>>(), vec![1, 3, 4]);
        assert_eq!(m.free_parameter_count(), 3);
    }

    #[test]
    fn outcome_iteration_covers_space() {
        let m = two_attr();
        let all: Vec<_> = m.outcomes().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], Outcome(vec![0, 0]));
        assert_eq!(all[5], Outcome(vec![2, 1]));
    }
}
