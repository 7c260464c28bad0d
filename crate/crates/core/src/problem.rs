//! Problem files: JSON documents tagged with schema `gai-model/1`.
//!
//! Attribute values are referenced by label and factors by attribute name,
//! so files stay readable and independent of index order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, ParameterBelief, PriorSpec};
use crate::model::{
    AttrSet, AttributeSpec, Constraint, FactorAnchors, FactorScope, GaiModel, ModelError, Outcome,
};
use crate::utility::AnchorUtilities;

pub const PROBLEM_SCHEMA: &str = "gai-model/1";

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("malformed problem document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema {0:?}, expected \"{PROBLEM_SCHEMA}\"")]
    Schema(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("attribute {attr:?} has no value {value:?}")]
    UnknownValue { attr: String, value: String },
    #[error("{what}: missing value for attribute {attr:?}")]
    MissingValue { what: String, attr: String },
    #[error("unknown factor {0:?}")]
    UnknownFactor(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("prior for {what}: {source}")]
    Prior { what: String, source: BeliefError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeDoc {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDoc {
    pub name: String,
    pub attributes: Vec<String>,
}

/// Attribute name → value label.
pub type Assignment = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorDoc {
    pub top: Assignment,
    pub bottom: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub attributes: Vec<String>,
    pub forbidden: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorOverride {
    pub factor: String,
    pub config: Assignment,
    pub prior: PriorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsDoc {
    pub default: PriorSpec,
    #[serde(default)]
    pub overrides: Vec<PriorOverride>,
}

impl Default for PriorsDoc {
    fn default() -> Self {
        PriorsDoc { default: PriorSpec::Uniform, overrides: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub attributes: Vec<AttributeDoc>,
    pub factors: Vec<FactorDoc>,
    pub default_outcome: Assignment,
    pub anchors: Vec<AnchorDoc>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_utilities: Option<AnchorUtilities>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<PriorsDoc>,
}

impl ProblemDocument {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let doc: ProblemDocument = serde_json::from_str(text)?;
        if doc.schema != PROBLEM_SCHEMA {
            return Err(ProblemError::Schema(doc.schema));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem documents serialize")
    }

    fn attr_index(&self, name: &str) -> Result<usize, ProblemError> {
        self.attributes.iter().position(|a| a.name == name).ok_or_else(|| ProblemError::UnknownAttribute(name.into()))
    }

    fn value_index(&self, attr: usize, label: &str) -> Result<usize, ProblemError> {
        let a = &self.attributes[attr];
        a.domain
            .iter()
            .position(|v| v == label)
            .ok_or_else(|| ProblemError::UnknownValue { attr: a.name.clone(), value: label.into() })
    }

    fn assignment(&self, what: &str, attrs: &[usize], values: &Assignment) -> Result<Vec<usize>, ProblemError> {
        for name in values.keys() {
            self.attr_index(name)?;
        }
        attrs
            .iter()
            .map(|&a| {
                let name = &self.attributes[a].name;
                let label = values
                    .get(name)
                    .ok_or_else(|| ProblemError::MissingValue { what: what.into(), attr: name.clone() })?;
                self.value_index(a, label)
            })
            .collect()
    }

    pub fn to_model(&self) -> Result<GaiModel, ProblemError> {
        let attributes: Vec<AttributeSpec> =
            self.attributes.iter().map(|a| AttributeSpec { name: a.name.clone(), domain: a.domain.clone() }).collect();
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let attrs = f.attributes.iter().map(|n| self.attr_index(n)).collect::<Result<Vec<_>, _>>()?;
                Ok(FactorScope { name: f.name.clone(), attrs: AttrSet::new(attrs) })
            })
            .collect::<Result<Vec<_>, ProblemError>>()?;
        let all: Vec<usize> = (0..attributes.len()).collect();
        let default = Outcome(self.assignment("default outcome", &all, &self.default_outcome)?);
        let anchors = self
            .anchors
            .iter()
            .zip(&factors)
            .map(|(a, f)| {
                Ok(FactorAnchors {
                    top: self.assignment(&format!("top anchor of {}", f.name), f.attrs.as_slice(), &a.top)?,
                    bottom: self.assignment(&format!("bottom anchor of {}", f.name), f.attrs.as_slice(), &a.bottom)?,
                })
            })
            .collect::<Result<Vec<_>, ProblemError>>()?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let attrs = c.attributes.iter().map(|n| self.attr_index(n)).collect::<Result<Vec<_>, _>>()?;
                let forbidden = c
                    .forbidden
                    .iter()
                    .map(|t| {
                        if t.len() != attrs.len() {
                            return Err(ProblemError::Model(ModelError::Arity {
                                what: "constraint tuple".into(),
                                expected: attrs.len(),
                                got: t.len(),
                            }));
                        }
                        attrs.iter().zip(t).map(|(&a, l)| self.value_index(a, l)).collect()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Constraint { attrs, forbidden })
            })
            .collect::<Result<Vec<_>, ProblemError>>()?;
        Ok(GaiModel::new(attributes, factors, default, anchors, constraints)?)
    }

    /// Prior beliefs over every free parameter of `model`, which must be the
    /// model built from this document.
    pub fn initial_beliefs(&self, model: &GaiModel) -> Result<ParameterBelief, ProblemError> {
        let priors = self.priors.clone().unwrap_or_default();
        let default = priors
            .default
            .to_mixture()
            .map_err(|source| ProblemError::Prior { what: "default".into(), source })?;
        let mut overrides = BTreeMap::new();
        for o in &priors.overrides {
            let j = model
                .factors()
                .iter()
                .position(|f| f.name == o.factor)
                .ok_or_else(|| ProblemError::UnknownFactor(o.factor.clone()))?;
            let values = self.assignment(&format!("prior override for {}", o.factor), model.scope(j).as_slice(), &o.config)?;
            let idx = model.layout(j).encode(&values);
            let mix = o
                .prior
                .to_mixture()
                .map_err(|source| ProblemError::Prior { what: format!("{} {:?}", o.factor, o.config), source })?;
            overrides.insert((j, idx), mix);
        }
        Ok(ParameterBelief::from_fn(model, |j, c| overrides.get(&(j, c)).cloned().unwrap_or_else(|| default.clone())))
    }

    /// Document describing `model`.
    pub fn from_model(model: &GaiModel, name: Option<String>) -> Self {
        let label = |a: usize, v: usize| model.attributes()[a].domain[v].clone();
        let assign = |attrs: &[usize], vals: &[usize]| -> Assignment {
            attrs.iter().zip(vals).map(|(&a, &v)| (model.attributes()[a].name.clone(), label(a, v))).collect()
        };
        let all: Vec<usize> = (0..model.attr_count()).collect();
        ProblemDocument {
            schema: PROBLEM_SCHEMA.into(),
            name,
            attributes: model
                .attributes()
                .iter()
                .map(|a| AttributeDoc { name: a.name.clone(), domain: a.domain.clone() })
                .collect(),
            factors: model
                .factors()
                .iter()
                .map(|f| FactorDoc {
                    name: f.name.clone(),
                    attributes: f.attrs.iter().map(|a| model.attributes()[a].name.clone()).collect(),
                })
                .collect(),
            default_outcome: assign(&all, &model.default_outcome().0),
            anchors: model
                .anchors()
                .iter()
                .zip(model.factors())
                .map(|(an, f)| AnchorDoc { top: assign(f.attrs.as_slice(), &an.top), bottom: assign(f.attrs.as_slice(), &an.bottom) })
                .collect(),
            constraints: model
                .constraints()
                .iter()
                .map(|c| ConstraintDoc {
                    attributes: c.attrs.iter().map(|&a| model.attributes()[a].name.clone()).collect(),
                    forbidden: c.forbidden.iter().map(|t| c.attrs.iter().zip(t).map(|(&a, &v)| label(a, v)).collect()).collect(),
                })
                .collect(),
            anchor_utilities: None,
            priors: None,
        }
    }
}
