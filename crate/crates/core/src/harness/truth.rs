//! Ground-truth utilities for simulated users.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, ParameterBelief, Response, UniformMixture};
use crate::evoi::ComparisonQuery;
use crate::model::{FactorId, GaiModel, Outcome, Pin};
use crate::plan::CompiledPlan;
use crate::utility::{AnchorPair, AnchorUtilities, LocalValueTable, UtilityFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    Uniform,
    /// Five uniforms at random breakpoints with flat-Dirichlet weights.
    RandomMixture,
    /// Ten-bin fit of a Gaussian with variance 0.3 and a uniformly random mean.
    GaussianFit,
}

pub fn make_priors<R: Rng + ?Sized>(model: &GaiModel, kind: PriorKind, rng: &mut R) -> ParameterBelief {
    ParameterBelief::from_fn(model, |_, _| match kind {
        PriorKind::Uniform => UniformMixture::uniform(),
        PriorKind::RandomMixture => UniformMixture::random(5, rng),
        PriorKind::GaussianFit => {
            UniformMixture::fit_truncated_gaussian(rng.random::<f64>(), 0.3, 10).expect("valid gaussian parameters")
        }
    })
}

/// `u(x⁰) ~ U(0,1)`, then `u_j^⊥ ~ U(0, u(x⁰))` and `u_j^⊤ ~ U(u(x⁰), 1)`;
/// an anchor that coincides with the default configuration takes `u(x⁰)`.
pub fn sample_anchor_utilities<R: Rng + ?Sized>(model: &GaiModel, rng: &mut R) -> AnchorUtilities {
    let u0: f64 = rng.random();
    let factors = (0..model.factor_count())
        .map(|j| {
            let d = model.default_index(j);
            let bottom = if d == model.bottom_index(j) { u0 } else { rng.random::<f64>() * u0 };
            let top = if d == model.top_index(j) { u0 } else { u0 + rng.random::<f64>() * (1.0 - u0) };
            AnchorPair { top, bottom }
        })
        .collect();
    AnchorUtilities { default: u0, factors }
}

/// A simulated user's complete utility.
#[derive(Debug, Clone)]
pub struct TrueUtility {
    pub tables: Vec<LocalValueTable>,
    pub anchors: AnchorUtilities,
    pub function: UtilityFunction,
}

impl TrueUtility {
    pub fn from_tables(model: &GaiModel, plan: &CompiledPlan, tables: Vec<LocalValueTable>, anchors: AnchorUtilities) -> Self {
        let function = UtilityFunction::assemble(model, plan, &tables, &anchors).expect("complete ground truth");
        TrueUtility { tables, anchors, function }
    }

    pub fn local_value(&self, j: FactorId, config: usize) -> f64 {
        self.tables[j].values[config]
    }

    pub fn utility(&self, model: &GaiModel, x: &Outcome) -> f64 {
        self.function.absolute(model, x)
    }
}

/// Draws every free local value from its belief; pinned values follow from
/// the sampled anchor utilities.
pub fn sample_true_utility<R: Rng + ?Sized>(
    model: &GaiModel,
    plan: &CompiledPlan,
    priors: &ParameterBelief,
    rng: &mut R,
) -> TrueUtility {
    let anchors = sample_anchor_utilities(model, rng);
    let tables = (0..model.factor_count())
        .map(|j| {
            let values = (0..model.config_count(j))
                .map(|c| match (model.pin(j, c), priors.get(j, c)) {
                    (Some(pin), _) => anchors.pinned_value(j, pin),
                    (None, Some(Belief::Mixture { mixture })) => mixture.sample(rng),
                    (None, Some(Belief::Known { value })) => *value,
                    (None, None) => anchors.pinned_value(j, Pin::Bottom),
                })
                .collect();
            LocalValueTable { factor: j, values }
        })
        .collect();
    TrueUtility::from_tables(model, plan, tables, anchors)
}

/// Noise-free answer: yes iff `v ≥ l`.
pub fn simulate_response(truth: &TrueUtility, query: &ComparisonQuery) -> Response {
    if truth.local_value(query.factor, query.config) >= query.threshold {
        Response::Yes
    } else {
        Response::No
    }
}
