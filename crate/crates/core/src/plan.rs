//! GAI graph and the canonical decomposition plan.
//!
//! For every factor `j` the plan lists the projection sets `J ⊆ I_j` whose
//! local values enter the unnormalized subutility
//! `v̄_j(x_j) = Σ_J coeff(J) · v_j(x_j[J])`, found by searching the GAI graph
//! along decreasing factor indices and pruning as soon as the running
//! intersection of visited scopes becomes empty.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{AttrSet, FactorId, FactorScope, GaiModel, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphEdge {
    pub from: FactorId,
    pub to: FactorId,
    pub label: AttrSet,
}

/// Directed graph over factors with an edge `i -> j` for every `i > j` whose
/// scopes intersect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GaiGraph {
    pub scopes: Vec<AttrSet>,
    pub edges: Vec<GraphEdge>,
    #[serde(skip)]
    out: Vec<Vec<usize>>,
}

impl GaiGraph {
    pub fn outgoing(&self, i: FactorId) -> impl Iterator<Item = &GraphEdge> {
        self.out[i].iter().map(move |&e| &self.edges[e])
    }
}

pub fn build_gai_graph(factors: &[FactorScope]) -> GaiGraph {
    let scopes: Vec<AttrSet> = factors.iter().map(|f| f.attrs.clone()).collect();
    let mut edges = Vec::new();
    let mut out = vec![Vec::new(); scopes.len()];
    for i in 0..scopes.len() {
        for j in (0..i).rev() {
            let label = scopes[i].intersection(&scopes[j]);
            if !label.is_empty() {
                out[i].push(edges.len());
                edges.push(GraphEdge { from: i, to: j, label });
            }
        }
    }
    GaiGraph { scopes, edges, out }
}

/// Per factor, projection set -> aggregated signed coefficient. Sets whose
/// coefficients cancel to zero are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CanonicalPlan {
    pub terms: Vec<BTreeMap<AttrSet, i64>>,
}

impl CanonicalPlan {
    pub fn factor_terms(&self, j: FactorId) -> &BTreeMap<AttrSet, i64> {
        &self.terms[j]
    }

    pub fn has_large_coefficients(&self) -> bool {
        self.terms.iter().flat_map(|t| t.values()).any(|c| c.abs() > 1)
    }
}

pub fn compute_canonical_plan(graph: &GaiGraph) -> CanonicalPlan {
    let terms = (0..graph.scopes.len())
        .map(|j| {
            let mut acc: BTreeMap<AttrSet, i64> = BTreeMap::new();
            let mut stack = vec![(j, graph.scopes[j].clone(), 0usize)];
            while let Some((node, running, depth)) = stack.pop() {
                *acc.entry(running.clone()).or_insert(0) += if depth % 2 == 0 { 1 } else { -1 };
                for e in graph.outgoing(node) {
                    let next = running.intersection(&graph.scopes[e.to]);
                    if !next.is_empty() {
                        stack.push((e.to, next, depth + 1));
                    }
                }
            }
            acc.retain(|_, c| *c != 0);
            acc
        })
        .collect();
    CanonicalPlan { terms }
}

/// The plan resolved against concrete local configurations.
///
/// `expansion[j][x]` lists `(x[J], coefficient)` aggregated over plan terms,
/// and `dependents[j][q]` is the reverse map: the configurations whose `v̄`
/// references `v_j(q)`, with the aggregated sign `s(x, q)`.
#[derive(Debug, Clone)]
pub struct CompiledPlan {
    plan: CanonicalPlan,
    expansion: Vec<Vec<Vec<(usize, i64)>>>,
    dependents: Vec<Vec<Vec<(usize, i64)>>>,
}

impl CompiledPlan {
    pub fn new(model: &GaiModel) -> Self {
        let plan = compute_canonical_plan(&build_gai_graph(model.factors()));
        Self::from_plan(model, plan)
    }

    pub fn from_plan(model: &GaiModel, plan: CanonicalPlan) -> Self {
        let mut expansion = Vec::with_capacity(model.factor_count());
        let mut dependents = Vec::with_capacity(model.factor_count());
        for j in 0..model.factor_count() {
            let size = model.config_count(j);
            let mut exp_j = Vec::with_capacity(size);
            let mut dep_j: Vec<Vec<(usize, i64)>> = vec![Vec::new(); size];
            for x in 0..size {
                let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
                for (set, c) in &plan.terms[j] {
                    *acc.entry(model.project_index(j, x, set)).or_insert(0) += c;
                }
                let terms: Vec<(usize, i64)> = acc.into_iter().filter(|(_, c)| *c != 0).collect();
                for &(q, c) in &terms {
                    dep_j[q].push((x, c));
                }
                exp_j.push(terms);
            }
            expansion.push(exp_j);
            dependents.push(dep_j);
        }
        CompiledPlan { plan, expansion, dependents }
    }

    pub fn plan(&self) -> &CanonicalPlan {
        &self.plan
    }

    pub fn expansion(&self, j: FactorId, x: usize) -> &[(usize, i64)] {
        &self.expansion[j][x]
    }

    pub fn dependents(&self, j: FactorId, q: usize) -> &[(usize, i64)] {
        &self.dependents[j][q]
    }

    /// Sum of the plan coefficients of factor `j`.
    pub fn coefficient_sum(&self, j: FactorId) -> i64 {
        self.plan.terms[j].values().sum()
    }
}

/// Signed key outcomes whose utilities sum to `u(x)` under GAI: every
/// nonempty combination of factors contributes `x[∩ scopes]` with sign
/// `(-1)^(k+1)`. Exponential in the factor count; a reference oracle.
pub fn key_outcome_expansion(model: &GaiModel, x: &Outcome) -> Vec<(i64, Outcome)> {
    let m = model.factor_count();
    assert!(m < 24, "key outcome expansion is exponential in the factor count");
    let mut out = Vec::with_capacity((1usize << m) - 1);
    // Enumerate by combination size, then lexicographically, to mirror the
    // usual written form of the expansion.
    for k in 1..=m {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let mut set = model.scope(combo[0]).clone();
            for &i in &combo[1..] {
                set = set.intersection(model.scope(i));
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            out.push((sign, model.project_outcome(x, &set).expect("intersection lies in the attribute set")));
            // next combination
            let mut p = k;
            while p > 0 && combo[p - 1] == m - k + p - 1 {
                p -= 1;
            }
            if p == 0 {
                break;
            }
            combo[p - 1] += 1;
            for q in p..k {
                combo[q] = combo[q - 1] + 1;
            }
        }
    }
    out
}
