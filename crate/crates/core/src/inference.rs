//! Expected-utility maximization over the GAI factor graph with hard
//! constraints, by max-sum variable elimination.
//!
//! Table entries are [`Score`]s: a utility plus an integer rank used only for
//! tie-breaking. Infeasible assignments carry `-inf`, which absorbs under `+`
//! and is the identity under `max`, so constraints and utilities share one
//! elimination engine. Unary rank terms `-x_a · w_a`, where `w_a` is the
//! mixed-radix weight of attribute `a`, make the maximizer unique: among
//! outcomes with equal value the lexicographically smallest wins.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use thiserror::Error;

use crate::belief::ParameterBelief;
use crate::model::{AttrId, FactorId, GaiModel, LocalConfig, Outcome};
use crate::plan::CompiledPlan;
use crate::utility::AnchorUtilities;

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("no feasible outcome satisfies the constraints")]
    Infeasible,
    #[error("configuration is infeasible under the constraints")]
    InfeasibleConfig,
    #[error("missing belief for factor {factor}, configuration {config}")]
    MissingBelief { factor: FactorId, config: usize },
    #[error("expected {expected} factor tables, got {got}")]
    TableCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub rank: i128,
}

impl Score {
    pub const ZERO: Score = Score { value: 0.0, rank: 0 };
    pub const BOTTOM: Score = Score { value: f64::NEG_INFINITY, rank: 0 };

    #[inline]
    fn add(self, o: Score) -> Score {
        Score { value: self.value + o.value, rank: self.rank + o.rank }
    }

    #[inline]
    fn beats(self, o: Score) -> bool {
        self.value > o.value || (self.value == o.value && self.rank > o.rank)
    }
}

#[derive(Clone)]
struct Table {
    scope: Vec<AttrId>,
    radices: Vec<usize>,
    values: Vec<Score>,
}

impl Table {
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![0; self.radices.len()];
        let mut acc = 1;
        for k in (0..self.radices.len()).rev() {
            s[k] = acc;
            acc *= self.radices[k];
        }
        s
    }
}

/// Pointwise sum of tables over the union of their scopes.
fn combine(tables: &[&Table], domains: &[usize]) -> Table {
    let mut scope: Vec<AttrId> = tables.iter().flat_map(|t| t.scope.iter().copied()).collect();
    scope.sort_unstable();
    scope.dedup();
    let radices: Vec<usize> = scope.iter().map(|&a| domains[a]).collect();
    let size: usize = radices.iter().product();
    let aligned: Vec<Vec<usize>> = tables
        .iter()
        .map(|t| {
            let ts = t.strides();
            scope.iter().map(|a| t.scope.iter().position(|b| b == a).map_or(0, |p| ts[p])).collect()
        })
        .collect();
    let mut idx = vec![0usize; tables.len()];
    let mut counter = vec![0usize; scope.len()];
    let mut values = Vec::with_capacity(size);
    for _ in 0..size {
        let mut s = Score::ZERO;
        for (k, t) in tables.iter().enumerate() {
            s = s.add(t.values[idx[k]]);
        }
        values.push(s);
        let mut p = scope.len();
        while p > 0 {
            p -= 1;
            counter[p] += 1;
            for k in 0..tables.len() {
                idx[k] += aligned[k][p];
            }
            if counter[p] < radices[p] {
                break;
            }
            for k in 0..tables.len() {
                idx[k] -= aligned[k][p] * radices[p];
            }
            counter[p] = 0;
        }
    }
    Table { scope, radices, values }
}

/// Maximizes `var` out of `t`; returns the reduced table and the maximizing
/// value of `var` for every entry of it.
fn max_out(t: &Table, var: AttrId) -> (Table, Vec<u32>) {
    let p = t.scope.iter().position(|&a| a == var).expect("variable in scope");
    let strides = t.strides();
    let d = t.radices[p];
    let sp = strides[p];
    let mut scope = t.scope.clone();
    scope.remove(p);
    let mut radices = t.radices.clone();
    radices.remove(p);
    let mut rest_strides = strides.clone();
    rest_strides.remove(p);
    let size: usize = radices.iter().product();
    let mut values = Vec::with_capacity(size);
    let mut arg = Vec::with_capacity(size);
    let mut counter = vec![0usize; scope.len()];
    let mut base = 0usize;
    for _ in 0..size {
        let mut best = t.values[base];
        let mut best_v = 0u32;
        for v in 1..d {
            let s = t.values[base + v * sp];
            if s.beats(best) {
                best = s;
                best_v = v as u32;
            }
        }
        values.push(best);
        arg.push(best_v);
        let mut q = scope.len();
        while q > 0 {
            q -= 1;
            counter[q] += 1;
            base += rest_strides[q];
            if counter[q] < radices[q] {
                break;
            }
            base -= rest_strides[q] * radices[q];
            counter[q] = 0;
        }
    }
    (Table { scope, radices, values }, arg)
}

struct Trace {
    var: AttrId,
    scope: Vec<AttrId>,
    radices: Vec<usize>,
    argmax: Vec<u32>,
}

/// Runs elimination of `order`; returns the remaining tables and, when
/// requested, the argmax traces needed for decoding.
fn eliminate(mut tables: Vec<Table>, order: &[AttrId], domains: &[usize], keep_traces: bool) -> (Vec<Table>, Vec<Trace>) {
    let mut traces = Vec::new();
    for &var in order {
        let (bucket, rest): (Vec<Table>, Vec<Table>) = tables.into_iter().partition(|t| t.scope.contains(&var));
        tables = rest;
        if bucket.is_empty() {
            if keep_traces {
                traces.push(Trace { var, scope: vec![], radices: vec![], argmax: vec![0] });
            }
            continue;
        }
        let refs: Vec<&Table> = bucket.iter().collect();
        let joined = combine(&refs, domains);
        let (reduced, argmax) = max_out(&joined, var);
        if keep_traces {
            traces.push(Trace { var, scope: reduced.scope.clone(), radices: reduced.radices.clone(), argmax });
        }
        tables.push(reduced);
    }
    (tables, traces)
}

/// Min-degree greedy ordering over the interaction graph of factor and
/// constraint scopes; ties go to the lowest attribute index.
pub fn elimination_order(model: &GaiModel) -> Vec<AttrId> {
    let scopes = model
        .factors()
        .iter()
        .map(|f| f.attrs.as_slice().to_vec())
        .chain(model.constraints().iter().map(|c| c.attrs.clone()));
    min_degree_order(model.attr_count(), scopes)
}

pub fn min_degree_order<I>(n: usize, scopes: I) -> Vec<AttrId>
where
    I: IntoIterator<Item = Vec<AttrId>>,
{
    let mut adj: Vec<BTreeSet<AttrId>> = vec![BTreeSet::new(); n];
    for s in scopes {
        for &a in &s {
            for &b in &s {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n).filter(|&a| alive[a]).min_by_key(|&a| (adj[a].len(), a)).expect("vertex left");
        let nb: Vec<AttrId> = adj[v].iter().copied().collect();
        for &x in &nb {
            adj[x].remove(&v);
            for &y in &nb {
                if x != y {
                    adj[x].insert(y);
                }
            }
        }
        adj[v].clear();
        alive[v] = false;
        order.push(v);
    }
    order
}

/// Largest neighbourhood created while eliminating in `order`.
pub fn induced_width<I>(n: usize, scopes: I, order: &[AttrId]) -> usize
where
    I: IntoIterator<Item = Vec<AttrId>>,
{
    let mut adj: Vec<BTreeSet<AttrId>> = vec![BTreeSet::new(); n];
    for s in scopes {
        for &a in &s {
            for &b in &s {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let mut width = 0;
    for &v in order {
        let nb: Vec<AttrId> = adj[v].iter().copied().collect();
        width = width.max(nb.len());
        for &x in &nb {
            adj[x].remove(&v);
            for &y in &nb {
                if x != y {
                    adj[x].insert(y);
                }
            }
        }
        adj[v].clear();
    }
    width
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub outcome: Outcome,
    pub value: f64,
}

/// Model-derived elimination machinery: domains, constraint tables, order
/// and tie-break weights.
#[derive(Debug, Clone)]
pub struct Solver {
    domains: Vec<usize>,
    scopes: Vec<Vec<AttrId>>,
    constraints: Vec<Table>,
    order: Vec<AttrId>,
    rank_weights: Option<Vec<i128>>,
}

impl std::fmt::Debug for Table {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Table({:?}, {} entries)", self.scope, self.values.len())
    }
}

impl Solver {
    pub fn new(model: &GaiModel) -> Self {
        Self::with_order(model, elimination_order(model))
    }

    pub fn with_order(model: &GaiModel, order: Vec<AttrId>) -> Self {
        let domains: Vec<usize> = (0..model.attr_count()).map(|a| model.domain_size(a)).collect();
        let constraints = model
            .constraints()
            .iter()
            .map(|c| {
                let mut scope = c.attrs.clone();
                scope.sort_unstable();
                scope.dedup();
                let radices: Vec<usize> = scope.iter().map(|&a| domains[a]).collect();
                let mut t = Table { values: vec![Score::ZERO; radices.iter().product()], scope, radices };
                let strides = t.strides();
                for tuple in &c.forbidden {
                    let idx: usize = c
                        .attrs
                        .iter()
                        .zip(tuple)
                        .map(|(a, v)| v * strides[t.scope.iter().position(|b| b == a).expect("attr")])
                        .sum();
                    t.values[idx] = Score::BOTTOM;
                }
                t
            })
            .collect();
        let mut rank_weights = Some(vec![0i128; domains.len()]);
        let mut w: i128 = 1;
        for a in (0..domains.len()).rev() {
            match rank_weights.as_mut() {
                Some(rw) => rw[a] = w,
                None => break,
            }
            match w.checked_mul(domains[a] as i128) {
                Some(next) => w = next,
                None => {
                    tracing::warn!("outcome space too large for exact lexicographic tie-breaking");
                    rank_weights = None;
                }
            }
        }
        Solver {
            domains,
            scopes: model.factors().iter().map(|f| f.attrs.as_slice().to_vec()).collect(),
            constraints,
            order,
            rank_weights,
        }
    }

    pub fn order(&self) -> &[AttrId] {
        &self.order
    }

    fn factor_tables(&self, tables: &[Vec<f64>], skip: Option<FactorId>) -> Vec<Table> {
        let mut out: Vec<Table> = tables
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(j, vals)| Table {
                scope: self.scopes[j].clone(),
                radices: self.scopes[j].iter().map(|&a| self.domains[a]).collect(),
                values: vals.iter().map(|&v| Score { value: v, rank: 0 }).collect(),
            })
            .collect();
        out.extend(self.constraints.iter().cloned());
        out
    }

    fn check_count(&self, tables: &[Vec<f64>]) -> Result<(), InferenceError> {
        if tables.len() != self.scopes.len() {
            return Err(InferenceError::TableCount { expected: self.scopes.len(), got: tables.len() });
        }
        Ok(())
    }

    /// Feasible outcome maximizing `Σ_j tables[j][x_j]`; ties resolve to the
    /// lexicographically smallest outcome.
    pub fn maximize(&self, tables: &[Vec<f64>]) -> Result<Maximum, InferenceError> {
        self.check_count(tables)?;
        let mut all = self.factor_tables(tables, None);
        if let Some(w) = &self.rank_weights {
            for (a, &wa) in w.iter().enumerate() {
                all.push(Table {
                    scope: vec![a],
                    radices: vec![self.domains[a]],
                    values: (0..self.domains[a]).map(|v| Score { value: 0.0, rank: -(v as i128) * wa }).collect(),
                });
            }
        }
        let (rest, traces) = eliminate(all, &self.order, &self.domains, true);
        let total = rest.iter().fold(Score::ZERO, |acc, t| acc.add(t.values[0]));
        if total.value == f64::NEG_INFINITY {
            return Err(InferenceError::Infeasible);
        }
        let mut x = vec![0usize; self.domains.len()];
        for tr in traces.iter().rev() {
            let mut idx = 0;
            for (a, r) in tr.scope.iter().zip(&tr.radices) {
                idx = idx * r + x[*a];
            }
            x[tr.var] = tr.argmax[idx] as usize;
        }
        Ok(Maximum { outcome: Outcome(x), value: total.value })
    }

    /// `r(x_i)` for every configuration of factor `i`: the best total of all
    /// other factors over feasible outcomes consistent with `x_i`; `-inf`
    /// marks configurations with no feasible completion.
    pub fn restricted_max_table(&self, tables: &[Vec<f64>], i: FactorId) -> Result<Vec<f64>, InferenceError> {
        self.check_count(tables)?;
        let keep = &self.scopes[i];
        let order: Vec<AttrId> = self.order.iter().copied().filter(|a| !keep.contains(a)).collect();
        let (mut rest, _) = eliminate(self.factor_tables(tables, Some(i)), &order, &self.domains, false);
        rest.push(Table {
            scope: keep.clone(),
            radices: keep.iter().map(|&a| self.domains[a]).collect(),
            values: vec![Score::ZERO; keep.iter().map(|&a| self.domains[a]).product()],
        });
        let refs: Vec<&Table> = rest.iter().collect();
        let joined = combine(&refs, &self.domains);
        debug_assert_eq!(&joined.scope, keep);
        Ok(joined.values.iter().map(|s| s.value).collect())
    }

    pub fn restricted_max(&self, tables: &[Vec<f64>], x_i: &LocalConfig, model: &GaiModel) -> Result<f64, InferenceError> {
        let r = self.restricted_max_table(tables, x_i.factor)?[model.encode(x_i)];
        if r == f64::NEG_INFINITY {
            Err(InferenceError::InfeasibleConfig)
        } else {
            Ok(r)
        }
    }
}

/// Expected local value of every configuration: pinned constants for the
/// three special configurations, posterior means otherwise.
pub fn expected_local_values(
    model: &GaiModel,
    beliefs: &ParameterBelief,
    anchors: &AnchorUtilities,
) -> Result<Vec<Vec<f64>>, InferenceError> {
    (0..model.factor_count())
        .map(|j| {
            (0..model.config_count(j))
                .map(|c| match model.pin(j, c) {
                    Some(pin) => Ok(anchors.pinned_value(j, pin)),
                    None => beliefs
                        .get(j, c)
                        .map(|b| b.mean())
                        .ok_or(InferenceError::MissingBelief { factor: j, config: c }),
                })
                .collect()
        })
        .collect()
}

/// `E[u_j(x_j)] = (u_j^⊤ − u_j^⊥) Σ_J coeff(J) E[v_j(x_j[J])]` for every factor.
pub fn expected_tables(model: &GaiModel, plan: &CompiledPlan, anchors: &AnchorUtilities, local: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..model.factor_count())
        .map(|j| {
            let span = anchors.span(j);
            (0..model.config_count(j))
                .map(|x| span * plan.expansion(j, x).iter().map(|&(q, c)| c as f64 * local[j][q]).sum::<f64>())
                .collect()
        })
        .collect()
}

/// One belief snapshot's expected tables, its maximum, and lazily built
/// restricted-max tables per factor. Safe for concurrent readers.
#[derive(Debug)]
pub struct SolveCache {
    tables: Vec<Vec<f64>>,
    maximum: Maximum,
    restricted: Vec<OnceLock<Vec<f64>>>,
}

impl SolveCache {
    pub fn new(solver: &Solver, tables: Vec<Vec<f64>>) -> Result<Self, InferenceError> {
        let maximum = solver.maximize(&tables)?;
        let restricted = (0..tables.len()).map(|_| OnceLock::new()).collect();
        Ok(SolveCache { tables, maximum, restricted })
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn maximum(&self) -> &Maximum {
        &self.maximum
    }

    pub fn restricted(&self, solver: &Solver, i: FactorId) -> &[f64] {
        self.restricted[i].get_or_init(|| solver.restricted_max_table(&self.tables, i).expect("table count checked"))
    }
}
