//! Reference oracles shared by the integration suites. Everything here is
//! brute force and deliberately independent of the library's algorithms.

#![allow(dead_code)]

use std::collections::BTreeMap;

use gai_core::belief::{Belief, Component, ParameterBelief, UniformMixture};
use gai_core::elicit::{AnchorSide, ElicitError, GambleQuery};
use gai_core::model::{AttrSet, AttributeSpec, Constraint, FactorAnchors, FactorScope, GaiModel, Outcome};
use gai_core::utility::AnchorUtilities;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn set(a: &[usize]) -> AttrSet {
    AttrSet::new(a.iter().copied())
}

/// Number of distinct nonempty scopes of size at most `max_scope`.
pub fn scope_capacity(n: usize, max_scope: usize) -> usize {
    let mut total = 0usize;
    let mut binom = 1usize;
    for k in 1..=max_scope.min(n) {
        binom = binom * (n - k + 1) / k;
        total += binom;
    }
    total
}

/// Distinct nonempty scopes over `n` attributes that together cover every
/// attribute. Scope sizes are at most `max_scope`.
pub fn random_scopes<R: Rng>(rng: &mut R, n: usize, factors: usize, max_scope: usize) -> Vec<AttrSet> {
    assert!(factors * max_scope >= n && max_scope >= 1);
    assert!(factors <= scope_capacity(n, max_scope));
    loop {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut scopes: Vec<Vec<usize>> = vec![Vec::new(); factors];
        for (k, a) in order.into_iter().enumerate() {
            scopes[k % factors].push(a);
        }
        for s in &mut scopes {
            let target = rng.random_range(s.len().max(1)..=max_scope.min(n));
            while s.len() < target {
                let a = rng.random_range(0..n);
                if !s.contains(&a) {
                    s.push(a);
                }
            }
        }
        let scopes: Vec<AttrSet> = scopes.into_iter().map(AttrSet::new).collect();
        if (0..scopes.len()).all(|i| !scopes[..i].contains(&scopes[i])) {
            return scopes;
        }
    }
}

/// Signed projection sets of factor `j` by direct enumeration: every subset
/// `S` of earlier factors with `I_j ∩ ⋂S` nonempty contributes `(-1)^|S|`.
pub fn brute_force_terms(scopes: &[AttrSet], j: usize) -> BTreeMap<AttrSet, i64> {
    let mut acc: BTreeMap<AttrSet, i64> = BTreeMap::new();
    for mask in 0u64..(1u64 << j) {
        let mut s = scopes[j].clone();
        for (i, scope) in scopes.iter().enumerate().take(j) {
            if mask >> i & 1 == 1 {
                s = s.intersection(scope);
            }
        }
        if s.is_empty() {
            continue;
        }
        let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        *acc.entry(s).or_insert(0) += sign;
    }
    acc.retain(|_, c| *c != 0);
    acc
}

pub struct ModelParams {
    pub max_attrs: usize,
    pub max_factors: usize,
    pub max_scope: usize,
    pub max_domain: usize,
    pub max_outcomes: u64,
    pub constraints: bool,
}

/// Random model with binary or ternary attributes (up to `max_domain`),
/// a random feasible default, arbitrary distinct anchors and, optionally,
/// pairwise constraints that spare the default.
pub fn random_model<R: Rng>(rng: &mut R, p: &ModelParams) -> GaiModel {
    loop {
        let n = rng.random_range(1..=p.max_attrs);
        let domains: Vec<usize> = (0..n).map(|_| rng.random_range(2..=p.max_domain)).collect();
        if domains.iter().map(|&d| d as u64).product::<u64>() > p.max_outcomes {
            continue;
        }
        let min_factors = n.div_ceil(p.max_scope);
        let most = p.max_factors.max(min_factors).min(scope_capacity(n, p.max_scope));
        let factors = rng.random_range(min_factors.max(1)..=most);
        let scopes = random_scopes(rng, n, factors, p.max_scope);
        let attrs: Vec<AttributeSpec> = domains
            .iter()
            .enumerate()
            .map(|(a, &d)| AttributeSpec { name: format!("a{a}"), domain: (0..d).map(|v| format!("v{v}")).collect() })
            .collect();
        let default = Outcome(domains.iter().map(|&d| rng.random_range(0..d)).collect());
        let mut constraints = Vec::new();
        if p.constraints && n >= 2 {
            for _ in 0..rng.random_range(0..=3) {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a == b {
                    continue;
                }
                let tuple = vec![rng.random_range(0..domains[a]), rng.random_range(0..domains[b])];
                if tuple == [default.0[a], default.0[b]] {
                    continue;
                }
                constraints.push(Constraint { attrs: vec![a, b], forbidden: vec![tuple] });
            }
        }
        let anchors = scopes
            .iter()
            .map(|s| {
                let top: Vec<usize> = s.iter().map(|a| rng.random_range(0..domains[a])).collect();
                let mut bottom = top.clone();
                let k = rng.random_range(0..bottom.len());
                bottom[k] = (bottom[k] + 1) % domains[s.as_slice()[k]];
                FactorAnchors { top, bottom }
            })
            .collect();
        let factors = scopes
            .into_iter()
            .enumerate()
            .map(|(j, attrs)| FactorScope { name: format!("f{j}"), attrs })
            .collect();
        return GaiModel::new(attrs, factors, default, anchors, constraints).expect("well-formed random model");
    }
}

pub fn with_anchors(model: &GaiModel, anchors: Vec<FactorAnchors>) -> GaiModel {
    GaiModel::new(
        model.attributes().to_vec(),
        model.factors().to_vec(),
        model.default_outcome().clone(),
        anchors,
        model.constraints().to_vec(),
    )
    .expect("anchors fit the scopes")
}

/// The seven-attribute example: scopes {1,2,3,6}, {1,2,7}, {2,4}, {4,5},
/// {5,6} in 1-based numbering, binary domains, default all zeros.
pub fn seven_attribute_model() -> GaiModel {
    let attrs = (1..=7)
        .map(|i| AttributeSpec { name: format!("x{i}"), domain: vec!["0".into(), "1".into()] })
        .collect();
    let scopes: [&[usize]; 5] = [&[0, 1, 2, 5], &[0, 1, 6], &[1, 3], &[3, 4], &[4, 5]];
    let factors: Vec<FactorScope> = scopes
        .iter()
        .enumerate()
        .map(|(j, s)| FactorScope { name: format!("f{}", j + 1), attrs: set(s) })
        .collect();
    let anchors = factors
        .iter()
        .map(|f| {
            let k = f.attrs.len();
            let mut bottom = vec![0; k];
            bottom[k - 1] = 1;
            FactorAnchors { top: vec![1; k], bottom }
        })
        .collect();
    GaiModel::new(attrs, factors, Outcome(vec![0; 7]), anchors, vec![]).unwrap()
}

pub fn table_total(model: &GaiModel, tables: &[Vec<f64>], x: &Outcome) -> f64 {
    (0..model.factor_count()).map(|j| tables[j][model.local_index(j, x)]).sum()
}

/// Feasible maximizer by enumeration. Outcomes are visited in lexicographic
/// order and only strict improvements replace the incumbent, so ties resolve
/// to the lexicographically smallest outcome.
pub fn exhaustive_max(model: &GaiModel, tables: &[Vec<f64>]) -> Option<(Outcome, f64)> {
    let mut best: Option<(Outcome, f64)> = None;
    for x in model.outcomes().filter(|x| model.is_feasible(x)) {
        let v = table_total(model, tables, &x);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((x, v));
        }
    }
    best
}

/// `r(x_i)` for every factor by enumeration: best feasible total of the
/// other factors given `x_i`.
pub fn exhaustive_restricted(model: &GaiModel, tables: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut r: Vec<Vec<f64>> = (0..model.factor_count()).map(|j| vec![f64::NEG_INFINITY; model.config_count(j)]).collect();
    for x in model.outcomes().filter(|x| model.is_feasible(x)) {
        let locals: Vec<usize> = (0..model.factor_count()).map(|j| model.local_index(j, &x)).collect();
        for i in 0..model.factor_count() {
            let v: f64 = (0..model.factor_count()).filter(|&j| j != i).map(|j| tables[j][locals[j]]).sum();
            let slot = &mut r[i][locals[i]];
            if v > *slot {
                *slot = v;
            }
        }
    }
    r
}

/// Index of `x_j[K]`: attributes of the scope outside `K` reset to default.
pub fn projected_index(model: &GaiModel, j: usize, config: usize, k: &AttrSet) -> usize {
    let c = model.decode(j, config);
    model.encode(&model.project_local(&c, k).expect("subset of the scope"))
}

/// `E[u'(x)]` from brute-force terms, pinned values and belief means.
pub fn expected_utility(model: &GaiModel, anchors: &AnchorUtilities, beliefs: &ParameterBelief, x: &Outcome) -> f64 {
    let scopes: Vec<AttrSet> = model.factors().iter().map(|f| f.attrs.clone()).collect();
    let mut u = 0.0;
    for j in 0..model.factor_count() {
        let config = model.local_index(j, x);
        let mut vbar = 0.0;
        for (k, c) in brute_force_terms(&scopes, j) {
            let q = projected_index(model, j, config, &k);
            let v = match model.pin(j, q) {
                Some(pin) => anchors.pinned_value(j, pin),
                None => beliefs.get(j, q).map(Belief::mean).expect("belief for free parameter"),
            };
            vbar += c as f64 * v;
        }
        u += anchors.span(j) * vbar;
    }
    u
}

pub fn exhaustive_expected_max(model: &GaiModel, anchors: &AnchorUtilities, beliefs: &ParameterBelief) -> f64 {
    model
        .outcomes()
        .filter(|x| model.is_feasible(x))
        .map(|x| expected_utility(model, anchors, beliefs, &x))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random mixture with `k` possibly overlapping components.
pub fn random_mixture<R: Rng>(rng: &mut R, k: usize) -> UniformMixture {
    let components = (0..k)
        .map(|_| {
            let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
            let (mut lower, mut upper) = (a.min(b), a.max(b));
            if upper - lower < 1e-3 {
                if lower + 1e-3 <= 1.0 {
                    upper = lower + 1e-3;
                } else {
                    lower = upper - 1e-3;
                }
            }
            Component { lower, upper, weight: rng.random_range(0.05..1.0) }
        })
        .collect();
    UniformMixture::new(components).expect("valid components")
}

/// Integrals over a piecewise-constant density, evaluated piece by piece
/// with Simpson's rule (exact for the polynomial integrands used here).
pub struct Quadrature {
    /// `(a, b, density)` with disjoint pieces covering `[0, 1]`.
    pieces: Vec<(f64, f64, f64)>,
}

impl Quadrature {
    pub fn new(components: &[Component], extra: &[f64]) -> Self {
        let mut cuts: Vec<f64> = vec![0.0, 1.0];
        for c in components {
            cuts.push(c.lower);
            cuts.push(c.upper);
        }
        cuts.extend_from_slice(extra);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces = cuts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let d: f64 = components
                    .iter()
                    .filter(|c| c.lower <= mid && mid < c.upper)
                    .map(|c| c.weight / (c.upper - c.lower))
                    .sum();
                (w[0], w[1], d)
            })
            .collect();
        Quadrature { pieces }
    }

    pub fn density(&self, v: f64) -> f64 {
        self.pieces.iter().find(|(a, b, _)| *a <= v && v < *b).map_or(0.0, |p| p.2)
    }

    /// `∫_lo^hi g(v) f(v) dv`.
    pub fn integrate<G: Fn(f64) -> f64>(&self, lo: f64, hi: f64, g: G) -> f64 {
        let mut s = 0.0;
        for &(a, b, d) in &self.pieces {
            let (a, b) = (a.max(lo), b.min(hi));
            if b <= a || d == 0.0 {
                continue;
            }
            s += d * (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
        }
        s
    }
}

/// Ground truth `u = Σ_j g_j` with random `g_j`, rescaled to `[0, 1]` over
/// all outcomes.
pub struct Truth {
    pub tables: Vec<Vec<f64>>,
    lo: f64,
    hi: f64,
}

impl Truth {
    pub fn new<R: Rng>(model: &GaiModel, r: &mut R) -> Self {
        let tables: Vec<Vec<f64>> =
            (0..model.factor_count()).map(|j| (0..model.config_count(j)).map(|_| r.random::<f64>()).collect()).collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in model.outcomes() {
            let v = table_total(model, &tables, &x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Truth { tables, lo, hi }
    }

    /// The same utility for a model whose factors were reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Truth { tables: order.iter().map(|&j| self.tables[j].clone()).collect(), lo: self.lo, hi: self.hi }
    }

    pub fn u(&self, model: &GaiModel, x: &Outcome) -> f64 {
        (table_total(model, &self.tables, x) - self.lo) / (self.hi - self.lo)
    }

    /// `u` at the key outcome of local configuration `c` of factor `j`.
    pub fn key(&self, model: &GaiModel, j: usize, c: usize) -> f64 {
        self.u(model, &model.expand(&model.decode(j, c)))
    }

    /// The model with anchors moved to the conditionally best and worst
    /// configurations; `None` if some factor has no spread.
    pub fn anchored(&self, model: &GaiModel) -> Option<GaiModel> {
        let anchors: Option<Vec<FactorAnchors>> = (0..model.factor_count())
            .map(|j| {
                let key = |c: usize| self.key(model, j, c);
                let configs = 0..model.config_count(j);
                let top = configs.clone().max_by(|a, b| key(*a).total_cmp(&key(*b)))?;
                let bottom = configs.min_by(|a, b| key(*a).total_cmp(&key(*b)))?;
                (key(top) > key(bottom))
                    .then(|| FactorAnchors { top: model.decode(j, top).values, bottom: model.decode(j, bottom).values })
            })
            .collect();
        Some(with_anchors(model, anchors?))
    }

    /// Exact standard-gamble answers derived from `u`, clamped to `[0, 1]`
    /// against rounding.
    pub fn oracle(&self) -> impl FnMut(&GaiModel, &GambleQuery) -> Result<f64, ElicitError> + '_ {
        move |m: &GaiModel, q: &GambleQuery| {
            let p = match *q {
                GambleQuery::Local { factor, config } => {
                    let (t, b) = (self.key(m, factor, m.top_index(factor)), self.key(m, factor, m.bottom_index(factor)));
                    (self.key(m, factor, config) - b) / (t - b)
                }
                GambleQuery::Global { factor, anchor: AnchorSide::Top } => self.key(m, factor, m.top_index(factor)),
                GambleQuery::Global { factor, anchor: AnchorSide::Bottom } => self.key(m, factor, m.bottom_index(factor)),
            };
            Ok(p.clamp(0.0, 1.0))
        }
    }
}
