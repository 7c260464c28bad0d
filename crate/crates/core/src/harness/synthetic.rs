//! Random GAI structures and the car-rental-scale preset.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{AttrSet, AttributeSpec, Constraint, FactorAnchors, FactorScope, GaiModel, Outcome};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticParams {
    pub attributes: usize,
    pub min_domain: usize,
    pub max_domain: usize,
    pub factors: usize,
    pub max_scope: usize,
    /// Constraints per attribute. Each constraint forbids one value pair of
    /// two attributes that already share a factor, so constraints never
    /// widen the elimination graph.
    #[serde(default)]
    pub constraint_density: f64,
}

pub const CAR_RENTAL: &str = "car-rental";

/// 26 attributes: three many-valued, seven ternary, sixteen binary.
pub const CAR_RENTAL_DOMAINS: [usize; 26] = [9, 8, 6, 3, 3, 3, 3, 3, 3, 3, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2];

/// 13 overlapping scopes of at most five attributes; 378 free parameters.
pub const CAR_RENTAL_SCOPES: [&[usize]; 13] = [
    &[2, 23, 24],
    &[13, 15, 22, 23, 24],
    &[1, 15, 18, 24],
    &[1, 9, 17, 24],
    &[4, 16, 22],
    &[5, 19, 24],
    &[8, 15, 16, 20],
    &[10, 13, 20, 25],
    &[6, 7, 15, 18, 21],
    &[14, 16],
    &[10, 11, 12, 16],
    &[3, 6, 9],
    &[0, 19],
];

const CAR_RENTAL_SEED: u64 = 0x6361_7272_656e_7431;
const CAR_RENTAL_CONSTRAINT_DENSITY: f64 = 0.25;

pub fn preset(name: &str) -> Option<GaiModel> {
    (name == CAR_RENTAL).then(car_rental_preset)
}

pub fn car_rental_preset() -> GaiModel {
    let mut rng = ChaCha8Rng::seed_from_u64(CAR_RENTAL_SEED);
    let scopes: Vec<Vec<usize>> = CAR_RENTAL_SCOPES.iter().map(|s| s.to_vec()).collect();
    decorate(&CAR_RENTAL_DOMAINS, scopes, CAR_RENTAL_CONSTRAINT_DENSITY, &mut rng)
}

pub fn generate_synthetic_model(params: &SyntheticParams, seed: u64) -> Result<GaiModel, HarnessError> {
    let p = params;
    let bad = |why: &str| Err(HarnessError::Unsatisfiable(why.to_string()));
    if p.attributes == 0 || p.factors == 0 || p.max_scope == 0 {
        return bad("attribute, factor and scope counts must be positive");
    }
    if p.min_domain < 2 || p.max_domain < p.min_domain {
        return bad("domain sizes must satisfy 2 <= min_domain <= max_domain");
    }
    if p.factors * p.max_scope < p.attributes {
        return bad("factors cannot cover all attributes");
    }
    if !(p.constraint_density >= 0.0 && p.constraint_density.is_finite()) {
        return bad("constraint density must be a nonnegative number");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domains: Vec<usize> = (0..p.attributes).map(|_| rng.random_range(p.min_domain..=p.max_domain)).collect();
    let max_scope = p.max_scope.min(p.attributes);
    let distinct_possible = p.factors as f64 <= 2f64.powi(p.attributes.min(60) as i32) - 1.0;
    if !distinct_possible {
        return bad("too many factors for distinct scopes");
    }
    for _ in 0..1000 {
        if let Some(scopes) = random_scopes(p.attributes, p.factors, max_scope, &mut rng) {
            return Ok(decorate(&domains, scopes, p.constraint_density, &mut rng));
        }
    }
    bad("could not draw distinct covering scopes")
}

fn random_scopes(n: usize, m: usize, max_scope: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<usize>>> {
    let mut scopes: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    for a in perm {
        let open: Vec<usize> = (0..m).filter(|&j| scopes[j].len() < max_scope).collect();
        let j = open[rng.random_range(0..open.len())];
        scopes[j].push(a);
    }
    for s in &mut scopes {
        let target = rng.random_range(s.len().max(1)..=max_scope);
        while s.len() < target {
            let a = rng.random_range(0..n);
            if !s.contains(&a) {
                s.push(a);
            }
        }
        s.sort_unstable();
    }
    let mut sorted = scopes.clone();
    sorted.sort();
    sorted.dedup();
    (sorted.len() == m).then_some(scopes)
}

/// Random default outcome, anchors distinct from each other and (where the
/// factor has room) from the default, and pairwise constraints that keep the
/// default feasible.
fn decorate(domains: &[usize], scopes: Vec<Vec<usize>>, density: f64, rng: &mut ChaCha8Rng) -> GaiModel {
    let n = domains.len();
    let attributes: Vec<AttributeSpec> = domains
        .iter()
        .enumerate()
        .map(|(i, &d)| AttributeSpec { name: format!("x{i}"), domain: (0..d).map(|v| format!("v{v}")).collect() })
        .collect();
    let default: Vec<usize> = domains.iter().map(|&d| rng.random_range(0..d)).collect();
    let anchors = scopes
        .iter()
        .map(|s| {
            let d0: Vec<usize> = s.iter().map(|&a| default[a]).collect();
            let size: usize = s.iter().map(|&a| domains[a]).product();
            let draw = |rng: &mut ChaCha8Rng| -> Vec<usize> { s.iter().map(|&a| rng.random_range(0..domains[a])).collect() };
            let mut top = draw(rng);
            while size >= 3 && top == d0 {
                top = draw(rng);
            }
            let mut bottom = draw(rng);
            while bottom == top || (size >= 3 && bottom == d0) {
                bottom = draw(rng);
            }
            FactorAnchors { top, bottom }
        })
        .collect();
    let pairs: Vec<(usize, usize)> = {
        let mut v: Vec<(usize, usize)> = scopes
            .iter()
            .flat_map(|s| s.iter().enumerate().flat_map(move |(k, &a)| s[k + 1..].iter().map(move |&b| (a, b))))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let count = (density * n as f64).round() as usize;
    let mut constraints = Vec::new();
    if !pairs.is_empty() {
        for _ in 0..count {
            let (a, b) = pairs[rng.random_range(0..pairs.len())];
            let tuple = loop {
                let t = vec![rng.random_range(0..domains[a]), rng.random_range(0..domains[b])];
                if t != [default[a], default[b]] {
                    break t;
                }
            };
            constraints.push(Constraint { attrs: vec![a, b], forbidden: vec![tuple] });
        }
    }
    let factors = scopes
        .into_iter()
        .enumerate()
        .map(|(j, s)| FactorScope { name: format!("f{j}"), attrs: AttrSet::new(s) })
        .collect();
    GaiModel::new(attributes, factors, Outcome(default), anchors, constraints).expect("generated models are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{elimination_order, induced_width};
    use crate::model::validate_model;

    #[test]
    fn preset_statistics() {
        let m = car_rental_preset();
        assert_eq!(m.attr_count(), 26);
        assert_eq!(m.factor_count(), 13);
        assert!(m.factors().iter().all(|f| f.attrs.len() <= 5));
        assert_eq!(m.free_parameter_count(), 378);
        assert_eq!(m.outcome_count(), 61_917_364_224);
        assert!(validate_model(&m).is_empty());
        let scopes = m.factors().iter().map(|f| f.attrs.as_slice().to_vec()).chain(m.constraints().iter().map(|c| c.attrs.clone()));
        assert_eq!(induced_width(26, scopes, &elimination_order(&m)), 4);
    }

    #[test]
    fn small_params_give_valid_deterministic_models() {
        let p = SyntheticParams { attributes: 3, min_domain: 2, max_domain: 2, factors: 2, max_scope: 2, constraint_density: 0.5 };
        let a = generate_synthetic_model(&p, 11).unwrap();
        let b = generate_synthetic_model(&p, 11).unwrap();
        assert_eq!(a, b);
        assert!(validate_model(&a).is_empty(), "{:?}", validate_model(&a));
        assert!(a.factors().iter().all(|f| f.attrs.len() <= 2));
    }

    #[test]
    fn unsatisfiable_params_are_rejected() {
        let p = SyntheticParams { attributes: 10, min_domain: 2, max_domain: 3, factors: 2, max_scope: 3, constraint_density: 0.0 };
        assert!(matches!(generate_synthetic_model(&p, 0), Err(HarnessError::Unsatisfiable(_))));
    }
}
