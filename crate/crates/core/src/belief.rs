//! Mixture-of-uniforms densities over local value parameters.
//!
//! Responses to threshold queries `v ≥ l` truncate the density; the
//! posterior is again a mixture of uniforms, so beliefs stay exact for the
//! whole elicitation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::model::{FactorId, GaiModel};

const WEIGHT_TOL: f64 = 1e-12;
const COMPACTION_THRESHOLD: usize = 64;
const MERGE_REL_DENSITY: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    #[error("threshold {0} outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("response has zero probability under the current belief")]
    ZeroProbability,
    #[error("invalid component [{lower}, {upper}) with weight {weight}")]
    InvalidComponent { lower: f64, upper: f64, weight: f64 },
    #[error("mixture has no components")]
    Empty,
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("parameter is already known exactly")]
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub lower: f64,
    pub upper: f64,
    pub weight: f64,
}

impl Component {
    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn density(&self) -> f64 {
        self.weight / self.width()
    }

    /// Fraction of the component at or above `l`.
    fn frac_above(&self, l: f64) -> f64 {
        if l <= self.lower {
            1.0
        } else if l >= self.upper {
            0.0
        } else {
            (self.upper - l) / self.width()
        }
    }

    fn frac_below(&self, l: f64) -> f64 {
        if l <= self.lower {
            0.0
        } else if l >= self.upper {
            1.0
        } else {
            (l - self.lower) / self.width()
        }
    }
}

/// Mixture of uniform densities on `[0, 1]`. Components are kept sorted by
/// `(lower, upper)` and may overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Component>", into = "Vec<Component>")]
pub struct UniformMixture {
    components: Vec<Component>,
}

impl TryFrom<Vec<Component>> for UniformMixture {
    type Error = BeliefError;

    fn try_from(c: Vec<Component>) -> Result<Self, BeliefError> {
        UniformMixture::new(c)
    }
}

impl From<UniformMixture> for Vec<Component> {
    fn from(m: UniformMixture) -> Self {
        m.components
    }
}

impl UniformMixture {
    /// Validates the components and renormalizes weights that do not already
    /// sum to one.
    pub fn new(mut components: Vec<Component>) -> Result<Self, BeliefError> {
        if components.is_empty() {
            return Err(BeliefError::Empty);
        }
        for c in &components {
            let ok = c.lower >= 0.0 && c.upper <= 1.0 && c.lower < c.upper && c.weight > 0.0 && c.weight.is_finite();
            if !ok {
                return Err(BeliefError::InvalidComponent { lower: c.lower, upper: c.upper, weight: c.weight });
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            for c in &mut components {
                c.weight /= total;
            }
        }
        components.sort_by(|a, b| a.lower.total_cmp(&b.lower).then(a.upper.total_cmp(&b.upper)));
        Ok(UniformMixture { components })
    }

    pub fn uniform() -> Self {
        UniformMixture { components: vec![Component { lower: 0.0, upper: 1.0, weight: 1.0 }] }
    }

    /// Single narrow component centred on `v`, clipped to `[0, 1]`.
    pub fn point_like(v: f64, width: f64) -> Self {
        let lower = (v - width / 2.0).max(0.0);
        let upper = (lower + width).min(1.0);
        let lower = upper - width;
        UniformMixture { components: vec![Component { lower, upper, weight: 1.0 }] }
    }

    /// `k` equal-width components with weights proportional to the mass of a
    /// Gaussian on each interval, renormalized over `[0, 1]`.
    pub fn fit_truncated_gaussian(mean: f64, variance: f64, k: usize) -> Result<Self, BeliefError> {
        if !(0.0..=1.0).contains(&mean) || variance <= 0.0 || !variance.is_finite() || k == 0 {
            return Err(BeliefError::InvalidPrior(format!("gaussian(mean={mean}, variance={variance}, k={k})")));
        }
        let normal = Normal::new(mean, variance.sqrt()).map_err(|e| BeliefError::InvalidPrior(e.to_string()))?;
        let comps: Vec<Component> = (0..k)
            .map(|i| {
                let lower = i as f64 / k as f64;
                let upper = (i + 1) as f64 / k as f64;
                Component { lower, upper, weight: normal.cdf(upper) - normal.cdf(lower) }
            })
            .filter(|c| c.weight > 0.0)
            .collect();
        UniformMixture::new(comps)
    }

    /// Contiguous components at `k − 1` uniform random breakpoints with
    /// flat-Dirichlet weights.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let k = k.max(1);
        let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.random::<f64>()).collect();
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let comps = cuts
            .windows(2)
            .map(|w| Component { lower: w[0], upper: w[1], weight: -(1.0 - rng.random::<f64>()).ln() + f64::MIN_POSITIVE })
            .collect();
        UniformMixture::new(comps).expect("breakpoints are strictly increasing")
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * (c.lower + c.upper) / 2.0).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let second: f64 = self
            .components
            .iter()
            .map(|c| c.weight * (c.lower * c.lower + c.lower * c.upper + c.upper * c.upper) / 3.0)
            .sum();
        (second - m * m).max(0.0)
    }

    pub fn support(&self) -> (f64, f64) {
        let lo = self.components.iter().map(|c| c.lower).fold(f64::INFINITY, f64::min);
        let hi = self.components.iter().map(|c| c.upper).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn density(&self, v: f64) -> f64 {
        let last = self.support().1;
        self.components
            .iter()
            .filter(|c| (c.lower <= v && v < c.upper) || (v == last && c.upper == last))
            .map(|c| c.density())
            .sum()
    }

    pub fn cdf(&self, v: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.frac_below(v)).sum()
    }

    fn check_threshold(l: f64) -> Result<(), BeliefError> {
        if (0.0..=1.0).contains(&l) {
            Ok(())
        } else {
            Err(BeliefError::ThresholdOutOfRange(l))
        }
    }

    /// `P(v ≥ l)`.
    pub fn prob_yes(&self, l: f64) -> Result<f64, BeliefError> {
        Self::check_threshold(l)?;
        Ok(self.prob_yes_unchecked(l))
    }

    pub(crate) fn prob_yes_unchecked(&self, l: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.frac_above(l)).sum()
    }

    pub(crate) fn prob_no_unchecked(&self, l: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.frac_below(l)).sum()
    }

    /// `P(v ≥ l) · E[v | v ≥ l]`, the partial first moment above `l`.
    pub(crate) fn moment_above(&self, l: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.frac_above(l) * (c.lower.max(l) + c.upper) / 2.0).sum()
    }

    pub(crate) fn moment_below(&self, l: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.frac_below(l) * (c.lower + c.upper.min(l)) / 2.0).sum()
    }

    /// `E[v | v ≥ l]`, computed as the mean of the yes-posterior so the two
    /// agree bit for bit.
    pub fn mu_plus(&self, l: f64) -> Result<f64, BeliefError> {
        Ok(self.update(l, Response::Yes)?.mean())
    }

    /// `E[v | v < l]`.
    pub fn mu_minus(&self, l: f64) -> Result<f64, BeliefError> {
        Ok(self.update(l, Response::No)?.mean())
    }

    /// Exact conditioning on `v ≥ l` (yes) or `v < l` (no). Components
    /// straddling `l` are cut at `l`.
    pub fn update(&self, l: f64, response: Response) -> Result<Self, BeliefError> {
        Self::check_threshold(l)?;
        let mut out = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let (frac, lower, upper) = match response {
                Response::Yes => (c.frac_above(l), c.lower.max(l), c.upper),
                Response::No => (c.frac_below(l), c.lower, c.upper.min(l)),
            };
            if frac > 0.0 && lower < upper {
                out.push(Component { lower, upper, weight: c.weight * frac });
            }
        }
        let total: f64 = out.iter().map(|c| c.weight).sum();
        if out.is_empty() || total <= 0.0 {
            return Err(BeliefError::ZeroProbability);
        }
        for c in &mut out {
            c.weight /= total;
        }
        let mut mix = UniformMixture { components: out };
        if mix.components.len() > COMPACTION_THRESHOLD {
            mix.compact();
        }
        Ok(mix)
    }

    /// Merges abutting components whose densities agree to a relative 1e−9.
    fn compact(&mut self) {
        let mut merged: Vec<Component> = Vec::with_capacity(self.components.len());
        for c in self.components.drain(..) {
            if let Some(last) = merged.last_mut() {
                let (d1, d2) = (last.density(), c.density());
                if last.upper == c.lower && (d1 - d2).abs() <= MERGE_REL_DENSITY * d1.max(d2) {
                    last.upper = c.upper;
                    last.weight += c.weight;
                    continue;
                }
            }
            merged.push(c);
        }
        self.components = merged;
    }

    /// Component endpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.components.iter().flat_map(|c| [c.lower, c.upper]).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.last().expect("nonempty mixture");
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        chosen.lower + rng.random::<f64>() * chosen.width()
    }

    pub fn check_invariants(&self) -> Result<(), BeliefError> {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(BeliefError::InvalidPrior(format!("weights sum to {total}")));
        }
        for c in &self.components {
            if !(c.lower >= 0.0 && c.lower < c.upper && c.upper <= 1.0 && c.weight > 0.0) {
                return Err(BeliefError::InvalidComponent { lower: c.lower, upper: c.upper, weight: c.weight });
            }
        }
        Ok(())
    }
}

/// Belief over a single local value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Belief {
    Mixture { mixture: UniformMixture },
    Known { value: f64 },
}

impl Belief {
    pub fn mean(&self) -> f64 {
        match self {
            Belief::Mixture { mixture } => mixture.mean(),
            Belief::Known { value } => *value,
        }
    }

    pub fn mixture(&self) -> Option<&UniformMixture> {
        match self {
            Belief::Mixture { mixture } => Some(mixture),
            Belief::Known { .. } => None,
        }
    }
}

/// Prior declaration as it appears in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Uniform,
    Mixture { components: Vec<Component> },
    Gaussian { mean: f64, variance: f64, components: usize },
}

impl PriorSpec {
    pub fn to_mixture(&self) -> Result<UniformMixture, BeliefError> {
        match self {
            PriorSpec::Uniform => Ok(UniformMixture::uniform()),
            PriorSpec::Mixture { components } => UniformMixture::new(components.clone()),
            PriorSpec::Gaussian { mean, variance, components } => {
                UniformMixture::fit_truncated_gaussian(*mean, *variance, *components)
            }
        }
    }
}

/// Independent beliefs over all free local values of a model; pinned
/// configurations have no entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBelief {
    factors: Vec<Vec<Option<Belief>>>,
}

impl ParameterBelief {
    /// Builds beliefs with `prior(factor, config)` for every free parameter.
    pub fn from_fn<F>(model: &GaiModel, mut prior: F) -> Self
    where
        F: FnMut(FactorId, usize) -> UniformMixture,
    {
        let factors = (0..model.factor_count())
            .map(|j| {
                (0..model.config_count(j))
                    .map(|c| model.pin(j, c).is_none().then(|| Belief::Mixture { mixture: prior(j, c) }))
                    .collect()
            })
            .collect();
        ParameterBelief { factors }
    }

    pub fn uniform(model: &GaiModel) -> Self {
        Self::from_fn(model, |_, _| UniformMixture::uniform())
    }

    pub fn get(&self, j: FactorId, config: usize) -> Option<&Belief> {
        self.factors.get(j)?.get(config)?.as_ref()
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (FactorId, usize, &Belief)> {
        self.factors
            .iter()
            .enumerate()
            .flat_map(|(j, f)| f.iter().enumerate().filter_map(move |(c, b)| b.as_ref().map(|b| (j, c, b))))
    }

    /// Applies a threshold response to one parameter.
    pub fn update(&mut self, j: FactorId, config: usize, l: f64, response: Response) -> Result<(), BeliefError> {
        let slot = self
            .factors
            .get_mut(j)
            .and_then(|f| f.get_mut(config))
            .and_then(|b| b.as_mut())
            .ok_or_else(|| BeliefError::InvalidPrior(format!("no free parameter at factor {j}, config {config}")))?;
        match slot {
            Belief::Mixture { mixture } => {
                *mixture = mixture.update(l, response)?;
                Ok(())
            }
            Belief::Known { .. } => Err(BeliefError::Known),
        }
    }

    /// Replaces a parameter's belief with an exactly known value.
    pub fn set_known(&mut self, j: FactorId, config: usize, value: f64) -> Result<(), BeliefError> {
        let slot = self
            .factors
            .get_mut(j)
            .and_then(|f| f.get_mut(config))
            .and_then(|b| b.as_mut())
            .ok_or_else(|| BeliefError::InvalidPrior(format!("no free parameter at factor {j}, config {config}")))?;
        *slot = Belief::Known { value };
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_threshold_probabilities() {
        let u = UniformMixture::uniform();
        assert!(close(u.prob_yes(0.4).unwrap(), 0.6, 1e-15));
        assert_eq!(u.prob_yes(0.0).unwrap(), 1.0);
        assert_eq!(u.prob_yes(1.0).unwrap(), 0.0);
        assert_eq!(u.prob_yes(1.5), Err(BeliefError::ThresholdOutOfRange(1.5)));
        assert!(u.prob_yes(-0.1).is_err());
    }

    #[test]
    fn uniform_conditional_means() {
        let u = UniformMixture::uniform();
        assert!(close(u.mu_plus(0.4).unwrap(), 0.7, 1e-15));
        assert!(close(u.mu_minus(0.4).unwrap(), 0.2, 1e-15));
        assert!(close(u.mu_plus(0.0).unwrap(), u.mean(), 1e-15));
        assert_eq!(u.mu_plus(1.0), Err(BeliefError::ZeroProbability));
        assert_eq!(u.mu_minus(0.0), Err(BeliefError::ZeroProbability));
    }

    #[test]
    fn truncating_updates() {
        let u = UniformMixture::uniform();
        let y = u.update(0.4, Response::Yes).unwrap();
        assert_eq!(y.components(), &[Component { lower: 0.4, upper: 1.0, weight: 1.0 }]);
        let two = UniformMixture::new(vec![
            Component { lower: 0.0, upper: 0.5, weight: 0.5 },
            Component { lower: 0.5, upper: 1.0, weight: 0.5 },
        ])
        .unwrap();
        let n = two.update(0.5, Response::No).unwrap();
        assert_eq!(n.components(), &[Component { lower: 0.0, upper: 0.5, weight: 1.0 }]);
        assert_eq!(y.update(0.3, Response::No), Err(BeliefError::ZeroProbability));
    }

    #[test]
    fn gaussian_fit_shape() {
        let g = UniformMixture::fit_truncated_gaussian(0.5, 0.3, 10).unwrap();
        let w: Vec<f64> = g.components().iter().map(|c| c.weight).collect();
        for i in 0..5 {
            assert!(close(w[i], w[9 - i], 1e-12));
        }
        let one = UniformMixture::fit_truncated_gaussian(0.9, 0.01, 1).unwrap();
        assert_eq!(one, UniformMixture::uniform());
        assert!(UniformMixture::fit_truncated_gaussian(1.2, 0.3, 10).is_err());
        assert!(UniformMixture::fit_truncated_gaussian(0.5, 0.0, 10).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_bounded() {
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let m = UniformMixture::random(5, &mut r1);
        let m2 = UniformMixture::random(5, &mut r2);
        assert_eq!(m, m2);
        let narrow = UniformMixture::new(vec![Component { lower: 0.499, upper: 0.501, weight: 1.0 }]).unwrap();
        for _ in 0..1000 {
            let v = narrow.sample(&mut r1);
            assert!((0.499..0.501).contains(&v));
        }
        let u = UniformMixture::uniform();
        let n = 100_000;
        let mean = (0..n).map(|_| u.sample(&mut r1)).sum::<f64>() / n as f64;
        assert!(close(mean, 0.5, 0.01));
    }

    #[test]
    fn compaction_merges_equal_density_neighbours() {
        let comps: Vec<Component> = (0..80)
            .map(|i| Component { lower: i as f64 / 80.0, upper: (i + 1) as f64 / 80.0, weight: 1.0 })
            .collect();
        let m = UniformMixture::new(comps).unwrap();
        let y = m.update(0.3, Response::Yes).unwrap();
        assert!(y.len() < 64);
        assert!(close(y.mean(), 0.65, 1e-12));
        y.check_invariants().unwrap();
    }

    #[test]
    fn serde_round_trip_validates() {
        let g = UniformMixture::fit_truncated_gaussian(0.3, 0.3, 4).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: UniformMixture = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<UniformMixture>(r#"[{"lower":0.5,"upper":0.2,"weight":1}]"#).is_err());
    }

    #[test]
    fn prior_specs() {
        assert_eq!(PriorSpec::Uniform.to_mixture().unwrap(), UniformMixture::uniform());
        let spec: PriorSpec = serde_json::from_str(r#"{"kind":"gaussian","mean":0.3,"variance":0.3,"components":10}"#).unwrap();
        assert_eq!(spec.to_mixture().unwrap().len(), 10);
    }
}
