//! Simulation experiments: simulated users answer comparison queries chosen
//! by a strategy, and the true utility of each recommendation is tracked.
//!
//! Output files:
//! - `results.csv`: one row per (strategy, trial, query index) with columns
//!   `strategy,trial,query,recommended_utility,optimal_utility,error,fraction_of_optimal,fraction_of_initial`.
//! - `summary.csv`: one row per (strategy, query index) with columns
//!   `strategy,query,trials,mean_error,mean_fraction_of_optimal,fraction_of_initial`,
//!   where `fraction_of_initial` is the mean error divided by the mean
//!   initial error.

mod synthetic;
mod truth;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synthetic::{
    car_rental_preset, generate_synthetic_model, preset, SyntheticParams, CAR_RENTAL, CAR_RENTAL_DOMAINS,
    CAR_RENTAL_SCOPES,
};
pub use truth::{make_priors, sample_anchor_utilities, sample_true_utility, simulate_response, PriorKind, TrueUtility};

use crate::belief::ParameterBelief;
use crate::evoi::EvoiContext;
use crate::inference::{expected_local_values, expected_tables, InferenceError, SolveCache, Solver};
use crate::model::{validate_model, GaiModel};
use crate::plan::CompiledPlan;
use crate::problem::{ProblemDocument, ProblemError};
use crate::strategy::{Query, QueryStrategy, StrategyRegistry};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unsatisfiable generator parameters: {0}")]
    Unsatisfiable(String),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Preset(String),
    Synthetic(SyntheticParams),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyRun {
    pub name: String,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub budget: usize,
    pub prior: PriorKind,
    pub model: ModelSource,
    pub strategies: Vec<StrategyRun>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            budget: 100,
            prior: PriorKind::Uniform,
            model: ModelSource::Preset(CAR_RENTAL.into()),
            strategies: vec![
                StrategyRun { name: "evoi".into(), trials: 30 },
                StrategyRun { name: "random".into(), trials: 100 },
            ],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Resolves the model; relative file paths are taken from `base`.
    pub fn load_model(&self, base: &Path) -> Result<GaiModel, HarnessError> {
        let model = match &self.model {
            ModelSource::Preset(name) => preset(name).ok_or_else(|| HarnessError::UnknownPreset(name.clone()))?,
            ModelSource::Synthetic(p) => generate_synthetic_model(p, self.seed)?,
            ModelSource::File(path) => {
                let text = std::fs::read_to_string(base.join(path))?;
                ProblemDocument::from_json(&text)?.to_model()?
            }
        };
        let violations = validate_model(&model);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(HarnessError::Config(format!("invalid model: {}", list.join("; "))));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub strategy: String,
    pub trial: usize,
    pub query: usize,
    pub recommended_utility: f64,
    pub optimal_utility: f64,
    pub error: f64,
    pub fraction_of_optimal: f64,
    pub fraction_of_initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub query: usize,
    pub trials: usize,
    pub mean_error: f64,
    pub mean_fraction_of_optimal: f64,
    pub fraction_of_initial: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SelectionTiming {
    pub strategy: String,
    pub max_seconds: f64,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<TraceRow>,
    pub summary: Vec<SummaryRow>,
    /// Wall-clock query-selection times; not part of the written results.
    pub timing: Vec<SelectionTiming>,
}

impl ExperimentResult {
    /// Mean curve `fraction_of_initial` of one strategy, indexed by query.
    pub fn curve(&self, strategy: &str) -> Vec<f64> {
        self.summary.iter().filter(|r| r.strategy == strategy).map(|r| r.fraction_of_initial).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        for r in &self.summary {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything fixed across the trials of one experiment.
pub struct Simulation<'a> {
    pub model: &'a GaiModel,
    pub plan: CompiledPlan,
    pub solver: Solver,
}

struct TrialTrace {
    recommended: Vec<f64>,
    optimal: f64,
    select_seconds: Vec<f64>,
}

impl<'a> Simulation<'a> {
    pub fn new(model: &'a GaiModel) -> Self {
        Simulation { model, plan: CompiledPlan::new(model), solver: Solver::new(model) }
    }

    fn snapshot(&self, beliefs: &ParameterBelief, truth: &TrueUtility) -> Result<SolveCache, InferenceError> {
        let local = expected_local_values(self.model, beliefs, &truth.anchors)?;
        SolveCache::new(&self.solver, expected_tables(self.model, &self.plan, &truth.anchors, &local))
    }

    /// Priors and ground truth of trial `trial`, shared by all strategies.
    pub fn trial_setup(&self, seed: u64, prior: PriorKind, trial: usize) -> (ParameterBelief, TrueUtility) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let priors = make_priors(self.model, prior, &mut rng);
        let truth = sample_true_utility(self.model, &self.plan, &priors, &mut rng);
        (priors, truth)
    }

    fn run_trial(
        &self,
        strategy: &dyn QueryStrategy,
        mut beliefs: ParameterBelief,
        truth: &TrueUtility,
        budget: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<TrialTrace, InferenceError> {
        let best = self.solver.maximize(truth.function.factor_tables())?;
        let optimal = truth.utility(self.model, &best.outcome);
        let mut recommended = Vec::with_capacity(budget + 1);
        let mut select_seconds = Vec::with_capacity(budget);
        let mut cache = self.snapshot(&beliefs, truth)?;
        recommended.push(truth.utility(self.model, &cache.maximum().outcome));
        let mut exhausted = false;
        for _ in 0..budget {
            if !exhausted {
                let ctx = EvoiContext {
                    model: self.model,
                    plan: &self.plan,
                    beliefs: &beliefs,
                    anchors: &truth.anchors,
                    solver: &self.solver,
                    cache: &cache,
                };
                let start = Instant::now();
                let query = strategy.select(&ctx, rng);
                select_seconds.push(start.elapsed().as_secs_f64());
                match query {
                    Some(Query::Comparison(q)) => {
                        let response = simulate_response(truth, &q);
                        if let Err(e) = beliefs.update(q.factor, q.config, q.threshold, response) {
                            tracing::warn!("skipping update of ({}, {}): {e}", q.factor, q.config);
                        }
                    }
                    Some(Query::Direct { factor, config }) => {
                        beliefs
                            .set_known(factor, config, truth.local_value(factor, config))
                            .expect("strategy selected a free parameter");
                    }
                    None => exhausted = true,
                }
                if !exhausted {
                    cache = self.snapshot(&beliefs, truth)?;
                }
            }
            recommended.push(truth.utility(self.model, &cache.maximum().outcome));
        }
        Ok(TrialTrace { recommended, optimal, select_seconds })
    }
}

pub fn run_experiment(config: &ExperimentConfig, base: &Path) -> Result<ExperimentResult, HarnessError> {
    let model = config.load_model(base)?;
    run_experiment_on(&model, config, &StrategyRegistry::with_builtins())
}

/// Runs every configured strategy on `model`. Trial `t` of every strategy
/// sees the same priors and ground truth.
pub fn run_experiment_on(
    model: &GaiModel,
    config: &ExperimentConfig,
    registry: &StrategyRegistry,
) -> Result<ExperimentResult, HarnessError> {
    if config.strategies.is_empty() {
        return Err(HarnessError::Config("no strategies configured".into()));
    }
    let mut strategies = Vec::new();
    for run in &config.strategies {
        let s = registry.get(&run.name).ok_or_else(|| HarnessError::UnknownStrategy(run.name.clone()))?;
        if run.trials == 0 {
            return Err(HarnessError::Config(format!("strategy {} has zero trials", run.name)));
        }
        strategies.push((run, s));
    }
    let sim = Simulation::new(model);
    if sim.plan.plan().has_large_coefficients() {
        tracing::info!("canonical plan has aggregated coefficients of magnitude above one");
    }
    let tasks: Vec<(usize, usize)> =
        strategies.iter().enumerate().flat_map(|(s, (run, _))| (0..run.trials).map(move |t| (s, t))).collect();
    let traces: Vec<TrialTrace> = tasks
        .par_iter()
        .map(|&(s, t)| {
            let (priors, truth) = sim.trial_setup(config.seed, config.prior, t);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(((s as u64 + 1) << 32) | t as u64);
            sim.run_trial(strategies[s].1, priors, &truth, config.budget, &mut rng)
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut timing = Vec::new();
    for (s, (run, _)) in strategies.iter().enumerate() {
        let mine: Vec<&TrialTrace> = tasks.iter().zip(&traces).filter(|((ts, _), _)| *ts == s).map(|(_, tr)| tr).collect();
        let n = mine.len() as f64;
        let mut mean_err = vec![0.0; config.budget + 1];
        let mut mean_frac = vec![0.0; config.budget + 1];
        for (t, tr) in mine.iter().enumerate() {
            let err0 = (tr.optimal - tr.recommended[0]).max(0.0);
            for (q, &rec) in tr.recommended.iter().enumerate() {
                let error = (tr.optimal - rec).max(0.0);
                let fraction_of_optimal = if tr.optimal != 0.0 { error / tr.optimal.abs() } else { 0.0 };
                let fraction_of_initial = if err0 > 0.0 { error / err0 } else { 0.0 };
                mean_err[q] += error / n;
                mean_frac[q] += fraction_of_optimal / n;
                rows.push(TraceRow {
                    strategy: run.name.clone(),
                    trial: t,
                    query: q,
                    recommended_utility: rec,
                    optimal_utility: tr.optimal,
                    error,
                    fraction_of_optimal,
                    fraction_of_initial,
                });
            }
        }
        for q in 0..=config.budget {
            summary.push(SummaryRow {
                strategy: run.name.clone(),
                query: q,
                trials: mine.len(),
                mean_error: mean_err[q],
                mean_fraction_of_optimal: mean_frac[q],
                fraction_of_initial: if mean_err[0] > 0.0 { mean_err[q] / mean_err[0] } else { 0.0 },
            });
        }
        let all: Vec<f64> = mine.iter().flat_map(|tr| tr.select_seconds.iter().copied()).collect();
        timing.push(SelectionTiming {
            strategy: run.name.clone(),
            max_seconds: all.iter().copied().fold(0.0, f64::max),
            mean_seconds: if all.is_empty() { 0.0 } else { all.iter().sum::<f64>() / all.len() as f64 },
        });
    }
    Ok(ExperimentResult { rows, summary, timing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            seed: 5,
            budget: 6,
            prior: PriorKind::Uniform,
            model: ModelSource::Synthetic(SyntheticParams {
                attributes: 5,
                min_domain: 2,
                max_domain: 3,
                factors: 3,
                max_scope: 3,
                constraint_density: 0.4,
            }),
            strategies: vec![StrategyRun { name: "evoi".into(), trials: 3 }, StrategyRun { name: "random".into(), trials: 4 }],
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = small();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn zero_budget_gives_prior_rows_only() {
        let mut c = small();
        c.budget = 0;
        let r = run_experiment(&c, Path::new(".")).unwrap();
        assert_eq!(r.rows.len(), 7);
        assert!(r.rows.iter().all(|row| row.query == 0 && row.error >= 0.0));
    }

    #[test]
    fn direct_strategy_reaches_zero_error() {
        let mut c = small();
        let model = c.load_model(Path::new(".")).unwrap();
        c.budget = model.free_parameter_count();
        c.strategies = vec![StrategyRun { name: "direct".into(), trials: 3 }];
        let r = run_experiment_on(&model, &c, &StrategyRegistry::with_builtins()).unwrap();
        for row in r.rows.iter().filter(|row| row.query == c.budget) {
            assert!(row.error.abs() < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn unknown_strategy_is_rejected() {
        let mut c = small();
        c.strategies[0].name = "oracle".into();
        assert!(matches!(run_experiment(&c, Path::new(".")), Err(HarnessError::UnknownStrategy(_))));
    }
}
