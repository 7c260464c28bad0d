//! Command implementations behind the `gai` binary.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime error.
//! Machine-readable output goes to stdout, diagnostics and prompts to stderr.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use gai_core::elicit::{conditioning_set, global_scaling_plan, local_query_plan};
use gai_core::harness::{run_experiment, ExperimentConfig, HarnessError, StrategyRun};
use gai_core::model::{validate_model, AttrSet, GaiModel};
use gai_core::plan::{build_gai_graph, compute_canonical_plan};
use gai_core::problem::ProblemDocument;
use gai_core::session::{
    write_transcript, Answer, Clock, FixedClock, NextQuery, Session, SessionError, SessionMode, SessionOptions,
    SessionQuery, SystemClock,
};
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    /// Input is readable but not acceptable.
    Invalid(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Invalid(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult = Result<(), CliError>;

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot read {}: {e}", path.display())))
}

pub fn load_problem(path: &Path) -> Result<(ProblemDocument, GaiModel), CliError> {
    let text = read_file(path)?;
    let doc = ProblemDocument::from_json(&text).map_err(|e| CliError::Invalid(e.to_string()))?;
    let model = doc.to_model().map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok((doc, model))
}

/// Report for a problem file: `Ok` summary or the list of violations.
pub fn validate_report(path: &Path) -> Result<String, CliError> {
    let (_, model) = load_problem(path)?;
    let violations = validate_model(&model);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("violation: {v}")).collect();
        return Err(CliError::Invalid(lines.join("\n")));
    }
    Ok(format!(
        "ok: {} attributes, {} factors, {} free parameters, {} outcomes\n",
        model.attr_count(),
        model.factor_count(),
        model.free_parameter_count(),
        model.outcome_count()
    ))
}

pub fn cmd_validate(problem: &Path, out: &mut dyn Write) -> CliResult {
    match validate_report(problem) {
        Ok(report) => {
            out.write_all(report.as_bytes())?;
            Ok(())
        }
        Err(CliError::Invalid(report)) => {
            writeln!(out, "{report}")?;
            Err(CliError::Invalid("problem file failed validation".into()))
        }
        Err(e) => Err(e),
    }
}

fn set_names(model: &GaiModel, set: &AttrSet) -> String {
    let names: Vec<&str> = set.iter().map(|a| model.attributes()[a].name.as_str()).collect();
    format!("{{{}}}", names.join(","))
}

/// GAI graph, canonical plan terms, conditioning sets and query counts.
pub fn render_plan(model: &GaiModel) -> String {
    let graph = build_gai_graph(model.factors());
    let plan = compute_canonical_plan(&graph);
    let name = |j: usize| model.factors()[j].name.as_str();
    let mut s = String::new();
    writeln!(s, "edges").unwrap();
    for e in &graph.edges {
        writeln!(s, "  {} -> {} {}", name(e.from), name(e.to), set_names(model, &e.label)).unwrap();
    }
    writeln!(s, "terms").unwrap();
    for j in 0..model.factor_count() {
        let terms: Vec<String> =
            plan.factor_terms(j).iter().map(|(set, c)| format!("{}:{c:+}", set_names(model, set))).collect();
        writeln!(s, "  {}: {}", name(j), terms.join(" ")).unwrap();
    }
    writeln!(s, "conditioning").unwrap();
    for j in 0..model.factor_count() {
        writeln!(s, "  {}: {}", name(j), set_names(model, &conditioning_set(model, j))).unwrap();
    }
    let local = local_query_plan(model).len();
    let global = global_scaling_plan(model).len();
    writeln!(s, "queries local={local} global={global} total={}", local + global).unwrap();
    s
}

pub fn cmd_plan(problem: &Path, out: &mut dyn Write) -> CliResult {
    let (_, model) = load_problem(problem)?;
    out.write_all(render_plan(&model).as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub budget: Option<usize>,
    pub strategy: Option<String>,
    pub out: PathBuf,
}

fn harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::Io(_) | HarnessError::Csv(_) | HarnessError::Inference(_) => CliError::Runtime(e.into()),
        other => CliError::Invalid(other.to_string()),
    }
}

pub fn experiment_config(args: &SimulateArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let (mut config, base) = match &args.config {
        Some(path) => {
            let text = read_file(path)?;
            let config = ExperimentConfig::from_toml(&text).map_err(harness_error)?;
            (config, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (ExperimentConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(budget) = args.budget {
        config.budget = budget;
    }
    if let Some(name) = &args.strategy {
        let trials = config.strategies.iter().find(|r| &r.name == name).map_or(30, |r| r.trials);
        config.strategies = vec![StrategyRun { name: name.clone(), trials }];
    }
    if let Some(trials) = args.trials {
        for r in &mut config.strategies {
            r.trials = trials;
        }
    }
    Ok((config, base))
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult {
    let (config, base) = experiment_config(args)?;
    let result = run_experiment(&config, &base).map_err(harness_error)?;
    result.write(&args.out).map_err(harness_error)?;
    for t in &result.timing {
        eprintln!("{}: selection time max {:.4}s mean {:.4}s", t.strategy, t.max_seconds, t.mean_seconds);
    }
    for run in &config.strategies {
        let curve = result.curve(&run.name);
        let at = |q: usize| curve.get(q).copied().unwrap_or(f64::NAN);
        writeln!(
            out,
            "{} trials={} fraction_of_initial q0={:.4} q{}={:.4} q{}={:.4}",
            run.name,
            run.trials,
            at(0),
            config.budget / 2,
            at(config.budget / 2),
            config.budget,
            at(config.budget)
        )?;
    }
    writeln!(out, "wrote {}", args.out.display())?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ElicitArgs {
    pub problem: PathBuf,
    pub mode: SessionMode,
    pub seed: u64,
    pub fallback: bool,
    pub transcript: PathBuf,
    /// Record wall-clock timestamps instead of zeros.
    pub timestamps: bool,
}

fn parse_answer(query: &SessionQuery, line: &str) -> Option<Answer> {
    let t = line.trim().to_ascii_lowercase();
    match query {
        SessionQuery::Comparison { .. } => match t.as_str() {
            "y" | "yes" => Some(Answer::Yes),
            "n" | "no" => Some(Answer::No),
            _ => None,
        },
        _ => t.parse::<f64>().ok().filter(|p| (0.0..=1.0).contains(p)).map(Answer::Probability),
    }
}

/// Terminal elicitation. Answers are read line by line from `input`; blank
/// lines and lines starting with `#` are skipped, invalid answers reprompt.
/// The transcript is written when the plan completes or input ends.
pub fn cmd_elicit(args: &ElicitArgs, input: &mut dyn BufRead, out: &mut dyn Write, prompt: &mut dyn Write) -> CliResult {
    let (doc, _) = load_problem(&args.problem)?;
    if args.transcript == args.problem {
        return Err(CliError::Invalid("transcript path must differ from the problem file".into()));
    }
    let options = SessionOptions { mode: args.mode, fallback: args.fallback, seed: args.seed };
    let clock: Box<dyn Clock> = if args.timestamps { Box::new(SystemClock) } else { Box::new(FixedClock(0)) };
    let id = format!("cli-{:016x}", args.seed);
    let mut session = Session::create(id, doc, options, clock.now_ms()).map_err(|e| match e {
        SessionError::Io(_) => CliError::Runtime(e.into()),
        other => CliError::Invalid(other.to_string()),
    })?;
    let mut line = String::new();
    let complete = loop {
        let card = match session.next_query() {
            NextQuery::Query(card) => card,
            NextQuery::Complete { .. } => break true,
        };
        let hint = match card.query {
            SessionQuery::Comparison { .. } => "y/n",
            _ => "probability in [0,1]",
        };
        writeln!(prompt, "[{}] {}", card.query_id, card.text)?;
        let answer = loop {
            write!(prompt, "({hint}) > ")?;
            prompt.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                break None;
            }
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            match parse_answer(&card.query, t) {
                Some(a) => match session.submit(&card.query_id, a, clock.now_ms()) {
                    Ok(_) => break Some(a),
                    Err(e) => writeln!(prompt, "rejected: {e}")?,
                },
                None => writeln!(prompt, "invalid answer {t:?}; expected {hint}")?,
            }
        };
        if answer.is_none() {
            writeln!(prompt)?;
            break false;
        }
    };
    write_transcript(&args.transcript, &session.export()).map_err(|e| CliError::Runtime(e.into()))?;
    let summary = json!({
        "answered": session.records().len(),
        "complete": complete,
        "transcript": args.transcript,
        "recommendation": session.recommendation().ok(),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(())
}

pub fn cmd_serve(config: Option<&Path>, listen: Option<String>) -> CliResult {
    let mut config = gai_service::ServiceConfig::load(config).map_err(|e| CliError::Runtime(e.into()))?;
    if let Some(l) = listen {
        config.listen = l;
    }
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(e.into()))?;
    rt.block_on(gai_service::serve(config)).map_err(|e| CliError::Runtime(e.into()))
}
