//! Benchmark dataset, per-task runs, whole-benchmark runs and the prompt
//! ablation sweep.
//!
//! A dataset directory holds `manifest.json`, one JSON file per task and the
//! shared floor plans. Runs write their artifacts under
//! `<out>/<timestamp>-<planner>/<task-id>/`.

mod dataset;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{
    load_dataset, load_task, validate_dataset, validate_task, BenchTask, Dataset, DatasetError, MANIFEST_FILE,
    MAX_ROBOTS,
};

use crate::coalition::{allocate, form_policy, random_allocate, CoalitionPolicy};
use crate::dsl::{serialize, PlanAst};
use crate::executor::{execute, ExecutionTrace};
use crate::metrics::{aggregate, evaluate, AblationTable, AblationVariant, Category, Report, RunOutcome};
use crate::planner::{run_pipeline, ChatBackend, OracleBackend, PromptConfig, Transcript};

/// Where the language-model stages get their replies.
#[derive(Clone)]
pub enum LlmBackend {
    /// Offline replies built from each task's reference decomposition.
    Mock,
    Remote(Arc<dyn ChatBackend>),
}

#[derive(Clone)]
pub enum Planner {
    Oracle,
    /// Uniform single-robot allocation of the reference decomposition.
    Random { seed: u64 },
    Llm { prompt: PromptConfig, backend: LlmBackend },
}

impl Planner {
    pub fn label(&self) -> &'static str {
        match self {
            Planner::Oracle => "oracle",
            Planner::Random { .. } => "random",
            Planner::Llm {
                backend: LlmBackend::Mock,
                ..
            } => "mock",
            Planner::Llm { .. } => "llm",
        }
    }
}

/// Per-task seed so each task sees an independent stream.
pub fn task_seed(seed: u64, task_id: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0100_0000_01b3;
    let hash = task_id
        .bytes()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME));
    seed ^ hash
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRun {
    pub task_id: String,
    pub category: Category,
    pub planner: String,
    #[serde(flatten)]
    pub outcome: RunOutcome,
    #[serde(skip)]
    pub plan: Option<PlanAst>,
    #[serde(skip)]
    pub policy: Option<CoalitionPolicy>,
    #[serde(skip)]
    pub trace: Option<ExecutionTrace>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, contents: &str) -> Result<(), BenchError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

/// What a planner made of one task: a plan, a refusal, or a refusal with the
/// policy that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerOutput {
    pub plan: Option<PlanAst>,
    pub policy: Option<CoalitionPolicy>,
    pub refusal: Option<String>,
}

/// Runs the planner on one task without executing the result. The LLM
/// transcript goes to `dir/transcript.jsonl` when `dir` is given.
pub fn plan_task(task: &BenchTask, planner: &Planner, dir: Option<&Path>) -> Result<PlannerOutput, String> {
    let reference = || {
        task.gt_decomposition
            .as_ref()
            .ok_or_else(|| format!("task `{}` has no gt_decomposition", task.id))
    };
    match planner {
        Planner::Oracle => {
            let d = reference()?;
            let policy = form_policy(d, &task.robots);
            if let Some(bad) = policy.infeasible() {
                let reason = format!("sub-task `{}`: {}", bad.subtask_id, bad.rationale);
                return Ok(PlannerOutput {
                    plan: None,
                    policy: Some(policy),
                    refusal: Some(reason),
                });
            }
            let plan = allocate(d, &policy).map_err(|e| e.to_string())?;
            Ok(PlannerOutput {
                plan: Some(plan),
                policy: Some(policy),
                refusal: None,
            })
        }
        Planner::Random { seed } => {
            let d = reference()?;
            Ok(PlannerOutput {
                plan: Some(random_allocate(d, &task.robots, task_seed(*seed, &task.id))),
                policy: None,
                refusal: None,
            })
        }
        Planner::Llm { prompt, backend } => {
            let mock;
            let chat: &dyn ChatBackend = match backend {
                LlmBackend::Mock => {
                    mock = OracleBackend::new(reference()?.clone(), task.robots.clone());
                    &mock
                }
                LlmBackend::Remote(b) => b.as_ref(),
            };
            let mut transcript = match dir {
                Some(d) => Transcript::to_file(d.join("transcript.jsonl")),
                None => Transcript::new(),
            };
            let result = run_pipeline(&task.instruction, &task.world, &task.robots, prompt, chat, &mut transcript)
                .map_err(|e| e.to_string())?;
            Ok(PlannerOutput {
                plan: result.plan,
                policy: result.policy,
                refusal: result.refusal,
            })
        }
    }
}

/// Plans, executes and scores one task. With `out`, artifacts go to
/// `out/<task-id>/`.
pub fn run_task(task: &BenchTask, planner: &Planner, out: Option<&Path>) -> Result<TaskRun, BenchError> {
    let dir = match out {
        Some(base) => {
            let d = base.join(&task.id);
            std::fs::create_dir_all(&d).map_err(io_err(&d))?;
            Some(d)
        }
        None => None,
    };
    let mut run = TaskRun {
        task_id: task.id.clone(),
        category: task.category,
        planner: planner.label().to_string(),
        outcome: RunOutcome::Failed { error: String::new() },
        plan: None,
        policy: None,
        trace: None,
    };
    run.outcome = match plan_task(task, planner, dir.as_deref()) {
        Err(error) => RunOutcome::Failed { error },
        Ok(p) => {
            run.policy = p.policy;
            run.plan = p.plan;
            match (&run.plan, p.refusal) {
                (_, Some(reason)) => RunOutcome::Refused { reason },
                (None, None) => RunOutcome::Failed {
                    error: "planner returned neither plan nor refusal".into(),
                },
                (Some(plan), None) => match execute(plan, &task.world, &task.robots) {
                    Err(e) => RunOutcome::Failed { error: e.to_string() },
                    Ok(trace) => {
                        let outcome = match evaluate(&trace, &task.ground_truth) {
                            Ok(metrics) => RunOutcome::Completed { metrics },
                            Err(e) => RunOutcome::Failed { error: e.to_string() },
                        };
                        run.trace = Some(trace);
                        outcome
                    }
                },
            }
        }
    };
    if let Some(d) = &dir {
        if let Some(plan) = &run.plan {
            write(&d.join("plan.dsl"), &serialize(plan))?;
        }
        if let Some(policy) = &run.policy {
            write(&d.join("policy.json"), &policy.to_json())?;
        }
        if let Some(trace) = &run.trace {
            write(&d.join("trace.jsonl"), &trace.to_jsonl())?;
        }
        let metrics = serde_json::to_string_pretty(&run.outcome).expect("outcome serializes");
        write(&d.join("metrics.json"), &metrics)?;
    }
    Ok(run)
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub jobs: usize,
    /// Keep only tasks whose id contains this text.
    pub filter: Option<String>,
    /// Parent of the fresh run directory; no artifacts when `None`.
    pub out: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            filter: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub runs: Vec<TaskRun>,
    pub report: Report,
    pub run_dir: Option<PathBuf>,
}

/// Creates `<base>/<timestamp>-<label>`, adding a suffix if it already exists.
pub fn create_run_dir(base: &Path, label: &str) -> Result<PathBuf, BenchError> {
    std::fs::create_dir_all(base).map_err(io_err(base))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let mut dir = base.join(format!("{stamp}-{label}"));
    let mut n = 1;
    loop {
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                dir = base.join(format!("{stamp}-{label}-{n}"));
                n += 1;
            }
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
}

/// Runs every selected task on a pool of `jobs` workers; results keep
/// dataset order.
pub fn run_benchmark(dataset: &Dataset, planner: &Planner, options: &BenchOptions) -> Result<BenchmarkResult, BenchError> {
    let run_dir = match &options.out {
        Some(base) => Some(create_run_dir(base, planner.label())?),
        None => None,
    };
    let tasks: Vec<&BenchTask> = dataset
        .tasks
        .iter()
        .filter(|t| options.filter.as_deref().is_none_or(|f| t.id.contains(f)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let runs = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| run_task(t, planner, run_dir.as_deref()))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let records: Vec<(Category, RunOutcome)> = runs.iter().map(|r| (r.category, r.outcome.clone())).collect();
    let report = aggregate(&records);
    if let Some(d) = &run_dir {
        write(&d.join("report.md"), &report.to_markdown())?;
        write(&d.join("report.csv"), &report.to_csv())?;
        let json = serde_json::to_string_pretty(&runs).expect("runs serialize");
        write(&d.join("records.json"), &json)?;
    }
    Ok(BenchmarkResult { runs, report, run_dir })
}

pub fn variant_config(variant: AblationVariant) -> PromptConfig {
    let base = PromptConfig::default();
    match variant {
        AblationVariant::Full => base,
        AblationVariant::NoComments => PromptConfig {
            include_line_comments: false,
            ..base
        },
        AblationVariant::NoSummary => PromptConfig {
            include_block_summaries: false,
            ..base
        },
        AblationVariant::NoBoth => PromptConfig {
            include_line_comments: false,
            include_block_summaries: false,
            ..base
        },
        AblationVariant::NoCoalition => PromptConfig {
            skip_coalition: true,
            ..base
        },
    }
}

/// Runs the benchmark once per prompt variant.
pub fn run_ablation(dataset: &Dataset, backend: &LlmBackend, options: &BenchOptions) -> Result<AblationTable, BenchError> {
    let mut rows = Vec::new();
    for variant in AblationVariant::ALL {
        let planner = Planner::Llm {
            prompt: variant_config(variant),
            backend: backend.clone(),
        };
        let opts = BenchOptions {
            out: options.out.as_ref().map(|o| o.join(variant.as_str())),
            ..options.clone()
        };
        let result = run_benchmark(dataset, &planner, &opts)?;
        rows.push((variant, result.runs.into_iter().map(|r| r.outcome).collect()));
    }
    let table = AblationTable::new(&rows);
    if let Some(base) = &options.out {
        write(&base.join("ablation.md"), &table.to_markdown())?;
        write(&base.join("ablation.csv"), &table.to_csv())?;
    }
    Ok(table)
}
