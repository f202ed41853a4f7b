//! `roboplan` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use roboplan_core::bench::{
    load_dataset, load_task, plan_task, run_ablation, run_benchmark, validate_dataset, validate_task, BenchOptions,
    BenchTask, LlmBackend, Planner,
};
use roboplan_core::dsl::{parse, serialize};
use roboplan_core::executor::{execute, load_floorplan, ExecutionTrace, WorldState};
use roboplan_core::issue::ValidationIssue;
use roboplan_core::metrics::evaluate;
use roboplan_core::model::{check_robot_ids, RobotSpec};
use roboplan_core::planner::{BackendConfig, HttpBackend, PromptConfig};

/// Exit status when the planner refuses a task as infeasible.
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "roboplan", version, about = "Multi-robot task planning, execution and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a task's instruction into a plan.
    Plan(PlanArgs),
    /// Execute a plan in a floor plan and print the trace.
    Exec(ExecArgs),
    /// Score a trace against a task's ground truth.
    Eval(EvalArgs),
    /// Run a planner over a benchmark dataset.
    Bench(BenchArgs),
    /// Run the mock or live LLM planner once per prompt variant.
    Ablate(AblateArgs),
    /// Check a dataset (or one task) for consistency.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlannerKind {
    Oracle,
    Random,
    Mock,
    Llm,
}

#[derive(Args)]
struct PlannerArgs {
    #[arg(long, value_enum, default_value = "oracle")]
    planner: PlannerKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML file with the chat endpoint settings (required for `--planner llm`).
    #[arg(long)]
    backend_config: Option<PathBuf>,
    /// Drop `# ` line comments from the example plans.
    #[arg(long)]
    no_comments: bool,
    /// Drop `## ` block summaries from the example plans.
    #[arg(long)]
    no_summary: bool,
    /// Skip the coalition stage.
    #[arg(long)]
    no_coalition: bool,
}

impl PlannerArgs {
    fn prompt(&self) -> PromptConfig {
        PromptConfig {
            include_line_comments: !self.no_comments,
            include_block_summaries: !self.no_summary,
            skip_coalition: self.no_coalition,
            ..PromptConfig::default()
        }
    }

    fn build(&self) -> Result<Planner> {
        Ok(match self.planner {
            PlannerKind::Oracle => Planner::Oracle,
            PlannerKind::Random => Planner::Random { seed: self.seed },
            PlannerKind::Mock => Planner::Llm {
                prompt: self.prompt(),
                backend: LlmBackend::Mock,
            },
            PlannerKind::Llm => Planner::Llm {
                prompt: self.prompt(),
                backend: remote_backend(self.backend_config.as_deref())?,
            },
        })
    }
}

fn remote_backend(path: Option<&Path>) -> Result<LlmBackend> {
    let Some(path) = path else {
        bail!("--planner llm needs --backend-config <path>");
    };
    let config = BackendConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(LlmBackend::Remote(Arc::new(HttpBackend::new(config))))
}

#[derive(Args)]
struct PlanArgs {
    /// Task JSON file supplying the floor plan, robots and instruction.
    #[arg(long)]
    task: PathBuf,
    /// Replaces the task's instruction (LLM planners only).
    #[arg(long)]
    instruction: Option<String>,
    #[command(flatten)]
    planner: PlannerArgs,
    /// Write the plan here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SceneArgs {
    /// Task JSON file supplying the floor plan and robots.
    #[arg(long, conflicts_with_all = ["floorplan", "robots"])]
    task: Option<PathBuf>,
    #[arg(long, requires = "robots")]
    floorplan: Option<PathBuf>,
    /// JSON array of robot specs.
    #[arg(long, requires = "floorplan")]
    robots: Option<PathBuf>,
}

impl SceneArgs {
    fn load(&self) -> Result<(WorldState, Vec<RobotSpec>)> {
        match (&self.task, &self.floorplan, &self.robots) {
            (Some(task), _, _) => {
                let t = load_task(task)?;
                Ok((t.world, t.robots))
            }
            (None, Some(fp), Some(robots)) => {
                let world = load_floorplan(&read(fp)?).with_context(|| format!("loading {}", fp.display()))?;
                let robots: Vec<RobotSpec> =
                    serde_json::from_str(&read(robots)?).with_context(|| format!("parsing {}", robots.display()))?;
                check_robot_ids(&robots)?;
                Ok((world, robots))
            }
            _ => bail!("give either --task or both --floorplan and --robots"),
        }
    }
}

#[derive(Args)]
struct ExecArgs {
    /// Plan in DSL form.
    #[arg(long)]
    plan: PathBuf,
    #[command(flatten)]
    scene: SceneArgs,
    /// Write the JSONL trace here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// JSONL trace from `exec`.
    #[arg(long)]
    trace: PathBuf,
    /// Task JSON file supplying the ground truth.
    #[arg(long)]
    task: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "benchmark")]
    dataset: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Parent directory for the timestamped run directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Only tasks whose id contains this text.
    #[arg(long)]
    filter: Option<String>,
}

impl RunArgs {
    fn options(&self) -> BenchOptions {
        BenchOptions {
            jobs: self.jobs,
            filter: self.filter.clone(),
            out: Some(self.out.clone()),
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    planner: PlannerArgs,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Use a live endpoint instead of the offline mock.
    #[arg(long)]
    backend_config: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value = "benchmark", conflicts_with = "task")]
    dataset: PathBuf,
    /// Check a single task file instead of a dataset.
    #[arg(long)]
    task: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_plan(args: &PlanArgs) -> Result<ExitCode> {
    let mut task: BenchTask = load_task(&args.task)?;
    if let Some(instruction) = &args.instruction {
        task.instruction = instruction.clone();
    }
    let planner = args.planner.build()?;
    let output = plan_task(&task, &planner, None).map_err(anyhow::Error::msg)?;
    if let Some(reason) = output.refusal {
        eprintln!("infeasible: {reason}");
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    }
    let Some(plan) = output.plan else {
        bail!("planner returned no plan");
    };
    write_or_print(args.out.as_deref(), &serialize(&plan))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_exec(args: &ExecArgs) -> Result<ExitCode> {
    let plan = parse(&read(&args.plan)?).with_context(|| format!("parsing {}", args.plan.display()))?;
    let (world, robots) = args.scene.load()?;
    let trace = execute(&plan, &world, &robots)?;
    write_or_print(args.out.as_deref(), &trace.to_jsonl())?;
    let failed = trace.total_actions - trace.succeeded();
    eprintln!("{} of {} actions succeeded", trace.succeeded(), trace.total_actions);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_eval(args: &EvalArgs) -> Result<ExitCode> {
    let trace = ExecutionTrace::from_jsonl(&read(&args.trace)?)?;
    let task = load_task(&args.task)?;
    let metrics = evaluate(&trace, &task.ground_truth)?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let dataset = load_dataset(&args.run.dataset)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    let planner = args.planner.build()?;
    let result = run_benchmark(&dataset, &planner, &args.run.options())?;
    for notice in &result.report.notices {
        eprintln!("note: {notice}");
    }
    print!("{}", result.report.to_markdown());
    if let Some(dir) = &result.run_dir {
        eprintln!("artifacts: {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ablate(args: &AblateArgs) -> Result<ExitCode> {
    let dataset = load_dataset(&args.run.dataset)?;
    let backend = match &args.backend_config {
        Some(path) => remote_backend(Some(path))?,
        None => LlmBackend::Mock,
    };
    let table = run_ablation(&dataset, &backend, &args.run.options())?;
    print!("{}", table.to_markdown());
    Ok(ExitCode::SUCCESS)
}

fn report_issues(issues: &[ValidationIssue]) -> ExitCode {
    for issue in issues {
        eprintln!("{issue}");
    }
    let errors = issues.iter().filter(|i| i.is_error()).count();
    println!("{errors} errors, {} warnings", issues.len() - errors);
    if errors == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode> {
    if let Some(path) = &args.task {
        return Ok(report_issues(&validate_task(&load_task(path)?)));
    }
    let dataset = load_dataset(&args.dataset)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    let counts = dataset
        .counts()
        .iter()
        .map(|(c, n)| format!("{} {n}", c.as_str()))
        .collect::<Vec<_>>()
        .join(", ");
    println!("{} tasks ({counts})", dataset.tasks.len());
    Ok(report_issues(&validate_dataset(&dataset)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Exec(a) => cmd_exec(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Validate(a) => cmd_validate(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
