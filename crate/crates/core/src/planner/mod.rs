//! Language-model planner: decomposition, coalition formation and allocation
//! through three few-shot prompts.
//!
//! Each stage's parsed output feeds the next prompt. Any stage may refuse
//! with an `INFEASIBLE: <reason>` line, which halts the pipeline without a
//! plan. Every reply is added to the transcript before it is parsed.

mod backend;
pub mod examples;
mod parse;
mod prompt;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    BackendConfig, BackendError, ChatBackend, CompletionRequest, ConfigError, HttpBackend, OracleBackend,
    ScriptedBackend, Transcript, TranscriptRecord,
};
pub use parse::{parse_stage_output, StageOutput, StageParseError, REFUSAL_MARKER};
pub use prompt::{
    build_allocation_prompt, build_coalition_prompt, build_decomposition_prompt, is_block_summary,
    is_line_comment, render_environment, render_robots, PromptConfig,
};

use crate::coalition::{Assignment, CoalitionPolicy};
use crate::dsl::PlanAst;
use crate::executor::WorldState;
use crate::model::{team_skills, Decomposition, RobotSpec, SkillName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Decomposition,
    Coalition,
    Allocation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Decomposition => "decomposition",
            Stage::Coalition => "coalition",
            Stage::Allocation => "allocation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    /// Absent only when the decomposition stage itself refused.
    pub decomposition: Option<Decomposition>,
    pub policy: Option<CoalitionPolicy>,
    pub plan: Option<PlanAst>,
    pub refusal: Option<String>,
    pub transcript: Vec<TranscriptRecord>,
}

#[derive(Debug, Error)]
pub enum PipelineErrorKind {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Parse(#[from] StageParseError),
    #[error("policy does not list exactly one decision per sub-task in order")]
    PolicyMismatch,
    #[error("reply parsed as the wrong kind of output")]
    UnexpectedOutput,
    #[error("cannot write transcript: {0}")]
    Transcript(#[from] std::io::Error),
    #[error("invalid prompt config: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
#[error("{stage} stage: {kind}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: PipelineErrorKind,
}

fn err(stage: Stage) -> impl Fn(PipelineErrorKind) -> PipelineError {
    move |kind| PipelineError { stage, kind }
}

/// Sends one prompt, records the exchange, then parses the reply.
fn call(
    stage: Stage,
    prompt: String,
    backend: &dyn ChatBackend,
    transcript: &mut Transcript,
) -> Result<StageOutput, PipelineError> {
    let e = err(stage);
    let request = CompletionRequest { stage, prompt };
    let reply = backend.complete(&request);
    let record = TranscriptRecord {
        stage,
        prompt: request.prompt,
        reply: reply.as_ref().ok().cloned(),
        error: reply.as_ref().err().map(ToString::to_string),
    };
    transcript.push(record).map_err(|io| e(io.into()))?;
    let text = reply.map_err(|b| e(b.into()))?;
    parse_stage_output(stage, &text).map_err(|p| e(p.into()))
}

/// Runs decomposition, coalition formation (unless skipped) and allocation.
pub fn run_pipeline(
    instruction: &str,
    world: &WorldState,
    robots: &[RobotSpec],
    config: &PromptConfig,
    backend: &dyn ChatBackend,
    transcript: &mut Transcript,
) -> Result<PipelineResult, PipelineError> {
    config
        .check()
        .map_err(|m| err(Stage::Decomposition)(PipelineErrorKind::Config(m)))?;
    let mut result = PipelineResult {
        decomposition: None,
        policy: None,
        plan: None,
        refusal: None,
        transcript: Vec::new(),
    };
    let finish = |mut r: PipelineResult, t: &Transcript| {
        r.transcript = t.records.clone();
        Ok(r)
    };

    let skills: Vec<SkillName> = team_skills(robots).into_iter().collect();
    let prompt = build_decomposition_prompt(world, &skills, config, instruction);
    let decomposition = match call(Stage::Decomposition, prompt, backend, transcript)? {
        StageOutput::Decomposition(d) => d,
        StageOutput::Refusal(reason) => {
            result.refusal = Some(reason);
            return finish(result, transcript);
        }
        _ => return Err(err(Stage::Decomposition)(PipelineErrorKind::UnexpectedOutput)),
    };
    result.decomposition = Some(decomposition.clone());

    if !config.skip_coalition {
        let prompt = build_coalition_prompt(&decomposition, robots, world, config);
        let policy = match call(Stage::Coalition, prompt, backend, transcript)? {
            StageOutput::Policy(p) => p,
            StageOutput::Refusal(reason) => {
                result.refusal = Some(reason);
                return finish(result, transcript);
            }
            _ => return Err(err(Stage::Coalition)(PipelineErrorKind::UnexpectedOutput)),
        };
        if !policy.matches(&decomposition) {
            return Err(err(Stage::Coalition)(PipelineErrorKind::PolicyMismatch));
        }
        let infeasible = policy
            .decisions
            .iter()
            .find(|d| d.assignment == Assignment::Infeasible)
            .map(|d| format!("{}: {}", d.subtask_id, d.rationale));
        result.policy = Some(policy);
        if let Some(reason) = infeasible {
            result.refusal = Some(reason);
            return finish(result, transcript);
        }
    }

    let prompt = build_allocation_prompt(&decomposition, result.policy.as_ref(), robots, config);
    match call(Stage::Allocation, prompt, backend, transcript)? {
        StageOutput::Plan(p) => result.plan = Some(p),
        StageOutput::Refusal(reason) => result.refusal = Some(reason),
        _ => return Err(err(Stage::Allocation)(PipelineErrorKind::UnexpectedOutput)),
    }
    finish(result, transcript)
}
