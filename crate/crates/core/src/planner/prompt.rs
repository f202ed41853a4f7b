use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::examples::{
    allocation_examples, coalition_examples, decomposition_examples, example_world, parse_robots,
    AllocationExample, CoalitionExample, DecompositionExample,
};
use crate::coalition::{form_policy, CoalitionPolicy};
use crate::dsl::{parse_decomposition, serialize_decomposition};
use crate::executor::WorldState;
use crate::model::{Decomposition, RobotSpec, SkillName};

/// Few-shot material and ablation switches for the three prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptConfig {
    pub decomposition_examples: Vec<DecompositionExample>,
    pub coalition_examples: Vec<CoalitionExample>,
    pub allocation_examples: Vec<AllocationExample>,
    pub include_line_comments: bool,
    pub include_block_summaries: bool,
    pub skip_coalition: bool,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            decomposition_examples: decomposition_examples(),
            coalition_examples: coalition_examples(),
            allocation_examples: allocation_examples(),
            include_line_comments: true,
            include_block_summaries: true,
            skip_coalition: false,
        }
    }
}

impl PromptConfig {
    pub fn check(&self) -> Result<(), String> {
        if self.decomposition_examples.is_empty() {
            return Err("no decomposition examples".into());
        }
        if !self.skip_coalition && self.coalition_examples.is_empty() {
            return Err("no coalition examples".into());
        }
        if self.allocation_examples.is_empty() {
            return Err("no allocation examples".into());
        }
        Ok(())
    }
}

pub fn is_line_comment(line: &str) -> bool {
    line.trim_start().starts_with("# ")
}

pub fn is_block_summary(line: &str) -> bool {
    line.trim_start().starts_with("## ")
}

/// Drops comment lines from example text according to the flags.
fn strip_comments(text: &str, config: &PromptConfig) -> String {
    let mut out = String::new();
    for line in text.lines() {
        if (!config.include_line_comments && is_line_comment(line))
            || (!config.include_block_summaries && is_block_summary(line))
        {
            continue;
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn fmt_capacity(x: f64) -> String {
    format!("{x:.1}")
}

pub fn render_robots(robots: &[RobotSpec]) -> String {
    let mut sorted: Vec<&RobotSpec> = robots.iter().collect();
    sorted.sort_by_key(|r| r.id);
    let mut out = String::new();
    for r in sorted {
        let skills: Vec<String> = r
            .skills
            .iter()
            .map(|s| match (s.capacity, s.name.capacity_unit()) {
                (Some(c), Some(unit)) => format!("{} (max {} {unit})", s.name, fmt_capacity(c)),
                _ => s.name.to_string(),
            })
            .collect();
        let _ = writeln!(out, "- {}: {}", r.id, skills.join(", "));
    }
    out
}

pub fn render_environment(world: &WorldState) -> String {
    let mut out = String::new();
    for obj in world.objects.values() {
        let mut facts: Vec<String> = Vec::new();
        if obj.object_type != obj.id {
            facts.push(format!("type {}", obj.object_type));
        }
        if let Some(parent) = &obj.parent_receptacle {
            facts.push(format!("in {parent}"));
        }
        if let Some(m) = obj.mass {
            facts.push(format!("{} kg", fmt_capacity(m)));
        }
        let flags = [
            (obj.is_receptacle, "receptacle"),
            (obj.togglable, "switchable"),
            (obj.openable, "openable"),
            (obj.sliceable, "sliceable"),
            (obj.breakable, "breakable"),
            (obj.attributes.is_on, "currently on"),
            (obj.attributes.is_open, "currently open"),
        ];
        facts.extend(flags.iter().filter(|(on, _)| *on).map(|(_, f)| f.to_string()));
        if facts.is_empty() {
            let _ = writeln!(out, "- {}", obj.id);
        } else {
            let _ = writeln!(out, "- {}: {}", obj.id, facts.join(", "));
        }
    }
    for region in world.regions.values() {
        let _ = writeln!(out, "- {}: region, {} m2", region.id, fmt_capacity(region.area));
    }
    out
}

fn render_skills(skills: &[SkillName]) -> String {
    let unique: BTreeSet<SkillName> = skills.iter().copied().collect();
    let mut out = String::new();
    for s in SkillName::ALL.iter().filter(|s| unique.contains(s)) {
        let _ = writeln!(out, "- {}", s.signature());
    }
    out
}

fn example_names(world: &WorldState) -> String {
    world
        .objects
        .keys()
        .chain(world.regions.keys())
        .cloned()
        .collect::<Vec<_>>()
        .join(", ")
}

const DECOMPOSITION_INTRO: &str = "\
You split household instructions into sub-tasks for a team of robots.

";

const DECOMPOSITION_FORMAT: &str = "\
=== Output format ===
Reply with one tasks block. Each subtask has an identifier, a phase number,
an optional demand line, an optional quoted description and a list of actions.
Sub-tasks that share a phase may run at the same time; a higher phase waits for
every lower one. Add `demand SKILL AMOUNT` when the sub-task lifts a heavy
object or patrols a region: the amount is the object mass in kg or the region
area in m2, and robots may pool capacity to meet it.
Use only the skills listed above and only objects and regions from the
environment. If the instruction cannot be carried out, reply with one line:
INFEASIBLE: <reason>

";

/// Stage-1 prompt: skills, environment, worked examples, target instruction.
pub fn build_decomposition_prompt(
    world: &WorldState,
    skills: &[SkillName],
    config: &PromptConfig,
    instruction: &str,
) -> String {
    let mut out = String::from(DECOMPOSITION_INTRO);
    out.push_str("=== Skills ===\n");
    out.push_str(&render_skills(skills));
    out.push_str("\n=== Environment ===\n");
    out.push_str(&render_environment(world));
    out.push('\n');
    out.push_str(DECOMPOSITION_FORMAT);
    let _ = writeln!(
        out,
        "The examples below use a different apartment with: {}.\n",
        example_names(&example_world())
    );
    for (i, ex) in config.decomposition_examples.iter().enumerate() {
        let _ = writeln!(out, "=== Example {} ===", i + 1);
        let _ = writeln!(out, "Instruction: {}", ex.instruction);
        out.push_str(&strip_comments(ex.tasks, config));
        out.push('\n');
    }
    out.push_str("=== Task ===\n");
    let _ = writeln!(out, "Instruction: {}", instruction.trim());
    out
}

const COALITION_FORMAT: &str = "\
=== Output format ===
For every subtask, in order, decide who performs it:
- single_robot: one robot has every skill the subtask uses and enough capacity.
- team_union: no single robot has every skill, but a team does together.
- team_capacity: a robot has the skills, but the demand needs pooled capacity.
- infeasible: no team of the listed robots can do it.
Prefer one robot over a team and a smaller team over a larger one; among equal
choices take the lowest robot numbers. Reply with a JSON object of the form
{\"decisions\": [{\"subtask_id\": ..., \"kind\": ..., \"team\": [robot numbers], \"rationale\": ...}]}
If any subtask is infeasible you may instead reply with one line:
INFEASIBLE: <reason>

";

fn example_policy_json(robots: &[RobotSpec], tasks: &str) -> String {
    let d = parse_decomposition(tasks).expect("example decomposition parses");
    form_policy(&d, robots).to_json()
}

/// Stage-2 prompt: robots, environment, worked policies, target decomposition.
pub fn build_coalition_prompt(
    decomposition: &Decomposition,
    robots: &[RobotSpec],
    world: &WorldState,
    config: &PromptConfig,
) -> String {
    let mut out = String::from("You decide which robot or team of robots performs each sub-task.\n\n");
    out.push_str(COALITION_FORMAT);
    for (i, ex) in config.coalition_examples.iter().enumerate() {
        let ex_robots = parse_robots(ex.robots);
        let _ = writeln!(out, "=== Example {} ===", i + 1);
        out.push_str("Robots:\n");
        out.push_str(&render_robots(&ex_robots));
        out.push_str("Sub-tasks:\n");
        out.push_str(&strip_comments(ex.tasks, config));
        out.push_str("Policy:\n");
        out.push_str(&example_policy_json(&ex_robots, ex.tasks));
        out.push_str("\n\n");
    }
    out.push_str("=== Task ===\nRobots:\n");
    out.push_str(&render_robots(robots));
    out.push_str("Environment:\n");
    out.push_str(&render_environment(world));
    out.push_str("Sub-tasks:\n");
    out.push_str(&serialize_decomposition(decomposition));
    out.push_str("Policy:\n");
    out
}

const ALLOCATION_FORMAT: &str = "\
=== Output format ===
Reply with one plan block. `assign robotN { ... }` gives actions to a robot,
`assign robotN, robotM { ... }` to a team acting together. `seq { ... }` runs
its blocks one after another and `par { ... }` runs them at the same time.
A robot may appear in only one branch of a par block. Sub-tasks of a lower
phase must finish before a higher phase starts.

";

const ALLOCATION_FORMAT_WITH_POLICY: &str = "\
Use the team given for each sub-task.

";

/// Stage-3 prompt: worked allocations, then the target decomposition and,
/// unless coalition formation is skipped, its policy.
pub fn build_allocation_prompt(
    decomposition: &Decomposition,
    policy: Option<&CoalitionPolicy>,
    robots: &[RobotSpec],
    config: &PromptConfig,
) -> String {
    let with_policy = !config.skip_coalition && policy.is_some();
    let mut out = String::from("You turn sub-tasks into an executable multi-robot plan.\n\n");
    out.push_str(ALLOCATION_FORMAT);
    if with_policy {
        out.push_str(ALLOCATION_FORMAT_WITH_POLICY);
    }
    for (i, ex) in config.allocation_examples.iter().enumerate() {
        let ex_robots = parse_robots(ex.robots);
        let _ = writeln!(out, "=== Example {} ===", i + 1);
        out.push_str("Robots:\n");
        out.push_str(&render_robots(&ex_robots));
        out.push_str("Sub-tasks:\n");
        out.push_str(&strip_comments(ex.tasks, config));
        if with_policy {
            out.push_str("Policy:\n");
            out.push_str(&example_policy_json(&ex_robots, ex.tasks));
            out.push('\n');
        }
        out.push_str("Plan:\n");
        out.push_str(&strip_comments(ex.plan, config));
        out.push('\n');
    }
    out.push_str("=== Task ===\nRobots:\n");
    out.push_str(&render_robots(robots));
    out.push_str("Sub-tasks:\n");
    out.push_str(&serialize_decomposition(decomposition));
    if let (true, Some(p)) = (with_policy, policy) {
        out.push_str("Policy:\n");
        out.push_str(&p.to_json());
        out.push('\n');
    }
    out.push_str("Plan:\n");
    out
}
