//! Coalition formation and task allocation.
//!
//! For each sub-task the solver picks, in order of preference: a single robot
//! that has every required skill and enough capacity (lowest id first); else
//! the smallest team whose pooled skills and capacity suffice, ties broken by
//! the lexicographically smallest id tuple; else `Infeasible`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{Node, PlanAst};
use crate::model::{
    capacity_feasible, covers, pooled_capacity, team_skills, Decomposition, RobotId, RobotSpec, SkillName,
    SubTask, Team,
};

pub const BRUTE_FORCE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Assignment {
    SingleRobot(RobotId),
    /// No single robot has every skill; the team's skill union does.
    TeamUnion(Team),
    /// Some robot has the skills but the demand needs pooled capacity.
    TeamCapacity(Team),
    Infeasible,
}

impl Assignment {
    pub fn team(&self) -> Option<Team> {
        match self {
            Assignment::SingleRobot(id) => Some(Team::single(*id)),
            Assignment::TeamUnion(t) | Assignment::TeamCapacity(t) => Some(t.clone()),
            Assignment::Infeasible => None,
        }
    }

    pub fn kind(&self) -> DecisionKind {
        match self {
            Assignment::SingleRobot(_) => DecisionKind::SingleRobot,
            Assignment::TeamUnion(_) => DecisionKind::TeamUnion,
            Assignment::TeamCapacity(_) => DecisionKind::TeamCapacity,
            Assignment::Infeasible => DecisionKind::Infeasible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    SingleRobot,
    TeamUnion,
    TeamCapacity,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DecisionWire", into = "DecisionWire")]
pub struct CoalitionDecision {
    pub subtask_id: String,
    pub assignment: Assignment,
    pub rationale: String,
}

/// JSON shape shared with the language-model coalition stage.
#[derive(Serialize, Deserialize)]
struct DecisionWire {
    subtask_id: String,
    kind: DecisionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    team: Option<Vec<RobotId>>,
    #[serde(default)]
    rationale: String,
}

impl TryFrom<DecisionWire> for CoalitionDecision {
    type Error = String;

    fn try_from(w: DecisionWire) -> Result<Self, Self::Error> {
        let team = || -> Result<Team, String> {
            let ids = w.team.clone().ok_or_else(|| format!("decision for `{}` needs a team", w.subtask_id))?;
            Team::new(ids).map_err(|e| e.to_string())
        };
        let assignment = match w.kind {
            DecisionKind::SingleRobot => {
                let t = team()?;
                if t.len() != 1 {
                    return Err(format!("single_robot decision for `{}` lists {} robots", w.subtask_id, t.len()));
                }
                Assignment::SingleRobot(t.lead())
            }
            DecisionKind::TeamUnion => Assignment::TeamUnion(team()?),
            DecisionKind::TeamCapacity => Assignment::TeamCapacity(team()?),
            DecisionKind::Infeasible => Assignment::Infeasible,
        };
        Ok(Self {
            subtask_id: w.subtask_id,
            assignment,
            rationale: w.rationale,
        })
    }
}

impl From<CoalitionDecision> for DecisionWire {
    fn from(d: CoalitionDecision) -> Self {
        DecisionWire {
            kind: d.assignment.kind(),
            team: d.assignment.team().map(Vec::from),
            subtask_id: d.subtask_id,
            rationale: d.rationale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalitionPolicy {
    pub decisions: Vec<CoalitionDecision>,
}

impl CoalitionPolicy {
    pub fn infeasible(&self) -> Option<&CoalitionDecision> {
        self.decisions.iter().find(|d| d.assignment == Assignment::Infeasible)
    }

    /// True when the policy has exactly one decision per sub-task, in order.
    pub fn matches(&self, decomposition: &Decomposition) -> bool {
        self.decisions.len() == decomposition.subtasks.len()
            && self
                .decisions
                .iter()
                .zip(&decomposition.subtasks)
                .all(|(d, t)| d.subtask_id == t.id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoalitionError {
    #[error("brute-force search supports at most {BRUTE_FORCE_LIMIT} robots, got {0}")]
    TooManyRobots(usize),
    #[error("sub-task `{0}` is infeasible; no plan produced")]
    InfeasiblePlan(String),
    #[error("coalition policy does not match the decomposition")]
    PolicyMismatch,
}

fn sorted(robots: &[RobotSpec]) -> Vec<&RobotSpec> {
    let mut v: Vec<&RobotSpec> = robots.iter().collect();
    v.sort_by_key(|r| r.id);
    v
}

fn feasible(task: &SubTask, team: &[&RobotSpec]) -> bool {
    covers(&team_skills(team.iter().copied()), &task.required_skills)
        && task
            .demand
            .is_none_or(|d| capacity_feasible(team.iter().copied(), d.skill, d.amount))
}

fn fmt_skills(skills: &BTreeSet<SkillName>) -> String {
    skills.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
}

fn fmt_amount(x: f64) -> String {
    format!("{x}")
}

/// Human-readable justification for a decision. Depends only on the inputs
/// and the chosen assignment, so every solver route produces the same text.
fn rationale(task: &SubTask, robots: &[&RobotSpec], assignment: &Assignment) -> String {
    let required = fmt_skills(&task.required_skills);
    let unit = |s: SkillName| s.capacity_unit().unwrap_or("");
    let members = |team: &Team| -> Vec<&RobotSpec> {
        robots.iter().copied().filter(|r| team.contains(r.id)).collect()
    };
    match assignment {
        Assignment::SingleRobot(id) => {
            let mut text = format!("{id} has every required skill ({required})");
            if let Some(d) = task.demand {
                let cap = robots.iter().find(|r| r.id == *id).and_then(|r| r.capacity(d.skill)).unwrap_or(0.0);
                text.push_str(&format!(
                    " and its {} capacity {} {u} covers the demand of {} {u}",
                    d.skill,
                    fmt_amount(cap),
                    fmt_amount(d.amount),
                    u = unit(d.skill)
                ));
            }
            text.push('.');
            text
        }
        Assignment::TeamUnion(team) => {
            let gaps: Vec<String> = robots
                .iter()
                .map(|r| {
                    let missing: BTreeSet<SkillName> =
                        task.required_skills.difference(&r.skill_names()).copied().collect();
                    format!("{} lacks {}", r.id, fmt_skills(&missing))
                })
                .collect();
            let mut text = format!(
                "No single robot has all of {required}: {}. Team [{team}] covers them together",
                gaps.join("; ")
            );
            if let Some(d) = task.demand {
                text.push_str(&format!(
                    " with pooled {} capacity {} {u} for a demand of {} {u}",
                    d.skill,
                    fmt_amount(pooled_capacity(members(team), d.skill)),
                    fmt_amount(d.amount),
                    u = unit(d.skill)
                ));
            }
            text.push('.');
            text
        }
        Assignment::TeamCapacity(team) => {
            let d = task.demand.expect("capacity decisions carry a demand");
            let parts: Vec<String> = members(team)
                .iter()
                .map(|r| format!("{} {}", r.id, fmt_amount(r.capacity(d.skill).unwrap_or(0.0))))
                .collect();
            format!(
                "Robots with the skills ({required}) cannot meet the {} demand of {} {u} alone; \
                 team [{team}] pools {} = {} {u}.",
                d.skill,
                fmt_amount(d.amount),
                parts.join(" + "),
                fmt_amount(pooled_capacity(members(team), d.skill)),
                u = unit(d.skill)
            )
        }
        Assignment::Infeasible => {
            let available = team_skills(robots.iter().copied());
            let missing: BTreeSet<SkillName> = task.required_skills.difference(&available).copied().collect();
            if !missing.is_empty() {
                format!("No robot has {}; the sub-task cannot be allocated.", fmt_skills(&missing))
            } else {
                let d = task.demand.expect("skill-covered infeasibility comes from demand");
                format!(
                    "All robots together provide {} {u} of {} capacity, short of the {} {u} demand.",
                    fmt_amount(pooled_capacity(robots.iter().copied(), d.skill)),
                    d.skill,
                    fmt_amount(d.amount),
                    u = unit(d.skill)
                )
            }
        }
    }
}

fn classify(task: &SubTask, robots: &[&RobotSpec], team: Vec<RobotId>) -> Assignment {
    let team = Team::new(team).expect("non-empty team");
    if team.len() == 1 {
        return Assignment::SingleRobot(team.lead());
    }
    let someone_covers = robots
        .iter()
        .any(|r| covers(&r.skill_names(), &task.required_skills));
    if someone_covers {
        Assignment::TeamCapacity(team)
    } else {
        Assignment::TeamUnion(team)
    }
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Chooses the robot or team for one sub-task.
pub fn solve_subtask(subtask: &SubTask, robots: &[RobotSpec]) -> CoalitionDecision {
    let all = sorted(robots);
    let decide = |assignment: Assignment| CoalitionDecision {
        subtask_id: subtask.id.clone(),
        rationale: rationale(subtask, &all, &assignment),
        assignment,
    };

    if let Some(r) = all.iter().find(|r| feasible(subtask, &[**r])) {
        return decide(Assignment::SingleRobot(r.id));
    }
    // A minimal team never contains a robot that brings none of the required skills.
    let relevant: Vec<&RobotSpec> = all
        .iter()
        .copied()
        .filter(|r| r.skill_names().iter().any(|s| subtask.required_skills.contains(s)))
        .collect();
    if !feasible(subtask, &relevant) {
        return decide(Assignment::Infeasible);
    }
    for size in 2..=relevant.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let team: Vec<&RobotSpec> = idx.iter().map(|&i| relevant[i]).collect();
            if feasible(subtask, &team) {
                let ids = team.iter().map(|r| r.id).collect();
                return decide(classify(subtask, &all, ids));
            }
            if !next_combination(&mut idx, relevant.len()) {
                break;
            }
        }
    }
    unreachable!("the full relevant set is feasible")
}

/// Exhaustive reference solver over all non-empty robot subsets.
pub fn brute_force_solve(subtask: &SubTask, robots: &[RobotSpec]) -> Result<CoalitionDecision, CoalitionError> {
    if robots.len() > BRUTE_FORCE_LIMIT {
        return Err(CoalitionError::TooManyRobots(robots.len()));
    }
    let all = sorted(robots);
    let mut best: Option<(usize, Vec<RobotId>)> = None;
    for mask in 1u32..(1 << all.len()) {
        let team: Vec<&RobotSpec> = (0..all.len()).filter(|i| mask & (1 << i) != 0).map(|i| all[i]).collect();
        if !feasible(subtask, &team) {
            continue;
        }
        let key = (team.len(), team.iter().map(|r| r.id).collect::<Vec<_>>());
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    let assignment = match best {
        Some((_, ids)) => classify(subtask, &all, ids),
        None => Assignment::Infeasible,
    };
    Ok(CoalitionDecision {
        subtask_id: subtask.id.clone(),
        rationale: rationale(subtask, &all, &assignment),
        assignment,
    })
}

/// One decision per sub-task, in decomposition order.
pub fn form_policy(decomposition: &Decomposition, robots: &[RobotSpec]) -> CoalitionPolicy {
    CoalitionPolicy {
        decisions: decomposition
            .subtasks
            .iter()
            .map(|t| solve_subtask(t, robots))
            .collect(),
    }
}

/// Lays out sub-tasks with their teams as a plan.
///
/// Temporal orders become consecutive blocks of a top-level `seq`. Inside one
/// order, sub-tasks are grouped into chains of transitively overlapping teams;
/// a single chain runs sequentially in source order, several chains run as the
/// branches of one `par`.
fn build_plan(decomposition: &Decomposition, teams: &[Team]) -> PlanAst {
    let mut top = Vec::new();
    let index_of = |task: &SubTask| {
        decomposition
            .subtasks
            .iter()
            .position(|t| t.id == task.id)
            .expect("task from this decomposition")
    };
    for tasks in decomposition.by_phase().into_values() {
        let idx: Vec<usize> = tasks.iter().map(|t| index_of(t)).collect();
        let mut chains: Vec<(BTreeSet<RobotId>, Vec<usize>)> = Vec::new();
        for &i in &idx {
            let mine: BTreeSet<RobotId> = teams[i].members().iter().copied().collect();
            let (overlapping, rest): (Vec<_>, Vec<_>) =
                chains.drain(..).partition(|(robots, _)| !robots.is_disjoint(&mine));
            chains = rest;
            let mut robots = mine;
            let mut members = Vec::new();
            for (r, m) in overlapping {
                robots.extend(r);
                members.extend(m);
            }
            members.push(i);
            members.sort_unstable();
            chains.push((robots, members));
        }
        chains.sort_by_key(|(_, m)| m[0]);
        let leaf = |i: usize| Node::assign(teams[i].clone(), decomposition.subtasks[i].actions.clone());
        if chains.len() == 1 {
            top.extend(chains[0].1.iter().map(|&i| leaf(i)));
        } else {
            let branches = chains
                .iter()
                .map(|(_, m)| {
                    if m.len() == 1 {
                        leaf(m[0])
                    } else {
                        Node::Seq(m.iter().map(|&i| leaf(i)).collect())
                    }
                })
                .collect();
            top.push(Node::Par(branches));
        }
    }
    PlanAst::new(Node::Seq(top))
}

/// Turns a feasible policy into an executable plan.
pub fn allocate(decomposition: &Decomposition, policy: &CoalitionPolicy) -> Result<PlanAst, CoalitionError> {
    if !policy.matches(decomposition) {
        return Err(CoalitionError::PolicyMismatch);
    }
    let teams = policy
        .decisions
        .iter()
        .map(|d| d.assignment.team().ok_or_else(|| CoalitionError::InfeasiblePlan(d.subtask_id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(build_plan(decomposition, &teams))
}

/// Baseline: every sub-task goes to one uniformly chosen robot, ignoring skills.
pub fn random_allocate(decomposition: &Decomposition, robots: &[RobotSpec], seed: u64) -> PlanAst {
    let all = sorted(robots);
    assert!(!all.is_empty(), "random allocation needs at least one robot");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let teams: Vec<Team> = decomposition
        .subtasks
        .iter()
        .map(|_| Team::single(all[rng.random_range(0..all.len())].id))
        .collect();
    build_plan(decomposition, &teams)
}
