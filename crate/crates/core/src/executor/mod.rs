//! Stage-4 interpreter: runs a plan against a symbolic world.
//!
//! Every action costs one tick. Branches of a `par` block advance in lockstep,
//! one action per branch per tick, in source order. A failed precondition is
//! recorded in the trace and leaves the world untouched; execution continues
//! with the next action so executability can be measured over the whole plan.

mod world;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, Node, PlanAst};
use crate::issue::{IssueKind, ValidationIssue};
use crate::model::{pooled_capacity, team_skills, ActionCall, RobotId, RobotSpec, SkillName, Team};

pub use world::{
    load_floorplan, Attr, Attributes, FloorPlanError, ObjectState, ReceptacleEffect, Region, RobotState,
    WorldState, START_LOCATION,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Success,
    PreconditionFailure { reason: String },
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success)
    }

    fn fail(reason: impl Into<String>) -> Self {
        Outcome::PreconditionFailure {
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub tick: u64,
    pub team: Team,
    pub action: ActionCall,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    pub phase_sequence: Vec<BTreeSet<RobotId>>,
    /// Number of actions in the executed plan.
    pub total_actions: usize,
    pub final_world: WorldState,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TraceLine {
    Step(TraceStep),
    Summary {
        phase_sequence: Vec<BTreeSet<RobotId>>,
        total_actions: usize,
        succeeded: usize,
        world_digest: String,
        final_world: WorldState,
    },
}

#[derive(Debug, Error)]
pub enum TraceFormatError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace has no summary record")]
    MissingSummary,
}

impl ExecutionTrace {
    pub fn succeeded(&self) -> usize {
        self.steps.iter().filter(|s| s.outcome.is_success()).count()
    }

    /// One JSON object per step followed by a summary record.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(&TraceLine::Step(step.clone())).expect("step serializes"));
            out.push('\n');
        }
        let summary = TraceLine::Summary {
            phase_sequence: self.phase_sequence.clone(),
            total_actions: self.total_actions,
            succeeded: self.succeeded(),
            world_digest: self.final_world.digest(),
            final_world: self.final_world.clone(),
        };
        out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TraceFormatError> {
        let mut steps = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: TraceLine =
                serde_json::from_str(line).map_err(|source| TraceFormatError::Json { line: i + 1, source })?;
            match parsed {
                TraceLine::Step(step) => steps.push(step),
                TraceLine::Summary {
                    phase_sequence,
                    total_actions,
                    final_world,
                    ..
                } => summary = Some((phase_sequence, total_actions, final_world)),
            }
        }
        let (phase_sequence, total_actions, final_world) = summary.ok_or(TraceFormatError::MissingSummary)?;
        Ok(Self {
            steps,
            phase_sequence,
            total_actions,
            final_world,
        })
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("plan rejected: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidPlan(Vec<ValidationIssue>),
}

fn member_at(world: &WorldState, id: RobotId, place: &str) -> bool {
    world.robot_state.get(&id).is_some_and(|s| s.location == place)
}

fn apply_contents_effects(world: &mut WorldState, receptacle: &str) {
    let Some(r) = world.objects.get(receptacle) else {
        return;
    };
    let attrs: Vec<Attr> = world
        .receptacle_effects
        .iter()
        .filter(|e| e.receptacle_type == r.object_type && (!e.requires_on || r.attributes.is_on))
        .map(|e| e.sets)
        .collect();
    if attrs.is_empty() {
        return;
    }
    for id in world.contents(receptacle) {
        let obj = world.objects.get_mut(&id).expect("content exists");
        for &attr in &attrs {
            obj.attributes.set(attr, true);
        }
    }
}

/// Applies one action for the acting team.
///
/// Preconditions are checked against the whole team; on failure the world is
/// not modified.
pub fn apply_action(world: &mut WorldState, team: &[&RobotSpec], action: &ActionCall) -> Outcome {
    if team.is_empty() {
        return Outcome::fail("no acting robot");
    }
    if !team_skills(team.iter().copied()).contains(&action.skill) {
        return Outcome::fail(format!("team lacks skill {}", action.skill));
    }
    if action.args.len() != action.skill.arity() {
        return Outcome::fail("wrong number of arguments");
    }
    let ids: Vec<RobotId> = team.iter().map(|r| r.id).collect();
    for id in &ids {
        world.robot_state.entry(*id).or_default();
    }
    let target = action.args[0].as_str();
    let all_at = |w: &WorldState, place: &str| ids.iter().all(|&id| member_at(w, id, place));
    let any_at = |w: &WorldState, place: &str| ids.iter().any(|&id| member_at(w, id, place));

    match action.skill {
        SkillName::GoToObject | SkillName::GoToLocation => {
            if !world.has_entity(target) {
                return Outcome::fail(format!("unknown destination `{target}`"));
            }
            for id in &ids {
                world.robot_state.get_mut(id).expect("placed").location = target.to_string();
            }
            Outcome::Success
        }
        SkillName::PickupObject => {
            let Some(obj) = world.objects.get(target) else {
                return Outcome::fail(format!("unknown object `{target}`"));
            };
            if !all_at(world, target) {
                return Outcome::fail(format!("not every team member is at {target}"));
            }
            if let Some(holder) = obj.held_by() {
                return Outcome::fail(format!("{target} is already held by {holder}"));
            }
            if let Some(id) = ids.iter().find(|id| world.robot_state[id].holding.is_some()) {
                return Outcome::fail(format!("{id} already holds something"));
            }
            let mass = obj.mass.unwrap_or(0.0);
            let pooled = pooled_capacity(team.iter().copied(), SkillName::PickupObject);
            if pooled < mass {
                return Outcome::fail(format!(
                    "capacity: {target} weighs {mass} kg but the team can lift {pooled} kg"
                ));
            }
            let lead = ids.iter().min().copied().expect("non-empty team");
            world.objects.get_mut(target).expect("checked").parent_receptacle = Some(lead.to_string());
            world.robot_state.get_mut(&lead).expect("placed").holding = Some(target.to_string());
            Outcome::Success
        }
        SkillName::PutObject => {
            let dest = action.args[1].as_str();
            let Some(obj) = world.objects.get(target) else {
                return Outcome::fail(format!("unknown object `{target}`"));
            };
            let Some(holder) = obj.held_by().filter(|h| ids.contains(h)) else {
                return Outcome::fail(format!("{target} is not held by the team"));
            };
            match world.objects.get(dest) {
                Some(r) if r.is_receptacle && dest != target => {}
                Some(_) => return Outcome::fail(format!("{dest} is not a receptacle")),
                None => return Outcome::fail(format!("unknown receptacle `{dest}`")),
            }
            if !member_at(world, holder, dest) {
                return Outcome::fail(format!("{holder} is not at {dest}"));
            }
            world.objects.get_mut(target).expect("checked").parent_receptacle = Some(dest.to_string());
            world.robot_state.get_mut(&holder).expect("placed").holding = None;
            apply_contents_effects(world, dest);
            Outcome::Success
        }
        SkillName::SwitchOn | SkillName::SwitchOff => {
            let Some(obj) = world.objects.get(target) else {
                return Outcome::fail(format!("unknown object `{target}`"));
            };
            if !obj.togglable {
                return Outcome::fail(format!("{target} cannot be switched"));
            }
            if !any_at(world, target) {
                return Outcome::fail(format!("no team member at {target}"));
            }
            let on = action.skill == SkillName::SwitchOn;
            world.objects.get_mut(target).expect("checked").attributes.is_on = on;
            if on {
                apply_contents_effects(world, target);
            }
            Outcome::Success
        }
        SkillName::OpenObject | SkillName::CloseObject => {
            let Some(obj) = world.objects.get(target) else {
                return Outcome::fail(format!("unknown object `{target}`"));
            };
            if !obj.openable {
                return Outcome::fail(format!("{target} cannot be opened or closed"));
            }
            if !any_at(world, target) {
                return Outcome::fail(format!("no team member at {target}"));
            }
            let open = action.skill == SkillName::OpenObject;
            world.objects.get_mut(target).expect("checked").attributes.is_open = open;
            Outcome::Success
        }
        SkillName::SliceObject => {
            let Some(obj) = world.objects.get(target) else {
                return Outcome::fail(format!("unknown object `{target}`"));
            };
            if !obj.sliceable {
                return Outcome::fail(format!("{target} cannot be sliced"));
            }
            if obj.attributes.is_sliced {
                return Outcome::fail(format!("{target} is already sliced"));
            }
            if !any_at(world, target) {
                return Outcome::fail(format!("no team member at {target}"));
            }
            world.objects.get_mut(target).expect("checked").attributes.is_sliced = true;
            Outcome::Success
        }
        SkillName::CleanObject => {
            if !world.objects.contains_key(target) {
                return Outcome::fail(format!("unknown object `{target}`"));
            }
            if !any_at(world, target) {
                return Outcome::fail(format!("no team member at {target}"));
            }
            world.objects.get_mut(target).expect("checked").attributes.is_washed = true;
            Outcome::Success
        }
        SkillName::BreakObject => {
            let Some(obj) = world.objects.get(target) else {
                return Outcome::fail(format!("unknown object `{target}`"));
            };
            if !obj.breakable {
                return Outcome::fail(format!("{target} cannot be broken"));
            }
            if !any_at(world, target) {
                return Outcome::fail(format!("no team member at {target}"));
            }
            world.objects.get_mut(target).expect("checked").attributes.is_broken = true;
            Outcome::Success
        }
        SkillName::ThrowObject => {
            let Some(obj) = world.objects.get(target) else {
                return Outcome::fail(format!("unknown object `{target}`"));
            };
            let Some(holder) = obj.held_by().filter(|h| ids.contains(h)) else {
                return Outcome::fail(format!("{target} is not held by the team"));
            };
            world.objects.get_mut(target).expect("checked").parent_receptacle = None;
            world.robot_state.get_mut(&holder).expect("placed").holding = None;
            Outcome::Success
        }
        SkillName::Patrol => {
            let Some(region) = world.regions.get(target) else {
                return Outcome::fail(format!("unknown region `{target}`"));
            };
            if !all_at(world, target) {
                return Outcome::fail(format!("not every team member is at {target}"));
            }
            let covered = region.assigned_visibility + pooled_capacity(team.iter().copied(), SkillName::Patrol);
            if covered < region.area {
                return Outcome::fail(format!(
                    "insufficient visibility: {covered} m2 for a {} m2 region",
                    region.area
                ));
            }
            let region = world.regions.get_mut(target).expect("checked");
            region.assigned_visibility = covered;
            region.patrolled = true;
            Outcome::Success
        }
    }
}

type Tick<'a> = Vec<(&'a Team, &'a ActionCall)>;

fn schedule(node: &Node) -> Vec<Tick<'_>> {
    match node {
        Node::Assign(a) => a.actions.iter().map(|act| vec![(&a.team, act)]).collect(),
        Node::Seq(children) => children.iter().flat_map(schedule).collect(),
        Node::Par(children) => {
            let branches: Vec<Vec<Tick<'_>>> = children.iter().map(schedule).collect();
            let len = branches.iter().map(Vec::len).max().unwrap_or(0);
            (0..len)
                .map(|i| {
                    branches
                        .iter()
                        .filter_map(|b| b.get(i))
                        .flat_map(|t| t.iter().copied())
                        .collect()
                })
                .collect()
        }
    }
}

/// Runs `plan` on a copy of `world`.
///
/// Plans with structural errors (unknown robots or entities, concurrent
/// double-assignment) are rejected. Skill-possession errors are allowed
/// through and surface as per-action failures, which is how the random
/// allocation baseline loses executability.
pub fn execute(plan: &PlanAst, world: &WorldState, robots: &[RobotSpec]) -> Result<ExecutionTrace, ExecError> {
    let blocking: Vec<ValidationIssue> = dsl::validate(plan, robots, world)
        .into_iter()
        .filter(|i| i.is_error() && i.kind != IssueKind::SkillNotPossessed)
        .collect();
    if !blocking.is_empty() {
        return Err(ExecError::InvalidPlan(blocking));
    }

    let mut world = world.clone();
    world.place_robots(robots);
    let specs = |team: &Team| -> Vec<&RobotSpec> {
        team.members()
            .iter()
            .filter_map(|id| robots.iter().find(|r| r.id == *id))
            .collect()
    };

    let mut steps = Vec::new();
    let mut phase_sequence = Vec::new();
    let mut tick = 0u64;
    for block in dsl::phase_blocks(plan) {
        phase_sequence.push(block.robots);
        for entries in schedule(block.node) {
            for (team, action) in entries {
                let outcome = apply_action(&mut world, &specs(team), action);
                steps.push(TraceStep {
                    tick,
                    team: team.clone(),
                    action: action.clone(),
                    outcome,
                });
            }
            tick += 1;
        }
    }
    Ok(ExecutionTrace {
        steps,
        phase_sequence,
        total_actions: plan.action_count(),
        final_world: world,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::model::SkillSpec;

    fn robot(id: u32, skills: &[SkillName]) -> RobotSpec {
        RobotSpec::new(RobotId(id), skills.iter().map(|&s| SkillSpec::plain(s)).collect()).unwrap()
    }

    fn with_cap(id: u32, skill: SkillName, cap: f64) -> RobotSpec {
        RobotSpec::new(
            RobotId(id),
            vec![
                SkillSpec::plain(SkillName::GoToObject),
                SkillSpec::plain(SkillName::GoToLocation),
                SkillSpec::with_capacity(skill, cap).unwrap(),
            ],
        )
        .unwrap()
    }

    fn living_room() -> WorldState {
        load_floorplan(
            r#"{"objects": [
                {"id": "DeskLamp", "type": "DeskLamp", "togglable": true, "attributes": {"is_on": true}},
                {"id": "FloorLamp", "type": "FloorLamp", "togglable": true, "attributes": {"is_on": true}},
                {"id": "Television", "type": "Television", "togglable": true},
                {"id": "Couch", "mass": 40},
                {"id": "Microwave", "type": "Microwave", "is_receptacle": true, "togglable": true},
                {"id": "Bread", "mass": 0.3, "sliceable": true}],
              "regions": [{"id": "RegionA", "area": 12}],
              "receptacle_effects": [{"receptacle_type": "Microwave", "sets": "is_heated"}]}"#,
        )
        .unwrap()
    }

    fn at(world: &mut WorldState, id: u32, place: &str) {
        world.robot_state.entry(RobotId(id)).or_default().location = place.to_string();
    }

    #[test]
    fn switch_off_lamp() {
        let mut w = living_room();
        let r = robot(1, &[SkillName::GoToObject, SkillName::SwitchOff]);
        at(&mut w, 1, "DeskLamp");
        let out = apply_action(&mut w, &[&r], &"SwitchOff(DeskLamp)".parse().unwrap());
        assert_eq!(out, Outcome::Success);
        assert!(!w.objects["DeskLamp"].attributes.is_on);
    }

    #[test]
    fn couch_too_heavy() {
        let mut w = living_room();
        let r = with_cap(1, SkillName::PickupObject, 5.0);
        at(&mut w, 1, "Couch");
        let before = w.clone();
        let out = apply_action(&mut w, &[&r], &"PickupObject(Couch)".parse().unwrap());
        match out {
            Outcome::PreconditionFailure { reason } => assert!(reason.starts_with("capacity")),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(w, before);
    }

    #[test]
    fn pooled_patrol_covers_region() {
        let mut w = living_room();
        let team = [
            with_cap(1, SkillName::Patrol, 5.0),
            with_cap(2, SkillName::Patrol, 5.0),
            with_cap(3, SkillName::Patrol, 4.0),
        ];
        let refs: Vec<&RobotSpec> = team.iter().collect();
        for id in 1..=3 {
            at(&mut w, id, "RegionA");
        }
        let out = apply_action(&mut w, &refs, &"Patrol(RegionA)".parse().unwrap());
        assert_eq!(out, Outcome::Success);
        assert!(w.regions["RegionA"].patrolled);
        assert_eq!(w.regions["RegionA"].assigned_visibility, 14.0);
    }

    #[test]
    fn short_patrol_fails_without_side_effects() {
        let mut w = living_room();
        let r = with_cap(1, SkillName::Patrol, 5.0);
        at(&mut w, 1, "RegionA");
        let before = w.clone();
        let out = apply_action(&mut w, &[&r], &"Patrol(RegionA)".parse().unwrap());
        assert!(matches!(out, Outcome::PreconditionFailure { ref reason } if reason.contains("insufficient visibility")));
        assert_eq!(w, before);
    }

    #[test]
    fn team_pickup_lead_holds() {
        let mut w = living_room();
        let a = with_cap(2, SkillName::PickupObject, 25.0);
        let b = with_cap(1, SkillName::PickupObject, 20.0);
        at(&mut w, 1, "Couch");
        at(&mut w, 2, "Couch");
        let out = apply_action(&mut w, &[&a, &b], &"PickupObject(Couch)".parse().unwrap());
        assert_eq!(out, Outcome::Success);
        assert_eq!(w.objects["Couch"].parent_receptacle.as_deref(), Some("robot1"));
        assert_eq!(w.robot_state[&RobotId(1)].holding.as_deref(), Some("Couch"));
    }

    #[test]
    fn microwave_heats_on_switch_on_and_on_put() {
        let mut w = living_room();
        let r = RobotSpec::new(
            RobotId(1),
            vec![
                SkillSpec::plain(SkillName::GoToObject),
                SkillSpec::with_capacity(SkillName::PickupObject, 2.0).unwrap(),
                SkillSpec::plain(SkillName::PutObject),
                SkillSpec::plain(SkillName::SwitchOn),
            ],
        )
        .unwrap();
        let plan = parse(
            "plan { assign robot1 { GoToObject(Bread); PickupObject(Bread); GoToObject(Microwave); \
             PutObject(Bread, Microwave); SwitchOn(Microwave); } }",
        )
        .unwrap();
        let trace = execute(&plan, &w, std::slice::from_ref(&r)).unwrap();
        assert!(trace.steps.iter().all(|s| s.outcome.is_success()), "{:?}", trace.steps);
        assert!(trace.final_world.objects["Bread"].attributes.is_heated);

        w.objects.get_mut("Microwave").unwrap().attributes.is_on = true;
        let plan = parse(
            "plan { assign robot1 { GoToObject(Bread); PickupObject(Bread); GoToObject(Microwave); \
             PutObject(Bread, Microwave); } }",
        )
        .unwrap();
        let trace = execute(&plan, &w, &[r]).unwrap();
        assert!(trace.final_world.objects["Bread"].attributes.is_heated);
    }

    #[test]
    fn three_robot_lights_and_tv() {
        let w = living_room();
        let robots = [
            robot(1, &[SkillName::GoToObject, SkillName::SwitchOff]),
            robot(2, &[SkillName::GoToObject, SkillName::SwitchOff]),
            robot(3, &[SkillName::GoToObject, SkillName::SwitchOn]),
        ];
        let plan = parse(
            "plan { seq {
               par {
                 assign robot1 { GoToObject(DeskLamp); SwitchOff(DeskLamp); }
                 assign robot2 { GoToObject(FloorLamp); SwitchOff(FloorLamp); }
               }
               assign robot3 { GoToObject(Television); SwitchOn(Television); }
             } }",
        )
        .unwrap();
        let trace = execute(&plan, &w, &robots).unwrap();
        let fw = &trace.final_world;
        assert!(!fw.objects["DeskLamp"].attributes.is_on);
        assert!(!fw.objects["FloorLamp"].attributes.is_on);
        assert!(fw.objects["Television"].attributes.is_on);
        let ids = |v: &[u32]| v.iter().map(|&i| RobotId(i)).collect::<BTreeSet<_>>();
        assert_eq!(trace.phase_sequence, vec![ids(&[1, 2]), ids(&[3])]);
        let ticks: Vec<u64> = trace.steps.iter().map(|s| s.tick).collect();
        assert_eq!(ticks, vec![0, 0, 1, 1, 2, 3]);
        assert_eq!(trace.phase_sequence, dsl::phases(&plan));
    }

    #[test]
    fn empty_assign_is_one_phase() {
        let robots = [robot(1, &[SkillName::GoToObject])];
        let plan = parse("plan { assign robot1 { } }").unwrap();
        let trace = execute(&plan, &living_room(), &robots).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.phase_sequence.len(), 1);
    }

    #[test]
    fn par_of_two_single_actions_share_tick_zero() {
        let robots = [robot(1, &[SkillName::GoToObject]), robot(2, &[SkillName::GoToObject])];
        let plan = parse("plan { par { assign robot1 { GoToObject(Couch); } assign robot2 { GoToObject(Bread); } } }")
            .unwrap();
        let trace = execute(&plan, &living_room(), &robots).unwrap();
        assert_eq!(trace.steps.iter().map(|s| s.tick).collect::<Vec<_>>(), vec![0, 0]);
        assert_eq!(trace.phase_sequence.len(), 1);
    }

    #[test]
    fn missing_skill_fails_at_runtime_not_up_front() {
        let robots = [robot(1, &[SkillName::GoToObject])];
        let plan = parse("plan { assign robot1 { GoToObject(Bread); SliceObject(Bread); } }").unwrap();
        let trace = execute(&plan, &living_room(), &robots).unwrap();
        assert_eq!(trace.succeeded(), 1);
        assert_eq!(trace.total_actions, 2);
        assert!(!trace.final_world.objects["Bread"].attributes.is_sliced);
    }

    #[test]
    fn structural_errors_reject_the_plan() {
        let robots = [robot(1, &[SkillName::GoToObject])];
        let plan = parse("plan { assign robot9 { GoToObject(Bread); } }").unwrap();
        assert!(matches!(execute(&plan, &living_room(), &robots), Err(ExecError::InvalidPlan(_))));
    }

    #[test]
    fn trace_jsonl_round_trip() {
        let robots = [robot(1, &[SkillName::GoToObject, SkillName::SwitchOff])];
        let plan = parse("plan { assign robot1 { GoToObject(DeskLamp); SwitchOff(FloorLamp); } }").unwrap();
        let trace = execute(&plan, &living_room(), &robots).unwrap();
        let text = trace.to_jsonl();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("\"outcome\":\"precondition_failure\""));
        assert_eq!(ExecutionTrace::from_jsonl(&text).unwrap(), trace);
    }
}
