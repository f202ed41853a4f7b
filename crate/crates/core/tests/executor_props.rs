use std::path::PathBuf;

use proptest::prelude::*;

use roboplan_core::bench::{load_dataset, task_seed, BenchTask};
use roboplan_core::coalition::{allocate, form_policy, random_allocate};
use roboplan_core::dsl::PlanAst;
use roboplan_core::executor::{apply_action, execute, ExecutionTrace, WorldState};
use roboplan_core::model::{ActionCall, RobotSpec, SkillName};

fn benchmark() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmark")
}

fn plans(task: &BenchTask) -> Vec<PlanAst> {
    let d = task.gt_decomposition.as_ref().unwrap();
    let mut out = vec![allocate(d, &form_policy(d, &task.robots)).unwrap()];
    out.extend((0..5).map(|s| random_allocate(d, &task.robots, task_seed(s, &task.id))));
    out
}

/// Re-applies each traced step and checks outcomes plus the frame property.
fn replay(task: &BenchTask, trace: &ExecutionTrace) -> usize {
    let mut world = task.world.clone();
    world.place_robots(&task.robots);
    let mut failures = 0;
    for step in &trace.steps {
        let team: Vec<&RobotSpec> = task.robots.iter().filter(|r| step.team.contains(r.id)).collect();
        let before = world.digest();
        let outcome = apply_action(&mut world, &team, &step.action);
        assert_eq!(outcome, step.outcome, "{}: tick {}", task.id, step.tick);
        if !outcome.is_success() {
            failures += 1;
            assert_eq!(world.digest(), before, "{}: failed step changed the world", task.id);
        }
    }
    assert_eq!(world.digest(), trace.final_world.digest());
    failures
}

#[test]
fn benchmark_traces_are_reproducible_and_framed() {
    let dataset = load_dataset(&benchmark()).unwrap();
    let mut failures = 0;
    for task in &dataset.tasks {
        for plan in plans(task) {
            let a = execute(&plan, &task.world, &task.robots).unwrap();
            let b = execute(&plan, &task.world, &task.robots).unwrap();
            assert_eq!(a.to_jsonl(), b.to_jsonl(), "{}", task.id);
            failures += replay(task, &a);
        }
    }
    // Random allocations must exercise the failure path.
    assert!(failures > 0);
}

#[test]
fn execution_never_mutates_the_input_world() {
    let dataset = load_dataset(&benchmark()).unwrap();
    for task in &dataset.tasks {
        let before = task.world.digest();
        for plan in plans(task) {
            execute(&plan, &task.world, &task.robots).unwrap();
        }
        assert_eq!(task.world.digest(), before);
    }
}

fn kitchen() -> (WorldState, Vec<RobotSpec>) {
    let dataset = load_dataset(&benchmark()).unwrap();
    let task = dataset.task("compound_11_salad").unwrap();
    (task.world.clone(), task.robots.clone())
}

fn entity_names(world: &WorldState) -> Vec<String> {
    world.objects.keys().cloned().collect()
}

proptest! {
    #[test]
    fn failed_actions_leave_the_world_untouched(
        picks in prop::collection::vec((0usize..13, 0usize..64, 0usize..64, any::<bool>()), 1..40),
    ) {
        let (mut world, robots) = kitchen();
        world.place_robots(&robots);
        let names = entity_names(&world);
        for (skill, a, b, both) in picks {
            let skill = SkillName::ALL[skill];
            let args = if skill.arity() == 2 {
                vec![names[a % names.len()].clone(), names[b % names.len()].clone()]
            } else {
                vec![names[a % names.len()].clone()]
            };
            let action = ActionCall::new(skill, args).unwrap();
            let team: Vec<&RobotSpec> = if both { robots.iter().collect() } else { vec![&robots[a % robots.len()]] };
            let before = world.digest();
            let outcome = apply_action(&mut world, &team, &action);
            if !outcome.is_success() {
                prop_assert_eq!(world.digest(), before);
            }
        }
    }
}
