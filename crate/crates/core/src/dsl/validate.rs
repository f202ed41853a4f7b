use std::collections::{BTreeMap, BTreeSet};

use super::{Node, PlanAst};
use crate::executor::WorldState;
use crate::issue::{IssueKind, ValidationIssue};
use crate::model::{RobotId, RobotSpec, SkillName};

fn kind_name(node: &Node) -> &'static str {
    match node {
        Node::Seq(_) => "seq",
        Node::Par(_) => "par",
        Node::Assign(_) => "assign",
    }
}

struct Checker<'a> {
    robots: BTreeMap<RobotId, &'a RobotSpec>,
    world: &'a WorldState,
    issues: Vec<ValidationIssue>,
}

impl Checker<'_> {
    fn visit(&mut self, node: &Node, path: &str) {
        match node {
            Node::Seq(children) | Node::Par(children) => {
                if children.is_empty() {
                    self.issues.push(ValidationIssue::warning(
                        IssueKind::EmptyBlock,
                        path,
                        format!("empty {} block", kind_name(node)),
                    ));
                }
                if matches!(node, Node::Par(_)) {
                    self.check_concurrency(children, path);
                }
                for (i, child) in children.iter().enumerate() {
                    let child_path = format!("{path}/{}#{i}", kind_name(child));
                    self.visit(child, &child_path);
                }
            }
            Node::Assign(assign) => {
                let mut skills: BTreeSet<SkillName> = BTreeSet::new();
                for member in assign.team.members() {
                    match self.robots.get(member) {
                        Some(spec) => skills.extend(spec.skill_names()),
                        None => self.issues.push(ValidationIssue::error(
                            IssueKind::UnknownRobot,
                            path,
                            format!("unknown robot {member}"),
                        )),
                    }
                }
                for (i, action) in assign.actions.iter().enumerate() {
                    let at = format!("{path}:{i}");
                    if !skills.contains(&action.skill) {
                        self.issues.push(ValidationIssue::error(
                            IssueKind::SkillNotPossessed,
                            &at,
                            format!(
                                "skill not possessed: {} requires {} which team [{}] lacks",
                                action, action.skill, assign.team
                            ),
                        ));
                    }
                    for arg in &action.args {
                        if !self.world.has_entity(arg) {
                            self.issues.push(ValidationIssue::error(
                                IssueKind::UnknownEntity,
                                &at,
                                format!("{action} references unknown object or region `{arg}`"),
                            ));
                        }
                    }
                }
            }
        }
    }

    fn check_concurrency(&mut self, branches: &[Node], path: &str) {
        let mut owner: BTreeMap<RobotId, usize> = BTreeMap::new();
        let mut reported = BTreeSet::new();
        for (i, branch) in branches.iter().enumerate() {
            for robot in branch.robots() {
                match owner.get(&robot) {
                    Some(&first) if reported.insert(robot) => {
                        self.issues.push(ValidationIssue::error(
                            IssueKind::ConcurrentDoubleAssignment,
                            path,
                            format!(
                                "concurrent double-assignment: {robot} appears in branches {first} and {i}"
                            ),
                        ));
                    }
                    Some(_) => {}
                    None => {
                        owner.insert(robot, i);
                    }
                }
            }
        }
    }
}

/// Static checks of a plan against the robot roster and world.
///
/// Errors: unknown robots, a robot in two branches of one `par`, actions
/// outside the assigned team's skill union, arguments naming nothing in the
/// world. Warnings: empty `seq`/`par` blocks.
pub fn validate(ast: &PlanAst, robots: &[RobotSpec], world: &WorldState) -> Vec<ValidationIssue> {
    let mut checker = Checker {
        robots: robots.iter().map(|r| (r.id, r)).collect(),
        world,
        issues: Vec::new(),
    };
    checker.visit(&ast.root, kind_name(&ast.root));
    checker.issues
}
