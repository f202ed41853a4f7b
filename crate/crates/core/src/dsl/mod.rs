//! Straight-line plan language with `seq`, `par` and `assign` blocks.
//!
//! ```text
//! plan {
//!   par {
//!     assign robot1 {
//!       GoToObject(DeskLamp);
//!       SwitchOff(DeskLamp);
//!     }
//!     assign robot2 {
//!       GoToObject(FloorLamp);
//!       SwitchOff(FloorLamp);
//!     }
//!   }
//!   assign robot3 {
//!     GoToObject(Television);
//!     SwitchOn(Television);
//!   }
//! }
//! ```
//!
//! The same lexer also reads the `tasks { subtask ... }` form used to exchange
//! decompositions with the language model.

mod lexer;
mod parser;
mod print;
mod validate;

use std::collections::BTreeSet;

use crate::model::{ActionCall, RobotId, Team};

pub use parser::{parse, parse_decomposition, ParseError, ParseErrorKind};
pub use print::{serialize, serialize_decomposition};
pub use validate::validate;

#[derive(Debug, Clone, PartialEq)]
pub struct Assign {
    pub team: Team,
    pub actions: Vec<ActionCall>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Seq(Vec<Node>),
    Par(Vec<Node>),
    Assign(Assign),
}

impl Node {
    pub fn assign(team: Team, actions: Vec<ActionCall>) -> Self {
        Node::Assign(Assign { team, actions })
    }

    /// Every robot mentioned anywhere below this node.
    pub fn robots(&self) -> BTreeSet<RobotId> {
        let mut out = BTreeSet::new();
        self.collect_robots(&mut out);
        out
    }

    fn collect_robots(&self, out: &mut BTreeSet<RobotId>) {
        match self {
            Node::Seq(children) | Node::Par(children) => {
                children.iter().for_each(|c| c.collect_robots(out))
            }
            Node::Assign(a) => out.extend(a.team.members().iter().copied()),
        }
    }

    pub fn action_count(&self) -> usize {
        match self {
            Node::Seq(children) | Node::Par(children) => {
                children.iter().map(Node::action_count).sum()
            }
            Node::Assign(a) => a.actions.len(),
        }
    }

    /// Assign leaves in source order.
    pub fn assigns(&self) -> Vec<&Assign> {
        let mut out = Vec::new();
        self.collect_assigns(&mut out);
        out
    }

    fn collect_assigns<'a>(&'a self, out: &mut Vec<&'a Assign>) {
        match self {
            Node::Seq(children) | Node::Par(children) => {
                children.iter().for_each(|c| c.collect_assigns(out))
            }
            Node::Assign(a) => out.push(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanAst {
    pub root: Node,
}

impl PlanAst {
    pub fn new(root: Node) -> Self {
        Self { root }
    }

    pub fn action_count(&self) -> usize {
        self.root.action_count()
    }

    pub fn robots(&self) -> BTreeSet<RobotId> {
        self.root.robots()
    }
}

/// One execution phase: the node that runs it and the robots it occupies.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PhaseBlock<'a> {
    pub node: &'a Node,
    pub robots: BTreeSet<RobotId>,
}

/// Flattens the plan into its execution phases.
///
/// Sequential nesting is flattened; every `par` block is one phase whose robot
/// set is the union of its branches; every `assign` reached sequentially is
/// its own phase. An empty `par` occupies nobody and contributes no phase.
pub(crate) fn phase_blocks(ast: &PlanAst) -> Vec<PhaseBlock<'_>> {
    fn walk<'a>(node: &'a Node, out: &mut Vec<PhaseBlock<'a>>) {
        match node {
            Node::Seq(children) => children.iter().for_each(|c| walk(c, out)),
            Node::Par(children) if children.is_empty() => {}
            Node::Par(_) | Node::Assign(_) => out.push(PhaseBlock {
                node,
                robots: node.robots(),
            }),
        }
    }
    let mut out = Vec::new();
    walk(&ast.root, &mut out);
    out
}

/// Ordered robot sets of the plan's execution phases.
pub fn phases(ast: &PlanAst) -> Vec<BTreeSet<RobotId>> {
    phase_blocks(ast).into_iter().map(|b| b.robots).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(ids: &[u32]) -> Node {
        Node::assign(
            Team::new(ids.iter().map(|&i| RobotId(i))).unwrap(),
            vec!["GoToObject(Lamp)".parse().unwrap()],
        )
    }

    fn set(ids: &[u32]) -> BTreeSet<RobotId> {
        ids.iter().map(|&i| RobotId(i)).collect()
    }

    #[test]
    fn sequential_assigns_are_separate_phases() {
        let plan = PlanAst::new(Node::Seq(vec![leaf(&[1]), leaf(&[2])]));
        assert_eq!(phases(&plan), vec![set(&[1]), set(&[2])]);
    }

    #[test]
    fn parallel_then_single() {
        let plan = PlanAst::new(Node::Seq(vec![
            Node::Par(vec![leaf(&[1]), leaf(&[2])]),
            leaf(&[3]),
        ]));
        assert_eq!(phases(&plan), vec![set(&[1, 2]), set(&[3])]);
    }

    #[test]
    fn single_parallel_phase() {
        let plan = PlanAst::new(Node::Par(vec![leaf(&[1]), leaf(&[2]), leaf(&[3])]));
        assert_eq!(phases(&plan), vec![set(&[1, 2, 3])]);
    }

    #[test]
    fn nested_seq_inside_par_is_one_phase() {
        let plan = PlanAst::new(Node::Par(vec![
            Node::Seq(vec![leaf(&[1]), leaf(&[1])]),
            leaf(&[2]),
        ]));
        assert_eq!(phases(&plan), vec![set(&[1, 2])]);
    }

    #[test]
    fn empty_blocks_contribute_no_phase() {
        let plan = PlanAst::new(Node::Seq(vec![Node::Seq(vec![]), Node::Par(vec![]), leaf(&[4])]));
        assert_eq!(phases(&plan), vec![set(&[4])]);
    }
}
