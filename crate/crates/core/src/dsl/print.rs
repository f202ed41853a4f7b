use std::fmt::Write;

use super::{Node, PlanAst};
use crate::model::{Decomposition, Team};

const INDENT: &str = "  ";

fn team_tokens(team: &Team) -> String {
    team.to_string()
}

fn write_node(out: &mut String, node: &Node, depth: usize) {
    let pad = INDENT.repeat(depth);
    match node {
        Node::Seq(children) | Node::Par(children) => {
            let kw = if matches!(node, Node::Seq(_)) { "seq" } else { "par" };
            if children.is_empty() {
                let _ = writeln!(out, "{pad}{kw} {{ }}");
                return;
            }
            let _ = writeln!(out, "{pad}{kw} {{");
            for child in children {
                write_node(out, child, depth + 1);
            }
            let _ = writeln!(out, "{pad}}}");
        }
        Node::Assign(a) => {
            if a.actions.is_empty() {
                let _ = writeln!(out, "{pad}assign {} {{ }}", team_tokens(&a.team));
                return;
            }
            let _ = writeln!(out, "{pad}assign {} {{", team_tokens(&a.team));
            for action in &a.actions {
                let _ = writeln!(out, "{pad}{INDENT}{action};");
            }
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

/// Canonical plan text: one statement per line, two-space indent.
///
/// The root is always written as the single statement of the `plan` body, so
/// parsing the output yields the same tree.
pub fn serialize(ast: &PlanAst) -> String {
    let mut out = String::from("plan {\n");
    write_node(&mut out, &ast.root, 1);
    out.push_str("}\n");
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

/// Canonical `tasks { ... }` text for a decomposition.
pub fn serialize_decomposition(d: &Decomposition) -> String {
    let mut out = String::from("tasks {\n");
    for task in &d.subtasks {
        let _ = write!(out, "{INDENT}subtask {} phase {}", task.id, task.temporal_order);
        if let Some(demand) = task.demand {
            let _ = write!(out, " demand {} {}", demand.skill, demand.amount);
        }
        if !task.description.is_empty() {
            let _ = write!(out, " {}", quote(&task.description));
        }
        out.push_str(" {\n");
        for action in &task.actions {
            let _ = writeln!(out, "{INDENT}{INDENT}{action};");
        }
        let _ = writeln!(out, "{INDENT}}}");
    }
    out.push_str("}\n");
    out
}
