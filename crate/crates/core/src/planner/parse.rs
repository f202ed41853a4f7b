use serde::Deserialize;
use thiserror::Error;

use super::Stage;
use crate::coalition::{CoalitionDecision, CoalitionPolicy};
use crate::dsl::{parse, parse_decomposition, PlanAst};
use crate::model::Decomposition;

pub const REFUSAL_MARKER: &str = "INFEASIBLE:";

#[derive(Debug, Clone, PartialEq)]
pub enum StageOutput {
    Decomposition(Decomposition),
    Policy(CoalitionPolicy),
    Plan(PlanAst),
    Refusal(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("could not read the {stage} reply: {reason}")]
pub struct StageParseError {
    pub stage: Stage,
    pub reason: String,
    pub raw: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolicyDoc {
    Wrapped { decisions: Vec<CoalitionDecision> },
    Bare(Vec<CoalitionDecision>),
}

fn refusal(text: &str) -> Option<String> {
    text.lines().find_map(|line| {
        let line = line.trim().trim_start_matches(['*', '`', '>', ' ']);
        line.strip_prefix(REFUSAL_MARKER).map(|r| r.trim().trim_end_matches(['*', '`']).trim().to_string())
    })
}

/// Contents of ``` fenced blocks, in order.
fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(String::new()),
            }
        } else if let Some(block) = current.as_mut() {
            block.push_str(line);
            block.push('\n');
        }
    }
    blocks
}

/// Byte offset one past the brace that closes the one at `open`, skipping
/// string literals and `#` comments.
fn matching_brace(text: &str, open: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut i = open;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Every `keyword {...}` span in `text` where `keyword` starts a word.
fn keyword_blocks<'a>(text: &'a str, keyword: &str) -> Vec<&'a str> {
    let mut spans = Vec::new();
    let mut from = 0;
    while let Some(pos) = text[from..].find(keyword).map(|p| p + from) {
        from = pos + keyword.len();
        let word_start = pos == 0 || !text.as_bytes()[pos - 1].is_ascii_alphanumeric();
        let rest = &text[from..];
        let gap = rest.len() - rest.trim_start().len();
        if !word_start || !rest.trim_start().starts_with('{') {
            continue;
        }
        if let Some(end) = matching_brace(text, from + gap) {
            spans.push(&text[pos..end]);
        }
    }
    spans
}

fn json_values(text: &str) -> Vec<serde_json::Value> {
    let mut values = Vec::new();
    let mut i = 0;
    while let Some(off) = text[i..].find(['{', '[']) {
        let start = i + off;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<serde_json::Value>();
        match stream.next() {
            Some(Ok(v)) => {
                values.push(v);
                i = start + stream.byte_offset();
            }
            _ => i = start + 1,
        }
    }
    values
}

fn try_parse(stage: Stage, candidate: &str) -> Result<StageOutput, String> {
    match stage {
        Stage::Decomposition => {
            let mut last = "no tasks block".to_string();
            for block in keyword_blocks(candidate, "tasks") {
                match parse_decomposition(block) {
                    Ok(d) => return Ok(StageOutput::Decomposition(d)),
                    Err(e) => last = e.to_string(),
                }
            }
            Err(last)
        }
        Stage::Allocation => {
            let mut last = "no plan block".to_string();
            for block in keyword_blocks(candidate, "plan") {
                match parse(block) {
                    Ok(p) => return Ok(StageOutput::Plan(p)),
                    Err(e) => last = e.to_string(),
                }
            }
            Err(last)
        }
        Stage::Coalition => {
            let mut last = "no JSON policy".to_string();
            for value in json_values(candidate) {
                match serde_json::from_value::<PolicyDoc>(value) {
                    Ok(PolicyDoc::Wrapped { decisions } | PolicyDoc::Bare(decisions)) => {
                        return Ok(StageOutput::Policy(CoalitionPolicy { decisions }))
                    }
                    Err(e) => last = format!("JSON is not a policy: {e}"),
                }
            }
            Err(last)
        }
    }
}

/// Reads one stage reply.
///
/// A line starting with `INFEASIBLE:` wins at every stage. Otherwise fenced
/// blocks are tried first, then the whole reply, and the first block that
/// parses for the stage is returned.
pub fn parse_stage_output(stage: Stage, text: &str) -> Result<StageOutput, StageParseError> {
    if let Some(reason) = refusal(text) {
        return Ok(StageOutput::Refusal(reason));
    }
    let mut first_error = None;
    for candidate in fenced_blocks(text).iter().map(String::as_str).chain([text]) {
        match try_parse(stage, candidate) {
            Ok(out) => return Ok(out),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    Err(StageParseError {
        stage,
        reason: first_error.unwrap_or_else(|| "empty reply".into()),
        raw: text.to_string(),
    })
}
