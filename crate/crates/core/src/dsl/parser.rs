use thiserror::Error;

use super::lexer::{tokenize, Spanned, Tok};
use super::{Node, PlanAst};
use crate::model::{
    ActionCall, Decomposition, Demand, ModelError, RobotId, SkillName, SubTask, Team,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("expected one of [{}], found {found}", expected.join(", "))]
    Syntax { expected: Vec<String>, found: String },
    #[error("{0}")]
    Lex(String),
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("malformed team list: {0}")]
    MalformedTeam(String),
    #[error("{0}")]
    Invalid(ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        let toks = tokenize(src).map_err(|e| ParseError {
            kind: ParseErrorKind::Lex(e.message),
            line: e.line,
            col: e.col,
        })?;
        Ok(Self { toks, pos: 0 })
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn advance(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, at: &Spanned, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            line: at.line,
            col: at.col,
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let at = self.peek();
        self.err_at(
            at,
            ParseErrorKind::Syntax {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: at.tok.to_string(),
            },
        )
    }

    fn expect(&mut self, tok: Tok, label: &str) -> PResult<Spanned> {
        if self.peek().tok == tok {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&[label]))
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<Spanned> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.advance()),
            _ => Err(self.unexpected(&[&format!("`{kw}`")])),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, label: &str) -> PResult<(String, Spanned)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.advance()))
            }
            _ => Err(self.unexpected(&[label])),
        }
    }

    fn finish(&mut self) -> PResult<()> {
        if self.peek().tok == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    // plan := "plan" "{" stmt* "}"
    fn plan(&mut self) -> PResult<PlanAst> {
        self.keyword("plan")?;
        let mut body = self.block()?;
        self.finish()?;
        let root = if body.len() == 1 {
            body.pop().unwrap()
        } else {
            Node::Seq(body)
        };
        Ok(PlanAst { root })
    }

    fn block(&mut self) -> PResult<Vec<Node>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        loop {
            if self.peek().tok == Tok::RBrace {
                self.advance();
                return Ok(out);
            }
            out.push(self.stmt()?);
        }
    }

    fn stmt(&mut self) -> PResult<Node> {
        if self.at_keyword("seq") {
            self.advance();
            Ok(Node::Seq(self.block()?))
        } else if self.at_keyword("par") {
            self.advance();
            Ok(Node::Par(self.block()?))
        } else if self.at_keyword("assign") {
            self.advance();
            self.assign()
        } else {
            Err(self.unexpected(&["`seq`", "`par`", "`assign`", "`}`"]))
        }
    }

    // assign := "assign" team "{" (action ";")* "}"
    fn assign(&mut self) -> PResult<Node> {
        let team = self.team()?;
        let actions = self.action_block()?;
        Ok(Node::assign(team, actions))
    }

    // team := ROBOT ("," ROBOT)*
    fn team(&mut self) -> PResult<Team> {
        let start = self.peek().clone();
        let mut ids = Vec::new();
        loop {
            let at = self.peek().clone();
            let token = match &at.tok {
                Tok::Ident(s) => s.clone(),
                _ if ids.is_empty() => {
                    return Err(self.err_at(
                        &at,
                        ParseErrorKind::MalformedTeam(format!("expected a robotN token, found {}", at.tok)),
                    ))
                }
                _ => return Err(self.unexpected(&["robotN"])),
            };
            let id = RobotId::parse_token(&token).map_err(|e| {
                self.err_at(&at, ParseErrorKind::MalformedTeam(e.to_string()))
            })?;
            self.advance();
            ids.push(id);
            if self.peek().tok == Tok::Comma {
                self.advance();
            } else {
                break;
            }
        }
        Team::new(ids).map_err(|e| self.err_at(&start, ParseErrorKind::MalformedTeam(e.to_string())))
    }

    fn action_block(&mut self) -> PResult<Vec<ActionCall>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut actions = Vec::new();
        loop {
            if self.peek().tok == Tok::RBrace {
                self.advance();
                return Ok(actions);
            }
            actions.push(self.action()?);
            self.expect(Tok::Semi, "`;`")?;
        }
    }

    // action := IDENT "(" (IDENT ("," IDENT)*)? ")"
    fn action(&mut self) -> PResult<ActionCall> {
        let (name, at) = match &self.peek().tok {
            Tok::Ident(_) => self.ident("skill name")?,
            _ => return Err(self.unexpected(&["skill name", "`}`"])),
        };
        let skill: SkillName = name
            .parse()
            .map_err(|_| self.err_at(&at, ParseErrorKind::UnknownSkill(name.clone())))?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                let (arg, _) = self.ident("identifier")?;
                args.push(arg);
                if self.peek().tok == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        ActionCall::new(skill, args).map_err(|e| self.err_at(&at, ParseErrorKind::Invalid(e)))
    }

    // tasks := "tasks" "{" subtask* "}"
    fn tasks(&mut self) -> PResult<Decomposition> {
        let start = self.keyword("tasks")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut subtasks = Vec::new();
        loop {
            if self.peek().tok == Tok::RBrace {
                self.advance();
                break;
            }
            subtasks.push(self.subtask()?);
        }
        self.finish()?;
        Decomposition::new(subtasks).map_err(|e| self.err_at(&start, ParseErrorKind::Invalid(e)))
    }

    // subtask := "subtask" IDENT "phase" INT ("demand" SKILL NUMBER)? STRING? "{" (action ";")* "}"
    fn subtask(&mut self) -> PResult<SubTask> {
        let start = self.keyword("subtask")?;
        let (id, _) = self.ident("sub-task id")?;
        self.keyword("phase")?;
        let phase = match &self.peek().tok {
            Tok::Number(n) if n.bytes().all(|b| b.is_ascii_digit()) => {
                let v = n.parse::<u32>().map_err(|_| self.unexpected(&["phase number"]))?;
                self.advance();
                v
            }
            _ => return Err(self.unexpected(&["phase number"])),
        };
        let mut demand = None;
        if self.at_keyword("demand") {
            self.advance();
            let (name, at) = self.ident("skill name")?;
            let skill: SkillName = name
                .parse()
                .map_err(|_| self.err_at(&at, ParseErrorKind::UnknownSkill(name.clone())))?;
            let amount = match &self.peek().tok {
                Tok::Number(n) => match n.parse::<f64>() {
                    Ok(v) => {
                        self.advance();
                        v
                    }
                    Err(_) => return Err(self.unexpected(&["amount"])),
                },
                _ => return Err(self.unexpected(&["amount"])),
            };
            demand = Some(Demand { skill, amount });
        }
        let description = match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.advance();
                s
            }
            _ => String::new(),
        };
        let actions = self.action_block()?;
        SubTask::new(id, description, actions, demand, phase)
            .map_err(|e| self.err_at(&start, ParseErrorKind::Invalid(e)))
    }
}

/// Parses `plan { ... }` source into an AST.
///
/// A body with exactly one statement becomes the root; any other body is
/// wrapped in a `Seq`.
pub fn parse(src: &str) -> Result<PlanAst, ParseError> {
    Parser::new(src)?.plan()
}

/// Parses a `tasks { subtask ... }` block into a decomposition.
pub fn parse_decomposition(src: &str) -> Result<Decomposition, ParseError> {
    Parser::new(src)?.tasks()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> ActionCall {
        s.parse().unwrap()
    }

    fn t(ids: &[u32]) -> Team {
        Team::new(ids.iter().map(|&i| RobotId(i))).unwrap()
    }

    #[test]
    fn minimal_program() {
        let ast = parse("plan { seq { assign robot1 { GoToObject(Lamp); SwitchOff(Lamp); } } }").unwrap();
        assert_eq!(
            ast.root,
            Node::Seq(vec![Node::assign(
                t(&[1]),
                vec![a("GoToObject(Lamp)"), a("SwitchOff(Lamp)")]
            )])
        );
    }

    #[test]
    fn parallel_patrol() {
        let ast = parse(
            "plan { par { assign robot1 { Patrol(RegionA); } assign robot2 { Patrol(RegionB); } } }",
        )
        .unwrap();
        assert_eq!(
            ast.root,
            Node::Par(vec![
                Node::assign(t(&[1]), vec![a("Patrol(RegionA)")]),
                Node::assign(t(&[2]), vec![a("Patrol(RegionB)")]),
            ])
        );
    }

    #[test]
    fn unknown_skill() {
        let err = parse("plan { assign robot1 { Fly(Lamp); } }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownSkill("Fly".into()));
        assert_eq!((err.line, err.col), (1, 24));
    }

    #[test]
    fn team_lists() {
        let ast = parse("plan { assign robot2, robot1 { } }").unwrap();
        assert_eq!(ast.root, Node::assign(t(&[1, 2]), vec![]));
        let err = parse("plan { assign robot1, robot1 { } }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::MalformedTeam(_)));
        let err = parse("plan { assign robot0 { } }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::MalformedTeam(_)));
        let err = parse("plan { assign { } }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::MalformedTeam(_)));
    }

    #[test]
    fn syntax_error_reports_expected_set() {
        let err = parse("plan {\n  loop { }\n}").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
        match err.kind {
            ParseErrorKind::Syntax { expected, found } => {
                assert!(expected.contains(&"`assign`".to_string()));
                assert_eq!(found, "`loop`");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse("plan { assign robot1 { GoToObject(Lamp) } }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax { .. }));
    }

    #[test]
    fn arity_is_enforced() {
        let err = parse("plan { assign robot1 { PutObject(Apple); } }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Invalid(ModelError::Arity { .. })));
    }

    #[test]
    fn multi_statement_body_is_a_seq() {
        let ast = parse("plan { assign robot1 { } assign robot2 { } }").unwrap();
        assert!(matches!(ast.root, Node::Seq(ref c) if c.len() == 2));
        assert_eq!(parse("plan { }").unwrap().root, Node::Seq(vec![]));
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(parse("plan { } plan { }").is_err());
    }

    #[test]
    fn decomposition_block() {
        let src = r#"
        # summary
        tasks {
          subtask lamp_off phase 0 "Turn off the lamp" {
            GoToObject(Lamp);   # walk over
            SwitchOff(Lamp);
          }
          subtask lift phase 1 demand PickupObject 8.5 {
            GoToObject(Box);
            PickupObject(Box);
          }
        }"#;
        let d = parse_decomposition(src).unwrap();
        assert_eq!(d.subtasks.len(), 2);
        assert_eq!(d.subtasks[0].description, "Turn off the lamp");
        assert_eq!(d.subtasks[1].demand.unwrap().amount, 8.5);
        assert_eq!(d.subtasks[1].temporal_order, 1);
    }

    #[test]
    fn decomposition_invariants_surface() {
        let err = parse_decomposition("tasks { subtask a phase 1 { GoToObject(X); } }").unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::Invalid(ModelError::GapInTemporalOrder(0))
        ));
        let err = parse_decomposition("tasks { subtask a phase 0 { } }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Invalid(ModelError::EmptySubTask(_))));
    }
}
