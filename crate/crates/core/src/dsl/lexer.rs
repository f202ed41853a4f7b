use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Ident(String),
    Number(String),
    Str(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LexError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

/// Splits source into tokens. `#` starts a comment running to end of line.
pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, LexError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| {
            out.push(Spanned {
                tok,
                line: start_line,
                col: start_col,
            })
        };
        match c {
            c if c.is_whitespace() => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '{' | '}' | '(' | ')' | ',' | ';' => {
                bump!();
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    _ => Tok::Semi,
                };
                push(&mut out, tok);
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        None | Some('\n') => {
                            return Err(LexError {
                                message: "unterminated string".into(),
                                line: start_line,
                                col: start_col,
                            })
                        }
                        Some('"') => break,
                        Some('\\') => match bump!() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => {
                                return Err(LexError {
                                    message: "bad escape in string".into(),
                                    line,
                                    col,
                                })
                            }
                        },
                        Some(c) => s.push(c),
                    }
                }
                push(&mut out, Tok::Str(s));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Number(s));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Ident(s));
            }
            other => {
                return Err(LexError {
                    message: format!("unexpected character {other:?}"),
                    line,
                    col,
                })
            }
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_are_skipped_and_positions_tracked() {
        let toks = tokenize("# header\nplan {\n  # note\n}").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![Tok::Ident("plan".into()), Tok::LBrace, Tok::RBrace, Tok::Eof]
        );
        assert_eq!((toks[0].line, toks[0].col), (2, 1));
        assert_eq!((toks[2].line, toks[2].col), (4, 1));
    }

    #[test]
    fn strings_and_numbers() {
        let toks = tokenize(r#"phase 12 demand 7.5 "a \"b\"""#).unwrap();
        assert_eq!(toks[1].tok, Tok::Number("12".into()));
        assert_eq!(toks[3].tok, Tok::Number("7.5".into()));
        assert_eq!(toks[4].tok, Tok::Str("a \"b\"".into()));
    }

    #[test]
    fn stray_character() {
        let err = tokenize("plan { @ }").unwrap_err();
        assert_eq!((err.line, err.col), (1, 8));
    }
}
