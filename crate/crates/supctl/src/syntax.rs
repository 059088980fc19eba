//! Text syntax for guards, updates and certificate atoms.
//!
//! Guard grammar, loosest binding first:
//!
//! ```text
//! expr  := term ('||' term)*
//! term  := factor ('&&' factor)*
//! factor:= '!' factor | '(' expr ')' | atom | 'true' | 'false'
//! atom  := ident op int | ident '@' ident
//! op    := '==' | '!=' | '<' | '<=' | '>' | '>='
//! ```
//!
//! `Automaton@location` atoms are accepted so the global forbidden predicate
//! can mention locations. Update strings have the shapes `c`, `x`, `x+c` and
//! `x-c`, where `x` must be the variable being assigned.

use crate::model::{CmpOp, GuardExpr, Update};

#[derive(Debug, thiserror::Error)]
#[error("parse error at byte {at}: {message}")]
pub struct ParseError {
    pub at: usize,
    pub message: String,
}

fn err<T>(at: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        at,
        message: message.into(),
    })
}

struct Scanner<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Scanner<'a> {
        Scanner { text, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text.as_bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.as_bytes().get(self.pos).copied()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let bytes = self.text.as_bytes();
        let start = self.pos;
        if start >= bytes.len() || !(bytes[start].is_ascii_alphabetic() || bytes[start] == b'_') {
            return None;
        }
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        self.pos = end;
        Some(self.text[start..end].to_string())
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let bytes = self.text.as_bytes();
        let start = self.pos;
        let mut end = start;
        if end < bytes.len() && (bytes[end] == b'-' || bytes[end] == b'+') {
            end += 1;
        }
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end == start || (end == start + 1 && !bytes[start].is_ascii_digit()) {
            return err(start, "expected an integer");
        }
        self.pos = end;
        self.text[start..end]
            .parse()
            .map_err(|e| ParseError {
                at: start,
                message: format!("bad integer: {e}"),
            })
    }
}

pub fn parse_guard(text: &str) -> Result<GuardExpr, ParseError> {
    let mut s = Scanner::new(text);
    let expr = parse_or(&mut s)?;
    s.skip_ws();
    if s.pos != text.len() {
        return err(s.pos, "trailing input after expression");
    }
    Ok(expr)
}

fn parse_or(s: &mut Scanner) -> Result<GuardExpr, ParseError> {
    let mut parts = vec![parse_and(s)?];
    while s.eat("||") {
        parts.push(parse_and(s)?);
    }
    Ok(GuardExpr::or(parts))
}

fn parse_and(s: &mut Scanner) -> Result<GuardExpr, ParseError> {
    let mut parts = vec![parse_factor(s)?];
    while s.eat("&&") {
        parts.push(parse_factor(s)?);
    }
    Ok(GuardExpr::and(parts))
}

fn parse_factor(s: &mut Scanner) -> Result<GuardExpr, ParseError> {
    s.skip_ws();
    if s.eat("(") {
        let inner = parse_or(s)?;
        if !s.eat(")") {
            return err(s.pos, "expected ')'");
        }
        return Ok(inner);
    }
    // A lone '!' negates; careful not to consume the '!' of '!='.
    if s.peek() == Some(b'!') && !s.text[s.pos..].starts_with("!=") {
        s.pos += 1;
        return Ok(GuardExpr::Not(Box::new(parse_factor(s)?)));
    }
    let at = s.pos;
    let name = match s.ident() {
        Some(n) => n,
        None => return err(at, "expected an identifier, 'true', 'false' or '('"),
    };
    match name.as_str() {
        "true" => return Ok(GuardExpr::True),
        "false" => return Ok(GuardExpr::False),
        _ => {}
    }
    if s.eat("@") {
        let at = s.pos;
        let loc = match s.ident() {
            Some(l) => l,
            None => return err(at, "expected a location name after '@'"),
        };
        return Ok(GuardExpr::AtLocation {
            automaton: name,
            location: loc,
        });
    }
    let op = if s.eat("==") {
        CmpOp::Eq
    } else if s.eat("!=") {
        CmpOp::Ne
    } else if s.eat("<=") {
        CmpOp::Le
    } else if s.eat(">=") {
        CmpOp::Ge
    } else if s.eat("<") {
        CmpOp::Lt
    } else if s.eat(">") {
        CmpOp::Gt
    } else {
        return err(s.pos, "expected a comparison operator");
    };
    let value = s.int()?;
    Ok(GuardExpr::Cmp {
        var: name,
        op,
        value,
    })
}

/// Canonical text form, parsed back by [`parse_guard`].
pub fn print_guard(g: &GuardExpr) -> String {
    fn go(g: &GuardExpr, parent_or: bool) -> String {
        match g {
            GuardExpr::True => "true".into(),
            GuardExpr::False => "false".into(),
            GuardExpr::Cmp { var, op, value } => format!("{var} {} {value}", op.symbol()),
            GuardExpr::AtLocation {
                automaton,
                location,
            } => format!("{automaton}@{location}"),
            GuardExpr::Not(inner) => format!("!({})", go(inner, false)),
            GuardExpr::And(parts) => {
                let body = parts
                    .iter()
                    .map(|p| go(p, false))
                    .collect::<Vec<_>>()
                    .join(" && ");
                if parent_or {
                    body
                } else {
                    body
                }
            }
            GuardExpr::Or(parts) => {
                let body = parts
                    .iter()
                    .map(|p| go(p, true))
                    .collect::<Vec<_>>()
                    .join(" || ");
                format!("({body})")
            }
        }
    }
    // Strip one redundant outer parenthesis pair from a top-level Or.
    match g {
        GuardExpr::Or(parts) => parts
            .iter()
            .map(|p| go(p, true))
            .collect::<Vec<_>>()
            .join(" || "),
        _ => go(g, false),
    }
}

/// Parse an update string for variable `var`.
pub fn parse_update(var: &str, text: &str) -> Result<Update, ParseError> {
    let mut s = Scanner::new(text);
    s.skip_ws();
    let upd = if s.peek().map_or(false, |c| c.is_ascii_alphabetic() || c == b'_') {
        let at = s.pos;
        let name = s.ident().unwrap();
        if name != var {
            return err(
                at,
                format!("update for '{var}' references '{name}'; only '{var}' is allowed"),
            );
        }
        if s.eat("+") {
            Update::Add(s.int()?)
        } else if s.eat("-") {
            Update::Sub(s.int()?)
        } else {
            Update::Keep
        }
    } else {
        Update::Const(s.int()?)
    };
    s.skip_ws();
    if s.pos != text.len() {
        return err(s.pos, "trailing input after update");
    }
    Ok(upd)
}

pub fn print_update(var: &str, upd: &Update) -> String {
    match upd {
        Update::Const(c) => format!("{c}"),
        Update::Keep => var.to_string(),
        Update::Add(c) => format!("{var}+{c}"),
        Update::Sub(c) => format!("{var}-{c}"),
    }
}
