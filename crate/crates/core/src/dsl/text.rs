//! Canonical token text: `DEF run m( ... m)` with single-space separators.

use std::fmt::{self, Write};

use super::ast::{Action, Cond, Percept, Program, Stmt, MAX_REPEAT};
use crate::error::SyntaxError;

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DEF run m( ")?;
        write_stmt(f, self.body())?;
        f.write_str("m)")
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "not( {} )", self.percept.token())
        } else {
            f.write_str(self.percept.token())
        }
    }
}

// Every statement is written followed by one trailing space.
fn write_stmt<W: Write>(out: &mut W, stmt: &Stmt) -> fmt::Result {
    match stmt {
        Stmt::While(c, b) => {
            write!(out, "WHILE c( {c} c) w( ")?;
            write_stmt(out, b)?;
            out.write_str("w) ")
        }
        Stmt::If(c, b) => {
            write!(out, "IF c( {c} c) i( ")?;
            write_stmt(out, b)?;
            out.write_str("i) ")
        }
        Stmt::IfElse(c, t, e) => {
            write!(out, "IFELSE c( {c} c) i( ")?;
            write_stmt(out, t)?;
            out.write_str("i) ELSE e( ")?;
            write_stmt(out, e)?;
            out.write_str("e) ")
        }
        Stmt::Repeat(n, b) => {
            write!(out, "REPEAT R={n} r( ")?;
            write_stmt(out, b)?;
            out.write_str("r) ")
        }
        Stmt::Seq(a, b) => {
            write_stmt(out, a)?;
            write_stmt(out, b)
        }
        Stmt::Act(a) => write!(out, "{} ", a.token()),
    }
}

/// Canonical one-line text of a program.
pub fn print(p: &Program) -> String {
    p.to_string()
}

/// Parses canonical (or any whitespace-separated) program text.
pub fn parse(text: &str) -> Result<Program, SyntaxError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut parser = Parser { tokens: &tokens, pos: 0 };
    parser.expect(&["DEF"])?;
    parser.expect(&["run"])?;
    parser.expect(&["m("])?;
    let body = parser.block("m)")?;
    if parser.pos != tokens.len() {
        return Err(parser.error(&["end of input"]));
    }
    Ok(Program::new(body))
}

impl std::str::FromStr for Program {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

const STMT_START: [&str; 10] = [
    "WHILE",
    "IF",
    "IFELSE",
    "REPEAT",
    "move",
    "turnLeft",
    "turnRight",
    "putMarker",
    "pickMarker",
    "",
];

struct Parser<'a> {
    tokens: &'a [&'a str],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).copied()
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            position: self.pos,
            expected: expected.iter().filter(|e| !e.is_empty()).map(|e| e.to_string()).collect(),
            found: self.peek().map(str::to_string),
        }
    }

    fn expect(&mut self, expected: &[&str]) -> Result<&'a str, SyntaxError> {
        match self.peek() {
            Some(tok) if expected.contains(&tok) => {
                self.pos += 1;
                Ok(tok)
            }
            _ => Err(self.error(expected)),
        }
    }

    /// One or more statements followed by `close`.
    fn block(&mut self, close: &'static str) -> Result<Stmt, SyntaxError> {
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Some(tok) if tok == close && !stmts.is_empty() => {
                    self.pos += 1;
                    return Ok(Stmt::chain(stmts).expect("non-empty"));
                }
                _ => {
                    let mut expected = STMT_START;
                    if !stmts.is_empty() {
                        expected[9] = close;
                    }
                    stmts.push(self.stmt(&expected)?);
                }
            }
        }
    }

    fn stmt(&mut self, expected: &[&str]) -> Result<Stmt, SyntaxError> {
        let Some(tok) = self.peek() else {
            return Err(self.error(expected));
        };
        if let Some(a) = Action::from_token(tok) {
            self.pos += 1;
            return Ok(Stmt::Act(a));
        }
        match tok {
            "WHILE" => {
                self.pos += 1;
                let c = self.cond()?;
                self.expect(&["w("])?;
                Ok(Stmt::while_(c, self.block("w)")?))
            }
            "IF" => {
                self.pos += 1;
                let c = self.cond()?;
                self.expect(&["i("])?;
                Ok(Stmt::if_(c, self.block("i)")?))
            }
            "IFELSE" => {
                self.pos += 1;
                let c = self.cond()?;
                self.expect(&["i("])?;
                let t = self.block("i)")?;
                self.expect(&["ELSE"])?;
                self.expect(&["e("])?;
                Ok(Stmt::if_else(c, t, self.block("e)")?))
            }
            "REPEAT" => {
                self.pos += 1;
                let n = self.repeat_count()?;
                self.expect(&["r("])?;
                Ok(Stmt::repeat(n, self.block("r)")?))
            }
            _ => Err(self.error(expected)),
        }
    }

    fn repeat_count(&mut self) -> Result<u8, SyntaxError> {
        let n = self
            .peek()
            .and_then(|t| t.strip_prefix("R="))
            .and_then(|n| n.parse::<u8>().ok())
            .filter(|n| *n <= MAX_REPEAT);
        match n {
            Some(n) => {
                self.pos += 1;
                Ok(n)
            }
            None => Err(self.error(&["R=0..R=19"])),
        }
    }

    fn cond(&mut self) -> Result<Cond, SyntaxError> {
        const PERCEPTS: [&str; 5] =
            ["frontIsClear", "leftIsClear", "rightIsClear", "markersPresent", "noMarkersPresent"];
        self.expect(&["c("])?;
        let negated = self.peek() == Some("not(");
        if negated {
            self.pos += 1;
        }
        let h = self.peek().and_then(Percept::from_token).ok_or_else(|| {
            let mut expected = PERCEPTS.to_vec();
            if !negated {
                expected.push("not(");
            }
            self.error(&expected)
        })?;
        self.pos += 1;
        if negated {
            self.expect(&[")"])?;
        }
        self.expect(&["c)"])?;
        Ok(Cond { percept: h, negated })
    }
}
