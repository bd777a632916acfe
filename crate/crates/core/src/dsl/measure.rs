//! Structural size measures and the feasibility check for the search space.

use serde::{Deserialize, Serialize};

use super::ast::{Cond, Program, Stmt};

/// Size limits that define the feasible program set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConstraints {
    /// Maximum nesting of WHILE/IF/IFELSE/REPEAT on any path.
    pub max_nesting_depth: usize,
    /// Maximum statements in any single flattened block.
    pub max_chain_per_block: usize,
    /// Maximum number of tokens in the canonical text, `DEF run m( m)` included.
    pub max_token_length: usize,
}

impl Default for GenConstraints {
    fn default() -> Self {
        GenConstraints { max_nesting_depth: 4, max_chain_per_block: 6, max_token_length: 45 }
    }
}

impl GenConstraints {
    pub fn validate(&self) -> crate::Result<()> {
        if self.max_nesting_depth == 0 || self.max_chain_per_block == 0 || self.max_token_length == 0 {
            return Err(crate::Error::InvalidConfig(format!("all generation limits must be >= 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    Depth(usize),
    Chain(usize),
    TokenLength(usize),
}

pub(crate) const PROGRAM_TOKENS: usize = 4;

pub(crate) fn cond_tokens(c: &Cond) -> usize {
    if c.negated {
        3
    } else {
        1
    }
}

/// Tokens a statement node adds on top of its children.
pub(crate) fn own_tokens(s: &Stmt) -> usize {
    match s {
        // WHILE c( .. c) w( .. w)
        Stmt::While(c, _) | Stmt::If(c, _) => 5 + cond_tokens(c),
        // IFELSE c( .. c) i( .. i) ELSE e( .. e)
        Stmt::IfElse(c, _, _) => 8 + cond_tokens(c),
        // REPEAT R=n r( .. r)
        Stmt::Repeat(..) => 4,
        Stmt::Seq(..) => 0,
        Stmt::Act(_) => 1,
    }
}

pub fn stmt_tokens(s: &Stmt) -> usize {
    own_tokens(s)
        + match s {
            Stmt::While(_, b) | Stmt::If(_, b) | Stmt::Repeat(_, b) => stmt_tokens(b),
            Stmt::IfElse(_, t, e) | Stmt::Seq(t, e) => stmt_tokens(t) + stmt_tokens(e),
            Stmt::Act(_) => 0,
        }
}

pub fn stmt_depth(s: &Stmt) -> usize {
    match s {
        Stmt::While(_, b) | Stmt::If(_, b) | Stmt::Repeat(_, b) => 1 + stmt_depth(b),
        Stmt::IfElse(_, t, e) => 1 + stmt_depth(t).max(stmt_depth(e)),
        Stmt::Seq(a, b) => stmt_depth(a).max(stmt_depth(b)),
        Stmt::Act(_) => 0,
    }
}

fn stmt_chain_width(s: &Stmt) -> usize {
    let block = s.flatten();
    let inner = block
        .iter()
        .map(|st| match st {
            Stmt::While(_, b) | Stmt::If(_, b) | Stmt::Repeat(_, b) => stmt_chain_width(b),
            Stmt::IfElse(_, t, e) => stmt_chain_width(t).max(stmt_chain_width(e)),
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    block.len().max(inner)
}

/// Maximum control-flow nesting; `Seq` and conditions are transparent.
pub fn depth(p: &Program) -> usize {
    stmt_depth(p.body())
}

/// Largest number of statements in any flattened block.
pub fn chain_width(p: &Program) -> usize {
    stmt_chain_width(p.body())
}

/// Token count of the canonical text.
pub fn token_length(p: &Program) -> usize {
    PROGRAM_TOKENS + stmt_tokens(p.body())
}

/// Empty iff the program lies in the feasible set defined by `c`.
pub fn check_constraints(p: &Program, c: &GenConstraints) -> Vec<Violation> {
    let mut out = Vec::new();
    let d = depth(p);
    if d > c.max_nesting_depth {
        out.push(Violation::Depth(d));
    }
    let w = chain_width(p);
    if w > c.max_chain_per_block {
        out.push(Violation::Chain(w));
    }
    let t = token_length(p);
    if t > c.max_token_length {
        out.push(Violation::TokenLength(t));
    }
    out
}

pub fn is_feasible(p: &Program, c: &GenConstraints) -> bool {
    check_constraints(p, c).is_empty()
}
