use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Move,
    TurnLeft,
    TurnRight,
    PutMarker,
    PickMarker,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Move,
        Action::TurnLeft,
        Action::TurnRight,
        Action::PutMarker,
        Action::PickMarker,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Action::Move => "move",
            Action::TurnLeft => "turnLeft",
            Action::TurnRight => "turnRight",
            Action::PutMarker => "putMarker",
            Action::PickMarker => "pickMarker",
        }
    }

    pub fn from_token(tok: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.token() == tok)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Percept {
    FrontIsClear,
    LeftIsClear,
    RightIsClear,
    MarkersPresent,
    NoMarkersPresent,
}

impl Percept {
    pub const ALL: [Percept; 5] = [
        Percept::FrontIsClear,
        Percept::LeftIsClear,
        Percept::RightIsClear,
        Percept::MarkersPresent,
        Percept::NoMarkersPresent,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Percept::FrontIsClear => "frontIsClear",
            Percept::LeftIsClear => "leftIsClear",
            Percept::RightIsClear => "rightIsClear",
            Percept::MarkersPresent => "markersPresent",
            Percept::NoMarkersPresent => "noMarkersPresent",
        }
    }

    pub fn from_token(tok: &str) -> Option<Percept> {
        Percept::ALL.into_iter().find(|p| p.token() == tok)
    }
}

/// `h` or `not( h )`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cond {
    pub percept: Percept,
    pub negated: bool,
}

impl Cond {
    pub fn new(percept: Percept) -> Self {
        Cond { percept, negated: false }
    }

    pub fn not(percept: Percept) -> Self {
        Cond { percept, negated: true }
    }
}

/// Largest admissible `REPEAT R=n` count.
pub const MAX_REPEAT: u8 = 19;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    While(Cond, Box<Stmt>),
    If(Cond, Box<Stmt>),
    IfElse(Cond, Box<Stmt>, Box<Stmt>),
    Repeat(u8, Box<Stmt>),
    Seq(Box<Stmt>, Box<Stmt>),
    Act(Action),
}

impl Stmt {
    pub fn while_(cond: Cond, body: Stmt) -> Stmt {
        Stmt::While(cond, Box::new(body))
    }

    pub fn if_(cond: Cond, body: Stmt) -> Stmt {
        Stmt::If(cond, Box::new(body))
    }

    pub fn if_else(cond: Cond, then_body: Stmt, else_body: Stmt) -> Stmt {
        Stmt::IfElse(cond, Box::new(then_body), Box::new(else_body))
    }

    pub fn repeat(count: u8, body: Stmt) -> Stmt {
        Stmt::Repeat(count, Box::new(body))
    }

    pub fn seq(first: Stmt, second: Stmt) -> Stmt {
        Stmt::Seq(Box::new(first), Box::new(second))
    }

    /// Left-folds a non-empty statement list into `Seq` nodes.
    pub fn chain<I: IntoIterator<Item = Stmt>>(stmts: I) -> Option<Stmt> {
        stmts.into_iter().reduce(Stmt::seq)
    }

    /// Statements of the block rooted here, with `Seq` nodes flattened.
    pub fn flatten(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    fn flatten_into<'a>(&'a self, out: &mut Vec<&'a Stmt>) {
        match self {
            Stmt::Seq(a, b) => {
                a.flatten_into(out);
                b.flatten_into(out);
            }
            s => out.push(s),
        }
    }

    /// Number of statements this subtree contributes to its enclosing block.
    pub fn block_len(&self) -> usize {
        match self {
            Stmt::Seq(a, b) => a.block_len() + b.block_len(),
            _ => 1,
        }
    }

    /// Rebuilds the subtree with every block as a left-leaning `Seq` spine.
    pub fn normalized(&self) -> Stmt {
        match self {
            Stmt::Seq(..) => {
                Stmt::chain(self.flatten().into_iter().map(Stmt::normalized)).expect("non-empty block")
            }
            Stmt::While(c, b) => Stmt::while_(*c, b.normalized()),
            Stmt::If(c, b) => Stmt::if_(*c, b.normalized()),
            Stmt::IfElse(c, t, e) => Stmt::if_else(*c, t.normalized(), e.normalized()),
            Stmt::Repeat(n, b) => Stmt::repeat(*n, b.normalized()),
            Stmt::Act(a) => Stmt::Act(*a),
        }
    }

    fn is_normalized(&self) -> bool {
        match self {
            Stmt::Seq(a, b) => !matches!(**b, Stmt::Seq(..)) && a.is_normalized() && b.is_normalized(),
            Stmt::While(_, b) | Stmt::If(_, b) | Stmt::Repeat(_, b) => b.is_normalized(),
            Stmt::IfElse(_, t, e) => t.is_normalized() && e.is_normalized(),
            Stmt::Act(_) => true,
        }
    }
}

/// `DEF run m( s m)`.
///
/// The body is kept in left-normalized form, so derived equality is
/// structural equality modulo `Seq` associativity, which is exactly
/// equality of the canonical token text.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    body: Stmt,
}

impl Program {
    pub fn new(body: Stmt) -> Self {
        if body.is_normalized() {
            Program { body }
        } else {
            Program { body: body.normalized() }
        }
    }

    pub fn body(&self) -> &Stmt {
        &self.body
    }

    pub fn into_body(self) -> Stmt {
        self.body
    }
}

/// Structural program equality.
pub fn equals(p: &Program, q: &Program) -> bool {
    p == q
}
