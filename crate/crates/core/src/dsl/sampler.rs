//! Probabilistic grammar sampling with constraint rejection.
//!
//! Expansion is top-down and left-to-right. A partial program that already
//! exceeds a limit can never be completed into a feasible one, so such
//! attempts are abandoned early; this is equivalent to generating the whole
//! program and then rejecting it, and leaves the per-expansion rule
//! frequencies untouched.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ast::{Action, Cond, Percept, Program, Stmt, MAX_REPEAT};
use super::measure::{GenConstraints, PROGRAM_TOKENS};
use crate::{Error, Result};

/// Consecutive rejections tolerated before sampling gives up.
pub const DEFAULT_MAX_REJECTIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StmtRule {
    While,
    If,
    IfElse,
    Repeat,
    Seq,
    Act,
}

impl StmtRule {
    pub const ALL: [StmtRule; 6] =
        [StmtRule::While, StmtRule::If, StmtRule::IfElse, StmtRule::Repeat, StmtRule::Seq, StmtRule::Act];

    pub fn name(self) -> &'static str {
        match self {
            StmtRule::While => "WHILE",
            StmtRule::If => "IF",
            StmtRule::IfElse => "IFELSE",
            StmtRule::Repeat => "REPEAT",
            StmtRule::Seq => "SEQ",
            StmtRule::Act => "ACTION",
        }
    }
}

/// Production-rule probabilities, one distribution per nonterminal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrammarProbs {
    /// Indexed like [`StmtRule::ALL`].
    pub stmt: [f64; 6],
    /// `[plain, negated]`.
    pub cond: [f64; 2],
    /// Indexed like [`Percept::ALL`].
    pub percept: [f64; 5],
    /// Indexed like [`Action::ALL`].
    pub action: [f64; 5],
}

impl Default for GrammarProbs {
    fn default() -> Self {
        GrammarProbs {
            stmt: [0.15, 0.08, 0.04, 0.03, 0.5, 0.2],
            cond: [0.9, 0.1],
            percept: [0.5, 0.15, 0.15, 0.1, 0.1],
            // move, turnLeft, turnRight, putMarker, pickMarker
            action: [0.5, 0.15, 0.15, 0.1, 0.1],
        }
    }
}

impl GrammarProbs {
    /// Probability of each `REPEAT` count; uniform over 0..=19.
    pub fn count(&self) -> [f64; 20] {
        [1.0 / 20.0; 20]
    }

    pub fn validate(&self) -> Result<()> {
        let cats: [(&str, &[f64]); 4] =
            [("stmt", &self.stmt), ("cond", &self.cond), ("percept", &self.percept), ("action", &self.action)];
        for (name, w) in cats {
            let sum: f64 = w.iter().sum();
            if w.iter().any(|x| x.is_nan() || *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("{name} probabilities must be >= 0 and sum to 1, got {w:?}")));
            }
        }
        Ok(())
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let mut u = rng.gen::<f64>();
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // Rounding slack lands on the last category with positive weight.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

/// Raw counts of every production drawn, across accepted and rejected attempts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExpansionStats {
    pub stmt: [u64; 6],
    pub cond: [u64; 2],
    pub count: [u64; 20],
    pub percept: [u64; 5],
    pub action: [u64; 5],
    /// Rule chosen for the program body, once per attempt.
    pub first_stmt: [u64; 6],
    pub attempts: u64,
    pub accepted: u64,
}

#[derive(Debug)]
pub(crate) struct Abort;

pub(crate) struct Generator<'a, R: Rng + ?Sized> {
    pub rng: &'a mut R,
    pub probs: &'a GrammarProbs,
    pub stats: Option<&'a mut ExpansionStats>,
    pub max_depth: usize,
    pub max_chain: usize,
    pub tokens_left: usize,
}

impl<R: Rng + ?Sized> Generator<'_, R> {
    fn spend(&mut self, n: usize) -> std::result::Result<(), Abort> {
        self.tokens_left = self.tokens_left.checked_sub(n).ok_or(Abort)?;
        Ok(())
    }

    fn place(&self, block: &mut usize) -> std::result::Result<(), Abort> {
        *block += 1;
        if *block > self.max_chain {
            Err(Abort)
        } else {
            Ok(())
        }
    }

    fn stmt_rule(&mut self) -> StmtRule {
        let r = StmtRule::ALL[pick(self.rng, &self.probs.stmt)];
        if let Some(s) = self.stats.as_deref_mut() {
            s.stmt[r as usize] += 1;
        }
        r
    }

    pub fn action(&mut self) -> Action {
        let i = pick(self.rng, &self.probs.action);
        if let Some(s) = self.stats.as_deref_mut() {
            s.action[i] += 1;
        }
        Action::ALL[i]
    }

    pub fn percept(&mut self) -> Percept {
        let i = pick(self.rng, &self.probs.percept);
        if let Some(s) = self.stats.as_deref_mut() {
            s.percept[i] += 1;
        }
        Percept::ALL[i]
    }

    pub fn repeat_count(&mut self) -> u8 {
        let n = self.rng.gen_range(0..=MAX_REPEAT);
        if let Some(s) = self.stats.as_deref_mut() {
            s.count[n as usize] += 1;
        }
        n
    }

    /// Expands `b`, charging its tokens.
    pub fn cond(&mut self) -> std::result::Result<Cond, Abort> {
        let negated = pick(self.rng, &self.probs.cond) == 1;
        if let Some(s) = self.stats.as_deref_mut() {
            s.cond[negated as usize] += 1;
        }
        self.spend(if negated { 3 } else { 1 })?;
        Ok(Cond { percept: self.percept(), negated })
    }

    /// Expands `s` inside a block at nesting `depth` that already holds
    /// `*block` statements.
    pub fn stmt(&mut self, depth: usize, block: &mut usize) -> std::result::Result<Stmt, Abort> {
        self.stmt_with_rule(None, depth, block)
    }

    fn stmt_with_rule(
        &mut self,
        rule: Option<StmtRule>,
        depth: usize,
        block: &mut usize,
    ) -> std::result::Result<Stmt, Abort> {
        let rule = rule.unwrap_or_else(|| self.stmt_rule());
        if rule == StmtRule::Seq {
            let a = self.stmt(depth, block)?;
            let b = self.stmt(depth, block)?;
            return Ok(Stmt::seq(a, b));
        }
        self.place(block)?;
        if rule == StmtRule::Act {
            self.spend(1)?;
            return Ok(Stmt::Act(self.action()));
        }
        if depth + 1 > self.max_depth {
            return Err(Abort);
        }
        let inner = depth + 1;
        Ok(match rule {
            StmtRule::While | StmtRule::If => {
                self.spend(5)?;
                let c = self.cond()?;
                let b = self.stmt(inner, &mut 0)?;
                if rule == StmtRule::While {
                    Stmt::while_(c, b)
                } else {
                    Stmt::if_(c, b)
                }
            }
            StmtRule::IfElse => {
                self.spend(8)?;
                let c = self.cond()?;
                let t = self.stmt(inner, &mut 0)?;
                let e = self.stmt(inner, &mut 0)?;
                Stmt::if_else(c, t, e)
            }
            StmtRule::Repeat => {
                self.spend(4)?;
                let n = self.repeat_count();
                Stmt::repeat(n, self.stmt(inner, &mut 0)?)
            }
            StmtRule::Seq | StmtRule::Act => unreachable!(),
        })
    }

    fn program(&mut self) -> std::result::Result<Stmt, Abort> {
        let first = self.stmt_rule();
        if let Some(s) = self.stats.as_deref_mut() {
            s.first_stmt[first as usize] += 1;
        }
        self.stmt_with_rule(Some(first), 0, &mut 0)
    }
}

/// Draws one feasible program from the probabilistic grammar.
pub fn sample_program<R: Rng + ?Sized>(rng: &mut R, probs: &GrammarProbs, c: &GenConstraints) -> Result<Program> {
    sample_program_with_stats(rng, probs, c, None)
}

pub fn sample_program_with_stats<R: Rng + ?Sized>(
    rng: &mut R,
    probs: &GrammarProbs,
    c: &GenConstraints,
    mut stats: Option<&mut ExpansionStats>,
) -> Result<Program> {
    for _ in 0..DEFAULT_MAX_REJECTIONS {
        if let Some(s) = stats.as_deref_mut() {
            s.attempts += 1;
        }
        let mut g = Generator {
            rng: &mut *rng,
            probs,
            stats: stats.as_deref_mut(),
            max_depth: c.max_nesting_depth,
            max_chain: c.max_chain_per_block,
            tokens_left: c.max_token_length.saturating_sub(PROGRAM_TOKENS),
        };
        if let Ok(body) = g.program() {
            if let Some(s) = stats.as_deref_mut() {
                s.accepted += 1;
            }
            let p = Program::new(body);
            debug_assert!(super::measure::is_feasible(&p, c), "{p}");
            return Ok(p);
        }
    }
    Err(Error::SamplingBudgetExceeded(DEFAULT_MAX_REJECTIONS))
}
