//! The programmatic-space neighborhood: pick an AST node uniformly, pick one
//! of its nonterminal children uniformly, and regrow that child from the
//! probabilistic grammar. Results outside the feasible set are rejected and
//! the whole mutation is redrawn.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{
    cond_tokens, is_feasible, stmt_tokens, Abort, GenConstraints, Generator, GrammarProbs, Program, Stmt,
    DEFAULT_MAX_REJECTIONS, PROGRAM_TOKENS,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodParams {
    pub k: usize,
    pub max_rejections: usize,
}

impl NeighborhoodParams {
    pub fn new(k: usize) -> Self {
        NeighborhoodParams { k, max_rejections: DEFAULT_MAX_REJECTIONS }
    }
}

/// What a mutation regrows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    /// A statement position, nested `depth` constructs deep, whose block
    /// keeps `block_base` statements once the current occupant is removed.
    Stmt { depth: usize, block_base: usize },
    /// The `b` of a WHILE/IF/IFELSE (regrows negation and percept).
    Cond,
    /// The `h` inside a condition.
    Percept,
    /// The `n` of a REPEAT.
    Count,
    /// The `a` of an action statement.
    Action,
}

/// A regrowable child slot. `path` addresses a statement from the program
/// body: for `Stmt` slots it is the statement being replaced, otherwise the
/// statement that owns the condition, count or action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub path: Vec<u8>,
    pub kind: SlotKind,
}

/// Every AST node that has at least one nonterminal child, each with its
/// regrowable slots, in preorder. Node 0 is the program root.
pub fn mutation_nodes(p: &Program) -> Vec<Vec<Slot>> {
    let body = p.body();
    let mut nodes = vec![vec![Slot { path: vec![], kind: SlotKind::Stmt { depth: 0, block_base: 0 } }]];
    visit(body, &mut Vec::new(), 0, body.block_len(), &mut nodes);
    nodes
}

fn visit(s: &Stmt, path: &mut Vec<u8>, depth: usize, block_total: usize, out: &mut Vec<Vec<Slot>>) {
    let at = |path: &Vec<u8>, i: u8| {
        let mut p = path.clone();
        p.push(i);
        p
    };
    let body_slot = |path: &Vec<u8>, i| Slot { path: at(path, i), kind: SlotKind::Stmt { depth: depth + 1, block_base: 0 } };
    match s {
        Stmt::While(_, b) | Stmt::If(_, b) => {
            out.push(vec![Slot { path: path.clone(), kind: SlotKind::Cond }, body_slot(path, 1)]);
            out.push(vec![Slot { path: path.clone(), kind: SlotKind::Percept }]);
            path.push(1);
            visit(b, path, depth + 1, b.block_len(), out);
            path.pop();
        }
        Stmt::IfElse(_, t, e) => {
            out.push(vec![Slot { path: path.clone(), kind: SlotKind::Cond }, body_slot(path, 1), body_slot(path, 2)]);
            out.push(vec![Slot { path: path.clone(), kind: SlotKind::Percept }]);
            for (i, child) in [(1u8, t), (2, e)] {
                path.push(i);
                visit(child, path, depth + 1, child.block_len(), out);
                path.pop();
            }
        }
        Stmt::Repeat(_, b) => {
            out.push(vec![Slot { path: path.clone(), kind: SlotKind::Count }, body_slot(path, 1)]);
            path.push(1);
            visit(b, path, depth + 1, b.block_len(), out);
            path.pop();
        }
        Stmt::Seq(a, b) => {
            out.push(vec![
                Slot { path: at(path, 0), kind: SlotKind::Stmt { depth, block_base: block_total - a.block_len() } },
                Slot { path: at(path, 1), kind: SlotKind::Stmt { depth, block_base: block_total - b.block_len() } },
            ]);
            for (i, child) in [(0u8, a), (1, b)] {
                path.push(i);
                visit(child, path, depth, block_total, out);
                path.pop();
            }
        }
        Stmt::Act(_) => out.push(vec![Slot { path: path.clone(), kind: SlotKind::Action }]),
    }
}

fn stmt_at<'a>(mut s: &'a Stmt, path: &[u8]) -> &'a Stmt {
    for &i in path {
        s = match (s, i) {
            (Stmt::While(_, b) | Stmt::If(_, b) | Stmt::Repeat(_, b), 1) => b,
            (Stmt::IfElse(_, t, _), 1) => t,
            (Stmt::IfElse(_, _, e), 2) => e,
            (Stmt::Seq(a, _), 0) => a,
            (Stmt::Seq(_, b), 1) => b,
            _ => unreachable!("bad path"),
        };
    }
    s
}

fn stmt_at_mut<'a>(mut s: &'a mut Stmt, path: &[u8]) -> &'a mut Stmt {
    for &i in path {
        s = match (s, i) {
            (Stmt::While(_, b) | Stmt::If(_, b) | Stmt::Repeat(_, b), 1) => b,
            (Stmt::IfElse(_, t, _), 1) => t,
            (Stmt::IfElse(_, _, e), 2) => e,
            (Stmt::Seq(a, _), 0) => a,
            (Stmt::Seq(_, b), 1) => b,
            _ => unreachable!("bad path"),
        };
    }
    s
}

/// Two-level uniform choice: a node, then one of its slots.
pub fn choose_mutation_point<R: Rng + ?Sized>(nodes: &[Vec<Slot>], rng: &mut R) -> (usize, usize) {
    let n = rng.gen_range(0..nodes.len());
    let s = rng.gen_range(0..nodes[n].len());
    (n, s)
}

fn regrow<R: Rng + ?Sized>(
    p: &Program,
    slot: &Slot,
    rng: &mut R,
    probs: &GrammarProbs,
    c: &GenConstraints,
) -> std::result::Result<Program, Abort> {
    let total = PROGRAM_TOKENS + stmt_tokens(p.body());
    let mut body = p.body().clone();
    let target = stmt_at_mut(&mut body, &slot.path);
    let mut gen = Generator {
        rng,
        probs,
        stats: None,
        max_depth: c.max_nesting_depth,
        max_chain: c.max_chain_per_block,
        tokens_left: 0,
    };
    match slot.kind {
        SlotKind::Stmt { depth, block_base } => {
            let others = total - stmt_tokens(target);
            gen.tokens_left = c.max_token_length.checked_sub(others).ok_or(Abort)?;
            let mut block = block_base;
            *target = gen.stmt(depth, &mut block)?;
        }
        SlotKind::Cond => {
            let cond = match target {
                Stmt::While(c, _) | Stmt::If(c, _) | Stmt::IfElse(c, _, _) => c,
                _ => unreachable!("cond slot on non-conditional"),
            };
            let others = total - cond_tokens(cond);
            gen.tokens_left = c.max_token_length.checked_sub(others).ok_or(Abort)?;
            *cond = gen.cond()?;
        }
        SlotKind::Percept => match target {
            Stmt::While(c, _) | Stmt::If(c, _) | Stmt::IfElse(c, _, _) => c.percept = gen.percept(),
            _ => unreachable!("percept slot on non-conditional"),
        },
        SlotKind::Count => match target {
            Stmt::Repeat(n, _) => *n = gen.repeat_count(),
            _ => unreachable!("count slot on non-repeat"),
        },
        SlotKind::Action => match target {
            Stmt::Act(a) => *a = gen.action(),
            _ => unreachable!("action slot on non-action"),
        },
    }
    let out = Program::new(body);
    if is_feasible(&out, c) {
        Ok(out)
    } else {
        Err(Abort)
    }
}

/// One draw from the neighborhood of `p`. May return `p` itself.
pub fn mutate<R: Rng + ?Sized>(p: &Program, rng: &mut R, probs: &GrammarProbs, c: &GenConstraints) -> Result<Program> {
    mutate_with_budget(p, rng, probs, c, DEFAULT_MAX_REJECTIONS)
}

pub fn mutate_with_budget<R: Rng + ?Sized>(
    p: &Program,
    rng: &mut R,
    probs: &GrammarProbs,
    c: &GenConstraints,
    max_rejections: usize,
) -> Result<Program> {
    let nodes = mutation_nodes(p);
    for _ in 0..max_rejections {
        let (n, s) = choose_mutation_point(&nodes, rng);
        if let Ok(q) = regrow(p, &nodes[n][s], rng, probs, c) {
            return Ok(q);
        }
    }
    Err(Error::SamplingBudgetExceeded(max_rejections))
}

/// `K` independent mutations of `p`; duplicates are kept.
pub fn neighborhood<R: Rng + ?Sized>(
    p: &Program,
    params: &NeighborhoodParams,
    rng: &mut R,
    probs: &GrammarProbs,
    c: &GenConstraints,
) -> Result<Vec<Program>> {
    (0..params.k).map(|_| mutate_with_budget(p, rng, probs, c, params.max_rejections)).collect()
}

/// `n`-fold composition of [`mutate`]; `n = 0` returns `p`.
pub fn iterate_mutations<R: Rng + ?Sized>(
    p: &Program,
    n: usize,
    rng: &mut R,
    probs: &GrammarProbs,
    c: &GenConstraints,
) -> Result<Program> {
    let mut cur = p.clone();
    for _ in 0..n {
        cur = mutate(&cur, rng, probs, c)?;
    }
    Ok(cur)
}

/// The statement a slot path points to; exposed for diagnostics.
pub fn slot_target<'a>(p: &'a Program, slot: &Slot) -> &'a Stmt {
    stmt_at(p.body(), &slot.path)
}
