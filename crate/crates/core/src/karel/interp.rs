//! Bytecode compilation and a step-wise executor.
//!
//! The executor advances a program until it wants to perform its next
//! primitive action and hands that action back to the caller, so the
//! environment is stepped from outside and execution can be paused between
//! actions. Every condition evaluation, loop check and action costs one
//! tick; sequencing and jumps are free.

use smallvec::SmallVec;

use super::world::WorldState;
use crate::dsl::{Action, Cond, Program, Stmt};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Act(Action),
    /// Falls through when `cond` holds, otherwise jumps to `target`.
    Branch { cond: Cond, target: u32 },
    Jump(u32),
    /// Pushes a fresh REPEAT counter.
    Push(u8),
    /// Decrements the top counter and falls through, or pops it and jumps
    /// to `exit` once it reaches zero.
    Loop { exit: u32 },
    End,
}

/// A program lowered to flat bytecode.
#[derive(Clone, Debug)]
pub struct CompiledProgram {
    ops: Vec<Op>,
}

impl CompiledProgram {
    pub fn new(p: &Program) -> Self {
        let mut ops = Vec::new();
        emit(&mut ops, p.body());
        ops.push(Op::End);
        CompiledProgram { ops }
    }
}

fn here(ops: &[Op]) -> u32 {
    ops.len() as u32
}

/// Points the jump at `at` to the next op to be emitted.
fn patch(ops: &mut [Op], at: u32) {
    let to = here(ops);
    match &mut ops[at as usize] {
        Op::Branch { target, .. } => *target = to,
        Op::Jump(t) => *t = to,
        Op::Loop { exit } => *exit = to,
        op => unreachable!("cannot patch {op:?}"),
    }
}

fn emit(ops: &mut Vec<Op>, s: &Stmt) {
    match s {
        Stmt::Act(a) => ops.push(Op::Act(*a)),
        Stmt::Seq(a, b) => {
            emit(ops, a);
            emit(ops, b);
        }
        Stmt::If(c, b) => {
            let br = here(ops);
            ops.push(Op::Branch { cond: *c, target: 0 });
            emit(ops, b);
            patch(ops, br);
        }
        Stmt::IfElse(c, t, e) => {
            let br = here(ops);
            ops.push(Op::Branch { cond: *c, target: 0 });
            emit(ops, t);
            let skip = here(ops);
            ops.push(Op::Jump(0));
            patch(ops, br);
            emit(ops, e);
            patch(ops, skip);
        }
        Stmt::While(c, b) => {
            let head = here(ops);
            ops.push(Op::Branch { cond: *c, target: 0 });
            emit(ops, b);
            ops.push(Op::Jump(head));
            patch(ops, head);
        }
        Stmt::Repeat(n, b) => {
            ops.push(Op::Push(*n));
            let head = here(ops);
            ops.push(Op::Loop { exit: 0 });
            emit(ops, b);
            ops.push(Op::Jump(head));
            patch(ops, head);
        }
    }
}

fn holds(c: Cond, world: &WorldState) -> bool {
    world.perceive(c.percept) != c.negated
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Act(Action),
    Ended,
    /// The tick budget ran out before the next action.
    TickTimeout,
}

/// Ticks spent without an action before the executor starts looking for a
/// repeated control state.
const SPIN_CHECK_AFTER: u64 = 1024;

/// The resumable part of a running program: program counter plus the stack
/// of live REPEAT counters.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Executor {
    pc: u32,
    counters: SmallVec<[u8; 8]>,
}

impl Executor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs until the next action, the end of the program, or tick exhaustion.
    ///
    /// Between actions the world is fixed, so a repeated control state means
    /// the program spins forever; that case is reported as a tick timeout
    /// immediately and `ticks` is set to `max_ticks`.
    pub fn next_action(&mut self, code: &CompiledProgram, world: &WorldState, ticks: &mut u64, max_ticks: u64) -> Step {
        let start = *ticks;
        // Brent's cycle detection over (pc, counters), armed lazily.
        let mut saved: Option<(u32, SmallVec<[u8; 8]>)> = None;
        let (mut power, mut lam) = (1u64, 0u64);
        loop {
            let op = code.ops[self.pc as usize];
            if matches!(op, Op::Act(_) | Op::Branch { .. } | Op::Loop { .. }) {
                if *ticks >= max_ticks {
                    return Step::TickTimeout;
                }
                *ticks += 1;
            }
            match op {
                Op::Act(a) => {
                    self.pc += 1;
                    return Step::Act(a);
                }
                Op::Branch { cond, target } => {
                    self.pc = if holds(cond, world) { self.pc + 1 } else { target };
                }
                Op::Jump(t) => self.pc = t,
                Op::Push(n) => {
                    self.counters.push(n);
                    self.pc += 1;
                }
                Op::Loop { exit } => {
                    let top = self.counters.last_mut().expect("loop without counter");
                    if *top == 0 {
                        self.counters.pop();
                        self.pc = exit;
                    } else {
                        *top -= 1;
                        self.pc += 1;
                    }
                }
                Op::End => return Step::Ended,
            }
            if *ticks - start >= SPIN_CHECK_AFTER {
                match &saved {
                    Some((pc, ctr)) if *pc == self.pc && *ctr == self.counters => {
                        *ticks = max_ticks;
                        return Step::TickTimeout;
                    }
                    _ => {}
                }
                lam += 1;
                if saved.is_none() || lam == power {
                    saved = Some((self.pc, self.counters.clone()));
                    power *= 2;
                    lam = 0;
                }
            }
        }
    }
}
