//! The Karel DSL: ASTs, canonical text, size measures and the sampler.

mod ast;
mod measure;
mod sampler;
mod text;

pub use ast::{equals, Action, Cond, Percept, Program, Stmt, MAX_REPEAT};
pub use measure::{
    chain_width, check_constraints, depth, is_feasible, stmt_depth, stmt_tokens, token_length, GenConstraints,
    Violation,
};
pub(crate) use measure::{cond_tokens, PROGRAM_TOKENS};
pub use sampler::{
    sample_program, sample_program_with_stats, ExpansionStats, GrammarProbs, StmtRule, DEFAULT_MAX_REJECTIONS,
};
pub(crate) use sampler::{Abort, Generator};
pub use text::{parse, print};
