//! The Karel grid world and program execution.

mod episode;
mod interp;
mod random;
mod world;

pub use episode::{execute, run_episode, EpisodeHook, EpisodeSummary, ExecLimits, HookFlow, NoTask, Terminal, Trajectory};
pub use interp::{CompiledProgram, Executor, Step};
pub use random::{random_world, RandomWorldConfig};
pub use world::{Direction, Pos, WorldState, MAX_MARKERS};
