//! The ten benchmark tasks: initial states, rewards, and return estimation.

mod hooks;
mod init;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use hooks::{TaskHook, SNAKE_TARGET};
pub use init::{CLEAN_HOUSE_MARKERS, DOOR_KEY_SPLIT_COL};

use crate::dsl::Program;
use crate::karel::{execute, CompiledProgram, ExecLimits, Terminal, WorldState};
use crate::seed::rng_for;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    StairClimber,
    Maze,
    TopOff,
    FourCorners,
    Harvester,
    CleanHouse,
    DoorKey,
    OneStroke,
    Seeder,
    Snake,
}

impl Task {
    pub const ALL: [Task; 10] = [
        Task::StairClimber,
        Task::Maze,
        Task::TopOff,
        Task::FourCorners,
        Task::Harvester,
        Task::CleanHouse,
        Task::DoorKey,
        Task::OneStroke,
        Task::Seeder,
        Task::Snake,
    ];

    /// Lowercase identifier used on the command line and in output files.
    pub fn id(self) -> &'static str {
        match self {
            Task::StairClimber => "stairclimber",
            Task::Maze => "maze",
            Task::TopOff => "topoff",
            Task::FourCorners => "fourcorners",
            Task::Harvester => "harvester",
            Task::CleanHouse => "cleanhouse",
            Task::DoorKey => "doorkey",
            Task::OneStroke => "onestroke",
            Task::Seeder => "seeder",
            Task::Snake => "snake",
        }
    }

    /// `(height, width)` including the border walls.
    pub fn grid_size(self) -> (usize, usize) {
        match self {
            Task::StairClimber | Task::TopOff | Task::FourCorners => (12, 12),
            Task::CleanHouse => (14, 22),
            _ => (8, 8),
        }
    }

    /// Lowest possible return.
    pub fn min_return(self) -> f64 {
        if self == Task::StairClimber {
            -1.0
        } else {
            0.0
        }
    }

    /// Draws one initial state from the task's distribution.
    pub fn sample_initial<R: rand::Rng + ?Sized>(self, rng: &mut R) -> WorldState {
        init::sample(self, rng)
    }

    /// The `index`-th initial state of the stream keyed by `seed`.
    pub fn initial_state(self, seed: u64, index: u64) -> WorldState {
        self.sample_initial(&mut rng_for(seed, self.id(), index))
    }

    /// The first `n` initial states of the stream keyed by `seed`.
    pub fn initial_states(self, seed: u64, n: usize) -> Vec<WorldState> {
        (0..n as u64).map(|i| self.initial_state(seed, i)).collect()
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Task> {
        let key = s.to_ascii_lowercase();
        Task::ALL
            .into_iter()
            .find(|t| t.id() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown task {s:?}")))
    }
}

/// Hand-written programs for six tasks, kept as parser and rollout fixtures.
///
/// Under this crate's world semantics the Harvester and Seeder entries do
/// not solve their tasks; see the README.
pub const REFERENCE_PROGRAMS: [(Task, &str); 6] = [
    (Task::Harvester, "DEF run m( WHILE c( leftIsClear c) w( WHILE c( leftIsClear c) w( REPEAT R=14 r( move pickMarker r) turnRight w) WHILE c( rightIsClear c) w( pickMarker turnRight move turnLeft w) WHILE c( frontIsClear c) w( move w) w) m)"),
    (Task::CleanHouse, "DEF run m( WHILE c( leftIsClear c) w( move turnRight move move w) WHILE c( frontIsClear c) w( turnRight w) WHILE c( noMarkersPresent c) w( move REPEAT R=7 r( turnLeft move pickMarker r) w) move turnLeft m)"),
    (Task::DoorKey, "DEF run m( WHILE c( frontIsClear c) w( move w) turnLeft move WHILE c( noMarkersPresent c) w( turnRight move move w) IF c( leftIsClear c) i( pickMarker move move WHILE c( noMarkersPresent c) w( move turnRight move w) putMarker i) m)"),
    (Task::OneStroke, "DEF run m( IF c( frontIsClear c) i( turnRight i) WHILE c( noMarkersPresent c) w( WHILE c( frontIsClear c) w( turnRight move w) turnLeft IFELSE c( frontIsClear c) i( move turnRight pickMarker move move move i) ELSE e( turnRight move e) w) m)"),
    (Task::Seeder, "DEF run m( turnLeft WHILE c( noMarkersPresent c) w( putMarker REPEAT R=10 r( move r) REPEAT R=5 r( WHILE c( markersPresent c) w( turnLeft move turnRight w) pickMarker r) w) WHILE c( frontIsClear c) w( turnLeft w) m)"),
    (Task::Snake, "DEF run m( turnLeft WHILE c( frontIsClear c) w( move w) WHILE c( rightIsClear c) w( WHILE c( rightIsClear c) w( move turnLeft move IF c( frontIsClear c) i( move move i) turnLeft w) putMarker WHILE c( rightIsClear c) w( putMarker w) turnRight w) m)"),
];

/// A task together with the environment variant it runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: Task,
    /// Invalid actions end the episode instead of being ignored.
    pub crashable: bool,
}

impl TaskSpec {
    pub fn new(task: Task) -> Self {
        TaskSpec { task, crashable: false }
    }

    pub fn crashable(task: Task) -> Self {
        TaskSpec { task, crashable: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpisodeResult {
    #[serde(rename = "return")]
    pub ret: f64,
    pub steps: usize,
    pub terminal: Terminal,
}

/// Runs one episode of a compiled program and scores it.
pub fn rollout_compiled(spec: &TaskSpec, code: &CompiledProgram, s0: &WorldState, limits: &ExecLimits) -> EpisodeResult {
    let mut hook = TaskHook::new(spec.task, s0);
    let mut world = s0.clone();
    let summary = execute(code, &mut world, limits, spec.crashable, &mut hook, None);
    EpisodeResult { ret: hook.value(), steps: summary.actions, terminal: summary.terminal }
}

pub fn rollout(spec: &TaskSpec, p: &Program, s0: &WorldState, limits: &ExecLimits) -> EpisodeResult {
    rollout_compiled(spec, &CompiledProgram::new(p), s0, limits)
}

/// Mean return over `states`.
pub fn evaluate(spec: &TaskSpec, p: &Program, states: &[WorldState], limits: &ExecLimits) -> f64 {
    assert!(!states.is_empty(), "evaluation needs at least one state");
    let code = CompiledProgram::new(p);
    states.iter().map(|s| rollout_compiled(spec, &code, s, limits).ret).sum::<f64>() / states.len() as f64
}

/// A fixed evaluation protocol: task, state set and limits.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub spec: TaskSpec,
    pub states: Vec<WorldState>,
    pub limits: ExecLimits,
}

impl Evaluator {
    pub fn new(spec: TaskSpec, seed: u64, num_states: usize) -> Self {
        Evaluator { spec, states: spec.task.initial_states(seed, num_states), limits: ExecLimits::default() }
    }

    pub fn evaluate(&self, p: &Program) -> f64 {
        evaluate(&self.spec, p, &self.states, &self.limits)
    }

    /// Per-state returns, in state order.
    pub fn returns(&self, p: &Program) -> Vec<f64> {
        let code = CompiledProgram::new(p);
        self.states.iter().map(|s| rollout_compiled(&self.spec, &code, s, &self.limits).ret).collect()
    }
}
