//! Per-task reward bookkeeping and termination.
//!
//! Scores are kept as integer numerators over a fixed per-state
//! denominator. An action that would lower a nondecreasing score (putting a
//! marker back in Harvester, double-seeding a cell in Seeder) ends the
//! episode with the score reached so far instead.

use std::collections::VecDeque;

use super::init::stair_contour;
use super::Task;
use crate::dsl::Action;
use crate::karel::{Direction, EpisodeHook, HookFlow, Pos, WorldState};
use crate::seed::splitmix64;

/// Markers Snake must collect to finish.
pub const SNAKE_TARGET: i32 = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Rules {
    Stair { on_contour: Vec<bool>, goal: Pos },
    Reach { goal: Pos },
    TopOff { marked: Vec<bool> },
    FourCorners { corners: [Pos; 4] },
    /// Harvester and CleanHouse.
    Collect,
    DoorKey { key: Pos, door: Pos, goal: Pos, has_key: bool },
    OneStroke { visited: Vec<bool>, at: Pos },
    Seeder,
    Snake { body: VecDeque<Pos>, food: Pos, stream: u64 },
}

/// Reward state of one episode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskHook {
    score: i32,
    denom: i32,
    rules: Rules,
}

fn pos_at(extra: &[i64], i: usize) -> Pos {
    Pos::new(extra[2 * i] as usize, extra[2 * i + 1] as usize)
}

impl TaskHook {
    pub fn new(task: Task, w0: &WorldState) -> Self {
        let cell = |p: Pos| p.row * w0.width() + p.col;
        let (denom, rules) = match task {
            Task::StairClimber => {
                let mut on_contour = vec![false; w0.height() * w0.width()];
                for p in stair_contour(w0.height(), w0.width()) {
                    on_contour[cell(p)] = true;
                }
                (1, Rules::Stair { on_contour, goal: pos_at(&w0.extra, 0) })
            }
            Task::Maze => (1, Rules::Reach { goal: pos_at(&w0.extra, 0) }),
            Task::TopOff => {
                let marked: Vec<bool> = w0.cells().map(|p| w0.markers(p) > 0).collect();
                (marked.iter().filter(|m| **m).count() as i32, Rules::TopOff { marked })
            }
            Task::FourCorners => {
                let (b, r) = (w0.height() - 2, w0.width() - 2);
                (4, Rules::FourCorners { corners: [Pos::new(1, 1), Pos::new(1, r), Pos::new(b, 1), Pos::new(b, r)] })
            }
            Task::Harvester | Task::CleanHouse => (w0.total_markers() as i32, Rules::Collect),
            Task::DoorKey => (
                2,
                Rules::DoorKey {
                    door: pos_at(&w0.extra, 0),
                    key: pos_at(&w0.extra, 1),
                    goal: pos_at(&w0.extra, 2),
                    has_key: false,
                },
            ),
            Task::OneStroke => {
                let mut visited = vec![false; w0.height() * w0.width()];
                visited[cell(w0.agent)] = true;
                // The start cell is visited for free, so it earns nothing.
                (w0.clear_cells().count() as i32 - 1, Rules::OneStroke { visited, at: w0.agent })
            }
            Task::Seeder => (w0.clear_cells().count() as i32, Rules::Seeder),
            Task::Snake => {
                let food = w0.cells().find(|&p| w0.markers(p) > 0).expect("snake state has food");
                (SNAKE_TARGET, Rules::Snake { body: VecDeque::new(), food, stream: w0.extra[0] as u64 })
            }
        };
        TaskHook { score: 0, denom: denom.max(1), rules }
    }

    /// Episodic return so far.
    pub fn value(&self) -> f64 {
        self.score as f64 / self.denom as f64
    }

    pub fn score(&self) -> (i32, i32) {
        (self.score, self.denom)
    }

    fn gain(&mut self) -> HookFlow {
        self.score += 1;
        if self.score >= self.denom {
            HookFlow::Terminate
        } else {
            HookFlow::Continue
        }
    }
}

impl EpisodeHook for TaskHook {
    fn on_action(&mut self, world: &mut WorldState, action: Action, valid: bool) -> HookFlow {
        use HookFlow::{Continue, Terminate};
        let width = world.width();
        let here = world.agent;
        let idx = |p: Pos| p.row * width + p.col;
        let markers = world.markers(here);
        match &mut self.rules {
            Rules::Stair { on_contour, goal } => {
                if action != Action::Move || !valid {
                    return Continue;
                }
                if !on_contour[idx(here)] {
                    self.score = -1;
                    return Terminate;
                }
                if here == *goal {
                    return self.gain();
                }
                Continue
            }
            Rules::Reach { goal } => {
                if action == Action::Move && valid && here == *goal {
                    return self.gain();
                }
                Continue
            }
            Rules::TopOff { marked } => {
                if !valid || !marked[idx(here)] {
                    return Continue;
                }
                match (action, markers) {
                    (Action::PutMarker, 2) => self.gain(),
                    (Action::PutMarker, 3) | (Action::PickMarker, 1) => Terminate,
                    _ => Continue,
                }
            }
            Rules::FourCorners { corners } => {
                if !valid || !corners.contains(&here) {
                    return Continue;
                }
                match (action, markers) {
                    (Action::PutMarker, 1) => self.gain(),
                    (Action::PutMarker, _) | (Action::PickMarker, 0) => Terminate,
                    _ => Continue,
                }
            }
            Rules::Collect => match (action, valid) {
                (Action::PickMarker, true) => self.gain(),
                (Action::PutMarker, true) => Terminate,
                _ => Continue,
            },
            Rules::DoorKey { key, door, goal, has_key } => {
                if !valid {
                    return Continue;
                }
                match action {
                    Action::PickMarker if !*has_key && here == *key => {
                        *has_key = true;
                        world.set_wall(*door, false);
                        self.gain()
                    }
                    Action::Move if *has_key && here == *goal => self.gain(),
                    _ => Continue,
                }
            }
            Rules::OneStroke { visited, at } => {
                if action != Action::Move {
                    return Continue;
                }
                if !valid {
                    // Bumping into the trail ends the episode; border walls do not.
                    let bumped = world.neighbor(here, world.dir).is_some_and(|q| visited[idx(q)]);
                    return if bumped { Terminate } else { Continue };
                }
                world.set_wall(*at, true);
                *at = here;
                visited[idx(here)] = true;
                self.gain()
            }
            Rules::Seeder => match (action, valid, markers) {
                (Action::PutMarker, true, 1) => self.gain(),
                (Action::PutMarker, true, _) | (Action::PickMarker, true, _) => Terminate,
                _ => Continue,
            },
            Rules::Snake { body, food, stream } => {
                if action != Action::Move {
                    return Continue;
                }
                if !valid {
                    let bumped = world.neighbor(here, world.dir).is_some_and(|q| body.contains(&q));
                    return if bumped { Terminate } else { Continue };
                }
                let tail_from = here_prev(here, world.dir);
                body.push_front(tail_from);
                world.set_wall(tail_from, true);
                let mut flow = Continue;
                if here == *food {
                    world.set_markers(here, world.markers(here) - 1);
                    self.score += 1;
                    if self.score >= self.denom {
                        flow = Terminate;
                    }
                }
                while body.len() > self.score as usize {
                    let t = body.pop_back().expect("nonempty");
                    world.set_wall(t, false);
                }
                if here == *food && flow == Continue {
                    let free: Vec<Pos> = world.clear_cells().filter(|&p| p != here).collect();
                    if free.is_empty() {
                        return Terminate;
                    }
                    *stream = splitmix64(*stream);
                    *food = free[(*stream % free.len() as u64) as usize];
                    world.set_markers(*food, world.markers(*food).saturating_add(1).min(crate::karel::MAX_MARKERS));
                }
                flow
            }
        }
    }
}

/// The cell the agent just left after a successful move.
fn here_prev(here: Pos, dir: Direction) -> Pos {
    let (dr, dc) = dir.delta();
    Pos::new(here.row.wrapping_add_signed(-dr), here.col.wrapping_add_signed(-dc))
}
