//! Running a program against a world until a terminal condition.

use serde::{Deserialize, Serialize};

use super::interp::{CompiledProgram, Executor, Step};
use super::world::WorldState;
use crate::dsl::{Action, Program};

/// Per-episode resource limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecLimits {
    pub max_actions: usize,
    pub max_ticks: u64,
    /// Skip ahead when the whole episode state provably cycles. Results are
    /// identical either way; this only saves time.
    pub fast_forward: bool,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits { max_actions: 10_000, max_ticks: 1_000_000, fast_forward: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    ProgramEnded,
    /// The program asked for an action after `max_actions` were performed.
    ActionTimeout,
    TickTimeout,
    Crashed,
    /// The task hook ended the episode.
    TaskTerminated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HookFlow {
    Continue,
    Terminate,
}

/// Task-side logic observed after every performed action.
///
/// Hooks may edit the world (spawning markers, adding walls) and must be
/// deterministic functions of their own state and the world, which is what
/// makes cycle fast-forwarding sound.
pub trait EpisodeHook: Clone + PartialEq {
    fn on_action(&mut self, world: &mut WorldState, action: Action, valid: bool) -> HookFlow;
}

/// The hook of a task-free run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NoTask;

impl EpisodeHook for NoTask {
    fn on_action(&mut self, _: &mut WorldState, _: Action, _: bool) -> HookFlow {
        HookFlow::Continue
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpisodeSummary {
    pub terminal: Terminal,
    pub actions: usize,
    pub ticks: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub actions: Vec<Action>,
    pub terminal: Terminal,
}

struct Snapshot<H> {
    exec: Executor,
    world: WorldState,
    hook: H,
    actions: usize,
    ticks: u64,
}

/// Executes `code` on `world` in place.
///
/// Actions are appended to `record` when given. A crash ends the episode
/// before the hook sees the offending action.
pub fn execute<H: EpisodeHook>(
    code: &CompiledProgram,
    world: &mut WorldState,
    limits: &ExecLimits,
    crashable: bool,
    hook: &mut H,
    mut record: Option<&mut Vec<Action>>,
) -> EpisodeSummary {
    let mut exec = Executor::new();
    let mut ticks = 0u64;
    let mut actions = 0usize;
    let mut detect = limits.fast_forward;
    let mut snap: Option<Snapshot<H>> = None;
    let (mut power, mut lam) = (1usize, 0usize);

    let done = |terminal, actions, ticks| EpisodeSummary { terminal, actions, ticks };
    if world.crashed {
        return done(Terminal::Crashed, 0, 0);
    }
    loop {
        let a = match exec.next_action(code, world, &mut ticks, limits.max_ticks) {
            Step::Ended => return done(Terminal::ProgramEnded, actions, ticks),
            Step::TickTimeout => return done(Terminal::TickTimeout, actions, ticks),
            Step::Act(a) => a,
        };
        if actions >= limits.max_actions {
            return done(Terminal::ActionTimeout, actions, ticks);
        }
        let valid = world.apply_action(a, crashable);
        actions += 1;
        if let Some(r) = record.as_deref_mut() {
            r.push(a);
        }
        if world.crashed {
            return done(Terminal::Crashed, actions, ticks);
        }
        if hook.on_action(world, a, valid) == HookFlow::Terminate {
            return done(Terminal::TaskTerminated, actions, ticks);
        }
        if !detect {
            continue;
        }

        // Brent's algorithm over the full episode state, one step per action.
        lam += 1;
        let cycled = snap
            .as_ref()
            .is_some_and(|s| s.exec == exec && s.world == *world && s.hook == *hook);
        if cycled {
            let s = snap.take().expect("checked above");
            let period = actions - s.actions;
            let period_ticks = ticks - s.ticks;
            let left = limits.max_actions - actions;
            let laps = left / period;
            // Ticks grow by `period_ticks` per lap; leave room for the final
            // partial lap and the probe for one more action.
            let worst = ticks.saturating_add(period_ticks.saturating_mul(laps as u64 + 2));
            if worst <= limits.max_ticks {
                if let Some(r) = record.as_deref_mut() {
                    let start = r.len() - period;
                    for _ in 0..laps {
                        r.extend_from_within(start..start + period);
                    }
                }
                actions += laps * period;
                ticks += laps as u64 * period_ticks;
            }
            detect = false;
            continue;
        }
        if snap.is_none() || lam == power {
            snap = Some(Snapshot { exec: exec.clone(), world: world.clone(), hook: hook.clone(), actions, ticks });
            power *= 2;
            lam = 0;
        }
    }
}

/// Runs `program` from `w0` and returns the trajectory and final world.
pub fn run_episode<H: EpisodeHook>(
    program: &Program,
    w0: &WorldState,
    limits: &ExecLimits,
    crashable: bool,
    hook: &mut H,
) -> (Trajectory, WorldState) {
    let code = CompiledProgram::new(program);
    let mut world = w0.clone();
    let mut actions = Vec::new();
    let summary = execute(&code, &mut world, limits, crashable, hook, Some(&mut actions));
    (Trajectory { actions, terminal: summary.terminal }, world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn run(text: &str, w0: &WorldState, limits: ExecLimits, crashable: bool) -> (Trajectory, WorldState) {
        run_episode(&parse(text).unwrap(), w0, &limits, crashable, &mut NoTask)
    }

    #[test]
    fn ends_normally() {
        let w = WorldState::bordered(5, 5);
        let (t, end) = run("DEF run m( move move m)", &w, ExecLimits::default(), false);
        assert_eq!(t.terminal, Terminal::ProgramEnded);
        assert_eq!(t.actions.len(), 2);
        assert_eq!(end.agent.col, 3);
    }

    #[test]
    fn infinite_turning_hits_the_action_limit() {
        let w = WorldState::bordered(5, 5);
        for ff in [true, false] {
            let limits = ExecLimits { fast_forward: ff, ..ExecLimits::default() };
            let (t, end) = run("DEF run m( WHILE c( noMarkersPresent c) w( turnLeft w) m)", &w, limits, false);
            assert_eq!(t.terminal, Terminal::ActionTimeout);
            assert_eq!(t.actions.len(), 10_000);
            // 10,000 left turns is a whole number of revolutions.
            assert_eq!(end.dir, w.dir);
        }
    }

    #[test]
    fn ending_exactly_at_the_limit_is_not_a_timeout() {
        let w = WorldState::bordered(5, 5);
        let limits = ExecLimits { max_actions: 3, ..ExecLimits::default() };
        let (t, _) = run("DEF run m( turnLeft turnLeft turnLeft m)", &w, limits, false);
        assert_eq!(t.terminal, Terminal::ProgramEnded);
        let (t, _) = run("DEF run m( turnLeft turnLeft turnLeft turnLeft m)", &w, limits, false);
        assert_eq!(t.terminal, Terminal::ActionTimeout);
        assert_eq!(t.actions.len(), 3);
    }

    #[test]
    fn crash_stops_the_episode() {
        let w = WorldState::bordered(3, 4);
        let (t, end) = run("DEF run m( move move turnLeft m)", &w, ExecLimits::default(), true);
        assert_eq!(t.terminal, Terminal::Crashed);
        assert_eq!(t.actions.len(), 2);
        assert!(end.crashed);
        let (t, _) = run("DEF run m( move move turnLeft m)", &w, ExecLimits::default(), false);
        assert_eq!(t.terminal, Terminal::ProgramEnded);
    }

    #[test]
    fn tick_timeout_when_no_progress() {
        let w = WorldState::bordered(5, 5);
        let (t, _) = run("DEF run m( move WHILE c( markersPresent c) w( move w) WHILE c( noMarkersPresent c) w( IF c( markersPresent c) i( move i) w) m)", &w, ExecLimits::default(), false);
        assert_eq!(t.terminal, Terminal::TickTimeout);
        assert_eq!(t.actions.len(), 1);
    }

    #[test]
    fn tick_bound_blocks_fast_forward_when_it_would_bind() {
        // Each lap costs many ticks, so the tick budget binds before the action budget.
        let w = WorldState::bordered(5, 5);
        let text = "DEF run m( WHILE c( noMarkersPresent c) w( REPEAT R=19 r( IF c( markersPresent c) i( move i) r) turnLeft w) m)";
        let limits = ExecLimits { max_ticks: 5_000, ..ExecLimits::default() };
        let (fast, _) = run(text, &w, limits, false);
        let (slow, _) = run(text, &w, ExecLimits { fast_forward: false, ..limits }, false);
        assert_eq!(fast, slow);
        assert_eq!(fast.terminal, Terminal::TickTimeout);
    }
}
