//! Hill climbing with restarts under a budget of program evaluations.
//!
//! One evaluation scores a candidate on the whole state set. Every call to
//! the objective is charged against the budget, including repeats of a
//! candidate already seen; repeats are answered from a cache so the charge
//! is bookkeeping only.

use std::collections::HashMap;
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{sample_program, GenConstraints, GrammarProbs, Program};
use crate::mutation::{neighborhood, NeighborhoodParams};
use crate::seed::{derive_seed, rng_for};
use crate::tasks::{Evaluator, TaskSpec};
use crate::{Error, Result};

/// A search space: an initial distribution plus a neighborhood function.
pub trait SearchSpace {
    type Candidate: Clone + Eq + Hash;

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::Candidate>;

    fn neighbors<R: Rng + ?Sized>(&self, c: &Self::Candidate, k: usize, rng: &mut R) -> Result<Vec<Self::Candidate>>;
}

/// Programs drawn from the probabilistic grammar, with single-node
/// subtree regrowth as the neighborhood.
#[derive(Clone, Debug, Default)]
pub struct ProgrammaticSpace {
    pub probs: GrammarProbs,
    pub constraints: GenConstraints,
}

impl SearchSpace for ProgrammaticSpace {
    type Candidate = Program;

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Program> {
        sample_program(rng, &self.probs, &self.constraints)
    }

    fn neighbors<R: Rng + ?Sized>(&self, p: &Program, k: usize, rng: &mut R) -> Result<Vec<Program>> {
        neighborhood(p, &NeighborhoodParams::new(k), rng, &self.probs, &self.constraints)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Neighbors generated per step.
    pub k: usize,
    /// Program evaluations available to one record.
    pub budget: u64,
    pub num_states: usize,
    pub seed: u64,
    /// Stop as soon as this return is reached. With the default of 1.0 (the
    /// maximum of every task) the best return and curve are unaffected;
    /// only evaluations that cannot improve anything are skipped.
    pub stop_at: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { k: 250, budget: 1_000_000, num_states: 16, seed: 0, stop_at: Some(1.0) }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.budget == 0 || self.num_states == 0 {
            return Err(Error::InvalidConfig(format!("k, budget and num_states must be >= 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub evaluations: u64,
    pub best_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchRecord<C> {
    pub best: C,
    pub best_return: f64,
    /// Best return so far, recorded at the first evaluation, at every strict
    /// improvement, and once more at the end.
    pub curve: Vec<CurvePoint>,
    /// Climbs started after the first one.
    pub restarts: u64,
    pub evaluations: u64,
    /// Best return of each climb, in order.
    pub climb_returns: Vec<f64>,
}

impl<C> SearchRecord<C> {
    /// Best return after `evaluations` evaluations, or `None` before the first.
    pub fn best_at(&self, evaluations: u64) -> Option<f64> {
        let i = self.curve.partition_point(|pt| pt.evaluations <= evaluations);
        i.checked_sub(1).map(|i| self.curve[i].best_return)
    }
}

/// Entries kept before the evaluation cache is flushed.
const CACHE_LIMIT: usize = 250_000;

/// Charges evaluations against the budget and tracks the best-so-far.
pub struct Tracker<C, F> {
    objective: F,
    budget: u64,
    used: u64,
    cache: HashMap<C, f64>,
    best: Option<(C, f64)>,
    curve: Vec<CurvePoint>,
    stop_at: Option<f64>,
}

impl<C: Clone + Eq + Hash, F: FnMut(&C) -> f64> Tracker<C, F> {
    pub fn new(objective: F, budget: u64, stop_at: Option<f64>) -> Self {
        Tracker { objective, budget, used: 0, cache: HashMap::new(), best: None, curve: Vec::new(), stop_at }
    }

    /// Scores `c`, or returns `None` once the budget is spent.
    pub fn eval(&mut self, c: &C) -> Option<f64> {
        if self.used >= self.budget {
            return None;
        }
        self.used += 1;
        let g = match self.cache.get(c) {
            Some(g) => *g,
            None => {
                let g = (self.objective)(c);
                if self.cache.len() >= CACHE_LIMIT {
                    self.cache.clear();
                }
                self.cache.insert(c.clone(), g);
                g
            }
        };
        if self.best.as_ref().is_none_or(|(_, b)| g > *b) {
            self.best = Some((c.clone(), g));
            self.curve.push(CurvePoint { evaluations: self.used, best_return: g });
        }
        Some(g)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    /// The target return has been reached.
    pub fn done(&self) -> bool {
        matches!((self.stop_at, &self.best), (Some(t), Some((_, b))) if *b >= t)
    }

    pub fn best(&self) -> Option<&(C, f64)> {
        self.best.as_ref()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Climb<C> {
    pub best: C,
    pub best_return: f64,
    pub steps: usize,
}

/// One hill-climbing run from `start`.
///
/// Each step scans the whole neighborhood of the incumbent, keeping the best
/// neighbor that strictly beats it (earliest wins ties), then moves there.
/// The climb ends when no neighbor improves, or when the budget runs out,
/// in which case the best candidate seen so far is returned. `None` means
/// not even `start` could be evaluated.
pub fn climb_from<S, F, R>(
    space: &S,
    start: S::Candidate,
    k: usize,
    tracker: &mut Tracker<S::Candidate, F>,
    rng: &mut R,
) -> Result<Option<Climb<S::Candidate>>>
where
    S: SearchSpace,
    F: FnMut(&S::Candidate) -> f64,
    R: Rng + ?Sized,
{
    let Some(g0) = tracker.eval(&start) else {
        return Ok(None);
    };
    let (mut cur, mut g_cur) = (start, g0);
    let mut steps = 0;
    while !tracker.done() {
        let neighbors = space.neighbors(&cur, k, rng)?;
        let mut pick: Option<(S::Candidate, f64)> = None;
        let mut out_of_budget = false;
        for n in neighbors {
            let Some(g) = tracker.eval(&n) else {
                out_of_budget = true;
                break;
            };
            if g > pick.as_ref().map_or(g_cur, |(_, b)| *b) {
                pick = Some((n, g));
                if tracker.done() {
                    break;
                }
            }
        }
        match pick {
            Some((n, g)) => {
                cur = n;
                g_cur = g;
                steps += 1;
            }
            None => break,
        }
        if out_of_budget {
            break;
        }
    }
    Ok(Some(Climb { best: cur, best_return: g_cur, steps }))
}

/// A climb from a freshly sampled initial candidate.
pub fn hill_climb<S, F, R>(
    space: &S,
    k: usize,
    tracker: &mut Tracker<S::Candidate, F>,
    rng: &mut R,
) -> Result<Option<Climb<S::Candidate>>>
where
    S: SearchSpace,
    F: FnMut(&S::Candidate) -> f64,
    R: Rng + ?Sized,
{
    let start = space.init(rng)?;
    climb_from(space, start, k, tracker, rng)
}

/// Climbs repeatedly from fresh initial candidates until the budget is
/// spent or the target return is reached.
pub fn search_with_restarts<S, F, R>(
    space: &S,
    objective: F,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<SearchRecord<S::Candidate>>
where
    S: SearchSpace,
    F: FnMut(&S::Candidate) -> f64,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut tracker = Tracker::new(objective, cfg.budget, cfg.stop_at);
    let mut climb_returns = Vec::new();
    while !tracker.exhausted() && !tracker.done() {
        match hill_climb(space, cfg.k, &mut tracker, rng)? {
            Some(c) => climb_returns.push(c.best_return),
            None => break,
        }
    }
    let (best, best_return) = tracker.best.clone().expect("budget >= 1 guarantees one evaluation");
    let mut curve = std::mem::take(&mut tracker.curve);
    if curve.last().map(|p| p.evaluations) != Some(tracker.used) {
        curve.push(CurvePoint { evaluations: tracker.used, best_return });
    }
    Ok(SearchRecord {
        best,
        best_return,
        curve,
        restarts: climb_returns.len().saturating_sub(1) as u64,
        evaluations: tracker.used,
        climb_returns,
    })
}

/// Best return of a single climb from `start`, with no restarts.
pub fn g_search<S, F, R>(space: &S, objective: F, start: S::Candidate, cfg: &SearchConfig, rng: &mut R) -> Result<f64>
where
    S: SearchSpace,
    F: FnMut(&S::Candidate) -> f64,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut tracker = Tracker::new(objective, cfg.budget, cfg.stop_at);
    climb_from(space, start, cfg.k, &mut tracker, rng)?;
    Ok(tracker.best.expect("budget >= 1 guarantees one evaluation").1)
}

/// Evaluation states for one record of a task search.
pub fn task_evaluator(spec: TaskSpec, cfg: &SearchConfig) -> Evaluator {
    Evaluator::new(spec, derive_seed(cfg.seed, "states", 0), cfg.num_states)
}

/// One seeded search record on a task in the programmatic space.
pub fn search_task(spec: TaskSpec, space: &ProgrammaticSpace, cfg: &SearchConfig) -> Result<SearchRecord<Program>> {
    let ev = task_evaluator(spec, cfg);
    let mut rng = rng_for(cfg.seed, "search", 0);
    search_with_restarts(space, |p: &Program| ev.evaluate(p), cfg, &mut rng)
}
