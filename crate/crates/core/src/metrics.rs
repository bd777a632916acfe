//! Landscape metrics: trajectory similarity, behavior-similarity and
//! identity-rate under repeated mutation, and hill-climbing convergence.

use serde::{Deserialize, Serialize};

use crate::dsl::{equals, sample_program, Action, GenConstraints, GrammarProbs, Program};
use crate::karel::{random_world, run_episode, ExecLimits, NoTask, RandomWorldConfig, WorldState};
use crate::mutation::iterate_mutations;
use crate::search::{g_search, task_evaluator, ProgrammaticSpace, SearchConfig, SearchSpace};
use crate::seed::rng_for;
use crate::tasks::{Evaluator, TaskSpec};
use crate::Result;

/// Normal quantile for two-sided 95% intervals.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl MetricEstimate {
    /// Sample mean with a normal-approximation interval.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n > 0, "no samples");
        let mean = xs.iter().sum::<f64>() / n as f64;
        let half = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z95 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        MetricEstimate { mean, ci_low: mean - half, ci_high: mean + half, n }
    }

    /// Proportion with a Wilson score interval.
    pub fn from_successes(successes: usize, n: usize) -> Self {
        assert!(n > 0 && successes <= n);
        let (nf, p) = (n as f64, successes as f64 / n as f64);
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / nf;
        let center = (p + z2 / (2.0 * nf)) / denom;
        let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
        // The clamps absorb rounding at p = 0 and p = 1.
        let ci_low = (center - half).clamp(0.0, p);
        let ci_high = (center + half).clamp(p, 1.0);
        MetricEstimate { mean: p, ci_low, ci_high, n }
    }

    pub fn overlaps(&self, other: &MetricEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Length of the longest common prefix over the longer length.
///
/// Two empty trajectories are identical (1.0); one empty one shares nothing
/// with a nonempty one (0.0).
pub fn rho_similarity(a: &[Action], b: &[Action]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    common as f64 / longest as f64
}

/// Shared settings of the mutation-based estimators.
#[derive(Clone, Debug, Default)]
pub struct MetricContext {
    pub probs: GrammarProbs,
    pub constraints: GenConstraints,
    pub limits: ExecLimits,
    pub seed: u64,
}

/// The metric state set: random maps unrelated to any task.
pub fn metric_states(seed: u64, n: usize, cfg: &RandomWorldConfig) -> Result<Vec<WorldState>> {
    (0..n as u64).map(|i| random_world(&mut rng_for(seed, "metric-states", i), cfg)).collect()
}

/// The `i`-th sampled program and its `n_mut`-step mutation path endpoint.
///
/// Both come from one per-program stream, so paths for different `n_mut`
/// share their first steps and estimates at different `n_mut` are coupled.
fn mutation_pair(ctx: &MetricContext, i: u64, n_mut: usize) -> Result<(Program, Program)> {
    let mut rng = rng_for(ctx.seed, "mutation-path", i);
    let p0 = sample_program(&mut rng, &ctx.probs, &ctx.constraints)?;
    let pn = iterate_mutations(&p0, n_mut, &mut rng, &ctx.probs, &ctx.constraints)?;
    Ok((p0, pn))
}

/// Trajectory similarity of the `i`-th program and its `n_mut`-th mutation,
/// averaged over `states`.
pub fn behavior_sample(ctx: &MetricContext, n_mut: usize, i: u64, states: &[WorldState]) -> Result<f64> {
    assert!(!states.is_empty());
    let (p0, pn) = mutation_pair(ctx, i, n_mut)?;
    let total: f64 = states
        .iter()
        .map(|s| {
            let (a, _) = run_episode(&p0, s, &ctx.limits, false, &mut NoTask);
            let (b, _) = run_episode(&pn, s, &ctx.limits, false, &mut NoTask);
            rho_similarity(&a.actions, &b.actions)
        })
        .sum();
    Ok(total / states.len() as f64)
}

/// One sample per program, so the interval reflects program-to-program spread.
pub fn behavior_similarity(
    ctx: &MetricContext,
    n_mut: usize,
    n_programs: usize,
    states: &[WorldState],
) -> Result<MetricEstimate> {
    let per_program =
        (0..n_programs as u64).map(|i| behavior_sample(ctx, n_mut, i, states)).collect::<Result<Vec<f64>>>()?;
    Ok(MetricEstimate::from_samples(&per_program))
}

/// Whether the `i`-th program's `n_mut`-step mutation path ends where it began.
pub fn identity_sample(ctx: &MetricContext, n_mut: usize, i: u64) -> Result<bool> {
    let (p0, pn) = mutation_pair(ctx, i, n_mut)?;
    Ok(equals(&p0, &pn))
}

pub fn identity_rate(ctx: &MetricContext, n_mut: usize, n_programs: usize) -> Result<MetricEstimate> {
    let mut same = 0;
    for i in 0..n_programs as u64 {
        same += identity_sample(ctx, n_mut, i)? as usize;
    }
    Ok(MetricEstimate::from_successes(same, n_programs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub g_targets: Vec<f64>,
    pub rates: Vec<MetricEstimate>,
}

/// Best return of one climb from the `i`-th sampled program.
///
/// `cfg.k` is the neighborhood size, `cfg.budget` a per-climb cap and
/// `cfg.seed` keys the stream; `ev` fixes the task states.
pub fn g_search_sample(ev: &Evaluator, space: &ProgrammaticSpace, cfg: &SearchConfig, i: u64) -> Result<f64> {
    let mut rng = rng_for(cfg.seed, "convergence", i);
    let start = space.init(&mut rng)?;
    g_search(space, |p: &Program| ev.evaluate(p), start, cfg, &mut rng)
}

pub fn g_search_samples(
    spec: TaskSpec,
    space: &ProgrammaticSpace,
    cfg: &SearchConfig,
    n_inits: usize,
) -> Result<Vec<f64>> {
    let ev = task_evaluator(spec, cfg);
    (0..n_inits as u64).map(|i| g_search_sample(&ev, space, cfg, i)).collect()
}

/// Survival curve of `samples`: the fraction reaching each target.
pub fn convergence_curve(samples: &[f64], g_targets: &[f64]) -> ConvergenceCurve {
    let rates = g_targets
        .iter()
        .map(|&t| MetricEstimate::from_successes(samples.iter().filter(|&&g| g >= t).count(), samples.len()))
        .collect();
    ConvergenceCurve { g_targets: g_targets.to_vec(), rates }
}

/// `n + 1` evenly spaced targets over [0, 1].
pub fn target_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

pub fn convergence_rate(
    spec: TaskSpec,
    space: &ProgrammaticSpace,
    cfg: &SearchConfig,
    n_inits: usize,
    g_targets: &[f64],
) -> Result<ConvergenceCurve> {
    Ok(convergence_curve(&g_search_samples(spec, space, cfg, n_inits)?, g_targets))
}
