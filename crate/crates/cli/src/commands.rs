//! The four subcommands. Each resolves its settings, computes its
//! documents and returns them without touching the filesystem.

use anyhow::{bail, Context, Result};
use karel_core::dsl::{parse, print, sample_program_with_stats, ExpansionStats, GenConstraints, GrammarProbs, Program};
use karel_core::karel::{ExecLimits, RandomWorldConfig};
use karel_core::metrics::{
    behavior_sample, convergence_curve, g_search_sample, identity_sample, metric_states, target_grid,
    MetricContext, MetricEstimate,
};
use karel_core::search::{search_task, task_evaluator, ProgrammaticSpace, SearchConfig};
use karel_core::seed::rng_for;
use karel_core::tasks::{rollout_compiled, Evaluator, Task, TaskSpec};
use karel_core::karel::CompiledProgram;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{worker_count, IntList, KvFile, Settings, StopAt, TaskList};
use crate::fit::grammar_fit;
use crate::output::{csv_document, jsonl_document, Artifact, Header, Sink};
use crate::{Cli, Command, EvalArgs, GrammarArgs, MetricMode, MetricsArgs, SampleArgs, SearchArgs};

/// Documents to write plus a human-readable summary for standard error.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub report: String,
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(path) => KvFile::load(path)?,
        None => KvFile::default(),
    };
    let settings = Settings::new(file);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(worker_count()?).build()?;
    pool.install(|| match &cli.command {
        Command::Sample(a) => sample(a, settings),
        Command::Eval(a) => eval(a, settings),
        Command::Search(a) => search(a, settings),
        Command::Metrics(a) => metrics(a, settings),
    })
}

fn flag(v: &Option<String>) -> Option<&str> {
    v.as_deref()
}

fn constraints(a: &GrammarArgs, s: &mut Settings) -> Result<GenConstraints> {
    let d = GenConstraints::default();
    Ok(GenConstraints {
        max_nesting_depth: s.get("max_depth", flag(&a.max_depth), d.max_nesting_depth)?,
        max_chain_per_block: s.get("max_chain", flag(&a.max_chain), d.max_chain_per_block)?,
        max_token_length: s.get("max_tokens", flag(&a.max_tokens), d.max_token_length)?,
    })
}

fn header(command: &str, s: Settings) -> Result<Header> {
    Ok(Header { command: command.to_string(), settings: s.finish()? })
}

fn sample(a: &SampleArgs, mut s: Settings) -> Result<Outcome> {
    let n: usize = s.get("n", flag(&a.n), 10)?;
    let seed: u64 = s.get("seed", flag(&a.seed), 0)?;
    let c = constraints(&a.grammar, &mut s)?;
    let with_stats: bool = s.get("stats", flag(&a.stats), false)?;
    let out: String = s.get("out", flag(&a.out), "-".to_string())?;
    let header = header("sample", s)?;

    let probs = GrammarProbs::default();
    let mut rng = rng_for(seed, "sample", 0);
    let mut stats = ExpansionStats::default();
    let mut doc = header.comment_lines();
    for _ in 0..n {
        let p = sample_program_with_stats(&mut rng, &probs, &c, Some(&mut stats))?;
        doc.push_str(&print(&p));
        doc.push('\n');
    }
    let mut report = String::new();
    if with_stats {
        report.push_str(&format!("attempts={} accepted={}\n", stats.attempts, stats.accepted));
        for f in grammar_fit(&stats, &probs) {
            report.push_str(&format!(
                "{:<16} draws={:<8} chi2={:<10.3} df={:<3} p={:.4}\n",
                f.family, f.draws, f.statistic, f.df, f.p_value
            ));
        }
    }
    Ok(Outcome { artifacts: vec![Artifact { sink: Sink::parse(&out), contents: doc }], report })
}

/// Programs in a text file, one per line; blank and `#` lines are skipped.
pub fn read_programs(text: &str) -> Result<Vec<Program>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| parse(l).with_context(|| format!("program on line {}", i + 1)))
        .collect()
}

#[derive(Serialize)]
struct EvalRow {
    program: usize,
    state: String,
    #[serde(rename = "return")]
    ret: f64,
    steps: Option<usize>,
    terminal: Option<karel_core::karel::Terminal>,
}

fn eval(a: &EvalArgs, mut s: Settings) -> Result<Outcome> {
    let path: String = s.get("program", flag(&a.program), String::new())?;
    let task: Task = s.get("task", flag(&a.task), Task::Maze)?;
    let seed: u64 = s.get("seed", flag(&a.seed), 0)?;
    let num_states: usize = s.get("num_states", flag(&a.num_states), 16)?;
    let crashable: bool = s.get("crashable", flag(&a.crashable), false)?;
    let max_actions: usize = s.get("max_actions", flag(&a.max_actions), ExecLimits::default().max_actions)?;
    let out: String = s.get("out", flag(&a.out), "-".to_string())?;
    let header = header("eval", s)?;
    if path.is_empty() {
        bail!("eval needs a program file (--program or `program =` in the config)");
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {path}"))?;
    let programs = read_programs(&text)?;
    if programs.is_empty() {
        bail!("{path} holds no programs");
    }
    if num_states == 0 {
        bail!("num_states must be at least 1");
    }

    let spec = TaskSpec { task, crashable };
    let cfg = SearchConfig { num_states, seed, ..SearchConfig::default() };
    let mut ev = task_evaluator(spec, &cfg);
    ev.limits.max_actions = max_actions;
    let mut rows = Vec::new();
    let mut report = String::new();
    for (pi, p) in programs.iter().enumerate() {
        let code = CompiledProgram::new(p);
        let results: Vec<_> = ev.states.iter().map(|s0| rollout_compiled(&spec, &code, s0, &ev.limits)).collect();
        let mean = results.iter().map(|r| r.ret).sum::<f64>() / results.len() as f64;
        for (i, r) in results.into_iter().enumerate() {
            rows.push(EvalRow {
                program: pi,
                state: i.to_string(),
                ret: r.ret,
                steps: Some(r.steps),
                terminal: Some(r.terminal),
            });
        }
        rows.push(EvalRow { program: pi, state: "mean".into(), ret: mean, steps: None, terminal: None });
        report.push_str(&format!("program {pi}: mean return {mean:.4} on {task}\n"));
    }
    let doc = csv_document(&header, &["program", "state", "return", "steps", "terminal"], &rows)?;
    Ok(Outcome { artifacts: vec![Artifact { sink: Sink::parse(&out), contents: doc }], report })
}

#[derive(Serialize)]
struct SearchRow {
    task: &'static str,
    crashable: bool,
    seed: u64,
    best_return: f64,
    best_program: String,
    evaluations: u64,
    restarts: u64,
    /// `[evaluations, best_return]` pairs.
    curve: Vec<(u64, f64)>,
}

#[derive(Serialize)]
struct CurveRow {
    task: &'static str,
    crashable: bool,
    seed: u64,
    evaluations: u64,
    best_return: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    task: &'static str,
    crashable: bool,
    seeds: usize,
    mean: f64,
    std_err: f64,
    ci_low: f64,
    ci_high: f64,
    min: f64,
    max: f64,
}

fn search(a: &SearchArgs, mut s: Settings) -> Result<Outcome> {
    let tasks: TaskList = s.get("tasks", flag(&a.tasks), TaskList(vec![Task::Maze]))?;
    let seeds: IntList = s.get("seeds", flag(&a.seeds), IntList(vec![0]))?;
    let d = SearchConfig::default();
    let k: usize = s.get("k", flag(&a.k), d.k)?;
    let budget: u64 = s.get("budget", flag(&a.budget), d.budget)?;
    let num_states: usize = s.get("num_states", flag(&a.num_states), d.num_states)?;
    let crashable: bool = s.get("crashable", flag(&a.crashable), false)?;
    let stop_at: StopAt = s.get("stop_at", flag(&a.stop_at), StopAt(d.stop_at))?;
    let space = ProgrammaticSpace { probs: GrammarProbs::default(), constraints: constraints(&a.grammar, &mut s)? };
    let out: String = s.get("out", flag(&a.out), "search".to_string())?;
    let header = header("search", s)?;
    if out == "-" {
        bail!("search writes three files; give an output prefix rather than `-`");
    }

    let jobs: Vec<(Task, u64)> = tasks.0.iter().flat_map(|&t| seeds.0.iter().map(move |&sd| (t, sd))).collect();
    // Results come back in job order, so output is independent of the worker count.
    let records = jobs
        .par_iter()
        .map(|&(task, seed)| {
            let cfg = SearchConfig { k, budget, num_states, seed, stop_at: stop_at.0 };
            search_task(TaskSpec { task, crashable }, &space, &cfg).map(|r| (task, seed, r))
        })
        .collect::<karel_core::Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut curve_rows = Vec::new();
    for (task, seed, r) in &records {
        for pt in &r.curve {
            curve_rows.push(CurveRow {
                task: task.id(),
                crashable,
                seed: *seed,
                evaluations: pt.evaluations,
                best_return: pt.best_return,
            });
        }
        rows.push(SearchRow {
            task: task.id(),
            crashable,
            seed: *seed,
            best_return: r.best_return,
            best_program: print(&r.best),
            evaluations: r.evaluations,
            restarts: r.restarts,
            curve: r.curve.iter().map(|p| (p.evaluations, p.best_return)).collect(),
        });
    }
    let mut summary = Vec::new();
    let mut report = String::new();
    for &task in &tasks.0 {
        let best: Vec<f64> = records.iter().filter(|r| r.0 == task).map(|r| r.2.best_return).collect();
        if best.is_empty() {
            continue;
        }
        let est = MetricEstimate::from_samples(&best);
        let std_err = (est.ci_high - est.mean) / 1.959_963_984_540_054;
        report.push_str(&format!("{task}: {:.2} ± {:.2} over {} seeds\n", est.mean, std_err, best.len()));
        summary.push(SummaryRow {
            task: task.id(),
            crashable,
            seeds: best.len(),
            mean: est.mean,
            std_err,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            min: best.iter().cloned().fold(f64::INFINITY, f64::min),
            max: best.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let artifacts = vec![
        Artifact { sink: Sink::parse(&format!("{out}.jsonl")), contents: jsonl_document(&header, &rows)? },
        Artifact {
            sink: Sink::parse(&format!("{out}.curve.csv")),
            contents: csv_document(&header, &["task", "crashable", "seed", "evaluations", "best_return"], &curve_rows)?,
        },
        Artifact {
            sink: Sink::parse(&format!("{out}.summary.csv")),
            contents: csv_document(
                &header,
                &["task", "crashable", "seeds", "mean", "std_err", "ci_low", "ci_high", "min", "max"],
                &summary,
            )?,
        },
    ];
    Ok(Outcome { artifacts, report })
}

#[derive(Serialize)]
struct MutationRow {
    n_mutations: u64,
    mean: f64,
    ci_low: f64,
    ci_high: f64,
    metric: &'static str,
    n: usize,
}

#[derive(Serialize)]
struct ConvergenceRow {
    task: &'static str,
    crashable: bool,
    #[serde(rename = "K")]
    k: u64,
    g_target: f64,
    rate: f64,
    ci_low: f64,
    ci_high: f64,
    n: usize,
}

fn mode_name(m: MetricMode) -> &'static str {
    match m {
        MetricMode::Behavior => "behavior",
        MetricMode::Identity => "identity",
        MetricMode::Convergence => "convergence",
    }
}

fn metrics(a: &MetricsArgs, mut s: Settings) -> Result<Outcome> {
    let mode: String = s.get("mode", a.mode.map(mode_name), String::new())?;
    let seed: u64 = s.get("seed", flag(&a.seed), 0)?;
    match mode.as_str() {
        "behavior" | "identity" => mutation_metrics(a, s, seed, mode == "behavior"),
        "convergence" => convergence(a, s, seed),
        "" => bail!("metrics needs a mode: behavior, identity or convergence"),
        other => bail!("unknown metrics mode {other:?}"),
    }
}

fn mutation_metrics(a: &MetricsArgs, mut s: Settings, seed: u64, behavior: bool) -> Result<Outcome> {
    let n_mut: IntList = s.get("n_mut", flag(&a.n_mut), IntList((1..=10).collect()))?;
    let programs: usize = s.get("programs", flag(&a.programs), 200)?;
    let map = if behavior {
        let d = RandomWorldConfig::default();
        let n_states: usize = s.get("states", flag(&a.states), 8)?;
        let cfg = RandomWorldConfig {
            height: s.get("height", flag(&a.height), d.height)?,
            width: s.get("width", flag(&a.width), d.width)?,
            wall_density: s.get("wall_density", flag(&a.wall_density), d.wall_density)?,
            marker_density: s.get("marker_density", flag(&a.marker_density), d.marker_density)?,
        };
        Some((n_states, cfg))
    } else {
        None
    };
    let ctx = MetricContext {
        probs: GrammarProbs::default(),
        constraints: constraints(&a.grammar, &mut s)?,
        limits: ExecLimits::default(),
        seed,
    };
    let out: String = s.get("out", flag(&a.out), "-".to_string())?;
    let name = if behavior { "behavior_similarity" } else { "identity_rate" };
    let header = header(&format!("metrics {}", if behavior { "behavior" } else { "identity" }), s)?;
    if programs == 0 {
        bail!("programs must be at least 1");
    }
    let states = match map {
        Some((n, cfg)) if n > 0 => metric_states(seed, n, &cfg)?,
        Some(_) => bail!("states must be at least 1"),
        None => Vec::new(),
    };

    let mut rows = Vec::new();
    let mut report = String::new();
    for &n in &n_mut.0 {
        let est = if behavior {
            let xs = (0..programs as u64)
                .into_par_iter()
                .map(|i| behavior_sample(&ctx, n as usize, i, &states))
                .collect::<karel_core::Result<Vec<f64>>>()?;
            MetricEstimate::from_samples(&xs)
        } else {
            let hits = (0..programs as u64)
                .into_par_iter()
                .map(|i| identity_sample(&ctx, n as usize, i))
                .collect::<karel_core::Result<Vec<bool>>>()?;
            MetricEstimate::from_successes(hits.iter().filter(|&&h| h).count(), programs)
        };
        report.push_str(&format!("{name} n={n}: {:.4} [{:.4}, {:.4}]\n", est.mean, est.ci_low, est.ci_high));
        rows.push(MutationRow {
            n_mutations: n,
            mean: est.mean,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            metric: name,
            n: est.n,
        });
    }
    let doc = csv_document(&header, &["n_mutations", "mean", "ci_low", "ci_high", "metric", "n"], &rows)?;
    Ok(Outcome { artifacts: vec![Artifact { sink: Sink::parse(&out), contents: doc }], report })
}

fn convergence(a: &MetricsArgs, mut s: Settings, seed: u64) -> Result<Outcome> {
    let tasks: TaskList = s.get("tasks", flag(&a.tasks), TaskList(vec![Task::Maze, Task::Harvester]))?;
    let ks: IntList = s.get("ks", flag(&a.ks), IntList(vec![10, 250, 1000]))?;
    let inits: usize = s.get("inits", flag(&a.inits), 500)?;
    let num_states: usize = s.get("num_states", flag(&a.num_states), 16)?;
    let budget: u64 = s.get("budget", flag(&a.budget), 100_000)?;
    let steps: usize = s.get("targets", flag(&a.targets), 20)?;
    let crashable: bool = s.get("crashable", flag(&a.crashable), false)?;
    let space = ProgrammaticSpace { probs: GrammarProbs::default(), constraints: constraints(&a.grammar, &mut s)? };
    let out: String = s.get("out", flag(&a.out), "-".to_string())?;
    let header = header("metrics convergence", s)?;
    if inits == 0 || steps == 0 {
        bail!("inits and targets must be at least 1");
    }
    let targets = target_grid(steps);

    let base = SearchConfig { k: 1, budget, num_states, seed, stop_at: Some(1.0) };
    base.validate()?;
    let evaluators: Vec<Evaluator> =
        tasks.0.iter().map(|&task| task_evaluator(TaskSpec { task, crashable }, &base)).collect();
    let mut rows = Vec::new();
    let mut report = String::new();
    for (ti, &task) in tasks.0.iter().enumerate() {
        for &k in &ks.0 {
            let cfg = SearchConfig { k: k as usize, ..base };
            cfg.validate()?;
            let g = (0..inits as u64)
                .into_par_iter()
                .map(|i| g_search_sample(&evaluators[ti], &space, &cfg, i))
                .collect::<karel_core::Result<Vec<f64>>>()?;
            let curve = convergence_curve(&g, &targets);
            let at_half = curve.rates[steps / 2].mean;
            report.push_str(&format!("{task} K={k}: rate {at_half:.3} at g_target {:.2}\n", targets[steps / 2]));
            for (t, r) in curve.g_targets.iter().zip(&curve.rates) {
                rows.push(ConvergenceRow {
                    task: task.id(),
                    crashable,
                    k,
                    g_target: *t,
                    rate: r.mean,
                    ci_low: r.ci_low,
                    ci_high: r.ci_high,
                    n: r.n,
                });
            }
        }
    }
    let doc = csv_document(
        &header,
        &["task", "crashable", "K", "g_target", "rate", "ci_low", "ci_high", "n"],
        &rows,
    )?;
    Ok(Outcome { artifacts: vec![Artifact { sink: Sink::parse(&out), contents: doc }], report })
}
