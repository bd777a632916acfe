//! Acceptance checks. Prints one PASS or FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run alone with `cargo test -p karel-validation --test acceptance`.

use std::time::Instant;

use karel_cli::fit::grammar_fit;
use karel_core::dsl::{parse, sample_program, sample_program_with_stats, Action, ExpansionStats, GenConstraints, GrammarProbs};
use karel_core::karel::{ExecLimits, RandomWorldConfig};
use karel_core::metrics::{
    behavior_sample, convergence_curve, g_search_sample, identity_sample, metric_states, rho_similarity, target_grid,
    ConvergenceCurve, MetricContext, MetricEstimate,
};
use karel_core::mutation::neighborhood;
use karel_core::mutation::NeighborhoodParams;
use karel_core::search::{climb_from, search_task, task_evaluator, ProgrammaticSpace, SearchConfig, SearchRecord, SearchSpace, Tracker};
use karel_core::seed::rng_for;
use karel_core::tasks::{rollout, Evaluator, Task, TaskSpec, REFERENCE_PROGRAMS};
use karel_core::dsl::Program;
use clap::Parser;
use rand::Rng;
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

const DESK_BUDGET: u64 = 100_000;

fn desk_config(seed: u64) -> SearchConfig {
    SearchConfig { k: 250, budget: DESK_BUDGET, num_states: 16, seed, stop_at: Some(1.0) }
}

/// Search records for every (task, seed) pair, in input order.
fn run_searches(jobs: &[(TaskSpec, u64)]) -> Vec<SearchRecord<Program>> {
    let space = ProgrammaticSpace::default();
    jobs.par_iter().map(|&(spec, seed)| search_task(spec, &space, &desk_config(seed)).unwrap()).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn fmt_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", items.join(" "))
}

/// Solved tasks at desk scale; also returns the standard Harvester records
/// for the crashable comparison.
fn solved_tasks() -> (Verdict, Vec<SearchRecord<Program>>) {
    let targets = [
        (Task::StairClimber, 0.95),
        (Task::Maze, 0.95),
        (Task::TopOff, 0.95),
        (Task::FourCorners, 0.95),
        (Task::Harvester, 0.95),
        (Task::Seeder, 0.90),
    ];
    let jobs: Vec<(TaskSpec, u64)> =
        targets.iter().flat_map(|&(t, _)| (0..8).map(move |s| (TaskSpec::new(t), s))).collect();
    let records = run_searches(&jobs);
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &(task, min)) in targets.iter().enumerate() {
        let best: Vec<f64> = records[i * 8..(i + 1) * 8].iter().map(|r| r.best_return).collect();
        let m = mean(&best);
        pass &= m >= min;
        parts.push(format!("{task} {m:.3} (need {min})"));
    }
    let harvester = records[4 * 8..5 * 8].to_vec();
    (verdict(pass, format!("8 seeds, K=250, budget 1e5: {}", parts.join(", "))), harvester)
}

fn door_key_escape() -> Verdict {
    let jobs: Vec<(TaskSpec, u64)> = (0..16).map(|s| (TaskSpec::new(Task::DoorKey), s)).collect();
    let best: Vec<f64> = run_searches(&jobs).iter().map(|r| r.best_return).collect();
    let m = mean(&best);
    let top = best.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    verdict(top > 0.5 && m >= 0.5, format!("16 seeds: max {top:.3} (need > 0.5), mean {m:.3} (need >= 0.5), {}", fmt_list(&best)))
}

fn reference_programs() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (task, text) in REFERENCE_PROGRAMS {
        let p = match parse(text) {
            Ok(p) => p,
            Err(e) => return verdict(false, format!("{task} program does not parse: {e}")),
        };
        let returns = Evaluator::new(TaskSpec::new(task), 0, 8).returns(&p);
        let m = mean(&returns);
        let ok = if matches!(task, Task::Harvester | Task::Seeder) {
            (m - 1.0).abs() <= 1e-9
        } else {
            returns.iter().all(|r| (0.0..=1.0).contains(r))
        };
        pass &= ok;
        parts.push(format!("{task} {m:.3}{}", if ok { "" } else { " (!)" }));
    }
    verdict(pass, format!("mean over 8 states, harvester and seeder must be 1.0: {}", parts.join(", ")))
}

/// Longest common prefix by trying every length from the longest down.
fn rho_oracle(a: &[Action], b: &[Action]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    for l in (0..=a.len().min(b.len())).rev() {
        if (0..l).all(|i| a[i] == b[i]) {
            return l as f64 / longest as f64;
        }
    }
    unreachable!("the empty prefix always matches")
}

/// Five candidates with fixed values and an explicit neighbor relation.
struct FiveNodes {
    adjacency: Vec<Vec<usize>>,
}

impl SearchSpace for FiveNodes {
    type Candidate = usize;

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> karel_core::Result<usize> {
        Ok(rng.gen_range(0..5))
    }

    fn neighbors<R: Rng + ?Sized>(&self, c: &usize, k: usize, _: &mut R) -> karel_core::Result<Vec<usize>> {
        let adj = &self.adjacency[*c];
        Ok((0..k).map(|i| adj[i % adj.len()]).collect())
    }
}

/// Steepest ascent by exhaustive inspection of every neighbor.
fn local_max_oracle(values: &[f64], adjacency: &[Vec<usize>], start: usize) -> usize {
    let mut cur = start;
    loop {
        let best = adjacency[cur].iter().copied().fold(cur, |b, n| if values[n] > values[b] { n } else { b });
        if best == cur {
            return cur;
        }
        cur = best;
    }
}

fn oracles() -> Verdict {
    let mut rng = rng_for(4, "acceptance-rho", 0);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (lc, la, lb) = (rng.gen_range(0..25), rng.gen_range(0..8), rng.gen_range(0..8));
        let mut draw = |n: usize| -> Vec<Action> { (0..n).map(|_| Action::ALL[rng.gen_range(0..5)]).collect() };
        let common = draw(lc);
        let a = [common.clone(), draw(la)].concat();
        let b = [common, draw(lb)].concat();
        if rho_similarity(&a, &b) != rho_oracle(&a, &b) {
            mismatches += 1;
        }
    }
    let adjacency = vec![vec![1, 2], vec![0, 3], vec![0, 4], vec![1, 4], vec![2, 3]];
    let values = [0.1, 0.4, 0.2, 0.3, 0.9];
    let space = FiveNodes { adjacency: adjacency.clone() };
    let mut wrong = Vec::new();
    for start in 0..5 {
        let mut tracker = Tracker::new(|c: &usize| values[*c], 1_000, None);
        let mut r = rng_for(0, "acceptance-hc", start as u64);
        let end = climb_from(&space, start, 2, &mut tracker, &mut r).unwrap().unwrap().best;
        let expected = local_max_oracle(&values, &adjacency, start);
        if end != expected {
            wrong.push(format!("start {start}: {end} vs {expected}"));
        }
    }
    verdict(
        mismatches == 0 && wrong.is_empty(),
        format!("rho mismatches {mismatches}/1000; hill-climb endpoint mismatches {}/5 {}", wrong.len(), wrong.join(", ")),
    )
}

/// No later estimate is significantly above an earlier one, and the last
/// is below the first.
fn decreasing_within_ci(est: &[MetricEstimate]) -> bool {
    let no_rise = (0..est.len()).all(|i| (i + 1..est.len()).all(|j| est[j].ci_low <= est[i].ci_high));
    no_rise && est.last().unwrap().mean < est[0].mean
}

fn curve_nonincreasing(c: &ConvergenceCurve) -> bool {
    c.rates.windows(2).all(|w| w[1].mean <= w[0].mean)
}

fn topology_trends() -> Verdict {
    let ctx = MetricContext::default();
    let states = metric_states(0, 8, &RandomWorldConfig::default()).unwrap();
    let behavior: Vec<MetricEstimate> = (1..=10)
        .map(|n| {
            let xs: Vec<f64> = (0..200u64).into_par_iter().map(|i| behavior_sample(&ctx, n, i, &states).unwrap()).collect();
            MetricEstimate::from_samples(&xs)
        })
        .collect();
    let identity: Vec<MetricEstimate> = (1..=10)
        .map(|n| {
            let hits = (0..200u64).into_par_iter().filter(|&i| identity_sample(&ctx, n, i).unwrap()).count();
            MetricEstimate::from_successes(hits, 200)
        })
        .collect();
    let b_ok = decreasing_within_ci(&behavior);
    let i_ok = decreasing_within_ci(&identity);

    let space = ProgrammaticSpace::default();
    let targets = target_grid(20);
    let ks = [10usize, 250, 1000];
    let mut curves_ok = true;
    let mut k_ok = true;
    let mut k_parts = Vec::new();
    for task in [Task::Maze, Task::Harvester] {
        let base = desk_config(0);
        let ev = task_evaluator(TaskSpec::new(task), &base);
        let curves: Vec<ConvergenceCurve> = ks
            .iter()
            .map(|&k| {
                let cfg = SearchConfig { k, ..base };
                let g: Vec<f64> =
                    (0..500u64).into_par_iter().map(|i| g_search_sample(&ev, &space, &cfg, i).unwrap()).collect();
                convergence_curve(&g, &targets)
            })
            .collect();
        curves_ok &= curves.iter().all(curve_nonincreasing);
        for w in curves.windows(2) {
            // A smaller rate at larger K counts only if the intervals separate.
            k_ok &= w[0].rates.iter().zip(&w[1].rates).all(|(lo, hi)| hi.mean >= lo.mean || hi.overlaps(lo));
        }
        let at_half: Vec<String> = curves.iter().map(|c| format!("{:.3}", c.rates[10].mean)).collect();
        k_parts.push(format!("{task} rate@0.5 for K=10/250/1000: {}", at_half.join("/")));
    }
    let means = |e: &[MetricEstimate]| fmt_list(&e.iter().map(|x| x.mean).collect::<Vec<_>>());
    verdict(
        b_ok && i_ok && curves_ok && k_ok,
        format!(
            "behavior {} {}; identity {} {}; curves nonincreasing {}; K-monotone {} ({})",
            if b_ok { "ok" } else { "VIOLATED" },
            means(&behavior),
            if i_ok { "ok" } else { "VIOLATED" },
            means(&identity),
            curves_ok,
            k_ok,
            k_parts.join("; ")
        ),
    )
}

fn crashable_dominance(standard_harvester: &[SearchRecord<Program>]) -> Verdict {
    let (probs, c) = (GrammarProbs::default(), GenConstraints::default());
    let limits = ExecLimits::default();
    let mut violations = 0;
    for i in 0..100 {
        let mut rng = rng_for(6, "acceptance-triple", i);
        let p = sample_program(&mut rng, &probs, &c).unwrap();
        let task = Task::ALL[rng.gen_range(0..Task::ALL.len())];
        let s0 = task.sample_initial(&mut rng);
        let crash = rollout(&TaskSpec::crashable(task), &p, &s0, &limits).ret;
        let std = rollout(&TaskSpec::new(task), &p, &s0, &limits).ret;
        violations += (crash > std) as usize;
    }

    let jobs: Vec<(TaskSpec, u64)> = (0..8).map(|s| (TaskSpec::crashable(Task::Harvester), s)).collect();
    let crashable = run_searches(&jobs);
    // Mean best-so-far curves are step functions; comparing at every
    // breakpoint of either set compares them everywhere.
    let mut points: Vec<u64> =
        standard_harvester.iter().chain(&crashable).flat_map(|r| r.curve.iter().map(|p| p.evaluations)).collect();
    points.sort_unstable();
    points.dedup();
    let mean_at = |recs: &[SearchRecord<Program>], e: u64| {
        // A record that stopped early keeps its final value.
        mean(&recs.iter().map(|r| r.best_at(e).unwrap_or(f64::NAN)).collect::<Vec<_>>())
    };
    let worst = points
        .iter()
        .map(|&e| (e, mean_at(&crashable, e) - mean_at(standard_harvester, e)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let curves_ok = worst.1 <= 1e-12;
    verdict(
        violations == 0 && curves_ok,
        format!(
            "triples with crashable > standard: {violations}/100; largest crashable-minus-standard mean curve gap {:.4} at {} evaluations; final means {:.3} vs {:.3}",
            worst.1,
            worst.0,
            mean(&crashable.iter().map(|r| r.best_return).collect::<Vec<_>>()),
            mean(&standard_harvester.iter().map(|r| r.best_return).collect::<Vec<_>>()),
        ),
    )
}

fn neighbor_timing() -> Verdict {
    let (probs, c) = (GrammarProbs::default(), GenConstraints::default());
    let mut rng = rng_for(7, "acceptance-timing", 0);
    let candidates: Vec<Program> = (0..1000).map(|_| sample_program(&mut rng, &probs, &c).unwrap()).collect();
    let k = 250;
    let start = Instant::now();
    let mut produced = 0;
    for p in &candidates {
        produced += neighborhood(p, &NeighborhoodParams::new(k), &mut rng, &probs, &c).unwrap().len();
    }
    let per = start.elapsed().as_secs_f64() / produced as f64;
    verdict(per <= 0.005, format!("{per:.2e} s per neighbor over {produced} neighbors of 1000 candidates (limit 5e-3)"))
}

/// Runs the CLI twice per command line and compares every output file.
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    std::fs::write(dir.path().join("programs.txt"), REFERENCE_PROGRAMS.map(|(_, t)| t).join("\n")).unwrap();
    let runs: Vec<(Vec<String>, Vec<String>)> = vec![
        (vec!["sample".into(), "--n".into(), "50".into(), "--out".into(), format!("{d}/sample.txt")], vec!["sample.txt".into()]),
        (
            vec!["eval".into(), "--program".into(), format!("{d}/programs.txt"), "--task".into(), "seeder".into(), "--out".into(), format!("{d}/eval.csv")],
            vec!["eval.csv".into()],
        ),
        (
            ["search", "--tasks", "maze,harvester", "--seeds", "0-3", "--k", "50", "--budget", "5000"]
                .iter()
                .map(|s| s.to_string())
                .chain(["--out".to_string(), format!("{d}/search")])
                .collect(),
            vec!["search.jsonl".into(), "search.curve.csv".into(), "search.summary.csv".into()],
        ),
        (
            ["metrics", "behavior", "--programs", "40", "--states", "3", "--n-mut", "1-4"]
                .iter()
                .map(|s| s.to_string())
                .chain(["--out".to_string(), format!("{d}/behavior.csv")])
                .collect(),
            vec!["behavior.csv".into()],
        ),
        (
            ["metrics", "convergence", "--tasks", "maze", "--ks", "10,40", "--inits", "30", "--budget", "2000"]
                .iter()
                .map(|s| s.to_string())
                .chain(["--out".to_string(), format!("{d}/convergence.csv")])
                .collect(),
            vec!["convergence.csv".into()],
        ),
    ];
    let mut differing = Vec::new();
    for (args, files) in &runs {
        let mut snapshots = Vec::new();
        for workers in ["1", "2"] {
            std::env::set_var(karel_cli::config::WORKERS_ENV, workers);
            let cli = karel_cli::Cli::try_parse_from(std::iter::once("karel".to_string()).chain(args.iter().cloned())).unwrap();
            karel_cli::output::commit(&karel_cli::execute(&cli).unwrap().artifacts).unwrap();
            snapshots.push(files.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap()).collect::<Vec<_>>());
        }
        for (i, f) in files.iter().enumerate() {
            if snapshots[0][i] != snapshots[1][i] {
                differing.push(f.clone());
            }
        }
    }
    std::env::remove_var(karel_cli::config::WORKERS_ENV);

    let probs = GrammarProbs::default();
    let mut rng = rng_for(0, "sample", 0);
    let mut stats = ExpansionStats::default();
    for _ in 0..10_000 {
        sample_program_with_stats(&mut rng, &probs, &GenConstraints::default(), Some(&mut stats)).unwrap();
    }
    let fits = grammar_fit(&stats, &probs);
    let fit_ok = fits.iter().all(|f| f.p_value > 0.01);
    let fit_text: Vec<String> = fits.iter().map(|f| format!("{} p={:.3}", f.family, f.p_value)).collect();
    verdict(
        differing.is_empty() && fit_ok,
        format!(
            "{} output files compared across two runs (1 and 2 workers), {} differ {:?}; chi-square over 10000 samples: {}",
            runs.iter().map(|r| r.1.len()).sum::<usize>(),
            differing.len(),
            differing,
            fit_text.join(", ")
        ),
    )
}

fn report(id: usize, name: &str, started: Instant, v: &Verdict) {
    println!(
        "{} [{id}] {name}: {} ({:.1}s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        started.elapsed().as_secs_f64()
    );
}

fn main() {
    let mut all = true;
    let mut record = |id: usize, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        report(id, name, t, &v);
        all &= v.pass;
    };

    let mut standard_harvester = Vec::new();
    record(1, "solved tasks at desk scale", &mut || {
        let (v, recs) = solved_tasks();
        standard_harvester = recs;
        v
    });
    record(2, "DoorKey escapes its local maximum", &mut door_key_escape);
    record(3, "reference program returns", &mut reference_programs);
    record(4, "similarity and hill-climbing oracles", &mut oracles);
    record(5, "topology trends", &mut topology_trends);
    record(6, "crashable dominance", &mut || crashable_dominance(&standard_harvester));
    record(7, "neighbor generation time", &mut neighbor_timing);
    record(8, "determinism and sampler distribution", &mut determinism);

    if !all {
        println!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
