//! Repeated runs of several methods on several problems.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::io::{read_runs, write_atomic, write_run, StoredRun};
use super::stats::{boxplot, convergence_curve, data_profile, mean_error, ProfileInstance};
use super::{parse_feasibility, resolve_problem, run_method, Method, RunSettings};
use crate::error::{Error, Result};
use crate::search::SearchConfig;

pub const THREADS_ENV: &str = "MIXED_SEGO_THREADS";

fn default_repetitions() -> usize {
    20
}

fn default_doe() -> usize {
    5
}

fn default_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemOverride {
    pub doe_size: Option<usize>,
    pub budget: Option<usize>,
    pub feasibility: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Registered names or external problem files.
    pub problems: Vec<String>,
    /// `krg`, `kpls:<d>`, `kpls-auto`, `ga`, `random`.
    pub methods: Vec<String>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_doe")]
    pub doe_size: usize,
    pub budget: usize,
    /// Run `k` uses seed `seed + k`.
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Overrides each problem's default feasibility mode.
    #[serde(default)]
    pub feasibility: Option<String>,
    #[serde(default)]
    pub overrides: BTreeMap<String, ProblemOverride>,
    #[serde(default)]
    pub search: Option<SearchConfig>,
    #[serde(default = "default_tol")]
    pub violation_tol: f64,
    #[serde(default)]
    pub timing: bool,
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Worker count: the configured width (else all cores), capped by `MIXED_SEGO_THREADS`.
pub fn worker_width(configured: Option<usize>) -> usize {
    let base = configured.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    cap.map_or(base, |c| base.min(c)).max(1)
}

pub fn thread_pool(configured: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_width(configured))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

struct Job {
    problem: usize,
    method: usize,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutcome {
    pub out_dir: PathBuf,
    pub runs_written: usize,
    pub runs_failed: usize,
}

/// Executes every (problem, method, seed) run, writes per-run files under
/// `out_dir/runs`, then the aggregate tables under `out_dir`.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutcome> {
    if cfg.repetitions == 0 || cfg.problems.is_empty() || cfg.methods.is_empty() {
        return Err(Error::Config("a study needs problems, methods and at least one repetition".into()));
    }
    let methods: Vec<Method> = cfg.methods.iter().map(|m| Method::parse(m)).collect::<Result<_>>()?;
    let mut problems = Vec::new();
    for name in &cfg.problems {
        let (p, default_feas) = resolve_problem(name)?;
        let ov = cfg.overrides.get(name).cloned().unwrap_or_default();
        let feas = match ov.feasibility.as_ref().or(cfg.feasibility.as_ref()) {
            Some(s) => parse_feasibility(s)?,
            None => default_feas,
        };
        let settings = RunSettings {
            doe_size: ov.doe_size.unwrap_or(cfg.doe_size),
            budget: ov.budget.unwrap_or(cfg.budget),
            seed: 0,
            feasibility: feas,
            search: cfg.search.clone().unwrap_or_default(),
            violation_tol: cfg.violation_tol,
            timing: cfg.timing,
        };
        if settings.doe_size < 2 {
            return Err(Error::Config(format!("{name}: initial design needs at least 2 points")));
        }
        problems.push((p, settings));
    }
    let runs_dir = cfg.out_dir.join("runs");
    fs::create_dir_all(&runs_dir)?;

    let mut jobs = Vec::new();
    for pi in 0..problems.len() {
        for mi in 0..methods.len() {
            for k in 0..cfg.repetitions {
                jobs.push(Job { problem: pi, method: mi, seed: cfg.seed + k as u64 });
            }
        }
    }
    let pool = thread_pool(cfg.threads)?;
    let results: Vec<Result<PathBuf>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let (problem, base) = &problems[job.problem];
                let method = &methods[job.method];
                let settings = RunSettings { seed: job.seed, ..base.clone() };
                let record = run_method(problem, method, &settings)?;
                let reference = problem.reference.as_ref().map(|r| r.value);
                write_run(&runs_dir, &record, &method.label(), &problem.space, reference)
            })
            .collect()
    });

    let mut failures = Vec::new();
    for (job, r) in jobs.iter().zip(&results) {
        if let Err(e) = r {
            failures.push(json!({
                "problem": problems[job.problem].0.name,
                "method": methods[job.method].label(),
                "seed": job.seed,
                "error": e.to_string(),
            }));
        }
    }
    let runs = read_runs(&runs_dir)?;
    write_aggregates(&cfg.out_dir, &runs, failures.clone())?;
    Ok(StudyOutcome {
        out_dir: cfg.out_dir.clone(),
        runs_written: results.iter().filter(|r| r.is_ok()).count(),
        runs_failed: failures.len(),
    })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

type Groups<'a> = BTreeMap<(String, String), Vec<&'a StoredRun>>;

fn group(runs: &[StoredRun]) -> Groups<'_> {
    let mut g: Groups = BTreeMap::new();
    for r in runs {
        g.entry((r.meta.problem.clone(), r.meta.method.clone())).or_default().push(r);
    }
    g
}

/// Summary, convergence, boxplot, mean-error and data-profile tables,
/// computed from the stored runs only.
pub fn write_aggregates(out_dir: &Path, runs: &[StoredRun], failures: Vec<Value>) -> Result<()> {
    let groups = group(runs);
    let mut conv = String::from("problem,method,eval_index,q25,median,q75\n");
    let mut boxes = String::from("problem,method,n,min,q1,median,q3,max,whisker_low,whisker_high,outliers\n");
    let mut errors = String::from("problem,method,mean_error,n_feasible,n_runs\n");
    let mut summary_groups = Vec::new();
    for ((problem, method), members) in &groups {
        let traces: Vec<Vec<Option<f64>>> = members.iter().map(|r| r.data.incumbent.clone()).collect();
        for c in convergence_curve(&traces) {
            let _ = writeln!(conv, "{problem},{method},{},{},{},{}", c.eval_index, num(c.q25), num(c.median), num(c.q75));
        }
        let finals: Vec<Option<f64>> = members.iter().map(|r| r.data.incumbent.last().copied().flatten()).collect();
        let feasible_finals: Vec<f64> = finals.iter().flatten().copied().collect();
        let bp = boxplot(&feasible_finals);
        if let Some(b) = &bp {
            let outliers: Vec<String> = b.outliers.iter().map(|&v| num(v)).collect();
            let _ = writeln!(
                boxes,
                "{problem},{method},{},{},{},{},{},{},{},{},{}",
                feasible_finals.len(),
                num(b.min),
                num(b.q1),
                num(b.median),
                num(b.q3),
                num(b.max),
                num(b.whisker_low),
                num(b.whisker_high),
                outliers.join(";")
            );
        }
        let reference = members.iter().find_map(|r| r.meta.reference);
        let me = reference.map(|r| mean_error(&finals, r));
        if let Some(m) = &me {
            let _ = writeln!(errors, "{problem},{method},{},{},{}", opt_num(m.mean_error), m.n_feasible, m.n_runs);
        }
        summary_groups.push(json!({
            "problem": problem,
            "method": method,
            "reference": reference,
            "runs": members.iter().map(|r| json!({
                "seed": r.meta.seed,
                "best_feasible": r.meta.best_feasible,
                "n_evaluations": r.meta.n_evaluations,
                "n_failed": r.meta.n_failed,
            })).collect::<Vec<_>>(),
            "boxplot": bp,
            "mean_error": me,
        }));
    }

    let mut profiles = String::from("tolerance,method,budget,fraction\n");
    for rho in [0.02, 0.005] {
        let mut by_method: BTreeMap<&str, Vec<ProfileInstance>> = BTreeMap::new();
        for r in runs.iter().filter(|r| r.meta.reference.is_some()) {
            by_method.entry(&r.meta.method).or_default().push(ProfileInstance {
                feasible_f: r.data.feasible_f.clone(),
                reference: r.meta.reference,
            });
        }
        for (method, inst) in by_method {
            let max_budget = inst.iter().map(|i| i.feasible_f.len()).max().unwrap_or(0);
            for (b, v) in data_profile(&inst, rho, max_budget)?.iter().enumerate() {
                let _ = writeln!(profiles, "{rho},{method},{},{}", b + 1, num(*v));
            }
        }
    }

    let summary = json!({ "groups": summary_groups, "failures": failures, "n_runs": runs.len() });
    write_atomic(&out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    write_atomic(&out_dir.join("convergence.csv"), conv.as_bytes())?;
    write_atomic(&out_dir.join("boxplot.csv"), boxes.as_bytes())?;
    write_atomic(&out_dir.join("mean_error.csv"), errors.as_bytes())?;
    write_atomic(&out_dir.join("data_profiles.csv"), profiles.as_bytes())?;
    Ok(())
}

/// Data profile of every method found in `runs_dir`, as `method,budget,fraction` rows.
pub fn profile_csv(runs_dir: &Path, rho: f64) -> Result<String> {
    let runs = read_runs(runs_dir)?;
    if runs.is_empty() {
        return Err(Error::Config(format!("no runs found in {}", runs_dir.display())));
    }
    let mut by_method: BTreeMap<&str, Vec<ProfileInstance>> = BTreeMap::new();
    for r in &runs {
        by_method.entry(&r.meta.method).or_default().push(ProfileInstance {
            feasible_f: r.data.feasible_f.clone(),
            reference: r.meta.reference,
        });
    }
    let mut out = String::from("method,budget,fraction\n");
    for (method, inst) in by_method {
        let max_budget = inst.iter().map(|i| i.feasible_f.len()).max().unwrap_or(0);
        for (b, v) in data_profile(&inst, rho, max_budget)?.iter().enumerate() {
            let _ = writeln!(out, "{method},{},{}", b + 1, num(*v));
        }
    }
    Ok(out)
}
