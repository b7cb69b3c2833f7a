use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mixed_sego::bench::io::write_run;
use mixed_sego::bench::study::{profile_csv, run_study, worker_width, StudyConfig};
use mixed_sego::bench::{self, io::write_atomic, parse_feasibility, resolve_problem, run_method, Method, RunSettings};
use mixed_sego::error::{Error, Result};
use mixed_sego::SearchConfig;

#[derive(Parser)]
#[command(name = "mixed-sego", version, about = "Constrained Bayesian optimization over mixed variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization and write its per-run files.
    Optimize {
        /// Registered problem name or path to a problem JSON.
        #[arg(long)]
        problem: String,
        /// krg, kpls:<d>, kpls-auto, ga or random.
        #[arg(long, default_value = "krg")]
        method: String,
        #[arg(long, default_value_t = 5)]
        doe: usize,
        /// Evaluations after the initial design.
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// mean or utb:<κ>; defaults to utb:3 for registered problems, mean otherwise.
        #[arg(long)]
        feasibility: Option<String>,
        #[arg(long, default_value_t = 1e-4)]
        violation_tol: f64,
        /// Record wall-clock time per evaluation (breaks byte-identical output).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a repeated-run study described by a JSON config.
    Study {
        #[arg(long)]
        config: PathBuf,
    },
    /// Data profile of the runs in a directory.
    Profile {
        #[arg(long)]
        runs: PathBuf,
        /// Relative error tolerance, e.g. 0.02 or 0.005.
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the registered benchmark problems.
    ListProblems,
}

fn init_threads() {
    // Ignore the error if a global pool already exists.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(worker_width(None)).build_global();
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Optimize { problem, method, doe, budget, seed, feasibility, violation_tol, timing, out } => {
            init_threads();
            let (problem, default_feas) = resolve_problem(&problem)?;
            let method = Method::parse(&method)?;
            let feasibility = feasibility.as_deref().map(parse_feasibility).transpose()?.unwrap_or(default_feas);
            if doe < 2 {
                return Err(Error::Config("--doe must be at least 2".into()));
            }
            let settings = RunSettings {
                doe_size: doe,
                budget,
                seed,
                feasibility,
                search: SearchConfig::default(),
                violation_tol,
                timing,
            };
            let record = run_method(&problem, &method, &settings)?;
            let reference = problem.reference.as_ref().map(|r| r.value);
            let csv = write_run(&out, &record, &method.label(), &problem.space, reference)?;
            match record.final_incumbent() {
                Some(best) => println!("{}: best feasible {best:.10e} ({} evaluations)", csv.display(), record.entries.len()),
                None => println!("{}: no feasible point ({} evaluations)", csv.display(), record.entries.len()),
            }
        }
        Command::Study { config } => {
            let mut cfg = StudyConfig::load(&config)?;
            if cfg.out_dir.is_relative() {
                if let Some(base) = config.parent() {
                    cfg.out_dir = base.join(&cfg.out_dir);
                }
            }
            let outcome = run_study(&cfg)?;
            println!(
                "{}: {} runs written, {} failed",
                outcome.out_dir.display(),
                outcome.runs_written,
                outcome.runs_failed
            );
        }
        Command::Profile { runs, tol, out } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::Config("--tol must be positive".into()));
            }
            let csv = profile_csv(&runs, tol)?;
            if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_atomic(&out, csv.as_bytes())?;
        }
        Command::ListProblems => {
            for b in bench::register_suite() {
                let space = &b.problem.space;
                let reference = b.problem.reference.as_ref().map(|r| r.value);
                println!(
                    "{}\tcontinuous={} integer={} categorical={} relaxed_dim={} constraints={} reference={}\toracle: {}",
                    b.problem.name,
                    space.n_continuous(),
                    space.n_integer(),
                    space.n_categorical(),
                    space.relaxed_dim(),
                    b.problem.n_constraints(),
                    reference.map_or("none".into(), |v| format!("{v:.10}")),
                    b.oracle
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
