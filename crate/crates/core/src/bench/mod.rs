//! Benchmark problems, baselines, statistics and the repeated-run harness.

pub mod baselines;
pub mod io;
pub mod problems;
pub mod stats;
pub mod study;

use std::path::Path;

use crate::acquisition::Feasibility;
use crate::adaptive::AdaptiveConfig;
use crate::error::{Error, Result};
use crate::external::ExternalProblemSpec;
use crate::record::RunRecord;
use crate::search::SearchConfig;
use crate::sego::{optimize, KernelMode, Problem, SegoConfig};

pub use baselines::{ga_baseline, random_search, GaConfig};
pub use problems::{benchmark, branin, register_suite, BenchmarkProblem, PROBLEM_NAMES};
pub use stats::{boxplot, convergence_curve, data_profile, mean_error, quantile, BoxplotSummary, ProfileInstance};
pub use study::{run_study, StudyConfig};

/// Optimization method of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Sego(KernelMode),
    Ga,
    Random,
}

impl Method {
    /// Parses `krg`, `kpls:<d>`, `kpls-auto`, `ga` or `random`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "krg" => Ok(Self::Sego(KernelMode::FullSe)),
            "kpls-auto" => Ok(Self::Sego(KernelMode::KplsAuto(AdaptiveConfig::default()))),
            "ga" => Ok(Self::Ga),
            "random" => Ok(Self::Random),
            _ => match s.strip_prefix("kpls:").map(str::parse::<usize>) {
                Some(Ok(d)) if d > 0 => Ok(Self::Sego(KernelMode::KplsFixed(d))),
                _ => Err(Error::Config(format!("unknown method {s:?}; expected krg, kpls:<d>, kpls-auto, ga or random"))),
            },
        }
    }

    /// File-name friendly label.
    pub fn label(&self) -> String {
        match self {
            Self::Sego(k) => k.label(),
            Self::Ga => "ga".into(),
            Self::Random => "random".into(),
        }
    }
}

/// Parses `mean`, `utb` (κ = 3) or `utb:<κ>`.
pub fn parse_feasibility(s: &str) -> Result<Feasibility> {
    match s {
        "mean" => Ok(Feasibility::MeanPrediction),
        "utb" => Ok(Feasibility::Utb { kappa: 3.0 }),
        _ => match s.strip_prefix("utb:").map(str::parse::<f64>) {
            Some(Ok(kappa)) if kappa >= 0.0 => Ok(Feasibility::Utb { kappa }),
            _ => Err(Error::Config(format!("unknown feasibility mode {s:?}; expected mean or utb:<κ>"))),
        },
    }
}

/// A registered problem name or the path of an external problem JSON, with
/// its default feasibility mode (UTB(3) for registered problems, mean
/// prediction for external ones).
pub fn resolve_problem(name_or_path: &str) -> Result<(Problem, Feasibility)> {
    if let Some(p) = problems::problem(name_or_path) {
        return Ok((p, Feasibility::Utb { kappa: 3.0 }));
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(Error::Config(format!(
            "{name_or_path:?} is neither a registered problem ({}) nor a problem file",
            PROBLEM_NAMES.join(", ")
        )));
    }
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let problem = ExternalProblemSpec::load(path)?.into_problem(base)?;
    Ok((problem, Feasibility::MeanPrediction))
}

/// Settings shared by every method of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub doe_size: usize,
    /// Evaluations after the initial design; every method gets
    /// `doe_size + budget` evaluations in total.
    pub budget: usize,
    pub seed: u64,
    pub feasibility: Feasibility,
    pub search: SearchConfig,
    pub violation_tol: f64,
    pub timing: bool,
}

pub fn run_method(problem: &Problem, method: &Method, s: &RunSettings) -> Result<RunRecord> {
    let total = s.doe_size + s.budget;
    let mut record = match method {
        Method::Sego(kernel) => optimize(
            problem,
            &SegoConfig {
                doe_size: s.doe_size,
                iterations: s.budget,
                kernel: kernel.clone(),
                feasibility: s.feasibility,
                violation_tol: s.violation_tol,
                search: s.search.clone(),
                seed: s.seed,
                timing: s.timing,
                ..SegoConfig::default()
            },
        )?,
        Method::Ga => {
            let population = GaConfig::default().population.min(total).max(2);
            ga_baseline(
                problem,
                &GaConfig {
                    population,
                    budget: total.saturating_sub(population),
                    violation_tol: s.violation_tol,
                    seed: s.seed,
                    ..GaConfig::default()
                },
            )
        }
        Method::Random => random_search(problem, total, s.seed, s.violation_tol),
    };
    record.method = method.label();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_methods_and_modes() {
        assert_eq!(Method::parse("kpls:3").unwrap(), Method::Sego(KernelMode::KplsFixed(3)));
        assert_eq!(Method::parse("krg").unwrap().label(), "krg");
        assert_eq!(Method::parse("kpls:2").unwrap().label(), "kpls2");
        assert!(Method::parse("kpls:0").is_err());
        assert!(Method::parse("nsga").is_err());
        assert_eq!(parse_feasibility("utb:2.5").unwrap(), Feasibility::Utb { kappa: 2.5 });
        assert_eq!(parse_feasibility("mean").unwrap(), Feasibility::MeanPrediction);
        assert!(parse_feasibility("utb:-1").is_err());
    }

    #[test]
    fn resolves_registered_names() {
        let (p, f) = resolve_problem("branin3").unwrap();
        assert_eq!(p.name, "branin3");
        assert_eq!(f, Feasibility::Utb { kappa: 3.0 });
        assert!(resolve_problem("missing-problem").is_err());
    }
}
