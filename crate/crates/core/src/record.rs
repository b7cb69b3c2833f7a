//! Optimization trajectories shared by SEGO and the baselines.

use serde::{Deserialize, Serialize};

use crate::adaptive::Selection;
use crate::error::{Error, Result};
use crate::space::MixedPoint;

/// Objective and inequality-constraint values (`g_j ≤ 0` is feasible).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub f: f64,
    #[serde(default)]
    pub g: Vec<f64>,
}

impl Evaluation {
    pub fn new(f: f64, g: Vec<f64>) -> Self {
        Self { f, g }
    }

    pub fn violation(&self) -> f64 {
        total_violation(&self.g)
    }
}

/// `Σ_j max(0, g_j)`
pub fn total_violation(g: &[f64]) -> f64 {
    g.iter().map(|v| v.max(0.0)).sum()
}

/// Surrogate details attached to an evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntryNotes {
    pub d_f: Option<usize>,
    pub d_g: Vec<Option<usize>>,
    pub acq_value: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub eval_index: usize,
    /// 0 for the initial design, then the iteration that proposed the point.
    pub iter: usize,
    pub point: MixedPoint,
    /// `None` when the evaluation failed.
    pub f: Option<f64>,
    pub g: Vec<f64>,
    pub violation: Option<f64>,
    pub feasible: bool,
    /// Best feasible objective among entries `0..=eval_index`.
    pub incumbent: Option<f64>,
    #[serde(flatten)]
    pub notes: EntryNotes,
    pub error: Option<String>,
}

impl EvalEntry {
    pub fn failed(&self) -> bool {
        self.f.is_none()
    }
}

/// How the point of one iteration was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Proposal {
    /// The `rank`-th candidate of the inner search (0 is its maximizer).
    Search { rank: usize },
    /// Random point; the reason is recorded.
    Random { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMeta {
    pub iter: usize,
    /// Components per output (objective first); `None` for the full kernel.
    pub d: Vec<Option<usize>>,
    pub log_likelihood: Vec<f64>,
    pub selections: Vec<Option<Selection>>,
    pub f_min: Option<f64>,
    /// No observed point was feasible; `f_min` came from the least violating one.
    pub f_min_infeasible: bool,
    pub scale: Option<f64>,
    pub acq_value: Option<f64>,
    /// No candidate satisfied the surrogate feasibility bounds.
    pub fallback: bool,
    pub proposal: Proposal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub method: String,
    pub seed: u64,
    pub n_constraints: usize,
    pub violation_tol: f64,
    pub entries: Vec<EvalEntry>,
    pub iterations: Vec<IterationMeta>,
}

impl RunRecord {
    pub fn new(problem: &str, method: &str, seed: u64, n_constraints: usize, violation_tol: f64) -> Self {
        Self {
            problem: problem.to_string(),
            method: method.to_string(),
            seed,
            n_constraints,
            violation_tol,
            entries: Vec::new(),
            iterations: Vec::new(),
        }
    }

    /// Appends an evaluation result. Non-finite or wrongly sized results are
    /// stored as failures.
    pub fn push(&mut self, iter: usize, point: MixedPoint, result: Result<Evaluation>, notes: EntryNotes) -> &EvalEntry {
        let result = result.and_then(|e| {
            if e.g.len() != self.n_constraints {
                Err(Error::Evaluation(format!("{} constraint values, expected {}", e.g.len(), self.n_constraints)))
            } else if !e.f.is_finite() || e.g.iter().any(|v| !v.is_finite()) {
                Err(Error::Evaluation("non-finite output".into()))
            } else {
                Ok(e)
            }
        });
        let prev = self.final_incumbent();
        let entry = match result {
            Ok(e) => {
                let violation = e.violation();
                let feasible = violation <= self.violation_tol;
                let incumbent = match (prev, feasible) {
                    (Some(p), true) => Some(p.min(e.f)),
                    (None, true) => Some(e.f),
                    (p, false) => p,
                };
                EvalEntry {
                    eval_index: self.entries.len(),
                    iter,
                    point,
                    f: Some(e.f),
                    g: e.g,
                    violation: Some(violation),
                    feasible,
                    incumbent,
                    notes,
                    error: None,
                }
            }
            Err(err) => EvalEntry {
                eval_index: self.entries.len(),
                iter,
                point,
                f: None,
                g: Vec::new(),
                violation: None,
                feasible: false,
                incumbent: prev,
                notes,
                error: Some(err.to_string()),
            },
        };
        self.entries.push(entry);
        self.entries.last().unwrap()
    }

    pub fn final_incumbent(&self) -> Option<f64> {
        self.entries.last().and_then(|e| e.incumbent)
    }

    pub fn incumbent_trace(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.incumbent).collect()
    }

    /// Feasible entry with the smallest objective (earliest on ties).
    pub fn best_feasible(&self) -> Option<&EvalEntry> {
        self.entries
            .iter()
            .filter(|e| e.feasible)
            .fold(None, |best: Option<&EvalEntry>, e| match best {
                Some(b) if b.f <= e.f => Some(b),
                _ => Some(e),
            })
    }

    pub fn contains_point(&self, w: &MixedPoint) -> bool {
        self.entries.iter().any(|e| &e.point == w)
    }

    pub fn successful(&self) -> impl Iterator<Item = &EvalEntry> {
        self.entries.iter().filter(|e| !e.failed())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
