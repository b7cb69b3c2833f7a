//! Summary statistics over repeated runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator floor of the relative error.
pub const EPS_DEN: f64 = 1e-12;

pub fn relative_error(value: f64, reference: f64) -> f64 {
    (value - reference) / reference.abs().max(EPS_DEN)
}

/// Linearly interpolated quantile of sorted data (Hyndman–Fan type 7).
/// Infinite values are allowed; `None` for empty input.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    let frac = h - lo as f64;
    if a == b || frac == 0.0 {
        Some(a)
    } else {
        Some(a + (b - a) * frac)
    }
}

pub fn quantile(data: &[f64], q: f64) -> Option<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

pub fn median(data: &[f64]) -> Option<f64> {
    quantile(data, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme data within `[q1 - 1.5 IQR, q3 + 1.5 IQR]`.
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Data outside the whisker fences, ascending.
    pub outliers: Vec<f64>,
}

pub fn boxplot(data: &[f64]) -> Option<BoxplotSummary> {
    let mut v: Vec<f64> = data.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25)?;
    let q3 = quantile_sorted(&v, 0.75)?;
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence).collect();
    Some(BoxplotSummary {
        min: v[0],
        q1,
        median: quantile_sorted(&v, 0.5)?,
        q3,
        max: *v.last().unwrap(),
        whisker_low: *inside.first().unwrap_or(&q1),
        whisker_high: *inside.last().unwrap_or(&q3),
        outliers: v.iter().copied().filter(|&x| x < lo_fence || x > hi_fence).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub eval_index: usize,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Quartiles across runs of the incumbent after each evaluation. Missing
/// incumbents count as `+∞`; shorter runs hold their last value.
pub fn convergence_curve(traces: &[Vec<Option<f64>>]) -> Vec<ConvergencePoint> {
    let len = traces.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let mut at: Vec<f64> = traces
                .iter()
                .filter(|t| !t.is_empty())
                .map(|t| t[i.min(t.len() - 1)].unwrap_or(f64::INFINITY))
                .collect();
            at.sort_by(f64::total_cmp);
            ConvergencePoint {
                eval_index: i,
                q25: quantile_sorted(&at, 0.25).unwrap(),
                median: quantile_sorted(&at, 0.5).unwrap(),
                q75: quantile_sorted(&at, 0.75).unwrap(),
            }
        })
        .collect()
}

/// One (problem, seed) run as seen by a data profile: the objective of each
/// evaluation in order, `None` when infeasible or failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileInstance {
    pub feasible_f: Vec<Option<f64>>,
    pub reference: Option<f64>,
}

impl ProfileInstance {
    /// Evaluations needed to reach relative error `≤ rho`, if ever.
    fn solved_after(&self, reference: f64, rho: f64) -> Option<usize> {
        self.feasible_f
            .iter()
            .position(|f| f.is_some_and(|v| relative_error(v, reference) <= rho))
            .map(|i| i + 1)
    }
}

/// Fraction of instances solved within budget `b` for `b = 1..=max_budget`.
pub fn data_profile(instances: &[ProfileInstance], rho: f64, max_budget: usize) -> Result<Vec<f64>> {
    let mut solved_at = Vec::with_capacity(instances.len());
    for (i, inst) in instances.iter().enumerate() {
        let r = inst.reference.ok_or_else(|| Error::Config(format!("instance {i} has no reference value")))?;
        solved_at.push(inst.solved_after(r, rho));
    }
    if instances.is_empty() {
        return Ok(vec![0.0; max_budget]);
    }
    let n = instances.len() as f64;
    Ok((1..=max_budget)
        .map(|b| solved_at.iter().filter(|s| s.is_some_and(|k| k <= b)).count() as f64 / n)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanError {
    /// Mean relative error over runs that ended with a feasible incumbent.
    pub mean_error: Option<f64>,
    pub n_feasible: usize,
    pub n_runs: usize,
}

/// Aggregates final feasible incumbents (`None` = never feasible).
pub fn mean_error(finals: &[Option<f64>], reference: f64) -> MeanError {
    let errs: Vec<f64> = finals.iter().flatten().map(|&v| relative_error(v, reference)).collect();
    MeanError {
        mean_error: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
        n_feasible: errs.len(),
        n_runs: finals.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        let d = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(median(&d), Some(3.0));
        assert_eq!(quantile(&d, 0.25), Some(1.0));
        assert_eq!(quantile(&d, 0.75), Some(4.0));
        assert_eq!(quantile(&[1.0, 2.0], 0.5), Some(1.5));
        assert_eq!(quantile(&[], 0.5), None);
        assert_eq!(quantile(&[1.0, f64::INFINITY], 0.25), Some(f64::INFINITY));
        assert_eq!(quantile(&[1.0, 2.0, f64::INFINITY], 0.5), Some(2.0));
        assert_eq!(quantile(&[f64::INFINITY; 3], 0.5), Some(f64::INFINITY));
    }

    #[test]
    fn boxplot_flags_outliers() {
        let b = boxplot(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!((b.min, b.max, b.whisker_low, b.whisker_high), (1.0, 100.0, 1.0, 4.0));
    }

    #[test]
    fn mean_error_example() {
        let m = mean_error(&[Some(1.02), Some(1.04), None], 1.0);
        assert!((m.mean_error.unwrap() - 0.03).abs() < 1e-12);
        assert_eq!((m.n_feasible, m.n_runs), (2, 3));
        assert_eq!(mean_error(&[None], 1.0).mean_error, None);
    }

    #[test]
    fn profile_counts_solved_instances() {
        let inst = |f: Vec<Option<f64>>| ProfileInstance { feasible_f: f, reference: Some(1.0) };
        let p = data_profile(
            &[
                inst(vec![Some(1.0)]),
                inst(vec![Some(5.0), None, Some(1.01)]),
                inst(vec![None, None, None, Some(1.001)]),
                inst(vec![Some(9.0)]),
            ],
            0.02,
            4,
        )
        .unwrap();
        assert_eq!(p, vec![0.25, 0.25, 0.5, 0.75]);
        let missing = ProfileInstance { feasible_f: vec![], reference: None };
        assert!(data_profile(&[missing], 0.02, 3).is_err());
    }

    #[test]
    fn convergence_holds_last_value() {
        let c = convergence_curve(&[vec![None, Some(3.0), Some(1.0)], vec![Some(2.0)]]);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].median, f64::INFINITY);
        assert_eq!(c[1].median, 2.5);
        assert_eq!(c[2].median, 1.5);
    }
}
