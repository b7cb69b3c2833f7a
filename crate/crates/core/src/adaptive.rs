//! Adaptive number of KPLS components.
//!
//! Components are added one at a time while the K-fold cross-validated
//! prediction error keeps dropping fast enough: with
//! `R(d) = PRESS(d+1) / PRESS(d)`, the search stops at the first `d` where
//! `R(d) ≥ σ`, or at `d_max`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{fit_gp, FitOptions, KernelChoice};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub d_min: usize,
    pub d_max: usize,
    /// Stopping threshold σ on the PRESS ratio.
    pub threshold: f64,
    pub folds: usize,
    pub seed: u64,
    /// Re-draw the folds before each `PRESS(d+1)` and recompute `PRESS(d)`
    /// on the new split instead of reusing the previous value.
    pub refresh_folds: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { d_min: 1, d_max: 5, threshold: 0.95, folds: 4, seed: 0, refresh_folds: false }
    }
}

impl AdaptiveConfig {
    /// Largest component count every training fold can support.
    pub fn component_limit(n_points: usize, dim: usize, folds: usize) -> usize {
        let held_out = n_points.div_ceil(folds.max(1));
        dim.min(n_points.saturating_sub(held_out + 1))
    }

    /// Copy with `d_max` (and `d_min` if needed) lowered to what the data
    /// supports; `None` when not even one component fits.
    pub fn clamped(&self, n_points: usize, dim: usize) -> Option<Self> {
        let limit = Self::component_limit(n_points, dim, self.folds);
        if limit == 0 || n_points < self.folds {
            return None;
        }
        let d_max = self.d_max.min(limit);
        Some(Self { d_min: self.d_min.min(d_max), d_max, ..self.clone() })
    }

    fn validate(&self, n_points: usize, dim: usize) -> Result<()> {
        if self.d_min == 0 || self.d_max < self.d_min {
            return Err(Error::Config(format!("need 1 ≤ d_min ≤ d_max, got {} and {}", self.d_min, self.d_max)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.folds < 2 || n_points < self.folds {
            return Err(Error::Config(format!("{} folds for {n_points} points", self.folds)));
        }
        let limit = Self::component_limit(n_points, dim, self.folds);
        if self.d_max > limit {
            return Err(Error::Config(format!(
                "d_max = {} exceeds {limit}, the most a training fold of {n_points} points in {dim} dimensions supports",
                self.d_max
            )));
        }
        Ok(())
    }
}

/// Random partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (i, idx) in perm.into_iter().enumerate() {
        folds[i % k].push(idx);
    }
    folds
}

fn standardize<T: Scalar>(y: &[T]) -> Vec<T> {
    let n = T::of(y.len() as f64);
    let mean = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let sd = (y.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / n).sqrt();
    let sd = if sd > T::zero() { sd } else { T::one() };
    y.iter().map(|&v| (v - mean) / sd).collect()
}

fn press_on_folds<T: Scalar>(
    x: &[Vec<T>],
    y: &[T],
    d: usize,
    folds: &[Vec<usize>],
    opts: &FitOptions,
) -> Result<f64> {
    let ys = standardize(y);
    let per_fold: Vec<Result<f64>> = folds
        .par_iter()
        .enumerate()
        .map(|(k, held)| {
            let mut mask = vec![false; x.len()];
            held.iter().for_each(|&i| mask[i] = true);
            let (xt, yt): (Vec<Vec<T>>, Vec<T>) =
                (0..x.len()).filter(|&i| !mask[i]).map(|i| (x[i].clone(), ys[i])).unzip();
            let model = fit_gp(&xt, &yt, KernelChoice::Kpls(d), opts).map_err(|e| match e {
                Error::IllConditioned(m) => Error::IllConditioned(format!("fold {k}: {m}")),
                Error::DegenerateData(m) => Error::DegenerateData(format!("fold {k}: {m}")),
                Error::Domain(m) => Error::Domain(format!("fold {k}: {m}")),
                other => other,
            })?;
            let mut sse = 0.0;
            for &i in held {
                let pred = model.predict_mean(&x[i])?;
                sse += (ys[i] - pred).to_f64_lossy().powi(2);
            }
            Ok(sse)
        })
        .collect();
    per_fold.into_iter().try_fold(0.0, |acc, r| r.map(|v| acc + v))
}

/// K-fold cross-validated prediction error sum of squares of a `d`-component
/// KPLS surrogate, on standardized outputs. Folds are fitted independently
/// and summed in fold order.
pub fn press_kfold<T: Scalar>(
    x: &[Vec<T>],
    y: &[T],
    d: usize,
    folds: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!("{} inputs for {} outputs", x.len(), y.len())));
    }
    if folds < 2 || x.len() < folds {
        return Err(Error::Domain(format!("{folds} folds for {} points", x.len())));
    }
    press_on_folds(x, y, d, &fold_assignment(x.len(), folds, seed), opts)
}

/// `PRESS(d+1) / PRESS(d)`; `+∞` when the current model is already exact.
pub fn wold_ratio(press_next: f64, press_cur: f64) -> f64 {
    if press_cur > 0.0 {
        press_next / press_cur
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Component count whose PRESS this entry records.
    pub d: usize,
    pub press: f64,
    /// `R(d - 1)`; absent for the initial `d_min` entry.
    pub ratio: Option<f64>,
    /// `PRESS(d - 1)` was reused from the previous step rather than recomputed.
    pub reused_previous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub d: usize,
    pub trace: Vec<TraceEntry>,
    /// The search ended because the inputs could not support another component.
    pub rank_exhausted: bool,
}

/// Picks the number of KPLS components for `(x, y)`.
pub fn select_components<T: Scalar>(
    x: &[Vec<T>],
    y: &[T],
    cfg: &AdaptiveConfig,
    opts: &FitOptions,
) -> Result<Selection> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Domain(format!("{} inputs for {} outputs", x.len(), y.len())));
    }
    cfg.validate(x.len(), x[0].len())?;
    let mut step_seed = cfg.seed;
    let mut folds = fold_assignment(x.len(), cfg.folds, step_seed);
    let mut press_cur = press_on_folds(x, y, cfg.d_min, &folds, opts)?;
    let mut trace = vec![TraceEntry { d: cfg.d_min, press: press_cur, ratio: None, reused_previous: false }];
    let mut d = cfg.d_min;
    let mut rank_exhausted = false;
    while d < cfg.d_max {
        let mut reused = true;
        if cfg.refresh_folds {
            step_seed = step_seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
            folds = fold_assignment(x.len(), cfg.folds, step_seed);
            press_cur = press_on_folds(x, y, d, &folds, opts)?;
            reused = false;
        }
        let press_next = match press_on_folds(x, y, d + 1, &folds, opts) {
            Ok(p) => p,
            Err(Error::DegenerateData(_)) => {
                rank_exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let ratio = wold_ratio(press_next, press_cur);
        trace.push(TraceEntry { d: d + 1, press: press_next, ratio: Some(ratio), reused_previous: reused });
        if ratio >= cfg.threshold {
            break;
        }
        d += 1;
        press_cur = press_next;
    }
    Ok(Selection { d, trace, rank_exhausted })
}
