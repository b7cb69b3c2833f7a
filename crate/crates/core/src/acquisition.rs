//! Acquisition criteria and surrogate feasibility bounds.

use serde::{Deserialize, Serialize};
use libm::erfc;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Default ratio between the EI term and the mean term at the EI maximizer.
pub const WB2S_BETA: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Acquisition {
    Ei,
    /// `EI - f̂`
    Wb2,
    /// `s·EI - f̂` with `s` from [`compute_wb2s_scale`].
    Wb2s { beta: f64 },
}

impl Default for Acquisition {
    fn default() -> Self {
        Self::Wb2s { beta: WB2S_BETA }
    }
}

/// How constraint surrogates restrict the search region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Feasibility {
    /// Admit `x` when the predicted constraint mean is `≤ 0`.
    MeanPrediction,
    /// Admit `x` when `ĝ(x) - κ s(x) ≤ 0`.
    Utb { kappa: f64 },
}

pub fn normal_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

pub fn normal_cdf(u: f64) -> f64 {
    0.5 * erfc(-u / std::f64::consts::SQRT_2)
}

/// Expected improvement below `f_min` of a Gaussian prediction.
pub fn expected_improvement(mean: f64, std: f64, f_min: f64) -> f64 {
    let diff = f_min - mean;
    if !(std > 0.0) {
        return diff.max(0.0);
    }
    let u = diff / std;
    (diff * normal_cdf(u) + std * normal_pdf(u)).max(0.0)
}

/// Scaled Watson-Barnes criterion `s·EI - mean`; `s = 1` gives WB2.
pub fn wb2s(mean: f64, std: f64, f_min: f64, scale: f64) -> f64 {
    scale * expected_improvement(mean, std, f_min) - mean
}

/// Scale for [`wb2s`] from `(mean, std)` predictions at candidate points:
/// `β |f̂(x⁺)| / EI(x⁺)` at the EI maximizer `x⁺`, or 1 when that is undefined.
pub fn compute_wb2s_scale(predictions: &[(f64, f64)], f_min: f64, beta: f64) -> f64 {
    let best = predictions
        .iter()
        .map(|&(m, s)| (expected_improvement(m, s, f_min), m))
        .fold(None, |acc: Option<(f64, f64)>, c| match acc {
            Some(a) if a.0 >= c.0 => Some(a),
            _ => Some(c),
        });
    match best {
        Some((ei, mean)) if ei > 0.0 && mean != 0.0 && mean.is_finite() => {
            let s = beta * mean.abs() / ei;
            if s.is_finite() && s > 0.0 {
                s
            } else {
                1.0
            }
        }
        _ => 1.0,
    }
}

/// Value whose sign decides admission (`≤ 0` admitted).
pub fn feasibility_bound(g_mean: f64, g_std: f64, mode: Feasibility) -> f64 {
    match mode {
        Feasibility::MeanPrediction => g_mean,
        Feasibility::Utb { kappa } => g_mean - kappa * g_std,
    }
}
