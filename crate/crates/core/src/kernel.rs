//! Squared-exponential correlation kernels over relaxed inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pls::PlsLoadings;
use crate::scalar::Scalar;

/// Correlation kernel used by a Gaussian process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub enum KernelConfig<T> {
    /// One length-scale per relaxed dimension.
    FullSe,
    /// One length-scale per PLS component.
    KplsSe { loadings: PlsLoadings<T> },
}

impl<T: Scalar> KernelConfig<T> {
    /// Number of length-scale hyperparameters for inputs of dimension `dim`.
    pub fn n_hyper(&self, dim: usize) -> usize {
        match self {
            Self::FullSe => dim,
            Self::KplsSe { loadings } => loadings.n_components(),
        }
    }

    pub fn n_components(&self) -> Option<usize> {
        match self {
            Self::FullSe => None,
            Self::KplsSe { loadings } => Some(loadings.n_components()),
        }
    }

    /// Collapses the hyperparameters into one non-negative weight per input
    /// dimension, so that `k(a, b) = exp(-Σ_p weight_p (a_p - b_p)²)`.
    pub fn dimension_weights(&self, theta: &[T]) -> Vec<T> {
        match self {
            Self::FullSe => theta.to_vec(),
            Self::KplsSe { loadings } => {
                let r = loadings.rotations();
                (0..r.rows())
                    .map(|p| {
                        theta.iter().enumerate().fold(T::zero(), |acc, (q, &t)| {
                            let b = r[(p, q)];
                            acc + t * b * b
                        })
                    })
                    .collect()
            }
        }
    }
}

/// `exp(-Σ_p w_p (a_p - b_p)²)` without argument validation.
pub(crate) fn weighted_correlation<T: Scalar>(a: &[T], b: &[T], weights: &[T]) -> T {
    let s = a
        .iter()
        .zip(b)
        .zip(weights)
        .fold(T::zero(), |acc, ((&x, &y), &w)| {
            let d = x - y;
            acc + w * d * d
        });
    (-s).exp()
}

/// Squared-exponential kernel `∏_p exp(-θ_p (a_p - b_p)²)`.
pub fn kernel_se<T: Scalar>(a: &[T], b: &[T], theta: &[T]) -> Result<T> {
    if a.len() != b.len() || a.len() != theta.len() {
        return Err(Error::Domain(format!(
            "kernel_se dimensions differ: {}, {}, θ {}",
            a.len(),
            b.len(),
            theta.len()
        )));
    }
    if let Some(p) = theta.iter().position(|t| !(*t > T::zero())) {
        return Err(Error::Domain(format!("θ[{p}] must be positive")));
    }
    Ok(weighted_correlation(a, b, theta))
}

/// KPLS kernel `∏_q ∏_p exp(-θ_q (b^q_p a_p - b^q_p b_p)²)`.
pub fn kernel_kpls<T: Scalar>(a: &[T], b: &[T], theta: &[T], loadings: &PlsLoadings<T>) -> Result<T> {
    if a.len() != b.len() || a.len() != loadings.input_dim() {
        return Err(Error::Domain(format!(
            "kernel_kpls input dimensions differ: {}, {}, loadings {}",
            a.len(),
            b.len(),
            loadings.input_dim()
        )));
    }
    if theta.len() != loadings.n_components() {
        return Err(Error::Domain(format!(
            "{} hyperparameters for {} components",
            theta.len(),
            loadings.n_components()
        )));
    }
    if let Some(q) = theta.iter().position(|t| !(*t > T::zero())) {
        return Err(Error::Domain(format!("θ[{q}] must be positive")));
    }
    let weights = KernelConfig::KplsSe { loadings: loadings.clone() }.dimension_weights(theta);
    Ok(weighted_correlation(a, b, &weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn column(v: &[f64]) -> PlsLoadings<f64> {
        PlsLoadings::from_rotations(Matrix::from_fn(v.len(), 1, |i, _| v[i])).unwrap()
    }

    #[test]
    fn se_examples() {
        assert_eq!(kernel_se(&[0.3, -1.0], &[0.3, -1.0], &[5.0, 0.1]).unwrap(), 1.0);
        assert!((kernel_se(&[0.0], &[1.0], &[1.0]).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let k = kernel_se(&[0.0, 0.0], &[1.0, 2.0], &[0.5, 0.25]).unwrap();
        assert!((k - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn se_rejects_bad_arguments() {
        assert!(kernel_se(&[0.0], &[1.0], &[0.0]).is_err());
        assert!(kernel_se(&[0.0], &[1.0], &[-1.0]).is_err());
        assert!(kernel_se(&[0.0, 1.0], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn kpls_examples() {
        let ones = column(&[1.0, 1.0, 1.0]);
        let a = [0.1, 0.7, -0.4];
        let b = [0.9, 0.2, 0.3];
        assert_eq!(kernel_kpls(&a, &a, &[2.0], &ones).unwrap(), 1.0);
        let t = 1.7;
        let kp = kernel_kpls(&a, &b, &[t], &ones).unwrap();
        let se = kernel_se(&a, &b, &[t; 3]).unwrap();
        assert!((kp - se).abs() < 1e-14);

        let axis = column(&[1.0, 0.0]);
        let k = kernel_kpls(&[0.0, 5.0], &[1.0, 9.0], &[2.0], &axis).unwrap();
        assert!((k - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn kpls_rejects_mismatch() {
        let ones = column(&[1.0, 1.0]);
        assert!(kernel_kpls(&[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0], &ones).is_err());
        assert!(kernel_kpls(&[0.0], &[1.0], &[1.0], &ones).is_err());
    }

    #[test]
    fn kpls_sums_over_components() {
        let r: Matrix<f64> = Matrix::from_rows(&[[1.0, 0.5], [2.0, -1.0]]);
        let pls = PlsLoadings::from_rotations(r).unwrap();
        let a = [0.2f64, 0.4];
        let b = [0.6f64, -0.1];
        let th = [0.3f64, 1.1];
        // direct evaluation of the double product
        let mut expected = 1.0f64;
        for (q, &t) in th.iter().enumerate() {
            for p in 0..2 {
                let bq = pls.rotations()[(p, q)];
                expected *= (-t * (bq * a[p] - bq * b[p]).powi(2)).exp();
            }
        }
        assert!((kernel_kpls(&a, &b, &th, &pls).unwrap() - expected).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn se_is_symmetric_bounded_and_monotone(
            a in proptest::collection::vec(-3.0f64..3.0, 3),
            dir in proptest::collection::vec(-1.0f64..1.0, 3),
            theta in proptest::collection::vec(0.01f64..10.0, 3),
            s in 0.01f64..2.0,
        ) {
            let b: Vec<f64> = a.iter().zip(&dir).map(|(x, d)| x + s * d).collect();
            let c: Vec<f64> = a.iter().zip(&dir).map(|(x, d)| x + 2.0 * s * d).collect();
            let kab = kernel_se(&a, &b, &theta).unwrap();
            prop_assert_eq!(kab, kernel_se(&b, &a, &theta).unwrap());
            prop_assert_eq!(kernel_se(&a, &a, &theta).unwrap(), 1.0);
            prop_assert!(kab > 0.0 && kab <= 1.0);
            prop_assert!(kernel_se(&a, &c, &theta).unwrap() <= kab);
        }
    }

    #[test]
    fn single_precision_kernel() {
        let k: f32 = kernel_se(&[0.0f32], &[1.0], &[1.0]).unwrap();
        assert!((k - (-1.0f32).exp()).abs() < 1e-7);
    }
}
