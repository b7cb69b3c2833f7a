//! Single-response partial least squares (PLS1, NIPALS with X deflation).
//!
//! The fitted rotations `W (PᵀW)⁻¹` map centered original inputs to latent
//! scores; their squared entries weight the input dimensions in the KPLS
//! kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, lu_solve, norm, Matrix};
use crate::scalar::Scalar;

/// Residual X norm, relative to the initial centered norm, below which no
/// further component can be extracted.
const DEFLATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct PlsLoadings<T> {
    /// `n′ × d`; column `q` holds the coefficients of component `q`.
    rotations: Matrix<T>,
    x_mean: Vec<T>,
    y_mean: T,
    /// Regression of the response on each latent score.
    y_loadings: Vec<T>,
}

impl<T: Scalar> PlsLoadings<T> {
    /// Loadings built directly from a rotation matrix, e.g. to tie the KPLS
    /// kernel to hand-chosen coefficients. No regression part.
    pub fn from_rotations(rotations: Matrix<T>) -> Result<Self> {
        if rotations.cols() == 0 {
            return Err(Error::Domain("at least one component is required".into()));
        }
        for q in 0..rotations.cols() {
            if rotations.column(q).iter().all(|v| *v == T::zero()) {
                return Err(Error::Domain(format!("component {q} is the zero vector")));
            }
        }
        let p = rotations.rows();
        let d = rotations.cols();
        Ok(Self { rotations, x_mean: vec![T::zero(); p], y_mean: T::zero(), y_loadings: vec![T::zero(); d] })
    }

    pub(crate) fn from_parts(rotations: Matrix<T>, x_mean: Vec<T>, y_mean: T, y_loadings: Vec<T>) -> Self {
        Self { rotations, x_mean, y_mean, y_loadings }
    }

    pub(crate) fn parts(&self) -> (&[T], T, &[T]) {
        (&self.x_mean, self.y_mean, &self.y_loadings)
    }

    pub fn n_components(&self) -> usize {
        self.rotations.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.rotations.rows()
    }

    pub fn rotations(&self) -> &Matrix<T> {
        &self.rotations
    }

    pub fn component(&self, q: usize) -> Vec<T> {
        self.rotations.column(q)
    }

    pub fn x_mean(&self) -> &[T] {
        &self.x_mean
    }

    /// Linear PLS regression prediction.
    pub fn predict(&self, x: &[T]) -> T {
        let centered: Vec<T> = x.iter().zip(&self.x_mean).map(|(&a, &m)| a - m).collect();
        let scores = self.rotations.tr_matvec(&centered);
        self.y_mean + dot(&scores, &self.y_loadings)
    }
}

/// Fits `d` PLS1 components of `y` on the rows of `x`.
pub fn pls_fit<T: Scalar>(x: &Matrix<T>, y: &[T], d: usize) -> Result<PlsLoadings<T>> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::Domain(format!("{} responses for {} rows", y.len(), n)));
    }
    if n < 2 {
        return Err(Error::Domain("PLS needs at least 2 rows".into()));
    }
    if d == 0 || d > p.min(n - 1) {
        return Err(Error::Domain(format!(
            "{d} components requested, allowed range is 1..={}",
            p.min(n - 1)
        )));
    }
    let nf = T::of(n as f64);
    let x_mean: Vec<T> = (0..p).map(|j| (0..n).fold(T::zero(), |a, i| a + x[(i, j)]) / nf).collect();
    let y_mean = y.iter().fold(T::zero(), |a, &v| a + v) / nf;
    let mut yc: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let y_scale = y.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if norm(&yc) <= T::epsilon() * y_scale * nf || norm(&yc) == T::zero() {
        return Err(Error::DegenerateData("response has zero variance".into()));
    }
    let mut xr = Matrix::from_fn(n, p, |i, j| x[(i, j)] - x_mean[j]);
    let initial_norm = xr.frobenius_norm();
    let floor = T::of(DEFLATION_FLOOR) * initial_norm;

    let mut w_mat = Matrix::zeros(p, d);
    let mut p_mat = Matrix::zeros(p, d);
    let mut y_loadings = Vec::with_capacity(d);
    for q in 0..d {
        if !(xr.frobenius_norm() > floor) {
            return Err(Error::DegenerateData(format!(
                "inputs exhausted after {q} components, {d} requested"
            )));
        }
        let mut w = xr.tr_matvec(&yc);
        let wn = norm(&w);
        if !(wn > T::epsilon() * initial_norm * norm(&yc)) {
            return Err(Error::DegenerateData(format!(
                "no covariance left between inputs and response after {q} components"
            )));
        }
        w.iter_mut().for_each(|v| *v /= wn);
        let t = xr.matvec(&w);
        let tt = dot(&t, &t);
        let loading: Vec<T> = xr.tr_matvec(&t).into_iter().map(|v| v / tt).collect();
        let c = dot(&yc, &t) / tt;
        for i in 0..n {
            let ti = t[i];
            for (v, &pl) in xr.row_mut(i).iter_mut().zip(&loading) {
                *v -= ti * pl;
            }
            yc[i] -= c * ti;
        }
        for j in 0..p {
            w_mat[(j, q)] = w[j];
            p_mat[(j, q)] = loading[j];
        }
        y_loadings.push(c);
    }

    let ptw = p_mat.transpose().matmul(&w_mat);
    let inv = lu_solve(&ptw, &Matrix::identity(d))
        .ok_or_else(|| Error::DegenerateData("singular PᵀW in rotation".into()))?;
    let mut rotations = w_mat.matmul(&inv);
    for q in 0..d {
        let col = rotations.column(q);
        let lead = col
            .iter()
            .copied()
            .fold(T::zero(), |best, v| if v.abs() > best.abs() { v } else { best });
        if lead < T::zero() {
            for j in 0..p {
                rotations[(j, q)] = -rotations[(j, q)];
            }
            y_loadings[q] = -y_loadings[q];
        }
    }
    Ok(PlsLoadings { rotations, x_mean, y_mean, y_loadings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 2³ full factorial: centered, mutually orthogonal columns.
    fn factorial() -> Matrix<f64> {
        let mut rows = Vec::new();
        for a in [-1.0, 1.0] {
            for b in [-1.0, 1.0] {
                for c in [-1.0, 1.0] {
                    rows.push([a, b, c]);
                }
            }
        }
        Matrix::from_rows(&rows)
    }

    fn random_matrix(n: usize, p: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn single_factor_aligns_with_its_axis() {
        let x = factorial();
        let y: Vec<f64> = (0..8).map(|i| 5.0 * x[(i, 0)]).collect();
        let pls = pls_fit(&x, &y, 1).unwrap();
        let col = pls.component(0);
        assert!(col[0] > 0.0);
        assert!(col[1].abs() < 1e-10 && col[2].abs() < 1e-10);
    }

    #[test]
    fn two_factor_weights_are_balanced() {
        let x = factorial();
        let y: Vec<f64> = (0..8).map(|i| x[(i, 0)] + x[(i, 1)]).collect();
        let pls = pls_fit(&x, &y, 1).unwrap();
        let col = pls.component(0);
        // hand covariance: Xᵀy = (8, 8, 0)
        assert!((col[0] - col[1]).abs() < 1e-12);
        assert!(col[2].abs() < 1e-12);
    }

    #[test]
    fn maximal_components_on_random_data() {
        let x = random_matrix(6, 8, 1);
        let y: Vec<f64> = (0..6).map(|i| x.row(i).iter().map(|v| v.sin()).sum()).collect();
        let pls = pls_fit(&x, &y, 5).unwrap();
        assert_eq!(pls.n_components(), 5);
        for q in 0..5 {
            assert!(pls.component(q).iter().any(|v| v.abs() > 0.0));
        }
    }

    #[test]
    fn errors_on_degenerate_inputs() {
        let x = factorial();
        assert!(matches!(pls_fit(&x, &[2.0; 8], 1), Err(Error::DegenerateData(_))));
        let y: Vec<f64> = (0..8).map(|i| x[(i, 0)]).collect();
        assert!(matches!(pls_fit(&x, &y, 0), Err(Error::Domain(_))));
        assert!(matches!(pls_fit(&x, &y, 4), Err(Error::Domain(_))));
        // rank-2 inputs cannot support a third component
        let x2 = Matrix::from_fn(8, 3, |i, j| if j == 2 { x[(i, 0)] + x[(i, 1)] } else { x[(i, j)] });
        let y2: Vec<f64> = (0..8).map(|i| x2[(i, 0)] + 0.3 * x2[(i, 1)]).collect();
        assert!(matches!(pls_fit(&x2, &y2, 3), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn full_rank_reconstructs_linear_response() {
        let x = random_matrix(20, 4, 7);
        let beta = [1.5, -2.0, 0.25, 3.0];
        let y: Vec<f64> = (0..20).map(|i| 0.7 + dot(x.row(i), &beta)).collect();
        let pls = pls_fit(&x, &y, 4).unwrap();
        for (i, yi) in y.iter().enumerate() {
            let rel = (pls.predict(x.row(i)) - yi).abs() / yi.abs().max(1.0);
            assert!(rel < 1e-8, "row {i}: relative error {rel}");
        }
    }

    #[test]
    fn invariant_to_response_shift_and_deterministic() {
        let x = random_matrix(12, 3, 2);
        let y: Vec<f64> = (0..12).map(|i| x[(i, 0)].powi(2) - x[(i, 2)]).collect();
        let a = pls_fit(&x, &y, 2).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + 100.0).collect();
        let b = pls_fit(&x, &shifted, 2).unwrap();
        for (u, v) in a.rotations().as_slice().iter().zip(b.rotations().as_slice()) {
            assert!((u - v).abs() < 1e-10);
        }
        let again = pls_fit(&x, &y, 2).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn leading_entry_is_non_negative() {
        let x = random_matrix(15, 5, 9);
        let y: Vec<f64> = (0..15).map(|i| -3.0 * x[(i, 1)] + x[(i, 3)]).collect();
        let pls = pls_fit(&x, &y, 3).unwrap();
        for q in 0..3 {
            let col = pls.component(q);
            let lead = col.iter().copied().fold(0.0f64, |b, v| if v.abs() > b.abs() { v } else { b });
            assert!(lead >= 0.0);
        }
    }

    #[test]
    fn single_precision_fit() {
        let x64 = factorial();
        let x = Matrix::<f32>::from_fn(8, 3, |i, j| x64[(i, j)] as f32);
        let y: Vec<f32> = (0..8).map(|i| 5.0 * x[(i, 0)]).collect();
        let pls = pls_fit(&x, &y, 1).unwrap();
        let col = pls.component(0);
        assert!(col[1].abs() < 1e-5 && col[0] > 0.0);
    }
}
