//! Gaussian-process (kriging) surrogate with a constant trend.
//!
//! Inputs are affinely mapped to `[0,1]` per dimension and outputs are
//! standardized before fitting. Hyperparameters maximize the concentrated
//! log-likelihood `-n log σ̂² - log det R` with COBYLA, multi-started in
//! `log10 θ`.

use cobyla::{minimize, Func, RhoBeg, StopTols};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{weighted_correlation, KernelConfig};
use crate::linalg::{cholesky_log_det, cholesky_solve, dot, solve_lower, Matrix};
use crate::pls::{pls_fit, PlsLoadings};
use crate::scalar::Scalar;
use crate::space::lhs_unit;

/// Penalty returned to the hyperparameter optimizer when `R` cannot be factorized.
const FAILED_LIKELIHOOD: f64 = 1e10;
const JITTER_FLOOR: f64 = 1e-10;
const JITTER_CEILING: f64 = 1e-6;
/// Rows closer than this (max-abs, normalized units) are merged.
const DUPLICATE_TOL: f64 = 1e-12;
const CONSTANT_SIGMA2: f64 = 1e-12;

/// How the homoscedastic nugget `η` on the diagonal of `R` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NuggetMode {
    /// Exactly this value; factorization failure is an error.
    Fixed(f64),
    /// Start at `1e-10` and escalate ×10 up to `1e-6` until `R + ηI` factorizes.
    Jitter,
    /// Maximum-likelihood estimate within `[lower, upper]`, searched in log10.
    Optimized { lower: f64, upper: f64 },
}

/// Evaluations allotted to each COBYLA start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EvalBudget {
    PerDimension(usize),
    Total(usize),
}

impl EvalBudget {
    fn evals(self, dim: usize) -> usize {
        match self {
            Self::PerDimension(n) => n * dim.max(1),
            Self::Total(n) => n,
        }
    }
}

/// Kernel requested from [`fit_gp`].
#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice<T> {
    FullSe,
    /// KPLS with this many components; loadings are fitted on the
    /// normalized inputs and standardized outputs.
    Kpls(usize),
    /// Caller-supplied kernel (loadings given in normalized input units).
    Custom(KernelConfig<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Frozen hyperparameters: skips likelihood maximization.
    pub theta: Option<Vec<f64>>,
    pub nugget: NuggetMode,
    /// Bounds used to map inputs to `[0,1]`; `None` leaves inputs unscaled.
    pub input_bounds: Option<Vec<(f64, f64)>>,
    pub starts: usize,
    pub budget: EvalBudget,
    pub log10_theta_bounds: (f64, f64),
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            theta: None,
            nugget: NuggetMode::Jitter,
            input_bounds: None,
            starts: 5,
            budget: EvalBudget::PerDimension(200),
            log10_theta_bounds: (-6.0, 2.0),
            seed: 0,
        }
    }
}

impl FitOptions {
    /// Defaults for the given kernel: jitter nugget for the full kernel,
    /// likelihood-optimized nugget in `[1e-12, 1e-2]` for KPLS.
    pub fn for_kernel<T>(kernel: &KernelChoice<T>) -> Self {
        let nugget = match kernel {
            KernelChoice::FullSe => NuggetMode::Jitter,
            _ => NuggetMode::Optimized { lower: 1e-12, upper: 1e-2 },
        };
        Self { nugget, ..Self::default() }
    }

    /// Cheap fit used inside cross-validation: 2 starts of 50 evaluations.
    pub fn reduced(mut self) -> Self {
        self.starts = 2;
        self.budget = EvalBudget::Total(50);
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.input_bounds = Some(bounds);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Fitted Gaussian-process surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel<T> {
    kernel: KernelConfig<T>,
    x_train: Matrix<T>,
    y_train: Vec<T>,
    input_offset: Vec<T>,
    input_scale: Vec<T>,
    y_mean: T,
    y_std: T,
    theta: Vec<T>,
    weights: Vec<T>,
    nugget: T,
    mu: T,
    sigma2: T,
    chol: Matrix<T>,
    alpha: Vec<T>,
    rinv_one: Vec<T>,
    one_rinv_one: T,
    log_likelihood: f64,
    constant: bool,
}

struct Factor<T> {
    chol: Matrix<T>,
    nugget: T,
    mu: T,
    sigma2: T,
    alpha: Vec<T>,
    rinv_one: Vec<T>,
    one_rinv_one: T,
    log_likelihood: f64,
}

fn correlation_matrix<T: Scalar>(x: &Matrix<T>, weights: &[T], nugget: T) -> Matrix<T> {
    let n = x.rows();
    let mut r = Matrix::identity(n);
    for i in 0..n {
        r[(i, i)] += nugget;
        for j in 0..i {
            let k = weighted_correlation(x.row(i), x.row(j), weights);
            r[(i, j)] = k;
            r[(j, i)] = k;
        }
    }
    r
}

fn factorize<T: Scalar>(x: &Matrix<T>, y: &[T], weights: &[T], nugget: T) -> Option<Factor<T>> {
    let n = x.rows();
    let chol = correlation_matrix(x, weights, nugget).cholesky()?;
    let ones = vec![T::one(); n];
    let rinv_one = cholesky_solve(&chol, &ones);
    let one_rinv_one = rinv_one.iter().fold(T::zero(), |a, &v| a + v);
    if !(one_rinv_one > T::zero()) {
        return None;
    }
    let mu = dot(&rinv_one, y) / one_rinv_one;
    let resid: Vec<T> = y.iter().map(|&v| v - mu).collect();
    let alpha = cholesky_solve(&chol, &resid);
    let sigma2 = (dot(&resid, &alpha) / T::of(n as f64)).max(T::tiny());
    let log_likelihood = -(n as f64) * sigma2.to_f64_lossy().ln() - cholesky_log_det(&chol).to_f64_lossy();
    if !log_likelihood.is_finite() {
        return None;
    }
    Some(Factor { chol, nugget, mu, sigma2, alpha, rinv_one, one_rinv_one, log_likelihood })
}

fn factorize_with_mode<T: Scalar>(
    x: &Matrix<T>,
    y: &[T],
    weights: &[T],
    mode: NuggetMode,
    nugget: Option<f64>,
) -> Option<Factor<T>> {
    match (mode, nugget) {
        (NuggetMode::Jitter, _) => {
            let mut eta = JITTER_FLOOR;
            while eta <= JITTER_CEILING * 1.0001 {
                if let Some(f) = factorize(x, y, weights, T::of(eta)) {
                    return Some(f);
                }
                eta *= 10.0;
            }
            None
        }
        (NuggetMode::Fixed(eta), _) => factorize(x, y, weights, T::of(eta)),
        (NuggetMode::Optimized { lower, .. }, eta) => factorize(x, y, weights, T::of(eta.unwrap_or(lower))),
    }
}

/// Concentrated log-likelihood `-n log σ̂² - log det(R + ηI)` of `y` at the
/// given kernel hyperparameters, on inputs as given (no normalization).
pub fn concentrated_log_likelihood<T: Scalar>(
    x: &Matrix<T>,
    y: &[T],
    kernel: &KernelConfig<T>,
    theta: &[T],
    nugget: T,
) -> Option<f64> {
    let w = kernel.dimension_weights(theta);
    factorize(x, y, &w, nugget).map(|f| f.log_likelihood)
}

fn normalization<T: Scalar>(dim: usize, bounds: Option<&[(f64, f64)]>) -> Result<(Vec<T>, Vec<T>)> {
    match bounds {
        None => Ok((vec![T::zero(); dim], vec![T::one(); dim])),
        Some(b) if b.len() != dim => Err(Error::Domain(format!(
            "{} normalization bounds for {dim} input dimensions",
            b.len()
        ))),
        Some(b) => Ok(b
            .iter()
            .map(|&(lo, hi)| {
                let w = hi - lo;
                (T::of(lo), if w > 0.0 { T::of(w) } else { T::one() })
            })
            .unzip()),
    }
}

/// Merges rows that coincide after normalization, averaging their outputs.
fn merge_duplicates<T: Scalar>(rows: Vec<Vec<T>>, y: &[T]) -> (Vec<Vec<T>>, Vec<T>) {
    let tol = T::of(DUPLICATE_TOL);
    let mut out_rows: Vec<Vec<T>> = Vec::with_capacity(rows.len());
    let mut sums: Vec<(T, usize)> = Vec::with_capacity(rows.len());
    for (row, &v) in rows.into_iter().zip(y) {
        let hit = out_rows
            .iter()
            .position(|r| r.iter().zip(&row).all(|(&a, &b)| (a - b).abs() <= tol));
        match hit {
            Some(k) => {
                sums[k].0 += v;
                sums[k].1 += 1;
            }
            None => {
                out_rows.push(row);
                sums.push((v, 1));
            }
        }
    }
    let ys = sums.into_iter().map(|(s, c)| s / T::of(c as f64)).collect();
    (out_rows, ys)
}

/// Fits a Gaussian process to rows of relaxed inputs `x` and outputs `y`.
pub fn fit_gp<T: Scalar>(
    x: &[Vec<T>],
    y: &[T],
    kernel: KernelChoice<T>,
    opts: &FitOptions,
) -> Result<GpModel<T>> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!("{} inputs for {} outputs", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Domain("a GP needs at least 2 training points".into()));
    }
    let dim = x[0].len();
    if dim == 0 || x.iter().any(|r| r.len() != dim) {
        return Err(Error::Domain("training inputs must share a non-zero dimension".into()));
    }
    if y.iter().any(|v| !v.is_finite()) || x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("training data contains non-finite values".into()));
    }
    let (input_offset, input_scale) = normalization::<T>(dim, opts.input_bounds.as_deref())?;
    let normalized: Vec<Vec<T>> = x
        .iter()
        .map(|r| r.iter().zip(&input_offset).zip(&input_scale).map(|((&v, &o), &s)| (v - o) / s).collect())
        .collect();
    let (rows, y_merged) = merge_duplicates(normalized, y);
    if rows.len() < 2 {
        return Err(Error::DegenerateData("fewer than 2 distinct training points".into()));
    }
    let n = rows.len();
    let x_train = Matrix::from_rows(&rows);
    let nf = T::of(n as f64);
    let y_mean = y_merged.iter().fold(T::zero(), |a, &v| a + v) / nf;
    let var = y_merged.iter().fold(T::zero(), |a, &v| a + (v - y_mean) * (v - y_mean)) / nf;
    let y_std = var.sqrt();
    let y_scale = y_mean.abs().max(T::one());
    let constant = !(y_std > T::of(1e-12) * y_scale);
    let y_std = if constant { T::one() } else { y_std };
    let ys: Vec<T> = y_merged.iter().map(|&v| (v - y_mean) / y_std).collect();

    let kernel = match kernel {
        KernelChoice::FullSe => KernelConfig::FullSe,
        KernelChoice::Custom(k) => k,
        KernelChoice::Kpls(d) => {
            if constant {
                // no covariance to extract: a single uniform direction
                let r = Matrix::from_fn(dim, 1, |_, _| T::one());
                KernelConfig::KplsSe { loadings: PlsLoadings::from_rotations(r)? }
            } else {
                KernelConfig::KplsSe { loadings: pls_fit(&x_train, &ys, d)? }
            }
        }
    };
    if let KernelConfig::KplsSe { loadings } = &kernel {
        if loadings.input_dim() != dim {
            return Err(Error::Domain(format!(
                "loadings cover {} inputs, data has {dim}",
                loadings.input_dim()
            )));
        }
    }
    let n_hyper = kernel.n_hyper(dim);

    if constant {
        let theta: Vec<T> = match &opts.theta {
            Some(t) => t.iter().map(|&v| T::of(v)).collect(),
            None => vec![T::one(); n_hyper],
        };
        let weights = kernel.dimension_weights(&theta);
        let f = factorize_with_mode(&x_train, &ys, &weights, NuggetMode::Jitter, None)
            .ok_or_else(|| Error::IllConditioned("constant-response model".into()))?;
        return Ok(GpModel {
            kernel,
            x_train,
            y_train: y_merged,
            input_offset,
            input_scale,
            y_mean,
            y_std,
            theta,
            weights,
            nugget: f.nugget,
            mu: T::zero(),
            sigma2: T::of(CONSTANT_SIGMA2),
            alpha: vec![T::zero(); n],
            chol: f.chol,
            rinv_one: f.rinv_one,
            one_rinv_one: f.one_rinv_one,
            log_likelihood: f.log_likelihood,
            constant: true,
        });
    }

    let (theta, nugget_choice) = match &opts.theta {
        Some(t) => {
            if t.len() != n_hyper {
                return Err(Error::Domain(format!("{} fixed θ for {n_hyper} hyperparameters", t.len())));
            }
            if t.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Domain("fixed θ must be positive".into()));
            }
            let eta = match opts.nugget {
                NuggetMode::Optimized { lower, .. } => Some(lower),
                _ => None,
            };
            (t.iter().map(|&v| T::of(v)).collect::<Vec<T>>(), eta)
        }
        None => optimize_hyperparameters(&x_train, &ys, &kernel, n_hyper, opts),
    };
    let weights = kernel.dimension_weights(&theta);
    let f = factorize_with_mode(&x_train, &ys, &weights, opts.nugget, nugget_choice).ok_or_else(|| {
        Error::IllConditioned(format!("Cholesky failed for {n} points in {dim} dimensions"))
    })?;
    Ok(GpModel {
        kernel,
        x_train,
        y_train: y_merged,
        input_offset,
        input_scale,
        y_mean,
        y_std,
        theta,
        weights,
        nugget: f.nugget,
        mu: f.mu,
        sigma2: f.sigma2,
        chol: f.chol,
        alpha: f.alpha,
        rinv_one: f.rinv_one,
        one_rinv_one: f.one_rinv_one,
        log_likelihood: f.log_likelihood,
        constant: false,
    })
}

/// Multi-start COBYLA over `log10 θ` (and `log10 η` when optimized).
fn optimize_hyperparameters<T: Scalar>(
    x: &Matrix<T>,
    y: &[T],
    kernel: &KernelConfig<T>,
    n_hyper: usize,
    opts: &FitOptions,
) -> (Vec<T>, Option<f64>) {
    let (tlo, thi) = opts.log10_theta_bounds;
    let nugget_bounds = match opts.nugget {
        NuggetMode::Optimized { lower, upper } => Some((lower.log10(), upper.log10())),
        _ => None,
    };
    let mut bounds = vec![(tlo, thi); n_hyper];
    if let Some(b) = nugget_bounds {
        bounds.push(b);
    }
    let dim = bounds.len();

    let objective = |u: &[f64], _: &mut ()| -> f64 {
        let theta: Vec<T> = u[..n_hyper].iter().map(|&v| T::of(10f64.powf(v))).collect();
        let w = kernel.dimension_weights(&theta);
        let eta = u.get(n_hyper).map(|&v| 10f64.powf(v));
        match factorize_with_mode(x, y, &w, opts.nugget, eta) {
            Some(f) => -f.log_likelihood,
            None => FAILED_LIKELIHOOD,
        }
    };

    let mut starts = Vec::with_capacity(opts.starts.max(1));
    let mut first = vec![0.0f64.clamp(tlo, thi); n_hyper];
    if let Some((lo, hi)) = nugget_bounds {
        first.push(0.5 * (lo + hi));
    }
    starts.push(first);
    if opts.starts > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for u in lhs_unit(dim, opts.starts - 1, &mut rng) {
            starts.push(u.iter().zip(&bounds).map(|(&t, &(lo, hi))| lo + t * (hi - lo)).collect());
        }
    }

    let maxeval = opts.budget.evals(dim);
    let no_cons: Vec<&dyn Func<()>> = vec![];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in starts {
        let f0 = objective(&s, &mut ());
        let mut cand = (f0, s.clone());
        let tols = StopTols { ftol_rel: 1e-8, xtol_abs: vec![1e-5; dim], ..StopTols::default() };
        let out = minimize(objective, &s, &bounds, &no_cons, (), maxeval, RhoBeg::All(0.5), Some(tols));
        let (u, v) = match out {
            Ok((_, u, v)) => (u, v),
            Err((_, u, v)) => (u, v),
        };
        if v.is_finite() && v < cand.0 {
            cand = (v, u);
        }
        if best.as_ref().is_none_or(|b| cand.0 < b.0) {
            best = Some(cand);
        }
    }
    let (_, u) = best.expect("at least one start");
    let theta = u[..n_hyper].iter().map(|&v| T::of(10f64.powf(v))).collect();
    (theta, u.get(n_hyper).map(|&v| 10f64.powf(v)))
}

impl<T: Scalar> GpModel<T> {
    fn normalize(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_offset.len() {
            return Err(Error::Domain(format!(
                "point has dimension {}, model expects {}",
                x.len(),
                self.input_offset.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.input_offset)
            .zip(&self.input_scale)
            .map(|((&v, &o), &s)| (v - o) / s)
            .collect())
    }

    /// Mean and variance of the prediction at a relaxed input.
    pub fn predict(&self, x: &[T]) -> Result<(T, T)> {
        let u = self.normalize(x)?;
        let n = self.x_train.rows();
        let r: Vec<T> = (0..n).map(|i| weighted_correlation(&u, self.x_train.row(i), &self.weights)).collect();
        let mean = self.mu + dot(&r, &self.alpha);
        let v = solve_lower(&self.chol, &r);
        let rr = dot(&v, &v);
        let one_r = dot(&self.rinv_one, &r);
        let trend = (T::one() - one_r) * (T::one() - one_r) / self.one_rinv_one;
        let var = (self.sigma2 * (T::one() - rr + trend)).max(T::zero());
        Ok((self.y_mean + self.y_std * mean, var * self.y_std * self.y_std))
    }

    pub fn predict_mean(&self, x: &[T]) -> Result<T> {
        self.predict(x).map(|p| p.0)
    }

    pub fn kernel(&self) -> &KernelConfig<T> {
        &self.kernel
    }

    /// Fitted length-scale hyperparameters (normalized input units).
    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn nugget(&self) -> T {
        self.nugget
    }

    /// Estimated process mean, in output units.
    pub fn mu_hat(&self) -> T {
        self.y_mean + self.y_std * self.mu
    }

    /// Estimated process variance, in output units.
    pub fn sigma2_hat(&self) -> T {
        self.sigma2 * self.y_std * self.y_std
    }

    /// `1ᵀR⁻¹1` of the (nugget-augmented) correlation matrix.
    pub fn one_rinv_one(&self) -> T {
        self.one_rinv_one
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// True when the training outputs were constant and no fit was attempted.
    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn n_train(&self) -> usize {
        self.x_train.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.input_offset.len()
    }

    /// Training inputs in original (unnormalized) units.
    pub fn training_inputs(&self) -> Vec<Vec<T>> {
        (0..self.x_train.rows())
            .map(|i| {
                self.x_train
                    .row(i)
                    .iter()
                    .zip(&self.input_offset)
                    .zip(&self.input_scale)
                    .map(|((&u, &o), &s)| o + u * s)
                    .collect()
            })
            .collect()
    }

    pub fn training_outputs(&self) -> &[T] {
        &self.y_train
    }
}

/// `f64` encoded as the 16-digit hex of its IEEE-754 bits.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HexF64(f64);

impl Serialize for HexF64 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:016x}", self.0.to_bits()))
    }
}

impl<'de> Deserialize<'de> for HexF64 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(|b| HexF64(f64::from_bits(b)))
            .map_err(serde::de::Error::custom)
    }
}

fn hex<T: Scalar>(v: &[T]) -> Vec<HexF64> {
    v.iter().map(|x| HexF64(x.to_f64_lossy())).collect()
}

fn unhex<T: Scalar>(v: &[HexF64]) -> Vec<T> {
    v.iter().map(|x| T::of(x.0)).collect()
}

#[derive(Serialize, Deserialize)]
struct LoadingsDoc {
    rows: usize,
    cols: usize,
    rotations: Vec<HexF64>,
    x_mean: Vec<HexF64>,
    y_mean: HexF64,
    y_loadings: Vec<HexF64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    kernel: String,
    loadings: Option<LoadingsDoc>,
    theta: Vec<HexF64>,
    nugget: HexF64,
    mu: HexF64,
    sigma2: HexF64,
    y_mean: HexF64,
    y_std: HexF64,
    input_offset: Vec<HexF64>,
    input_scale: Vec<HexF64>,
    x_train: Vec<Vec<HexF64>>,
    y_train: Vec<HexF64>,
    log_likelihood: HexF64,
    constant: bool,
}

impl<T: Scalar> GpModel<T> {
    /// JSON document with every float stored as the hex of its `f64` bits.
    /// The Cholesky factor is rebuilt on load.
    pub fn to_json(&self) -> Result<String> {
        let (kernel, loadings) = match &self.kernel {
            KernelConfig::FullSe => ("full_se".to_string(), None),
            KernelConfig::KplsSe { loadings } => {
                let (x_mean, y_mean, y_loadings) = loadings.parts();
                (
                    "kpls_se".to_string(),
                    Some(LoadingsDoc {
                        rows: loadings.rotations().rows(),
                        cols: loadings.rotations().cols(),
                        rotations: hex(loadings.rotations().as_slice()),
                        x_mean: hex(x_mean),
                        y_mean: HexF64(y_mean.to_f64_lossy()),
                        y_loadings: hex(y_loadings),
                    }),
                )
            }
        };
        let doc = ModelDoc {
            kernel,
            loadings,
            theta: hex(&self.theta),
            nugget: HexF64(self.nugget.to_f64_lossy()),
            mu: HexF64(self.mu.to_f64_lossy()),
            sigma2: HexF64(self.sigma2.to_f64_lossy()),
            y_mean: HexF64(self.y_mean.to_f64_lossy()),
            y_std: HexF64(self.y_std.to_f64_lossy()),
            input_offset: hex(&self.input_offset),
            input_scale: hex(&self.input_scale),
            x_train: (0..self.x_train.rows()).map(|i| hex(self.x_train.row(i))).collect(),
            y_train: hex(&self.y_train),
            log_likelihood: HexF64(self.log_likelihood),
            constant: self.constant,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let kernel = match (doc.kernel.as_str(), doc.loadings) {
            ("full_se", _) => KernelConfig::FullSe,
            ("kpls_se", Some(l)) => {
                let rot = unhex::<T>(&l.rotations);
                if rot.len() != l.rows * l.cols {
                    return Err(Error::Domain("loadings shape mismatch".into()));
                }
                let rotations = Matrix::from_fn(l.rows, l.cols, |i, j| rot[i * l.cols + j]);
                KernelConfig::KplsSe {
                    loadings: PlsLoadings::from_parts(rotations, unhex(&l.x_mean), T::of(l.y_mean.0), unhex(&l.y_loadings)),
                }
            }
            (k, _) => return Err(Error::Domain(format!("unknown kernel '{k}'"))),
        };
        let rows: Vec<Vec<T>> = doc.x_train.iter().map(|r| unhex(r)).collect();
        let x_train = Matrix::from_rows(&rows);
        let theta: Vec<T> = unhex(&doc.theta);
        let weights = kernel.dimension_weights(&theta);
        let y_train: Vec<T> = unhex(&doc.y_train);
        let y_mean = T::of(doc.y_mean.0);
        let y_std = T::of(doc.y_std.0);
        let ys: Vec<T> = y_train.iter().map(|&v| (v - y_mean) / y_std).collect();
        let nugget = T::of(doc.nugget.0);
        let f = factorize(&x_train, &ys, &weights, nugget)
            .ok_or_else(|| Error::IllConditioned("stored model does not factorize".into()))?;
        let n = x_train.rows();
        Ok(Self {
            kernel,
            x_train,
            y_train,
            input_offset: unhex(&doc.input_offset),
            input_scale: unhex(&doc.input_scale),
            y_mean,
            y_std,
            theta,
            weights,
            nugget,
            mu: T::of(doc.mu.0),
            sigma2: T::of(doc.sigma2.0),
            chol: f.chol,
            alpha: if doc.constant { vec![T::zero(); n] } else { f.alpha },
            rinv_one: f.rinv_one,
            one_rinv_one: f.one_rinv_one,
            log_likelihood: doc.log_likelihood.0,
            constant: doc.constant,
        })
    }
}
