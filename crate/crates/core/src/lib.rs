//! Constrained Bayesian optimization over mixed continuous, integer and
//! categorical design spaces.
//!
//! Integer and categorical variables are relaxed into a continuous box
//! (integers as reals, categoricals as one-hot blocks), Gaussian-process
//! surrogates are fitted in that box, and candidates are projected back to
//! the mixed space before evaluation. The surrogate kernel can be reduced to
//! a handful of length-scales with partial least squares (KPLS), with the
//! number of components picked adaptively by K-fold cross-validation.
//!
//! The numeric layers ([`linalg`], [`pls`], [`kernel`], [`gp`]) are generic
//! over a [`Scalar`]; the aliases below fix the common choices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod adaptive;
pub mod bench;
pub mod error;
pub mod external;
pub mod gp;
pub mod kernel;
pub mod linalg;
pub mod pls;
pub mod record;
pub mod scalar;
pub mod search;
pub mod sego;
pub mod space;

pub use adaptive::{press_kfold, select_components, wold_ratio, AdaptiveConfig, Selection};
pub use acquisition::{Acquisition, Feasibility};
pub use error::{Error, Result};
pub use gp::{fit_gp, EvalBudget, FitOptions, GpModel, KernelChoice, NuggetMode};
pub use kernel::{kernel_kpls, kernel_se, KernelConfig};
pub use pls::{pls_fit, PlsLoadings};
pub use scalar::Scalar;
pub use record::{Evaluation, RunRecord};
pub use search::SearchConfig;
pub use sego::{optimize, BlackBox, KernelMode, Problem, Reference, SegoConfig};
pub use space::{lhs_sample, Doe, MixedPoint, MixedSpace, RelaxedVector};

pub type GpModelF64 = GpModel<f64>;
pub type GpModelF32 = GpModel<f32>;
pub type PlsLoadingsF64 = PlsLoadings<f64>;
pub type PlsLoadingsF32 = PlsLoadings<f32>;
pub type KernelConfigF64 = KernelConfig<f64>;
pub type MatrixF64 = linalg::Matrix<f64>;
