//! Registered benchmark problems and their reference optima.
//!
//! All four are built on the standard Branin function or a small family of
//! 1-D functions:
//!
//! * `branin5`: `branin(z, x)` with integer `z ∈ {-5, …, 10}` and `x ∈ [0, 10]`.
//! * `set1`: a categorical choice among ten 1-D functions `f_k(x)`, `x ∈ [0, 1]`,
//!   `f_k(x) = (1 + 0.1k) sin((k + 3)πx/2 + 0.7k) + 3(x - (k + 1)/11)² + 0.15k`.
//! * `branin3`: two binary categoricals `(c1, c2)` and `x1 ∈ [-5, 10]`,
//!   `x2 ∈ [0, 15]`. The cosine term of Branin gets sign `(+1, -1)[c1]` and
//!   phase shift `(0, 1)[c2]`, plus an offset `(0, 1)[c1] + (0, 0.5)[c2]`.
//!   One constraint `((x1 - 2.5)² + (x2 - 7.5)²)/56.25 - 0.4 ≤ 0` excludes
//!   every unconstrained minimizer of the best level, so the optimum lies on
//!   its boundary.
//! * `branin4`: `branin3` plus eight variables `y_i ∈ [0, 1]` contributing
//!   `Σ w_i (y_i - u_i)²` with `w_i = 0.1 + 0.05 i`, `u_i = i/9` (`i = 1..8`).
//!
//! Reference optima come from an oracle run once per process: exhaustive
//! enumeration of the discrete levels times a dense grid on the continuous
//! variables, polished by COBYLA (multistart local search for `branin4`).

use std::f64::consts::PI;
use std::sync::OnceLock;

use cobyla::{minimize, RhoBeg, StopTols};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::record::{total_violation, Evaluation};
use crate::sego::{Problem, Reference};
use crate::space::{lhs_unit, MixedPoint, MixedSpace};

pub const PROBLEM_NAMES: [&str; 4] = ["branin5", "set1", "branin3", "branin4"];

const B: f64 = 5.1 / (4.0 * PI * PI);
const C: f64 = 5.0 / PI;
const T: f64 = 1.0 / (8.0 * PI);

/// Standard Branin function.
pub fn branin(x1: f64, x2: f64) -> f64 {
    (x2 - B * x1 * x1 + C * x1 - 6.0).powi(2) + 10.0 * (1.0 - T) * x1.cos() + 10.0
}

pub fn set1_member(k: usize, x: f64) -> f64 {
    let k = k as f64;
    (1.0 + 0.1 * k) * ((k + 3.0) * PI * x / 2.0 + 0.7 * k).sin() + 3.0 * (x - (k + 1.0) / 11.0).powi(2) + 0.15 * k
}

/// Branin variant selected by the two binary categoricals.
pub fn branin_variant(c1: usize, c2: usize, x1: f64, x2: f64) -> f64 {
    let sign = [1.0, -1.0][c1];
    let shift = [0.0, 1.0][c2];
    let offset = [0.0, 1.0][c1] + [0.0, 0.5][c2];
    (x2 - B * x1 * x1 + C * x1 - 6.0).powi(2) + 10.0 * (1.0 - T) * sign * (x1 - shift).cos() + 10.0 + offset
}

pub fn branin3_constraint(x1: f64, x2: f64) -> f64 {
    ((x1 - 2.5).powi(2) + (x2 - 7.5).powi(2)) / 56.25 - 0.4
}

fn extra_terms(y: &[f64]) -> f64 {
    y.iter()
        .enumerate()
        .map(|(k, &v)| {
            let i = (k + 1) as f64;
            (0.1 + 0.05 * i) * (v - i / 9.0).powi(2)
        })
        .sum()
}

/// Best value of `branin(z, ·)` over `[0, 10]`: the quadratic term vanishes
/// unless its root leaves the interval.
pub fn branin5_level_minimum(z: i64) -> f64 {
    let z = z as f64;
    let root = B * z * z - C * z + 6.0;
    let nearest = root.clamp(0.0, 10.0);
    (nearest - root).powi(2) + 10.0 * (1.0 - T) * z.cos() + 10.0
}

pub struct BenchmarkProblem {
    pub problem: Problem,
    pub constrained: bool,
    /// How the reference optimum was obtained.
    pub oracle: &'static str,
}

pub fn register_suite() -> Vec<BenchmarkProblem> {
    PROBLEM_NAMES.iter().map(|n| benchmark(n).expect("registered name")).collect()
}

pub fn benchmark(name: &str) -> Option<BenchmarkProblem> {
    let (problem, oracle) = match name {
        "branin5" => (branin5(), "16 levels × 10001-point grid + COBYLA polish"),
        "set1" => (set1(), "10 levels × 100001-point grid + COBYLA polish"),
        "branin3" => (branin3(), "4 levels × 1501² grid + COBYLA polish"),
        "branin4" => (branin4(), "4 levels × 40 LHS starts of COBYLA in 10-D"),
        _ => return None,
    };
    Some(BenchmarkProblem { constrained: problem.n_constraints() > 0, problem, oracle })
}

pub fn problem(name: &str) -> Option<Problem> {
    benchmark(name).map(|b| b.problem)
}

pub fn branin5() -> Problem {
    let space = MixedSpace::new(vec![(0.0, 10.0)], vec![MixedSpace::int_range(-5, 10)], vec![]).unwrap();
    Problem::from_fn("branin5", space, 0, |w| Evaluation::new(branin(w.z[0] as f64, w.x[0]), vec![]))
        .with_reference(branin5_reference().clone())
}

pub fn set1() -> Problem {
    let space = MixedSpace::new(vec![(0.0, 1.0)], vec![], vec![10]).unwrap();
    Problem::from_fn("set1", space, 0, |w| Evaluation::new(set1_member(w.c[0], w.x[0]), vec![]))
        .with_reference(set1_reference().clone())
}

fn branin3_space() -> MixedSpace {
    MixedSpace::new(vec![(-5.0, 10.0), (0.0, 15.0)], vec![], vec![2, 2]).unwrap()
}

pub fn branin3() -> Problem {
    Problem::from_fn("branin3", branin3_space(), 1, |w| {
        Evaluation::new(branin_variant(w.c[0], w.c[1], w.x[0], w.x[1]), vec![branin3_constraint(w.x[0], w.x[1])])
    })
    .with_reference(branin3_reference().clone())
}

fn branin4_space() -> MixedSpace {
    let mut bounds = vec![(-5.0, 10.0), (0.0, 15.0)];
    bounds.extend([(0.0, 1.0); 8]);
    MixedSpace::new(bounds, vec![], vec![2, 2]).unwrap()
}

pub fn branin4() -> Problem {
    Problem::from_fn("branin4", branin4_space(), 1, |w| {
        let f = branin_variant(w.c[0], w.c[1], w.x[0], w.x[1]) + extra_terms(&w.x[2..]);
        Evaluation::new(f, vec![branin3_constraint(w.x[0], w.x[1])])
    })
    .with_reference(branin4_reference().clone())
}

/// Objective value and constraint values at a relaxed point.
type Objective<'a> = dyn 'a + Fn(&[f64]) -> (f64, Vec<f64>);

/// Polishes `start` by COBYLA on `f` subject to `g_j ≤ 0`; returns the
/// better of start and result among points with zero violation.
fn polish(
    f: &Objective<'_>,
    n_cons: usize,
    bounds: &[(f64, f64)],
    start: &[f64],
    maxeval: usize,
) -> (f64, Vec<f64>) {
    let obj = |x: &[f64], _: &mut ()| f(x).0;
    let cons: Vec<_> = (0..n_cons).map(|j| move |x: &[f64], _: &mut ()| -f(x).1[j]).collect();
    let rho = bounds.iter().map(|(lo, hi)| 0.05 * (hi - lo)).fold(f64::INFINITY, f64::min);
    let tols = StopTols { ftol_rel: 1e-14, xtol_abs: vec![1e-10; bounds.len()], ..StopTols::default() };
    let x = match minimize(obj, start, bounds, &cons, (), maxeval, RhoBeg::All(rho), Some(tols)) {
        Ok((_, x, _)) | Err((_, x, _)) => x,
    };
    let x: Vec<f64> = x.iter().zip(bounds).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect();
    let (fx, gx) = f(&x);
    let (fs, gs) = f(start);
    let ok_x = total_violation(&gx) <= 0.0;
    let ok_s = total_violation(&gs) <= 0.0;
    match (ok_x, ok_s) {
        (true, true) if fx < fs => (fx, x),
        (true, false) => (fx, x),
        _ => (fs, start.to_vec()),
    }
}

/// Grid over `bounds` with `n` points per dimension, then COBYLA from the
/// `keep` best feasible grid points.
fn grid_oracle(f: &Objective<'_>, n_cons: usize, bounds: &[(f64, f64)], n: usize) -> (f64, Vec<f64>) {
    let dim = bounds.len();
    let total = n.pow(dim as u32);
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    const KEEP: usize = 5;
    let mut x = vec![0.0; dim];
    for idx in 0..total {
        let mut r = idx;
        for (p, &(lo, hi)) in bounds.iter().enumerate() {
            x[p] = lo + (hi - lo) * (r % n) as f64 / (n - 1) as f64;
            r /= n;
        }
        let (v, g) = f(&x);
        if total_violation(&g) > 0.0 {
            continue;
        }
        if best.len() < KEEP || v < best[KEEP - 1].0 {
            best.push((v, x.clone()));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(KEEP);
        }
    }
    best.iter()
        .map(|(_, s)| polish(f, n_cons, bounds, s, 2000))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("a feasible grid point")
}

fn branin5_reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let (value, point) = (-5..=10)
            .map(|z| {
                let (v, x) = grid_oracle(&|x: &[f64]| (branin(z as f64, x[0]), vec![]), 0, &[(0.0, 10.0)], 10001);
                (v, MixedPoint::new(x, vec![z], vec![]))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        Reference { value, point: Some(point) }
    })
}

fn set1_reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let (value, point) = (0..10)
            .map(|k| {
                let (v, x) = grid_oracle(&|x: &[f64]| (set1_member(k, x[0]), vec![]), 0, &[(0.0, 1.0)], 100_001);
                (v, MixedPoint::new(x, vec![], vec![k]))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        Reference { value, point: Some(point) }
    })
}

fn level_pairs() -> [(usize, usize); 4] {
    [(0, 0), (0, 1), (1, 0), (1, 1)]
}

fn branin3_reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let (value, point) = level_pairs()
            .into_iter()
            .map(|(c1, c2)| {
                let f = move |x: &[f64]| (branin_variant(c1, c2, x[0], x[1]), vec![branin3_constraint(x[0], x[1])]);
                let (v, x) = grid_oracle(&f, 1, &[(-5.0, 10.0), (0.0, 15.0)], 1501);
                (v, MixedPoint::new(x, vec![], vec![c1, c2]))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        Reference { value, point: Some(point) }
    })
}

fn branin4_reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let space = branin4_space();
        let bounds = space.continuous().to_vec();
        let (value, point) = level_pairs()
            .into_iter()
            .map(|(c1, c2)| {
                let f = move |x: &[f64]| {
                    (branin_variant(c1, c2, x[0], x[1]) + extra_terms(&x[2..]), vec![branin3_constraint(x[0], x[1])])
                };
                let mut rng = ChaCha8Rng::seed_from_u64(17);
                let (v, x) = lhs_unit(bounds.len(), 40, &mut rng)
                    .into_iter()
                    .map(|u| {
                        let s: Vec<f64> = u.iter().zip(&bounds).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect();
                        polish(&f, 1, &bounds, &s, 4000)
                    })
                    .filter(|(_, x)| total_violation(&f(x).1) <= 0.0)
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("a feasible start");
                (v, MixedPoint::new(x, vec![], vec![c1, c2]))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        Reference { value, point: Some(point) }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branin_known_values() {
        assert!((branin(-PI, 12.275) - 0.397887).abs() < 1e-6);
        assert!((branin(PI, 2.275) - 0.397887).abs() < 1e-6);
        // (0 - 0 + 0 - 6)² + 10(1 - 1/(8π))·cos 0 + 10
        assert_eq!(branin(0.0, 0.0), 36.0 + 10.0 * (1.0 - 1.0 / (8.0 * PI)) + 10.0);
    }

    #[test]
    fn branin_minimum_by_grid() {
        // 1000 × 1000 grid over the standard domain
        let mut best = f64::INFINITY;
        for i in 0..1000 {
            for j in 0..1000 {
                best = best.min(branin(-5.0 + 15.0 * i as f64 / 999.0, 15.0 * j as f64 / 999.0));
            }
        }
        assert!((0.397887 - 1e-6..0.3985).contains(&best), "{best}");
    }

    #[test]
    fn registered_shapes() {
        let relaxed: Vec<usize> = register_suite().iter().map(|b| b.problem.space.relaxed_dim()).collect();
        assert_eq!(relaxed, vec![2, 11, 6, 14]);
        let b5 = branin5();
        assert_eq!((b5.space.n_continuous(), b5.space.n_integer(), b5.space.n_categorical()), (1, 1, 0));
        assert_eq!(b5.space.integers()[0].len(), 16);
        let b4 = branin4();
        assert_eq!((b4.space.n_continuous(), b4.space.categoricals()), (10, &[2usize, 2][..]));
        assert!(benchmark("branin3").unwrap().constrained);
        assert!(!benchmark("set1").unwrap().constrained);
        assert!(problem("nope").is_none());
    }

    #[test]
    fn branin5_reference_matches_closed_form() {
        let closed = (-5..=10).map(branin5_level_minimum).fold(f64::INFINITY, f64::min);
        let r = branin5_reference();
        assert!((r.value - closed).abs() < 1e-9, "{} vs {closed}", r.value);
        let p = r.point.as_ref().unwrap();
        assert_eq!(p.z, vec![3]);
        assert!((r.value - (10.0 * (1.0 - T) * 3f64.cos() + 10.0)).abs() < 1e-9);
        assert!((p.x[0] - (9.0 * B - 3.0 * C + 6.0)).abs() < 1e-4);
    }

    #[test]
    fn set1_reference_is_attained() {
        let r = set1_reference();
        let p = r.point.as_ref().unwrap();
        assert_eq!(set1_member(p.c[0], p.x[0]), r.value);
        // no level beats it on a coarse independent grid
        for k in 0..10 {
            for i in 0..=2000 {
                assert!(set1_member(k, i as f64 / 2000.0) >= r.value - 1e-12);
            }
        }
    }

    #[test]
    fn branin3_optimum_sits_on_the_constraint() {
        let r = branin3_reference();
        let p = r.point.as_ref().unwrap();
        let g = branin3_constraint(p.x[0], p.x[1]);
        assert!(g <= 0.0 && g > -1e-6, "{g}");
        assert_eq!(p.c, vec![0, 0]);
        assert!((r.value - 0.6328).abs() < 2e-3, "{}", r.value);
        let unconstrained = branin_variant(0, 0, PI, 2.275);
        assert!(r.value > unconstrained && branin3_constraint(PI, 2.275) > 0.0);
    }

    #[test]
    fn branin4_reference_decomposes() {
        // separable extras vanish at y_i = i/9, so the optimum equals branin3's
        let r4 = branin4_reference();
        let r3 = branin3_reference();
        assert!((r4.value - r3.value).abs() < 1e-5, "{} vs {}", r4.value, r3.value);
        let p = r4.point.as_ref().unwrap();
        assert_eq!(branin4().evaluate(p).unwrap().f, r4.value);
    }
}
