//! Constrained maximization of cheap functions over a box.
//!
//! A stochastic-ranking evolution strategy explores the box globally, then
//! COBYLA polishes the best few candidates. Constraints are `c_j(x) ≤ 0`.

use cobyla::{minimize, RhoBeg, StopTols};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Budgets of the two search phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Offspring per generation; `None` means `ceil(50 √dim)`.
    pub population: Option<usize>,
    pub generations: usize,
    /// Probability of ranking by objective alone when a pair is infeasible.
    pub pf: f64,
    pub refine_starts: usize,
    pub refine_evals: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { population: None, generations: 100, pf: 0.45, refine_starts: 3, refine_evals: 500, seed: 0 }
    }
}

impl SearchConfig {
    pub fn population_for(&self, dim: usize) -> usize {
        self.population.unwrap_or_else(|| (50.0 * (dim.max(1) as f64).sqrt()).ceil() as usize).max(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub value: f64,
    /// `Σ_j max(0, c_j(x))`
    pub violation: f64,
}

impl Candidate {
    fn new(x: Vec<f64>, (value, cons): (f64, Vec<f64>)) -> Self {
        let violation = cons.iter().map(|c| c.max(0.0)).sum();
        let value = if value.is_nan() { f64::NEG_INFINITY } else { value };
        Self { x, value, violation }
    }

    pub fn is_feasible(&self) -> bool {
        self.violation <= 0.0
    }

    /// Feasible beats infeasible, then larger value, then smaller violation.
    fn better_than(&self, other: &Self) -> bool {
        match (self.is_feasible(), other.is_feasible()) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.value > other.value,
            (false, false) => self.violation < other.violation,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Distinct candidates, best first.
    pub ranked: Vec<Candidate>,
    /// No candidate satisfied every constraint; `ranked[0]` is the least violating.
    pub fallback: bool,
}

impl SearchOutcome {
    pub fn best(&self) -> &Candidate {
        &self.ranked[0]
    }
}

struct Individual {
    x: Vec<f64>,
    sigma: Vec<f64>,
    cand: Candidate,
}

fn penalty(c: &Candidate) -> f64 {
    c.violation
}

/// Bubble-sort style stochastic ranking of `pop` (minimizing `-value`).
fn stochastic_rank(pop: &mut [Individual], pf: f64, rng: &mut ChaCha8Rng) {
    let n = pop.len();
    for _ in 0..n {
        let mut swapped = false;
        for j in 0..n.saturating_sub(1) {
            let (a, b) = (&pop[j].cand, &pop[j + 1].cand);
            let u: f64 = rng.random();
            let by_objective = (penalty(a) == 0.0 && penalty(b) == 0.0) || u < pf;
            let swap = if by_objective { a.value < b.value } else { penalty(a) > penalty(b) };
            if swap {
                pop.swap(j, j + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
}

/// Maximizes `eval(x).0` subject to `eval(x).1[j] ≤ 0` over `bounds`.
///
/// `eval` must be deterministic; population evaluations run in parallel but
/// the result only depends on `cfg.seed`.
pub fn maximize_constrained<F>(bounds: &[(f64, f64)], n_constraints: usize, eval: F, cfg: &SearchConfig) -> SearchOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    let dim = bounds.len();
    let lambda = cfg.population_for(dim);
    let mu = (lambda as f64 / 7.0).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let span: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let sqrt_n = (dim.max(1) as f64).sqrt();
    let tau = 1.0 / (2.0 * sqrt_n).sqrt();
    let tau_global = 1.0 / (2.0 * dim.max(1) as f64).sqrt();
    const GAMMA: f64 = 0.85;
    const ALPHA: f64 = 0.2;

    let evaluate_all = |xs: Vec<(Vec<f64>, Vec<f64>)>| -> Vec<Individual> {
        xs.into_par_iter()
            .map(|(x, sigma)| {
                let cand = Candidate::new(x.clone(), eval(&x));
                Individual { x, sigma, cand }
            })
            .collect()
    };

    let init: Vec<(Vec<f64>, Vec<f64>)> = (0..lambda)
        .map(|_| {
            let x = bounds.iter().map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo)).collect();
            (x, span.iter().map(|s| s / sqrt_n).collect())
        })
        .collect();
    let mut pop = evaluate_all(init);
    let mut best_ever = pop[0].cand.clone();
    for ind in &pop {
        if ind.cand.better_than(&best_ever) {
            best_ever = ind.cand.clone();
        }
    }

    let clip = |v: f64, p: usize| v.clamp(bounds[p].0, bounds[p].1);
    for _ in 0..cfg.generations {
        stochastic_rank(&mut pop, cfg.pf, &mut rng);
        pop.truncate(mu);
        let mut children = Vec::with_capacity(lambda);
        for k in 0..lambda {
            let i = k % mu;
            let parent = &pop[i];
            if k + 1 < mu {
                // differential variation towards the current leader
                let x = (0..dim)
                    .map(|p| clip(parent.x[p] + GAMMA * (pop[0].x[p] - pop[i + 1].x[p]), p))
                    .collect();
                children.push((x, parent.sigma.clone()));
                continue;
            }
            let global: f64 = rng.sample::<f64, _>(StandardNormal) * tau_global;
            let mut sigma: Vec<f64> = parent
                .sigma
                .iter()
                .enumerate()
                .map(|(p, &s)| (s * (global + tau * rng.sample::<f64, _>(StandardNormal)).exp()).min(span[p].max(f64::MIN_POSITIVE)))
                .collect();
            let mut x = parent.x.clone();
            for p in 0..dim {
                let mut trial = parent.x[p];
                for _ in 0..10 {
                    let t = parent.x[p] + sigma[p] * rng.sample::<f64, _>(StandardNormal);
                    if t >= bounds[p].0 && t <= bounds[p].1 {
                        trial = t;
                        break;
                    }
                }
                x[p] = trial;
            }
            for (s, &old) in sigma.iter_mut().zip(&parent.sigma) {
                *s = old + ALPHA * (*s - old);
            }
            children.push((x, sigma));
        }
        pop = evaluate_all(children);
        for ind in &pop {
            if ind.cand.better_than(&best_ever) {
                best_ever = ind.cand.clone();
            }
        }
    }

    let mut pool: Vec<Candidate> = pop.into_iter().map(|i| i.cand).collect();
    pool.push(best_ever);
    sort_candidates(&mut pool);
    dedup_candidates(&mut pool);

    let starts: Vec<Candidate> = pool.iter().take(cfg.refine_starts).cloned().collect();
    let refined: Vec<Candidate> = starts.iter().map(|s| refine(bounds, n_constraints, &eval, s, cfg.refine_evals)).collect();
    let mut ranked = refined;
    ranked.extend(pool);
    sort_candidates(&mut ranked);
    dedup_candidates(&mut ranked);
    let fallback = !ranked[0].is_feasible();
    SearchOutcome { ranked, fallback }
}

fn sort_candidates(c: &mut [Candidate]) {
    c.sort_by(|a, b| {
        if a.better_than(b) {
            std::cmp::Ordering::Less
        } else if b.better_than(a) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
}

fn dedup_candidates(c: &mut Vec<Candidate>) {
    let mut out: Vec<Candidate> = Vec::with_capacity(c.len());
    for cand in c.drain(..) {
        if !out.iter().any(|o| o.x == cand.x) {
            out.push(cand);
        }
    }
    *c = out;
}

fn refine<F>(bounds: &[(f64, f64)], n_constraints: usize, eval: &F, start: &Candidate, maxeval: usize) -> Candidate
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let objective = |x: &[f64], _: &mut ()| {
        let v = eval(x).0;
        if v.is_finite() {
            -v
        } else {
            f64::MAX
        }
    };
    let cons: Vec<_> = (0..n_constraints).map(|j| move |x: &[f64], _: &mut ()| -eval(x).1[j]).collect();
    let rho = bounds.iter().map(|(lo, hi)| 0.1 * (hi - lo)).fold(f64::INFINITY, f64::min);
    let rho = if rho.is_finite() && rho > 0.0 { rho } else { 0.1 };
    let tols = StopTols { ftol_rel: 1e-10, xtol_abs: vec![1e-8; bounds.len()], ..StopTols::default() };
    let x = match minimize(objective, &start.x, bounds, &cons, (), maxeval, RhoBeg::All(rho), Some(tols)) {
        Ok((_, x, _)) | Err((_, x, _)) => x,
    };
    let x: Vec<f64> = x.iter().zip(bounds).map(|(v, &(lo, hi))| v.clamp(lo, hi)).collect();
    let cand = Candidate::new(x.clone(), eval(&x));
    if cand.better_than(start) {
        cand
    } else {
        start.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SearchConfig {
        SearchConfig { generations: 40, ..SearchConfig::default() }
    }

    #[test]
    fn finds_unconstrained_peak() {
        let out = maximize_constrained(
            &[(-2.0, 2.0), (-2.0, 2.0)],
            0,
            |x| (-(x[0] - 0.3).powi(2) - (x[1] + 0.7).powi(2), vec![]),
            &small(),
        );
        let b = out.best();
        assert!(!out.fallback);
        assert!((b.x[0] - 0.3).abs() < 1e-4 && (b.x[1] + 0.7).abs() < 1e-4, "{:?}", b.x);
    }

    #[test]
    fn respects_constraint_boundary() {
        // max x + y on the unit disc
        let out = maximize_constrained(
            &[(-2.0, 2.0), (-2.0, 2.0)],
            1,
            |x| (x[0] + x[1], vec![x[0] * x[0] + x[1] * x[1] - 1.0]),
            &small(),
        );
        let b = out.best();
        assert!(b.is_feasible());
        assert!((b.value - 2f64.sqrt()).abs() < 1e-4, "{}", b.value);
    }

    #[test]
    fn falls_back_to_least_violation() {
        let out = maximize_constrained(&[(0.0, 1.0)], 1, |x| (x[0], vec![1.0 + (x[0] - 0.25).powi(2)]), &small());
        assert!(out.fallback);
        assert!((out.best().x[0] - 0.25).abs() < 1e-3);
    }

    #[test]
    fn deterministic_per_seed() {
        let f = |x: &[f64]| ((3.0 * x[0]).sin() * x[1].cos(), vec![x[0] - x[1]]);
        let a = maximize_constrained(&[(0.0, 3.0), (0.0, 3.0)], 1, f, &small());
        let b = maximize_constrained(&[(0.0, 3.0), (0.0, 3.0)], 1, f, &small());
        assert_eq!(a.best().x, b.best().x);
        assert_eq!(a.ranked.len(), b.ranked.len());
    }

    #[test]
    fn ranked_candidates_are_distinct_and_sorted() {
        let out = maximize_constrained(&[(0.0, 1.0)], 0, |x| (x[0] * (1.0 - x[0]), vec![]), &small());
        for w in out.ranked.windows(2) {
            assert!(w[0].value >= w[1].value);
            assert_ne!(w[0].x, w[1].x);
        }
    }
}
