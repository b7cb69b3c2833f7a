//! Comparison methods: a real-coded genetic algorithm and random search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::record::{EntryNotes, RunRecord};
use crate::sego::Problem;
use crate::space::{lhs_unit, MixedPoint};

/// Violation multiplier of the static penalty.
pub const PENALTY: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    /// Evaluations after the initial population.
    pub budget: usize,
    pub crossover_prob: f64,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    /// Per-gene mutation probability; `None` means `1/n′`.
    pub mutation_prob: Option<f64>,
    pub violation_tol: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 20,
            budget: 0,
            crossover_prob: 1.0,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
            mutation_prob: None,
            violation_tol: 1e-4,
            seed: 0,
        }
    }
}

struct Individual {
    genes: Vec<f64>,
    fitness: f64,
}

fn evaluate(problem: &Problem, record: &mut RunRecord, genes: &[f64], generation: usize) -> f64 {
    let w = problem.space.project(genes).expect("genes live in the relaxed box");
    let result = problem.evaluate(&w);
    let d_g = vec![None; record.n_constraints];
    let e = record.push(generation, w, result, EntryNotes { d_g, ..EntryNotes::default() });
    match (e.f, e.violation) {
        (Some(f), Some(v)) => f + PENALTY * v,
        _ => f64::INFINITY,
    }
}

/// Simulated binary crossover of one gene pair within `[lo, hi]`.
fn sbx(a: f64, b: f64, lo: f64, hi: f64, eta: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    if (a - b).abs() < 1e-14 || hi <= lo {
        return (a, b);
    }
    let (y1, y2) = if a < b { (a, b) } else { (b, a) };
    let u: f64 = rng.random();
    let child = |beta: f64| {
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        if u <= 1.0 / alpha {
            (u * alpha).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
        }
    };
    let beta1 = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
    let beta2 = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
    let c1 = (0.5 * ((y1 + y2) - child(beta1) * (y2 - y1))).clamp(lo, hi);
    let c2 = (0.5 * ((y1 + y2) + child(beta2) * (y2 - y1))).clamp(lo, hi);
    if rng.random::<bool>() {
        (c2, c1)
    } else {
        (c1, c2)
    }
}

/// Polynomial mutation of one gene within `[lo, hi]`.
fn polynomial_mutation(y: f64, lo: f64, hi: f64, eta: f64, rng: &mut ChaCha8Rng) -> f64 {
    if hi <= lo {
        return y;
    }
    let span = hi - lo;
    let (d1, d2) = ((y - lo) / span, (hi - y) / span);
    let u: f64 = rng.random();
    let p = 1.0 / (eta + 1.0);
    let dq = if u < 0.5 {
        let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
        v.powf(p) - 1.0
    } else {
        let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
        1.0 - v.powf(p)
    };
    (y + dq * span).clamp(lo, hi)
}

fn tournament<'a>(pop: &'a [Individual], rng: &mut ChaCha8Rng) -> &'a Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if b.fitness < a.fitness {
        b
    } else {
        a
    }
}

/// `(μ+λ)` genetic algorithm over the relaxed box with projection before
/// each evaluation and a static penalty `f + 10⁶ · violation`.
pub fn ga_baseline(problem: &Problem, cfg: &GaConfig) -> RunRecord {
    let mut record = RunRecord::new(&problem.name, "ga", cfg.seed, problem.n_constraints(), cfg.violation_tol);
    let bounds = problem.space.relaxed_bounds();
    let dim = bounds.len();
    let pm = cfg.mutation_prob.unwrap_or(1.0 / dim.max(1) as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mu = cfg.population.max(2);

    let mut pop: Vec<Individual> = lhs_unit(dim, mu, &mut rng)
        .into_iter()
        .map(|u| {
            let genes: Vec<f64> = u.iter().zip(&bounds).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect();
            let fitness = evaluate(problem, &mut record, &genes, 0);
            Individual { genes, fitness }
        })
        .collect();

    let mut remaining = cfg.budget;
    let mut generation = 0;
    while remaining > 0 {
        generation += 1;
        let lambda = mu.min(remaining);
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(lambda + 1);
        while children.len() < lambda {
            let (p1, p2) = (tournament(&pop, &mut rng).genes.clone(), tournament(&pop, &mut rng).genes.clone());
            let (mut c1, mut c2) = (p1.clone(), p2.clone());
            if rng.random::<f64>() < cfg.crossover_prob {
                for k in 0..dim {
                    if rng.random::<bool>() {
                        let (a, b) = sbx(p1[k], p2[k], bounds[k].0, bounds[k].1, cfg.eta_crossover, &mut rng);
                        c1[k] = a;
                        c2[k] = b;
                    }
                }
            }
            for c in [&mut c1, &mut c2] {
                for k in 0..dim {
                    if rng.random::<f64>() < pm {
                        c[k] = polynomial_mutation(c[k], bounds[k].0, bounds[k].1, cfg.eta_mutation, &mut rng);
                    }
                }
            }
            children.push(c1);
            children.push(c2);
        }
        children.truncate(lambda);
        for genes in children {
            let fitness = evaluate(problem, &mut record, &genes, generation);
            pop.push(Individual { genes, fitness });
        }
        remaining -= lambda;
        // stable: earlier individuals win ties
        pop.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
        pop.truncate(mu);
    }
    record
}

/// Uniform sampling of the mixed space: `evaluations` independent points.
pub fn random_search(problem: &Problem, evaluations: usize, seed: u64, violation_tol: f64) -> RunRecord {
    let mut record = RunRecord::new(&problem.name, "random", seed, problem.n_constraints(), violation_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..evaluations {
        let w: MixedPoint = problem.space.sample_uniform(&mut rng);
        let result = problem.evaluate(&w);
        let d_g = vec![None; record.n_constraints];
        record.push(i, w, result, EntryNotes { d_g, ..EntryNotes::default() });
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Evaluation;
    use crate::space::MixedSpace;

    fn sphere() -> Problem {
        let space = MixedSpace::continuous_only(vec![(-5.0, 5.0); 3]).unwrap();
        Problem::from_fn("sphere", space, 0, |w| Evaluation::new(w.x.iter().map(|v| v * v).sum(), vec![]))
    }

    #[test]
    fn ga_solves_sphere() {
        let r = ga_baseline(&sphere(), &GaConfig { budget: 1980, seed: 4, ..GaConfig::default() });
        assert_eq!(r.entries.len(), 2000);
        assert!(r.final_incumbent().unwrap() < 1e-2, "{:?}", r.final_incumbent());
    }

    #[test]
    fn ga_zero_budget_and_determinism() {
        let r = ga_baseline(&sphere(), &GaConfig::default());
        assert_eq!(r.entries.len(), 20);
        let a = ga_baseline(&sphere(), &GaConfig { budget: 55, seed: 2, ..GaConfig::default() });
        let b = ga_baseline(&sphere(), &GaConfig { budget: 55, seed: 2, ..GaConfig::default() });
        assert_eq!(a, b);
        assert_eq!(a.entries.len(), 75);
    }

    #[test]
    fn ga_respects_mixed_space_and_penalty() {
        let space = MixedSpace::new(vec![(0.0, 1.0)], vec![vec![1, 4, 9]], vec![3]).unwrap();
        let p = Problem::from_fn("m", space.clone(), 1, |w| {
            Evaluation::new(w.x[0] + w.z[0] as f64 + w.c[0] as f64, vec![0.5 - w.x[0]])
        });
        let r = ga_baseline(&p, &GaConfig { budget: 200, seed: 1, ..GaConfig::default() });
        assert!(r.entries.iter().all(|e| space.contains(&e.point)));
        let best = r.best_feasible().unwrap();
        assert_eq!((best.point.z[0], best.point.c[0]), (1, 0));
        assert!(best.f.unwrap() < 1.6);
    }

    #[test]
    fn random_search_is_seeded() {
        let a = random_search(&sphere(), 10, 3, 1e-4);
        assert_eq!(a, random_search(&sphere(), 10, 3, 1e-4));
        assert_ne!(a, random_search(&sphere(), 10, 4, 1e-4));
        assert_eq!(a.entries.len(), 10);
    }

    #[test]
    fn operators_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let (a, b) = sbx(0.1, 0.9, 0.0, 1.0, 15.0, &mut rng);
            assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            let m = polynomial_mutation(0.95, 0.0, 1.0, 20.0, &mut rng);
            assert!((0.0..=1.0).contains(&m));
        }
    }
}
