//! The SEGO enrichment loop over a mixed design space.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{compute_wb2s_scale, expected_improvement, feasibility_bound, wb2s, Acquisition, Feasibility};
use crate::adaptive::{select_components, AdaptiveConfig, Selection};
use crate::error::{Error, Result};
use crate::gp::{fit_gp, FitOptions, GpModel, KernelChoice};
use crate::record::{EntryNotes, Evaluation, IterationMeta, Proposal, RunRecord};
use crate::search::{maximize_constrained, SearchConfig};
use crate::space::{lhs_sample, lhs_unit, MixedPoint, MixedSpace};

/// An expensive function `w ↦ (f(w), g(w))`.
pub trait BlackBox: Send + Sync {
    fn n_constraints(&self) -> usize;
    fn evaluate(&self, w: &MixedPoint) -> Result<Evaluation>;
}

struct FnBlackBox<F> {
    n_constraints: usize,
    f: F,
}

impl<F> BlackBox for FnBlackBox<F>
where
    F: Fn(&MixedPoint) -> Evaluation + Send + Sync,
{
    fn n_constraints(&self) -> usize {
        self.n_constraints
    }

    fn evaluate(&self, w: &MixedPoint) -> Result<Evaluation> {
        Ok((self.f)(w))
    }
}

/// Inequality `|h| - ε ≤ 0` standing in for the equality `h = 0`.
pub fn equality_as_inequality(h: f64, eps: f64) -> f64 {
    h.abs() - eps
}

/// Known best objective value and, when available, where it is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: f64,
    pub point: Option<MixedPoint>,
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub space: MixedSpace,
    pub black_box: Arc<dyn BlackBox>,
    pub reference: Option<Reference>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("n_constraints", &self.n_constraints())
            .field("reference", &self.reference)
            .finish()
    }
}

impl Problem {
    pub fn new(name: &str, space: MixedSpace, black_box: Arc<dyn BlackBox>) -> Self {
        Self { name: name.to_string(), space, black_box, reference: None }
    }

    /// Problem from an infallible closure returning `(f, g)`.
    pub fn from_fn<F>(name: &str, space: MixedSpace, n_constraints: usize, f: F) -> Self
    where
        F: Fn(&MixedPoint) -> Evaluation + Send + Sync + 'static,
    {
        Self::new(name, space, Arc::new(FnBlackBox { n_constraints, f }))
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn n_constraints(&self) -> usize {
        self.black_box.n_constraints()
    }

    pub fn evaluate(&self, w: &MixedPoint) -> Result<Evaluation> {
        if !self.space.contains(w) {
            return Err(Error::Domain(format!("{w:?} lies outside the design space")));
        }
        self.black_box.evaluate(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelMode {
    FullSe,
    KplsFixed(usize),
    KplsAuto(AdaptiveConfig),
}

impl KernelMode {
    pub fn label(&self) -> String {
        match self {
            Self::FullSe => "krg".into(),
            Self::KplsFixed(d) => format!("kpls{d}"),
            Self::KplsAuto(_) => "kpls-auto".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegoConfig {
    pub doe_size: usize,
    pub iterations: usize,
    pub kernel: KernelMode,
    pub feasibility: Feasibility,
    /// Largest total violation counted as feasible.
    pub violation_tol: f64,
    pub acquisition: Acquisition,
    /// Inner search budgets; its seed is re-derived every iteration.
    pub search: SearchConfig,
    pub seed: u64,
    /// Record per-iteration wall time (makes output run-dependent).
    pub timing: bool,
    /// Evaluate the acquisition at `relax(project(X))` instead of `X`, so the
    /// inner search sees the point that will actually be evaluated.
    #[serde(default = "default_true")]
    pub projected_acquisition: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SegoConfig {
    fn default() -> Self {
        Self {
            doe_size: 5,
            iterations: 50,
            kernel: KernelMode::FullSe,
            feasibility: Feasibility::Utb { kappa: 3.0 },
            violation_tol: 1e-4,
            acquisition: Acquisition::default(),
            search: SearchConfig::default(),
            seed: 0,
            timing: false,
            projected_acquisition: true,
        }
    }
}

impl SegoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.doe_size < 2 {
            return Err(Error::Config(format!("initial design of {} points; at least 2 needed", self.doe_size)));
        }
        if !(self.violation_tol > 0.0) {
            return Err(Error::Config("violation tolerance must be positive".into()));
        }
        match self.kernel {
            KernelMode::KplsFixed(0) => return Err(Error::Config("KPLS needs at least one component".into())),
            KernelMode::KplsAuto(ref a) if a.d_min == 0 || a.d_max < a.d_min || a.folds < 2 => {
                return Err(Error::Config(format!("invalid adaptive settings {a:?}")))
            }
            _ => {}
        }
        if let Feasibility::Utb { kappa } = self.feasibility {
            if !(kappa >= 0.0) {
                return Err(Error::Config(format!("UTB κ = {kappa} must be non-negative")));
            }
        }
        if let Acquisition::Wb2s { beta } = self.acquisition {
            if !(beta > 0.0) {
                return Err(Error::Config(format!("WB2s β = {beta} must be positive")));
            }
        }
        Ok(())
    }
}

/// Deterministic sub-seed for `(seed, iteration, purpose)`.
pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Surrogates for the objective (index 0) and each constraint.
struct Surrogates {
    models: Vec<GpModel<f64>>,
    d: Vec<Option<usize>>,
    selections: Vec<Option<Selection>>,
}

fn fit_output(
    x: &[Vec<f64>],
    y: &[f64],
    mode: &KernelMode,
    bounds: &[(f64, f64)],
    seed: u64,
) -> Result<(GpModel<f64>, Option<usize>, Option<Selection>)> {
    let dim = bounds.len();
    let base = |k: &KernelChoice<f64>| FitOptions::for_kernel(k).with_bounds(bounds.to_vec()).with_seed(seed);
    let (d, selection) = match mode {
        KernelMode::FullSe => {
            let model = fit_gp(x, y, KernelChoice::FullSe, &base(&KernelChoice::FullSe))?;
            return Ok((model, None, None));
        }
        KernelMode::KplsFixed(d) => (*d, None),
        KernelMode::KplsAuto(cfg) => {
            let opts = base(&KernelChoice::Kpls(1)).reduced();
            let clamped = cfg.clamped(x.len(), dim).map(|c| AdaptiveConfig { seed: derive_seed(c.seed, seed, 7), ..c });
            match clamped {
                Some(c) => match select_components(x, y, &c, &opts) {
                    Ok(sel) => (sel.d, Some(sel)),
                    Err(_) => (c.d_min, None),
                },
                None => (1, None),
            }
        }
    };
    // PLS cannot extract more directions than the data spans
    let mut d = d.min(dim).min(x.len() - 1).max(1);
    loop {
        let k = KernelChoice::Kpls(d);
        match fit_gp(x, y, k.clone(), &base(&k)) {
            Ok(m) => return Ok((m, Some(d), selection)),
            Err(Error::DegenerateData(_)) if d > 1 => d -= 1,
            Err(e) => return Err(e),
        }
    }
}

fn fit_surrogates(x: &[Vec<f64>], outputs: &[Vec<f64>], cfg: &SegoConfig, bounds: &[(f64, f64)], iter: usize) -> Result<Surrogates> {
    let fitted: Vec<_> = outputs
        .par_iter()
        .enumerate()
        .map(|(j, y)| fit_output(x, y, &cfg.kernel, bounds, derive_seed(cfg.seed, iter as u64, 100 + j as u64)))
        .collect();
    let mut s = Surrogates { models: Vec::new(), d: Vec::new(), selections: Vec::new() };
    for r in fitted {
        let (m, d, sel) = r?;
        s.models.push(m);
        s.d.push(d);
        s.selections.push(sel);
    }
    Ok(s)
}

/// Best feasible observed objective, else the objective of the least
/// violating point (smaller `f` on ties). The flag marks the second case.
pub fn current_f_min(record: &RunRecord) -> Option<(f64, bool)> {
    if let Some(b) = record.best_feasible() {
        return b.f.map(|f| (f, false));
    }
    record
        .successful()
        .map(|e| (e.violation.unwrap_or(f64::INFINITY), e.f.unwrap()))
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .map(|(_, f)| (f, true))
}

/// Acquisition value and feasibility bounds at relaxed point `x`.
fn acquisition_at(
    models: &[GpModel<f64>],
    x: &[f64],
    acq: Acquisition,
    scale: f64,
    f_min: f64,
    feas: Feasibility,
) -> (f64, Vec<f64>) {
    let n_cons = models.len() - 1;
    let Ok((m, v)) = models[0].predict(x) else {
        return (f64::NEG_INFINITY, vec![f64::INFINITY; n_cons]);
    };
    let s = v.max(0.0).sqrt();
    let value = match acq {
        Acquisition::Ei => expected_improvement(m, s, f_min),
        Acquisition::Wb2 => wb2s(m, s, f_min, 1.0),
        Acquisition::Wb2s { .. } => wb2s(m, s, f_min, scale),
    };
    let bounds = models[1..]
        .iter()
        .map(|g| match g.predict(x) {
            Ok((gm, gv)) => feasibility_bound(gm, gv.max(0.0).sqrt(), feas),
            Err(_) => f64::INFINITY,
        })
        .collect();
    (value, bounds)
}

/// Maps a relaxed point onto the relaxation of its projection.
fn snap(space: &MixedSpace, x: &[f64]) -> Vec<f64> {
    let snapped = space.project(x).and_then(|w| space.relax(&w));
    snapped.map(|r| r.0).unwrap_or_else(|_| x.to_vec())
}

/// WB2s scale from the objective surrogate over a space-filling candidate set.
fn wb2s_scale(
    model: &GpModel<f64>,
    bounds: &[(f64, f64)],
    f_min: f64,
    beta: f64,
    count: usize,
    seed: u64,
    to_eval: &dyn Fn(&[f64]) -> Vec<f64>,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = lhs_unit(bounds.len(), count, &mut rng)
        .into_iter()
        .map(|u| u.iter().zip(bounds).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect())
        .collect();
    points.extend(model.training_inputs().into_iter().map(|r| {
        r.iter().zip(bounds).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect()
    }));
    let preds: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| model.predict(&to_eval(p)).ok())
        .map(|(m, v)| (m, v.max(0.0).sqrt()))
        .collect();
    compute_wb2s_scale(&preds, f_min, beta)
}

struct Choice {
    point: MixedPoint,
    meta: IterationMeta,
    notes: EntryNotes,
}

fn random_point(space: &MixedSpace, record: &RunRecord, seed: u64) -> MixedPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = space.sample_uniform(&mut rng);
    for _ in 0..100 {
        if !record.contains_point(&w) {
            break;
        }
        w = space.sample_uniform(&mut rng);
    }
    w
}

fn random_choice(iter: usize, space: &MixedSpace, record: &RunRecord, seed: u64, reason: String) -> Choice {
    let n_out = record.n_constraints + 1;
    Choice {
        point: random_point(space, record, seed),
        meta: IterationMeta {
            iter,
            d: vec![None; n_out],
            log_likelihood: Vec::new(),
            selections: vec![None; n_out],
            f_min: None,
            f_min_infeasible: false,
            scale: None,
            acq_value: None,
            fallback: false,
            proposal: Proposal::Random { reason },
        },
        notes: EntryNotes { d_g: vec![None; record.n_constraints], ..EntryNotes::default() },
    }
}

fn propose(problem: &Problem, cfg: &SegoConfig, record: &RunRecord, iter: usize) -> Choice {
    let space = &problem.space;
    let random_seed = derive_seed(cfg.seed, iter as u64, 3);
    let ok: Vec<_> = record.successful().collect();
    if ok.len() < 2 {
        return random_choice(iter, space, record, random_seed, "fewer than 2 successful evaluations".into());
    }
    let x: Vec<Vec<f64>> = match ok.iter().map(|e| space.relax(&e.point).map(|r| r.0)).collect::<Result<_>>() {
        Ok(x) => x,
        Err(e) => return random_choice(iter, space, record, random_seed, e.to_string()),
    };
    let mut outputs = vec![ok.iter().map(|e| e.f.unwrap()).collect::<Vec<f64>>()];
    for j in 0..record.n_constraints {
        outputs.push(ok.iter().map(|e| e.g[j]).collect());
    }
    let bounds = space.relaxed_bounds();
    let sur = match fit_surrogates(&x, &outputs, cfg, &bounds, iter) {
        Ok(s) => s,
        Err(e) => return random_choice(iter, space, record, random_seed, format!("surrogate fit failed: {e}")),
    };
    let (f_min, f_min_infeasible) = current_f_min(record).expect("successful entries exist");
    let discrete = space.n_integer() + space.n_categorical() > 0;
    let to_eval = |p: &[f64]| if cfg.projected_acquisition && discrete { snap(space, p) } else { p.to_vec() };
    let scale = match cfg.acquisition {
        Acquisition::Wb2s { beta } => wb2s_scale(
            &sur.models[0],
            &bounds,
            f_min,
            beta,
            cfg.search.population_for(bounds.len()),
            derive_seed(cfg.seed, iter as u64, 1),
            &to_eval,
        ),
        _ => 1.0,
    };
    let search_cfg = SearchConfig { seed: derive_seed(cfg.seed, iter as u64, 2), ..cfg.search.clone() };
    let outcome = maximize_constrained(
        &bounds,
        record.n_constraints,
        |p| acquisition_at(&sur.models, &to_eval(p), cfg.acquisition, scale, f_min, cfg.feasibility),
        &search_cfg,
    );
    let mut meta = IterationMeta {
        iter,
        d: sur.d.clone(),
        log_likelihood: sur.models.iter().map(GpModel::log_likelihood).collect(),
        selections: sur.selections,
        f_min: Some(f_min),
        f_min_infeasible,
        scale: matches!(cfg.acquisition, Acquisition::Wb2s { .. }).then_some(scale),
        acq_value: None,
        fallback: outcome.fallback,
        proposal: Proposal::Random { reason: "every candidate duplicates an evaluated point".into() },
    };
    let notes = EntryNotes { d_f: sur.d[0], d_g: sur.d[1..].to_vec(), acq_value: None, wall_ms: None };
    for (rank, cand) in outcome.ranked.iter().enumerate() {
        let Ok(w) = space.project(&cand.x) else { continue };
        if !record.contains_point(&w) {
            meta.acq_value = Some(cand.value);
            meta.proposal = Proposal::Search { rank };
            return Choice { point: w, meta, notes: EntryNotes { acq_value: Some(cand.value), ..notes } };
        }
    }
    Choice { point: random_point(space, record, random_seed), meta, notes }
}

/// Runs SEGO on `problem`: an LHS design of `cfg.doe_size` points followed by
/// `cfg.iterations` single-point enrichments.
pub fn optimize(problem: &Problem, cfg: &SegoConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let method = format!("sego-{}", cfg.kernel.label());
    let mut record = RunRecord::new(&problem.name, &method, cfg.seed, problem.n_constraints(), cfg.violation_tol);
    let d_g = vec![None; problem.n_constraints()];
    for w in lhs_sample(&problem.space, cfg.doe_size, cfg.seed) {
        let result = problem.evaluate(&w);
        record.push(0, w, result, EntryNotes { d_g: d_g.clone(), ..EntryNotes::default() });
    }
    for iter in 1..=cfg.iterations {
        let start = Instant::now();
        let mut choice = propose(problem, cfg, &record, iter);
        let result = problem.evaluate(&choice.point);
        if cfg.timing {
            choice.notes.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        record.push(iter, choice.point, result, choice.notes);
        record.iterations.push(choice.meta);
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::Feasibility;
    use crate::gp::NuggetMode;
    use proptest::prelude::*;

    fn sphere_problem() -> Problem {
        let space = MixedSpace::continuous_only(vec![(-2.0, 2.0), (-2.0, 2.0)]).unwrap();
        Problem::from_fn("sphere", space, 0, |w| Evaluation::new(w.x[0].powi(2) + (w.x[1] - 0.5).powi(2), vec![]))
    }

    fn quick(doe: usize, iterations: usize, seed: u64) -> SegoConfig {
        SegoConfig {
            doe_size: doe,
            iterations,
            search: SearchConfig { generations: 30, refine_evals: 200, ..SearchConfig::default() },
            seed,
            ..SegoConfig::default()
        }
    }

    #[test]
    fn zero_budget_keeps_initial_design() {
        let r = optimize(&sphere_problem(), &quick(6, 0, 1)).unwrap();
        assert_eq!(r.entries.len(), 6);
        assert!(r.entries.iter().all(|e| e.iter == 0));
        assert!(r.iterations.is_empty());
    }

    #[test]
    fn continuous_problem_converges() {
        let r = optimize(&sphere_problem(), &quick(5, 15, 3)).unwrap();
        assert_eq!(r.entries.len(), 20);
        assert!(r.final_incumbent().unwrap() < 1e-3, "{:?}", r.final_incumbent());
        // relaxation is the identity on a continuous space
        for e in &r.entries {
            assert_eq!(sphere_problem().space.relax(&e.point).unwrap().0, e.point.x);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let a = optimize(&sphere_problem(), &quick(5, 4, 9)).unwrap();
        let b = optimize(&sphere_problem(), &quick(5, 4, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failed_evaluations_are_recorded_and_skipped() {
        struct Flaky;
        impl BlackBox for Flaky {
            fn n_constraints(&self) -> usize {
                0
            }
            fn evaluate(&self, w: &MixedPoint) -> Result<Evaluation> {
                if w.x[0] > 0.5 {
                    Err(Error::Evaluation("crashed".into()))
                } else {
                    Ok(Evaluation::new(w.x[0].powi(2), vec![]))
                }
            }
        }
        let space = MixedSpace::continuous_only(vec![(-1.0, 1.0)]).unwrap();
        let p = Problem::new("flaky", space, Arc::new(Flaky));
        let r = optimize(&p, &quick(8, 5, 0)).unwrap();
        assert_eq!(r.entries.len(), 13);
        assert!(r.entries.iter().any(|e| e.failed()));
        assert!(r.entries.iter().filter(|e| e.failed()).all(|e| e.error.is_some() && e.f.is_none()));
    }

    #[test]
    fn f_min_prefers_feasible_then_least_violation() {
        let mut r = RunRecord::new("t", "m", 0, 1, 1e-4);
        let w = MixedPoint::continuous(vec![0.0]);
        r.push(0, w.clone(), Ok(Evaluation::new(1.0, vec![2.0])), EntryNotes::default());
        r.push(0, w.clone(), Ok(Evaluation::new(9.0, vec![0.5])), EntryNotes::default());
        r.push(0, w.clone(), Ok(Evaluation::new(4.0, vec![0.5])), EntryNotes::default());
        assert_eq!(current_f_min(&r), Some((4.0, true)));
        r.push(0, w, Ok(Evaluation::new(20.0, vec![-1.0])), EntryNotes::default());
        assert_eq!(current_f_min(&r), Some((20.0, false)));
    }

    #[test]
    fn infeasible_surrogates_trigger_fallback() {
        // constraint observed positive everywhere: mean prediction admits nothing
        let space = MixedSpace::continuous_only(vec![(0.0, 1.0)]).unwrap();
        let p = Problem::from_fn("infeasible", space, 1, |w| Evaluation::new(w.x[0], vec![1.0 + w.x[0]]));
        let cfg = SegoConfig { feasibility: Feasibility::MeanPrediction, ..quick(4, 2, 0) };
        let r = optimize(&p, &cfg).unwrap();
        assert!(r.iterations.iter().all(|m| m.fallback));
        assert!(r.iterations.iter().all(|m| m.f_min_infeasible));
        assert_eq!(r.final_incumbent(), None);
    }

    #[test]
    fn maximizer_dominates_training_points() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![0.0, -1.0, 0.0];
        let opts = FitOptions { nugget: NuggetMode::Fixed(1e-10), ..FitOptions::default() }.with_bounds(vec![(0.0, 2.0)]);
        let model = fit_gp(&x, &y, KernelChoice::FullSe, &opts).unwrap();
        let models = vec![model];
        let f_min = -1.0;
        let scale = wb2s_scale(&models[0], &[(0.0, 2.0)], f_min, 100.0, 50, 0, &|p: &[f64]| p.to_vec());
        let acq = |p: &[f64]| acquisition_at(&models, p, Acquisition::default(), scale, f_min, Feasibility::MeanPrediction);
        let out = maximize_constrained(&[(0.0, 2.0)], 0, acq, &SearchConfig::default());
        for xi in &x {
            assert!(out.best().value >= acq(xi).0);
        }
    }

    #[test]
    fn maximizer_matches_dense_grid() {
        let pts = lhs_sample(&MixedSpace::continuous_only(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap(), 8, 4);
        let x: Vec<Vec<f64>> = pts.iter().map(|w| w.x.clone()).collect();
        let y: Vec<f64> = x.iter().map(|p| (6.0 * p[0]).sin() + (p[1] - 0.3).powi(2)).collect();
        let opts = FitOptions { theta: Some(vec![4.0, 2.0]), ..FitOptions::default() }.with_bounds(vec![(0.0, 1.0); 2]);
        let models = vec![fit_gp(&x, &y, KernelChoice::FullSe, &opts).unwrap()];
        let f_min = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = wb2s_scale(&models[0], &[(0.0, 1.0); 2], f_min, 100.0, 100, 0, &|p: &[f64]| p.to_vec());
        let acq = |p: &[f64]| acquisition_at(&models, p, Acquisition::default(), scale, f_min, Feasibility::MeanPrediction).0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=200 {
            for j in 0..=200 {
                let v = acq(&[i as f64 / 200.0, j as f64 / 200.0]);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let out = maximize_constrained(&[(0.0, 1.0); 2], 0, |p| (acq(p), vec![]), &SearchConfig::default());
        assert!(out.best().value >= hi - 1e-3 * (hi - lo), "{} vs grid {hi}", out.best().value);
    }

    #[test]
    fn wb2s_argmax_is_scale_invariant() {
        let pts = lhs_sample(&MixedSpace::continuous_only(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap(), 7, 2);
        let x: Vec<Vec<f64>> = pts.iter().map(|w| w.x.clone()).collect();
        let y: Vec<f64> = x.iter().map(|p| (p[0] - 0.4).powi(2) + 0.5 * p[1] + 1.0).collect();
        let grid: Vec<Vec<f64>> = (0..=30).flat_map(|i| (0..=30).map(move |j| vec![i as f64 / 30.0, j as f64 / 30.0])).collect();
        let argmax = |c: f64| {
            let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
            let opts = FitOptions { theta: Some(vec![3.0, 1.5]), ..FitOptions::default() }.with_bounds(vec![(0.0, 1.0); 2]);
            let models = vec![fit_gp(&x, &ys, KernelChoice::FullSe, &opts).unwrap()];
            let f_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let scale = wb2s_scale(&models[0], &[(0.0, 1.0); 2], f_min, 100.0, 40, 1, &|p: &[f64]| p.to_vec());
            let vals: Vec<f64> = grid
                .iter()
                .map(|p| acquisition_at(&models, p, Acquisition::default(), scale, f_min, Feasibility::MeanPrediction).0)
                .collect();
            (0..vals.len()).max_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap()).unwrap()
        };
        let base = argmax(1.0);
        assert_eq!(argmax(1e3), base);
        assert_eq!(argmax(0.01), base);
    }

    #[test]
    fn kpls_modes_run() {
        let space = MixedSpace::new(vec![(0.0, 1.0); 3], vec![MixedSpace::int_range(0, 3)], vec![3]).unwrap();
        let p = Problem::from_fn("mixed", space, 1, |w| {
            Evaluation::new(
                (w.x[0] - 0.2).powi(2) + w.x[1] + 0.1 * w.z[0] as f64 + w.c[0] as f64,
                vec![w.x[2] - 0.8],
            )
        });
        for kernel in [KernelMode::KplsFixed(2), KernelMode::KplsAuto(AdaptiveConfig { d_max: 3, ..AdaptiveConfig::default() })] {
            let cfg = SegoConfig { kernel: kernel.clone(), ..quick(10, 3, 5) };
            let r = optimize(&p, &cfg).unwrap();
            assert_eq!(r.entries.len(), 13);
            for m in &r.iterations {
                assert_eq!(m.d.len(), 2);
                assert!(m.d.iter().all(|d| matches!(d, Some(1..=3))), "{:?} under {kernel:?}", m.d);
            }
            for e in &r.entries {
                assert!(p.space.contains(&e.point));
                assert_eq!(p.space.project(&p.space.relax(&e.point).unwrap()).unwrap(), e.point);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn incumbent_is_monotone_and_design_grows(seed in 0u64..1000, iterations in 0usize..4) {
            let space = MixedSpace::new(vec![(0.0, 1.0)], vec![MixedSpace::int_range(-2, 2)], vec![2]).unwrap();
            let p = Problem::from_fn("p", space, 1, |w| {
                Evaluation::new((w.x[0] - 0.3).powi(2) + w.z[0] as f64 * 0.2 + w.c[0] as f64, vec![0.5 - w.x[0]])
            });
            let r = optimize(&p, &quick(4, iterations, seed)).unwrap();
            prop_assert_eq!(r.entries.len(), 4 + iterations);
            let trace: Vec<f64> = r.incumbent_trace().into_iter().flatten().collect();
            prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]));
            for e in &r.entries {
                prop_assert!(p.space.contains(&e.point));
            }
        }
    }

    #[test]
    fn snap_lands_on_relaxed_mixed_points() {
        let space = MixedSpace::new(vec![(0.0, 2.0)], vec![vec![1, 4, 6]], vec![3]).unwrap();
        let snapped = snap(&space, &[2.5, 4.9, 0.2, 0.7, 0.7]);
        assert_eq!(snapped, vec![2.0, 4.0, 0.0, 1.0, 0.0]);
        let w = space.project(&snapped).unwrap();
        assert_eq!(space.relax(&w).unwrap().0, snapped);
    }

    #[test]
    fn literal_relaxed_acquisition_still_runs() {
        let space = MixedSpace::new(vec![(0.0, 1.0)], vec![MixedSpace::int_range(0, 4)], vec![]).unwrap();
        let p = Problem::from_fn("q", space, 0, |w| Evaluation::new((w.x[0] - 0.3).powi(2) + w.z[0] as f64, vec![]));
        let cfg = SegoConfig { projected_acquisition: false, ..quick(4, 3, 2) };
        let r = optimize(&p, &cfg).unwrap();
        assert_eq!(r.entries.len(), 7);
        assert!(r.entries.iter().all(|e| p.space.contains(&e.point)));
    }
}
