//! Mixed continuous / integer / categorical design spaces.
//!
//! A [`MixedSpace`] is relaxed into a continuous box of dimension
//! `n + m + ΣLⱼ`. The relaxed layout is fixed:
//!
//! ```text
//! [ continuous (n) | integer (m) | categorical 0 (L₀) | ... | categorical l-1 (L_{l-1}) ]
//! ```
//!
//! Integers relax to their value as a real, bounded by their smallest and
//! largest level. Each categorical relaxes to a one-hot block in `[0,1]^Lⱼ`.

use std::ops::Deref;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct MixedSpace {
    continuous: Vec<(f64, f64)>,
    integers: Vec<Vec<i64>>,
    categoricals: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    #[serde(default)]
    continuous: Vec<(f64, f64)>,
    #[serde(default)]
    integers: Vec<Vec<i64>>,
    #[serde(default)]
    categoricals: Vec<usize>,
}

impl TryFrom<RawSpace> for MixedSpace {
    type Error = Error;
    fn try_from(raw: RawSpace) -> Result<Self> {
        MixedSpace::new(raw.continuous, raw.integers, raw.categoricals)
    }
}

impl From<MixedSpace> for RawSpace {
    fn from(s: MixedSpace) -> Self {
        RawSpace { continuous: s.continuous, integers: s.integers, categoricals: s.categoricals }
    }
}

impl MixedSpace {
    pub fn new(
        continuous: Vec<(f64, f64)>,
        integers: Vec<Vec<i64>>,
        categoricals: Vec<usize>,
    ) -> Result<Self> {
        for (i, &(lo, hi)) in continuous.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Domain(format!(
                    "continuous variable {i}: bounds ({lo}, {hi}) must be finite with lower < upper"
                )));
            }
        }
        for (i, levels) in integers.iter().enumerate() {
            if levels.is_empty() {
                return Err(Error::Domain(format!("integer variable {i} has no levels")));
            }
            if levels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Domain(format!(
                    "integer variable {i}: levels must be strictly ascending"
                )));
            }
        }
        for (j, &l) in categoricals.iter().enumerate() {
            if l < 2 {
                return Err(Error::Domain(format!(
                    "categorical variable {j} needs at least 2 levels, got {l}"
                )));
            }
        }
        Ok(Self { continuous, integers, categoricals })
    }

    pub fn continuous_only(bounds: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(bounds, vec![], vec![])
    }

    /// Integer variable with the contiguous levels `lo..=hi`.
    pub fn int_range(lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi).collect()
    }

    pub fn continuous(&self) -> &[(f64, f64)] {
        &self.continuous
    }

    pub fn integers(&self) -> &[Vec<i64>] {
        &self.integers
    }

    pub fn categoricals(&self) -> &[usize] {
        &self.categoricals
    }

    pub fn n_continuous(&self) -> usize {
        self.continuous.len()
    }

    pub fn n_integer(&self) -> usize {
        self.integers.len()
    }

    pub fn n_categorical(&self) -> usize {
        self.categoricals.len()
    }

    /// `n + m + ΣLⱼ`
    pub fn relaxed_dim(&self) -> usize {
        self.continuous.len() + self.integers.len() + self.categoricals.iter().sum::<usize>()
    }

    /// True when relax/project are identities.
    pub fn is_continuous(&self) -> bool {
        self.integers.is_empty() && self.categoricals.is_empty()
    }

    /// Bounds of the relaxed box, in relaxed layout order.
    pub fn relaxed_bounds(&self) -> Vec<(f64, f64)> {
        let mut b = Vec::with_capacity(self.relaxed_dim());
        b.extend_from_slice(&self.continuous);
        for levels in &self.integers {
            b.push((levels[0] as f64, *levels.last().unwrap() as f64));
        }
        for &l in &self.categoricals {
            b.extend(std::iter::repeat_n((0.0, 1.0), l));
        }
        b
    }

    pub fn contains(&self, w: &MixedPoint) -> bool {
        self.check(w).is_ok()
    }

    fn check(&self, w: &MixedPoint) -> Result<()> {
        if w.x.len() != self.continuous.len()
            || w.z.len() != self.integers.len()
            || w.c.len() != self.categoricals.len()
        {
            return Err(Error::Domain(format!(
                "point shape ({}, {}, {}) does not match space ({}, {}, {})",
                w.x.len(),
                w.z.len(),
                w.c.len(),
                self.continuous.len(),
                self.integers.len(),
                self.categoricals.len()
            )));
        }
        for (i, (&v, &(lo, hi))) in w.x.iter().zip(&self.continuous).enumerate() {
            if !(lo..=hi).contains(&v) {
                return Err(Error::Domain(format!("continuous {i}: {v} outside [{lo}, {hi}]")));
            }
        }
        for (i, (v, levels)) in w.z.iter().zip(&self.integers).enumerate() {
            if levels.binary_search(v).is_err() {
                return Err(Error::Domain(format!("integer {i}: {v} is not a level")));
            }
        }
        for (j, (&c, &l)) in w.c.iter().zip(&self.categoricals).enumerate() {
            if c >= l {
                return Err(Error::Domain(format!("categorical {j}: level {c} >= {l}")));
            }
        }
        Ok(())
    }

    pub fn relax(&self, w: &MixedPoint) -> Result<RelaxedVector> {
        self.check(w)?;
        let mut v = Vec::with_capacity(self.relaxed_dim());
        v.extend_from_slice(&w.x);
        v.extend(w.z.iter().map(|&z| z as f64));
        for (&c, &l) in w.c.iter().zip(&self.categoricals) {
            v.extend((0..l).map(|k| if k == c { 1.0 } else { 0.0 }));
        }
        Ok(RelaxedVector(v))
    }

    /// Maps a relaxed vector to the closest mixed point: continuous values are
    /// clipped, integers go to the nearest level (ties toward the lower level)
    /// and categoricals take the argmax of their block (ties toward the lowest
    /// index).
    pub fn project(&self, relaxed: &[f64]) -> Result<MixedPoint> {
        if relaxed.len() != self.relaxed_dim() {
            return Err(Error::Domain(format!(
                "relaxed vector has length {}, expected {}",
                relaxed.len(),
                self.relaxed_dim()
            )));
        }
        if let Some(i) = relaxed.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("relaxed coordinate {i} is not finite")));
        }
        let n = self.continuous.len();
        let m = self.integers.len();
        let x = relaxed[..n]
            .iter()
            .zip(&self.continuous)
            .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
            .collect();
        let z = relaxed[n..n + m]
            .iter()
            .zip(&self.integers)
            .map(|(&v, levels)| nearest_level(levels, v))
            .collect();
        let mut offset = n + m;
        let mut c = Vec::with_capacity(self.categoricals.len());
        for &l in &self.categoricals {
            let block = &relaxed[offset..offset + l];
            let mut best = 0;
            for k in 1..l {
                if block[k] > block[best] {
                    best = k;
                }
            }
            c.push(best);
            offset += l;
        }
        Ok(MixedPoint { x, z, c })
    }

    /// Uniform point of the relaxed box, projected.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> MixedPoint {
        let v: Vec<f64> = self
            .relaxed_bounds()
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect();
        self.project(&v).expect("sampled inside the relaxed box")
    }

    /// Every combination of integer levels and categorical levels.
    pub fn discrete_combinations(&self) -> Vec<(Vec<i64>, Vec<usize>)> {
        let mut out = vec![(Vec::new(), Vec::new())];
        for levels in &self.integers {
            out = out
                .into_iter()
                .flat_map(|(z, c)| {
                    levels.iter().map(move |&v| {
                        let mut z = z.clone();
                        z.push(v);
                        (z, c.clone())
                    })
                })
                .collect();
        }
        for &l in &self.categoricals {
            out = out
                .into_iter()
                .flat_map(|(z, c)| {
                    (0..l).map(move |k| {
                        let mut c = c.clone();
                        c.push(k);
                        (z.clone(), c)
                    })
                })
                .collect();
        }
        out
    }
}

fn nearest_level(levels: &[i64], v: f64) -> i64 {
    let mut best = levels[0];
    let mut best_dist = (v - best as f64).abs();
    for &l in &levels[1..] {
        let d = (v - l as f64).abs();
        if d < best_dist {
            best = l;
            best_dist = d;
        }
    }
    best
}

/// A point `w = (x, z, c)` of a mixed space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPoint {
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default)]
    pub z: Vec<i64>,
    #[serde(default)]
    pub c: Vec<usize>,
}

impl MixedPoint {
    pub fn new(x: Vec<f64>, z: Vec<i64>, c: Vec<usize>) -> Self {
        Self { x, z, c }
    }

    pub fn continuous(x: Vec<f64>) -> Self {
        Self { x, z: vec![], c: vec![] }
    }
}

/// Continuous relaxation of a [`MixedPoint`]; see the module docs for the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedVector(pub Vec<f64>);

impl Deref for RelaxedVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for RelaxedVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Latin hypercube sample of `count` points in the relaxed box, projected back
/// to the mixed space. Each relaxed dimension is split into `count` equal
/// strata; every stratum receives exactly one point at its center, strata are
/// randomly permuted per dimension.
pub fn lhs_sample(space: &MixedSpace, count: usize, seed: u64) -> Vec<MixedPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lhs_unit(space.relaxed_dim(), count, &mut rng)
        .into_iter()
        .map(|u| {
            let v: Vec<f64> = u
                .iter()
                .zip(space.relaxed_bounds())
                .map(|(&t, (lo, hi))| lo + t * (hi - lo))
                .collect();
            space.project(&v).expect("LHS point inside the relaxed box")
        })
        .collect()
}

/// Centered Latin hypercube in `[0,1]^dim`.
pub fn lhs_unit<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]; count];
    let mut perm: Vec<usize> = (0..count).collect();
    for j in 0..dim {
        perm.shuffle(rng);
        for (i, p) in pts.iter_mut().enumerate() {
            p[j] = (perm[i] as f64 + 0.5) / count as f64;
        }
    }
    pts
}

/// One evaluated design: point, objective and constraint values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoeRow {
    pub point: MixedPoint,
    pub f: f64,
    pub g: Vec<f64>,
}

/// Design of experiments over a single space with a fixed constraint count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Doe {
    space: MixedSpace,
    n_constraints: usize,
    rows: Vec<DoeRow>,
}

impl Doe {
    pub fn new(space: MixedSpace, n_constraints: usize) -> Self {
        Self { space, n_constraints, rows: Vec::new() }
    }

    pub fn push(&mut self, point: MixedPoint, f: f64, g: Vec<f64>) -> Result<()> {
        self.space.check(&point)?;
        if g.len() != self.n_constraints {
            return Err(Error::Domain(format!(
                "constraint vector has length {}, expected {}",
                g.len(),
                self.n_constraints
            )));
        }
        self.rows.push(DoeRow { point, f, g });
        Ok(())
    }

    pub fn space(&self) -> &MixedSpace {
        &self.space
    }

    pub fn rows(&self) -> &[DoeRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_constraints(&self) -> usize {
        self.n_constraints
    }

    /// Relaxed inputs, one row per design.
    pub fn relaxed_inputs(&self) -> Vec<RelaxedVector> {
        self.rows.iter().map(|r| self.space.relax(&r.point).expect("validated on push")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MixedSpace {
        MixedSpace::new(vec![(0.0, 1.0)], vec![vec![1, 3, 5]], vec![3]).unwrap()
    }

    #[test]
    fn relaxed_dim_of_aircraft_shapes() {
        // 6 continuous, 2 integers, two binary categoricals
        let ceras = MixedSpace::new(
            vec![(0.0, 1.0); 6],
            vec![vec![30, 32, 34, 36], vec![2, 3, 4]],
            vec![2, 2],
        )
        .unwrap();
        assert_eq!(ceras.relaxed_dim(), 12);
        let dragon = MixedSpace::new(vec![(0.0, 1.0); 10], vec![], vec![17, 2]).unwrap();
        assert_eq!(dragon.relaxed_dim(), 29);
        let cont = MixedSpace::continuous_only(vec![(0.0, 1.0); 3]).unwrap();
        assert_eq!(cont.relaxed_dim(), 3);
    }

    #[test]
    fn relax_examples() {
        let s = small();
        let w = MixedPoint::new(vec![0.5], vec![3], vec![1]);
        assert_eq!(s.relax(&w).unwrap().0, vec![0.5, 3.0, 0.0, 1.0, 0.0]);

        let cont = MixedSpace::continuous_only(vec![(-1.0, 1.0), (0.0, 2.0)]).unwrap();
        let p = MixedPoint::continuous(vec![0.25, 1.5]);
        assert_eq!(cont.relax(&p).unwrap().0, vec![0.25, 1.5]);

        let cat = MixedSpace::new(vec![], vec![], vec![2]).unwrap();
        assert_eq!(cat.relax(&MixedPoint::new(vec![], vec![], vec![0])).unwrap().0, vec![1.0, 0.0]);
    }

    #[test]
    fn relax_rejects_points_outside() {
        let s = small();
        assert!(s.relax(&MixedPoint::new(vec![1.5], vec![3], vec![1])).is_err());
        assert!(s.relax(&MixedPoint::new(vec![0.5], vec![2], vec![1])).is_err());
        assert!(s.relax(&MixedPoint::new(vec![0.5], vec![3], vec![3])).is_err());
        assert!(s.relax(&MixedPoint::new(vec![0.5], vec![], vec![1])).is_err());
    }

    #[test]
    fn project_rounds_and_takes_argmax() {
        let s = small();
        let w = s.project(&[2.0, 3.7, 0.2, 0.9, 0.1]).unwrap();
        assert_eq!(w, MixedPoint::new(vec![1.0], vec![3], vec![1]));
        // midpoint between 3 and 5 goes low; categorical tie goes to lowest index
        let w = s.project(&[-1.0, 4.0, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(w, MixedPoint::new(vec![0.0], vec![3], vec![0]));
        // beyond the level range
        let w = s.project(&[0.3, 99.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(w.z, vec![5]);
        assert!(s.project(&[0.0, 1.0]).is_err());
        assert!(s.project(&[f64::NAN, 1.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn nearest_level_matches_linear_scan_oracle() {
        let levels = [1, 3, 5];
        let oracle = |v: f64| {
            let mut d: Vec<(f64, i64)> = levels.iter().map(|&l| ((v - l as f64).abs(), l)).collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d[0].1
        };
        for k in 0..=80 {
            let v = -1.0 + k as f64 * 0.1;
            assert_eq!(nearest_level(&levels, v), oracle(v), "v = {v}");
        }
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(MixedSpace::new(vec![(1.0, 1.0)], vec![], vec![]).is_err());
        assert!(MixedSpace::new(vec![], vec![vec![]], vec![]).is_err());
        assert!(MixedSpace::new(vec![], vec![vec![3, 1]], vec![]).is_err());
        assert!(MixedSpace::new(vec![], vec![], vec![1]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = small();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"continuous":[[0.0,1.0]],"integers":[[1,3,5]],"categoricals":[3]}"#);
        let back: MixedSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"continuous":[[2.0,1.0]],"integers":[],"categoricals":[]}"#;
        assert!(serde_json::from_str::<MixedSpace>(bad).is_err());
        let partial: MixedSpace = serde_json::from_str(r#"{"categoricals":[4]}"#).unwrap();
        assert_eq!(partial.relaxed_dim(), 4);
    }

    #[test]
    fn lhs_is_valid_and_deterministic() {
        let s = small();
        let a = lhs_sample(&s, 5, 11);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|w| s.contains(w)));
        assert_eq!(a, lhs_sample(&s, 5, 11));
    }

    #[test]
    fn lhs_stratifies_each_dimension() {
        let s = MixedSpace::continuous_only(vec![(0.0, 1.0)]).unwrap();
        let pts = lhs_sample(&s, 100, 3);
        let mut counts = [0usize; 100];
        for p in &pts {
            counts[((p.x[0] * 100.0).floor() as usize).min(99)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn discrete_combinations_cover_every_level() {
        let s = MixedSpace::new(vec![], vec![vec![0, 1], vec![5, 6, 7]], vec![2]).unwrap();
        let combos = s.discrete_combinations();
        assert_eq!(combos.len(), 12);
        let mut dedup = combos.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 12);
    }

    #[test]
    fn doe_enforces_constraint_width() {
        let mut doe = Doe::new(small(), 1);
        doe.push(MixedPoint::new(vec![0.5], vec![1], vec![2]), 1.0, vec![0.0]).unwrap();
        assert!(doe.push(MixedPoint::new(vec![0.5], vec![1], vec![2]), 1.0, vec![]).is_err());
        assert_eq!(doe.relaxed_inputs()[0].0, vec![0.5, 1.0, 0.0, 0.0, 1.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point_in(s: &MixedSpace) -> impl Strategy<Value = MixedPoint> {
            let xs: Vec<_> = s.continuous().iter().map(|&(lo, hi)| lo..=hi).collect();
            let zs: Vec<_> = s.integers().iter().map(|l| proptest::sample::select(l.clone())).collect();
            let cs: Vec<_> = s.categoricals().iter().map(|&l| 0..l).collect();
            (xs, zs, cs).prop_map(|(x, z, c)| MixedPoint { x, z, c })
        }

        proptest! {
            #[test]
            fn project_inverts_relax(w in point_in(&MixedSpace::new(
                vec![(-2.0, 3.0), (0.0, 1.0)],
                vec![vec![-4, 0, 7], vec![30, 32, 34, 36]],
                vec![2, 5],
            ).unwrap())) {
                let s = MixedSpace::new(
                    vec![(-2.0, 3.0), (0.0, 1.0)],
                    vec![vec![-4, 0, 7], vec![30, 32, 34, 36]],
                    vec![2, 5],
                ).unwrap();
                let r = s.relax(&w).unwrap();
                prop_assert_eq!(r.len(), s.relaxed_dim());
                let mut offset = 2 + 2;
                for &l in s.categoricals() {
                    let block = &r[offset..offset + l];
                    prop_assert_eq!(block.iter().sum::<f64>(), 1.0);
                    prop_assert!(block.iter().all(|&v| v == 0.0 || v == 1.0));
                    offset += l;
                }
                prop_assert_eq!(s.project(&r).unwrap(), w);
            }

            #[test]
            fn projection_lands_in_space(v in proptest::collection::vec(-50.0f64..50.0, 11)) {
                let s = MixedSpace::new(
                    vec![(-2.0, 3.0), (0.0, 1.0)],
                    vec![vec![-4, 0, 7], vec![30, 32, 34, 36]],
                    vec![2, 5],
                ).unwrap();
                prop_assert!(s.contains(&s.project(&v).unwrap()));
            }

            #[test]
            fn relaxed_dim_exceeds_variable_count(n in 0usize..4, m in 0usize..3, cats in proptest::collection::vec(2usize..6, 0..4)) {
                let l = cats.len();
                let s = MixedSpace::new(vec![(0.0, 1.0); n], vec![vec![0, 1]; m], cats).unwrap();
                if l == 0 {
                    prop_assert_eq!(s.relaxed_dim(), n + m);
                } else {
                    prop_assert!(s.relaxed_dim() > n + m + l);
                }
            }
        }
    }
}
