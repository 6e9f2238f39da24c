//! Discrete local-time field: the Brownian sheet is replaced by two-sided
//! ±1 random walks (d = 1), local time by visit counts and the level
//! measure by counting measure on a finite level range. The unit increment
//! of the visit count is f_t(r, x) = 1{B^r_{t+1} = x}.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classification::{check_weights, DualSystem};
use crate::error::{invalid, FieldError, Result};
use crate::lattice::{LatticeIndex, Window};
use crate::measure_space::check_dim;
use crate::simulate::rng_stream;
use crate::spectral::{AtomSource, FieldKind, Integral, SpectralFamily, SpectralModel, TableAtoms};

/// One two-sided walk stored as step bits with checkpoints every 64 steps;
/// `bwd` holds the increments of the negative-time half read backwards.
#[derive(Debug, Clone)]
struct Walk {
    fwd: Vec<u64>,
    bwd: Vec<u64>,
    fwd_cp: Vec<i32>,
    bwd_cp: Vec<i32>,
}

fn checkpoints(bits: &[u64]) -> Vec<i32> {
    let mut cp = Vec::with_capacity(bits.len() + 1);
    let mut pos = 0i32;
    cp.push(0);
    for w in bits {
        pos += 2 * w.count_ones() as i32 - 64;
        cp.push(pos);
    }
    cp
}

fn prefix(bits: &[u64], cp: &[i32], n: usize) -> i32 {
    let (w, r) = (n / 64, n % 64);
    if r == 0 {
        return cp[w];
    }
    let ones = (bits[w] & ((1u64 << r) - 1)).count_ones() as i32;
    cp[w] + 2 * ones - r as i32
}

impl Walk {
    fn new(words: usize, mut step: impl FnMut() -> u64) -> Self {
        let fwd: Vec<u64> = (0..words).map(|_| step()).collect();
        let bwd: Vec<u64> = (0..words).map(|_| step()).collect();
        Walk { fwd_cp: checkpoints(&fwd), bwd_cp: checkpoints(&bwd), fwd, bwd }
    }

    /// B_s for |s| within the stored horizon (B_0 = 0).
    fn at(&self, s: i64) -> i32 {
        if s >= 0 {
            prefix(&self.fwd, &self.fwd_cp, s as usize)
        } else {
            -prefix(&self.bwd, &self.bwd_cp, (-s) as usize)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalTimeOptions {
    pub walks: usize,
    /// Walks are stored for times −H..=H.
    pub walk_horizon: u64,
    pub level_lo: i32,
    pub level_hi: i32,
    pub seed: u64,
    /// All increments +1 (degenerate check case).
    pub deterministic: bool,
}

impl Default for LocalTimeOptions {
    fn default() -> Self {
        LocalTimeOptions { walks: 2048, walk_horizon: 65_600, level_lo: -6, level_hi: 6, seed: 2024, deterministic: false }
    }
}

#[derive(Debug, Clone)]
pub struct LocalTimeModel {
    walks: Arc<Vec<Walk>>,
    /// P̂(B_s = B_1 ∈ range) for s = −H..=H, built on first use.
    return_table: Arc<OnceLock<Vec<f64>>>,
    pub options: LocalTimeOptions,
}

impl LocalTimeModel {
    pub fn new(options: LocalTimeOptions) -> Result<Self> {
        if options.walks == 0 {
            return Err(invalid("walks", "need at least one walk"));
        }
        if options.walk_horizon < 2 {
            return Err(invalid("walk_horizon", "need a horizon of at least 2"));
        }
        if options.level_lo > options.level_hi {
            return Err(invalid("level_range", "empty level range"));
        }
        let words = (options.walk_horizon as usize + 1).div_ceil(64) + 1;
        let walks: Vec<Walk> = (0..options.walks)
            .into_par_iter()
            .map(|r| {
                if options.deterministic {
                    Walk::new(words, || u64::MAX)
                } else {
                    let mut rng = rng_stream(options.seed, r as u64);
                    Walk::new(words, || rng.random())
                }
            })
            .collect();
        Ok(LocalTimeModel { walks: Arc::new(walks), return_table: Arc::new(OnceLock::new()), options })
    }

    fn return_table(&self) -> &[f64] {
        self.return_table.get_or_init(|| {
            let h = self.horizon() as usize;
            let counts = self
                .walks
                .par_iter()
                .fold(
                    || vec![0u32; 2 * h + 1],
                    |mut acc, w| {
                        let target = w.at(1);
                        if !self.in_range(target) {
                            return acc;
                        }
                        for (bits, sign, dir) in [(&w.fwd, 1i32, 1i64), (&w.bwd, -1, -1)] {
                            let mut pos = 0i32;
                            for n in 0..=h {
                                if pos * sign == target {
                                    acc[(h as i64 + dir * n as i64) as usize] += 1;
                                }
                                if n < h {
                                    pos += if bits[n / 64] >> (n % 64) & 1 == 1 { 1 } else { -1 };
                                }
                            }
                        }
                        // s = 0 was visited by both halves
                        if target == 0 {
                            acc[h] -= 1;
                        }
                        acc
                    },
                )
                .reduce(
                    || vec![0u32; 2 * h + 1],
                    |mut a, b| {
                        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                        a
                    },
                );
            let r = self.walks.len() as f64;
            counts.into_iter().map(|c| c as f64 / r).collect()
        })
    }

    fn horizon(&self) -> i64 {
        self.options.walk_horizon as i64
    }

    fn in_range(&self, x: i32) -> bool {
        self.options.level_lo <= x && x <= self.options.level_hi
    }

    fn check_time(&self, s: i64) -> Result<()> {
        if s.abs() > self.horizon() {
            return Err(FieldError::TruncationEscape {
                t: LatticeIndex::new(vec![s - 1]),
                state: format!("walk time {s} beyond horizon {}", self.horizon()),
            });
        }
        Ok(())
    }

    pub fn n_levels(&self) -> usize {
        (self.options.level_hi - self.options.level_lo + 1) as usize
    }

    /// Position of walk r at time s.
    pub fn position(&self, r: usize, s: i64) -> Result<i32> {
        self.check_time(s)?;
        Ok(self.walks[r].at(s))
    }

    /// Fraction of (walk, time) pairs in times 1..=n whose level falls
    /// outside the level range.
    pub fn out_of_range_fraction(&self, n: i64) -> f64 {
        let n = n.min(self.horizon()).max(1);
        let outside: usize = self
            .walks
            .par_iter()
            .map(|w| (1..=n).filter(|&s| !self.in_range(w.at(s))).count())
            .sum();
        outside as f64 / (n as f64 * self.walks.len() as f64)
    }

    /// Empirical P(B_s = x) for each level in the range.
    fn level_histogram(&self, s: i64) -> Vec<f64> {
        let mut h = vec![0.0; self.n_levels()];
        let inv = 1.0 / self.walks.len() as f64;
        for w in self.walks.iter() {
            let x = w.at(s);
            if self.in_range(x) {
                h[(x - self.options.level_lo) as usize] += inv;
            }
        }
        h
    }
}

impl SpectralModel for LocalTimeModel {
    fn dim(&self) -> usize {
        1
    }

    fn total_mass(&self) -> Option<f64> {
        Some(self.n_levels() as f64)
    }

    fn integrate(&self, indices: &[LatticeIndex], func: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Integral> {
        let mut times = Vec::with_capacity(indices.len());
        for t in indices {
            check_dim(1, t)?;
            let s = t.coords()[0] + 1;
            self.check_time(s)?;
            times.push(s);
        }
        let per_walk: Vec<f64> = self
            .walks
            .par_iter()
            .with_min_len(32)
            .map(|w| {
                let pos: Vec<i32> = times.iter().map(|&s| w.at(s)).collect();
                let mut levels: Vec<i32> = pos.iter().copied().filter(|&x| self.in_range(x)).collect();
                levels.sort_unstable();
                levels.dedup();
                let mut v = vec![0.0; pos.len()];
                let mut acc = 0.0;
                for x in levels {
                    for (slot, &p) in v.iter_mut().zip(&pos) {
                        *slot = (p == x) as u8 as f64;
                    }
                    acc += func(&v);
                }
                acc
            })
            .collect();
        Ok(Integral { value: per_walk.iter().sum::<f64>() / self.walks.len() as f64, escapes: 0 })
    }

    fn atom_source(&self, window: &Window) -> Result<Box<dyn AtomSource>> {
        check_dim(1, &LatticeIndex::zero(window.d))?;
        let t = window.t as i64;
        self.check_time(t + 1)?;
        self.check_time(-t + 2)?;
        let inv = 1.0 / self.walks.len() as f64;
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        for w in self.walks.iter() {
            let mut by_level: HashMap<i32, Vec<(usize, f64)>> = HashMap::new();
            for p in 0..window.size() {
                let x = w.at(window.index_at(p).coords()[0] + 1);
                if self.in_range(x) {
                    by_level.entry(x).or_default().push((p, 1.0));
                }
            }
            let mut levels: Vec<_> = by_level.into_iter().collect();
            levels.sort_unstable_by_key(|(x, _)| *x);
            for (_, row) in levels {
                rows.push(row);
                weights.push(inv);
            }
        }
        Ok(Box::new(TableAtoms::from_rows(rows, weights, 0)?))
    }

    fn dual_system(&self, _alpha: f64, t0: &[LatticeIndex], a: &[f64]) -> Result<Box<dyn DualSystem + '_>> {
        check_weights(t0, a)?;
        for t in t0 {
            check_dim(1, t)?;
        }
        let mut dual = LocalTimeDual {
            model: self,
            t0: t0.iter().map(|t| t.coords()[0]).collect(),
            a: a.to_vec(),
            cache: RwLock::new(HashMap::new()),
            base: Vec::new(),
        };
        dual.base = (0..self.n_levels()).map(|s| dual.eval(0, s)).collect::<Result<_>>()?;
        Ok(Box::new(dual))
    }

    fn lag_overlap_factor(&self, axis: usize, lag: i64) -> Option<f64> {
        if axis != 0 {
            return None;
        }
        let s = lag + 1;
        if s.abs() > self.horizon() {
            return Some(0.0);
        }
        Some(self.return_table()[(s + self.horizon()) as usize])
    }

    fn is_indicator(&self) -> bool {
        true
    }

    fn max_lag(&self) -> Option<u64> {
        Some(self.options.walk_horizon - 1)
    }
}

/// Lumped by level: state x stands for {(r, x) : all walks r}, with
/// term(t, x) = Σ_τ a_τ P̂(B_{τ+t+1} = x).
struct LocalTimeDual<'a> {
    model: &'a LocalTimeModel,
    t0: Vec<i64>,
    a: Vec<f64>,
    cache: RwLock<HashMap<i64, Arc<Vec<f64>>>>,
    base: Vec<f64>,
}

impl LocalTimeDual<'_> {
    fn histogram(&self, s: i64) -> Result<Arc<Vec<f64>>> {
        self.model.check_time(s)?;
        if let Some(h) = self.cache.read().unwrap_or_else(|e| e.into_inner()).get(&s) {
            return Ok(h.clone());
        }
        let h = Arc::new(self.model.level_histogram(s));
        self.cache.write().unwrap_or_else(|e| e.into_inner()).insert(s, h.clone());
        Ok(h)
    }

    fn eval(&self, t: i64, level: usize) -> Result<f64> {
        let mut v = 0.0;
        for (tau, w) in self.t0.iter().zip(&self.a) {
            v += w * self.histogram(tau + t + 1)?[level];
        }
        Ok(v)
    }
}

impl DualSystem for LocalTimeDual<'_> {
    fn dim(&self) -> usize {
        1
    }
    fn n_states(&self) -> usize {
        self.model.n_levels()
    }
    fn label(&self, s: usize) -> String {
        format!("level {}", self.model.options.level_lo + s as i32)
    }
    fn weight(&self, _s: usize) -> f64 {
        1.0
    }
    fn base(&self, s: usize) -> f64 {
        self.base[s]
    }
    fn term(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        check_dim(1, t)?;
        self.eval(t.coords()[0], s)
    }
    /// Σ_{a,b∈W} P̂(B_t − B_u = b − a).
    fn translate_overlap(&self, w: &[usize], t: &LatticeIndex, u: &LatticeIndex) -> Result<f64> {
        let (t, u) = (t.coords()[0], u.coords()[0]);
        self.model.check_time(t)?;
        self.model.check_time(u)?;
        let mut m = 0.0;
        for &a in w {
            for &b in w {
                let diff = b as i32 - a as i32;
                let hits = self.model.walks.iter().filter(|wk| wk.at(t) - wk.at(u) == diff).count();
                m += hits as f64 / self.model.walks.len() as f64;
            }
        }
        Ok(m)
    }
}

/// The local-time analog field (d = 1).
pub fn make_local_time_field(d: usize, alpha: f64, kind: FieldKind, options: LocalTimeOptions) -> Result<(SpectralFamily, Arc<LocalTimeModel>)> {
    if d != 1 {
        return Err(FieldError::Unsupported("the random-walk local-time analog is implemented for d = 1".into()));
    }
    let model = Arc::new(LocalTimeModel::new(options)?);
    let family = SpectralFamily::new(alpha, kind, model.clone())?;
    Ok((family, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_walk_matches_direct_sum() {
        let mut rng = rng_stream(1, 0);
        let words = 5;
        let bits: Vec<u64> = (0..2 * words).map(|_| rng.random()).collect();
        let mut it = bits.iter().copied();
        let w = Walk::new(words, || it.next().unwrap());
        let mut pos = 0i32;
        for s in 1..(64 * words) as i64 {
            let k = (s - 1) as usize;
            pos += if bits[k / 64] >> (k % 64) & 1 == 1 { 1 } else { -1 };
            assert_eq!(w.at(s), pos);
        }
        assert_eq!(w.at(0), 0);
    }

    #[test]
    fn return_table_matches_direct_count() {
        let m = LocalTimeModel::new(LocalTimeOptions { walks: 64, walk_horizon: 300, ..Default::default() }).unwrap();
        for lag in [-300i64, -77, -2, -1, 0, 1, 5, 64, 128, 298] {
            let s = lag + 1;
            let hits = m.walks.iter().filter(|w| w.at(s) == w.at(1) && m.in_range(w.at(1))).count();
            assert_eq!(m.lag_overlap_factor(0, lag).unwrap(), hits as f64 / 64.0);
        }
    }

    #[test]
    fn deterministic_walk_visits_each_level_once() {
        let opts = LocalTimeOptions { walks: 1, walk_horizon: 100, level_lo: -10, level_hi: 50, deterministic: true, ..Default::default() };
        let m = LocalTimeModel::new(opts).unwrap();
        for s in -10..=50 {
            assert_eq!(m.position(0, s as i64).unwrap(), s);
        }
        // Δl(x, t) = 1{t + 1 = x}: either 0 or 1, and a single level per t.
        let one = m.integrate(&[LatticeIndex::new(vec![3])], &|v| v[0]).unwrap();
        assert_eq!(one.value, 1.0);
        let pair = m.integrate(&[LatticeIndex::new(vec![3]), LatticeIndex::new(vec![4])], &|v| v[0].min(v[1])).unwrap();
        assert_eq!(pair.value, 0.0);
    }
}
