//! Recurrent Markov chains on Z with exact n-step transition probabilities.
//!
//! Two laws are supported: the lazy simple random walk (null recurrent, no
//! truncation in time: its n-step law is binomial) and finite irreducible
//! aperiodic chains (positive recurrent, matrix powers).

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, FieldError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Recurrence {
    Positive,
    Null,
}

#[derive(Debug, Clone)]
pub enum ChainLaw {
    /// Stay with probability 1/2, step ±1 with probability 1/4 each.
    LazyWalk,
    /// Row-stochastic matrix on the integer states `offset..offset + k`.
    Finite { matrix: Vec<Vec<f64>>, offset: i64 },
}

/// A recurrent chain together with its invariant measure π and the window of
/// starting states used when the path space is lumped by x(0).
#[derive(Debug, Clone)]
pub struct MarkovChainSpec {
    pub law: ChainLaw,
    pub recurrence: Recurrence,
    /// Starting states kept by the lumped (x(0)-cylinder) truncation.
    pub window: Vec<i64>,
    stationary: Vec<f64>,
    /// P^0, P^1, … until the powers settle (finite chains only).
    powers: Arc<Vec<Matrix>>,
    settled: bool,
}

type Matrix = Vec<Vec<f64>>;

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn mat_pow(m: &Matrix, mut n: u64) -> Matrix {
    let k = m.len();
    let mut result: Matrix = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        n >>= 1;
        if n > 0 {
            base = mat_mul(&base, &base);
        }
    }
    result
}

/// Successive powers of `m` until consecutive ones differ by at most 1e-18
/// entrywise (then `true`), or until the table reaches its size cap.
fn power_table(m: &Matrix) -> (Vec<Matrix>, bool) {
    let k = m.len();
    let cap = (2_000_000 / (k * k)).clamp(2, 4096);
    let identity: Matrix = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut table = vec![identity];
    while table.len() < cap {
        let next = mat_mul(table.last().unwrap(), m);
        let diff = next.iter().flatten().zip(table.last().unwrap().iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        table.push(next);
        if diff <= 1e-18 {
            return (table, true);
        }
    }
    (table, false)
}

/// ln( C(2n, n) / 4^n ).
fn ln_central(n: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    if n <= 2000 {
        let table = TABLE.get_or_init(|| {
            let mut t = Vec::with_capacity(2001);
            let mut acc = 0.0;
            t.push(acc);
            for i in 1..=2000u64 {
                acc += ((2 * i - 1) as f64 / (2 * i) as f64).ln();
                t.push(acc);
            }
            t
        });
        table[n as usize]
    } else {
        let x = n as f64;
        -0.5 * (std::f64::consts::PI * x).ln() - 1.0 / (8.0 * x) + 1.0 / (192.0 * x.powi(3)) - 1.0 / (640.0 * x.powi(5))
    }
}

pub fn lazy_walk_step_prob(n: u64, k: i64) -> f64 {
    let k = k.unsigned_abs();
    if k > n {
        return 0.0;
    }
    let mut ln = ln_central(n);
    for i in 1..=k {
        ln += ((n - i + 1) as f64 / (n + i) as f64).ln();
    }
    ln.exp()
}

const ROW_LEN: u64 = 512;
const ROW_CACHE_CAP: usize = 16_384;

type RowCache = RwLock<HashMap<u64, Arc<Vec<f64>>>>;

/// P(X_n = k) for k = 0..=min(n, ROW_LEN), memoized per n.
fn walk_row(n: u64) -> Arc<Vec<f64>> {
    static ROWS: OnceLock<RowCache> = OnceLock::new();
    let rows = ROWS.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(row) = rows.read().unwrap_or_else(|e| e.into_inner()).get(&n) {
        return row.clone();
    }
    let len = n.min(ROW_LEN);
    let mut row = Vec::with_capacity(len as usize + 1);
    let mut ln = ln_central(n);
    row.push(ln.exp());
    for i in 1..=len {
        ln += ((n - i + 1) as f64 / (n + i) as f64).ln();
        row.push(ln.exp());
    }
    let row = Arc::new(row);
    let mut guard = rows.write().unwrap_or_else(|e| e.into_inner());
    if guard.len() >= ROW_CACHE_CAP {
        guard.clear();
    }
    guard.insert(n, row.clone());
    row
}

impl MarkovChainSpec {
    /// Lazy simple random walk; the lumped window keeps `n_states` starting
    /// states centred at 0 (−n/2 .. n/2 − 1).
    pub fn lazy_walk(n_states: usize) -> Result<Self> {
        if n_states < 1 {
            return Err(invalid("n_states", "must be positive"));
        }
        let half = (n_states / 2) as i64;
        let window: Vec<i64> = (-half..-half + n_states as i64).collect();
        Ok(MarkovChainSpec {
            law: ChainLaw::LazyWalk,
            recurrence: Recurrence::Null,
            window,
            stationary: Vec::new(),
            powers: Arc::new(Vec::new()),
            settled: false,
        })
    }

    /// Finite irreducible aperiodic chain on `offset..offset+k`.
    pub fn finite(matrix: Vec<Vec<f64>>, offset: i64) -> Result<Self> {
        let k = matrix.len();
        if k == 0 || matrix.iter().any(|r| r.len() != k) {
            return Err(invalid("matrix", "must be square and nonempty"));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(invalid("matrix", format!("row {i} has an entry outside [0,1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(invalid("matrix", format!("row {i} sums to {s}, not 1")));
            }
        }
        if !offset_contains_zero(offset, k) {
            return Err(invalid("offset", "the state 0 must belong to the chain"));
        }
        // Irreducible + aperiodic ⇔ some power is strictly positive (Wielandt bound).
        let bound = (k - 1) * (k - 1) + 1;
        let p = mat_pow(&matrix, bound as u64);
        if p.iter().flatten().any(|&x| x <= 0.0) {
            return Err(FieldError::InvalidParameter {
                name: "matrix",
                reason: "chain is not irreducible and aperiodic (not recurrent on a single class)".into(),
            });
        }
        let mut pi = vec![1.0 / k as f64; k];
        for _ in 0..100_000 {
            let mut next = vec![0.0; k];
            for i in 0..k {
                for j in 0..k {
                    next[j] += pi[i] * matrix[i][j];
                }
            }
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-16 {
                break;
            }
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= total);
        let window = (offset..offset + k as i64).collect();
        let (powers, settled) = power_table(&matrix);
        Ok(MarkovChainSpec {
            law: ChainLaw::Finite { matrix, offset },
            recurrence: Recurrence::Positive,
            window,
            stationary: pi,
            powers: Arc::new(powers),
            settled,
        })
    }

    /// Two-state chain on {0, 1} that switches with probability `switch`;
    /// π = (1/2, 1/2) and p_00(n) = 1/2 + (1 − 2·switch)^n / 2.
    pub fn two_state(switch: f64) -> Result<Self> {
        if !(switch > 0.0 && switch < 1.0) {
            return Err(invalid("switch", "must lie in (0, 1)"));
        }
        Self::finite(vec![vec![1.0 - switch, switch], vec![switch, 1.0 - switch]], 0)
    }

    /// Invariant measure π(i) (counting measure for the lazy walk).
    pub fn invariant(&self, i: i64) -> f64 {
        match &self.law {
            ChainLaw::LazyWalk => 1.0,
            ChainLaw::Finite { offset, .. } => {
                let idx = i - offset;
                if idx < 0 || idx as usize >= self.stationary.len() {
                    0.0
                } else {
                    self.stationary[idx as usize]
                }
            }
        }
    }

    pub fn finite_mass(&self) -> bool {
        matches!(self.law, ChainLaw::Finite { .. })
    }

    /// P_i(x(n) = j) for the forward chain.
    pub fn n_step(&self, i: i64, j: i64, n: u64) -> f64 {
        match &self.law {
            ChainLaw::LazyWalk => lazy_walk_step_prob(n, j - i),
            ChainLaw::Finite { matrix, offset } => {
                let (a, b) = (i - offset, j - offset);
                let k = matrix.len() as i64;
                if a < 0 || b < 0 || a >= k || b >= k {
                    return 0.0;
                }
                if n == 0 {
                    return if a == b { 1.0 } else { 0.0 };
                }
                let (a, b) = (a as usize, b as usize);
                match self.powers.get(n as usize) {
                    Some(p) => p[a][b],
                    None if self.settled => self.powers[self.powers.len() - 1][a][b],
                    None => mat_pow(matrix, n)[a][b],
                }
            }
        }
    }

    /// P_i(x(n) = j) for signed lag `n`; negative lags use the reversed chain
    /// π_j p_{ji}(|n|) / π_i.
    pub fn lag_prob(&self, i: i64, j: i64, lag: i64) -> f64 {
        if lag >= 0 {
            return self.n_step(i, j, lag as u64);
        }
        let pi_i = self.invariant(i);
        if pi_i == 0.0 {
            return 0.0;
        }
        self.invariant(j) * self.n_step(j, i, lag.unsigned_abs()) / pi_i
    }

    /// The n-step distribution from `i` by repeated one-step propagation over
    /// a growing support; an independent route to [`Self::n_step`].
    /// P(x(lag) = target | x(0) = j) for every starting state j in `from`.
    pub fn lag_probs_to(&self, target: i64, lag: i64, from: &[i64]) -> Vec<f64> {
        match &self.law {
            ChainLaw::LazyWalk => {
                let n = lag.unsigned_abs();
                if n == 0 {
                    return from.iter().map(|&j| (j == target) as u8 as f64).collect();
                }
                let row = walk_row(n);
                from.iter()
                    .map(|&j| {
                        let k = (target - j).unsigned_abs();
                        match row.get(k as usize) {
                            Some(&p) => p,
                            None => lazy_walk_step_prob(n, k as i64),
                        }
                    })
                    .collect()
            }
            ChainLaw::Finite { .. } => from.iter().map(|&j| self.lag_prob(j, target, lag)).collect(),
        }
    }

    pub fn propagate(&self, i: i64, n: u64) -> Vec<(i64, f64)> {
        match &self.law {
            ChainLaw::LazyWalk => {
                let n = n as usize;
                let mut v = vec![0.0; 2 * n + 1];
                v[n] = 1.0;
                for step in 0..n {
                    let mut next = vec![0.0; 2 * n + 1];
                    for x in (n - step)..=(n + step) {
                        let p = v[x];
                        if p == 0.0 {
                            continue;
                        }
                        next[x] += 0.5 * p;
                        next[x - 1] += 0.25 * p;
                        next[x + 1] += 0.25 * p;
                    }
                    v = next;
                }
                v.into_iter().enumerate().map(|(x, p)| (i + x as i64 - n as i64, p)).collect()
            }
            ChainLaw::Finite { matrix, offset } => {
                let k = matrix.len();
                let mut v = vec![0.0; k];
                v[(i - offset) as usize] = 1.0;
                for _ in 0..n {
                    let mut next = vec![0.0; k];
                    for a in 0..k {
                        for b in 0..k {
                            next[b] += v[a] * matrix[a][b];
                        }
                    }
                    v = next;
                }
                v.into_iter().enumerate().map(|(x, p)| (offset + x as i64, p)).collect()
            }
        }
    }

    /// One-step kernel on `states`; for the walk, mass stepping outside the
    /// interval is reflected back (stays put).
    pub fn transition_matrix(&self, states: &[i64]) -> Matrix {
        let n = states.len();
        let mut m = vec![vec![0.0; n]; n];
        for (a, &i) in states.iter().enumerate() {
            for (b, &j) in states.iter().enumerate() {
                m[a][b] = self.n_step(i, j, 1);
            }
            let s: f64 = m[a].iter().sum();
            m[a][a] += 1.0 - s;
        }
        m
    }

    /// Samples x(lo..=hi) under the stationary law (finite chains only).
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R, lo: i64, hi: i64) -> Result<Vec<i64>> {
        let (matrix, offset) = match &self.law {
            ChainLaw::Finite { matrix, offset } => (matrix, *offset),
            ChainLaw::LazyWalk => {
                return Err(invalid("chain", "the lazy walk has infinite invariant mass; paths cannot be sampled from π"))
            }
        };
        let k = matrix.len();
        let draw = |rng: &mut R, probs: &mut dyn Iterator<Item = f64>| -> usize {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut last = 0;
            for (j, p) in probs.enumerate() {
                acc += p;
                last = j;
                if u < acc {
                    return j;
                }
            }
            last
        };
        let len = (hi - lo + 1) as usize;
        let mut path = vec![0usize; len];
        let zero = (-lo) as usize;
        path[zero] = draw(rng, &mut self.stationary.iter().copied());
        for idx in zero + 1..len {
            let a = path[idx - 1];
            path[idx] = draw(rng, &mut matrix[a].iter().copied());
        }
        for idx in (0..zero).rev() {
            let a = path[idx + 1];
            let pi = &self.stationary;
            path[idx] = draw(rng, &mut (0..k).map(|b| pi[b] * matrix[b][a] / pi[a]));
        }
        Ok(path.into_iter().map(|x| x as i64 + offset).collect())
    }
}

fn offset_contains_zero(offset: i64, k: usize) -> bool {
    offset <= 0 && 0 < offset + k as i64
}
