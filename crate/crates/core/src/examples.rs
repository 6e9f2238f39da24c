//! Built-in families: Markov path-shift fields, a random-walk local-time
//! field, and reference families with known classification.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};


use crate::classification::{check_weights, cube, default_weights, DualSystem, SeriesConfig};
use crate::error::{invalid, FieldError, Result};
use crate::lattice::{LatticeIndex, Window};
use crate::markov::{MarkovChainSpec, Recurrence};
use crate::measure_space::check_dim;
use crate::simulate::StreamRng;
use crate::spectral::{AtomSource, FieldKind, Integral, SpectralFamily, SpectralModel};

mod local_time;
mod reference;

pub use local_time::{make_local_time_field, LocalTimeModel, LocalTimeOptions};
pub use reference::{builtin, builtin_names, make_reference, BuiltinExample, GroundTruth, ReferenceKind, ReferenceParams};

/// a_τ = c·Π_l w_l(τ_l) on a product set T0 = Π_l P_l.
#[derive(Debug, Clone)]
pub(crate) struct ProductForm {
    pub c: f64,
    pub axes: Vec<Vec<(i64, f64)>>,
}

pub(crate) fn product_form(t0: &[LatticeIndex], a: &[f64]) -> Option<ProductForm> {
    let d = t0.first()?.dim();
    let mut proj: Vec<Vec<i64>> = vec![Vec::new(); d];
    for t in t0 {
        for (l, &c) in t.coords().iter().enumerate() {
            proj[l].push(c);
        }
    }
    for p in proj.iter_mut() {
        p.sort_unstable();
        p.dedup();
    }
    if proj.iter().map(|p| p.len()).product::<usize>() != t0.len() {
        return None;
    }
    let lookup: HashMap<&LatticeIndex, f64> = t0.iter().zip(a.iter().copied()).collect();
    if lookup.len() != t0.len() {
        return None;
    }
    let reference = &t0[0];
    let c = a[0];
    let axes: Vec<Vec<(i64, f64)>> = (0..d)
        .map(|l| {
            proj[l]
                .iter()
                .map(|&x| {
                    let mut coords = reference.coords().to_vec();
                    coords[l] = x;
                    (x, lookup[&LatticeIndex::new(coords)] / c)
                })
                .collect()
        })
        .collect();
    for (t, &v) in t0.iter().zip(a) {
        let prod: f64 = c * t.coords().iter().enumerate().map(|(l, x)| axes[l].iter().find(|p| p.0 == *x).unwrap().1).product::<f64>();
        if (prod - v).abs() > 1e-12 * v.abs() {
            return None;
        }
    }
    Some(ProductForm { c, axes })
}

/// The cartesian product of per-axis windows (last axis fastest).
pub(crate) fn product_states(windows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for w in windows {
        let mut next = Vec::with_capacity(out.len() * w.len());
        for prefix in &out {
            for &x in w {
                let mut p = prefix.clone();
                p.push(x);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Path-shift field on the product of d chain path spaces with the
/// two-sided stationary extension of each chain, f = 1{x^{(1)}(0) = ⋯ =
/// x^{(d)}(0) = 0}.
#[derive(Debug, Clone)]
pub struct MarkovPathModel {
    pub chains: Vec<MarkovChainSpec>,
    /// Simulation windows may not exceed this time horizon.
    pub path_horizon: u32,
}

impl MarkovPathModel {
    /// μ{x : x(τ) = 0 for all τ in `times`} for a nonempty set of times.
    pub fn joint_zero(&self, times: &[&LatticeIndex]) -> f64 {
        let mut m = 1.0;
        for (l, chain) in self.chains.iter().enumerate() {
            let mut ts: Vec<i64> = times.iter().map(|t| t.coords()[l]).collect();
            ts.sort_unstable();
            ts.dedup();
            m *= chain.invariant(0);
            for w in ts.windows(2) {
                m *= chain.lag_prob(0, 0, w[1] - w[0]);
            }
            if m == 0.0 {
                break;
            }
        }
        m
    }

    /// ‖f_t ∧ f_0‖^α = Π_l π_0^{(l)} p^{(l)}_{00}(|t_l|).
    pub fn overlap(&self, t: &LatticeIndex) -> f64 {
        (0..self.chains.len()).map(|l| self.axis_overlap(l, t.coords()[l])).product()
    }

    fn axis_overlap(&self, l: usize, lag: i64) -> f64 {
        let c = &self.chains[l];
        c.invariant(0) * c.lag_prob(0, 0, lag.abs())
    }

    /// lim_n ‖f_{n e_l} ∧ f_0‖^α: Π_{m≠l} π_0^{(m)} · (π_0^{(l)})² when chain l
    /// is positive recurrent, 0 otherwise.
    pub fn axis_limit(&self, l: usize) -> f64 {
        let mut v = 1.0;
        for (m, c) in self.chains.iter().enumerate() {
            let p = c.invariant(0);
            if m == l {
                v *= match c.recurrence {
                    Recurrence::Positive => p * p,
                    Recurrence::Null => 0.0,
                };
            } else {
                v *= p;
            }
        }
        v
    }
}

impl SpectralModel for MarkovPathModel {
    fn dim(&self) -> usize {
        self.chains.len()
    }

    fn total_mass(&self) -> Option<f64> {
        self.chains.iter().all(|c| c.finite_mass()).then_some(1.0)
    }

    fn integrate(&self, indices: &[LatticeIndex], func: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Integral> {
        for t in indices {
            check_dim(self.dim(), t)?;
        }
        let mut distinct: Vec<&LatticeIndex> = Vec::new();
        let ids: Vec<usize> = indices
            .iter()
            .map(|t| match distinct.iter().position(|u| *u == t) {
                Some(i) => i,
                None => {
                    distinct.push(t);
                    distinct.len() - 1
                }
            })
            .collect();
        let k = distinct.len();
        if k > 20 {
            return Err(FieldError::Unsupported("integrals over more than 20 distinct indices".into()));
        }
        let full = 1usize << k;
        // joint[B] = μ(all of B), then Möbius inversion over supersets gives
        // μ(exactly B).
        let mut exact = vec![0.0; full];
        for (b, slot) in exact.iter_mut().enumerate().skip(1) {
            let members: Vec<&LatticeIndex> = (0..k).filter(|i| b >> i & 1 == 1).map(|i| distinct[i]).collect();
            *slot = self.joint_zero(&members);
        }
        for i in 0..k {
            for b in 0..full {
                if b >> i & 1 == 0 {
                    exact[b] -= exact[b | 1 << i];
                }
            }
        }
        let mut value = 0.0;
        let mut v = vec![0.0; indices.len()];
        for (b, &m) in exact.iter().enumerate().skip(1) {
            if m == 0.0 {
                continue;
            }
            for (slot, &id) in v.iter_mut().zip(&ids) {
                *slot = (b >> id & 1) as f64;
            }
            value += func(&v) * m;
        }
        Ok(Integral { value, escapes: 0 })
    }

    fn atom_source(&self, window: &Window) -> Result<Box<dyn AtomSource>> {
        if self.total_mass().is_none() {
            return Err(invalid("family", "paths of a null-recurrent chain cannot be drawn from a probability measure"));
        }
        if window.t > self.path_horizon {
            return Err(invalid("window", format!("T = {} exceeds the path horizon {}", window.t, self.path_horizon)));
        }
        Ok(Box::new(MarkovAtoms { chains: self.chains.clone(), window: window.clone() }))
    }

    fn dual_system(&self, _alpha: f64, t0: &[LatticeIndex], a: &[f64]) -> Result<Box<dyn DualSystem + '_>> {
        Ok(Box::new(MarkovDual::new(self, t0, a)?))
    }

    fn lag_overlap_factor(&self, axis: usize, lag: i64) -> Option<f64> {
        (axis < self.chains.len()).then(|| self.axis_overlap(axis, lag))
    }

    fn is_indicator(&self) -> bool {
        true
    }
}

struct MarkovAtoms {
    chains: Vec<MarkovChainSpec>,
    window: Window,
}

impl AtomSource for MarkovAtoms {
    fn mass(&self) -> f64 {
        1.0
    }
    fn max_value(&self) -> f64 {
        1.0
    }
    fn draw(&self, rng: &mut StreamRng, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let t = self.window.t as i64;
        let paths: Vec<Vec<i64>> = self
            .chains
            .iter()
            .map(|c| c.sample_path(rng, -t + 1, t).expect("finite chains sample"))
            .collect();
        let side = self.window.side();
        'pos: for p in 0..self.window.size() {
            let mut q = p;
            for l in (0..paths.len()).rev() {
                if paths[l][q % side] != 0 {
                    continue 'pos;
                }
                q /= side;
            }
            out.push((p, 1.0));
        }
    }
}

type FactorCache = RwLock<HashMap<(usize, i64), Arc<Vec<f64>>>>;

/// Series-test system on x(0)-cylinders: state j stands for {x(0) = j} and
/// term(t, j) = Σ_τ a_τ Π_l P_{j_l}(x_l(τ_l + t_l) = 0).
pub struct MarkovDual<'a> {
    model: &'a MarkovPathModel,
    states: Vec<Vec<i64>>,
    strides: Vec<usize>,
    weights: Vec<f64>,
    t0: Vec<LatticeIndex>,
    a: Vec<f64>,
    product: Option<ProductForm>,
    cache: FactorCache,
    base: Vec<f64>,
}

impl<'a> MarkovDual<'a> {
    pub fn new(model: &'a MarkovPathModel, t0: &[LatticeIndex], a: &[f64]) -> Result<Self> {
        check_weights(t0, a)?;
        for t in t0 {
            check_dim(model.dim(), t)?;
        }
        let windows: Vec<Vec<i64>> = model.chains.iter().map(|c| c.window.clone()).collect();
        let states = product_states(&windows);
        let mut strides = vec![1usize; windows.len()];
        for l in (0..windows.len().saturating_sub(1)).rev() {
            strides[l] = strides[l + 1] * windows[l + 1].len();
        }
        let weights = states
            .iter()
            .map(|j| j.iter().zip(&model.chains).map(|(x, c)| c.invariant(*x)).product())
            .collect();
        let mut dual = MarkovDual {
            model,
            states,
            strides,
            weights,
            t0: t0.to_vec(),
            a: a.to_vec(),
            product: product_form(t0, a),
            cache: RwLock::new(HashMap::new()),
            base: Vec::new(),
        };
        let zero = LatticeIndex::zero(model.dim());
        dual.base = (0..dual.states.len()).map(|s| dual.eval(&zero, s)).collect();
        Ok(dual)
    }

    fn axis_factor(&self, l: usize, lag: i64) -> Arc<Vec<f64>> {
        if let Some(v) = self.cache.read().unwrap_or_else(|e| e.into_inner()).get(&(l, lag)) {
            return v.clone();
        }
        let chain = &self.model.chains[l];
        let pf = self.product.as_ref().expect("product form");
        let mut acc = vec![0.0; chain.window.len()];
        for &(x, w) in &pf.axes[l] {
            for (slot, p) in acc.iter_mut().zip(chain.lag_probs_to(0, x + lag, &chain.window)) {
                *slot += w * p;
            }
        }
        let v = Arc::new(acc);
        self.cache.write().unwrap_or_else(|e| e.into_inner()).insert((l, lag), v.clone());
        v
    }

    fn eval(&self, t: &LatticeIndex, s: usize) -> f64 {
        let j = &self.states[s];
        match &self.product {
            Some(pf) => {
                let mut v = pf.c;
                for l in 0..j.len() {
                    let pos = (s / self.strides[l]) % self.model.chains[l].window.len();
                    v *= self.axis_factor(l, t.coords()[l])[pos];
                }
                v
            }
            None => self
                .t0
                .iter()
                .zip(&self.a)
                .map(|(tau, w)| {
                    w * j
                        .iter()
                        .enumerate()
                        .map(|(l, &jl)| self.model.chains[l].lag_prob(jl, 0, tau.coords()[l] + t.coords()[l]))
                        .product::<f64>()
                })
                .sum(),
        }
    }
}

impl DualSystem for MarkovDual<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn n_states(&self) -> usize {
        self.states.len()
    }
    fn label(&self, s: usize) -> String {
        format!("x(0)={}", LatticeIndex::new(self.states[s].clone()))
    }
    fn weight(&self, s: usize) -> f64 {
        self.weights[s]
    }
    fn base(&self, s: usize) -> f64 {
        self.base[s]
    }
    fn term(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        check_dim(self.dim(), t)?;
        Ok(self.eval(t, s))
    }
    fn translate_overlap(&self, w: &[usize], t: &LatticeIndex, u: &LatticeIndex) -> Result<f64> {
        let lag = u - t;
        let mut m = 0.0;
        for &a in w {
            for &b in w {
                let (ja, jb) = (&self.states[a], &self.states[b]);
                m += (0..ja.len())
                    .map(|l| {
                        let c = &self.model.chains[l];
                        c.invariant(ja[l]) * c.lag_prob(ja[l], jb[l], lag.coords()[l])
                    })
                    .product::<f64>();
            }
        }
        Ok(m)
    }
}

/// The Markov path field with its overlap oracle.
pub fn make_markov_field(chains: Vec<MarkovChainSpec>, alpha: f64, kind: FieldKind, path_horizon: u32) -> Result<(SpectralFamily, Arc<MarkovPathModel>)> {
    if chains.is_empty() {
        return Err(invalid("chains", "need at least one chain"));
    }
    if path_horizon == 0 {
        return Err(invalid("L", "path horizon must be positive"));
    }
    for c in &chains {
        if c.invariant(0) <= 0.0 {
            return Err(invalid("chains", "state 0 must carry invariant mass"));
        }
    }
    let model = Arc::new(MarkovPathModel { chains, path_horizon });
    let family = SpectralFamily::new(alpha, kind, model.clone())?;
    Ok((family, model))
}

/// Default classification setup for a Markov field: product T0 whose axis-l
/// factor covers the starting window of chain l, weights 2^{−‖τ‖₁}.
pub fn markov_test_indices(chains: &[MarkovChainSpec]) -> Vec<LatticeIndex> {
    let radii: Vec<Vec<i64>> = chains
        .iter()
        .map(|c| {
            let r = c.window.iter().map(|x| x.abs()).max().unwrap_or(0).max(2);
            (-r..=r).collect()
        })
        .collect();
    product_states(&radii).into_iter().map(LatticeIndex::new).collect()
}

pub(crate) fn default_t0(d: usize, r: i64) -> (Vec<LatticeIndex>, Vec<f64>) {
    let t0 = cube(d, r);
    let a = default_weights(&t0);
    (t0, a)
}

pub(crate) fn series_for(horizon: usize) -> SeriesConfig {
    SeriesConfig::with_horizon(horizon)
}
