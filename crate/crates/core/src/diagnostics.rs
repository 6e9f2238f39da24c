//! Ergodic averages and the ergodicity, weak-mixing, mixing and association
//! criteria, evaluated analytically on spectral families and empirically on
//! simulated samples.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classification::CandidateSequence;
use crate::error::{invalid, FieldError, Result};
use crate::lattice::{LatticeIndex, Window};
use crate::simulate::FieldSample;
use crate::spectral::{FieldKind, MaxLinearCombination, SpectralFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Vanishes,
    Persists,
    Inconclusive,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Vanishes => "vanishes",
            Trend::Persists => "persists",
            Trend::Inconclusive => "inconclusive",
        })
    }
}

/// Values v(T_1), …, v(T_k) of a limit functional with a verdict on the limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticSeries {
    pub name: String,
    pub horizons: Vec<u64>,
    pub values: Vec<f64>,
    /// Monte Carlo standard errors (empirical series only).
    pub se: Option<Vec<f64>>,
    /// Verdicts compare values / normalizer with the tolerance.
    pub normalizer: f64,
    pub vanish_tol: f64,
    pub limit_estimate: f64,
    /// Exact limit when an oracle is available.
    pub oracle_limit: Option<f64>,
    pub verdict: Trend,
}

impl DiagnosticSeries {
    fn build(name: impl Into<String>, horizons: Vec<u64>, values: Vec<f64>, se: Option<Vec<f64>>, normalizer: f64, tol: f64) -> Self {
        let verdict = match &se {
            None => analytic_verdict(&values, normalizer, tol),
            Some(se) => empirical_verdict(&values, se, tol),
        };
        let limit_estimate = values.last().copied().unwrap_or(0.0);
        DiagnosticSeries {
            name: name.into(),
            horizons,
            values,
            se,
            normalizer,
            vanish_tol: tol,
            limit_estimate,
            oracle_limit: None,
            verdict,
        }
    }

    pub fn final_value(&self) -> f64 {
        self.limit_estimate
    }

    /// Rows `T,value,se` (se empty for analytic series).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,value,se\n");
        for (i, (t, v)) in self.horizons.iter().zip(&self.values).enumerate() {
            let se = self.se.as_ref().map(|s| s[i].to_string()).unwrap_or_default();
            out.push_str(&format!("{t},{v},{se}\n"));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "verdict": self.verdict,
            "final_value": self.limit_estimate,
            "normalizer": self.normalizer,
            "vanish_tol": self.vanish_tol,
            "oracle_limit": self.oracle_limit,
        })
    }
}

const FLAT_RATIO: f64 = 0.7;

/// Vanishes: final normalized value below tol and non-increasing over the
/// last three horizons. Persists: final value above 5·tol and flat (last at
/// least 0.7 of the third-last, which a T^{-1/2} decay over a doubling ladder
/// does not reach). Otherwise inconclusive.
pub fn analytic_verdict(values: &[f64], normalizer: f64, tol: f64) -> Trend {
    if values.is_empty() || !(normalizer > 0.0) {
        return Trend::Inconclusive;
    }
    let v: Vec<f64> = values.iter().map(|x| x / normalizer).collect();
    let k = v.len();
    let last = v[k - 1];
    let tail = &v[k.saturating_sub(3)..];
    let slack = 1e-12;
    let non_increasing = tail.windows(2).all(|w| w[1] <= w[0] + slack);
    if last < tol && non_increasing {
        return Trend::Vanishes;
    }
    if last > 5.0 * tol && last >= FLAT_RATIO * tail[0] {
        return Trend::Persists;
    }
    Trend::Inconclusive
}

/// Empirical rule: vanishes when the final value is below max(tol, 3·SE);
/// persists when it exceeds 5× that level and stays at least 0.7 of the
/// third-last value.
pub fn empirical_verdict(values: &[f64], se: &[f64], tol: f64) -> Trend {
    let Some(&last) = values.last() else {
        return Trend::Inconclusive;
    };
    let k = values.len();
    let level = tol.max(3.0 * se[k - 1]);
    if last.abs() < level {
        return Trend::Vanishes;
    }
    let third = values[k.saturating_sub(3)];
    if last > 5.0 * level && last >= FLAT_RATIO * third {
        return Trend::Persists;
    }
    Trend::Inconclusive
}

/// Default horizon ladder: powers of two from 4, up to 512 (d = 1), 64
/// (d = 2) or 16 (d ≥ 3).
pub fn default_ladder(d: usize) -> Vec<u32> {
    let top = match d {
        1 => 512,
        2 => 64,
        _ => 16,
    };
    ladder(4, top)
}

/// Powers of two from `lo` to `hi`.
pub fn ladder(lo: u32, hi: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut t = lo.max(1);
    while t <= hi {
        out.push(t);
        t *= 2;
    }
    out
}

/// Ladder for analytic diagnostics on `family`: long ladders (up to 2^18,
/// capped by the model's lag range) for families with separable overlaps.
pub fn family_ladder(family: &SpectralFamily) -> Vec<u32> {
    let separable = family.model.is_indicator() && family.model.lag_overlap_factor(0, 0).is_some();
    let mut top: u64 = if separable { 1 << 18 } else { *default_ladder(family.dim()).last().unwrap() as u64 };
    if let Some(m) = family.model.max_lag() {
        top = top.min(m);
    }
    ladder(4, top as u32)
}

fn check_ladder(t_list: &[u32]) -> Result<()> {
    if t_list.is_empty() || t_list[0] == 0 || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("T_list", "horizons must be positive and strictly increasing"));
    }
    Ok(())
}

/// A_T h = C(T)^{−1} Σ_{t∈B(T)} h(t) for each T; `h` returns `None` where
/// it is undefined.
pub fn ergodic_average(d: usize, h: &(dyn Fn(&LatticeIndex) -> Option<f64> + Sync), t_list: &[u32]) -> Result<DiagnosticSeries> {
    check_ladder(t_list)?;
    let values = box_averages(d, t_list, &|t| h(t).ok_or_else(|| FieldError::MissingValue(t.clone())))?;
    Ok(DiagnosticSeries::build("ergodic_average", t_list.iter().map(|&t| t as u64).collect(), values, None, 1.0, 0.005))
}

const MAX_BOX_POINTS: usize = 1 << 24;

/// Cesàro averages over nested boxes, evaluating `h` once per point of the
/// largest box and reducing in a fixed order.
fn box_averages(d: usize, t_list: &[u32], h: &(dyn Fn(&LatticeIndex) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
    let top = *t_list.last().unwrap();
    if (2.0 * top as f64).powi(d as i32) > MAX_BOX_POINTS as f64 {
        return Err(invalid("T_list", format!("B({top}) in d = {d} has more than {MAX_BOX_POINTS} points")));
    }
    let big = Window::new(top, d);
    let vals: Vec<Result<f64>> = (0..big.size()).into_par_iter().with_min_len(64).map(|p| h(&big.index_at(p))).collect();
    let vals = vals.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let w = Window::new(t, d);
        let mut acc = 0.0;
        for idx in w.indices() {
            acc += vals[big.position(&idx).unwrap()];
        }
        out.push(acc / w.size() as f64);
    }
    Ok(out)
}

/// Cesàro averages of a product function h(t) = Π_l h_l(t_l).
fn separable_averages(d: usize, t_list: &[u32], factor: &(dyn Fn(usize, i64) -> f64 + Sync)) -> Vec<f64> {
    let top = *t_list.last().unwrap() as i64;
    let axes: Vec<Vec<f64>> = (0..d).map(|l| (-top + 1..=top).into_par_iter().map(|k| factor(l, k)).collect()).collect();
    t_list
        .iter()
        .map(|&t| {
            let t = t as i64;
            axes.iter()
                .map(|v| {
                    let lo = (top - t) as usize;
                    v[lo..lo + 2 * t as usize].iter().sum::<f64>() / (2 * t) as f64
                })
                .product()
        })
        .collect()
}

/// Koopman–von Neumann filter for 0 ≤ h ≤ M: whether A_T h → 0, with the
/// density of the exceptional set {h > tail_fraction·M} at each horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KvnResult {
    pub density_one: bool,
    pub averages: DiagnosticSeries,
    pub exceptional_density: Vec<f64>,
}

pub fn kvn_filter(
    d: usize,
    h: &(dyn Fn(&LatticeIndex) -> Option<f64> + Sync),
    bound: f64,
    t_list: &[u32],
    tail_fraction: f64,
) -> Result<KvnResult> {
    check_ladder(t_list)?;
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(invalid("bound", "need a finite positive bound M"));
    }
    let eps = tail_fraction * bound;
    let checked = |t: &LatticeIndex| -> Result<f64> {
        let v = h(t).ok_or_else(|| FieldError::MissingValue(t.clone()))?;
        if !(0.0..=bound).contains(&v) {
            return Err(invalid("h", format!("value {v} at {t} outside [0, {bound}]")));
        }
        Ok(v)
    };
    let values = box_averages(d, t_list, &checked)?;
    let exceptional_density = box_averages(d, t_list, &|t| Ok(if checked(t)? > eps { 1.0 } else { 0.0 }))?;
    let averages = DiagnosticSeries::build("kvn_average", t_list.iter().map(|&t| t as u64).collect(), values, None, bound, 0.005);
    Ok(KvnResult { density_one: averages.verdict == Trend::Vanishes, averages, exceptional_density })
}

/// A compact interval K = [lo, hi] ⊂ (0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(invalid("K", format!("need 0 < k_lo ≤ k_hi < ∞, got [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn separable_overlap(family: &SpectralFamily) -> Option<impl Fn(usize, i64) -> f64 + '_> {
    if family.model.is_indicator() && family.model.lag_overlap_factor(0, 0).is_some() {
        Some(move |l: usize, k: i64| family.model.lag_overlap_factor(l, k).unwrap_or(0.0))
    } else {
        None
    }
}

/// Cesàro averages of t ↦ μ{|f_0|^α ∈ K, |f_t|^α > ε}, normalized for the
/// verdict by μ{|f_0|^α ∈ K}.
pub fn gross_weak_mixing(family: &SpectralFamily, k: Interval, eps: f64, t_list: &[u32]) -> Result<DiagnosticSeries> {
    Interval::new(k.lo, k.hi)?;
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    check_ladder(t_list)?;
    let d = family.dim();
    let alpha = family.alpha;
    let zero = LatticeIndex::zero(d);
    let base = family
        .model
        .integrate(&[zero.clone()], &move |v: &[f64]| if k.contains(v[0].abs().powf(alpha)) { 1.0 } else { 0.0 })?
        .value;
    let values = match separable_overlap(family) {
        Some(factor) => {
            let on = k.contains(1.0) && eps < 1.0;
            separable_averages(d, t_list, &factor).into_iter().map(|v| if on { v } else { 0.0 }).collect()
        }
        None => box_averages(d, t_list, &|t| {
            Ok(family
                .model
                .integrate(&[zero.clone(), t.clone()], &move |v: &[f64]| {
                    (k.contains(v[0].abs().powf(alpha)) && v[1].abs().powf(alpha) > eps) as u8 as f64
                })?
                .value)
        })?,
    };
    Ok(DiagnosticSeries::build("gross_weak_mixing", t_list.iter().map(|&t| t as u64).collect(), values, None, base, 0.005))
}

/// Raw values μ{|f_0|^α ∈ K, |f_{t_n}|^α > ε} along a sequence (mixing
/// version of the gross criterion).
pub fn gross_mixing(family: &SpectralFamily, k: Interval, eps: f64, seq: &CandidateSequence, n: usize) -> Result<DiagnosticSeries> {
    Interval::new(k.lo, k.hi)?;
    let terms = seq.terms(n).ok_or_else(|| invalid("sequence", "greedy sequences have no fixed terms"))?;
    let alpha = family.alpha;
    let zero = LatticeIndex::zero(family.dim());
    let base = family
        .model
        .integrate(&[zero.clone()], &move |v: &[f64]| if k.contains(v[0].abs().powf(alpha)) { 1.0 } else { 0.0 })?
        .value;
    let values: Vec<f64> = terms
        .par_iter()
        .map(|t| {
            Ok(family
                .model
                .integrate(&[zero.clone(), t.clone()], &move |v: &[f64]| {
                    (k.contains(v[0].abs().powf(alpha)) && v[1].abs().powf(alpha) > eps) as u8 as f64
                })?
                .value)
        })
        .collect::<Result<_>>()?;
    Ok(DiagnosticSeries::build(format!("gross_mixing[{}]", seq.label), (1..=n as u64).collect(), values, None, base, 0.005))
}

fn require_max_stable(family: &SpectralFamily) -> Result<()> {
    if family.kind != FieldKind::MaxStable {
        return Err(invalid("family", "this criterion applies to max-stable families"));
    }
    Ok(())
}

/// ‖U_t g ∧ g‖_α^α for g = ⋁_j a_j f_{τ_j}.
pub fn max_overlap(family: &SpectralFamily, g: &MaxLinearCombination, t: &LatticeIndex) -> Result<f64> {
    let k = g.terms.len();
    let mut indices = g.indices();
    indices.extend(g.shifted(t).indices());
    let coef = g.coefficients();
    let alpha = family.alpha;
    Ok(family
        .model
        .integrate(&indices, &move |v: &[f64]| {
            let a = v[..k].iter().zip(&coef).map(|(x, c)| c * x).fold(0.0, f64::max);
            let b = v[k..].iter().zip(&coef).map(|(x, c)| c * x).fold(0.0, f64::max);
            a.min(b).powf(alpha)
        })?
        .value)
}

/// C(T)^{−1} Σ_{t∈B(T)} ‖U_t g ∧ g‖_α^α, normalized for the verdict by ‖g‖_α^α.
pub fn max_ergodicity(family: &SpectralFamily, g: &MaxLinearCombination, t_list: &[u32]) -> Result<DiagnosticSeries> {
    require_max_stable(family)?;
    check_ladder(t_list)?;
    let d = family.dim();
    let norm = max_overlap(family, g, &LatticeIndex::zero(d))?;
    let values = match (separable_overlap(family), g.terms.as_slice()) {
        (Some(factor), [(a, _)]) => {
            let w = a.powf(family.alpha);
            separable_averages(d, t_list, &factor).into_iter().map(|v| w * v).collect()
        }
        _ => box_averages(d, t_list, &|t| max_overlap(family, g, t))?,
    };
    Ok(DiagnosticSeries::build("max_ergodicity", t_list.iter().map(|&t| t as u64).collect(), values, None, norm, 0.005))
}

/// The default probe set: g = f_0 plus three random max-linear combinations
/// of 2–3 indices from {−2, …, 2}^d with coefficients in [1/2, 2].
pub fn default_ergodicity_combos(d: usize, seed: u64) -> Vec<MaxLinearCombination> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![MaxLinearCombination::single(LatticeIndex::zero(d))];
    for _ in 0..3 {
        let k = rng.random_range(2..=3);
        let mut terms: Vec<(f64, LatticeIndex)> = Vec::new();
        while terms.len() < k {
            let t = LatticeIndex::new((0..d).map(|_| rng.random_range(-2..=2)).collect());
            if terms.iter().all(|(_, u)| *u != t) {
                terms.push((rng.random_range(0.5..=2.0), t));
            }
        }
        out.push(MaxLinearCombination { terms });
    }
    out
}

/// ‖f_{t_n} ∧ f_0‖_α^α along each sequence, normalized for the verdict by
/// ‖f_0‖_α^α.
pub fn max_mixing(family: &SpectralFamily, sequences: &[CandidateSequence], n: usize) -> Result<Vec<DiagnosticSeries>> {
    require_max_stable(family)?;
    if n < 8 {
        return Err(invalid("N", "need at least 8 terms"));
    }
    let f0 = MaxLinearCombination::single(LatticeIndex::zero(family.dim()));
    let norm = max_overlap(family, &f0, &LatticeIndex::zero(family.dim()))?;
    let mut out = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let terms = seq.terms(n).ok_or_else(|| invalid("sequence", "greedy sequences have no fixed terms"))?;
        let values: Vec<f64> = terms.par_iter().map(|t| max_overlap(family, &f0, t)).collect::<Result<_>>()?;
        out.push(DiagnosticSeries::build(format!("max_mixing[{}]", seq.label), (1..=n as u64).collect(), values, None, norm, 0.005));
    }
    Ok(out)
}

/// A rectangle event {X_τ ≤ x_τ for every constraint}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectEvent {
    pub constraints: Vec<(LatticeIndex, f64)>,
}

impl RectEvent {
    pub fn new(constraints: Vec<(LatticeIndex, f64)>) -> Self {
        RectEvent { constraints }
    }

    pub fn single(t: LatticeIndex, x: f64) -> Self {
        RectEvent { constraints: vec![(t, x)] }
    }

    pub fn shifted(&self, h: &LatticeIndex) -> Self {
        RectEvent { constraints: self.constraints.iter().map(|(t, x)| (t + h, *x)).collect() }
    }

    fn positions(&self, w: &Window) -> Result<Vec<(usize, f64)>> {
        self.constraints
            .iter()
            .map(|(t, x)| {
                w.position(t)
                    .map(|p| (p, *x))
                    .ok_or_else(|| invalid("event", format!("index {t} lies outside the sampled window")))
            })
            .collect()
    }
}

fn indicators(sample: &FieldSample, pos: &[(usize, f64)]) -> Vec<f64> {
    (0..sample.n_paths)
        .map(|p| {
            let path = sample.path(p);
            pos.iter().all(|&(q, x)| path[q] <= x) as u8 as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssociationEstimate {
    pub covariance: f64,
    pub se: f64,
    /// One of the indicators is constant on the sample.
    pub degenerate: bool,
}

fn centered_cov(a: &[f64], b: &[f64]) -> (f64, f64, Vec<f64>) {
    let n = a.len() as f64;
    let pa = a.iter().sum::<f64>() / n;
    let pb = b.iter().sum::<f64>() / n;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - pa) * (y - pb)).collect();
    let cov = prods.iter().sum::<f64>() / n;
    let var = prods.iter().map(|z| (z - cov).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (cov, (var / n).sqrt(), prods)
}

/// Cov(1_A, 1_B) with plug-in standard error for each pair of events.
pub fn association_check(sample: &FieldSample, pairs: &[(RectEvent, RectEvent)]) -> Result<Vec<AssociationEstimate>> {
    pairs
        .iter()
        .map(|(a, b)| {
            let ia = indicators(sample, &a.positions(&sample.window)?);
            let ib = indicators(sample, &b.positions(&sample.window)?);
            let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
            let (covariance, se, _) = centered_cov(&ia, &ib);
            Ok(AssociationEstimate { covariance, se, degenerate: constant(&ia) || constant(&ib) })
        })
        .collect()
}

/// Which Cesàro functional [`empirical_cesaro`] estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CesaroMode {
    /// |C(T)^{−1} Σ_t (P(A ∩ θ_t B) − P(A)P(θ_t B))|.
    Ergodic,
    /// C(T)^{−1} Σ_t |P(A ∩ θ_t B) − P(A)P(θ_t B)|, with terms below three
    /// standard errors set to zero.
    WeakMixing,
}

/// Monte Carlo estimate of the ergodic or weak-mixing Cesàro functional for
/// rectangle events A, B; every shifted event must lie in the sampled window.
pub fn empirical_cesaro(
    sample: &FieldSample,
    a: &RectEvent,
    b: &RectEvent,
    t_list: &[u32],
    mode: CesaroMode,
) -> Result<DiagnosticSeries> {
    check_ladder(t_list)?;
    let d = sample.window.d;
    for t in &a.constraints {
        if t.0.dim() != d {
            return Err(FieldError::DimensionMismatch { expected: d, got: t.0.dim() });
        }
    }
    let ia = indicators(sample, &a.positions(&sample.window)?);
    let n = sample.n_paths as f64;
    let pa = ia.iter().sum::<f64>() / n;
    let big = Window::new(*t_list.last().unwrap(), d);
    // Per lag: (ĉ_t, per-path centered products)
    let per_lag: Vec<Result<(f64, f64, Vec<f64>)>> = (0..big.size())
        .into_par_iter()
        .map(|p| {
            let t = big.index_at(p);
            let ib = indicators(sample, &b.shifted(&t).positions(&sample.window)?);
            let pb = ib.iter().sum::<f64>() / n;
            let prods: Vec<f64> = ia.iter().zip(&ib).map(|(x, y)| (x - pa) * (y - pb)).collect();
            let c = prods.iter().sum::<f64>() / n;
            let var = prods.iter().map(|z| (z - c).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            Ok((c, (var / n).sqrt(), prods))
        })
        .collect();
    let per_lag = per_lag.into_iter().collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(t_list.len());
    let mut ses = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let w = Window::new(t, d);
        let c = w.size() as f64;
        let mut per_path = vec![0.0; sample.n_paths];
        let mut total = 0.0;
        for idx in w.indices() {
            let (ct, sd, prods) = &per_lag[big.position(&idx).unwrap()];
            let weight = match mode {
                CesaroMode::Ergodic => 1.0,
                CesaroMode::WeakMixing if ct.abs() > 3.0 * sd => ct.signum(),
                CesaroMode::WeakMixing => 0.0,
            };
            if weight != 0.0 {
                total += weight * ct;
                for (acc, z) in per_path.iter_mut().zip(prods) {
                    *acc += weight * z;
                }
            }
        }
        let mean = total / c;
        let m = per_path.iter().sum::<f64>() / (n * c);
        let var = per_path.iter().map(|z| (z / c - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        values.push(mean.abs());
        ses.push((var / n).sqrt());
    }
    let name = match mode {
        CesaroMode::Ergodic => "empirical_cesaro[ergodic]",
        CesaroMode::WeakMixing => "empirical_cesaro[weak-mixing]",
    };
    Ok(DiagnosticSeries::build(name, t_list.iter().map(|&t| t as u64).collect(), values, Some(ses), 1.0, 0.005))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::{CyclicAction, IdentityAction, StateSpace, TranslationAction};
    use std::sync::Arc;

    fn is_square(t: i64) -> bool {
        t >= 0 && (t as f64).sqrt().round().powi(2) as i64 == t
    }

    #[test]
    fn averages_of_simple_functions() {
        let c = ergodic_average(2, &|_| Some(2.5), &[1, 2, 4]).unwrap();
        assert!(c.values.iter().all(|&v| (v - 2.5).abs() < 1e-15));
        let sq = ergodic_average(1, &|t| Some(is_square(t.coords()[0]) as u8 as f64), &ladder(4, 65536)).unwrap();
        for (t, v) in sq.horizons.iter().zip(&sq.values) {
            assert!(*v <= ((*t as f64).sqrt() + 1.0) / (2.0 * *t as f64) + 1e-15);
        }
        assert_eq!(sq.verdict, Trend::Vanishes);
        let alt = ergodic_average(2, &|t| Some(if (t.coords()[0] + t.coords()[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 }), &[1, 3, 8])
            .unwrap();
        for (t, v) in alt.horizons.iter().zip(&alt.values) {
            assert!(v.abs() <= 1.0 / (2.0 * *t as f64));
        }
        assert!(matches!(ergodic_average(1, &|_| None, &[2]), Err(FieldError::MissingValue(_))));
    }

    #[test]
    fn kvn_examples() {
        let sq = kvn_filter(1, &|t| Some(is_square(t.coords()[0]) as u8 as f64), 1.0, &ladder(4, 65536), 0.5).unwrap();
        assert!(sq.density_one);
        assert!(sq.exceptional_density.last().unwrap() < &0.01);
        let one = kvn_filter(1, &|_| Some(1.0), 1.0, &ladder(4, 64), 0.5).unwrap();
        assert!(!one.density_one);
        let even = kvn_filter(1, &|t| Some((t.coords()[0] % 2 == 0) as u8 as f64), 1.0, &ladder(4, 64), 0.5).unwrap();
        assert!(!even.density_one);
        assert!((even.averages.final_value() - 0.5).abs() < 1e-15);
        assert!(kvn_filter(1, &|_| Some(2.0), 1.0, &[4], 0.5).is_err());
    }

    fn moving_max(r: i64) -> SpectralFamily {
        let (action, space) = TranslationAction::new(vec![r], |_| 1.0).unwrap();
        let f0 = (0..space.len()).map(|s| if s as i64 == r { 1.0 } else { 0.0 }).collect();
        SpectralFamily::from_action(1.0, FieldKind::MaxStable, space, Arc::new(action), None, f0).unwrap()
    }

    #[test]
    fn max_ergodicity_examples() {
        let fam = moving_max(600);
        let s = max_ergodicity(&fam, &MaxLinearCombination::single(LatticeIndex::zero(1)), &ladder(4, 512)).unwrap();
        for (t, v) in s.horizons.iter().zip(&s.values) {
            assert!((v - 1.0 / (2.0 * *t as f64)).abs() < 1e-15);
        }
        assert_eq!(s.verdict, Trend::Vanishes);

        let cyc = Arc::new(CyclicAction::new(vec![4]).unwrap());
        let fam = SpectralFamily::from_action(1.0, FieldKind::MaxStable, cyc.space(), cyc, None, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = max_ergodicity(&fam, &MaxLinearCombination::single(LatticeIndex::zero(1)), &ladder(4, 64)).unwrap();
        assert!(s.values.iter().all(|v| (v - 0.25).abs() < 1e-15));
        assert_eq!(s.verdict, Trend::Persists);

        let id = SpectralFamily::from_action(
            1.5,
            FieldKind::MaxStable,
            StateSpace::uniform(1),
            Arc::new(IdentityAction { d: 1, n: 1 }),
            None,
            vec![2.0],
        )
        .unwrap();
        let s = max_ergodicity(&id, &MaxLinearCombination::single(LatticeIndex::zero(1)), &ladder(4, 16)).unwrap();
        assert!(s.values.iter().all(|v| (v - 2f64.powf(1.5)).abs() < 1e-12));
        assert_eq!(s.verdict, Trend::Persists);
    }

    #[test]
    fn gross_examples() {
        let (action, space) = TranslationAction::new(vec![600], |_| 1.0).unwrap();
        let f0 = (0..space.len()).map(|s| if s == 600 { 1.0 } else { 0.0 }).collect();
        let fam = SpectralFamily::from_action(1.2, FieldKind::SumStable, space, Arc::new(action), None, f0).unwrap();
        let k = Interval::new(0.5, 2.0).unwrap();
        let s = gross_weak_mixing(&fam, k, 0.5, &ladder(4, 512)).unwrap();
        assert_eq!(s.verdict, Trend::Vanishes);
        let id = SpectralFamily::from_action(
            1.2,
            FieldKind::SumStable,
            StateSpace::uniform(1),
            Arc::new(IdentityAction { d: 1, n: 1 }),
            None,
            vec![1.0],
        )
        .unwrap();
        let s = gross_weak_mixing(&id, k, 0.5, &ladder(4, 32)).unwrap();
        assert!(s.values.iter().all(|&v| v == 1.0));
        assert_eq!(s.verdict, Trend::Persists);
        assert!(Interval::new(0.0, 1.0).is_err());
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(analytic_verdict(&[0.01, 0.004, 0.003], 1.0, 0.005), Trend::Vanishes);
        assert_eq!(analytic_verdict(&[0.001, 0.004, 0.003], 1.0, 0.005), Trend::Inconclusive);
        assert_eq!(analytic_verdict(&[0.002, 0.003, 0.004], 1.0, 0.005), Trend::Inconclusive);
        assert_eq!(analytic_verdict(&[0.3, 0.3, 0.3], 1.0, 0.005), Trend::Persists);
        assert_eq!(analytic_verdict(&[0.3, 0.3, 0.3], 100.0, 0.005), Trend::Vanishes);
        assert_eq!(empirical_verdict(&[0.2, 0.1, 0.01], &[0.01; 3], 0.005), Trend::Vanishes);
    }
}
