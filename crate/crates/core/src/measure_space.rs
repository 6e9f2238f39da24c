//! Finite (truncated) measure spaces, nonsingular Z^d actions with their
//! Radon–Nikodym cocycles, ±1 cocycles and the dual (transfer) operator.
//!
//! Every space is a finite set of states with strictly positive weights. When
//! the finite set truncates a countable space, point maps may leave it; such
//! moves are reported as [`FieldError::TruncationEscape`] and never clamped.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, FieldError, Result};
use crate::lattice::LatticeIndex;

/// A finite set of states carrying the weights μ(s).
#[derive(Clone, Debug)]
pub struct StateSpace {
    labels: Vec<String>,
    weights: Vec<f64>,
    /// Whether the untruncated space has finite total mass.
    pub total_mass_finite: bool,
    pub truncation_note: Option<String>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(FieldError::InvalidSpace(format!(
                "{} labels but {} weights",
                labels.len(),
                weights.len()
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(FieldError::InvalidSpace(format!(
                "weight of state {} is {w}; weights must be positive and finite",
                labels[i]
            )));
        }
        Ok(StateSpace { labels, weights, total_mass_finite: true, truncation_note: None })
    }

    /// States labelled by the integers `lo..=hi`.
    pub fn integer_interval(lo: i64, hi: i64, weight: impl Fn(i64) -> f64) -> Result<Self> {
        let labels = (lo..=hi).map(|k| k.to_string()).collect();
        let weights = (lo..=hi).map(weight).collect();
        Self::new(labels, weights)
    }

    pub fn uniform(n: usize) -> Self {
        Self::new((0..n).map(|k| k.to_string()).collect(), vec![1.0; n]).expect("uniform weights are valid")
    }

    pub fn with_truncation(mut self, note: impl Into<String>, untruncated_finite: bool) -> Self {
        self.truncation_note = Some(note.into());
        self.total_mass_finite = untruncated_finite;
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, s: usize) -> f64 {
        self.weights[s]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self, s: usize) -> &str {
        &self.labels[s]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// ∫ f dμ.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Sub-space on the listed states (in the given order).
    pub fn restrict(&self, states: &[usize]) -> StateSpace {
        StateSpace {
            labels: states.iter().map(|&s| self.labels[s].clone()).collect(),
            weights: states.iter().map(|&s| self.weights[s]).collect(),
            total_mass_finite: self.total_mass_finite,
            truncation_note: self.truncation_note.clone(),
        }
    }
}

/// A nonsingular Z^d action {φ_t} on the states of a [`StateSpace`] together
/// with a version w(t, s) of dμ∘φ_t/dμ.
pub trait NonsingularAction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// φ_t(s).
    fn apply(&self, t: &LatticeIndex, s: usize) -> Result<usize>;

    /// w(t, s).
    fn rn_weight(&self, t: &LatticeIndex, s: usize) -> Result<f64>;

    /// Number of states the action is defined on.
    fn n_states(&self) -> usize;

    /// Label used in escape errors.
    fn state_name(&self, s: usize) -> String {
        s.to_string()
    }

    fn generators(&self) -> Vec<LatticeIndex> {
        (0..self.dim()).map(|i| LatticeIndex::unit(self.dim(), i)).collect()
    }

    /// True if w ≡ 1.
    fn is_measure_preserving(&self) -> bool {
        false
    }
}

/// A {−1, +1}-valued cocycle c_t(s) for an action.
pub trait SignCocycle: Send + Sync + fmt::Debug {
    fn value(&self, t: &LatticeIndex, s: usize) -> Result<f64>;
}

/// c ≡ 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrivialCocycle;

impl SignCocycle for TrivialCocycle {
    fn value(&self, _t: &LatticeIndex, _s: usize) -> Result<f64> {
        Ok(1.0)
    }
}

/// c_t(s) = Π_i σ_i^{t_i}; a cocycle for every action because it ignores s.
#[derive(Debug, Clone)]
pub struct CharacterCocycle {
    pub signs: Vec<f64>,
}

impl SignCocycle for CharacterCocycle {
    fn value(&self, t: &LatticeIndex, _s: usize) -> Result<f64> {
        check_dim(self.signs.len(), t)?;
        Ok(t.coords()
            .iter()
            .zip(&self.signs)
            .map(|(&k, &sg)| if sg < 0.0 && k.rem_euclid(2) == 1 { -1.0 } else { 1.0 })
            .product())
    }
}

pub(crate) fn check_dim(d: usize, t: &LatticeIndex) -> Result<()> {
    if t.dim() != d {
        return Err(FieldError::DimensionMismatch { expected: d, got: t.dim() });
    }
    Ok(())
}

fn escape(t: &LatticeIndex, state: String) -> FieldError {
    FieldError::TruncationEscape { t: t.clone(), state }
}

/// Rotation of the product of cyclic groups Z_{m_1} × … × Z_{m_d}; states are
/// enumerated row-major, last coordinate fastest.
#[derive(Debug, Clone)]
pub struct CyclicAction {
    periods: Vec<usize>,
}

impl CyclicAction {
    pub fn new(periods: Vec<usize>) -> Result<Self> {
        if periods.is_empty() || periods.contains(&0) {
            return Err(invalid("periods", "need d >= 1 positive periods"));
        }
        Ok(CyclicAction { periods })
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    pub fn decode(&self, mut s: usize) -> Vec<usize> {
        let mut c = vec![0; self.periods.len()];
        for k in (0..self.periods.len()).rev() {
            c[k] = s % self.periods[k];
            s /= self.periods[k];
        }
        c
    }

    pub fn encode(&self, c: &[usize]) -> usize {
        c.iter().zip(&self.periods).fold(0, |acc, (&x, &m)| acc * m + x)
    }

    pub fn space(&self) -> StateSpace {
        let n: usize = self.periods.iter().product();
        let labels = (0..n)
            .map(|s| {
                let c = self.decode(s);
                c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":")
            })
            .collect();
        StateSpace::new(labels, vec![1.0; n]).expect("valid")
    }
}

impl NonsingularAction for CyclicAction {
    fn dim(&self) -> usize {
        self.periods.len()
    }

    fn apply(&self, t: &LatticeIndex, s: usize) -> Result<usize> {
        check_dim(self.dim(), t)?;
        let c: Vec<usize> = self
            .decode(s)
            .iter()
            .zip(t.coords())
            .zip(&self.periods)
            .map(|((&x, &k), &m)| (x as i64 + k).rem_euclid(m as i64) as usize)
            .collect();
        Ok(self.encode(&c))
    }

    fn rn_weight(&self, t: &LatticeIndex, _s: usize) -> Result<f64> {
        check_dim(self.dim(), t)?;
        Ok(1.0)
    }

    fn n_states(&self) -> usize {
        self.periods.iter().product()
    }

    fn is_measure_preserving(&self) -> bool {
        true
    }
}

/// φ_t = id for every t.
#[derive(Debug, Clone)]
pub struct IdentityAction {
    pub d: usize,
    pub n: usize,
}

impl NonsingularAction for IdentityAction {
    fn dim(&self) -> usize {
        self.d
    }
    fn apply(&self, t: &LatticeIndex, s: usize) -> Result<usize> {
        check_dim(self.d, t)?;
        Ok(s)
    }
    fn rn_weight(&self, t: &LatticeIndex, _s: usize) -> Result<f64> {
        check_dim(self.d, t)?;
        Ok(1.0)
    }
    fn n_states(&self) -> usize {
        self.n
    }
    fn is_measure_preserving(&self) -> bool {
        true
    }
}

/// Translation k ↦ k + t on the truncated lattice box Π_i [−R_i, R_i] with an
/// arbitrary positive weight μ; w(t, k) = μ(k + t)/μ(k).
#[derive(Debug, Clone)]
pub struct TranslationAction {
    radius: Vec<i64>,
    weights: Vec<f64>,
}

impl TranslationAction {
    /// Builds the box space and the action for weight function `mu`.
    pub fn new(radius: Vec<i64>, mu: impl Fn(&[i64]) -> f64) -> Result<(Self, StateSpace)> {
        if radius.is_empty() || radius.iter().any(|&r| r < 0) {
            return Err(invalid("radius", "need d >= 1 nonnegative radii"));
        }
        let n: usize = radius.iter().map(|r| (2 * r + 1) as usize).product();
        let proto = TranslationAction { radius: radius.clone(), weights: Vec::new() };
        let mut labels = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for s in 0..n {
            let k = proto.decode(s);
            labels.push(if k.len() == 1 {
                k[0].to_string()
            } else {
                k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":")
            });
            weights.push(mu(&k));
        }
        let space = StateSpace::new(labels, weights.clone())?;
        Ok((TranslationAction { radius, weights }, space))
    }

    pub fn decode(&self, mut s: usize) -> Vec<i64> {
        let mut k = vec![0; self.radius.len()];
        for i in (0..self.radius.len()).rev() {
            let side = (2 * self.radius[i] + 1) as usize;
            k[i] = (s % side) as i64 - self.radius[i];
            s /= side;
        }
        k
    }

    pub fn encode(&self, k: &[i64]) -> Option<usize> {
        let mut s = 0usize;
        for (x, &r) in k.iter().zip(&self.radius) {
            if x.abs() > r {
                return None;
            }
            s = s * (2 * r + 1) as usize + (x + r) as usize;
        }
        Some(s)
    }

    pub fn radius(&self) -> &[i64] {
        &self.radius
    }
}

impl NonsingularAction for TranslationAction {
    fn dim(&self) -> usize {
        self.radius.len()
    }

    fn apply(&self, t: &LatticeIndex, s: usize) -> Result<usize> {
        check_dim(self.dim(), t)?;
        let k: Vec<i64> = self.decode(s).iter().zip(t.coords()).map(|(a, b)| a + b).collect();
        self.encode(&k).ok_or_else(|| escape(t, self.state_name(s)))
    }

    fn rn_weight(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        let target = self.apply(t, s)?;
        Ok(self.weights[target] / self.weights[s])
    }

    fn n_states(&self) -> usize {
        self.weights.len()
    }

    fn state_name(&self, s: usize) -> String {
        let k = self.decode(s);
        k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":")
    }

    fn is_measure_preserving(&self) -> bool {
        self.weights.iter().all(|&w| w == self.weights[0])
    }
}

/// An action given by explicit one-step tables for each generator e_i:
/// `forward[i][s] = φ_{e_i}(s)` (`None` = leaves the truncation) and
/// `weight[i][s] = w(e_i, s)`. Generators must commute; [`verify_action_laws`]
/// checks that.
#[derive(Debug, Clone)]
pub struct TableAction {
    forward: Vec<Vec<Option<usize>>>,
    backward: Vec<Vec<Option<usize>>>,
    weight: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl TableAction {
    pub fn new(forward: Vec<Vec<Option<usize>>>, weight: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if forward.is_empty() || forward.len() != weight.len() {
            return Err(invalid("action", "need one map and one weight table per generator"));
        }
        let mut backward = Vec::with_capacity(forward.len());
        for (i, (map, w)) in forward.iter().zip(&weight).enumerate() {
            if map.len() != n || w.len() != n {
                return Err(invalid("action", format!("generator {i}: tables must have {n} entries")));
            }
            if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(invalid("action", format!("generator {i}: weights must be positive")));
            }
            let mut inv = vec![None; n];
            for (s, img) in map.iter().enumerate() {
                if let Some(j) = *img {
                    if j >= n {
                        return Err(invalid("action", format!("generator {i}: image {j} out of range")));
                    }
                    if inv[j].is_some() {
                        return Err(invalid("action", format!("generator {i}: map is not injective at {j}")));
                    }
                    inv[j] = Some(s);
                }
            }
            backward.push(inv);
        }
        Ok(TableAction { forward, backward, weight, labels })
    }

    fn step(&self, t: &LatticeIndex, axis: usize, forward: bool, s: usize) -> Result<(usize, f64)> {
        if forward {
            let next = self.forward[axis][s].ok_or_else(|| escape(t, self.labels[s].clone()))?;
            Ok((next, self.weight[axis][s]))
        } else {
            let prev = self.backward[axis][s].ok_or_else(|| escape(t, self.labels[s].clone()))?;
            // w(-e, s) = 1 / w(e, φ_{-e}(s))
            Ok((prev, 1.0 / self.weight[axis][prev]))
        }
    }

    fn walk(&self, t: &LatticeIndex, s: usize) -> Result<(usize, f64)> {
        check_dim(self.forward.len(), t)?;
        let mut cur = s;
        let mut w = 1.0;
        for (axis, &k) in t.coords().iter().enumerate() {
            for _ in 0..k.unsigned_abs() {
                let (next, ws) = self.step(t, axis, k > 0, cur)?;
                w *= ws;
                cur = next;
            }
        }
        Ok((cur, w))
    }
}

impl NonsingularAction for TableAction {
    fn dim(&self) -> usize {
        self.forward.len()
    }
    fn apply(&self, t: &LatticeIndex, s: usize) -> Result<usize> {
        self.walk(t, s).map(|(x, _)| x)
    }
    fn rn_weight(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        self.walk(t, s).map(|(_, w)| w)
    }
    fn n_states(&self) -> usize {
        self.labels.len()
    }
    fn state_name(&self, s: usize) -> String {
        self.labels[s].clone()
    }
}

/// Disjoint union of actions of the same dimension; states are concatenated.
#[derive(Debug, Clone)]
pub struct DisjointUnionAction {
    parts: Vec<Arc<dyn NonsingularAction>>,
    offsets: Vec<usize>,
}

impl DisjointUnionAction {
    pub fn new(parts: Vec<Arc<dyn NonsingularAction>>) -> Result<Self> {
        let d = parts.first().map(|p| p.dim()).ok_or_else(|| invalid("parts", "empty union"))?;
        if parts.iter().any(|p| p.dim() != d) {
            return Err(invalid("parts", "all parts must share the dimension"));
        }
        let mut offsets = Vec::with_capacity(parts.len());
        let mut acc = 0;
        for p in &parts {
            offsets.push(acc);
            acc += p.n_states();
        }
        Ok(DisjointUnionAction { parts, offsets })
    }

    fn locate(&self, s: usize) -> (usize, usize) {
        let part = self.offsets.partition_point(|&o| o <= s) - 1;
        (part, s - self.offsets[part])
    }

    /// Range of global state ids belonging to part `k`.
    pub fn part_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.parts[k].n_states()
    }
}

impl NonsingularAction for DisjointUnionAction {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }
    fn apply(&self, t: &LatticeIndex, s: usize) -> Result<usize> {
        let (p, local) = self.locate(s);
        Ok(self.offsets[p] + self.parts[p].apply(t, local)?)
    }
    fn rn_weight(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        let (p, local) = self.locate(s);
        self.parts[p].rn_weight(t, local)
    }
    fn n_states(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.parts.last().map(|p| p.n_states()).unwrap_or(0)
    }
    fn state_name(&self, s: usize) -> String {
        let (p, local) = self.locate(s);
        format!("{p}/{}", self.parts[p].state_name(local))
    }
    fn is_measure_preserving(&self) -> bool {
        self.parts.iter().all(|p| p.is_measure_preserving())
    }
}

/// An action restricted to a subset of states. Images leaving the subset are
/// reported as escapes.
#[derive(Debug, Clone)]
pub struct RestrictedAction {
    parent: Arc<dyn NonsingularAction>,
    states: Vec<usize>,
    local: HashMap<usize, usize>,
}

impl RestrictedAction {
    pub fn new(parent: Arc<dyn NonsingularAction>, states: Vec<usize>) -> Self {
        let local = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        RestrictedAction { parent, states, local }
    }

    pub fn parent_state(&self, s: usize) -> usize {
        self.states[s]
    }
}

impl NonsingularAction for RestrictedAction {
    fn dim(&self) -> usize {
        self.parent.dim()
    }
    fn apply(&self, t: &LatticeIndex, s: usize) -> Result<usize> {
        let img = self.parent.apply(t, self.states[s])?;
        self.local.get(&img).copied().ok_or_else(|| escape(t, self.state_name(s)))
    }
    fn rn_weight(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        self.apply(t, s)?;
        self.parent.rn_weight(t, self.states[s])
    }
    fn n_states(&self) -> usize {
        self.states.len()
    }
    fn state_name(&self, s: usize) -> String {
        self.parent.state_name(self.states[s])
    }
    fn is_measure_preserving(&self) -> bool {
        self.parent.is_measure_preserving()
    }
}

fn check_space(action: &dyn NonsingularAction, space: &StateSpace) -> Result<()> {
    if action.n_states() != space.len() {
        return Err(FieldError::InvalidSpace(format!(
            "action acts on {} states, space has {}",
            action.n_states(),
            space.len()
        )));
    }
    Ok(())
}

/// (φ̂_{−t} f)(s) = w(t, s)·f(φ_t(s)).
pub fn dual_apply(action: &dyn NonsingularAction, t: &LatticeIndex, f: &[f64], space: &StateSpace) -> Result<Vec<f64>> {
    check_dim(action.dim(), t)?;
    check_space(action, space)?;
    if f.len() != space.len() {
        return Err(invalid("f", format!("expected {} values, got {}", space.len(), f.len())));
    }
    if let Some(v) = f.iter().find(|v| !v.is_finite()) {
        return Err(invalid("f", format!("non-finite value {v}")));
    }
    (0..space.len())
        .map(|s| Ok(action.rn_weight(t, s)? * f[action.apply(t, s)?]))
        .collect()
}

/// Like [`dual_apply`] but escapes become `None` instead of failing.
pub fn dual_apply_partial(action: &dyn NonsingularAction, t: &LatticeIndex, f: &[f64]) -> Result<Vec<Option<f64>>> {
    check_dim(action.dim(), t)?;
    (0..action.n_states())
        .map(|s| match (action.apply(t, s), action.rn_weight(t, s)) {
            (Ok(img), Ok(w)) => Ok(Some(w * f[img])),
            (Err(FieldError::TruncationEscape { .. }), _) | (_, Err(FieldError::TruncationEscape { .. })) => Ok(None),
            (Err(e), _) | (_, Err(e)) => Err(e),
        })
        .collect()
}

/// Outcome of one identity in [`verify_action_laws`].
#[derive(Debug, Clone, Serialize)]
pub struct LawCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest relative violation |lhs − rhs| / max(|lhs|, |rhs|, 1e-300).
    pub max_violation: f64,
    pub checked: usize,
    /// Samples skipped because some map left the truncation.
    pub boundary_skips: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LawReport {
    pub checks: Vec<LawCheck>,
    /// Labels of states where a boundary skip happened (first few).
    pub boundary_states: Vec<String>,
}

impl LawReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&LawCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn max_violation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_violation).fold(0.0, f64::max)
    }
}

struct Tally {
    name: &'static str,
    worst: f64,
    checked: usize,
    skipped: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, worst: 0.0, checked: 0, skipped: 0 }
    }

    fn record(&mut self, outcome: Result<(f64, f64)>, boundary: &mut Vec<String>, state: impl FnOnce() -> String) -> Result<()> {
        match outcome {
            Ok((a, b)) => {
                self.checked += 1;
                let scale = a.abs().max(b.abs()).max(1e-300);
                let v = if a == b { 0.0 } else { (a - b).abs() / scale };
                self.worst = self.worst.max(v);
                Ok(())
            }
            Err(FieldError::TruncationEscape { .. }) => {
                self.skipped += 1;
                if boundary.len() < 32 {
                    let name = state();
                    if !boundary.contains(&name) {
                        boundary.push(name);
                    }
                }
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn finish(self, tol: f64) -> LawCheck {
        LawCheck {
            name: self.name,
            passed: self.worst <= tol,
            max_violation: self.worst,
            checked: self.checked,
            boundary_skips: self.skipped,
        }
    }
}

/// Checks the group-action identities, w(0,·) = 1, the cocycle identity
/// w(t+h, s) = w(h, s)·w(t, φ_h(s)), measure transport
/// w(t, φ_{−t}s)·μ(φ_{−t}s) = μ(s), and (when given) multiplicativity of a sign
/// cocycle, on `sample_budget` random triples plus every generator direction.
/// Samples hitting the truncation boundary are skipped and flagged.
pub fn verify_action_laws(
    action: &dyn NonsingularAction,
    space: &StateSpace,
    cocycle: Option<&dyn SignCocycle>,
    sample_budget: usize,
    tol: f64,
    seed: u64,
) -> Result<LawReport> {
    if sample_budget == 0 {
        return Err(invalid("sample_budget", "must be at least 1"));
    }
    check_space(action, space)?;
    let n = space.len();
    let d = action.dim();
    let mut boundary = Vec::new();
    if n == 0 {
        return Ok(LawReport { checks: Vec::new(), boundary_states: boundary });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = 3i64;
    let zero = LatticeIndex::zero(d);

    let gens = action.generators();
    let mut triples: Vec<(LatticeIndex, LatticeIndex, usize)> = Vec::new();
    for g in &gens {
        for h in [g.clone(), -g] {
            for s in 0..n.min(64) {
                triples.push((h.clone(), g.clone(), s));
            }
        }
    }
    let random_index = |rng: &mut ChaCha8Rng| LatticeIndex::new((0..d).map(|_| rng.random_range(-reach..=reach)).collect());
    for _ in 0..sample_budget {
        let t = random_index(&mut rng);
        let h = random_index(&mut rng);
        let s = rng.random_range(0..n);
        triples.push((t, h, s));
    }

    let mut identity = Tally::new("identity");
    let mut group = Tally::new("group_law");
    let mut w_zero = Tally::new("w_zero");
    let mut cocycle_t = Tally::new("cocycle");
    let mut transport = Tally::new("measure_transport");
    let mut sign = Tally::new("sign_cocycle");

    for (t, h, s) in &triples {
        let (t, h, s) = (t, h, *s);
        let name = || action.state_name(s);
        identity.record(action.apply(&zero, s).map(|x| (x as f64, s as f64)), &mut boundary, name)?;
        w_zero.record(action.rn_weight(&zero, s).map(|w| (w, 1.0)), &mut boundary, name)?;
        let sum = t + h;
        let lhs = action.apply(&sum, s);
        let rhs = action.apply(h, s).and_then(|y| action.apply(t, y));
        group.record(lhs.and_then(|a| rhs.map(|b| (a as f64, b as f64))), &mut boundary, name)?;
        let wl = action.rn_weight(&sum, s);
        let wr = action
            .rn_weight(h, s)
            .and_then(|a| action.apply(h, s).and_then(|y| action.rn_weight(t, y)).map(|b| a * b));
        cocycle_t.record(wl.and_then(|a| wr.map(|b| (a, b))), &mut boundary, name)?;
        let neg = -t;
        let tr = action
            .apply(&neg, s)
            .and_then(|pre| action.rn_weight(t, pre).map(|w| (w * space.weight(pre), space.weight(s))));
        transport.record(tr, &mut boundary, name)?;
        if let Some(c) = cocycle {
            let l = c.value(&sum, s);
            let r = c
                .value(h, s)
                .and_then(|a| action.apply(h, s).and_then(|y| c.value(t, y)).map(|b| a * b));
            sign.record(l.and_then(|a| r.map(|b| (a, b))), &mut boundary, name)?;
        }
    }

    let mut checks = vec![
        identity.finish(tol),
        group.finish(tol),
        w_zero.finish(tol),
        cocycle_t.finish(tol),
        transport.finish(tol),
    ];
    if cocycle.is_some() {
        checks.push(sign.finish(tol));
    }
    Ok(LawReport { checks, boundary_states: boundary })
}

/// Tests φ̂_t ρ = ρ for every generator t; returns the verdict and the largest
/// pointwise residual. States whose image leaves the truncation are skipped.
pub fn verify_invariant_density(
    action: &dyn NonsingularAction,
    space: &StateSpace,
    rho: &[f64],
    generators: &[LatticeIndex],
    tol: f64,
) -> Result<(bool, f64)> {
    if generators.is_empty() {
        return Err(invalid("generators", "empty generator list"));
    }
    check_space(action, space)?;
    if rho.len() != space.len() || rho.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(invalid("rho", "must be a finite nonnegative density on every state"));
    }
    if rho.iter().all(|&r| r == 0.0) {
        return Err(invalid("rho", "identically zero"));
    }
    let mut worst: f64 = 0.0;
    for g in generators {
        // φ̂_t ρ(s) = w(−t, s) ρ(φ_{−t} s)
        let neg = -g;
        for (s, v) in dual_apply_partial(action, &neg, rho)?.into_iter().enumerate() {
            if let Some(v) = v {
                worst = worst.max((v - rho[s]).abs());
            }
        }
    }
    Ok((worst <= tol, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric_shift(r: i64) -> (TranslationAction, StateSpace) {
        TranslationAction::new(vec![r], |k| 2f64.powi(-(k[0].abs() as i32))).unwrap()
    }

    fn indicator(space: &StateSpace, label: &str) -> Vec<f64> {
        space.labels().iter().map(|l| if l == label { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn cyclic_dual_is_composition() {
        let a = CyclicAction::new(vec![4]).unwrap();
        let space = a.space();
        let f = indicator(&space, "0");
        let g = dual_apply(&a, &LatticeIndex::new(vec![1]), &f, &space).unwrap();
        assert_eq!(g, indicator(&space, "3"));
    }

    #[test]
    fn geometric_shift_dual_example() {
        let (a, space) = geometric_shift(20);
        let f = indicator(&space, "0");
        let g = dual_apply(&a, &LatticeIndex::new(vec![1]), &f, &space);
        // k = 20 escapes under t = 1
        assert!(matches!(g, Err(FieldError::TruncationEscape { .. })));
        let g = dual_apply_partial(&a, &LatticeIndex::new(vec![1]), &f).unwrap();
        let minus_one = space.labels().iter().position(|l| l == "-1").unwrap();
        for (s, v) in g.iter().enumerate() {
            match v {
                Some(v) if s == minus_one => assert_eq!(*v, 2.0),
                Some(v) => assert_eq!(*v, 0.0),
                None => assert_eq!(space.label(s), "20"),
            }
        }
        let total: f64 = g.iter().zip(space.weights()).map(|(v, w)| v.unwrap_or(0.0) * w).sum();
        assert_eq!(total, space.integrate(&f));
    }

    #[test]
    fn zero_shift_is_identity() {
        let (a, space) = geometric_shift(5);
        let f: Vec<f64> = (0..space.len()).map(|i| i as f64 * 0.5 - 1.0).collect();
        assert_eq!(dual_apply(&a, &LatticeIndex::zero(1), &f, &space).unwrap(), f);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = CyclicAction::new(vec![4]).unwrap();
        let space = a.space();
        let err = dual_apply(&a, &LatticeIndex::zero(2), &[0.0; 4], &space).unwrap_err();
        assert_eq!(err, FieldError::DimensionMismatch { expected: 1, got: 2 });
    }

    #[test]
    fn laws_hold_on_cyclic_and_geometric_shift() {
        let a = CyclicAction::new(vec![4]).unwrap();
        let rep = verify_action_laws(&a, &a.space(), Some(&TrivialCocycle), 500, 0.0, 1).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
        assert_eq!(rep.max_violation(), 0.0);

        let (a, space) = geometric_shift(20);
        let c = CharacterCocycle { signs: vec![-1.0] };
        let rep = verify_action_laws(&a, &space, Some(&c), 2000, 1e-12, 2).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
        assert!(rep.checks.iter().any(|c| c.boundary_skips > 0));
        assert!(!rep.boundary_states.is_empty());
    }

    #[derive(Debug)]
    struct Corrupted(TranslationAction);

    impl NonsingularAction for Corrupted {
        fn dim(&self) -> usize {
            1
        }
        fn apply(&self, t: &LatticeIndex, s: usize) -> Result<usize> {
            self.0.apply(t, s)
        }
        fn rn_weight(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
            let w = self.0.rn_weight(t, s)?;
            if t.coords() == [1] && self.0.decode(s) == [0] {
                Ok(w + 1e-3)
            } else {
                Ok(w)
            }
        }
        fn n_states(&self) -> usize {
            self.0.n_states()
        }
    }

    #[test]
    fn corrupted_weight_breaks_cocycle() {
        let (a, space) = TranslationAction::new(vec![10], |_| 1.0).unwrap();
        let bad = Corrupted(a);
        let rep = verify_action_laws(&bad, &space, None, 4000, 1e-12, 3).unwrap();
        let c = rep.check("cocycle").unwrap();
        assert!(!c.passed);
        assert!((c.max_violation - 1e-3).abs() < 2e-4, "{}", c.max_violation);
    }

    #[test]
    fn table_action_matches_translation() {
        let (tr, space) = geometric_shift(6);
        let n = space.len();
        let fwd = (0..n).map(|s| tr.apply(&LatticeIndex::new(vec![1]), s).ok()).collect();
        let w = (0..n)
            .map(|s| tr.rn_weight(&LatticeIndex::new(vec![1]), s).unwrap_or(1.0))
            .collect();
        let table = TableAction::new(vec![fwd], vec![w], space.labels().to_vec()).unwrap();
        for s in 0..n {
            for k in -4..=4 {
                let t = LatticeIndex::new(vec![k]);
                assert_eq!(table.apply(&t, s).ok(), tr.apply(&t, s).ok());
                if let (Ok(a), Ok(b)) = (table.rn_weight(&t, s), tr.rn_weight(&t, s)) {
                    assert_eq!(a, b);
                }
            }
        }
        let rep = verify_action_laws(&table, &space, None, 1000, 1e-12, 4).unwrap();
        assert!(rep.all_passed());
    }

    #[test]
    fn invariant_density_examples() {
        let a = CyclicAction::new(vec![4]).unwrap();
        let g = a.generators();
        assert_eq!(verify_invariant_density(&a, &a.space(), &[1.0; 4], &g, 0.0).unwrap(), (true, 0.0));

        let (z, space) = TranslationAction::new(vec![20], |_| 1.0).unwrap();
        let rho: Vec<f64> = (-20..=20).map(|k: i32| 2f64.powi(-k.abs())).collect();
        let (ok, res) = verify_invariant_density(&z, &space, &rho, &z.generators(), 1e-9).unwrap();
        assert!(!ok);
        assert_eq!(res, 0.5);

        // rotation with non-uniform μ: the density of the uniform measure is invariant
        let mu = [0.5, 1.0, 2.0, 4.0, 0.25];
        let fwd = (0..5).map(|s| Some((s + 1) % 5)).collect();
        let w = (0..5).map(|s| mu[(s + 1) % 5] / mu[s]).collect();
        let labels: Vec<String> = (0..5).map(|s| s.to_string()).collect();
        let rot = TableAction::new(vec![fwd], vec![w], labels.clone()).unwrap();
        let space = StateSpace::new(labels, mu.to_vec()).unwrap();
        let rho: Vec<f64> = mu.iter().map(|m| 1.0 / m).collect();
        let (ok, res) = verify_invariant_density(&rot, &space, &rho, &rot.generators(), 1e-12).unwrap();
        assert!(ok, "residual {res}");

        assert!(verify_invariant_density(&rot, &space, &rho, &[], 1e-12).is_err());
    }

    #[test]
    fn disjoint_union_and_restriction() {
        let c: Arc<dyn NonsingularAction> = Arc::new(CyclicAction::new(vec![4]).unwrap());
        let (z, _) = TranslationAction::new(vec![3], |_| 1.0).unwrap();
        let z: Arc<dyn NonsingularAction> = Arc::new(z);
        let u = DisjointUnionAction::new(vec![c, z]).unwrap();
        assert_eq!(u.n_states(), 11);
        let one = LatticeIndex::new(vec![1]);
        assert_eq!(u.apply(&one, 3).unwrap(), 0);
        assert_eq!(u.apply(&one, 4).unwrap(), 5);
        assert!(u.apply(&one, 10).is_err());
        let u: Arc<dyn NonsingularAction> = Arc::new(u);
        let r = RestrictedAction::new(u, vec![0, 1, 2, 3]);
        assert_eq!(r.apply(&one, 3).unwrap(), 0);
    }
}
