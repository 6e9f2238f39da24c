//! Positive/null classification of nonsingular Z^d actions through the
//! partial sums S_N(s) = Σ_{n≤N} (φ̂_{−t_n} g)(s), plus a greedy search for
//! weakly wandering sets.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FieldError, Result};
use crate::lattice::LatticeIndex;
use crate::measure_space::{check_dim, NonsingularAction, StateSpace};
use crate::spectral::{SpectralFamily, StateKernel};

/// How the terms t_1, t_2, … of a candidate sequence are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceRule {
    /// t_n = n^power · direction.
    Ray { direction: LatticeIndex, power: u32 },
    /// Chosen at run time: t_n on the sup-norm sphere of radius n minimizing
    /// the state-averaged dual value.
    Greedy,
    Explicit(Vec<LatticeIndex>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSequence {
    pub label: String,
    pub rule: SequenceRule,
}

impl CandidateSequence {
    pub fn ray(direction: LatticeIndex, power: u32) -> Result<Self> {
        if direction.is_zero() {
            return Err(invalid("direction", "ray direction must be nonzero"));
        }
        if power == 0 {
            return Err(invalid("power", "powers must be at least 1"));
        }
        let label = if power == 1 { format!("n*{direction}") } else { format!("n^{power}*{direction}") };
        Ok(CandidateSequence { label, rule: SequenceRule::Ray { direction, power } })
    }

    pub fn greedy() -> Self {
        CandidateSequence { label: "greedy".into(), rule: SequenceRule::Greedy }
    }

    pub fn explicit(label: impl Into<String>, terms: Vec<LatticeIndex>) -> Result<Self> {
        let mut seen = HashSet::new();
        if !terms.iter().all(|t| seen.insert(t.clone())) {
            return Err(invalid("sequence", "terms must be distinct"));
        }
        Ok(CandidateSequence { label: label.into(), rule: SequenceRule::Explicit(terms) })
    }

    /// The first `count` terms (not available for greedy sequences).
    pub fn terms(&self, count: usize) -> Option<Vec<LatticeIndex>> {
        match &self.rule {
            SequenceRule::Ray { direction, power } => {
                Some((1..=count as i64).map(|n| direction.scale(n.pow(*power))).collect())
            }
            SequenceRule::Explicit(t) => Some(t.iter().take(count).cloned().collect()),
            SequenceRule::Greedy => None,
        }
    }
}

/// Rays n^p·v for v ∈ {±e_1, …, ±e_d, ±(1, …, 1)} and each power p, followed
/// by one greedy sequence. In d = 1 the diagonal coincides with ±e_1.
pub fn default_sequences(d: usize, powers: &[u32]) -> Result<Vec<CandidateSequence>> {
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    if powers.is_empty() || powers.contains(&0) {
        return Err(invalid("powers", "need a nonempty list of powers ≥ 1"));
    }
    let mut dirs = Vec::new();
    for axis in 0..d {
        dirs.push(LatticeIndex::unit(d, axis));
        dirs.push(-&LatticeIndex::unit(d, axis));
    }
    if d > 1 {
        dirs.push(LatticeIndex::splat(d, 1));
        dirs.push(LatticeIndex::splat(d, -1));
    }
    let mut out = Vec::new();
    for &p in powers {
        for v in &dirs {
            out.push(CandidateSequence::ray(v.clone(), p)?);
        }
    }
    out.push(CandidateSequence::greedy());
    Ok(out)
}

/// Default weights a_τ ∝ 2^{−‖τ‖₁}, normalized to sum to one.
pub fn default_weights(t0: &[LatticeIndex]) -> Vec<f64> {
    let raw: Vec<f64> = t0.iter().map(|t| 0.5f64.powi(t.l1() as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// The cube {−r, …, r}^d.
pub fn cube(d: usize, r: i64) -> Vec<LatticeIndex> {
    let side = (2 * r + 1) as usize;
    let n = side.pow(d as u32);
    (0..n)
        .map(|mut k| {
            let mut c = vec![0i64; d];
            for slot in c.iter_mut().rev() {
                *slot = (k % side) as i64 - r;
                k /= side;
            }
            LatticeIndex::new(c)
        })
        .collect()
}

/// g = Σ_τ a_τ |f_τ|^α together with the states where it vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub values: Vec<f64>,
    pub zero_states: Vec<usize>,
    pub escapes: usize,
}

impl TestFunction {
    pub fn has_full_support(&self) -> bool {
        self.zero_states.is_empty()
    }
}

pub(crate) fn check_weights(t0: &[LatticeIndex], a: &[f64]) -> Result<()> {
    if t0.is_empty() {
        return Err(invalid("T0", "empty index set"));
    }
    if a.len() != t0.len() {
        return Err(invalid("a", format!("expected {} weights, got {}", t0.len(), a.len())));
    }
    if a.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(invalid("a", "weights must be positive and finite"));
    }
    Ok(())
}

/// g(s) = Σ_{τ∈T0} a_τ |f_τ(s)|^α on a state-based family. States where g
/// vanishes are reported, not rejected; escapes count as zero contributions.
pub fn build_test_function(kernel: &dyn StateKernel, alpha: f64, t0: &[LatticeIndex], a: &[f64]) -> Result<TestFunction> {
    check_weights(t0, a)?;
    let n = kernel.space().len();
    let rows: Vec<Result<(f64, bool)>> = (0..n)
        .into_par_iter()
        .with_min_len(64)
        .map(|s| {
            let mut g = 0.0;
            let mut escaped = false;
            for (t, w) in t0.iter().zip(a) {
                match kernel.eval(t, s) {
                    Ok(v) => g += w * v.abs().powf(alpha),
                    Err(FieldError::TruncationEscape { .. }) => escaped = true,
                    Err(e) => return Err(e),
                }
            }
            Ok((g, escaped))
        })
        .collect();
    let mut values = Vec::with_capacity(n);
    let mut escapes = 0;
    for r in rows {
        let (g, e) = r?;
        values.push(g);
        escapes += e as usize;
    }
    let zero_states = values.iter().enumerate().filter(|(_, &g)| g == 0.0).map(|(s, _)| s).collect();
    Ok(TestFunction { values, zero_states, escapes })
}

/// Same as [`build_test_function`] for a family; fails for families that
/// cannot be evaluated state by state.
pub fn family_test_function(family: &SpectralFamily, t0: &[LatticeIndex], a: &[f64]) -> Result<TestFunction> {
    let kernel = family
        .model
        .state_kernel()
        .ok_or_else(|| FieldError::Unsupported("test functions need a state-based family".into()))?;
    for t in t0 {
        check_dim(family.dim(), t)?;
    }
    build_test_function(kernel, family.alpha, t0, a)
}

/// What the series test iterates over: states with weights, the test
/// function g and the dual values (φ̂_{−t} g)(s).
pub trait DualSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn n_states(&self) -> usize;
    fn label(&self, s: usize) -> String;
    fn weight(&self, s: usize) -> f64;
    /// g(s).
    fn base(&self, s: usize) -> f64;
    /// (φ̂_{−t} g)(s); truncation escapes are errors.
    fn term(&self, t: &LatticeIndex, s: usize) -> Result<f64>;
    /// μ(W).
    fn set_measure(&self, w: &[usize]) -> f64 {
        w.iter().map(|&s| self.weight(s)).sum()
    }
    /// μ(φ_t^{−1}W ∩ φ_u^{−1}W); escapes are errors.
    fn translate_overlap(&self, w: &[usize], t: &LatticeIndex, u: &LatticeIndex) -> Result<f64>;
}

/// Dual system of a point-map action on a finite space.
pub struct PointMapDual {
    action: Arc<dyn NonsingularAction>,
    weights: Vec<f64>,
    labels: Vec<String>,
    g: Vec<f64>,
}

impl PointMapDual {
    pub fn new(action: Arc<dyn NonsingularAction>, space: &StateSpace, g: Vec<f64>) -> Result<Self> {
        if action.n_states() != space.len() || g.len() != space.len() {
            return Err(FieldError::InvalidSpace(format!(
                "action on {} states, space of {}, test function of {}",
                action.n_states(),
                space.len(),
                g.len()
            )));
        }
        Ok(PointMapDual { action, weights: space.weights().to_vec(), labels: space.labels().to_vec(), g })
    }

    fn preimage(&self, w: &[usize], t: &LatticeIndex) -> Result<Vec<usize>> {
        let back = -t;
        let mut out: Vec<usize> = w.iter().map(|&s| self.action.apply(&back, s)).collect::<Result<_>>()?;
        out.sort_unstable();
        Ok(out)
    }
}

impl DualSystem for PointMapDual {
    fn dim(&self) -> usize {
        self.action.dim()
    }
    fn n_states(&self) -> usize {
        self.weights.len()
    }
    fn label(&self, s: usize) -> String {
        self.labels[s].clone()
    }
    fn weight(&self, s: usize) -> f64 {
        self.weights[s]
    }
    fn base(&self, s: usize) -> f64 {
        self.g[s]
    }
    fn term(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        let img = self.action.apply(t, s)?;
        let gv = self.g[img];
        if gv == 0.0 {
            return Ok(0.0);
        }
        Ok(self.action.rn_weight(t, s)? * gv)
    }
    fn translate_overlap(&self, w: &[usize], t: &LatticeIndex, u: &LatticeIndex) -> Result<f64> {
        let a = self.preimage(w, t)?;
        let b = self.preimage(w, u)?;
        let (mut i, mut j, mut m) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    m += self.weights[a[i]];
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateVerdict {
    Positive,
    Null,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlobalVerdict {
    Positive,
    Null,
    Mixed,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesOutcome {
    Converges,
    Diverges,
    Undecided,
    /// Too few terms before the sequence left the truncation.
    Escaped,
}

macro_rules! display_kebab {
    ($($ty:ty),*) => {$(
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
                f.write_str(s.as_str().unwrap_or_default())
            }
        }
    )*};
}
display_kebab!(StateVerdict, GlobalVerdict, SeriesOutcome);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceEvidence {
    pub label: String,
    /// S_1, …, S_P over the escape-free prefix.
    pub partial_sums: Vec<f64>,
    /// Number of terms evaluated before the first escape (N if none).
    pub prefix: usize,
    pub escaped: bool,
    /// −slope of log term against log n over the second half of the prefix.
    pub decay_exponent: Option<f64>,
    pub outcome: SeriesOutcome,
}

impl SequenceEvidence {
    pub fn final_sum(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateReport {
    pub state: usize,
    pub label: String,
    pub g: f64,
    pub verdict: StateVerdict,
    pub evidence: Vec<SequenceEvidence>,
}

impl StateReport {
    /// The sequence that decided the verdict: the first converging one for
    /// null states, otherwise the one with the largest final sum.
    pub fn best_sequence(&self) -> Option<&SequenceEvidence> {
        match self.verdict {
            StateVerdict::Null => self.evidence.iter().find(|e| e.outcome == SeriesOutcome::Converges),
            _ => self.evidence.iter().max_by(|a, b| a.final_sum().total_cmp(&b.final_sum())),
        }
    }

    pub fn escape_count(&self) -> usize {
        self.evidence.iter().filter(|e| e.escaped).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub per_state: Vec<StateReport>,
    pub global_verdict: GlobalVerdict,
    pub positive_part: Vec<usize>,
    pub null_part: Vec<usize>,
    pub inconclusive: Vec<usize>,
    pub sequences: Vec<String>,
    pub config: SeriesConfig,
}

impl ClassificationReport {
    pub fn verdict(&self, s: usize) -> StateVerdict {
        self.per_state[s].verdict
    }

    /// One row per state: id, label, verdict, best sequence, final partial
    /// sum, number of escaped sequences.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,label,verdict,best_sequence,final_partial_sum,escapes\n");
        for r in &self.per_state {
            let (best, sum) = r.best_sequence().map(|e| (e.label.as_str(), e.final_sum())).unwrap_or(("", 0.0));
            out.push_str(&format!(
                "{},{},{},{},{:e},{}\n",
                r.state,
                csv_field(&r.label),
                r.verdict,
                csv_field(best),
                sum,
                r.escape_count()
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "global_verdict": self.global_verdict,
            "states": self.per_state.len(),
            "positive": self.positive_part.len(),
            "null": self.null_part.len(),
            "inconclusive": self.inconclusive.len(),
            "sequences": self.sequences,
            "parameters": self.config,
        })
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Thresholds of the series test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    /// Number of terms N.
    pub horizon: usize,
    /// A tail is exactly negligible when every last-quarter term is at most
    /// this fraction of max(S_P, g(s)).
    pub conv_tail_tol: f64,
    /// Terms decaying at least like n^{−conv_exponent} count as summable.
    pub conv_exponent: f64,
    /// Terms decaying no faster than n^{−div_exponent} with sustained mass
    /// count as divergent.
    pub div_exponent: f64,
    /// Sustained mass: mean of the last quarter of terms at least this
    /// fraction of the mean of the first quarter.
    pub growth_ratio: f64,
    /// Optional level criterion: S_P > div_threshold·g(s) with no summable
    /// decay also counts as divergence.
    pub div_threshold: Option<f64>,
    /// Escape-free prefixes shorter than max(8, min_prefix_frac·N) give no
    /// evidence.
    pub min_prefix_frac: f64,
    /// States averaged when choosing greedy terms (evenly spaced subsample).
    pub greedy_states: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            horizon: 64,
            conv_tail_tol: 1e-8,
            conv_exponent: 1.5,
            div_exponent: 1.0,
            growth_ratio: 0.1,
            div_threshold: None,
            min_prefix_frac: 0.25,
            greedy_states: 32,
        }
    }
}

impl SeriesConfig {
    pub fn with_horizon(horizon: usize) -> Self {
        SeriesConfig { horizon, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon < 8 {
            return Err(invalid("horizon", format!("need N ≥ 8, got {}", self.horizon)));
        }
        if !(self.conv_tail_tol >= 0.0) || !(self.growth_ratio > 0.0) {
            return Err(invalid("series", "tolerances must be nonnegative"));
        }
        if !(self.conv_exponent > self.div_exponent) {
            return Err(invalid("conv_exponent", "must exceed div_exponent"));
        }
        if !(self.min_prefix_frac > 0.0 && self.min_prefix_frac <= 1.0) {
            return Err(invalid("min_prefix_frac", "must lie in (0, 1]"));
        }
        Ok(())
    }

    fn min_prefix(&self) -> usize {
        8.max((self.min_prefix_frac * self.horizon as f64).ceil() as usize)
    }
}

/// Least-squares decay exponent of positive terms against n over the
/// second half of the prefix.
fn decay_exponent(terms: &[f64]) -> Option<f64> {
    let p = terms.len();
    let pts: Vec<(f64, f64)> = (p / 2..p)
        .filter(|&i| terms[i] > 0.0)
        .map(|i| (((i + 1) as f64).ln(), terms[i].ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

fn judge(terms: &[f64], g: f64, cfg: &SeriesConfig) -> (Option<f64>, SeriesOutcome) {
    let p = terms.len();
    if p < cfg.min_prefix() {
        return (None, SeriesOutcome::Escaped);
    }
    let total: f64 = terms.iter().sum();
    let q = p.div_ceil(4);
    let tail = &terms[p - q..];
    let head = &terms[..q];
    let scale = total.max(g);
    if tail.iter().all(|&x| x <= cfg.conv_tail_tol * scale) {
        return (decay_exponent(terms), SeriesOutcome::Converges);
    }
    let exponent = decay_exponent(terms);
    let Some(e) = exponent else {
        return (None, SeriesOutcome::Undecided);
    };
    if e >= cfg.conv_exponent {
        return (exponent, SeriesOutcome::Converges);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    if e <= cfg.div_exponent && mean(tail) >= cfg.growth_ratio * mean(head) {
        return (exponent, SeriesOutcome::Diverges);
    }
    if let Some(th) = cfg.div_threshold {
        if total > th * g {
            return (exponent, SeriesOutcome::Diverges);
        }
    }
    (exponent, SeriesOutcome::Undecided)
}

fn evenly_spaced(n: usize, k: usize) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    (0..k).map(|i| i * n / k).collect()
}

/// All indices with sup norm exactly r, in lexicographic order.
pub(crate) fn sphere(d: usize, r: i64) -> Vec<LatticeIndex> {
    cube(d, r).into_iter().filter(|t| t.norm() == r).collect()
}

/// Greedy terms: t_n on the sup-sphere of radius n minimizing (escapes,
/// averaged dual value) over an evenly spaced subsample of states.
fn greedy_terms(system: &dyn DualSystem, cfg: &SeriesConfig) -> Result<Vec<LatticeIndex>> {
    let states = evenly_spaced(system.n_states(), cfg.greedy_states.max(1));
    let mass: f64 = states.iter().map(|&s| system.weight(s)).sum();
    let mut out = Vec::with_capacity(cfg.horizon);
    for n in 1..=cfg.horizon as i64 {
        let cands = sphere(system.dim(), n);
        let scored: Vec<Result<(usize, f64)>> = cands
            .par_iter()
            .map(|t| {
                let mut esc = 0;
                let mut val = 0.0;
                for &s in &states {
                    match system.term(t, s) {
                        Ok(v) => val += system.weight(s) * v,
                        Err(FieldError::TruncationEscape { .. }) => esc += 1,
                        Err(e) => return Err(e),
                    }
                }
                Ok((esc, val / mass))
            })
            .collect();
        let mut best: Option<(usize, f64, usize)> = None;
        for (i, r) in scored.into_iter().enumerate() {
            let (esc, val) = r?;
            if best.is_none_or(|(be, bv, _)| (esc, val) < (be, bv)) {
                best = Some((esc, val, i));
            }
        }
        out.push(cands[best.map(|b| b.2).unwrap_or(0)].clone());
    }
    Ok(out)
}

/// Runs the series test on every state of `system`.
pub fn series_test(system: &dyn DualSystem, sequences: &[CandidateSequence], cfg: &SeriesConfig) -> Result<ClassificationReport> {
    cfg.validate()?;
    if sequences.is_empty() {
        return Err(invalid("sequences", "empty sequence list"));
    }
    let n = system.n_states();
    let zero: Vec<usize> = (0..n).filter(|&s| !(system.base(s) > 0.0)).collect();
    if let Some(&first) = zero.first() {
        return Err(FieldError::SupportDeficiency { count: zero.len(), first: system.label(first) });
    }
    let mut resolved = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let terms = match seq.terms(cfg.horizon) {
            Some(t) => t,
            None => greedy_terms(system, cfg)?,
        };
        for t in &terms {
            check_dim(system.dim(), t)?;
        }
        resolved.push((seq.label.clone(), terms));
    }
    let per_state: Vec<Result<StateReport>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let g = system.base(s);
            let mut evidence = Vec::with_capacity(resolved.len());
            for (label, terms) in &resolved {
                let mut vals = Vec::with_capacity(terms.len());
                let mut escaped = false;
                for t in terms {
                    match system.term(t, s) {
                        Ok(v) => vals.push(v),
                        Err(FieldError::TruncationEscape { .. }) => {
                            escaped = true;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                let (decay, outcome) = judge(&vals, g, cfg);
                let mut acc = 0.0;
                let partial_sums = vals
                    .iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect();
                evidence.push(SequenceEvidence {
                    label: label.clone(),
                    partial_sums,
                    prefix: vals.len(),
                    escaped,
                    decay_exponent: decay,
                    outcome,
                });
            }
            let any_conv = evidence.iter().any(|e| e.outcome == SeriesOutcome::Converges);
            let informative: Vec<_> = evidence.iter().filter(|e| e.outcome != SeriesOutcome::Escaped).collect();
            let verdict = if any_conv {
                StateVerdict::Null
            } else if !informative.is_empty() && informative.iter().all(|e| e.outcome == SeriesOutcome::Diverges) {
                StateVerdict::Positive
            } else {
                StateVerdict::Inconclusive
            };
            Ok(StateReport { state: s, label: system.label(s), g, verdict, evidence })
        })
        .collect();
    let per_state = per_state.into_iter().collect::<Result<Vec<_>>>()?;
    let pick = |v: StateVerdict| per_state.iter().filter(|r| r.verdict == v).map(|r| r.state).collect::<Vec<_>>();
    let positive_part = pick(StateVerdict::Positive);
    let null_part = pick(StateVerdict::Null);
    let inconclusive = pick(StateVerdict::Inconclusive);
    let global_verdict = if positive_part.len() == n {
        GlobalVerdict::Positive
    } else if null_part.len() == n {
        GlobalVerdict::Null
    } else if inconclusive.is_empty() && !positive_part.is_empty() && !null_part.is_empty() {
        GlobalVerdict::Mixed
    } else {
        GlobalVerdict::Inconclusive
    };
    Ok(ClassificationReport {
        per_state,
        global_verdict,
        positive_part,
        null_part,
        inconclusive,
        sequences: sequences.iter().map(|s| s.label.clone()).collect(),
        config: cfg.clone(),
    })
}

/// Classifies a family with test function built from (T0, a).
pub fn classify(
    family: &SpectralFamily,
    t0: &[LatticeIndex],
    a: &[f64],
    sequences: &[CandidateSequence],
    cfg: &SeriesConfig,
) -> Result<ClassificationReport> {
    check_weights(t0, a)?;
    for t in t0 {
        check_dim(family.dim(), t)?;
    }
    let system = family.model.dual_system(family.alpha, t0, a)?;
    series_test(system.as_ref(), sequences, cfg)
}

/// Checks that the estimated positive part is mapped into itself by every
/// generator and its inverse, ignoring escapes. Returns the offending state.
pub fn check_part_invariance(action: &dyn NonsingularAction, report: &ClassificationReport) -> Result<Option<usize>> {
    let pos: HashSet<usize> = report.positive_part.iter().copied().collect();
    for g in action.generators() {
        for dir in [g.clone(), -&g] {
            for s in 0..action.n_states() {
                match action.apply(&dir, s) {
                    Ok(img) if pos.contains(&s) != pos.contains(&img) => return Ok(Some(s)),
                    Ok(_) | Err(FieldError::TruncationEscape { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(None)
}

/// A set W of positive measure with translates φ_{t_n}^{−1}W that are
/// pairwise disjoint up to the overlap tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WanderingSet {
    pub states: Vec<usize>,
    pub labels: Vec<String>,
    pub sequence: Vec<LatticeIndex>,
    /// Largest pairwise overlap divided by μ(W).
    pub max_relative_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WanderingConfig {
    /// Number of translates required.
    pub horizon: usize,
    /// Overlaps up to tol·μ(W) count as disjoint.
    pub tol: f64,
    /// Largest multiple k tried along a direction.
    pub max_step: i64,
    /// Number of seed states tried (evenly spaced).
    pub max_seeds: usize,
}

impl Default for WanderingConfig {
    fn default() -> Self {
        WanderingConfig { horizon: 16, tol: 0.05, max_step: 1 << 17, max_seeds: 64 }
    }
}

fn next_k(k: i64) -> i64 {
    if k < 64 {
        k + 1
    } else {
        k + (k / 8).max(1)
    }
}

/// Greedy search: for each seed state W = {s} and direction v (±e_i and the
/// diagonals), extends 0 = k_0 < k_1 < … so that the translates by k_n·v are
/// pairwise disjoint up to tolerance.
pub fn find_weakly_wandering(system: &dyn DualSystem, cfg: &WanderingConfig) -> Result<Option<WanderingSet>> {
    if cfg.horizon < 2 {
        return Err(invalid("horizon", "need at least two translates"));
    }
    let d = system.dim();
    let mut dirs = Vec::new();
    for axis in 0..d {
        dirs.push(LatticeIndex::unit(d, axis));
        dirs.push(-&LatticeIndex::unit(d, axis));
    }
    if d > 1 {
        dirs.push(LatticeIndex::splat(d, 1));
        dirs.push(LatticeIndex::splat(d, -1));
    }
    for s in evenly_spaced(system.n_states(), cfg.max_seeds) {
        let w = [s];
        let mass = system.set_measure(&w);
        if !(mass > 0.0) {
            continue;
        }
        for v in &dirs {
            let mut seq = vec![LatticeIndex::zero(d)];
            let mut worst: f64 = 0.0;
            let mut k = 0;
            'extend: while seq.len() < cfg.horizon {
                k = next_k(k);
                if k > cfg.max_step {
                    break;
                }
                let cand = v.scale(k);
                let mut cand_worst: f64 = 0.0;
                for prev in &seq {
                    match system.translate_overlap(&w, prev, &cand) {
                        Ok(o) if o <= cfg.tol * mass => cand_worst = cand_worst.max(o / mass),
                        Ok(_) => continue 'extend,
                        Err(FieldError::TruncationEscape { .. }) => break 'extend,
                        Err(e) => return Err(e),
                    }
                }
                worst = worst.max(cand_worst);
                seq.push(cand);
            }
            if seq.len() >= cfg.horizon {
                return Ok(Some(WanderingSet {
                    states: w.to_vec(),
                    labels: vec![system.label(s)],
                    sequence: seq,
                    max_relative_overlap: worst,
                }));
            }
        }
    }
    Ok(None)
}
