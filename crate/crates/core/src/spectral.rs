//! Spectral families f_t(s) = c_t(s)·w(t, s)^{1/α}·f_0(φ_t(s)) and the
//! functionals of them that the rest of the crate needs: scales of
//! (max-)linear combinations, support checks and the positive/null split.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classification::{build_test_function, ClassificationReport, DualSystem, PointMapDual, StateVerdict};
use crate::error::{invalid, FieldError, Result};
use crate::lattice::{LatticeIndex, Window};
use crate::measure_space::{NonsingularAction, RestrictedAction, SignCocycle, StateSpace, TrivialCocycle};
use crate::simulate::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    SumStable,
    MaxStable,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::SumStable => "sum-stable",
            FieldKind::MaxStable => "max-stable",
        })
    }
}

/// Value of ∫ F dμ together with the number of states where some f_τ could
/// not be evaluated because the point map left the truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub escapes: usize,
}

/// Models whose spectral functions can be evaluated state by state.
pub trait StateKernel: Send + Sync {
    fn space(&self) -> &StateSpace;
    /// f_t(s).
    fn eval(&self, t: &LatticeIndex, s: usize) -> Result<f64>;
}

/// Draws atoms S ~ μ/m for the Poisson/series representations; each atom is
/// returned as the sparse list of (window position, f_t(S)) with f_t(S) ≠ 0.
pub trait AtomSource: Send + Sync {
    /// m, the total mass atoms are drawn from.
    fn mass(&self) -> f64;
    /// sup over atoms and window positions of |f_t(S)|.
    fn max_value(&self) -> f64;
    fn draw(&self, rng: &mut StreamRng, out: &mut Vec<(usize, f64)>);
    /// States whose spectral values hit the truncation boundary.
    fn escapes(&self) -> usize {
        0
    }
    /// Which of the `n` window positions some atom reaches.
    fn covered(&self, n: usize) -> Vec<bool> {
        vec![true; n]
    }
    /// max_t E[f_t(S)^2] for S ~ μ/m over the window positions.
    fn max_second_moment(&self, _n: usize) -> f64 {
        self.max_value().powi(2)
    }
    fn supports_gaussian_tail(&self) -> bool {
        false
    }
    /// Adds sd·Σ_s (μ(s)/m)^{1/2} Z_s f_t(s) with iid standard normal Z_s.
    fn add_gaussian_tail(&self, _rng: &mut StreamRng, _sd: f64, _out: &mut [f64]) {}
}

/// Backing of a [`SpectralFamily`].
pub trait SpectralModel: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// μ(S), or `None` when infinite.
    fn total_mass(&self) -> Option<f64>;

    /// ∫ F(f_{τ_1}(s), …, f_{τ_k}(s)) μ(ds) for F with F(0, …, 0) = 0.
    fn integrate(&self, indices: &[LatticeIndex], func: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Integral>;

    fn state_kernel(&self) -> Option<&dyn StateKernel> {
        None
    }

    fn atom_source(&self, window: &Window) -> Result<Box<dyn AtomSource>>;

    /// The dual system behind the series test for test function
    /// g = Σ_{τ∈T0} a_τ |f_τ|^α.
    fn dual_system(&self, alpha: f64, t0: &[LatticeIndex], a: &[f64]) -> Result<Box<dyn DualSystem + '_>>;

    fn restrict(&self, _states: &[usize]) -> Result<Arc<dyn SpectralModel>> {
        Err(FieldError::Unsupported("restriction to a subset of states".into()))
    }

    /// For indicator families on product path spaces: the axis-`axis` factor
    /// of ‖f_t ∧ f_0‖^α = Π_l factor_l(t_l).
    fn lag_overlap_factor(&self, _axis: usize, _lag: i64) -> Option<f64> {
        None
    }

    /// True when every f_t takes values in {0, 1}.
    fn is_indicator(&self) -> bool {
        false
    }

    /// Largest |t_l| the model can evaluate without escaping, if bounded.
    fn max_lag(&self) -> Option<u64> {
        None
    }

    /// The point-map action, when the family is in action form.
    fn action(&self) -> Option<Arc<dyn NonsingularAction>> {
        None
    }
}

/// A stationary SαS or α-Fréchet family.
#[derive(Debug, Clone)]
pub struct SpectralFamily {
    pub alpha: f64,
    pub kind: FieldKind,
    pub model: Arc<dyn SpectralModel>,
}

pub(crate) fn check_alpha(alpha: f64, kind: FieldKind) -> Result<()> {
    match kind {
        FieldKind::SumStable if !(alpha > 0.0 && alpha < 2.0) => {
            Err(invalid("alpha", format!("sum-stable fields need 0 < alpha < 2, got {alpha}")))
        }
        FieldKind::MaxStable if !(alpha > 0.0 && alpha.is_finite()) => {
            Err(invalid("alpha", format!("max-stable fields need alpha > 0, got {alpha}")))
        }
        _ => Ok(()),
    }
}

impl SpectralFamily {
    pub fn new(alpha: f64, kind: FieldKind, model: Arc<dyn SpectralModel>) -> Result<Self> {
        check_alpha(alpha, kind)?;
        Ok(SpectralFamily { alpha, kind, model })
    }

    /// Family in action form on a finite space.
    pub fn from_action(
        alpha: f64,
        kind: FieldKind,
        space: StateSpace,
        action: Arc<dyn NonsingularAction>,
        cocycle: Option<Arc<dyn SignCocycle>>,
        f0: Vec<f64>,
    ) -> Result<Self> {
        check_alpha(alpha, kind)?;
        let model = ActionKernel::new(alpha, kind, space, action, cocycle, f0)?;
        Ok(SpectralFamily { alpha, kind, model: Arc::new(model) })
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// σ_0^α = ∫ |f_0|^α dμ.
    pub fn base_scale_pow(&self) -> Result<f64> {
        let a = self.alpha;
        Ok(self
            .model
            .integrate(&[LatticeIndex::zero(self.dim())], &move |v: &[f64]| v[0].abs().powf(a))?
            .value)
    }
}

/// f_t = c_t·w(t,·)^{1/α}·f_0∘φ_t on a finite space.
#[derive(Debug, Clone)]
pub struct ActionKernel {
    pub alpha: f64,
    pub kind: FieldKind,
    pub space: StateSpace,
    pub action: Arc<dyn NonsingularAction>,
    pub cocycle: Arc<dyn SignCocycle>,
    pub f0: Vec<f64>,
    trivial_cocycle: bool,
}

impl ActionKernel {
    pub fn new(
        alpha: f64,
        kind: FieldKind,
        space: StateSpace,
        action: Arc<dyn NonsingularAction>,
        cocycle: Option<Arc<dyn SignCocycle>>,
        f0: Vec<f64>,
    ) -> Result<Self> {
        if action.n_states() != space.len() {
            return Err(FieldError::InvalidSpace(format!(
                "action acts on {} states, space has {}",
                action.n_states(),
                space.len()
            )));
        }
        if f0.len() != space.len() {
            return Err(invalid("f0", format!("expected {} values, got {}", space.len(), f0.len())));
        }
        if f0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("f0", "values must be finite"));
        }
        if kind == FieldKind::MaxStable {
            if f0.iter().any(|&v| v < 0.0) {
                return Err(invalid("f0", "max-stable spectral functions must be nonnegative"));
            }
            if cocycle.is_some() {
                return Err(invalid("cocycle", "max-stable families carry no sign cocycle"));
            }
        }
        let trivial_cocycle = cocycle.is_none();
        Ok(ActionKernel {
            alpha,
            kind,
            space,
            action,
            cocycle: cocycle.unwrap_or_else(|| Arc::new(TrivialCocycle)),
            f0,
            trivial_cocycle,
        })
    }
}

impl StateKernel for ActionKernel {
    fn space(&self) -> &StateSpace {
        &self.space
    }

    fn eval(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        let img = self.action.apply(t, s)?;
        let f = self.f0[img];
        if f == 0.0 {
            return Ok(0.0);
        }
        let w = self.action.rn_weight(t, s)?;
        let c = if self.trivial_cocycle { 1.0 } else { self.cocycle.value(t, s)? };
        Ok(c * w.powf(1.0 / self.alpha) * f)
    }
}

/// Sums F over states in parallel with a fixed (state-order) reduction.
pub(crate) fn integrate_states(
    kernel: &dyn StateKernel,
    indices: &[LatticeIndex],
    func: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<Integral> {
    let space = kernel.space();
    let per_state: Vec<Result<(f64, bool)>> = (0..space.len())
        .into_par_iter()
        .with_min_len(256)
        .map(|s| {
            let mut vals = Vec::with_capacity(indices.len());
            let mut escaped = false;
            for t in indices {
                match kernel.eval(t, s) {
                    Ok(v) => vals.push(v),
                    Err(FieldError::TruncationEscape { .. }) => {
                        vals.push(0.0);
                        escaped = true;
                    }
                    Err(e) => return Err(e),
                }
            }
            if vals.iter().all(|&v| v == 0.0) {
                return Ok((0.0, escaped));
            }
            Ok((func(&vals) * space.weight(s), escaped))
        })
        .collect();
    let mut value = 0.0;
    let mut escapes = 0;
    for r in per_state {
        let (v, e) = r?;
        value += v;
        escapes += e as usize;
    }
    Ok(Integral { value, escapes })
}

/// Atom table built from a state kernel over a window.
pub(crate) struct TableAtoms {
    rows: Vec<Vec<(usize, f64)>>,
    weights: Vec<f64>,
    alias: Option<WeightedAliasIndex<f64>>,
    mass: f64,
    max_value: f64,
    escapes: usize,
}

impl TableAtoms {
    pub(crate) fn build(kernel: &dyn StateKernel, window: &Window) -> Result<Self> {
        let space = kernel.space();
        let idx: Vec<LatticeIndex> = window.indices().collect();
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        let mut escapes = 0;
        for s in 0..space.len() {
            let mut row = Vec::new();
            let mut escaped = false;
            for (p, t) in idx.iter().enumerate() {
                match kernel.eval(t, s) {
                    Ok(v) if v != 0.0 => row.push((p, v)),
                    Ok(_) => {}
                    Err(FieldError::TruncationEscape { .. }) => escaped = true,
                    Err(e) => return Err(e),
                }
            }
            escapes += escaped as usize;
            if !row.is_empty() {
                weights.push(space.weight(s));
                rows.push(row);
            }
        }
        TableAtoms::from_rows(rows, weights, escapes)
    }

    pub(crate) fn from_rows(rows: Vec<Vec<(usize, f64)>>, weights: Vec<f64>, escapes: usize) -> Result<Self> {
        let mass: f64 = weights.iter().sum();
        let max_value = rows.iter().flatten().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        let alias = if weights.is_empty() {
            None
        } else {
            Some(WeightedAliasIndex::new(weights.clone()).map_err(|e| invalid("weights", e.to_string()))?)
        };
        Ok(TableAtoms { rows, weights, alias, mass, max_value, escapes })
    }
}

impl AtomSource for TableAtoms {
    fn mass(&self) -> f64 {
        self.mass
    }
    fn max_value(&self) -> f64 {
        self.max_value
    }
    fn draw(&self, rng: &mut StreamRng, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if let Some(alias) = &self.alias {
            out.extend_from_slice(&self.rows[alias.sample(rng)]);
        }
    }
    fn escapes(&self) -> usize {
        self.escapes
    }
    fn covered(&self, n: usize) -> Vec<bool> {
        let mut c = vec![false; n];
        for &(p, _) in self.rows.iter().flatten() {
            c[p] = true;
        }
        c
    }
    fn max_second_moment(&self, n: usize) -> f64 {
        let mut m2 = vec![0.0; n];
        for (row, w) in self.rows.iter().zip(&self.weights) {
            for &(p, v) in row {
                m2[p] += w / self.mass * v * v;
            }
        }
        m2.into_iter().fold(0.0, f64::max)
    }
    fn supports_gaussian_tail(&self) -> bool {
        true
    }
    fn add_gaussian_tail(&self, rng: &mut StreamRng, sd: f64, out: &mut [f64]) {
        for (row, w) in self.rows.iter().zip(&self.weights) {
            let z: f64 = rng.sample(StandardNormal);
            let a = sd * (w / self.mass).sqrt() * z;
            for &(p, v) in row {
                out[p] += a * v;
            }
        }
    }
}

impl SpectralModel for ActionKernel {
    fn dim(&self) -> usize {
        self.action.dim()
    }

    fn total_mass(&self) -> Option<f64> {
        Some(self.space.total_mass())
    }

    fn integrate(&self, indices: &[LatticeIndex], func: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Integral> {
        for t in indices {
            crate::measure_space::check_dim(self.dim(), t)?;
        }
        integrate_states(self, indices, func)
    }

    fn state_kernel(&self) -> Option<&dyn StateKernel> {
        Some(self)
    }

    fn atom_source(&self, window: &Window) -> Result<Box<dyn AtomSource>> {
        Ok(Box::new(TableAtoms::build(self, window)?))
    }

    fn dual_system(&self, alpha: f64, t0: &[LatticeIndex], a: &[f64]) -> Result<Box<dyn DualSystem + '_>> {
        let g = build_test_function(self, alpha, t0, a)?;
        Ok(Box::new(PointMapDual::new(self.action.clone(), &self.space, g.values)?))
    }

    fn restrict(&self, states: &[usize]) -> Result<Arc<dyn SpectralModel>> {
        let action: Arc<dyn NonsingularAction> = Arc::new(RestrictedAction::new(self.action.clone(), states.to_vec()));
        Ok(Arc::new(ActionKernel {
            alpha: self.alpha,
            kind: self.kind,
            space: self.space.restrict(states),
            action,
            cocycle: Arc::new(RestrictedCocycle { parent: self.cocycle.clone(), states: states.to_vec() }),
            f0: states.iter().map(|&s| self.f0[s]).collect(),
            trivial_cocycle: self.trivial_cocycle,
        }))
    }

    fn action(&self) -> Option<Arc<dyn NonsingularAction>> {
        Some(self.action.clone())
    }
}

#[derive(Debug)]
struct RestrictedCocycle {
    parent: Arc<dyn SignCocycle>,
    states: Vec<usize>,
}

impl SignCocycle for RestrictedCocycle {
    fn value(&self, t: &LatticeIndex, s: usize) -> Result<f64> {
        self.parent.value(t, self.states[s])
    }
}

/// The family on the empty space (a vanishing component).
#[derive(Debug, Clone)]
pub struct EmptyModel {
    pub d: usize,
}

struct NoAtoms;

impl AtomSource for NoAtoms {
    fn mass(&self) -> f64 {
        0.0
    }
    fn max_value(&self) -> f64 {
        0.0
    }
    fn draw(&self, _rng: &mut StreamRng, out: &mut Vec<(usize, f64)>) {
        out.clear();
    }
}

impl SpectralModel for EmptyModel {
    fn dim(&self) -> usize {
        self.d
    }
    fn total_mass(&self) -> Option<f64> {
        Some(0.0)
    }
    fn integrate(&self, _indices: &[LatticeIndex], _func: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Integral> {
        Ok(Integral { value: 0.0, escapes: 0 })
    }
    fn atom_source(&self, _window: &Window) -> Result<Box<dyn AtomSource>> {
        Ok(Box::new(NoAtoms))
    }
    fn dual_system(&self, _alpha: f64, _t0: &[LatticeIndex], _a: &[f64]) -> Result<Box<dyn DualSystem + '_>> {
        Err(FieldError::Unsupported("series test on an empty family".into()))
    }
}

/// A max-linear combination ⋁_j a_j X_{τ_j} (coefficients > 0) or, for
/// sum-stable families, a linear combination Σ_j β_j X_{τ_j}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxLinearCombination {
    pub terms: Vec<(f64, LatticeIndex)>,
}

impl MaxLinearCombination {
    pub fn new(terms: Vec<(f64, LatticeIndex)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("combo", "empty combination"));
        }
        let d = terms[0].1.dim();
        if terms.iter().any(|(c, t)| !c.is_finite() || t.dim() != d) {
            return Err(invalid("combo", "finite coefficients and a common dimension required"));
        }
        Ok(MaxLinearCombination { terms })
    }

    pub fn single(index: LatticeIndex) -> Self {
        MaxLinearCombination { terms: vec![(1.0, index)] }
    }

    pub fn indices(&self) -> Vec<LatticeIndex> {
        self.terms.iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|(c, _)| *c).collect()
    }

    pub fn shifted(&self, h: &LatticeIndex) -> Self {
        MaxLinearCombination { terms: self.terms.iter().map(|(c, t)| (*c, t + h)).collect() }
    }

    fn validate_for(&self, kind: FieldKind, d: usize) -> Result<()> {
        if self.terms.iter().any(|(_, t)| t.dim() != d) {
            return Err(FieldError::DimensionMismatch { expected: d, got: self.terms[0].1.dim() });
        }
        if kind == FieldKind::MaxStable && self.terms.iter().any(|(c, _)| *c <= 0.0) {
            return Err(invalid("combo", "max-linear coefficients must be strictly positive"));
        }
        Ok(())
    }
}

/// f_t(s) for state-based families.
pub fn eval_spectral(family: &SpectralFamily, t: &LatticeIndex, s: usize) -> Result<f64> {
    crate::measure_space::check_dim(family.dim(), t)?;
    let kernel = family
        .model
        .state_kernel()
        .ok_or_else(|| FieldError::Unsupported("pointwise evaluation".into()))?;
    if s >= kernel.space().len() {
        return Err(invalid("state", format!("state {s} outside the space")));
    }
    kernel.eval(t, s)
}

/// σ^α of the combination: ∫ (⋁_j a_j f_{τ_j})^α dμ for max-stable families,
/// ∫ |Σ_j β_j f_{τ_j}|^α dμ for sum-stable ones.
pub fn scale_pow(family: &SpectralFamily, combo: &MaxLinearCombination) -> Result<Integral> {
    combo.validate_for(family.kind, family.dim())?;
    let coef = combo.coefficients();
    let alpha = family.alpha;
    match family.kind {
        FieldKind::MaxStable => family.model.integrate(&combo.indices(), &move |v: &[f64]| {
            v.iter().zip(&coef).map(|(x, a)| a * x).fold(0.0, f64::max).powf(alpha)
        }),
        FieldKind::SumStable => family.model.integrate(&combo.indices(), &move |v: &[f64]| {
            v.iter().zip(&coef).map(|(x, b)| b * x).sum::<f64>().abs().powf(alpha)
        }),
    }
}

/// The scale coefficient σ of the combination.
pub fn scale(family: &SpectralFamily, combo: &MaxLinearCombination) -> Result<f64> {
    Ok(scale_pow(family, combo)?.value.powf(1.0 / family.alpha))
}

/// Whether every state carries f_t(s) ≠ 0 for some t in `window`; returns
/// the labels of uncovered states.
pub fn check_full_support(family: &SpectralFamily, window: &[LatticeIndex]) -> Result<(bool, Vec<String>)> {
    if window.is_empty() {
        return Err(invalid("window", "empty index set"));
    }
    let kernel = family
        .model
        .state_kernel()
        .ok_or_else(|| FieldError::Unsupported("support check needs a state-based family".into()))?;
    let space = kernel.space();
    let mut uncovered = Vec::new();
    for s in 0..space.len() {
        let mut hit = false;
        for t in window {
            match kernel.eval(t, s) {
                Ok(v) if v != 0.0 => {
                    hit = true;
                    break;
                }
                Ok(_) | Err(FieldError::TruncationEscape { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        if !hit {
            uncovered.push(space.label(s).to_string());
        }
    }
    Ok((uncovered.is_empty(), uncovered))
}

/// Splits a family along the estimated positive/null decomposition:
/// returns (family on the positive part, family on the null part).
pub fn split_family(family: &SpectralFamily, report: &ClassificationReport) -> Result<(SpectralFamily, SpectralFamily)> {
    let inconclusive = report.per_state.iter().filter(|s| s.verdict == StateVerdict::Inconclusive).count();
    if inconclusive > 0 {
        return Err(FieldError::InconclusiveStates(inconclusive));
    }
    let empty = || SpectralFamily { alpha: family.alpha, kind: family.kind, model: Arc::new(EmptyModel { d: family.dim() }) };
    if report.null_part.is_empty() {
        return Ok((family.clone(), empty()));
    }
    if report.positive_part.is_empty() {
        return Ok((empty(), family.clone()));
    }
    let action = family
        .model
        .action()
        .ok_or_else(|| FieldError::Unsupported("splitting needs a family in action form".into()))?;
    let n = action.n_states();
    if report.per_state.len() != n {
        return Err(invalid("report", format!("report covers {} states, family has {n}", report.per_state.len())));
    }
    let pos: HashSet<usize> = report.positive_part.iter().copied().collect();
    for g in action.generators() {
        for dir in [g.clone(), -&g] {
            for s in 0..n {
                match action.apply(&dir, s) {
                    Ok(img) if pos.contains(&s) != pos.contains(&img) => {
                        return Err(FieldError::InvarianceViolation(format!(
                            "φ_{dir} maps state {} across the positive/null boundary",
                            action.state_name(s)
                        )))
                    }
                    Ok(_) | Err(FieldError::TruncationEscape { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let part = |states: &[usize]| -> Result<SpectralFamily> {
        Ok(SpectralFamily { alpha: family.alpha, kind: family.kind, model: family.model.restrict(states)? })
    };
    Ok((part(&report.positive_part)?, part(&report.null_part)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::{IdentityAction, TranslationAction};

    fn idx(c: i64) -> LatticeIndex {
        LatticeIndex::new(vec![c])
    }

    fn moving(alpha: f64, kind: FieldKind, r: i64) -> SpectralFamily {
        let (action, space) = TranslationAction::new(vec![r], |_| 1.0).unwrap();
        let f0 = (0..space.len()).map(|s| if s as i64 == r { 1.0 } else { 0.0 }).collect();
        SpectralFamily::from_action(alpha, kind, space, Arc::new(action), None, f0).unwrap()
    }

    #[test]
    fn moving_family_is_a_moving_indicator() {
        let fam = moving(1.0, FieldKind::MaxStable, 5);
        for t in -3..=3 {
            for s in 3..8usize {
                let expected = if s as i64 - 5 == -t { 1.0 } else { 0.0 };
                assert_eq!(eval_spectral(&fam, &idx(t), s).unwrap(), expected);
            }
        }
    }

    #[test]
    fn geometric_measure_spectral_value() {
        let (action, space) = TranslationAction::new(vec![4], |k| 0.5f64.powi(k[0].abs() as i32)).unwrap();
        let f0 = (0..9).map(|s| if s == 4 { 1.0 } else { 0.0 }).collect();
        let fam = SpectralFamily::from_action(1.0, FieldKind::SumStable, space, Arc::new(action), None, f0).unwrap();
        assert!((eval_spectral(&fam, &idx(1), 3).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn escape_is_reported() {
        let fam = moving(1.0, FieldKind::MaxStable, 2);
        assert!(matches!(eval_spectral(&fam, &idx(3), 4), Err(FieldError::TruncationEscape { .. })));
    }

    #[test]
    fn scale_examples() {
        let fam = moving(1.0, FieldKind::MaxStable, 10);
        assert!((scale(&fam, &MaxLinearCombination::single(idx(0))).unwrap() - 1.0).abs() < 1e-15);
        let fam = moving(1.5, FieldKind::MaxStable, 10);
        let two = MaxLinearCombination::new(vec![(1.0, idx(0)), (1.0, idx(1))]).unwrap();
        assert!((scale_pow(&fam, &two).unwrap().value - 2.0).abs() < 1e-15);
        assert!((scale(&fam, &two).unwrap() - 2f64.powf(1.0 / 1.5)).abs() < 1e-14);
        let sum = moving(1.2, FieldKind::SumStable, 10);
        let cancel = MaxLinearCombination::new(vec![(1.0, idx(0)), (-1.0, idx(0))]).unwrap();
        assert_eq!(scale(&sum, &cancel).unwrap(), 0.0);
        assert!(scale(&fam, &cancel).is_err());
    }

    #[test]
    fn support_checks() {
        let fam = moving(1.0, FieldKind::MaxStable, 3);
        let all: Vec<_> = (-3..=3).map(idx).collect();
        assert_eq!(check_full_support(&fam, &all).unwrap(), (true, vec![]));
        let (ok, missing) = check_full_support(&fam, &[idx(0)]).unwrap();
        assert!(!ok);
        assert_eq!(missing.len(), 6);
        let cst = SpectralFamily::from_action(
            1.0,
            FieldKind::MaxStable,
            StateSpace::uniform(3),
            Arc::new(IdentityAction { d: 1, n: 3 }),
            None,
            vec![1.0, 2.0, 0.5],
        )
        .unwrap();
        assert!(check_full_support(&cst, &[idx(0)]).unwrap().0);
    }

    #[test]
    fn max_stable_rejects_negative_or_signed() {
        let (action, space) = TranslationAction::new(vec![1], |_| 1.0).unwrap();
        let r = SpectralFamily::from_action(1.0, FieldKind::MaxStable, space.clone(), Arc::new(action), None, vec![0.0, -1.0, 0.0]);
        assert!(r.is_err());
        let (action, _) = TranslationAction::new(vec![1], |_| 1.0).unwrap();
        assert!(SpectralFamily::from_action(2.0, FieldKind::SumStable, space, Arc::new(action), None, vec![0.0, 1.0, 0.0]).is_err());
    }
}
