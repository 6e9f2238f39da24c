//! Reference families with declared ground truth, and the named built-in
//! zoo used by the CLI and the acceptance suite.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{default_t0, make_local_time_field, make_markov_field, markov_test_indices, series_for, LocalTimeModel, LocalTimeOptions, MarkovPathModel};
use crate::classification::{
    classify, cube, default_sequences, default_weights, CandidateSequence, ClassificationReport, DualSystem, GlobalVerdict, SeriesConfig,
};
use crate::error::{invalid, FieldError, Result};
use crate::lattice::LatticeIndex;
use crate::markov::MarkovChainSpec;
use crate::measure_space::{CyclicAction, DisjointUnionAction, IdentityAction, NonsingularAction, StateSpace, TranslationAction};
use crate::spectral::{FieldKind, SpectralFamily};

/// Known long-run behaviour of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub class: GlobalVerdict,
    pub ergodic: bool,
    pub weakly_mixing: bool,
    pub mixing: bool,
}

const NON_ERGODIC_POSITIVE: GroundTruth = GroundTruth { class: GlobalVerdict::Positive, ergodic: false, weakly_mixing: false, mixing: false };
const MIXING_NULL: GroundTruth = GroundTruth { class: GlobalVerdict::Null, ergodic: true, weakly_mixing: true, mixing: true };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    CyclicPositive,
    ZshiftNullMoving,
    IdentityNonergodic,
    ProductSplit,
}

impl ReferenceKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "cyclic_positive" => Ok(ReferenceKind::CyclicPositive),
            "zshift_null_moving" => Ok(ReferenceKind::ZshiftNullMoving),
            "identity_nonergodic" => Ok(ReferenceKind::IdentityNonergodic),
            "product_split" => Ok(ReferenceKind::ProductSplit),
            other => Err(FieldError::UnknownExample(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceParams {
    pub alpha: f64,
    pub kind: FieldKind,
    /// Period of the cyclic shift.
    pub m: usize,
    /// Width of the moving indicator.
    pub width: usize,
    /// Truncation radius of the Z-shift.
    pub radius: i64,
    /// Number of states of the identity action.
    pub states: usize,
}

impl Default for ReferenceParams {
    fn default() -> Self {
        ReferenceParams { alpha: 1.0, kind: FieldKind::MaxStable, m: 4, width: 1, radius: 20, states: 3 }
    }
}

fn indicator(n: usize, on: impl Fn(usize) -> bool) -> Vec<f64> {
    (0..n).map(|s| if on(s) { 1.0 } else { 0.0 }).collect()
}

pub fn make_reference(kind: ReferenceKind, p: &ReferenceParams) -> Result<(SpectralFamily, GroundTruth)> {
    match kind {
        ReferenceKind::CyclicPositive => {
            if p.m == 0 {
                return Err(invalid("m", "period must be positive"));
            }
            let action = Arc::new(CyclicAction::new(vec![p.m])?);
            let f0 = indicator(p.m, |s| s == 0);
            let fam = SpectralFamily::from_action(p.alpha, p.kind, action.space(), action, None, f0)?;
            Ok((fam, NON_ERGODIC_POSITIVE))
        }
        ReferenceKind::ZshiftNullMoving => {
            if p.width == 0 || p.width as i64 > p.radius + 1 {
                return Err(invalid("width", "need 1 ≤ width ≤ radius + 1"));
            }
            let (action, space) = TranslationAction::new(vec![p.radius], |_| 1.0)?;
            let r = p.radius as usize;
            let f0 = indicator(space.len(), |s| s >= r && s < r + p.width);
            let space = space.with_truncation(format!("Z truncated to [-{0}, {0}]", p.radius), false);
            let fam = SpectralFamily::from_action(p.alpha, p.kind, space, Arc::new(action), None, f0)?;
            Ok((fam, MIXING_NULL))
        }
        ReferenceKind::IdentityNonergodic => {
            if p.states == 0 {
                return Err(invalid("states", "need at least one state"));
            }
            let f0 = (0..p.states).map(|s| 0.5 + s as f64 * 0.75).collect();
            let action = Arc::new(IdentityAction { d: 1, n: p.states });
            let fam = SpectralFamily::from_action(p.alpha, p.kind, StateSpace::uniform(p.states), action, None, f0)?;
            Ok((fam, NON_ERGODIC_POSITIVE))
        }
        ReferenceKind::ProductSplit => {
            let cyc = Arc::new(CyclicAction::new(vec![p.m])?);
            let (shift, zspace) = TranslationAction::new(vec![p.radius], |_| 1.0)?;
            let union = DisjointUnionAction::new(vec![cyc.clone() as Arc<dyn NonsingularAction>, Arc::new(shift)])?;
            let mut labels: Vec<String> = cyc.space().labels().iter().map(|l| format!("cyc:{l}")).collect();
            labels.extend(zspace.labels().iter().map(|l| format!("z:{l}")));
            let space = StateSpace::new(labels, vec![1.0; p.m + zspace.len()])?
                .with_truncation(format!("Z part truncated to [-{0}, {0}]", p.radius), false);
            let zero_z = p.m + p.radius as usize;
            let f0 = indicator(space.len(), |s| s == 0 || s == zero_z);
            let fam = SpectralFamily::from_action(p.alpha, p.kind, space, Arc::new(union), None, f0)?;
            Ok((fam, GroundTruth { class: GlobalVerdict::Mixed, ergodic: false, weakly_mixing: false, mixing: false }))
        }
    }
}

/// A named family with its default classification setup.
#[derive(Debug, Clone)]
pub struct BuiltinExample {
    pub name: &'static str,
    pub description: &'static str,
    pub family: SpectralFamily,
    pub truth: GroundTruth,
    pub t0: Vec<LatticeIndex>,
    pub a: Vec<f64>,
    pub powers: Vec<u32>,
    pub series: SeriesConfig,
    pub markov: Option<Arc<MarkovPathModel>>,
    pub local_time: Option<Arc<LocalTimeModel>>,
    /// A simulation window half-width that fits the model.
    pub sim_t: u32,
}

impl BuiltinExample {
    pub fn sequences(&self) -> Result<Vec<CandidateSequence>> {
        default_sequences(self.family.dim(), &self.powers)
    }

    pub fn dual_system(&self) -> Result<Box<dyn DualSystem + '_>> {
        self.family.model.dual_system(self.family.alpha, &self.t0, &self.a)
    }

    pub fn classify(&self) -> Result<ClassificationReport> {
        classify(&self.family, &self.t0, &self.a, &self.sequences()?, &self.series)
    }
}

const NAMES: [(&str, &str); 8] = [
    ("cyclic_positive", "shift on Z/4 with f0 = 1{0}: positive, not ergodic"),
    ("zshift_null_moving", "moving indicator under the shift on Z (truncated to [-20, 20]): null, mixing"),
    ("identity_nonergodic", "identity action on three states: positive, not ergodic"),
    ("product_split", "disjoint union of Z/4 and the truncated Z-shift: positive and null parts"),
    ("markov_null", "path shift of the lazy random walk (null recurrent): mixing"),
    ("markov_positive", "path shift of a two-state lazy chain (positive recurrent): not ergodic"),
    ("markov_null_positive", "d = 2 path shift, (null, positive) chains: weakly mixing but not mixing"),
    ("local_time", "random-walk local-time increments (d = 1): null"),
];

pub fn builtin_names() -> Vec<(&'static str, &'static str)> {
    NAMES.to_vec()
}

fn markov_example(
    name: &'static str,
    description: &'static str,
    chains: Vec<MarkovChainSpec>,
    truth: GroundTruth,
    alpha: f64,
    kind: FieldKind,
) -> Result<BuiltinExample> {
    let t0 = markov_test_indices(&chains);
    let a = default_weights(&t0);
    let (family, model) = make_markov_field(chains, alpha, kind, 64)?;
    Ok(BuiltinExample {
        name,
        description,
        family,
        truth,
        t0,
        a,
        powers: vec![1, 4],
        series: series_for(64),
        markov: Some(model),
        local_time: None,
        sim_t: 16,
    })
}

/// The built-in family `name` with the given kind and α.
pub fn builtin(name: &str, kind: FieldKind, alpha: f64) -> Result<BuiltinExample> {
    let description = NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| *d)
        .ok_or_else(|| FieldError::UnknownExample(name.to_string()))?;
    let name: &'static str = NAMES.iter().find(|(n, _)| *n == name).unwrap().0;
    let params = ReferenceParams { alpha, kind, ..Default::default() };
    let from_reference = |rk: ReferenceKind, r: i64, powers: Vec<u32>, sim_t: u32| -> Result<BuiltinExample> {
        let (family, truth) = make_reference(rk, &params)?;
        let (t0, a) = default_t0(1, r);
        Ok(BuiltinExample {
            name,
            description,
            family,
            truth,
            t0,
            a,
            powers,
            series: series_for(64),
            markov: None,
            local_time: None,
            sim_t,
        })
    };
    match name {
        "cyclic_positive" => from_reference(ReferenceKind::CyclicPositive, 2, vec![1], 16),
        "zshift_null_moving" => from_reference(ReferenceKind::ZshiftNullMoving, 20, vec![1], 16),
        "identity_nonergodic" => from_reference(ReferenceKind::IdentityNonergodic, 0, vec![1], 16),
        "product_split" => from_reference(ReferenceKind::ProductSplit, 20, vec![1], 16),
        "markov_null" => markov_example(name, description, vec![MarkovChainSpec::lazy_walk(400)?], MIXING_NULL, alpha, kind),
        "markov_positive" => markov_example(name, description, vec![MarkovChainSpec::two_state(0.25)?], NON_ERGODIC_POSITIVE, alpha, kind),
        "markov_null_positive" => markov_example(
            name,
            description,
            vec![MarkovChainSpec::lazy_walk(400)?, MarkovChainSpec::two_state(0.25)?],
            GroundTruth { class: GlobalVerdict::Null, ergodic: true, weakly_mixing: true, mixing: false },
            alpha,
            kind,
        ),
        "local_time" => {
            let (family, model) = make_local_time_field(1, alpha, kind, LocalTimeOptions::default())?;
            let t0 = cube(1, 32);
            let a = default_weights(&t0);
            Ok(BuiltinExample {
                name,
                description,
                family,
                truth: MIXING_NULL,
                t0,
                a,
                powers: vec![4],
                series: series_for(16),
                markov: None,
                local_time: Some(model),
                sim_t: 16,
            })
        }
        _ => unreachable!("name validated above"),
    }
}
