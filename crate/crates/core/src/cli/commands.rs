//! The pipelines behind each command.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{DiagnoseConfig, Expectation, ExperimentConfig, FamilySource};
use super::CliError;
use crate::classification::{
    classify, cube, default_sequences, default_weights, find_weakly_wandering, CandidateSequence, WanderingConfig,
};
use crate::diagnostics::{
    association_check, default_ergodicity_combos, default_ladder, empirical_cesaro, family_ladder, gross_mixing, gross_weak_mixing, ladder,
    max_ergodicity, max_mixing, CesaroMode, DiagnosticSeries, Interval, RectEvent, Trend,
};
use crate::examples::{builtin, make_reference, GroundTruth, ReferenceKind, ReferenceParams};
use crate::lattice::{LatticeIndex, Window};
use crate::measure_space::{StateSpace, TableAction};
use crate::simulate::{simulate_max_stable_with, simulate_sum_stable_with, FieldSample, SimulationOptions};
use crate::spectral::{FieldKind, SpectralFamily};

/// A family together with its classification setup.
pub(crate) struct Experiment {
    pub label: String,
    pub family: SpectralFamily,
    pub truth: Option<GroundTruth>,
    pub t0: Vec<LatticeIndex>,
    pub a: Vec<f64>,
    pub powers: Vec<u32>,
    pub horizon: usize,
    pub sim_t: u32,
}

fn table_family(forward: &[Vec<i64>], weight: Option<&Vec<Vec<f64>>>, mu: Option<&Vec<f64>>, f0: &[f64], alpha: f64, kind: FieldKind) -> crate::Result<SpectralFamily> {
    let n = f0.len();
    let labels: Vec<String> = (0..n).map(|s| format!("s{s}")).collect();
    let maps = forward
        .iter()
        .map(|row| row.iter().map(|&j| if j < 0 { None } else { Some(j as usize) }).collect())
        .collect();
    let weight = weight.cloned().unwrap_or_else(|| vec![vec![1.0; n]; forward.len()]);
    let action = TableAction::new(maps, weight, labels.clone())?;
    let space = StateSpace::new(labels, mu.cloned().unwrap_or_else(|| vec![1.0; n]))?;
    SpectralFamily::from_action(alpha, kind, space, std::sync::Arc::new(action), None, f0.to_vec())
}

pub(crate) fn build_experiment(cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
    let (alpha, kind) = (cfg.family.alpha, cfg.family.kind);
    let mut exp = match &cfg.family.source {
        FamilySource::Example { name, params } => {
            let mut ex = builtin(name, kind, alpha)?;
            let overridden = params.m.is_some() || params.width.is_some() || params.radius.is_some() || params.states.is_some();
            if overridden {
                let rk = ReferenceKind::parse(name).map_err(|_| CliError::Usage(format!("example `{name}` takes no params")))?;
                let d = ReferenceParams::default();
                let p = ReferenceParams {
                    alpha,
                    kind,
                    m: params.m.unwrap_or(d.m),
                    width: params.width.unwrap_or(d.width),
                    radius: params.radius.unwrap_or(d.radius),
                    states: params.states.unwrap_or(d.states),
                };
                let (family, truth) = make_reference(rk, &p)?;
                ex.family = family;
                ex.truth = truth;
                if matches!(rk, ReferenceKind::ZshiftNullMoving | ReferenceKind::ProductSplit) {
                    ex.t0 = cube(1, p.radius);
                    ex.a = default_weights(&ex.t0);
                }
            }
            Experiment {
                label: name.clone(),
                family: ex.family,
                truth: Some(ex.truth),
                t0: ex.t0,
                a: ex.a,
                powers: ex.powers,
                horizon: ex.series.horizon,
                sim_t: ex.sim_t,
            }
        }
        FamilySource::Table { forward, weight, mu, f0 } => {
            let family = table_family(forward, weight.as_ref(), mu.as_ref(), f0, alpha, kind)?;
            let t0 = cube(family.dim(), 2);
            let a = default_weights(&t0);
            Experiment { label: "table".into(), family, truth: None, t0, a, powers: vec![1], horizon: 64, sim_t: 8 }
        }
    };
    if let Some(r) = cfg.classify.t0_radius {
        exp.t0 = cube(exp.family.dim(), r);
        exp.a = default_weights(&exp.t0);
    }
    if let Some(p) = &cfg.classify.powers {
        exp.powers = p.clone();
    }
    if let Some(h) = cfg.classify.horizon {
        exp.horizon = h;
    }
    Ok(exp)
}

/// Collects the files written by a command.
pub(crate) struct Outputs {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        self.write(name, &(serde_json::to_string_pretty(value).expect("json values serialize") + "\n"))
    }

    fn series(&mut self, s: &DiagnosticSeries) -> Result<(), CliError> {
        let stem: String = s.name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
        let stem = stem.trim_end_matches('_');
        self.write(&format!("series_{stem}.csv"), &s.to_csv())?;
        self.json(&format!("series_{stem}.json"), &s.summary())
    }
}

pub(crate) fn run_classify(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<i32, CliError> {
    let exp = build_experiment(cfg)?;
    let mut series = cfg.classify.series.clone();
    series.horizon = exp.horizon;
    let sequences = default_sequences(exp.family.dim(), &exp.powers)?;
    let report = classify(&exp.family, &exp.t0, &exp.a, &sequences, &series)?;
    out.write("classification.csv", &report.to_csv())?;
    let mut sums = String::from("state,sequence,n,partial_sum\n");
    for st in &report.per_state {
        if let Some(e) = st.best_sequence() {
            for (n, v) in e.partial_sums.iter().enumerate() {
                sums.push_str(&format!("{},{},{},{}\n", st.state, e.label, n + 1, v));
            }
        }
    }
    out.write("partial_sums.csv", &sums)?;
    let wandering = if cfg.classify.wandering {
        let system = exp.family.model.dual_system(exp.family.alpha, &exp.t0, &exp.a)?;
        Some(find_weakly_wandering(system.as_ref(), &WanderingConfig::default())?)
    } else {
        None
    };
    out.json(
        "classification.json",
        &json!({
            "family": exp.label,
            "summary": report.summary(),
            "ground_truth": exp.truth,
            "weakly_wandering": wandering.as_ref().map(|w| json!({"found": w.is_some(), "set": w})),
        }),
    )?;
    println!("{}: global verdict {}", exp.label, report.global_verdict);
    Ok(0)
}

fn simulate(family: &SpectralFamily, window: &Window, n_paths: usize, seed: u64, cfg: &ExperimentConfig) -> crate::Result<FieldSample> {
    let sim = cfg.simulate.as_ref();
    let opts = SimulationOptions { tail: sim.map(|s| s.tail).unwrap_or_default(), ..Default::default() };
    match family.kind {
        FieldKind::MaxStable => {
            let mode = sim.map(|s| s.truncation).unwrap_or(crate::simulate::Truncation::Adaptive);
            simulate_max_stable_with(family, window, n_paths, seed, mode, &opts)
        }
        FieldKind::SumStable => simulate_sum_stable_with(family, window, n_paths, seed, sim.map_or(2000, |s| s.m), &opts),
    }
}

pub(crate) fn run_simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<i32, CliError> {
    let sim = cfg.simulate.as_ref().ok_or_else(|| CliError::Usage("the simulate command needs a [simulate] section".into()))?;
    let exp = build_experiment(cfg)?;
    let window = Window::new(sim.t, exp.family.dim());
    let sample = simulate(&exp.family, &window, sim.n_paths, cfg.seed, cfg)?;
    out.write("sample.csv", &sample.to_csv())?;
    out.json("sample.json", &sample.metadata_json())?;
    println!("{}: simulated {} paths on B({})", exp.label, sim.n_paths, sim.t);
    Ok(0)
}

fn marginal_thresholds(family: &SpectralFamily, sample: &FieldSample, levels: &[f64]) -> crate::Result<Vec<f64>> {
    match family.kind {
        FieldKind::MaxStable => {
            let sp = family.base_scale_pow()?;
            Ok(levels.iter().map(|&p| (sp / -p.ln()).powf(1.0 / family.alpha)).collect())
        }
        FieldKind::SumStable => {
            let zero = LatticeIndex::zero(sample.window.d);
            let mut col = sample.column(sample.window.position(&zero).expect("origin lies in every window"));
            col.sort_by(|a, b| a.total_cmp(b));
            Ok(levels.iter().map(|&p| col[((p * col.len() as f64) as usize).min(col.len() - 1)]).collect())
        }
    }
}

fn empirical_battery(exp: &Experiment, cfg: &ExperimentConfig, dcfg: &DiagnoseConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let d = exp.family.dim();
    let t = dcfg.t.unwrap_or(exp.sim_t).max(2);
    let window = Window::new(t, d);
    let sample = simulate(&exp.family, &window, dcfg.n_paths, cfg.seed, cfg)?;
    let thresholds = marginal_thresholds(&exp.family, &sample, &dcfg.levels)?;
    let zero = LatticeIndex::zero(d);
    let e1 = LatticeIndex::unit(d, 0);
    let mut pairs = Vec::new();
    for &x in &thresholds {
        for &y in &thresholds {
            pairs.push((RectEvent::single(zero.clone(), x), RectEvent::single(e1.clone(), y)));
        }
    }
    let assoc = association_check(&sample, &pairs)?;
    let mut csv = String::from("x,y,covariance,se,degenerate\n");
    let mut min_z = f64::INFINITY;
    for ((a, b), e) in pairs.iter().zip(&assoc) {
        csv.push_str(&format!("{},{},{},{},{}\n", a.constraints[0].1, b.constraints[0].1, e.covariance, e.se, e.degenerate));
        if !e.degenerate && e.se > 0.0 {
            min_z = min_z.min(e.covariance / e.se);
        }
    }
    out.write("association.csv", &csv)?;
    let mid = thresholds[thresholds.len() / 2];
    let ev = RectEvent::single(zero, mid);
    let t_list = ladder(1, (t / 2).max(1));
    let erg = empirical_cesaro(&sample, &ev, &ev, &t_list, CesaroMode::Ergodic)?;
    let wm = empirical_cesaro(&sample, &ev, &ev, &t_list, CesaroMode::WeakMixing)?;
    out.series(&erg)?;
    out.series(&wm)?;
    Ok(json!({
        "window_T": t,
        "n_paths": dcfg.n_paths,
        "association_min_cov_over_se": if min_z.is_finite() { json!(min_z) } else { json!(null) },
        "association_holds": assoc.iter().all(|e| e.covariance >= -3.0 * e.se),
        "empirical_ergodic": erg.summary(),
        "empirical_weak_mixing": wm.summary(),
    }))
}

pub(crate) fn run_diagnose(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<i32, CliError> {
    let exp = build_experiment(cfg)?;
    let dcfg = &cfg.diagnose;
    let fam = &exp.family;
    let d = fam.dim();
    let t_list = dcfg.t_list.clone().unwrap_or_else(|| family_ladder(fam));
    let rays: Vec<CandidateSequence> = (0..d).map(|i| CandidateSequence::ray(LatticeIndex::unit(d, i), 1)).collect::<crate::Result<_>>()?;
    let k = Interval::new(dcfg.k.0, dcfg.k.1)?;
    let mut analytic = Vec::new();
    let primary = match fam.kind {
        FieldKind::MaxStable => {
            let combos = default_ergodicity_combos(d, cfg.seed);
            // combinations of several indices are averaged point by point
            let combo_ladder = dcfg.t_list.clone().unwrap_or_else(|| {
                let top = *default_ladder(d).last().unwrap();
                t_list.iter().copied().filter(|&t| t <= top).collect()
            });
            let mut first = None;
            for (i, g) in combos.iter().enumerate() {
                let ladder = if i == 0 { &t_list } else { &combo_ladder };
                let mut s = max_ergodicity(fam, g, ladder)?;
                if i > 0 {
                    s.name = format!("max_ergodicity[combo{i}]");
                }
                first.get_or_insert_with(|| s.clone());
                analytic.push(s);
            }
            analytic.extend(max_mixing(fam, &rays, dcfg.mixing_terms)?);
            first.expect("combos are nonempty")
        }
        FieldKind::SumStable => {
            let s = gross_weak_mixing(fam, k, dcfg.eps, &t_list)?;
            analytic.push(s.clone());
            for r in &rays {
                analytic.push(gross_mixing(fam, k, dcfg.eps, r, dcfg.mixing_terms)?);
            }
            s
        }
    };
    for s in &analytic {
        out.series(s)?;
    }
    let empirical = if fam.model.total_mass().is_some() { Some(empirical_battery(&exp, cfg, dcfg, out)?) } else { None };
    let mismatch = match (cfg.expectation, primary.verdict) {
        (Some(Expectation::Vanishes), Trend::Persists) | (Some(Expectation::Persists), Trend::Vanishes) => true,
        _ => false,
    };
    out.json(
        "diagnostics.json",
        &json!({
            "family": exp.label,
            "kind": fam.kind,
            "alpha": fam.alpha,
            "primary": primary.summary(),
            "analytic": analytic.iter().map(DiagnosticSeries::summary).collect::<Vec<_>>(),
            "empirical": empirical,
            "ground_truth": exp.truth,
            "expectation": cfg.expectation,
            "expectation_met": !mismatch,
        }),
    )?;
    println!("{}: {} {}", exp.label, primary.name, primary.verdict);
    if mismatch {
        eprintln!("expectation not met: primary criterion {} {}", primary.name, primary.verdict);
        return Ok(2);
    }
    Ok(0)
}

/// Bundles the series sidecars of `dir` into `report.csv`.
pub(crate) fn run_report(dir: &Path, out: &mut Outputs) -> Result<i32, CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Io(dir.display().to_string(), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("series_")))
        .collect();
    entries.sort();
    let mut csv = String::from("file,series,verdict,final_value,normalizer,vanish_tol\n");
    for p in &entries {
        let text = fs::read_to_string(p).map_err(|e| CliError::Io(p.display().to_string(), e))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
        let field = |k: &str| match &v[k] {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Null => String::new(),
            other => other.to_string(),
        };
        let csv_name = p.with_extension("csv");
        let file = csv_name.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        csv.push_str(&format!(
            "{file},{},{},{},{},{}\n",
            crate::classification::csv_field(&field("name")),
            field("verdict"),
            field("final_value"),
            field("normalizer"),
            field("vanish_tol")
        ));
    }
    out.write("report.csv", &csv)?;
    print!("{csv}");
    Ok(0)
}
