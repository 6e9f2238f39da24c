//! Acceptance suite: one pass/fail line per criterion, exits non-zero if any
//! criterion fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stablefield::classification::{find_weakly_wandering, GlobalVerdict, WanderingConfig};
use stablefield::diagnostics::{
    association_check, empirical_cesaro, ergodic_average, family_ladder, gross_weak_mixing, ladder, max_ergodicity, max_mixing,
    CesaroMode, Interval, RectEvent, Trend,
};
use stablefield::examples::{builtin, builtin_names};
use stablefield::measure_space::{
    dual_apply_partial, verify_action_laws, CharacterCocycle, CyclicAction, DisjointUnionAction, IdentityAction, NonsingularAction,
    RestrictedAction, SignCocycle, StateSpace, TranslationAction,
};
use stablefield::simulate::{simulate_max_stable, simulate_sum_stable, FieldSample, Truncation};
use stablefield::spectral::{scale_pow, FieldKind, MaxLinearCombination, SpectralFamily};
use stablefield::{LatticeIndex, Window};

type Outcome = Result<String, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn idx(c: &[i64]) -> LatticeIndex {
    LatticeIndex::new(c.to_vec())
}

fn actions() -> Vec<(&'static str, Arc<dyn NonsingularAction>, StateSpace, Option<Box<dyn SignCocycle>>)> {
    let cyc4 = Arc::new(CyclicAction::new(vec![4]).unwrap());
    let cyc34 = Arc::new(CyclicAction::new(vec![3, 4]).unwrap());
    let (shift, shift_space) = TranslationAction::new(vec![20], |_| 1.0).unwrap();
    let (geo, geo_space) = TranslationAction::new(vec![6, 6], |k| 0.5f64.powi((k[0].abs() + k[1].abs()) as i32)).unwrap();
    let shift: Arc<dyn NonsingularAction> = Arc::new(shift);
    let union = Arc::new(DisjointUnionAction::new(vec![cyc4.clone() as Arc<dyn NonsingularAction>, shift.clone()]).unwrap());
    let union_space = StateSpace::uniform(4 + shift_space.len());
    let restricted = Arc::new(RestrictedAction::new(union.clone(), (0..4).collect()));
    vec![
        ("cyclic[4]", cyc4.clone(), cyc4.space(), Some(Box::new(CharacterCocycle { signs: vec![-1.0] }) as Box<dyn SignCocycle>)),
        ("cyclic[3x4]", cyc34.clone(), cyc34.space(), None),
        ("identity", Arc::new(IdentityAction { d: 2, n: 5 }), StateSpace::uniform(5), None),
        ("shift[20]", shift, shift_space, Some(Box::new(CharacterCocycle { signs: vec![-1.0] }))),
        ("shift[6x6], geometric measure", Arc::new(geo), geo_space, Some(Box::new(CharacterCocycle { signs: vec![1.0, -1.0] }))),
        ("disjoint union", union, union_space, None),
        ("restriction", restricted, StateSpace::uniform(4), None),
    ]
}

fn c1_action_laws() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (k, (name, action, space, cocycle)) in actions().into_iter().enumerate() {
        let report = verify_action_laws(action.as_ref(), &space, cocycle.as_deref(), 10_000, 1e-12, 100 + k as u64).map_err(|e| e.to_string())?;
        if !report.all_passed() {
            return Err(format!("{name}: violation {:.3e}", report.max_violation()));
        }
        worst = worst.max(report.max_violation());
        checked += report.checks.iter().map(|c| c.checked).sum::<usize>();
    }
    Ok(format!("max violation {worst:.1e} over {checked} identities"))
}

fn c2_positive_isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for (name, action, space, _) in actions() {
        let d = action.dim();
        for _ in 0..100 {
            let t = LatticeIndex::new((0..d).map(|_| rng.random_range(-3..=3)).collect());
            let neg = -&t;
            // f vanishes where φ_{−t} would leave the truncation
            let f: Vec<f64> = (0..space.len())
                .map(|x| if action.apply(&neg, x).is_ok() { rng.random::<f64>() * 4.0 } else { 0.0 })
                .collect();
            let g = dual_apply_partial(action.as_ref(), &t, &f).map_err(|e| e.to_string())?;
            let lhs: f64 = g.iter().enumerate().map(|(s, v)| space.weight(s) * v.unwrap_or(0.0)).sum();
            let rhs = space.integrate(&f);
            let err = (lhs - rhs).abs() / rhs.max(1e-300);
            if err > 1e-12 {
                return Err(format!("{name}: relative error {err:.3e} at t = {t}"));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn c3_classification() -> Outcome {
    let cases = [
        ("cyclic_positive", GlobalVerdict::Positive),
        ("zshift_null_moving", GlobalVerdict::Null),
        ("markov_null", GlobalVerdict::Null),
        ("markov_positive", GlobalVerdict::Positive),
        ("identity_nonergodic", GlobalVerdict::Positive),
    ];
    let mut line = Vec::new();
    for (name, expected) in cases {
        let ex = builtin(name, FieldKind::MaxStable, 1.0).map_err(|e| e.to_string())?;
        if ex.series.horizon != 64 {
            return Err(format!("{name}: horizon {}", ex.series.horizon));
        }
        let first = ex.classify().map_err(|e| e.to_string())?;
        let second = ex.classify().map_err(|e| e.to_string())?;
        if first != second {
            return Err(format!("{name}: classification not deterministic"));
        }
        if first.global_verdict != expected {
            return Err(format!("{name}: got {}, expected {expected}", first.global_verdict));
        }
        line.push(format!("{name}={}", first.global_verdict));
    }
    Ok(line.join(" "))
}

fn c4_wandering() -> Outcome {
    let mut line = Vec::new();
    for (name, _) in builtin_names() {
        let ex = builtin(name, FieldKind::MaxStable, 1.0).map_err(|e| e.to_string())?;
        let class = ex.classify().map_err(|e| e.to_string())?.global_verdict;
        let system = ex.dual_system().map_err(|e| e.to_string())?;
        let found = find_weakly_wandering(system.as_ref(), &WanderingConfig::default()).map_err(|e| e.to_string())?.is_some();
        let ok = match class {
            GlobalVerdict::Null => found,
            GlobalVerdict::Positive => !found,
            _ => true,
        };
        if !ok {
            return Err(format!("{name}: class {class}, wandering set found = {found}"));
        }
        line.push(format!("{name}:{class}/{}", if found { "W" } else { "-" }));
    }
    Ok(line.join(" "))
}

/// Moving maximum / moving average kernel f0(k) = (1 − |k|/4)_+ on Z,
/// truncated to [−40, 40].
fn moving_kernel(alpha: f64, kind: FieldKind) -> SpectralFamily {
    let (action, space) = TranslationAction::new(vec![40], |_| 1.0).unwrap();
    let f0 = (0..space.len()).map(|s| (1.0 - (s as f64 - 40.0).abs() / 4.0).max(0.0)).collect();
    SpectralFamily::from_action(alpha, kind, space, Arc::new(action), None, f0).unwrap()
}

fn kernel_sigma_pow(alpha: f64) -> f64 {
    (-3..=3).map(|k: i64| (1.0 - k.abs() as f64 / 4.0).powf(alpha)).sum()
}

fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn ecf_gap(xs: &[f64], alpha: f64, sigma_pow: f64) -> f64 {
    [0.5f64, 1.0, 2.0]
        .iter()
        .map(|&th| {
            let ecf = xs.iter().map(|x| (th * x).cos()).sum::<f64>() / xs.len() as f64;
            (ecf - (-th.powf(alpha) * sigma_pow).exp()).abs()
        })
        .fold(0.0, f64::max)
}

fn origin_column(sample: &FieldSample) -> Vec<f64> {
    sample.column(sample.window.position(&idx(&[0])).unwrap())
}

fn c5_max_marginals() -> Outcome {
    let mut line = Vec::new();
    for alpha in [0.8, 1.0, 1.7] {
        let fam = moving_kernel(alpha, FieldKind::MaxStable);
        let sp = kernel_sigma_pow(alpha);
        let sample = simulate_max_stable(&fam, &Window::new(2, 1), 20_000, 5, Truncation::Adaptive).map_err(|e| e.to_string())?;
        let ks = ks_distance(origin_column(&sample), |x| (-sp * x.powf(-alpha)).exp());
        if ks >= 0.015 {
            return Err(format!("alpha {alpha}: KS {ks:.4}"));
        }
        line.push(format!("a={alpha}: KS {ks:.4}"));
    }
    Ok(line.join(", "))
}

fn c6_sum_marginals() -> Outcome {
    let mut line = Vec::new();
    for alpha in [0.8, 1.5] {
        let fam = moving_kernel(alpha, FieldKind::SumStable);
        let sample = simulate_sum_stable(&fam, &Window::new(2, 1), 20_000, 6, 2000).map_err(|e| e.to_string())?;
        let gap = ecf_gap(&origin_column(&sample), alpha, kernel_sigma_pow(alpha));
        if gap >= 0.02 {
            return Err(format!("alpha {alpha}: ecf gap {gap:.4}"));
        }
        line.push(format!("a={alpha}: gap {gap:.4}"));
    }
    Ok(line.join(", "))
}

fn c7_closure() -> Outcome {
    let alpha = 1.0;
    let w = Window::new(1, 1);
    let fam = moving_kernel(alpha, FieldKind::MaxStable);
    let y1 = origin_column(&simulate_max_stable(&fam, &w, 20_000, 71, Truncation::Adaptive).map_err(|e| e.to_string())?);
    let y2 = origin_column(&simulate_max_stable(&fam, &w, 20_000, 72, Truncation::Adaptive).map_err(|e| e.to_string())?);
    let c = 2f64.powf(1.0 / alpha);
    let sp = kernel_sigma_pow(alpha);
    let z: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a.max(*b) / c).collect();
    let ks = ks_distance(z, |x| (-sp * x.powf(-alpha)).exp());

    let alpha = 1.5;
    let fam = moving_kernel(alpha, FieldKind::SumStable);
    let x1 = origin_column(&simulate_sum_stable(&fam, &w, 20_000, 73, 2000).map_err(|e| e.to_string())?);
    let x2 = origin_column(&simulate_sum_stable(&fam, &w, 20_000, 74, 2000).map_err(|e| e.to_string())?);
    let c = 2f64.powf(1.0 / alpha);
    let z: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| (a + b) / c).collect();
    let gap = ecf_gap(&z, alpha, kernel_sigma_pow(alpha));
    let msg = format!("max KS {ks:.4}, sum ecf gap {gap:.4}");
    if ks < 0.02 && gap < 0.02 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c8_birkhoff() -> Outcome {
    let action = CyclicAction::new(vec![3, 4]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let values: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = values.iter().sum::<f64>() / 12.0;
    let s0 = 5;
    let h = |t: &LatticeIndex| action.apply(t, s0).ok().map(|s| values[s]);
    let t_list: Vec<u32> = (1..=60).collect();
    let series = ergodic_average(2, &h, &t_list).map_err(|e| e.to_string())?;
    let mut exact_err: f64 = 0.0;
    for (&t, &v) in series.horizons.iter().zip(&series.values) {
        let err = (v - mean).abs();
        if (2 * t) % 12 == 0 {
            if err > 1e-12 {
                return Err(format!("T = {t}: error {err:.3e}"));
            }
            exact_err = exact_err.max(err);
        } else if err > 4.0 * sup / t as f64 {
            return Err(format!("T = {t}: error {err:.3e} above 4 sup|h| / T"));
        }
    }
    Ok(format!("exact horizons error {exact_err:.1e}"))
}

fn c9_concordance() -> Outcome {
    let mut line = Vec::new();
    for (kind, alpha) in [(FieldKind::MaxStable, 1.0), (FieldKind::SumStable, 1.5)] {
        for (name, _) in builtin_names() {
            let ex = builtin(name, kind, alpha).map_err(|e| e.to_string())?;
            let class = ex.classify().map_err(|e| e.to_string())?.global_verdict;
            let t_list = family_ladder(&ex.family);
            let series = match kind {
                FieldKind::MaxStable => max_ergodicity(&ex.family, &MaxLinearCombination::single(LatticeIndex::zero(ex.family.dim())), &t_list),
                FieldKind::SumStable => gross_weak_mixing(&ex.family, Interval::new(0.5, 2.0).unwrap(), 0.5, &t_list),
            }
            .map_err(|e| e.to_string())?;
            if (series.verdict == Trend::Vanishes) != (class == GlobalVerdict::Null) || series.verdict == Trend::Inconclusive {
                return Err(format!("{kind} {name}: class {class}, analytic {}", series.verdict));
            }
            if kind == FieldKind::MaxStable {
                line.push(format!("{name}:{class}/{}", series.verdict));
            }
        }
    }
    Ok(line.join(" "))
}

fn c10_headline() -> Outcome {
    let ex = builtin("markov_null_positive", FieldKind::MaxStable, 1.0).map_err(|e| e.to_string())?;
    let class = ex.classify().map_err(|e| e.to_string())?.global_verdict;
    let e1 = stablefield::classification::CandidateSequence::ray(idx(&[1, 0]), 1).unwrap();
    let e2 = stablefield::classification::CandidateSequence::ray(idx(&[0, 1]), 1).unwrap();
    let s1 = max_mixing(&ex.family, &[e1], 8192).map_err(|e| e.to_string())?.remove(0);
    let s2 = max_mixing(&ex.family, &[e2], 64).map_err(|e| e.to_string())?.remove(0);
    // oracle: π0 = 1/2 for the two-state chain; the walk's return
    // probabilities come from propagating its law one step at a time
    let limit = 0.5 * 0.5;
    let n_max = 2048usize;
    let mut law = vec![0.0f64; 2 * n_max + 3];
    law[n_max + 1] = 1.0;
    let mut oracle_err: f64 = 0.0;
    for n in 1..=n_max {
        let mut next = vec![0.0f64; law.len()];
        for x in 1..law.len() - 1 {
            next[x] = 0.5 * law[x] + 0.25 * (law[x - 1] + law[x + 1]);
        }
        law = next;
        oracle_err = oracle_err.max((s1.values[n - 1] - 0.5 * law[n_max + 1]).abs());
    }
    let msg = format!(
        "class {class}, e1 final {:.5}, e2 final {:.9} (limit {limit}), oracle err {oracle_err:.1e}",
        s1.final_value(),
        s2.final_value()
    );
    if class == GlobalVerdict::Null && s1.final_value() < 0.005 && (s2.final_value() - limit).abs() < 1e-6 && limit > 0.05 && oracle_err < 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c11_association() -> Outcome {
    let alpha = 1.0;
    let fam = moving_kernel(alpha, FieldKind::MaxStable);
    let sp = kernel_sigma_pow(alpha);
    let sample = simulate_max_stable(&fam, &Window::new(2, 1), 20_000, 11, Truncation::Adaptive).map_err(|e| e.to_string())?;
    let quantile = |p: f64| (sp / -p.ln()).powf(1.0 / alpha);
    let cdf = |x: f64| (-sp * x.powf(-alpha)).exp();
    let grid: Vec<f64> = [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&p| quantile(p)).collect();
    let mut lagged = Vec::new();
    let mut same = Vec::new();
    for &x in &grid {
        for &y in &grid {
            lagged.push((RectEvent::single(idx(&[0]), x), RectEvent::single(idx(&[1]), y)));
            same.push((RectEvent::single(idx(&[0]), x), RectEvent::single(idx(&[0]), y)));
        }
    }
    let mut worst_z: f64 = f64::INFINITY;
    for e in association_check(&sample, &lagged).map_err(|e| e.to_string())? {
        worst_z = worst_z.min(e.covariance / e.se);
        if e.covariance < -3.0 * e.se {
            return Err(format!("covariance {:.4} below -3 SE ({:.4})", e.covariance, e.se));
        }
    }
    let mut worst_dev: f64 = 0.0;
    for ((a, b), e) in same.iter().zip(association_check(&sample, &same).map_err(|e| e.to_string())?) {
        let (x, y) = (a.constraints[0].1, b.constraints[0].1);
        let exact = cdf(x.min(y)) - cdf(x) * cdf(y);
        let dev = (e.covariance - exact).abs() / e.se;
        worst_dev = worst_dev.max(dev);
        if dev > 3.0 {
            return Err(format!("x = {x:.3}, y = {y:.3}: covariance {:.5} vs {exact:.5}", e.covariance));
        }
    }
    // the lag-one covariances against the bivariate law
    let mut lag_dev: f64 = 0.0;
    for ((a, b), e) in lagged.iter().zip(association_check(&sample, &lagged).map_err(|e| e.to_string())?) {
        let (x, y) = (a.constraints[0].1, b.constraints[0].1);
        let combo = MaxLinearCombination::new(vec![(1.0 / x, idx(&[0])), (1.0 / y, idx(&[1]))]).unwrap();
        let joint = (-scale_pow(&fam, &combo).map_err(|e| e.to_string())?.value).exp();
        lag_dev = lag_dev.max((e.covariance - (joint - cdf(x) * cdf(y))).abs() / e.se);
    }
    Ok(format!("min cov/SE {worst_z:.2}, same-site max |dev|/SE {worst_dev:.2}, lag-one max |dev|/SE {lag_dev:.2}"))
}

fn c12_cesaro_agreement() -> Outcome {
    let mut line = Vec::new();
    for (name, _) in builtin_names() {
        let ex = builtin(name, FieldKind::MaxStable, 1.0).map_err(|e| e.to_string())?;
        if ex.family.model.total_mass().is_none() {
            line.push(format!("{name}:skipped(infinite mass)"));
            continue;
        }
        let d = ex.family.dim();
        let window = Window::new(ex.sim_t, d);
        let sample = simulate_max_stable(&ex.family, &window, 4000, 12, Truncation::Adaptive).map_err(|e| e.to_string())?;
        let sp = ex.family.base_scale_pow().map_err(|e| e.to_string())?;
        let median = sp / 2f64.ln();
        let ev = RectEvent::single(LatticeIndex::zero(d), median);
        let t_list = ladder(2, ex.sim_t / 2);
        let erg = empirical_cesaro(&sample, &ev, &ev, &t_list, CesaroMode::Ergodic).map_err(|e| e.to_string())?;
        let wm = empirical_cesaro(&sample, &ev, &ev, &t_list, CesaroMode::WeakMixing).map_err(|e| e.to_string())?;
        if erg.verdict != wm.verdict {
            return Err(format!("{name}: ergodic {} vs weak mixing {}", erg.verdict, wm.verdict));
        }
        line.push(format!("{name}:{}", erg.verdict));
    }
    Ok(line.join(" "))
}

fn run_outputs(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name != "manifest.json" {
            files.push((name, std::fs::read(&path).map_err(|e| e.to_string())?));
        }
    }
    files.sort();
    Ok(files)
}

fn c13_reproducibility() -> Outcome {
    use stablefield::cli::{run, Command};
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        (
            "max",
            "seed = 13\n[family]\nexample = \"cyclic_positive\"\nalpha = 1.2\nkind = \"max-stable\"\n\
             [simulate]\nT = 4\nn_paths = 500\n[diagnose]\nn_paths = 500\nT = 8\n",
        ),
        (
            "sum",
            "seed = 14\n[family]\nexample = \"zshift_null_moving\"\nalpha = 1.5\nkind = \"sum-stable\"\n\
             [simulate]\nT = 4\nn_paths = 500\n[diagnose]\nn_paths = 500\nT = 8\n",
        ),
    ];
    let mut compared = 0;
    for (label, body) in configs {
        for command in ["classify", "simulate", "diagnose"] {
            let mut runs = Vec::new();
            for (rep, workers) in [(0, 1), (1, 1), (2, 8)] {
                let out = tmp.path().join(format!("{label}-{command}-{rep}"));
                let cfg = tmp.path().join(format!("{label}-{command}-{rep}.toml"));
                let text = format!("output = \"{}\"\n{body}", out.display());
                std::fs::write(&cfg, text).map_err(|e| e.to_string())?;
                let cmd = match command {
                    "classify" => Command::Classify { config: cfg },
                    "simulate" => Command::Simulate { config: cfg },
                    _ => Command::Diagnose { config: cfg },
                };
                run(&cmd, Some(workers)).map_err(|e| format!("{label} {command}: {e}"))?;
                runs.push(run_outputs(&out)?);
            }
            if runs[0].is_empty() {
                return Err(format!("{label} {command}: no outputs"));
            }
            for (other, what) in [(&runs[1], "repeat"), (&runs[2], "8 workers")] {
                if other != &runs[0] {
                    let diff = runs[0].iter().zip(other.iter()).find(|(a, b)| a != b).map(|(a, _)| a.0.clone()).unwrap_or_default();
                    return Err(format!("{label} {command}: {what} differs in {diff}"));
                }
            }
            compared += runs[0].len();
        }
    }
    Ok(format!("{compared} output files identical across repeat and 1 vs 8 workers"))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "action laws", budget: Duration::from_secs(1), run: c1_action_laws },
        Criterion { id: 2, name: "dual positive isometry", budget: Duration::from_secs(1), run: c2_positive_isometry },
        Criterion { id: 3, name: "classification ground truth", budget: Duration::from_secs(10), run: c3_classification },
        Criterion { id: 4, name: "weakly wandering cross-check", budget: Duration::from_secs(5), run: c4_wandering },
        Criterion { id: 5, name: "max-stable marginals", budget: Duration::from_secs(90), run: c5_max_marginals },
        Criterion { id: 6, name: "sum-stable marginals", budget: Duration::from_secs(120), run: c6_sum_marginals },
        Criterion { id: 7, name: "stability closure", budget: Duration::from_secs(60), run: c7_closure },
        Criterion { id: 8, name: "Birkhoff exactness", budget: Duration::from_secs(1), run: c8_birkhoff },
        Criterion { id: 9, name: "criterion concordance", budget: Duration::from_secs(30), run: c9_concordance },
        Criterion { id: 10, name: "null x positive Markov headline", budget: Duration::from_secs(60), run: c10_headline },
        Criterion { id: 11, name: "association", budget: Duration::from_secs(60), run: c11_association },
        Criterion { id: 12, name: "ergodic vs weak-mixing agreement", budget: Duration::from_secs(120), run: c12_cesaro_agreement },
        Criterion { id: 13, name: "reproducibility", budget: Duration::from_secs(60), run: c13_reproducibility },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget {:?}", c.budget)),
            Err(d) => (false, d),
        };
        failed += !ok as usize;
        println!("criterion {:>2} [{}] {} ({:.2?}): {}", c.id, if ok { "PASS" } else { "FAIL" }, c.name, elapsed, detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
