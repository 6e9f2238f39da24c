use std::sync::Arc;

use proptest::prelude::*;

use stablefield::classification::{CandidateSequence, GlobalVerdict};
use stablefield::examples::builtin;
use stablefield::measure_space::{
    dual_apply_partial, verify_action_laws, CharacterCocycle, CyclicAction, NonsingularAction, StateSpace, TranslationAction,
};
use stablefield::diagnostics::max_mixing;
use stablefield::spectral::{scale_pow, split_family, FieldKind, MaxLinearCombination};
use stablefield::LatticeIndex;

fn idx(c: &[i64]) -> LatticeIndex {
    LatticeIndex::new(c.to_vec())
}

fn geometric(q: f64) -> (Arc<dyn NonsingularAction>, StateSpace) {
    let (a, space) = TranslationAction::new(vec![12], |k| q.powi(k[0].abs() as i32)).unwrap();
    (Arc::new(a), space)
}

fn lattice_point(d: usize, r: i64) -> impl Strategy<Value = LatticeIndex> {
    proptest::collection::vec(-r..=r, d).prop_map(LatticeIndex::new)
}

fn combo(d: usize) -> impl Strategy<Value = MaxLinearCombination> {
    proptest::collection::vec((0.1f64..3.0, lattice_point(d, 3)), 1..4).prop_map(|mut terms| {
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        terms.dedup_by(|a, b| a.1 == b.1);
        MaxLinearCombination::new(terms).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_preserves_integrals_on_cycles(periods in proptest::collection::vec(1usize..6, 1..3), seed in 0u64..1000) {
        let action = CyclicAction::new(periods.clone()).unwrap();
        let space = action.space();
        let t = LatticeIndex::new(periods.iter().enumerate().map(|(i, _)| (seed as i64 * (i as i64 + 3)) % 7 - 3).collect());
        let f: Vec<f64> = (0..space.len()).map(|s| ((s as u64 * 2654435761 + seed) % 97) as f64 / 10.0).collect();
        let g = dual_apply_partial(&action, &t, &f).unwrap();
        let lhs: f64 = g.iter().enumerate().map(|(s, v)| space.weight(s) * v.unwrap()).sum();
        prop_assert!((lhs - space.integrate(&f)).abs() <= 1e-12 * space.integrate(&f).max(1.0));
    }

    #[test]
    fn dual_is_a_semigroup(q in 0.3f64..1.0, t in -4i64..=4, u in -4i64..=4, bump in 0usize..25) {
        let (action, space) = geometric(q);
        let f: Vec<f64> = (0..space.len()).map(|s| if s.abs_diff(bump) <= 2 { 1.0 + s as f64 } else { 0.0 }).collect();
        let both = dual_apply_partial(action.as_ref(), &idx(&[t + u]), &f).unwrap();
        let inner = dual_apply_partial(action.as_ref(), &idx(&[u]), &f).unwrap();
        let inner: Vec<f64> = inner.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        let outer = dual_apply_partial(action.as_ref(), &idx(&[t]), &inner).unwrap();
        for (s, (a, b)) in both.iter().zip(&outer).enumerate() {
            if let (Some(a), Some(b)) = (a, b) {
                if b.is_finite() {
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "state {s}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn cocycle_laws_hold_for_weighted_shifts(q in 0.2f64..1.0, seed in 0u64..10_000) {
        let (action, space) = geometric(q);
        let cocycle = CharacterCocycle { signs: vec![-1.0] };
        let report = verify_action_laws(action.as_ref(), &space, Some(&cocycle), 500, 1e-12, seed).unwrap();
        prop_assert!(report.all_passed(), "violation {:.3e}", report.max_violation());
    }

    #[test]
    fn scale_is_shift_invariant(c in combo(1), h in -5i64..=5, which in 0usize..3) {
        let name = ["cyclic_positive", "zshift_null_moving", "product_split"][which];
        let ex = builtin(name, FieldKind::MaxStable, 1.3).unwrap();
        let a = scale_pow(&ex.family, &c).unwrap().value;
        let b = scale_pow(&ex.family, &c.shifted(&idx(&[h]))).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{name}: {a} vs {b}");
    }

    #[test]
    fn split_parts_add_up(c in combo(1), alpha in 0.5f64..1.9) {
        let ex = builtin("product_split", FieldKind::MaxStable, alpha).unwrap();
        let report = ex.classify().unwrap();
        prop_assert_eq!(report.global_verdict, GlobalVerdict::Mixed);
        let (pos, null) = split_family(&ex.family, &report).unwrap();
        let whole = scale_pow(&ex.family, &c).unwrap().value;
        let parts = scale_pow(&pos, &c).unwrap().value + scale_pow(&null, &c).unwrap().value;
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0), "{whole} vs {parts}");
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

#[test]
fn markov_mixing_matches_matrix_powers() {
    let p = [[0.75, 0.25], [0.25, 0.75]];
    let n = 64;
    let mut powers = Vec::with_capacity(n);
    let mut m = p;
    for _ in 0..n {
        powers.push(m[0][0]);
        m = mat_mul(&m, &p);
    }
    let ex = builtin("markov_positive", FieldKind::MaxStable, 1.0).unwrap();
    let ray = CandidateSequence::ray(idx(&[1]), 1).unwrap();
    let series = max_mixing(&ex.family, &[ray], n).unwrap().remove(0);
    for (k, (v, p00)) in series.values.iter().zip(&powers).enumerate() {
        assert!((v - 0.5 * p00).abs() < 1e-8, "n = {}: {v} vs {}", k + 1, 0.5 * p00);
    }

    // diagonal direction in the product: both chains move together
    let mut walk = vec![0.0f64; 2 * n + 3];
    walk[n + 1] = 1.0;
    let ex = builtin("markov_null_positive", FieldKind::MaxStable, 1.0).unwrap();
    let ray = CandidateSequence::ray(idx(&[1, 1]), 1).unwrap();
    let series = max_mixing(&ex.family, &[ray], n).unwrap().remove(0);
    for k in 0..n {
        let mut next = vec![0.0f64; walk.len()];
        for x in 1..walk.len() - 1 {
            next[x] = 0.5 * walk[x] + 0.25 * (walk[x - 1] + walk[x + 1]);
        }
        walk = next;
        let expected = 0.5 * powers[k] * walk[n + 1];
        assert!((series.values[k] - expected).abs() < 1e-8, "n = {}: {} vs {expected}", k + 1, series.values[k]);
    }
}

#[test]
fn local_time_partial_sums_are_monotone_and_bounded() {
    let ex = builtin("local_time", FieldKind::MaxStable, 1.0).unwrap();
    let report = ex.classify().unwrap();
    assert_eq!(report.global_verdict, GlobalVerdict::Null);
    for state in &report.per_state {
        for ev in &state.evidence {
            assert!(ev.partial_sums.iter().all(|s| s.is_finite()));
            assert!(ev.partial_sums.windows(2).all(|w| w[1] >= w[0]), "{}: partial sums decrease", ev.label);
        }
        let best = state.best_sequence().expect("null states carry a converging sequence");
        let sums = &best.partial_sums;
        // convergent: the second half adds less than the first
        let half = sums[sums.len() / 2 - 1];
        let last = *sums.last().unwrap();
        assert!(last - half < half, "{}: {half} then {last}", best.label);
    }
}
