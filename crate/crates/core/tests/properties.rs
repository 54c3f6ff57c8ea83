use dpope_core::adversaries::{AdversarySpec, LossVector, StochasticLaw};
use dpope_core::algorithms::{mw_update, ExpertState};
use dpope_core::dp::{
    compose_advanced_heterogeneous, compose_advanced_homogeneous, compose_basic, exponential_mechanism_probabilities,
    PrivacyLedger, PrivacyLoss,
};
use dpope_core::math::norm;
use dpope_core::oco::dp_ftrl_step;
use proptest::prelude::*;

fn matrix(d: usize, t: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..=1.0f64, d), t)
}

fn ledger(entries: &[f64]) -> PrivacyLedger {
    entries.iter().map(|&e| PrivacyLoss::pure(e).unwrap()).collect()
}

proptest! {
    #[test]
    fn oblivious_ignores_history(rows in matrix(4, 12), h1 in prop::collection::vec(0..4usize, 12), h2 in prop::collection::vec(0..4usize, 12)) {
        let spec = AdversarySpec::oblivious(rows.into_iter().map(|r| LossVector::new(r).unwrap()).collect()).unwrap();
        let mut a = spec.source(0);
        let mut b = spec.source(7);
        for t in 1..=12u64 {
            let k = (t - 1) as usize;
            prop_assert_eq!(a.next_loss(t, &h1[..k]).unwrap(), b.next_loss(t, &h2[..k]).unwrap());
        }
    }

    #[test]
    fn loss_vector_range(values in prop::collection::vec(-0.5..1.5f64, 1..8)) {
        let ok = values.iter().all(|v| (0.0..=1.0).contains(v));
        prop_assert_eq!(LossVector::new(values).is_ok(), ok);
    }

    #[test]
    fn stochastic_emissions_in_range(seed in any::<u64>(), q in prop::collection::vec(0.0..=1.0f64, 3)) {
        for law in [StochasticLaw::Bernoulli(q.clone()), StochasticLaw::Uniform] {
            let spec = AdversarySpec::stochastic(3, 20, law, seed).unwrap();
            let mut src = spec.source(1);
            let mut again = spec.source(1);
            let mut hist = Vec::new();
            for t in 1..=20u64 {
                let l = src.next_loss(t, &hist).unwrap();
                prop_assert!(l.iter().all(|v| (0.0..=1.0).contains(v)));
                prop_assert_eq!(&l, &again.next_loss(t, &hist).unwrap());
                hist.push(0);
            }
        }
    }

    #[test]
    fn composition_is_monotone(entries in prop::collection::vec(1e-4..1.0f64, 1..20), idx in any::<prop::sample::Index>(), bump in 0.0..0.5f64, log_inv in 0.1..20.0f64) {
        let i = idx.index(entries.len());
        let mut bigger = entries.clone();
        bigger[i] += bump;
        let (a, b) = (ledger(&entries), ledger(&bigger));
        prop_assert!(compose_basic(&a).epsilon <= compose_basic(&b).epsilon);
        let ha = compose_advanced_heterogeneous(&a, log_inv).unwrap();
        let hb = compose_advanced_heterogeneous(&b, log_inv).unwrap();
        prop_assert!(ha.epsilon <= hb.epsilon);
        let e = entries[i];
        let ma = compose_advanced_homogeneous(e, entries.len() as u64, 1e-6, 0.0).unwrap();
        let mb = compose_advanced_homogeneous(e + bump, entries.len() as u64, 1e-6, 0.0).unwrap();
        let mk = compose_advanced_homogeneous(e, entries.len() as u64 + 1, 1e-6, 0.0).unwrap();
        prop_assert!(ma.epsilon <= mb.epsilon && ma.epsilon <= mk.epsilon);
    }

    #[test]
    fn exponential_mechanism_is_normalized_softmax(scores in prop::collection::vec(-50.0..50.0f64, 1..10), eta in 0.01..3.0f64) {
        let p = exponential_mechanism_probabilities(&scores, eta).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                let want = -eta * (scores[i] - scores[j]) / 2.0;
                prop_assert!(((p[i] / p[j]).ln() - want).abs() < 1e-6 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn exponential_mechanism_neighbour_ratio(scores in prop::collection::vec(0..20i32, 2..6), shift in prop::collection::vec(-1..=1i32, 6), eta in 0.01..2.0f64) {
        let a: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
        let b: Vec<f64> = scores.iter().zip(&shift).map(|(&s, &u)| (s + u) as f64).collect();
        let pa = exponential_mechanism_probabilities(&a, eta).unwrap();
        let pb = exponential_mechanism_probabilities(&b, eta).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            prop_assert!((x / y).ln().abs() <= eta + 1e-12);
        }
    }

    #[test]
    fn mw_state_stays_normalized(rows in matrix(5, 30), eta in 0.001..0.5f64) {
        let mut state = ExpertState::uniform(5).unwrap();
        for r in &rows {
            mw_update(&mut state, r, eta).unwrap();
            let p = state.probabilities();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ftrl_step_in_ball(g in prop::collection::vec(-1e6..1e6f64, 1..6), lambda in 1e-3..1e3f64, radius in 1e-3..1e3f64) {
        prop_assert!(norm(&dp_ftrl_step(&g, lambda, radius)) <= radius + 1e-12);
    }
}
