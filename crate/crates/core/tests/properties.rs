use proptest::prelude::*;

use qpchain::couplings::{
    disorder_stats, expand_to_majorana, last_layer_couplings, mqa_couplings, ChainKind, CouplingChain,
    ElementaryCouplings,
};
use qpchain::gaussian::{self, ModelTag, Window};
use qpchain::substitution::{inflate, inflate_symmetrized, predict_length, InflationRule, LetterSequence, Symbol};

fn preset() -> impl Strategy<Value = InflationRule> {
    prop::sample::select(InflationRule::preset_names().to_vec()).prop_map(|n| InflationRule::preset(n).unwrap())
}

/// A rule together with a short cyclic seed over its own alphabet.
fn rule_and_seed() -> impl Strategy<Value = (InflationRule, LetterSequence)> {
    preset().prop_flat_map(|rule| {
        let alphabet = rule.alphabet();
        (Just(rule), prop::collection::vec(prop::sample::select(alphabet), 1..5))
            .prop_map(|(rule, letters)| (rule, LetterSequence::cyclic(letters)))
    })
}

fn bonds(min_len: usize, max_len: usize) -> impl Strategy<Value = CouplingChain> {
    prop::collection::vec(0.05f64..3.0, min_len..max_len)
        .prop_map(|v| CouplingChain::custom(v, ChainKind::Bond).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn length_law((rule, seed) in rule_and_seed(), n in 0usize..=6) {
        let word = inflate(&seed, &rule, n).unwrap();
        prop_assert_eq!(word.len() as u128, predict_length(&seed, &rule, n).unwrap());
    }

    #[test]
    fn inflation_is_a_semigroup((rule, seed) in rule_and_seed(), m in 0usize..=3, n in 0usize..=3) {
        let two_step = inflate(&inflate(&seed, &rule, m).unwrap(), &rule, n).unwrap();
        prop_assert_eq!(two_step.letters, inflate(&seed, &rule, m + n).unwrap().letters);
    }

    #[test]
    fn symmetrized_inflation_matches_plain((rule, seed) in rule_and_seed(), n in 0usize..=4) {
        let plain = inflate(&seed, &rule, n).unwrap();
        let sym = inflate_symmetrized(&seed, &rule, n).unwrap().sequence();
        prop_assert_eq!(sym.letters, plain.letters);
    }

    #[test]
    fn mqa_chains_have_unit_mean(r in 0.01f64..100.0, n in 1usize..=4, rule in prop::sample::select(vec!["3,7", "3,8"])) {
        let rule = InflationRule::preset(rule).unwrap();
        let chain = mqa_couplings(&rule, &"ooo".parse().unwrap(), n, &ElementaryCouplings::from_ratio(r).unwrap()).unwrap();
        prop_assert!((chain.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mqa_is_scale_invariant(jo in 0.1f64..10.0, ja in 0.1f64..10.0, jb in 0.1f64..10.0, c in 0.01f64..100.0) {
        let rule = InflationRule::preset("3,7").unwrap();
        let seed: LetterSequence = "oo".parse().unwrap();
        let base = mqa_couplings(&rule, &seed, 3, &ElementaryCouplings::new(jo, ja, jb).unwrap()).unwrap();
        let scaled = mqa_couplings(&rule, &seed, 3, &ElementaryCouplings::new(c * jo, c * ja, c * jb).unwrap()).unwrap();
        for (x, y) in base.values.iter().zip(&scaled.values) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rotational_seed_gives_rotation_invariant_chain(r in 0.01f64..100.0, p in 2usize..=4, n in 1usize..=3) {
        let rule = InflationRule::preset("3,7").unwrap();
        let seed = LetterSequence::cyclic(vec![Symbol::O; p]);
        let chain = mqa_couplings(&rule, &seed, n, &ElementaryCouplings::from_ratio(r).unwrap()).unwrap();
        let l = chain.len();
        prop_assert_eq!(l % p, 0);
        for k in 0..l {
            prop_assert!((chain.values[k] - chain.values[(k + l / p) % l]).abs() < 1e-12);
        }
    }

    #[test]
    fn last_layer_disorder_grows_with_log_ratio(a in 0.0f64..3.0, b in 0.0f64..3.0, sign in prop::bool::ANY) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let seq = inflate(&"oo".parse().unwrap(), &InflationRule::preset("3,7").unwrap(), 3).unwrap();
        let s = if sign { 1.0 } else { -1.0 };
        let stats = |t: f64| disorder_stats(&last_layer_couplings(&seq, &ElementaryCouplings::from_ratio((s * t).exp()).unwrap()).unwrap());
        let (x, y) = (stats(lo), stats(hi));
        prop_assert!(y.sigma > x.sigma && y.adjacent_ratio > x.adjacent_ratio);
        prop_assert!(x.adjacent_ratio >= 1.0 && x.sigma >= 0.0);
    }

    #[test]
    fn majorana_expansion_averages_neighbours(chain in bonds(2, 40)) {
        let m = expand_to_majorana(&chain).unwrap().values;
        let n = m.len();
        prop_assert_eq!(n, 2 * chain.len());
        // 0-based position `m` holds `J_{m+1}`, so odd `J` sit at even positions.
        for k in (0..n).step_by(2) {
            prop_assert_eq!(m[k], 0.5 * (m[(k + n - 1) % n] + m[k + 1]));
        }
    }

    #[test]
    fn stats_bounds(chain in bonds(2, 40)) {
        let s = disorder_stats(&chain);
        prop_assert!(s.sigma >= 0.0 && s.adjacent_ratio >= 1.0);
    }

    #[test]
    fn gaussian_state_is_pure_and_complementary(chain in bonds(4, 24), model in prop::sample::select(vec![ModelTag::XxChain, ModelTag::MajoranaChain])) {
        let (gs, degenerate) = gaussian::chain_ground_state(&chain, model).unwrap();
        prop_assume!(!degenerate);
        prop_assert!(gs.covariance.purity_error() < 1e-10);
        let l = gs.covariance.sites();
        for j in [0, 1, l / 2] {
            for ell in 1..l {
                let a = gaussian::subsystem_entropy(&gs.covariance, Window::sites(j, ell)).unwrap();
                let b = gaussian::subsystem_entropy(&gs.covariance, Window::sites((j + ell) % l, l - ell)).unwrap();
                prop_assert!((a - b).abs() < 1e-8, "j={} ell={}", j, ell);
            }
        }
    }
}
