//! Randomized property tests: the engine against its own axioms and against
//! the brute-force subset-enumeration oracle.

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use voting_power::engine::{
    banzhaf, banzhaf_scores, brute_force_banzhaf_scores, brute_force_shapley, shapley_shubik,
};
use voting_power::game::{QuotaRule, Threshold, VotingGame};

fn game_strategy(max_players: usize) -> impl Strategy<Value = VotingGame> {
    prop::collection::vec(1u64..=60, 2..=max_players).prop_flat_map(|weights| {
        let total: u64 = weights.iter().sum();
        (Just(weights), 1..=total).prop_map(|(weights, quota)| {
            let players = (0..weights.len()).map(|i| format!("P{i:02}")).collect();
            VotingGame::new(
                players,
                vec![QuotaRule::new(weights, Threshold::Absolute(quota))],
                None,
                None,
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shapley_matches_brute_force(game in game_strategy(12)) {
        prop_assert_eq!(
            shapley_shubik(&game).unwrap(),
            brute_force_shapley(&game).unwrap()
        );
    }

    #[test]
    fn banzhaf_scores_match_brute_force(game in game_strategy(12)) {
        prop_assert_eq!(
            banzhaf_scores(&game).unwrap(),
            brute_force_banzhaf_scores(&game).unwrap()
        );
    }

    #[test]
    fn shapley_is_efficient(game in game_strategy(14)) {
        let ss = shapley_shubik(&game).unwrap();
        let sum: BigRational = ss.iter().map(|(_, v)| v.clone()).sum();
        // quota above the total weight leaves no winning coalitions at all
        prop_assert!(sum == BigRational::one() || sum.is_zero());
    }

    #[test]
    fn indices_are_nonnegative(game in game_strategy(14)) {
        for vector in [shapley_shubik(&game).unwrap(), banzhaf(&game).unwrap()] {
            for (_, v) in vector.iter() {
                prop_assert!(v >= &BigRational::zero());
            }
        }
    }

    #[test]
    fn monotone_in_weight(game in game_strategy(12)) {
        // a player with at least another's weight has at least its power
        let ss = shapley_shubik(&game).unwrap();
        let weights = &game.rules()[0].weights;
        let names = game.players();
        for i in 0..names.len() {
            for j in 0..names.len() {
                if weights[i] >= weights[j] {
                    prop_assert!(ss.get(&names[i]).unwrap() >= ss.get(&names[j]).unwrap());
                }
            }
        }
    }

    #[test]
    fn permutation_invariant(game in game_strategy(10), seed in any::<u64>()) {
        let ss = shapley_shubik(&game).unwrap();
        // rebuild the same game with players listed in a sheared order
        let n = game.players().len();
        let shift = (seed as usize) % n;
        let order: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let weights = &game.rules()[0].weights;
        let permuted = VotingGame::new(
            order.iter().map(|&i| game.players()[i].clone()).collect(),
            vec![QuotaRule::new(
                order.iter().map(|&i| weights[i]).collect(),
                game.rules()[0].threshold.clone(),
            )],
            None,
            None,
        )
        .unwrap();
        let permuted_ss = shapley_shubik(&permuted).unwrap();
        for (player, value) in ss.iter() {
            prop_assert_eq!(permuted_ss.get(player), Some(value));
        }
    }
}
