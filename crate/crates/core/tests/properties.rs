//! Property tests over random games.

mod common;

use std::collections::BTreeSet;

use common::{all_pure_profiles, profile_space, random_game, random_profile, rng, GameSpec};
use popsicle_core::commitment::{count_cuts, enumerate_cuts, expand, CutIter};
use popsicle_core::equilibrium::{
    enumerate_equilibria, filter_subgame_perfect, is_equilibrium, is_subgame_perfect, replay_witness, BruteOptions,
};
use popsicle_core::game::{play, GameDoc, NodeDoc};
use popsicle_core::rational::{int, ratio};
use popsicle_core::*;
use proptest::prelude::*;

fn small(imperfect: bool) -> GameSpec {
    GameSpec {
        players: 3,
        max_decisions: 5,
        max_actions: 3,
        imperfect,
    }
}

/// `u_p -> a * u_p + b` at every leaf.
fn affine(game: &GameTree, player: usize, a: &Rational, b: &Rational) -> GameTree {
    fn walk(n: &mut NodeDoc, player: usize, a: &Rational, b: &Rational) {
        match n {
            NodeDoc::Leaf { utilities } => utilities.0[player] = a * &utilities.0[player] + b,
            NodeDoc::Decision { actions, .. } => actions.iter_mut().for_each(|e| walk(&mut e.child, player, a, b)),
        }
    }
    let mut doc: GameDoc = game.to_doc();
    walk(&mut doc.root, player, a, b);
    GameTree::from_doc(&doc).unwrap()
}

fn spe_set(game: &GameTree) -> BTreeSet<UtilityVector> {
    SpeSolver::new(game, SpeOptions::default())
        .outcomes(game.root())
        .unwrap()
        .iter()
        .map(|o| o.utilities.clone())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdicts_survive_positive_affine_maps(seed in any::<u64>(), imperfect in any::<bool>(), p in 0usize..3, a in 1i64..5, b in -3i64..3) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &small(imperfect));
        let h = affine(&g, p, &ratio(a, 2), &int(b));
        let prof = random_profile(&mut r, &g, true);
        let space = DeviationSpace::exhaustive(3);
        prop_assert_eq!(is_equilibrium(&g, &prof, &space).unwrap().verdict, is_equilibrium(&h, &prof, &space).unwrap().verdict);
        prop_assert_eq!(is_subgame_perfect(&g, &prof, &space).unwrap().verdict, is_subgame_perfect(&h, &prof, &space).unwrap().verdict);
    }

    #[test]
    fn witnesses_replay_to_their_gain(seed in any::<u64>(), imperfect in any::<bool>(), mixed in any::<bool>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &small(imperfect));
        let prof = random_profile(&mut r, &g, mixed);
        for space in [DeviationSpace::exhaustive(3), DeviationSpace::raw_actions(3)] {
            let rep = is_subgame_perfect(&g, &prof, &space).unwrap();
            if let Some(w) = rep.witness {
                prop_assert!(w.gain > int(0));
                prop_assert_eq!(replay_witness(&g, &prof, &w).unwrap(), w.deviator_utility.clone());
            }
        }
    }

    #[test]
    fn raw_failures_imply_exhaustive_failures(seed in any::<u64>(), imperfect in any::<bool>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &small(imperfect));
        let prof = random_profile(&mut r, &g, false);
        let raw = is_equilibrium(&g, &prof, &DeviationSpace::raw_actions(3)).unwrap().verdict;
        let full = is_equilibrium(&g, &prof, &DeviationSpace::exhaustive(3)).unwrap().verdict;
        prop_assert!(raw || !full);
    }

    #[test]
    fn enumeration_agrees_with_verification(seed in any::<u64>(), imperfect in any::<bool>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &small(imperfect));
        prop_assume!(profile_space(&g) <= 4096);
        let space = DeviationSpace::exhaustive(3);
        let found = enumerate_equilibria(&g, &space, &BruteOptions::default()).unwrap();
        let listed: BTreeSet<String> = found.iter().map(|(p, _)| format!("{p:?}")).collect();
        for p in all_pure_profiles(&g) {
            let v = is_equilibrium(&g, &p, &space).unwrap().verdict;
            prop_assert_eq!(v, listed.contains(&format!("{p:?}")));
        }
    }

    #[test]
    fn spe_solver_matches_filtered_enumeration(seed in any::<u64>(), imperfect in any::<bool>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &small(imperfect));
        prop_assume!(profile_space(&g) <= 4096);
        let space = DeviationSpace::exhaustive(3);
        let eqs = enumerate_equilibria(&g, &space, &BruteOptions::default()).unwrap();
        let brute: BTreeSet<UtilityVector> = filter_subgame_perfect(&g, &space, eqs)
            .unwrap()
            .into_iter()
            .map(|(p, _)| play(&g, &p).unwrap())
            .collect();
        prop_assert_eq!(spe_set(&g), brute);
    }

    #[test]
    fn cut_counts_match_enumeration(seed in any::<u64>(), p in 0usize..3) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &GameSpec { players: 3, max_decisions: 6, max_actions: 3, imperfect: true });
        let n = CutIter::new(&g, PlayerId(p)).unwrap().count();
        prop_assert_eq!(count_cuts(&g, PlayerId(p)), n.into());
        let listed = enumerate_cuts(&g, PlayerId(p), &CommitmentBudget::default()).unwrap();
        prop_assert_eq!(listed.len(), n);
        prop_assert!(listed[0].is_identity(&g));
    }

    #[test]
    fn commitment_never_hurts_the_leader(seed in any::<u64>(), p in 0usize..3) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &GameSpec { players: 3, max_decisions: 4, max_actions: 2, imperfect: false });
        let x = expand(&g, PlayerId(p), &CommitmentBudget::default()).unwrap();
        let best = |s: &BTreeSet<UtilityVector>| s.iter().map(|u| u.0[p].clone()).max().unwrap();
        prop_assert!(best(&spe_set(&x.tree)) >= best(&spe_set(&g)));
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), imperfect in any::<bool>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, &small(imperfect));
        let back = GameTree::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), g.to_json());
    }
}
