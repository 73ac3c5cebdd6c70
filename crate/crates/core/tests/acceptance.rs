//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! All comparisons are exact rational equalities (tolerance: zero).

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{all_pure_profiles, profile_space, random_game, random_profile, report, rng, GameSpec};
use num_bigint::BigUint;
use popsicle_core::commitment::{apply_cut, count_cuts, enumerate_cuts, expand, lift_profile, Cut, CutIter};
use popsicle_core::contract::{builtin_sweetened, builtin_attack_contract};
use popsicle_core::equilibrium::{
    enumerate_equilibria, is_subgame_perfect, filter_subgame_perfect, solve_backward_induction, BruteOptions,
};
use popsicle_core::game::{expected_utility, play, GameBuilder};
use popsicle_core::popsicle::build_popsicle;
use popsicle_core::rational::{format, int, ratio};
use popsicle_core::resilience::{check_popsicle_resilience, attack_ordering, verify_attack, SchemaOptions};
use popsicle_core::*;
use rand::Rng;

fn five_prices() -> Vec<Rational> {
    vec![int(0), ratio(1, 4), ratio(1, 2), ratio(3, 4), int(1)]
}

struct VanillaSpe {
    profile: StrategyProfile,
    prices: Vec<Rational>,
    utilities: UtilityVector,
    qs: BTreeSet<Rational>,
}

/// Every pure subgame-perfect equilibrium of the vanilla game, plus buyer tie
/// mixtures, one entry per vendor price vector and utility vector.
fn vanilla_spes(params: &PopsicleParams) -> Vec<VanillaSpe> {
    let g = build_popsicle(params).unwrap();
    let solver = SpeSolver::new(
        &g,
        SpeOptions {
            mixing_player: Some(PlayerId::BUYER),
            ..SpeOptions::default()
        },
    );
    solver
        .classes(g.root(), &Default::default())
        .unwrap()
        .into_iter()
        .map(|c| {
            let pp = PopsicleProfile::from_strategy_profile(params, &c.profile).unwrap();
            let qs = pp.on_path().unwrap().iter().map(|(ch, _)| ch.q.clone()).collect();
            VanillaSpe {
                profile: c.profile,
                prices: pp.prices,
                utilities: c.utilities,
                qs,
            }
        })
        .collect()
}

/// Independent re-check of a counterexample with exhaustive deviations.
fn recheck(params: &PopsicleParams, s: &VanillaSpe) -> &'static str {
    let g = build_popsicle(params).unwrap();
    let r = is_subgame_perfect(&g, &s.profile, &DeviationSpace::exhaustive(params.n + 1)).unwrap();
    if r.verdict && r.utilities == s.utilities {
        "confirmed subgame perfect by exhaustive deviation check"
    } else {
        "NOT confirmed by exhaustive deviation check"
    }
}

fn show_prices(p: &[Rational]) -> String {
    format!("({})", p.iter().map(format).collect::<Vec<_>>().join(", "))
}

#[test]
fn criterion_1_perfect_competition() {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [2usize, 3] {
        for alpha in [int(0), ratio(1, 4), ratio(1, 2)] {
            let params = PopsicleParams::new(n, int(1), alpha.clone(), five_prices(), vec![int(0), int(1)]).unwrap();
            let spes = vanilla_spes(&params);
            let mut expected = UtilityVector::zeros(n + 1);
            expected.0[0] = int(1);
            let bad: Vec<&VanillaSpe> = spes.iter().filter(|s| s.utilities != expected).collect();
            let here = !spes.is_empty() && bad.is_empty();
            ok &= here;
            let mut line = format!("n={n} alpha={}: {} SPE classes", format(&alpha), spes.len());
            if let Some(b) = bad.first() {
                line += &format!(
                    ", {} violate u=(1,0..): e.g. p={} u={} ({})",
                    bad.len(),
                    show_prices(&b.prices),
                    b.utilities,
                    recheck(&params, b)
                );
            }
            notes.push(line);
        }
    }
    report(1, ok, notes.join("; "));
    assert!(ok, "every SPE must give u0 = 1, u_j = 0");
}

#[test]
fn criterion_2_discounted_competition() {
    let alpha = ratio(1, 4);
    let mut ok = true;
    let mut printed_bound = true;
    let mut notes = Vec::new();
    for d in [ratio(1, 4), ratio(1, 2), ratio(3, 4)] {
        for n in [2usize, 3] {
            let params = PopsicleParams::new(n, d.clone(), alpha.clone(), five_prices(), vec![int(0), int(1)]).unwrap();
            let spes = vanilla_spes(&params);
            let one_minus_d = int(1) - &d;
            let bound = (int(1) - &alpha) * &one_minus_d;
            let printed = &alpha * &one_minus_d;
            let fits = |s: &VanillaSpe| {
                s.prices[0] == one_minus_d
                    && s.prices[1] == int(0)
                    && s.utilities.0[0] == d
                    && s.qs == BTreeSet::from([int(0)])
                    && s.utilities.0[1] <= bound
            };
            let bad: Vec<&VanillaSpe> = spes.iter().filter(|s| !fits(s)).collect();
            let here = !spes.is_empty() && bad.is_empty();
            ok &= here;
            printed_bound &= spes.iter().all(|s| s.utilities.0[1] <= printed);
            let mut line = format!("d={} n={n}: {} SPE classes", format(&d), spes.len());
            if let Some(b) = bad.first() {
                line += &format!(
                    ", {} off the closed-form profile: e.g. p={} u={} ({})",
                    bad.len(),
                    show_prices(&b.prices),
                    b.utilities,
                    recheck(&params, b)
                );
            }
            notes.push(line);
        }
    }
    notes.push(format!(
        "printed bound u1 <= alpha(1-d) holds on all SPEs: {}",
        if printed_bound { "yes" } else { "no" }
    ));
    report(2, ok, notes.join("; "));
    assert!(ok, "every SPE must have p1 = 1-d, p2 = 0, u0 = d, q = 0");
}

fn two_player_example() -> GameTree {
    let mut b = GameBuilder::new();
    let l1 = b.leaf(UtilityVector::from_ints(&[0, 2, 1]));
    let l2 = b.leaf(UtilityVector::from_ints(&[0, 0, 3]));
    let l3 = b.leaf(UtilityVector::from_ints(&[0, 1, 0]));
    let inner = b.decision(PlayerId(2), 2, vec![(0, l1), (1, l2)]);
    let mid = b.decision(PlayerId(1), 1, vec![(0, inner), (1, l3)]);
    let root = b.decision(PlayerId(2), 0, vec![(0, mid)]);
    GameTree::build(b, root, 3).unwrap()
}

#[test]
fn criterion_3_example_and_cut_counts() {
    let g = two_player_example();
    let x = expand(&g, PlayerId(2), &CommitmentBudget::default()).unwrap();
    let root = x.tree.decision(x.tree.root()).unwrap();
    // each branch: player 2's forced first move, player 1, then the inner node
    let inner_labels: Vec<Vec<u32>> = root
        .actions
        .iter()
        .map(|e| {
            let first = x.tree.decision(e.child).unwrap();
            let mid = x.tree.decision(first.actions[0].child).unwrap();
            let inner = x.tree.decision(mid.actions[0].child).unwrap();
            inner.actions.iter().map(|a| a.label).collect()
        })
        .collect();
    let fig_ok = root.owner == PlayerId(2) && inner_labels == vec![vec![0, 1], vec![0], vec![1]];

    let mut r = rng(3);
    let mut checked = 0;
    let mut count_ok = true;
    while checked < 50 {
        let g = random_game(
            &mut r,
            &GameSpec {
                players: 2,
                max_decisions: 14,
                max_actions: 3,
                imperfect: true,
            },
        );
        let p = PlayerId(r.gen_range(0..2));
        let owned: usize = g.info_sets_of(p).map(|(_, s)| s.members.len()).sum();
        let count = count_cuts(&g, p);
        if owned > 10 || count > BigUint::from(20_000u32) {
            continue;
        }
        let listed = CutIter::new(&g, p).unwrap().count();
        count_ok &= BigUint::from(listed) == count;
        checked += 1;
    }
    let ok = fig_ok && count_ok;
    report(
        3,
        ok,
        format!(
            "example branches {:?} (expected [[0,1],[0],[1]]); count_cuts == enumeration on {checked} random games: {count_ok}",
            inner_labels
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_attack() {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [2usize, 3] {
        let start = Instant::now();
        let params = PopsicleParams::new(n, ratio(1, 2), ratio(1, 4), vec![int(0), ratio(1, 2), int(1)], vec![int(0), int(1)]).unwrap();
        let ast = builtin_attack_contract(&params).unwrap();
        let r = verify_attack(&params, &ast, ComplianceReading::CommitHigh, &CommitmentBudget::default()).unwrap();
        let mut expected = UtilityVector::zeros(n + 1);
        expected.0[1] = int(1);
        let elapsed = start.elapsed();
        let here = r.verified() && r.utilities() == &expected && elapsed < Duration::from_secs(60);
        ok &= here;
        notes.push(format!(
            "n={n}: {} ({} nodes, subgame perfect: {}, {:.1}s)",
            r.equilibrium,
            r.expanded_nodes,
            r.subgame_perfect.verdict,
            elapsed.as_secs_f64()
        ));
    }
    report(4, ok, notes.join("; "));
    assert!(ok);
}

#[test]
fn criterion_5_not_resilient() {
    let params = PopsicleParams::new(2, ratio(1, 2), ratio(1, 4), vec![int(0), ratio(1, 2), int(1)], vec![int(0), int(1)]).unwrap();
    let ast = builtin_attack_contract(&params).unwrap();
    let r = check_popsicle_resilience(
        &params,
        &[attack_ordering(2)],
        Some(&ast),
        SchemaOptions::default(),
        &CommitmentBudget::default(),
    )
    .unwrap();
    let attack = UtilityVector::from_ints(&[0, 1, 0]);
    let excluded = !r.vanilla.contains(&attack);
    let witnessed = r
        .orderings
        .iter()
        .any(|o| o.unmatched.contains(&attack) && o.equilibria.contains(&attack));
    let witness = r.witnesses.iter().find(|w| w.utilities == attack);
    let witness_ok = witness.is_some_and(|w| w.subgame_perfect);
    let ok = !r.resilient && excluded && witnessed && witness_ok;
    report(
        5,
        ok,
        format!(
            "verdict: {}; (0, 1, 0) among expanded equilibria: {witnessed}; vanilla set {{{}}} excludes it: {excluded}; witness {}",
            r.verdict(),
            r.vanilla.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(" "),
            witness.map_or("none".into(), |w| format!(
                "ordering {} u = {} (subgame perfect: {})",
                popsicle_core::resilience::format_ordering(&w.ordering),
                w.utilities,
                w.subgame_perfect
            )),
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_6_sweetened() {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [2usize, 3] {
        let params = PopsicleParams::new(
            n,
            ratio(1, 2),
            ratio(1, 4),
            vec![int(0), ratio(1, 2), int(1)],
            vec![int(0), ratio(3, 4), int(1)],
        )
        .unwrap();
        let ast = builtin_sweetened(&params, &ratio(1, 4)).unwrap();
        let r = verify_attack(&params, &ast, ComplianceReading::CommitHigh, &CommitmentBudget::default()).unwrap();
        let mut expected = UtilityVector::zeros(n + 1);
        expected.0[0] = ratio(1, 4);
        expected.0[1] = ratio(3, 4);
        ok &= r.verified() && r.utilities() == &expected;
        notes.push(format!("n={n}: {}", r.equilibrium));
    }
    report(6, ok, notes.join("; "));
    assert!(ok);
}

#[test]
fn criterion_7_oracle_equivalence() {
    let mut r = rng(7);
    let mut games = 0;
    let mut ok = true;
    let mut first_bad = None;
    while games < 100 {
        let players = r.gen_range(2..=3);
        let g = random_game(
            &mut r,
            &GameSpec {
                players,
                max_decisions: 12,
                max_actions: 3,
                imperfect: false,
            },
        );
        if profile_space(&g) > 4096 {
            continue;
        }
        games += 1;
        let bi: BTreeSet<StrategyProfile> = solve_backward_induction(&g, TieRule::KeepAll, 1 << 20)
            .unwrap()
            .into_iter()
            .collect();
        let space = DeviationSpace::exhaustive(players);
        let brute = enumerate_equilibria(&g, &space, &BruteOptions::default()).unwrap();
        let spe: BTreeSet<StrategyProfile> = filter_subgame_perfect(&g, &space, brute)
            .unwrap()
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        if bi != spe {
            ok = false;
            first_bad.get_or_insert((games, bi.len(), spe.len()));
        }
    }
    report(
        7,
        ok,
        match first_bad {
            None => format!("{games} games: backward induction == filtered brute force"),
            Some((k, a, b)) => format!("game {k}: backward induction {a} profiles, brute force {b}"),
        },
    );
    assert!(ok);
}

#[test]
fn criterion_8_structural_properties() {
    let mut r = rng(8);
    // (a) every enumerated cut is valid
    let mut cuts_ok = true;
    let mut cuts_seen = 0usize;
    for _ in 0..30 {
        let g = random_game(
            &mut r,
            &GameSpec {
                players: 2,
                max_decisions: 8,
                max_actions: 3,
                imperfect: true,
            },
        );
        let p = PlayerId(r.gen_range(0..2));
        let Ok(cuts) = enumerate_cuts(&g, p, &CommitmentBudget { max_nodes: 1 << 20, max_cuts_per_node: 2000 }) else {
            continue;
        };
        for c in cuts {
            cuts_seen += 1;
            let valid = Cut::new(&g, p, c.kept.clone()).is_ok_and(|n| n == c)
                && apply_cut(&g, &c).is_ok_and(|h| h.validate().is_ok() && uniform_cut(&g, &h, &c));
            cuts_ok &= valid;
        }
    }

    // (b) play in the expansion equals play in the cut game
    let mut triples = 0;
    let mut play_ok = true;
    while triples < 100 {
        let g = random_game(
            &mut r,
            &GameSpec {
                players: 3,
                max_decisions: 8,
                max_actions: 3,
                imperfect: true,
            },
        );
        let p = PlayerId(r.gen_range(0..3));
        if count_cuts(&g, p) > BigUint::from(200u32) {
            continue;
        }
        triples += 1;
        let x = expand(&g, p, &CommitmentBudget::default()).unwrap();
        let cuts = enumerate_cuts(&g, p, &CommitmentBudget::default()).unwrap();
        let k = r.gen_range(0..cuts.len());
        let cut = &cuts[k];
        let cut_game = apply_cut(&g, cut).unwrap();
        let mut sigma = random_profile(&mut r, &cut_game, true);
        for (id, set) in g.info_sets() {
            if cut_game.info_set(*id).is_none() {
                sigma.set_pure(*id, set.labels[0]);
            }
        }
        let mut lifted = lift_profile(&x.tree, &sigma);
        lifted.set_pure(x.tree.decision(x.tree.root()).unwrap().info_set, k as u32);
        let a = expected_utility(&x.tree, &lifted).unwrap();
        let b = expected_utility(&cut_game, &sigma).unwrap();
        play_ok &= a == b;
    }

    // (c) welfare identity on the n=2 micro instance
    let params = PopsicleParams::new(2, int(1), int(0), vec![int(0), int(1)], vec![int(0), int(1)]).unwrap();
    let g = build_popsicle(&params).unwrap();
    let profiles = all_pure_profiles(&g);
    let welfare_ok = profiles.iter().all(|s| play(&g, s).unwrap().total() == int(1));

    let ok = cuts_ok && play_ok && welfare_ok;
    report(
        8,
        ok,
        format!(
            "{cuts_seen} enumerated cuts valid: {cuts_ok}; {triples} round-trip triples: {play_ok}; welfare sum = 1 on {} profiles: {welfare_ok}",
            profiles.len()
        ),
    );
    assert!(ok);
}

/// Every surviving node of the cut owner keeps exactly the cut's actions.
fn uniform_cut(g: &GameTree, h: &GameTree, c: &Cut) -> bool {
    h.info_sets_of(c.owner).all(|(id, s)| {
        let want = c.kept.get(&id).cloned().unwrap_or_else(|| g.info_set(id).unwrap().labels.clone());
        s.labels == want
            && s.members
                .iter()
                .all(|&m| h.decision(m).unwrap().actions.iter().map(|e| e.label).eq(want.iter().copied()))
    })
}
