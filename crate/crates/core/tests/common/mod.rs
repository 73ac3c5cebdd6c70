#![allow(dead_code)]

use std::collections::BTreeMap;

use popsicle_core::game::{ActionDist, GameBuilder, GameTree, NodeId, PlayerId, StrategyProfile, UtilityVector};
use popsicle_core::rational::{ratio, Rational};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

enum Shape {
    Leaf(UtilityVector),
    Decision { owner: usize, depth: usize, kids: Vec<Shape> },
}

pub struct GameSpec {
    pub players: usize,
    pub max_decisions: usize,
    pub max_actions: usize,
    /// Merge same-depth nodes of one owner into information sets.
    pub imperfect: bool,
}

fn utility(rng: &mut TestRng) -> Rational {
    const VALUES: [(i64, i64); 6] = [(0, 1), (1, 2), (1, 1), (2, 1), (-1, 1), (1, 3)];
    let (a, b) = VALUES[rng.gen_range(0..VALUES.len())];
    ratio(a, b)
}

fn shape(rng: &mut TestRng, spec: &GameSpec, budget: &mut usize, depth: usize) -> Shape {
    let leaf_odds = if depth == 0 { 0.0 } else { 0.35 };
    if *budget == 0 || rng.gen_bool(leaf_odds) {
        return Shape::Leaf(UtilityVector((0..spec.players).map(|_| utility(rng)).collect()));
    }
    *budget -= 1;
    let k = rng.gen_range(2..=spec.max_actions);
    let owner = rng.gen_range(0..spec.players);
    let kids = (0..k).map(|_| shape(rng, spec, budget, depth + 1)).collect();
    Shape::Decision { owner, depth, kids }
}

/// A random game; imperfect-information games share labels `0..k` inside
/// each information set.
pub fn random_game(rng: &mut TestRng, spec: &GameSpec) -> GameTree {
    let mut budget = spec.max_decisions;
    let root = shape(rng, spec, &mut budget, 0);
    // open information sets keyed by (owner, depth, arity)
    let mut open: BTreeMap<(usize, usize, usize), Vec<u32>> = BTreeMap::new();
    let mut next = 0u32;
    let mut b = GameBuilder::new();
    fn emit(
        s: &Shape,
        b: &mut GameBuilder,
        rng: &mut TestRng,
        imperfect: bool,
        open: &mut BTreeMap<(usize, usize, usize), Vec<u32>>,
        next: &mut u32,
    ) -> NodeId {
        match s {
            Shape::Leaf(u) => b.leaf(u.clone()),
            Shape::Decision { owner, depth, kids } => {
                let children: Vec<(u32, NodeId)> = kids
                    .iter()
                    .enumerate()
                    .map(|(i, k)| (i as u32, emit(k, b, rng, imperfect, open, next)))
                    .collect();
                let key = (*owner, *depth, kids.len());
                let pool = open.entry(key).or_default();
                let set = if imperfect && !pool.is_empty() && rng.gen_bool(0.5) {
                    *pool.choose(rng).unwrap()
                } else {
                    *next += 1;
                    pool.push(*next - 1);
                    *next - 1
                };
                b.decision(PlayerId(*owner), set, children)
            }
        }
    }
    let r = emit(&root, &mut b, rng, spec.imperfect, &mut open, &mut next);
    GameTree::build(b, r, spec.players).expect("generated games are valid")
}

/// Uniformly random pure profile; with `mixed`, some sets get a two-point mix.
pub fn random_profile(rng: &mut TestRng, game: &GameTree, mixed: bool) -> StrategyProfile {
    let mut p = StrategyProfile::new();
    for (&id, set) in game.info_sets() {
        if mixed && set.labels.len() > 1 && rng.gen_bool(0.3) {
            let mut ls = set.labels.clone();
            ls.shuffle(rng);
            p.set(id, ActionDist::uniform(&ls[..2]));
        } else {
            p.set_pure(id, *set.labels.choose(rng).unwrap());
        }
    }
    p
}

/// All pure profiles of a game, in mixed-radix order.
pub fn all_pure_profiles(game: &GameTree) -> Vec<StrategyProfile> {
    let sets: Vec<(u32, Vec<u32>)> = game.info_sets().iter().map(|(&id, s)| (id, s.labels.clone())).collect();
    let mut out = vec![StrategyProfile::new()];
    for (id, labels) in sets {
        let mut next = Vec::with_capacity(out.len() * labels.len());
        for p in &out {
            for &l in &labels {
                let mut q = p.clone();
                q.set_pure(id, l);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

pub fn profile_space(game: &GameTree) -> u128 {
    game.info_sets().values().map(|s| s.labels.len() as u128).product()
}

pub fn report(criterion: u32, passed: bool, detail: impl std::fmt::Display) {
    println!(
        "ACCEPTANCE {criterion}: {} -- {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
}
