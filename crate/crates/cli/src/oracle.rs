//! Oracle comparison on random perfect-information games: backward
//! induction versus the subgame-perfect subset of brute-force enumeration.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use popsicle_core::equilibrium::{
    enumerate_equilibria, filter_subgame_perfect, solve_backward_induction, BruteOptions, TieRule,
};
use popsicle_core::game::{GameBuilder, NodeId};
use popsicle_core::rational::ratio;
use popsicle_core::{DeviationSpace, GameTree, PlayerId, StrategyProfile, UtilityVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{OracleConfig, ScenarioConfig};
use crate::error::CliResult;
use crate::run::{csv_text, Outcome};

/// Games whose pure profile space exceeds this are redrawn.
const MAX_PROFILES: u128 = 4096;

const UTILITIES: [(i64, i64); 6] = [(0, 1), (1, 2), (1, 1), (2, 1), (-1, 1), (1, 3)];

fn random_game(rng: &mut ChaCha8Rng, players: usize, spec: &OracleConfig) -> GameTree {
    fn node(
        rng: &mut ChaCha8Rng,
        b: &mut GameBuilder,
        players: usize,
        spec: &OracleConfig,
        left: &mut usize,
        next_set: &mut u32,
        depth: usize,
    ) -> NodeId {
        if *left == 0 || (depth > 0 && rng.gen_bool(0.35)) {
            let u = (0..players)
                .map(|_| {
                    let (a, d) = UTILITIES[rng.gen_range(0..UTILITIES.len())];
                    ratio(a, d)
                })
                .collect();
            return b.leaf(UtilityVector(u));
        }
        *left -= 1;
        let k = rng.gen_range(2..=spec.max_actions);
        let owner = PlayerId(rng.gen_range(0..players));
        let kids = (0..k)
            .map(|i| (i as u32, node(rng, b, players, spec, left, next_set, depth + 1)))
            .collect();
        *next_set += 1;
        b.decision(owner, *next_set - 1, kids)
    }
    let mut b = GameBuilder::new();
    let mut left = spec.max_decisions;
    let mut next_set = 0;
    let root = node(rng, &mut b, players, spec, &mut left, &mut next_set, 0);
    GameTree::build(b, root, players).expect("generated games are valid")
}

fn profile_space(g: &GameTree) -> u128 {
    g.info_sets().values().map(|s| s.labels.len() as u128).product()
}

pub fn run(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let spec = &cfg.oracle;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::new();
    let mut mismatches = 0;
    while rows.len() < spec.games {
        let players = rng.gen_range(2..=3);
        let g = random_game(&mut rng, players, spec);
        if profile_space(&g) > MAX_PROFILES {
            continue;
        }
        let bi: BTreeSet<StrategyProfile> = solve_backward_induction(&g, TieRule::KeepAll, 1 << 20)?
            .into_iter()
            .collect();
        let space = DeviationSpace::exhaustive(players);
        let brute = enumerate_equilibria(&g, &space, &BruteOptions::default())?;
        let spe: BTreeSet<StrategyProfile> = filter_subgame_perfect(&g, &space, brute)?
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        let equal = bi == spe;
        mismatches += usize::from(!equal);
        rows.push(vec![
            rows.len().to_string(),
            players.to_string(),
            g.decision_count().to_string(),
            bi.len().to_string(),
            spe.len().to_string(),
            equal.to_string(),
        ]);
    }
    let mut o = Outcome::default();
    writeln!(
        o.summary,
        "{} games (seed {}): {} mismatches between backward induction and filtered brute force",
        rows.len(),
        spec.seed,
        mismatches
    )
    .unwrap();
    if mismatches > 0 {
        o.failure = Some(format!("{mismatches} games disagree"));
    }
    o.file(
        "oracle.csv",
        csv_text(
            &["game", "players", "decisions", "backward_induction", "brute_force_spe", "equal"],
            &rows,
        ),
    );
    Ok(o)
}
