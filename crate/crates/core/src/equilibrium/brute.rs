use crate::error::{Error, Result};
use crate::game::{ActionDist, GameTree, InfoSetId, PlayerId, StrategyProfile};
use crate::rational;

use super::{is_equilibrium, is_subgame_perfect, DeviationSpace, EquilibriumReport};

#[derive(Clone, Debug)]
pub struct BruteOptions {
    /// Profiles tried at most.
    pub budget: u64,
    /// Also try 1/2-1/2 mixtures over pairs of actions for this player.
    pub mixing_player: Option<PlayerId>,
}

impl Default for BruteOptions {
    fn default() -> Self {
        BruteOptions {
            budget: super::DEFAULT_ENUMERATION_BUDGET,
            mixing_player: None,
        }
    }
}

/// Tests every profile in the product space and keeps the equilibria, in
/// mixed-radix order over information-set ids (last set varies fastest).
pub fn enumerate_equilibria(
    game: &GameTree,
    space: &DeviationSpace,
    options: &BruteOptions,
) -> Result<Vec<(StrategyProfile, EquilibriumReport)>> {
    let sets: Vec<(InfoSetId, Vec<ActionDist>)> = game
        .info_sets()
        .iter()
        .map(|(&id, s)| {
            let mut opts: Vec<ActionDist> = s.labels.iter().map(|&l| ActionDist::pure(l)).collect();
            if options.mixing_player == Some(s.owner) {
                let half = rational::ratio(1, 2);
                for i in 0..s.labels.len() {
                    for j in i + 1..s.labels.len() {
                        opts.push(
                            ActionDist::new(vec![(s.labels[i], half.clone()), (s.labels[j], half.clone())])
                                .expect("half-half mixture"),
                        );
                    }
                }
            }
            (id, opts)
        })
        .collect();
    let total: u128 = sets.iter().map(|(_, o)| o.len() as u128).product();
    if total > options.budget as u128 {
        return Err(Error::budget("pure profile space", total, options.budget));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; sets.len()];
    loop {
        let mut profile = StrategyProfile::new();
        for ((s, opts), &i) in sets.iter().zip(&idx) {
            profile.set(*s, opts[i].clone());
        }
        let report = is_equilibrium(game, &profile, space)?;
        if report.verdict {
            out.push((profile, report));
        }
        let mut k = sets.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < sets[k].1.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// The subgame-perfect members of an enumeration.
pub fn filter_subgame_perfect(
    game: &GameTree,
    space: &DeviationSpace,
    equilibria: Vec<(StrategyProfile, EquilibriumReport)>,
) -> Result<Vec<(StrategyProfile, EquilibriumReport)>> {
    let mut out = Vec::new();
    for (p, _) in equilibria {
        let report = is_subgame_perfect(game, &p, space)?;
        if report.verdict {
            out.push((p, report));
        }
    }
    Ok(out)
}
