use crate::error::{Error, Result};
use crate::game::{ActionDist, ActionLabel, GameTree, Node, NodeId, StrategyProfile, UtilityVector};
use crate::rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieRule {
    /// Every pure subgame-perfect profile.
    KeepAll,
    /// One profile; ties go to the first action.
    FirstIndex,
    /// One profile mixing uniformly over tied actions.
    Uniform,
}

/// Subgame-perfect profiles of a perfect-information game by backward
/// induction with exact argmax. `budget` caps the number of partial profiles
/// kept at any node under `KeepAll`.
pub fn solve_backward_induction(
    game: &GameTree,
    tie_rule: TieRule,
    budget: usize,
) -> Result<Vec<StrategyProfile>> {
    if let Some((&id, _)) = game.info_sets().iter().find(|(_, s)| s.members.len() > 1) {
        return Err(Error::ImperfectInformation(id));
    }
    Ok(solve(game, game.root(), tie_rule, budget)?
        .into_iter()
        .map(|(_, p)| p)
        .collect())
}

fn solve(
    game: &GameTree,
    v: NodeId,
    tie_rule: TieRule,
    budget: usize,
) -> Result<Vec<(UtilityVector, StrategyProfile)>> {
    let d = match game.node(v) {
        Node::Leaf(u) => return Ok(vec![(u.clone(), StrategyProfile::new())]),
        Node::Decision(d) => d,
    };
    let mover = d.owner.0;
    let children: Vec<Vec<(UtilityVector, StrategyProfile)>> = d
        .actions
        .iter()
        .map(|e| solve(game, e.child, tie_rule, budget))
        .collect::<Result<_>>()?;

    if tie_rule != TieRule::KeepAll {
        let values: Vec<&UtilityVector> = children.iter().map(|c| &c[0].0).collect();
        let best = values.iter().map(|u| &u.0[mover]).max().unwrap().clone();
        let tied: Vec<usize> = (0..values.len())
            .filter(|&i| values[i].0[mover] == best)
            .collect();
        let chosen: Vec<usize> = match tie_rule {
            TieRule::FirstIndex => vec![tied[0]],
            _ => tied,
        };
        let mut profile = StrategyProfile::new();
        for c in &children {
            profile.extend(&c[0].1);
        }
        let labels: Vec<ActionLabel> = chosen.iter().map(|&i| d.actions[i].label).collect();
        profile.set(d.info_set, ActionDist::uniform(&labels));
        let w = rational::ratio(1, chosen.len() as i64);
        let mut u = UtilityVector::zeros(game.players());
        for &i in &chosen {
            u.add_scaled(values[i], &w);
        }
        return Ok(vec![(u, profile)]);
    }

    let total: u128 = children.iter().map(|c| c.len() as u128).product();
    if total > budget as u128 {
        return Err(Error::budget("backward-induction profiles", total, budget));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; children.len()];
    loop {
        let best = (0..children.len())
            .map(|i| &children[i][idx[i]].0 .0[mover])
            .max()
            .unwrap()
            .clone();
        for i in 0..children.len() {
            if children[i][idx[i]].0 .0[mover] != best {
                continue;
            }
            let mut profile = StrategyProfile::new();
            for (c, &j) in children.iter().zip(&idx) {
                profile.extend(&c[j].1);
            }
            profile.set_pure(d.info_set, d.actions[i].label);
            out.push((children[i][idx[i]].0.clone(), profile));
        }
        if out.len() > budget {
            return Err(Error::budget("backward-induction profiles", out.len(), budget));
        }
        let mut k = children.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < children[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}
