//! Equilibrium verification and enumeration.
//!
//! Verification quantifies over pure deviations: with exact utilities and a
//! finite game, any profitable mixed deviation implies a profitable pure one.
//! Best responses are computed by a single backward pass whenever every
//! information set of the deviator is reached at most once with positive
//! probability, and by exhaustive enumeration of the deviator's reachable
//! information sets otherwise.

mod backward;
mod brute;
mod spe;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{
    eval_from, ActionLabel, Decision, GameTree, InfoSetId, Node, NodeId, PlayerId,
    StrategyProfile, UtilityVector,
};
use crate::rational::{self, Rational};

pub use backward::{solve_backward_induction, TieRule};
pub use brute::{enumerate_equilibria, filter_subgame_perfect, BruteOptions};
pub use spe::{Outcome, SpeClass, SpeOptions, SpeSolver};

/// Default cap on joint assignments tried by exhaustive fallbacks.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 20;

/// Which deviations of one player an equilibrium check considers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    /// Every pure strategy.
    Exhaustive,
    /// Changing the action at a single information set.
    RawActionsOnly,
    /// Every pure strategy, except that at the player's commitment nodes only
    /// the named catalog entries (and the current choice) are available.
    Schema(BTreeSet<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeviationSpace {
    pub per_player: Vec<DeviationKind>,
}

impl DeviationSpace {
    pub fn exhaustive(players: usize) -> Self {
        DeviationSpace {
            per_player: vec![DeviationKind::Exhaustive; players],
        }
    }

    pub fn raw_actions(players: usize) -> Self {
        DeviationSpace {
            per_player: vec![DeviationKind::RawActionsOnly; players],
        }
    }

    pub fn kind(&self, player: PlayerId) -> &DeviationKind {
        self.per_player
            .get(player.0)
            .unwrap_or(&DeviationKind::Exhaustive)
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .per_player
            .iter()
            .enumerate()
            .map(|(i, k)| match k {
                DeviationKind::Exhaustive => format!("{i}:exhaustive"),
                DeviationKind::RawActionsOnly => format!("{i}:raw"),
                DeviationKind::Schema(names) => format!("{i}:schema[{}]", names.len()),
            })
            .collect();
        parts.join(" ")
    }
}

/// A profitable deviation. Replaying `deviation` over the checked profile
/// from `subgame_root` gives the deviator exactly `deviator_utility`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub player: PlayerId,
    pub subgame_root: NodeId,
    pub deviation: BTreeMap<InfoSetId, ActionLabel>,
    #[serde(with = "rational::serde_str")]
    pub deviator_utility: Rational,
    #[serde(with = "rational::serde_str")]
    pub gain: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquilibriumReport {
    pub verdict: bool,
    /// Set by subgame-perfection checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgame_perfect: Option<bool>,
    pub utilities: UtilityVector,
    pub witness: Option<Witness>,
    pub scope: String,
}

impl EquilibriumReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

impl fmt::Display for EquilibriumReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "u = {}; equilibrium: {}",
            self.utilities,
            if self.verdict { "yes" } else { "no" }
        )?;
        if let Some(w) = &self.witness {
            write!(
                f,
                " (player {} gains {} at node {})",
                w.player,
                rational::format(&w.gain),
                w.subgame_root
            )?;
        }
        Ok(())
    }
}

fn allowed_labels(d: &Decision, player: PlayerId, kind: &DeviationKind, profile: &StrategyProfile) -> Vec<ActionLabel> {
    match (kind, &d.commitment) {
        (DeviationKind::Schema(names), Some(choices)) if d.owner == player => d
            .actions
            .iter()
            .zip(choices)
            .filter(|(e, c)| {
                names.contains(&c.name)
                    || profile
                        .get(d.info_set)
                        .is_some_and(|dist| !dist.prob(e.label).is_zero())
            })
            .map(|(e, _)| e.label)
            .collect(),
        _ => d.actions.iter().map(|e| e.label).collect(),
    }
}

/// Best pure deviation of `player` from `start`: the player's value and the
/// information sets where the deviation differs from `profile`.
pub fn best_response(
    game: &GameTree,
    profile: &StrategyProfile,
    player: PlayerId,
    start: NodeId,
    kind: &DeviationKind,
) -> Result<(Rational, BTreeMap<InfoSetId, ActionLabel>)> {
    // Reach pass: the deviator may take any allowed action, others follow the
    // profile. Record where each deviator information set is reached.
    let mut reached: BTreeMap<InfoSetId, Vec<NodeId>> = BTreeMap::new();
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        if let Node::Decision(d) = game.node(v) {
            if d.owner == player {
                reached.entry(d.info_set).or_default().push(v);
                for l in allowed_labels(d, player, kind, profile) {
                    stack.push(child_of(d, l));
                }
            } else {
                let dist = profile
                    .get(d.info_set)
                    .ok_or(Error::MissingAssignment(d.info_set))?;
                for l in dist.support() {
                    stack.push(child_of(d, l));
                }
            }
        }
    }

    let differs = |set: InfoSetId, label: ActionLabel| {
        profile.get(set).and_then(|d| d.pure_action()) != Some(label)
    };

    if reached.values().all(|nodes| nodes.len() <= 1) {
        let mut choice = BTreeMap::new();
        let value = br_value(game, profile, player, start, kind, &mut choice)?;
        choice.retain(|&s, &mut l| differs(s, l));
        return Ok((value, choice));
    }

    // Exhaustive fallback over the reachable deviator information sets.
    let sets: Vec<(InfoSetId, Vec<ActionLabel>)> = reached
        .keys()
        .map(|&s| {
            let d = game.decision(game.info_set(s).unwrap().members[0]).unwrap();
            (s, allowed_labels(d, player, kind, profile))
        })
        .collect();
    let total: u128 = sets.iter().map(|(_, ls)| ls.len() as u128).product();
    if total > DEFAULT_ENUMERATION_BUDGET as u128 {
        return Err(Error::budget("best-response enumeration", total, DEFAULT_ENUMERATION_BUDGET));
    }
    let mut best: Option<(Rational, BTreeMap<InfoSetId, ActionLabel>)> = None;
    let mut idx = vec![0usize; sets.len()];
    loop {
        let assignment: BTreeMap<InfoSetId, ActionLabel> = sets
            .iter()
            .zip(&idx)
            .map(|((s, ls), &i)| (*s, ls[i]))
            .collect();
        let trial = profile.with_overrides(&assignment);
        let value = eval_from(game, &trial, start)?.0[player.0].clone();
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, assignment));
        }
        // advance mixed-radix counter, last set fastest
        let mut k = sets.len();
        loop {
            if k == 0 {
                let (v, mut a) = best.expect("at least one assignment");
                a.retain(|&s, &mut l| differs(s, l));
                return Ok((v, a));
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

fn child_of(d: &Decision, label: ActionLabel) -> NodeId {
    d.actions
        .iter()
        .find(|e| e.label == label)
        .map(|e| e.child)
        .expect("label present at node")
}

fn br_value(
    game: &GameTree,
    profile: &StrategyProfile,
    player: PlayerId,
    v: NodeId,
    kind: &DeviationKind,
    choice: &mut BTreeMap<InfoSetId, ActionLabel>,
) -> Result<Rational> {
    match game.node(v) {
        Node::Leaf(u) => Ok(u.0[player.0].clone()),
        Node::Decision(d) if d.owner == player => {
            let mut best: Option<(Rational, ActionLabel)> = None;
            for l in allowed_labels(d, player, kind, profile) {
                let val = br_value(game, profile, player, child_of(d, l), kind, choice)?;
                if best.as_ref().is_none_or(|(b, _)| val > *b) {
                    best = Some((val, l));
                }
            }
            let (val, l) = best.expect("decision nodes have actions");
            choice.insert(d.info_set, l);
            Ok(val)
        }
        Node::Decision(d) => {
            let dist = profile
                .get(d.info_set)
                .ok_or(Error::MissingAssignment(d.info_set))?;
            let mut acc = Rational::zero();
            for (l, p) in dist.entries() {
                acc += p * br_value(game, profile, player, child_of(d, *l), kind, choice)?;
            }
            Ok(acc)
        }
    }
}

fn first_raw_deviation(
    game: &GameTree,
    profile: &StrategyProfile,
    player: PlayerId,
    start: NodeId,
    current: &Rational,
) -> Result<Option<(Rational, BTreeMap<InfoSetId, ActionLabel>)>> {
    for set in game.info_sets_within(start) {
        let info = game.info_set(set).unwrap();
        if info.owner != player {
            continue;
        }
        for &l in &info.labels {
            if profile.get(set).and_then(|d| d.pure_action()) == Some(l) {
                continue;
            }
            let dev: BTreeMap<_, _> = [(set, l)].into_iter().collect();
            let value = eval_from(game, &profile.with_overrides(&dev), start)?.0[player.0].clone();
            if value > *current {
                return Ok(Some((value, dev)));
            }
        }
    }
    Ok(None)
}

fn check_at(
    game: &GameTree,
    profile: &StrategyProfile,
    space: &DeviationSpace,
    start: NodeId,
) -> Result<(UtilityVector, Option<Witness>)> {
    let utilities = eval_from(game, profile, start)?;
    for p in 0..game.players() {
        let player = PlayerId(p);
        let current = &utilities.0[p];
        let found = match space.kind(player) {
            DeviationKind::RawActionsOnly => {
                first_raw_deviation(game, profile, player, start, current)?
            }
            kind => {
                let (value, dev) = best_response(game, profile, player, start, kind)?;
                (value > *current).then_some((value, dev))
            }
        };
        if let Some((value, deviation)) = found {
            let gain = &value - current;
            return Ok((
                utilities,
                Some(Witness {
                    player,
                    subgame_root: start,
                    deviation,
                    deviator_utility: value,
                    gain,
                }),
            ));
        }
    }
    Ok((utilities, None))
}

/// Nash check at the root.
pub fn is_equilibrium(
    game: &GameTree,
    profile: &StrategyProfile,
    space: &DeviationSpace,
) -> Result<EquilibriumReport> {
    let (utilities, witness) = check_at(game, profile, space, game.root())?;
    Ok(EquilibriumReport {
        verdict: witness.is_none(),
        subgame_perfect: None,
        utilities,
        witness,
        scope: space.label(),
    })
}

/// Equilibrium check in every subgame, in preorder; the first failing
/// subgame supplies the witness.
pub fn is_subgame_perfect(
    game: &GameTree,
    profile: &StrategyProfile,
    space: &DeviationSpace,
) -> Result<EquilibriumReport> {
    let utilities = eval_from(game, profile, game.root())?;
    let mut roots = game.list_subgames();
    if roots.is_empty() {
        roots.push(game.root());
    }
    for r in roots {
        if matches!(game.node(r), Node::Leaf(_)) {
            continue;
        }
        let (_, witness) = check_at(game, profile, space, r)?;
        if witness.is_some() {
            return Ok(EquilibriumReport {
                verdict: false,
                subgame_perfect: Some(false),
                utilities,
                witness,
                scope: space.label(),
            });
        }
    }
    Ok(EquilibriumReport {
        verdict: true,
        subgame_perfect: Some(true),
        utilities,
        witness: None,
        scope: space.label(),
    })
}

/// Replays a witness and returns the deviator's utility.
pub fn replay_witness(game: &GameTree, profile: &StrategyProfile, w: &Witness) -> Result<Rational> {
    let trial = profile.with_overrides(&w.deviation);
    Ok(eval_from(game, &trial, w.subgame_root)?.0[w.player.0].clone())
}
