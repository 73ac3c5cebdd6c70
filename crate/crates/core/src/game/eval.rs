use num_traits::Zero;

use super::{ActionLabel, GameTree, Node, NodeId, StrategyProfile, UtilityVector};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Follows a pure profile from `start` and returns the visited
/// `(node, action)` pairs together with the leaf reached.
pub fn play_path(
    tree: &GameTree,
    profile: &StrategyProfile,
    start: NodeId,
) -> Result<(Vec<(NodeId, ActionLabel)>, NodeId)> {
    let mut v = start;
    let mut path = Vec::new();
    loop {
        match tree.node(v) {
            Node::Leaf(_) => return Ok((path, v)),
            Node::Decision(d) => {
                let dist = profile
                    .get(d.info_set)
                    .ok_or(Error::MissingAssignment(d.info_set))?;
                let label = dist.pure_action().ok_or(Error::NotPure(d.info_set))?;
                let edge = d
                    .actions
                    .iter()
                    .find(|e| e.label == label)
                    .ok_or_else(|| {
                        Error::InvalidProfile(format!(
                            "action {label} unavailable at information set {}",
                            d.info_set
                        ))
                    })?;
                path.push((v, label));
                v = edge.child;
            }
        }
    }
}

/// Utilities of the leaf reached by a pure profile.
pub fn play(tree: &GameTree, profile: &StrategyProfile) -> Result<UtilityVector> {
    let (_, leaf) = play_path(tree, profile, tree.root())?;
    match tree.node(leaf) {
        Node::Leaf(u) => Ok(u.clone()),
        Node::Decision(_) => unreachable!(),
    }
}

/// Exact expected utilities of a behavioral profile from node `start`.
pub fn expected_utility_from(
    tree: &GameTree,
    profile: &StrategyProfile,
    start: NodeId,
) -> Result<UtilityVector> {
    let mut acc = UtilityVector::zeros(tree.players());
    let mut stack: Vec<(NodeId, Rational)> = vec![(start, rational::one())];
    while let Some((v, weight)) = stack.pop() {
        match tree.node(v) {
            Node::Leaf(u) => acc.add_scaled(u, &weight),
            Node::Decision(d) => {
                let dist = profile
                    .get(d.info_set)
                    .ok_or(Error::MissingAssignment(d.info_set))?;
                for (label, p) in dist.entries() {
                    if p.is_zero() {
                        continue;
                    }
                    let edge = d.actions.iter().find(|e| e.label == *label).ok_or_else(|| {
                        Error::InvalidProfile(format!(
                            "action {label} unavailable at information set {}",
                            d.info_set
                        ))
                    })?;
                    stack.push((edge.child, &weight * p));
                }
            }
        }
    }
    Ok(acc)
}

pub fn expected_utility(tree: &GameTree, profile: &StrategyProfile) -> Result<UtilityVector> {
    expected_utility_from(tree, profile, tree.root())
}
