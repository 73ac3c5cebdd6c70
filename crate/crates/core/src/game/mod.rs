//! Extensive-form games of imperfect information with exact utilities.
//!
//! Trees are stored as arenas in preorder, so the subtree of node `v` is the
//! contiguous id range `v..subtree_end(v)`. Trees are immutable once built;
//! derived games (cuts, expansions) are fresh copies.

mod eval;
mod profile;
mod serial;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub use eval::{expected_utility, expected_utility_from as eval_from, play, play_path};
pub use profile::{ActionDist, StrategyProfile};
pub use serial::{GameDoc, NodeDoc};

pub type NodeId = usize;
pub type InfoSetId = u32;
pub type ActionLabel = u32;

/// Player index: 0 is the buyer, 1..=n are the vendors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub usize);

impl PlayerId {
    pub const BUYER: PlayerId = PlayerId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One exact utility per player, indexed by `PlayerId`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UtilityVector(pub Vec<Rational>);

impl UtilityVector {
    pub fn zeros(players: usize) -> Self {
        UtilityVector(vec![rational::zero(); players])
    }

    pub fn from_ints(values: &[i64]) -> Self {
        UtilityVector(values.iter().map(|&v| rational::int(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, player: PlayerId) -> &Rational {
        &self.0[player.0]
    }

    pub fn add_scaled(&mut self, other: &UtilityVector, weight: &Rational) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b * weight;
        }
    }

    pub fn total(&self) -> Rational {
        self.0.iter().fold(rational::zero(), |acc, v| acc + v)
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(rational::format).collect()
    }
}

impl fmt::Display for UtilityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

impl Serialize for UtilityVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rational::serde_vec::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for UtilityVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        rational::serde_vec::deserialize(d).map(UtilityVector)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub label: ActionLabel,
    pub child: NodeId,
}

/// Annotation carried by each child edge of a commitment node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentChoice {
    pub name: String,
    /// Kept-action mask per information set of the game that was cut, `1` = kept.
    pub kept: BTreeMap<InfoSetId, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub owner: PlayerId,
    pub info_set: InfoSetId,
    pub actions: Vec<Edge>,
    /// Present on commitment nodes, parallel to `actions`.
    pub commitment: Option<Vec<CommitmentChoice>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Decision(Decision),
    Leaf(UtilityVector),
}

impl Node {
    pub fn as_decision(&self) -> Option<&Decision> {
        match self {
            Node::Decision(d) => Some(d),
            Node::Leaf(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfoSet {
    pub owner: PlayerId,
    pub labels: Vec<ActionLabel>,
    pub members: Vec<NodeId>,
    /// Id of the corresponding information set in the un-expanded game.
    /// `None` for commitment nodes.
    pub base: Option<InfoSetId>,
}

/// Arena builder. Children must be added before their parents.
#[derive(Default, Debug, Clone)]
pub struct GameBuilder {
    nodes: Vec<Node>,
    bases: BTreeMap<InfoSetId, Option<InfoSetId>>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, utilities: UtilityVector) -> NodeId {
        self.nodes.push(Node::Leaf(utilities));
        self.nodes.len() - 1
    }

    pub fn decision(
        &mut self,
        owner: PlayerId,
        info_set: InfoSetId,
        actions: Vec<(ActionLabel, NodeId)>,
    ) -> NodeId {
        self.push_decision(owner, info_set, actions, None)
    }

    pub fn commitment(
        &mut self,
        owner: PlayerId,
        info_set: InfoSetId,
        actions: Vec<(ActionLabel, NodeId)>,
        choices: Vec<CommitmentChoice>,
    ) -> NodeId {
        self.bases.insert(info_set, None);
        self.push_decision(owner, info_set, actions, Some(choices))
    }

    fn push_decision(
        &mut self,
        owner: PlayerId,
        info_set: InfoSetId,
        actions: Vec<(ActionLabel, NodeId)>,
        commitment: Option<Vec<CommitmentChoice>>,
    ) -> NodeId {
        let actions = actions
            .into_iter()
            .map(|(label, child)| Edge { label, child })
            .collect();
        self.nodes.push(Node::Decision(Decision {
            owner,
            info_set,
            actions,
            commitment,
        }));
        self.nodes.len() - 1
    }

    /// Records which un-expanded information set `info_set` copies.
    pub fn set_base(&mut self, info_set: InfoSetId, base: Option<InfoSetId>) {
        self.bases.insert(info_set, base);
    }

    /// Renumbers the nodes reachable from `root` in preorder and builds the
    /// information-set table. Does not validate; see [`GameTree::validate`].
    pub fn finish(self, root: NodeId, players: usize) -> GameTree {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            if let Node::Decision(d) = &self.nodes[v] {
                for e in d.actions.iter().rev() {
                    stack.push(e.child);
                }
            }
        }
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        for (i, &v) in order.iter().enumerate() {
            new_id[v] = i;
        }
        let mut nodes = Vec::with_capacity(order.len());
        for &v in &order {
            let node = match &self.nodes[v] {
                Node::Leaf(u) => Node::Leaf(u.clone()),
                Node::Decision(d) => Node::Decision(Decision {
                    owner: d.owner,
                    info_set: d.info_set,
                    actions: d
                        .actions
                        .iter()
                        .map(|e| Edge {
                            label: e.label,
                            child: new_id[e.child],
                        })
                        .collect(),
                    commitment: d.commitment.clone(),
                }),
            };
            nodes.push(node);
        }
        GameTree::from_nodes(nodes, players, &self.bases)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameTree {
    nodes: Vec<Node>,
    players: usize,
    info_sets: BTreeMap<InfoSetId, InfoSet>,
    subtree_end: Vec<NodeId>,
}

impl GameTree {
    /// `nodes` must already be in preorder with the root at index 0.
    fn from_nodes(
        nodes: Vec<Node>,
        players: usize,
        bases: &BTreeMap<InfoSetId, Option<InfoSetId>>,
    ) -> Self {
        let mut info_sets: BTreeMap<InfoSetId, InfoSet> = BTreeMap::new();
        for (v, node) in nodes.iter().enumerate() {
            if let Node::Decision(d) = node {
                info_sets
                    .entry(d.info_set)
                    .or_insert_with(|| InfoSet {
                        owner: d.owner,
                        labels: d.actions.iter().map(|e| e.label).collect(),
                        members: Vec::new(),
                        base: bases.get(&d.info_set).copied().unwrap_or(Some(d.info_set)),
                    })
                    .members
                    .push(v);
            }
        }
        let mut subtree_end = vec![0; nodes.len()];
        for v in (0..nodes.len()).rev() {
            subtree_end[v] = match &nodes[v] {
                Node::Leaf(_) => v + 1,
                Node::Decision(d) => d
                    .actions
                    .iter()
                    .map(|e| subtree_end[e.child])
                    .max()
                    .unwrap_or(v + 1),
            };
        }
        GameTree {
            nodes,
            players,
            info_sets,
            subtree_end,
        }
    }

    /// A game consisting of a single outcome.
    pub fn single_leaf(utilities: UtilityVector) -> Self {
        let players = utilities.len();
        let mut b = GameBuilder::new();
        let root = b.leaf(utilities);
        b.finish(root, players)
    }

    /// Builds and validates.
    pub fn build(builder: GameBuilder, root: NodeId, players: usize) -> Result<Self> {
        let tree = builder.finish(root, players);
        tree.validate().into_result()?;
        Ok(tree)
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn decision(&self, id: NodeId) -> Option<&Decision> {
        self.nodes[id].as_decision()
    }

    pub fn info_sets(&self) -> &BTreeMap<InfoSetId, InfoSet> {
        &self.info_sets
    }

    pub fn info_set(&self, id: InfoSetId) -> Option<&InfoSet> {
        self.info_sets.get(&id)
    }

    /// Exclusive end of the preorder range spanned by `v`'s subtree.
    pub fn subtree_end(&self, v: NodeId) -> NodeId {
        self.subtree_end[v]
    }

    pub fn in_subtree(&self, root: NodeId, v: NodeId) -> bool {
        v >= root && v < self.subtree_end[root]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    pub fn decision_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    pub fn info_sets_of(&self, player: PlayerId) -> impl Iterator<Item = (InfoSetId, &InfoSet)> {
        self.info_sets
            .iter()
            .filter(move |(_, s)| s.owner == player)
            .map(|(&id, s)| (id, s))
    }

    /// Information sets whose members all lie in `root`'s subtree.
    pub fn info_sets_within(&self, root: NodeId) -> BTreeSet<InfoSetId> {
        (root..self.subtree_end[root])
            .filter_map(|v| self.decision(v).map(|d| d.info_set))
            .collect()
    }

    /// Parent of every node (`None` for the root).
    pub fn parents(&self) -> Vec<Option<(NodeId, ActionLabel)>> {
        let mut parents = vec![None; self.nodes.len()];
        for (v, node) in self.nodes.iter().enumerate() {
            if let Node::Decision(d) = node {
                for e in &d.actions {
                    parents[e.child] = Some((v, e.label));
                }
            }
        }
        parents
    }

    /// Flags the decision nodes whose subtree contains every information set
    /// it touches completely.
    pub fn subgame_roots(&self) -> Vec<bool> {
        let n = self.nodes.len();
        let mut lo = vec![usize::MAX; n];
        let mut hi = vec![0usize; n];
        for v in (0..n).rev() {
            if let Node::Decision(d) = &self.nodes[v] {
                let members = &self.info_sets[&d.info_set].members;
                let mut l = members[0];
                let mut h = *members.last().unwrap();
                for e in &d.actions {
                    l = l.min(lo[e.child]);
                    h = h.max(hi[e.child]);
                }
                lo[v] = l;
                hi[v] = h;
            }
        }
        (0..n)
            .map(|v| {
                matches!(self.nodes[v], Node::Decision(_))
                    && lo[v] >= v
                    && hi[v] < self.subtree_end[v]
            })
            .collect()
    }

    /// Decision nodes rooting a subgame, in preorder.
    pub fn list_subgames(&self) -> Vec<NodeId> {
        self.subgame_roots()
            .into_iter()
            .enumerate()
            .filter_map(|(v, is_root)| is_root.then_some(v))
            .collect()
    }

    /// Copies the subtree at `root` into a standalone game.
    pub fn subgame(&self, root: NodeId) -> GameTree {
        let end = self.subtree_end[root];
        let nodes = self.nodes[root..end]
            .iter()
            .map(|n| match n {
                Node::Leaf(u) => Node::Leaf(u.clone()),
                Node::Decision(d) => Node::Decision(Decision {
                    actions: d
                        .actions
                        .iter()
                        .map(|e| Edge {
                            label: e.label,
                            child: e.child - root,
                        })
                        .collect(),
                    ..d.clone()
                }),
            })
            .collect();
        let bases = self
            .info_sets
            .iter()
            .map(|(&id, s)| (id, s.base))
            .collect();
        GameTree::from_nodes(nodes, self.players, &bases)
    }

    pub fn is_perfect_information(&self) -> bool {
        self.info_sets.values().all(|s| s.members.len() == 1)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (v, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Leaf(u) => {
                    if u.len() != self.players {
                        violations.push(Violation::UtilityArity {
                            node: v,
                            found: u.len(),
                            expected: self.players,
                        });
                    }
                }
                Node::Decision(d) => {
                    if d.actions.is_empty() {
                        violations.push(Violation::NoActions { node: v });
                    }
                    let labels: BTreeSet<_> = d.actions.iter().map(|e| e.label).collect();
                    if labels.len() != d.actions.len() {
                        violations.push(Violation::DuplicateLabel { node: v });
                    }
                    if d.owner.0 >= self.players {
                        violations.push(Violation::OwnerOutOfRange { node: v });
                    }
                    if let Some(choices) = &d.commitment {
                        if choices.len() != d.actions.len() {
                            violations.push(Violation::CommitmentAnnotation { node: v });
                        }
                    }
                }
            }
        }
        for (&id, set) in &self.info_sets {
            let mut owner_bad = false;
            let mut count_bad = false;
            let mut label_bad = false;
            for &m in &set.members {
                let d = self.decision(m).expect("members are decision nodes");
                owner_bad |= d.owner != set.owner;
                if d.actions.len() != set.labels.len() {
                    count_bad = true;
                } else if d.actions.iter().zip(&set.labels).any(|(e, &l)| e.label != l) {
                    label_bad = true;
                }
            }
            if owner_bad {
                violations.push(Violation::OwnerMismatch { info_set: id });
            }
            if count_bad {
                violations.push(Violation::ActionCountMismatch { info_set: id });
            }
            if label_bad {
                violations.push(Violation::ActionLabelMismatch { info_set: id });
            }
            let mut members = set.members.clone();
            members.sort_unstable();
            if members
                .windows(2)
                .any(|w| self.in_subtree(w[0], w[1]))
            {
                violations.push(Violation::SamePath { info_set: id });
            }
        }
        ValidationReport { violations }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoActions { node: NodeId },
    DuplicateLabel { node: NodeId },
    OwnerOutOfRange { node: NodeId },
    OwnerMismatch { info_set: InfoSetId },
    ActionCountMismatch { info_set: InfoSetId },
    ActionLabelMismatch { info_set: InfoSetId },
    SamePath { info_set: InfoSetId },
    UtilityArity { node: NodeId, found: usize, expected: usize },
    CommitmentAnnotation { node: NodeId },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidGame(format!("{:?}", self.violations)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn leaf(b: &mut GameBuilder, u: &[i64]) -> NodeId {
        b.leaf(UtilityVector::from_ints(u))
    }

    /// Player 2 at the root, then player 1, then player 2 again (the
    /// three-node example used for commitment expansion).
    pub(crate) fn three_node_game() -> GameTree {
        let mut b = GameBuilder::new();
        let l1 = leaf(&mut b, &[0, 1, 2]);
        let l2 = leaf(&mut b, &[0, 2, 1]);
        let inner = b.decision(PlayerId(2), 2, vec![(0, l1), (1, l2)]);
        let l3 = leaf(&mut b, &[0, 3, 0]);
        let mid = b.decision(PlayerId(1), 1, vec![(0, inner), (1, l3)]);
        let root = b.decision(PlayerId(2), 0, vec![(0, mid)]);
        GameTree::build(b, root, 3).unwrap()
    }

    #[test]
    fn single_leaf_is_valid() {
        let g = GameTree::single_leaf(UtilityVector::from_ints(&[1, 2, 3]));
        assert!(g.validate().is_ok());
        assert!(g.list_subgames().is_empty());
    }

    #[test]
    fn action_count_mismatch_is_reported() {
        let mut b = GameBuilder::new();
        let a = leaf(&mut b, &[0, 0]);
        let c = leaf(&mut b, &[0, 0]);
        let d = leaf(&mut b, &[0, 0]);
        let e = leaf(&mut b, &[0, 0]);
        let f = leaf(&mut b, &[0, 0]);
        let x = b.decision(PlayerId(1), 7, vec![(0, a), (1, c)]);
        let y = b.decision(PlayerId(1), 7, vec![(0, d), (1, e), (2, f)]);
        let root = b.decision(PlayerId(0), 0, vec![(0, x), (1, y)]);
        let g = b.finish(root, 2);
        let report = g.validate();
        assert!(report
            .violations
            .contains(&Violation::ActionCountMismatch { info_set: 7 }));
    }

    #[test]
    fn same_path_and_arity_violations() {
        let mut b = GameBuilder::new();
        let a = leaf(&mut b, &[0]);
        let c = leaf(&mut b, &[0, 0]);
        let inner = b.decision(PlayerId(1), 3, vec![(0, a)]);
        let root = b.decision(PlayerId(1), 3, vec![(0, inner), (1, c)]);
        let g = b.finish(root, 2);
        let v = g.validate().violations;
        assert!(v.contains(&Violation::SamePath { info_set: 3 }));
        assert!(v.iter().any(|x| matches!(x, Violation::UtilityArity { .. })));
    }

    #[test]
    fn three_node_game_is_valid_and_perfect_information() {
        let g = three_node_game();
        assert!(g.validate().is_ok());
        assert!(g.is_perfect_information());
        assert_eq!(g.list_subgames(), vec![0, 1, 2]);
        assert_eq!(g.subtree_end(0), g.len());
    }

    #[test]
    fn subgame_copy_is_standalone() {
        let g = three_node_game();
        let sub = g.subgame(1);
        assert!(sub.validate().is_ok());
        assert_eq!(sub.decision_count(), 2);
        assert_eq!(sub.leaf_count(), 3);
        assert_eq!(g.node(g.len() - 1), sub.node(sub.len() - 1));
        let _ = int(0);
    }
}
