//! Cuts, the commitment expansion `C^i(G)` and nested expansion.
//!
//! A cut removes some of one player's actions, uniformly per information set
//! and leaving at least one action everywhere. `C^i(G)` prepends a node owned
//! by `i` whose children are the cut games. Every branch receives fresh
//! information-set ids (commitments are observed), each remembering the id of
//! the un-expanded set it copies.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::equilibrium::SpeSolver;
use crate::error::{Error, Result};
use crate::game::{
    ActionDist, ActionLabel, CommitmentChoice, GameBuilder, GameTree, InfoSetId, Node, NodeId, PlayerId,
    StrategyProfile,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentBudget {
    pub max_nodes: usize,
    pub max_cuts_per_node: u64,
}

impl Default for CommitmentBudget {
    fn default() -> Self {
        CommitmentBudget {
            max_nodes: 2_000_000,
            max_cuts_per_node: 1 << 16,
        }
    }
}

impl CommitmentBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_nodes == 0 || self.max_cuts_per_node == 0 {
            return Err(Error::InvalidParams("budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Kept actions of one player. Owned information sets missing from `kept`
/// keep everything.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cut {
    pub owner: PlayerId,
    pub kept: BTreeMap<InfoSetId, Vec<ActionLabel>>,
}

impl Cut {
    pub fn identity(owner: PlayerId) -> Self {
        Cut {
            owner,
            kept: BTreeMap::new(),
        }
    }

    /// Checks the cut against `tree` and normalizes the kept lists to the
    /// information set's label order.
    pub fn new(tree: &GameTree, owner: PlayerId, kept: BTreeMap<InfoSetId, Vec<ActionLabel>>) -> Result<Self> {
        let mut norm = BTreeMap::new();
        for (s, labels) in kept {
            let set = tree
                .info_set(s)
                .ok_or_else(|| Error::CutMismatch(format!("no information set {s}")))?;
            if set.owner != owner {
                return Err(Error::CutMismatch(format!(
                    "information set {s} belongs to player {}, not {}",
                    set.owner, owner
                )));
            }
            if labels.is_empty() {
                return Err(Error::CutMismatch(format!("cut removes every action at information set {s}")));
            }
            if let Some(l) = labels.iter().find(|l| !set.labels.contains(l)) {
                return Err(Error::CutMismatch(format!("information set {s} has no action {l}")));
            }
            let ordered: Vec<ActionLabel> = set.labels.iter().copied().filter(|l| labels.contains(l)).collect();
            norm.insert(s, ordered);
        }
        Ok(Cut { owner, kept: norm })
    }

    pub fn keeps(&self, set: InfoSetId, label: ActionLabel) -> bool {
        self.kept.get(&set).is_none_or(|k| k.contains(&label))
    }

    /// Kept-action mask per owned information set (`1` = kept).
    pub fn masks(&self, tree: &GameTree) -> BTreeMap<InfoSetId, String> {
        tree.info_sets_of(self.owner)
            .map(|(id, set)| {
                let mask = set
                    .labels
                    .iter()
                    .map(|&l| if self.keeps(id, l) { '1' } else { '0' })
                    .collect();
                (id, mask)
            })
            .collect()
    }

    pub fn is_identity(&self, tree: &GameTree) -> bool {
        self.kept
            .iter()
            .all(|(s, k)| tree.info_set(*s).is_some_and(|set| set.labels.len() == k.len()))
    }
}

/// Number of cuts available to `player`: the product of `2^k - 1` over the
/// player's information sets.
pub fn count_cuts(tree: &GameTree, player: PlayerId) -> BigUint {
    let mut total = BigUint::one();
    for (_, set) in tree.info_sets_of(player) {
        total *= (BigUint::one() << set.labels.len()) - BigUint::one();
    }
    total
}

/// Lazily enumerates cuts. Per information set the full mask comes first and
/// then the proper masks in increasing order; the lowest information-set id
/// is the most significant digit, so the identity cut is first.
pub struct CutIter {
    owner: PlayerId,
    sets: Vec<(InfoSetId, Vec<ActionLabel>)>,
    digits: Vec<u128>,
    done: bool,
}

impl CutIter {
    pub fn new(tree: &GameTree, player: PlayerId) -> Result<Self> {
        let sets: Vec<(InfoSetId, Vec<ActionLabel>)> =
            tree.info_sets_of(player).map(|(id, s)| (id, s.labels.clone())).collect();
        if let Some((id, s)) = sets.iter().find(|(_, s)| s.len() > 100) {
            return Err(Error::budget(format!("cut masks at information set {id}"), s.len(), 100));
        }
        Ok(CutIter {
            owner: player,
            digits: vec![0; sets.len()],
            sets,
            done: false,
        })
    }

    fn mask(k: usize, digit: u128) -> u128 {
        let full = (1u128 << k) - 1;
        if digit == 0 {
            full
        } else {
            digit
        }
    }
}

impl Iterator for CutIter {
    type Item = Cut;

    fn next(&mut self) -> Option<Cut> {
        if self.done {
            return None;
        }
        let mut kept = BTreeMap::new();
        for ((id, labels), &d) in self.sets.iter().zip(&self.digits) {
            if d == 0 {
                continue;
            }
            let m = Self::mask(labels.len(), d);
            let k: Vec<ActionLabel> = labels
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, l)| *l)
                .collect();
            kept.insert(*id, k);
        }
        let cut = Cut {
            owner: self.owner,
            kept,
        };
        // advance: digit d runs over 0 (full), 1, .., full-1
        self.done = true;
        for i in (0..self.digits.len()).rev() {
            let full = (1u128 << self.sets[i].1.len()) - 1;
            self.digits[i] += 1;
            if self.digits[i] < full {
                self.done = false;
                break;
            }
            self.digits[i] = 0;
        }
        Some(cut)
    }
}

pub fn enumerate_cuts(tree: &GameTree, player: PlayerId, budget: &CommitmentBudget) -> Result<Vec<Cut>> {
    let count = count_cuts(tree, player);
    if count > BigUint::from(budget.max_cuts_per_node) {
        let ks: Vec<String> = tree.info_sets_of(player).map(|(_, s)| s.labels.len().to_string()).collect();
        return Err(Error::budget(
            format!("cuts for player {player} (product of 2^k-1 over k = [{}])", ks.join(",")),
            count,
            budget.max_cuts_per_node,
        ));
    }
    Ok(CutIter::new(tree, player)?.collect())
}

fn check_cut(tree: &GameTree, cut: &Cut) -> Result<()> {
    for (s, labels) in &cut.kept {
        let set = tree
            .info_set(*s)
            .ok_or_else(|| Error::CutMismatch(format!("no information set {s}")))?;
        if set.owner != cut.owner {
            return Err(Error::CutMismatch(format!("information set {s} is not owned by {}", cut.owner)));
        }
        if labels.is_empty() || labels.iter().any(|l| !set.labels.contains(l)) {
            return Err(Error::CutMismatch(format!("invalid kept actions at information set {s}")));
        }
    }
    Ok(())
}

/// Copies the subtree at `v` into `b`, dropping edges removed by `cut` and
/// renaming information sets through `rename`.
fn copy_cut(
    tree: &GameTree,
    v: NodeId,
    cut: Option<&Cut>,
    b: &mut GameBuilder,
    rename: &mut dyn FnMut(&mut GameBuilder, InfoSetId) -> InfoSetId,
    limit: usize,
) -> Result<NodeId> {
    match tree.node(v) {
        Node::Leaf(u) => {
            if b.len() >= limit {
                return Err(Error::budget("expanded game nodes", b.len() + 1, limit));
            }
            Ok(b.leaf(u.clone()))
        }
        Node::Decision(d) => {
            let id = rename(b, d.info_set);
            let mut actions = Vec::new();
            let mut choices = Vec::new();
            for (i, e) in d.actions.iter().enumerate() {
                if cut.is_some_and(|c| c.owner == d.owner && !c.keeps(d.info_set, e.label)) {
                    continue;
                }
                let child = copy_cut(tree, e.child, cut, b, rename, limit)?;
                actions.push((e.label, child));
                if let Some(cs) = &d.commitment {
                    choices.push(cs[i].clone());
                }
            }
            if b.len() >= limit {
                return Err(Error::budget("expanded game nodes", b.len() + 1, limit));
            }
            Ok(match &d.commitment {
                Some(_) => b.commitment(d.owner, id, actions, choices),
                None => b.decision(d.owner, id, actions),
            })
        }
    }
}

fn keep_ids(tree: &GameTree) -> impl FnMut(&mut GameBuilder, InfoSetId) -> InfoSetId + '_ {
    |b, s| {
        b.set_base(s, tree.info_set(s).and_then(|x| x.base));
        s
    }
}

pub fn apply_cut(tree: &GameTree, cut: &Cut) -> Result<GameTree> {
    check_cut(tree, cut)?;
    let mut b = GameBuilder::new();
    let mut rename = keep_ids(tree);
    let root = copy_cut(tree, tree.root(), Some(cut), &mut b, &mut rename, usize::MAX)?;
    GameTree::build(b, root, tree.players())
}

/// Computes the cut a catalog entry stands for in a given game.
pub trait CutCompiler: Send + Sync {
    fn name(&self) -> String;
    fn compile(&self, tree: &GameTree, owner: PlayerId) -> Result<Cut>;
}

#[derive(Clone)]
pub enum CatalogEntry {
    /// No restriction.
    Identity,
    /// Keep only `label` at every (non-commitment) information set of the owner.
    KeepAction { name: String, label: ActionLabel },
    Compiled(Arc<dyn CutCompiler>),
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl CatalogEntry {
    pub fn name(&self) -> String {
        match self {
            CatalogEntry::Identity => "identity".into(),
            CatalogEntry::KeepAction { name, .. } => name.clone(),
            CatalogEntry::Compiled(c) => c.name(),
        }
    }

    pub fn cut(&self, tree: &GameTree, owner: PlayerId) -> Result<Cut> {
        match self {
            CatalogEntry::Identity => Ok(Cut::identity(owner)),
            CatalogEntry::KeepAction { name, label } => {
                let mut kept = BTreeMap::new();
                for (id, set) in tree.info_sets_of(owner) {
                    if set.base.is_none() {
                        continue;
                    }
                    if !set.labels.contains(label) {
                        return Err(Error::CutMismatch(format!(
                            "`{name}`: information set {id} has no action {label}"
                        )));
                    }
                    kept.insert(id, vec![*label]);
                }
                Cut::new(tree, owner, kept)
            }
            CatalogEntry::Compiled(c) => {
                let cut = c.compile(tree, owner)?;
                check_cut(tree, &cut)?;
                Ok(cut)
            }
        }
    }
}

/// Per-player commitment catalogs; players without an entry only have the
/// identity commitment.
#[derive(Clone, Debug, Default)]
pub struct CommitmentSchema {
    pub catalogs: BTreeMap<PlayerId, Vec<CatalogEntry>>,
}

impl CommitmentSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, player: PlayerId, entries: Vec<CatalogEntry>) -> Self {
        self.catalogs.insert(player, entries);
        self
    }

    pub fn catalog(&self, player: PlayerId) -> Vec<CatalogEntry> {
        self.catalogs
            .get(&player)
            .cloned()
            .unwrap_or_else(|| vec![CatalogEntry::Identity])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMode {
    Exhaustive,
    Schema,
}

impl fmt::Display for ExpansionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpansionMode::Exhaustive => "exhaustive",
            ExpansionMode::Schema => "schema",
        })
    }
}

/// One nesting level: the committing player and the names of its branches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitmentLevel {
    pub player: PlayerId,
    pub choices: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ExpandedGame {
    pub tree: GameTree,
    /// Outermost level first.
    pub commitment_nodes: Vec<CommitmentLevel>,
    pub ordering: Vec<PlayerId>,
    pub mode: ExpansionMode,
}

impl ExpandedGame {
    pub fn level(&self, player: PlayerId) -> Option<&CommitmentLevel> {
        self.commitment_nodes.iter().find(|l| l.player == player)
    }

    /// Branch label of the named commitment of `player`.
    pub fn choice_label(&self, player: PlayerId, name: &str) -> Option<ActionLabel> {
        self.level(player)?
            .choices
            .iter()
            .position(|c| c == name)
            .map(|i| i as ActionLabel)
    }

    /// Follows `choices` (player → branch name) from the root through the
    /// commitment levels; returns the commitment nodes visited with the label
    /// taken and the root of the base-game copy that is reached.
    pub fn commitment_path(&self, choices: &BTreeMap<PlayerId, String>) -> Result<(Vec<(NodeId, ActionLabel)>, NodeId)> {
        let mut v = self.tree.root();
        let mut path = Vec::new();
        while let Some(d) = self.tree.decision(v) {
            if d.commitment.is_none() {
                break;
            }
            let name = choices
                .get(&d.owner)
                .ok_or_else(|| Error::InvalidProfile(format!("no commitment chosen for player {}", d.owner)))?;
            let label = self
                .choice_label(d.owner, name)
                .ok_or_else(|| Error::InvalidProfile(format!("player {} has no commitment `{name}`", d.owner)))?;
            let e = d.actions.iter().find(|e| e.label == label).unwrap();
            path.push((v, label));
            v = e.child;
        }
        Ok((path, v))
    }
}

fn expand_with(
    tree: &GameTree,
    player: PlayerId,
    cuts: Vec<(String, Cut)>,
    budget: &CommitmentBudget,
) -> Result<GameTree> {
    let mut b = GameBuilder::new();
    let mut next: InfoSetId = 1;
    let mut children = Vec::with_capacity(cuts.len());
    let mut choices = Vec::with_capacity(cuts.len());
    for (k, (name, cut)) in cuts.iter().enumerate() {
        let mut fresh: HashMap<InfoSetId, InfoSetId> = HashMap::new();
        let mut rename = |b: &mut GameBuilder, s: InfoSetId| {
            *fresh.entry(s).or_insert_with(|| {
                let id = next;
                next += 1;
                b.set_base(id, tree.info_set(s).and_then(|x| x.base));
                id
            })
        };
        let child = copy_cut(tree, tree.root(), Some(cut), &mut b, &mut rename, budget.max_nodes)?;
        children.push((k as ActionLabel, child));
        choices.push(CommitmentChoice {
            name: name.clone(),
            kept: cut.masks(tree),
        });
    }
    let root = b.commitment(player, 0, children, choices);
    GameTree::build(b, root, tree.players())
}

/// `C^player(tree)` over every cut.
pub fn expand(tree: &GameTree, player: PlayerId, budget: &CommitmentBudget) -> Result<ExpandedGame> {
    expand_sequence(tree, &[player], budget, None)
}

/// Nested expansion: the last player of `ordering` is expanded first, so the
/// root commitment belongs to `ordering[0]` and its cuts see every later
/// player's commitment.
pub fn expand_sequence(
    tree: &GameTree,
    ordering: &[PlayerId],
    budget: &CommitmentBudget,
    schema: Option<&CommitmentSchema>,
) -> Result<ExpandedGame> {
    budget.validate()?;
    let distinct: BTreeSet<_> = ordering.iter().collect();
    if distinct.len() != ordering.len() {
        return Err(Error::InvalidParams("ordering repeats a player".into()));
    }
    if let Some(p) = ordering.iter().find(|p| p.0 >= tree.players()) {
        return Err(Error::InvalidParams(format!("ordering names player {p}, game has {}", tree.players())));
    }
    let mut current = tree.clone();
    let mut levels = Vec::new();
    for (depth, &player) in ordering.iter().enumerate().rev() {
        let level_err = |e: Error| match e {
            Error::BudgetExceeded { what, needed, limit } => Error::BudgetExceeded {
                what: format!("nesting level {depth} (player {player}): {what}"),
                needed,
                limit,
            },
            other => other,
        };
        let cuts: Vec<(String, Cut)> = match schema {
            None => enumerate_cuts(&current, player, budget)
                .map_err(level_err)?
                .into_iter()
                .enumerate()
                .map(|(k, c)| (format!("cut{k}"), c))
                .collect(),
            Some(s) => {
                let catalog = s.catalog(player);
                if catalog.len() as u64 > budget.max_cuts_per_node {
                    return Err(level_err(Error::budget(
                        "catalog size",
                        catalog.len(),
                        budget.max_cuts_per_node,
                    )));
                }
                catalog
                    .iter()
                    .map(|e| Ok((e.name(), e.cut(&current, player)?)))
                    .collect::<Result<_>>()
                    .map_err(level_err)?
            }
        };
        levels.push(CommitmentLevel {
            player,
            choices: cuts.iter().map(|(n, _)| n.clone()).collect(),
        });
        current = expand_with(&current, player, cuts, budget).map_err(level_err)?;
    }
    levels.reverse();
    Ok(ExpandedGame {
        tree: current,
        commitment_nodes: levels,
        ordering: ordering.to_vec(),
        mode: if schema.is_some() {
            ExpansionMode::Schema
        } else {
            ExpansionMode::Exhaustive
        },
    })
}

/// Translates a profile of the un-expanded game to an expanded one through
/// the `base` links. Assignments whose actions were cut away are dropped.
pub fn lift_profile(tree: &GameTree, base_profile: &StrategyProfile) -> StrategyProfile {
    let mut out = StrategyProfile::new();
    for (&id, set) in tree.info_sets() {
        let Some(dist) = set.base.and_then(|b| base_profile.get(b)) else {
            continue;
        };
        if dist.support().all(|l| set.labels.contains(&l)) {
            out.set(id, dist.clone());
        }
    }
    out
}

/// Root-stage actions of `player` in the subgame at `root` that extend to a
/// subgame-perfect profile of that subgame.
pub fn committed_actions(solver: &SpeSolver<'_>, root: NodeId, player: PlayerId) -> Result<BTreeSet<ActionLabel>> {
    let game = solver.game();
    let sets: BTreeSet<InfoSetId> = game
        .info_sets_of(player)
        .filter(|(_, s)| s.members.iter().any(|&m| game.in_subtree(root, m)))
        .map(|(id, _)| id)
        .collect();
    let mut out = BTreeSet::new();
    for class in solver.classes(root, &BTreeMap::new())? {
        for (s, d) in &class.stage {
            if sets.contains(s) {
                out.extend(d.support());
            }
        }
    }
    Ok(out)
}

/// Commitment choice taken by a pure profile at `node`, by branch name.
pub fn choice_name(tree: &GameTree, node: NodeId, dist: &ActionDist) -> Option<String> {
    let d = tree.decision(node)?;
    let l = dist.pure_action()?;
    let i = d.actions.iter().position(|e| e.label == l)?;
    Some(d.commitment.as_ref()?[i].name.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{is_subgame_perfect, DeviationSpace, SpeOptions, TieRule};
    use crate::game::{play, UtilityVector};
    use crate::popsicle::{build_popsicle, PopsicleParams};
    use crate::rational::{int, ratio};

    /// Player 2 moves first (one action), player 1 picks between player 2's
    /// binary node and a leaf.
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
    fn two_player_example_has_three_cuts_for_player_two() {
        let g = two_player_example();
        assert_eq!(count_cuts(&g, PlayerId(2)), BigUint::from(3u32));
        let cuts = enumerate_cuts(&g, PlayerId(2), &CommitmentBudget::default()).unwrap();
        let masks: Vec<String> = cuts.iter().map(|c| c.masks(&g)[&2].clone()).collect();
        assert_eq!(masks, ["11", "10", "01"]);
        assert!(cuts[0].is_identity(&g));
        let left = apply_cut(&g, &cuts[1]).unwrap();
        let inner = left.info_set(2).unwrap().members[0];
        assert_eq!(left.decision(inner).unwrap().actions.len(), 1);
        assert_eq!(apply_cut(&g, &cuts[0]).unwrap(), g);
    }

    #[test]
    fn expansion_of_two_player_example() {
        let g = two_player_example();
        let x = expand(&g, PlayerId(2), &CommitmentBudget::default()).unwrap();
        let root = x.tree.decision(x.tree.root()).unwrap();
        assert_eq!(root.owner, PlayerId(2));
        assert_eq!(root.actions.len(), 3);
        assert_eq!(x.tree.len(), 1 + 6 + 5 + 5);
        assert!(x.tree.validate().is_ok());
        // committing to the left move lures player 1 in: 1 instead of 0
        let spe = crate::equilibrium::solve_backward_induction(&x.tree, TieRule::KeepAll, 1000).unwrap();
        let values: BTreeSet<_> = spe.iter().map(|p| play(&x.tree, p).unwrap().0[2].clone()).collect();
        assert_eq!(values, BTreeSet::from([int(1)]));
        let vanilla = crate::equilibrium::solve_backward_induction(&g, TieRule::KeepAll, 1000).unwrap();
        assert_eq!(play(&g, &vanilla[0]).unwrap().0[2], int(0));
        let seq = expand_sequence(&g, &[PlayerId(2)], &CommitmentBudget::default(), None).unwrap();
        assert_eq!(seq.tree, x.tree);
        let json = x.tree.to_json();
        assert!(json.contains("\"commitment_for\": 2"));
        assert_eq!(GameTree::from_json(&json).unwrap(), x.tree);
    }

    #[test]
    fn player_without_moves_gets_one_branch() {
        let g = two_player_example();
        assert_eq!(count_cuts(&g, PlayerId(0)), BigUint::one());
        let x = expand(&g, PlayerId(0), &CommitmentBudget::default()).unwrap();
        assert_eq!(x.tree.decision(0).unwrap().actions.len(), 1);
        let copy = x.tree.subgame(1);
        assert_eq!(copy.nodes().len(), g.nodes().len());
        for (a, b) in copy.nodes().iter().zip(g.nodes()) {
            if let (Node::Leaf(u), Node::Leaf(w)) = (a, b) {
                assert_eq!(u, w);
            }
        }
    }

    #[test]
    fn empty_cut_is_rejected() {
        let g = two_player_example();
        let kept = [(2, vec![])].into_iter().collect();
        assert!(matches!(Cut::new(&g, PlayerId(2), kept), Err(Error::CutMismatch(_))));
        let kept = [(1, vec![0])].into_iter().collect();
        assert!(Cut::new(&g, PlayerId(2), kept).is_err());
    }

    #[test]
    fn popsicle_cut_counts() {
        let p = PopsicleParams::new(2, int(1), int(0), vec![int(0), int(1)], vec![int(0)])
            .unwrap()
            .without_side_payments();
        let g = build_popsicle(&p).unwrap();
        assert_eq!(enumerate_cuts(&g, PlayerId(2), &CommitmentBudget::default()).unwrap().len(), 3);
        let x = expand(&g, PlayerId(2), &CommitmentBudget::default()).unwrap();
        assert_eq!(x.tree.decision(0).unwrap().actions.len(), 3);

        let p = PopsicleParams::new(2, ratio(1, 2), int(0), vec![int(0), ratio(1, 2), int(1)], vec![int(0), int(1)]).unwrap();
        let g = build_popsicle(&p).unwrap();
        assert_eq!(count_cuts(&g, PlayerId::BUYER), BigUint::from(15u32).pow(9));
        let err = expand_sequence(&g, &[PlayerId(1), PlayerId(2), PlayerId(0)], &CommitmentBudget::default(), None)
            .unwrap_err();
        match err {
            Error::BudgetExceeded { what, .. } => assert!(what.starts_with("nesting level 2 (player 0)"), "{what}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn nested_schema_expansion_shapes() {
        let p = PopsicleParams::new(2, int(1), int(0), vec![int(0), int(1)], vec![int(0)])
            .unwrap()
            .without_side_payments();
        let g = build_popsicle(&p).unwrap();
        let prices = |v: PlayerId| {
            let mut c = vec![CatalogEntry::Identity];
            c.extend((0..2).map(|l| CatalogEntry::KeepAction {
                name: format!("price{l}-{v}"),
                label: l,
            }));
            c
        };
        let schema = CommitmentSchema::new()
            .with(PlayerId(1), prices(PlayerId(1)))
            .with(PlayerId(2), prices(PlayerId(2)));
        let order = [PlayerId(1), PlayerId(2), PlayerId(0)];
        let x = expand_sequence(&g, &order, &CommitmentBudget::default(), Some(&schema)).unwrap();
        assert_eq!(x.mode, ExpansionMode::Schema);
        assert_eq!(x.commitment_nodes.iter().map(|l| l.player).collect::<Vec<_>>(), order);
        let root = x.tree.decision(0).unwrap();
        assert_eq!(root.owner, PlayerId(1));
        assert_eq!(root.actions.len(), 3);
        assert!(x.tree.validate().is_ok());
        // every copy of vendor 1's move under "price1" keeps one action
        let choices: BTreeMap<_, _> = [
            (PlayerId(1), "price1-1".to_string()),
            (PlayerId(2), "identity".to_string()),
            (PlayerId(0), "identity".to_string()),
        ]
        .into_iter()
        .collect();
        let (path, base_root) = x.commitment_path(&choices).unwrap();
        assert_eq!(path.len(), 3);
        let d = x.tree.decision(base_root).unwrap();
        assert_eq!((d.owner, d.actions.len()), (PlayerId(1), 1));
        assert_eq!(x.tree.info_set(d.info_set).unwrap().base, Some(0));
    }

    #[test]
    fn committed_actions_of_forced_and_free_vendors() {
        let p = PopsicleParams::new(2, ratio(1, 2), ratio(1, 4), vec![int(0), ratio(1, 2), int(1)], vec![int(0)])
            .unwrap()
            .without_side_payments();
        let g = build_popsicle(&p).unwrap();
        let forced = apply_cut(&g, &Cut::new(&g, PlayerId(2), [(1, vec![2])].into_iter().collect()).unwrap()).unwrap();
        let solver = SpeSolver::new(&forced, SpeOptions::default());
        assert_eq!(committed_actions(&solver, 0, PlayerId(2)).unwrap(), BTreeSet::from([2]));
        let solver = SpeSolver::new(&g, SpeOptions::default());
        let free = committed_actions(&solver, 0, PlayerId(2)).unwrap();
        // oracle: brute-force SPE enumeration of the same game
        let space = DeviationSpace::exhaustive(3);
        let brute = crate::equilibrium::filter_subgame_perfect(
            &g,
            &space,
            crate::equilibrium::enumerate_equilibria(&g, &space, &Default::default()).unwrap(),
        )
        .unwrap();
        let expected: BTreeSet<_> = brute.iter().map(|(prof, _)| prof.pure_action(1).unwrap()).collect();
        assert_eq!(free, expected);
        for (prof, _) in &brute {
            assert!(is_subgame_perfect(&g, prof, &space).unwrap().verdict);
        }
    }

    #[test]
    fn lifted_profiles_play_like_cut_games() {
        let g = two_player_example();
        let x = expand(&g, PlayerId(2), &CommitmentBudget::default()).unwrap();
        let cuts = enumerate_cuts(&g, PlayerId(2), &CommitmentBudget::default()).unwrap();
        for (k, cut) in cuts.iter().enumerate() {
            let cg = apply_cut(&g, cut).unwrap();
            let mut base = StrategyProfile::from_pure([(0, 0), (1, 0)]);
            base.set_pure(2, cut.kept.get(&2).map_or(0, |k| k[0]));
            let mut lifted = lift_profile(&x.tree, &base);
            lifted.set_pure(0, k as ActionLabel);
            assert_eq!(play(&x.tree, &lifted).unwrap(), play(&cg, &base).unwrap());
        }
    }
}
