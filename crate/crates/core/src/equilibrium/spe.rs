//! Exhaustive pure subgame-perfect enumeration by subgame decomposition.
//!
//! A subgame root `r` owns a *stage*: the decision nodes reachable from `r`
//! without entering another subgame. Stage leaves (terminals) are leaves or
//! nested subgame roots, each carrying its own set of equilibrium outcomes.
//! A pure stage profile `s` with on-path outcome `x` extends to a
//! subgame-perfect profile iff, for every player `i` and every terminal `t'`
//! that `i` can reach by deviating alone, some equilibrium outcome of `t'`
//! gives `i` at most `x_i`. Terminals reached by different players'
//! deviations are distinct, so those punishing outcomes can be chosen
//! independently.
//!
//! Nested outcome sets are deduplicated by utility vector; the root stage is
//! reported per stage profile. Mixed play is limited to tie mixtures of one
//! designated player at single-node stages.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::game::{ActionDist, ActionLabel, GameTree, InfoSetId, Node, NodeId, PlayerId, StrategyProfile, UtilityVector};
use crate::rational::{self, Rational};

#[derive(Clone, Debug)]
pub struct SpeOptions {
    pub mixing_player: Option<PlayerId>,
    pub max_stage_profiles: u64,
    pub max_outcomes: usize,
}

impl Default for SpeOptions {
    fn default() -> Self {
        SpeOptions {
            mixing_player: None,
            max_stage_profiles: 1 << 20,
            max_outcomes: 1 << 16,
        }
    }
}

#[derive(Debug, Default)]
struct Fragment {
    assigns: Vec<(InfoSetId, ActionDist)>,
    subs: Vec<Arc<Fragment>>,
}

/// An equilibrium outcome of a subgame with a profile that realizes it.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub utilities: UtilityVector,
    frag: Arc<Fragment>,
}

impl Outcome {
    /// Full profile over every information set of the subgame.
    pub fn profile(&self) -> StrategyProfile {
        let mut p = StrategyProfile::new();
        let mut stack = vec![self.frag.clone()];
        while let Some(f) = stack.pop() {
            for (s, d) in &f.assigns {
                p.set(*s, d.clone());
            }
            stack.extend(f.subs.iter().cloned());
        }
        p
    }
}

/// One root-stage profile with an equilibrium continuation.
#[derive(Clone, Debug)]
pub struct SpeClass {
    pub stage: BTreeMap<InfoSetId, ActionDist>,
    pub utilities: UtilityVector,
    pub profile: StrategyProfile,
}

struct Stage {
    sets: Vec<(InfoSetId, PlayerId, Vec<ActionLabel>)>,
    index: HashMap<InfoSetId, usize>,
    terminals: Vec<NodeId>,
}

pub struct SpeSolver<'g> {
    game: &'g GameTree,
    options: SpeOptions,
    is_root: Vec<bool>,
    memo: RefCell<HashMap<NodeId, Arc<Vec<Outcome>>>>,
}

type Prescription = BTreeMap<InfoSetId, ActionLabel>;

impl<'g> SpeSolver<'g> {
    pub fn new(game: &'g GameTree, options: SpeOptions) -> Self {
        SpeSolver {
            game,
            options,
            is_root: game.subgame_roots(),
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn game(&self) -> &GameTree {
        self.game
    }

    fn is_terminal(&self, v: NodeId) -> bool {
        matches!(self.game.node(v), Node::Leaf(_)) || self.is_root[v]
    }

    fn stage(&self, r: NodeId) -> Stage {
        let mut sets = Vec::new();
        let mut index = HashMap::new();
        let mut terminals = Vec::new();
        let mut stack = vec![r];
        while let Some(v) = stack.pop() {
            let d = self.game.decision(v).expect("stage nodes are decisions");
            if let std::collections::hash_map::Entry::Vacant(slot) = index.entry(d.info_set) {
                slot.insert(sets.len());
                sets.push((d.info_set, d.owner, d.actions.iter().map(|e| e.label).collect()));
            }
            for e in d.actions.iter().rev() {
                if self.is_terminal(e.child) {
                    terminals.push(e.child);
                } else {
                    stack.push(e.child);
                }
            }
        }
        terminals.sort_unstable();
        Stage {
            sets,
            index,
            terminals,
        }
    }

    /// Terminals reached from `r` when everyone follows `choice`, except that
    /// `deviator` may take any action.
    fn reach(&self, stage: &Stage, choice: &[ActionLabel], r: NodeId, deviator: Option<PlayerId>, out: &mut BTreeSet<NodeId>) {
        let mut stack = vec![r];
        while let Some(v) = stack.pop() {
            if v != r && self.is_terminal(v) {
                out.insert(v);
                continue;
            }
            let d = self.game.decision(v).unwrap();
            if Some(d.owner) == deviator {
                stack.extend(d.actions.iter().map(|e| e.child));
            } else {
                let l = choice[stage.index[&d.info_set]];
                stack.push(d.actions.iter().find(|e| e.label == l).unwrap().child);
            }
        }
    }

    fn leaf_or_memo(&self, t: NodeId) -> Result<Arc<Vec<Outcome>>> {
        match self.game.node(t) {
            Node::Leaf(u) => Ok(Arc::new(vec![Outcome {
                utilities: u.clone(),
                frag: Arc::new(Fragment::default()),
            }])),
            Node::Decision(_) => self.outcomes(t),
        }
    }

    /// Equilibrium outcomes of the subgame rooted at `r`, one per distinct
    /// utility vector.
    pub fn outcomes(&self, r: NodeId) -> Result<Arc<Vec<Outcome>>> {
        if let Some(o) = self.memo.borrow().get(&r) {
            return Ok(o.clone());
        }
        let solved = Arc::new(self.dedupe(self.solve_stage(r, &Prescription::new())?)?);
        self.memo.borrow_mut().insert(r, solved.clone());
        Ok(solved)
    }

    fn dedupe(&self, pairs: Vec<(Vec<ActionDist>, Outcome)>) -> Result<Vec<Outcome>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (_, o) in pairs {
            if seen.insert(o.utilities.clone()) {
                out.push(o);
            }
        }
        if out.len() > self.options.max_outcomes {
            return Err(Error::budget("equilibrium outcomes at one node", out.len(), self.options.max_outcomes));
        }
        Ok(out)
    }

    /// Every root-stage profile of the subgame at `r` that extends to a
    /// subgame-perfect profile. Information sets in `prescription` are forced
    /// on the equilibrium path.
    pub fn classes(&self, r: NodeId, prescription: &BTreeMap<InfoSetId, ActionLabel>) -> Result<Vec<SpeClass>> {
        if let Node::Leaf(u) = self.game.node(r) {
            return Ok(vec![SpeClass {
                stage: BTreeMap::new(),
                utilities: u.clone(),
                profile: StrategyProfile::new(),
            }]);
        }
        let stage = self.stage(r);
        let pairs = self.solve_stage(r, prescription)?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (choice, o) in pairs {
            if !seen.insert((choice.clone(), o.utilities.clone())) {
                continue;
            }
            let stage_map = stage
                .sets
                .iter()
                .zip(choice)
                .map(|((s, _, _), d)| (*s, d))
                .collect();
            out.push(SpeClass {
                stage: stage_map,
                utilities: o.utilities.clone(),
                profile: o.profile(),
            });
        }
        Ok(out)
    }

    fn touches(&self, t: NodeId, prescription: &Prescription) -> bool {
        prescription.keys().any(|s| {
            self.game
                .info_set(*s)
                .is_some_and(|i| i.members.iter().any(|&m| self.game.in_subtree(t, m)))
        })
    }

    fn solve_stage(&self, r: NodeId, prescription: &Prescription) -> Result<Vec<(Vec<ActionDist>, Outcome)>> {
        let stage = self.stage(r);
        let allowed: Vec<Vec<ActionLabel>> = stage
            .sets
            .iter()
            .map(|(s, _, labels)| match prescription.get(s) {
                Some(l) => labels.iter().copied().filter(|x| x == l).collect(),
                None => labels.clone(),
            })
            .collect();
        let total: u128 = allowed.iter().map(|a| a.len() as u128).product();
        if total > self.options.max_stage_profiles as u128 {
            return Err(Error::budget("stage profiles", total, self.options.max_stage_profiles));
        }
        let mut term_out: HashMap<NodeId, Arc<Vec<Outcome>>> = HashMap::new();
        for &t in &stage.terminals {
            let o = self.leaf_or_memo(t)?;
            if o.is_empty() {
                return Ok(Vec::new());
            }
            term_out.insert(t, o);
        }
        // argmin of each player's utility over a terminal's outcomes
        let players = self.game.players();
        let mut punish: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (&t, outs) in &term_out {
            let idx = (0..players)
                .map(|p| {
                    (0..outs.len())
                        .min_by(|&a, &b| outs[a].utilities.0[p].cmp(&outs[b].utilities.0[p]))
                        .unwrap()
                })
                .collect();
            punish.insert(t, idx);
        }
        let stage_players: BTreeSet<PlayerId> = stage.sets.iter().map(|(_, p, _)| *p).collect();

        let mut results = Vec::new();
        if total > 0 {
            let mut idx = vec![0usize; allowed.len()];
            loop {
                let choice: Vec<ActionLabel> = allowed.iter().zip(&idx).map(|(a, &i)| a[i]).collect();
                let mut on = BTreeSet::new();
                self.reach(&stage, &choice, r, None, &mut on);
                let t = *on.iter().next().unwrap();
                let onpath = if self.touches(t, prescription) {
                    match self.game.node(t) {
                        Node::Leaf(_) => term_out[&t].clone(),
                        Node::Decision(_) => Arc::new(self.dedupe(self.solve_stage(t, prescription)?)?),
                    }
                } else {
                    term_out[&t].clone()
                };
                let mut deviations: Vec<(PlayerId, BTreeSet<NodeId>)> = Vec::new();
                for &p in &stage_players {
                    let mut reached = BTreeSet::new();
                    self.reach(&stage, &choice, r, Some(p), &mut reached);
                    reached.remove(&t);
                    deviations.push((p, reached));
                }
                for x in onpath.iter() {
                    let ok = deviations.iter().all(|(p, ts)| {
                        ts.iter().all(|tt| {
                            let o = &term_out[tt][punish[tt][p.0]];
                            o.utilities.0[p.0] <= x.utilities.0[p.0]
                        })
                    });
                    if !ok {
                        continue;
                    }
                    let subs = stage
                        .terminals
                        .iter()
                        .map(|tt| {
                            if *tt == t {
                                return x.frag.clone();
                            }
                            let pick = deviations
                                .iter()
                                .find(|(_, ts)| ts.contains(tt))
                                .map(|(p, _)| punish[tt][p.0])
                                .unwrap_or(0);
                            term_out[tt][pick].frag.clone()
                        })
                        .collect();
                    let dists: Vec<ActionDist> = choice.iter().map(|&l| ActionDist::pure(l)).collect();
                    let frag = Fragment {
                        assigns: stage.sets.iter().zip(&dists).map(|((s, _, _), d)| (*s, d.clone())).collect(),
                        subs,
                    };
                    results.push((
                        dists,
                        Outcome {
                            utilities: x.utilities.clone(),
                            frag: Arc::new(frag),
                        },
                    ));
                }
                let mut k = idx.len();
                let mut done = true;
                while k > 0 {
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < allowed[k].len() {
                        done = false;
                        break;
                    }
                    idx[k] = 0;
                }
                if done {
                    break;
                }
            }
        }

        if stage.sets.len() == 1 && prescription.get(&stage.sets[0].0).is_none() {
            let (set, owner, _) = &stage.sets[0];
            if self.options.mixing_player == Some(*owner) {
                results.extend(self.tie_mixtures(r, *set, *owner, &term_out, &punish));
            }
        }
        Ok(results)
    }

    fn tie_mixtures(
        &self,
        r: NodeId,
        set: InfoSetId,
        mover: PlayerId,
        term_out: &HashMap<NodeId, Arc<Vec<Outcome>>>,
        punish: &HashMap<NodeId, Vec<usize>>,
    ) -> Vec<(Vec<ActionDist>, Outcome)> {
        let d = self.game.decision(r).unwrap();
        let m = mover.0;
        let floor = |skip: NodeId| -> Option<Rational> {
            d.actions
                .iter()
                .filter(|e| e.child != skip)
                .map(|e| term_out[&e.child][punish[&e.child][m]].utilities.0[m].clone())
                .max()
        };
        // first pure-valid outcome per (value, action)
        let mut levels: BTreeMap<Rational, Vec<(usize, usize)>> = BTreeMap::new();
        for (ai, e) in d.actions.iter().enumerate() {
            let f = floor(e.child);
            for (oi, x) in term_out[&e.child].iter().enumerate() {
                let v = &x.utilities.0[m];
                if f.as_ref().is_some_and(|f| v < f) {
                    continue;
                }
                let level = levels.entry(v.clone()).or_default();
                if !level.iter().any(|(a, _)| *a == ai) {
                    level.push((ai, oi));
                }
            }
        }
        let mut out = Vec::new();
        for picks in levels.values() {
            if picks.len() < 2 {
                continue;
            }
            let mut supports: Vec<Vec<(usize, usize)>> = Vec::new();
            for i in 0..picks.len() {
                for j in i + 1..picks.len() {
                    supports.push(vec![picks[i], picks[j]]);
                }
            }
            if picks.len() > 2 {
                supports.push(picks.clone());
            }
            for support in supports {
                let w = rational::ratio(1, support.len() as i64);
                let mut u = UtilityVector::zeros(self.game.players());
                let labels: Vec<ActionLabel> = support.iter().map(|(a, _)| d.actions[*a].label).collect();
                for (a, o) in &support {
                    u.add_scaled(&term_out[&d.actions[*a].child][*o].utilities, &w);
                }
                let subs = d
                    .actions
                    .iter()
                    .enumerate()
                    .map(|(ai, e)| match support.iter().find(|(a, _)| *a == ai) {
                        Some((_, o)) => term_out[&e.child][*o].frag.clone(),
                        None => term_out[&e.child][punish[&e.child][m]].frag.clone(),
                    })
                    .collect();
                let dist = ActionDist::uniform(&labels);
                out.push((
                    vec![dist.clone()],
                    Outcome {
                        utilities: u,
                        frag: Arc::new(Fragment {
                            assigns: vec![(set, dist)],
                            subs,
                        }),
                    },
                ));
            }
        }
        out
    }
}
