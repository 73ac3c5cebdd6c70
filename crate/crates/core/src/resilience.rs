//! Stackelberg resilience and end-to-end verification of the commitment attack.
//!
//! A game is resilient for an ordering when every equilibrium utility vector
//! of the nested expansion is also an equilibrium utility vector of the
//! original game. Equilibria here are the pure subgame-perfect ones found by
//! [`SpeSolver`], plus the solver's tie mixtures for the buyer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::commitment::{
    expand_sequence, CatalogEntry, CommitmentBudget, CommitmentSchema, ExpandedGame, ExpansionMode,
};
use crate::contract::{CompiledContract, ContractAst, Predicate, RuleAction};
use crate::equilibrium::{is_equilibrium, is_subgame_perfect, DeviationSpace, EquilibriumReport, SpeOptions, SpeSolver};
use crate::error::{Error, Result};
use crate::game::{play, ActionLabel, GameTree, InfoSetId, NodeId, PlayerId, StrategyProfile, UtilityVector};
use crate::popsicle::{build_popsicle_with_budget, BuyerChoice, ParamsDoc, PopsicleParams};
use crate::rational::{self, Rational};

/// Which commitment kinds enter the popsicle catalogs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemaOptions {
    pub constant_prices: bool,
    pub buyer_pledges: bool,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        SchemaOptions {
            constant_prices: true,
            buyer_pledges: true,
        }
    }
}

pub const CONTRACT_ENTRY: &str = "contract";

pub fn price_entry(v: &Rational) -> String {
    format!("price={}", rational::format(v))
}

pub fn pledge_entry(vendor: usize, q: &Rational) -> String {
    format!("pledge({vendor},{})", rational::format(q))
}

/// Popsicle catalogs: identity everywhere, one constant price per grid value
/// for vendors, one forced `(i*, q)` per pair for the buyer, and optionally a
/// contract for its owner.
pub fn popsicle_schema(
    params: &PopsicleParams,
    contract: Option<&ContractAst>,
    options: SchemaOptions,
) -> Result<CommitmentSchema> {
    let mut schema = CommitmentSchema::new();
    for j in 1..=params.n {
        let mut entries = vec![CatalogEntry::Identity];
        if options.constant_prices {
            for (l, v) in params.prices.iter().enumerate() {
                entries.push(CatalogEntry::KeepAction {
                    name: price_entry(v),
                    label: l as ActionLabel,
                });
            }
        }
        schema.catalogs.insert(PlayerId(j), entries);
    }
    let mut buyer = vec![CatalogEntry::Identity];
    if options.buyer_pledges {
        for i in 1..=params.n {
            for q in params.effective_q() {
                let label = params.buyer_label(&BuyerChoice::new(i, q.clone())).expect("grid pair");
                buyer.push(CatalogEntry::KeepAction {
                    name: pledge_entry(i, &q),
                    label,
                });
            }
        }
    }
    schema.catalogs.insert(PlayerId::BUYER, buyer);
    if let Some(ast) = contract {
        let compiled = CompiledContract::new(CONTRACT_ENTRY, ast.clone(), params.clone())?;
        schema
            .catalogs
            .get_mut(&ast.owner)
            .expect("owner is a player")
            .push(CatalogEntry::Compiled(Arc::new(compiled)));
    }
    Ok(schema)
}

/// Vendors `1..=n`, then the buyer.
pub fn attack_ordering(n: usize) -> Vec<PlayerId> {
    (1..=n).map(PlayerId).chain([PlayerId::BUYER]).collect()
}

/// The attack ordering and its reverse.
pub fn default_orderings(n: usize) -> Vec<Vec<PlayerId>> {
    let o = attack_ordering(n);
    let mut r = o.clone();
    r.reverse();
    vec![o, r]
}

/// Every ordering of `players` players, lexicographically.
pub fn all_orderings(players: usize) -> Vec<Vec<PlayerId>> {
    fn go(rest: &mut Vec<usize>, cur: &mut Vec<PlayerId>, out: &mut Vec<Vec<PlayerId>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let p = rest.remove(i);
            cur.push(PlayerId(p));
            go(rest, cur, out);
            cur.pop();
            rest.insert(i, p);
        }
    }
    let mut out = Vec::new();
    go(&mut (0..players).collect(), &mut Vec::new(), &mut out);
    out
}

pub fn format_ordering(o: &[PlayerId]) -> String {
    o.iter().map(|p| p.0.to_string()).collect::<Vec<_>>().join("-")
}

fn spe_utilities(game: &GameTree, options: &SpeOptions) -> Result<Vec<(UtilityVector, StrategyProfile)>> {
    let solver = SpeSolver::new(game, options.clone());
    Ok(solver
        .outcomes(game.root())?
        .iter()
        .map(|o| (o.utilities.clone(), o.profile()))
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderingResult {
    #[serde(serialize_with = "ser_ordering")]
    pub ordering: Vec<PlayerId>,
    pub mode: ExpansionMode,
    pub expanded_nodes: usize,
    pub equilibria: Vec<UtilityVector>,
    pub unmatched: Vec<UtilityVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn ser_ordering<S: serde::Serializer>(o: &[PlayerId], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_ordering(o))
}

#[derive(Clone, Debug, Serialize)]
pub struct ResilienceWitness {
    #[serde(serialize_with = "ser_ordering")]
    pub ordering: Vec<PlayerId>,
    pub utilities: UtilityVector,
    /// Re-checked with exhaustive deviations in every subgame.
    pub subgame_perfect: bool,
    #[serde(skip)]
    pub profile: StrategyProfile,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResilienceReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsDoc>,
    pub vanilla: Vec<UtilityVector>,
    pub orderings: Vec<OrderingResult>,
    pub resilient: bool,
    /// Every equilibrium utility vector without a vanilla counterpart.
    pub witnesses: Vec<ResilienceWitness>,
    pub scope: String,
}

impl ResilienceReport {
    pub fn witness(&self) -> Option<&ResilienceWitness> {
        self.witnesses.first()
    }

    pub fn verdict(&self) -> String {
        if self.resilient {
            "resilient".into()
        } else if self.orderings.iter().any(|o| o.mode == ExpansionMode::Schema) {
            "not resilient (schema-witnessed)".into()
        } else {
            "not resilient".into()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub const CSV_HEADER: [&'static str; 5] = ["ordering", "mode", "equilibrium", "utilities", "in_vanilla"];

    /// One row per (ordering, equilibrium utility vector).
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for o in &self.orderings {
            for (k, u) in o.equilibria.iter().enumerate() {
                rows.push(vec![
                    format_ordering(&o.ordering),
                    o.mode.to_string(),
                    k.to_string(),
                    u.to_string(),
                    (!o.unmatched.contains(u)).to_string(),
                ]);
            }
        }
        rows
    }
}

impl fmt::Display for ResilienceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict: {}", self.verdict())?;
        writeln!(f, "scope: {}", self.scope)?;
        let v: Vec<String> = self.vanilla.iter().map(|u| u.to_string()).collect();
        writeln!(f, "vanilla equilibrium utilities: {}", v.join(" "))?;
        for o in &self.orderings {
            let e: Vec<String> = o.equilibria.iter().map(|u| u.to_string()).collect();
            writeln!(
                f,
                "ordering {} ({}, {} nodes): {}",
                format_ordering(&o.ordering),
                o.mode,
                o.expanded_nodes,
                e.join(" ")
            )?;
            if let Some(note) = &o.note {
                writeln!(f, "  note: {note}")?;
            }
        }
        for w in &self.witnesses {
            writeln!(
                f,
                "witness: ordering {} with u = {} (subgame perfect: {})",
                format_ordering(&w.ordering),
                w.utilities,
                if w.subgame_perfect { "yes" } else { "no" }
            )?;
        }
        Ok(())
    }
}

/// Compares the equilibrium utilities of each ordering's expansion with those
/// of `game`.
pub fn check_resilience(
    game: &GameTree,
    orderings: &[Vec<PlayerId>],
    schema: Option<&CommitmentSchema>,
    budget: &CommitmentBudget,
    options: &SpeOptions,
) -> Result<ResilienceReport> {
    let vanilla: Vec<UtilityVector> = spe_utilities(game, options)?.into_iter().map(|(u, _)| u).collect();
    if vanilla.is_empty() {
        return Err(Error::NoEquilibrium("the original game has no equilibrium in scope".into()));
    }
    let known: BTreeSet<&UtilityVector> = vanilla.iter().collect();
    let mut results = Vec::new();
    let mut witnesses = Vec::new();
    for ordering in orderings {
        let covered: BTreeSet<_> = ordering.iter().collect();
        if covered.len() != game.players() || ordering.iter().any(|p| p.0 >= game.players()) {
            return Err(Error::InvalidParams(format!(
                "ordering {} does not cover all {} players",
                format_ordering(ordering),
                game.players()
            )));
        }
        let x = expand_sequence(game, ordering, budget, schema)?;
        let eqs = spe_utilities(&x.tree, options)?;
        if eqs.is_empty() {
            return Err(Error::NoEquilibrium(format!(
                "expansion for ordering {} has no equilibrium in scope",
                format_ordering(ordering)
            )));
        }
        let unmatched: Vec<(UtilityVector, StrategyProfile)> =
            eqs.iter().filter(|(u, _)| !known.contains(u)).cloned().collect();
        for (u, prof) in &unmatched {
            let check = is_subgame_perfect(&x.tree, prof, &DeviationSpace::exhaustive(game.players()))?;
            witnesses.push(ResilienceWitness {
                ordering: ordering.clone(),
                utilities: u.clone(),
                subgame_perfect: check.verdict,
                profile: prof.clone(),
            });
        }
        results.push(OrderingResult {
            ordering: ordering.clone(),
            mode: x.mode,
            expanded_nodes: x.tree.len(),
            equilibria: eqs.into_iter().map(|(u, _)| u).collect(),
            unmatched: unmatched.into_iter().map(|(u, _)| u).collect(),
            note: None,
        });
    }
    let resilient = results.iter().all(|r| r.unmatched.is_empty());
    let mix = match options.mixing_player {
        Some(p) => format!(" plus tie mixtures of player {p}"),
        None => String::new(),
    };
    Ok(ResilienceReport {
        params: None,
        vanilla,
        orderings: results,
        resilient,
        witnesses,
        scope: format!(
            "pure subgame-perfect equilibria{mix}; expansion: {}",
            if schema.is_some() { "schema catalogs" } else { "all cuts" }
        ),
    })
}

/// A contract can only react to commitments made before it, so orderings
/// that place its owner after a player it reads are run without it.
pub fn check_popsicle_resilience(
    params: &PopsicleParams,
    orderings: &[Vec<PlayerId>],
    contract: Option<&ContractAst>,
    schema_options: SchemaOptions,
    budget: &CommitmentBudget,
) -> Result<ResilienceReport> {
    let game = build_popsicle_with_budget(params, budget.max_nodes)?;
    let options = SpeOptions {
        mixing_player: Some(PlayerId::BUYER),
        ..SpeOptions::default()
    };
    let mut merged: Option<ResilienceReport> = None;
    for ordering in orderings {
        let pos = |p: PlayerId| ordering.iter().position(|&q| q == p);
        let deployable = contract.filter(|c| {
            c.referenced_players(params.n)
                .iter()
                .all(|&r| matches!((pos(c.owner), pos(r)), (Some(a), Some(b)) if a < b))
        });
        let schema = popsicle_schema(params, deployable, schema_options)?;
        let mut r = check_resilience(&game, std::slice::from_ref(ordering), Some(&schema), budget, &options)?;
        if let (Some(c), None) = (contract, deployable) {
            r.orderings[0].note = Some(format!(
                "contract omitted: player {} does not commit before every player it reads",
                c.owner
            ));
        }
        match &mut merged {
            None => merged = Some(r),
            Some(m) => {
                m.resilient &= r.resilient;
                m.orderings.append(&mut r.orderings);
                m.witnesses.append(&mut r.witnesses);
            }
        }
    }
    let mut report = merged.ok_or_else(|| Error::InvalidParams("no orderings to check".into()))?;
    report.params = Some(ParamsDoc::from(params));
    Ok(report)
}

// ---------------------------------------------------------------- attack

/// How the vendors other than the contract owner behave in the compliance
/// profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplianceReading {
    /// Vendors `j >= 2` commit to the price 1.
    CommitHigh,
    /// Vendors `j >= 2` commit to the price 0.
    ZeroPrice,
}

impl fmt::Display for ComplianceReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComplianceReading::CommitHigh => "commit-high",
            ComplianceReading::ZeroPrice => "zero-price",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub params: ParamsDoc,
    #[serde(serialize_with = "ser_ordering")]
    pub ordering: Vec<PlayerId>,
    pub reading: ComplianceReading,
    pub mode: ExpansionMode,
    pub expanded_nodes: usize,
    pub commitments: BTreeMap<usize, String>,
    pub expected: UtilityVector,
    pub equilibrium: EquilibriumReport,
    pub subgame_perfect: EquilibriumReport,
    pub checks: Vec<CheckResult>,
    pub trace: Vec<String>,
    #[serde(skip)]
    pub profile: StrategyProfile,
}

impl AttackReport {
    pub fn verified(&self) -> bool {
        self.equilibrium.verdict && self.checks.iter().all(|c| c.passed)
    }

    pub fn utilities(&self) -> &UtilityVector {
        &self.equilibrium.utilities
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

impl fmt::Display for AttackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "u = {}; equilibrium: {}",
            self.utilities(),
            if self.verified() { "yes" } else { "no" }
        )?;
        writeln!(
            f,
            "subgame perfect: {}",
            if self.subgame_perfect.verdict { "yes" } else { "no" }
        )?;
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail)?;
        }
        for line in &self.trace {
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

fn first_pledge(p: &Predicate) -> Option<(usize, Rational)> {
    match p {
        Predicate::BuyerPledges { vendor, q } => Some((*vendor, q.clone())),
        Predicate::Not(_) => None,
        Predicate::And(a, b) | Predicate::Or(a, b) => first_pledge(a).or_else(|| first_pledge(b)),
        _ => None,
    }
}

/// Completes the commitment choices along the path with subgame-perfect play
/// everywhere else; off the path, each subgame plays the equilibrium worst
/// for the player who would have deviated into it.
fn punishing_completion(
    x: &ExpandedGame,
    solver: &SpeSolver<'_>,
    path: &[(NodeId, ActionLabel)],
    base_root: NodeId,
) -> Result<StrategyProfile> {
    let tree = &x.tree;
    let mut prof = StrategyProfile::new();
    for &(v, label) in path {
        let d = tree.decision(v).unwrap();
        prof.set_pure(d.info_set, label);
        for e in d.actions.iter().filter(|e| e.label != label) {
            let outs = solver.outcomes(e.child)?;
            let worst = outs
                .iter()
                .min_by(|a, b| a.utilities.0[d.owner.0].cmp(&b.utilities.0[d.owner.0]))
                .ok_or_else(|| Error::NoEquilibrium(format!("no equilibrium below node {}", e.child)))?;
            prof.extend(&worst.profile());
        }
    }
    let outs = solver.outcomes(base_root)?;
    let on = outs
        .first()
        .ok_or_else(|| Error::NoEquilibrium("no equilibrium in the committed base game".into()))?;
    prof.extend(&on.profile());
    Ok(prof)
}

fn on_path_node(tree: &GameTree, path: &[(NodeId, ActionLabel)], player: PlayerId) -> Option<(NodeId, ActionLabel)> {
    path.iter()
        .copied()
        .find(|(v, _)| tree.decision(*v).is_some_and(|d| d.owner == player))
}

fn child_named(tree: &GameTree, v: NodeId, name: &str) -> Option<(ActionLabel, NodeId)> {
    let d = tree.decision(v)?;
    let i = d.commitment.as_ref()?.iter().position(|c| c.name == name)?;
    Some((d.actions[i].label, d.actions[i].child))
}

/// Deploys `contract` for its owner in the nested expansion with ordering
/// `1 -> 2 -> ... -> n -> 0` and verifies the compliance profile.
pub fn verify_attack(
    params: &PopsicleParams,
    contract: &ContractAst,
    reading: ComplianceReading,
    budget: &CommitmentBudget,
) -> Result<AttackReport> {
    if contract.owner != PlayerId(1) {
        return Err(Error::InvalidParams("the attack contract must belong to vendor 1".into()));
    }
    let pledge = contract
        .rules
        .iter()
        .find_map(|r| first_pledge(&r.guard))
        .ok_or_else(|| Error::InvalidParams("the contract has no buyer_pledges condition".into()))?;
    let game = build_popsicle_with_budget(params, budget.max_nodes)?;
    let schema = popsicle_schema(params, Some(contract), SchemaOptions::default())?;
    let ordering = attack_ordering(params.n);
    let x = expand_sequence(&game, &ordering, budget, Some(&schema))?;
    let tree = &x.tree;
    let players = params.n + 1;

    let other_price = match reading {
        ComplianceReading::CommitHigh => rational::one(),
        ComplianceReading::ZeroPrice => rational::zero(),
    };
    let mut choices: BTreeMap<PlayerId, String> = BTreeMap::new();
    choices.insert(PlayerId(1), CONTRACT_ENTRY.into());
    for j in 2..=params.n {
        choices.insert(PlayerId(j), price_entry(&other_price));
    }
    choices.insert(PlayerId::BUYER, pledge_entry(pledge.0, &pledge.1));
    let (path, base_root) = x.commitment_path(&choices)?;

    let mut trace = Vec::new();
    trace.push(format!(
        "expanded game ({} mode, ordering {}): {} nodes",
        x.mode,
        format_ordering(&ordering),
        tree.len()
    ));
    for (p, c) in &choices {
        let who = if *p == PlayerId::BUYER {
            "buyer".to_string()
        } else {
            format!("vendor {}", p.0)
        };
        trace.push(format!("{who} commits to `{c}`"));
    }

    let solver = SpeSolver::new(tree, SpeOptions::default());
    let profile = punishing_completion(&x, &solver, &path, base_root)?;
    let space = DeviationSpace::exhaustive(players);
    let mut eq = is_equilibrium(tree, &profile, &space)?;
    eq.scope = format!("{} over the {} expansion (every catalog choice and raw action)", eq.scope, x.mode);
    let mut spe = is_subgame_perfect(tree, &profile, &space)?;
    spe.scope = eq.scope.clone();
    let u = eq.utilities.clone();
    trace.push(format!("compliance play: u = {u}"));

    // (b) the buyer pays q to vendor 1, who prices at 0
    let q = &pledge.1;
    let mut expected = UtilityVector::zeros(players);
    expected.0[0] = params.buyer_utility(pledge.0, &rational::zero(), q);
    expected.0[pledge.0] = params.vendor_utility(&rational::zero(), q);
    let mut checks = vec![CheckResult {
        name: "utilities".into(),
        passed: u == expected,
        detail: format!("played {u}, expected {expected}"),
    }];

    // (c) vendors j >= 2 gain nothing from any lower constant price
    let mut undercut_ok = true;
    let mut details = Vec::new();
    for j in 2..=params.n {
        let (node, _) = on_path_node(tree, &path, PlayerId(j)).expect("vendor commitment on path");
        for v in params.prices.iter().filter(|v| **v < rational::one()) {
            let (label, child) = child_named(tree, node, &price_entry(v)).expect("constant price entry");
            let best = solver
                .outcomes(child)?
                .iter()
                .map(|o| o.utilities.0[j].clone())
                .max()
                .unwrap_or_else(rational::zero);
            let dev = profile.with_overrides([(&tree.decision(node).unwrap().info_set, &label)]);
            let played = play(tree, &dev)?.0[j].clone();
            let ok = best == rational::zero() && played == rational::zero();
            undercut_ok &= ok;
            details.push(format!(
                "vendor {j} price {}: u{j} = {} (best continuation {})",
                rational::format(v),
                rational::format(&played),
                rational::format(&best)
            ));
        }
    }
    trace.extend(details.iter().map(|d| format!("deviation: {d}")));
    checks.push(CheckResult {
        name: "undercut deterrence".into(),
        passed: undercut_ok,
        detail: if details.is_empty() {
            "no other vendors".into()
        } else {
            details.join("; ")
        },
    });

    // (d) buyer pledges to a vendor priced at 1 yield nothing
    let (bnode, _) = on_path_node(tree, &path, PlayerId::BUYER).expect("buyer commitment on path");
    let binfo: InfoSetId = tree.decision(bnode).unwrap().info_set;
    let mut best_buyer: Option<Rational> = None;
    let mut bdetails = Vec::new();
    if reading == ComplianceReading::CommitHigh {
        for j in 2..=params.n {
            for qq in params.effective_q() {
                let (label, child) = child_named(tree, bnode, &pledge_entry(j, &qq)).expect("pledge entry");
                let top = solver.outcomes(child)?.iter().map(|o| o.utilities.0[0].clone()).max();
                let dev = profile.with_overrides([(&binfo, &label)]);
                let played = play(tree, &dev)?.0[0].clone();
                let worst = top.map_or(played.clone(), |t| t.max(played.clone()));
                best_buyer = Some(best_buyer.map_or(worst.clone(), |b: Rational| b.max(worst.clone())));
                bdetails.push(format!("pledge({j},{}): u0 = {}", rational::format(&qq), rational::format(&played)));
            }
        }
    }
    trace.extend(bdetails.iter().map(|d| format!("deviation: buyer {d}")));
    checks.push(CheckResult {
        name: "buyer outside options".into(),
        passed: best_buyer.as_ref().is_none_or(|b| *b == rational::zero()),
        detail: match &best_buyer {
            Some(b) => format!("best utility from a vendor priced at 1: {}", rational::format(b)),
            None => "no vendor other than 1 is priced at 1".into(),
        },
    });

    Ok(AttackReport {
        params: ParamsDoc::from(params),
        ordering,
        reading,
        mode: x.mode,
        expanded_nodes: tree.len(),
        commitments: choices.into_iter().map(|(p, c)| (p.0, c)).collect(),
        expected,
        equilibrium: eq,
        subgame_perfect: spe,
        checks,
        trace,
        profile,
    })
}

/// The action the contract takes in the compliance branch, for reports.
pub fn describe_action(a: &RuleAction) -> String {
    a.to_string()
}
