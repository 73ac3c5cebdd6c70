//! Scenario runners. Each returns a summary for standard output, report
//! files for `--out`, and a failure message when a check does not hold.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use popsicle_core::commitment::expand_sequence;
use popsicle_core::contract::{builtin_sweetened, builtin_attack_contract, parse_for};
use popsicle_core::equilibrium::{is_equilibrium, is_subgame_perfect, solve_backward_induction, TieRule};
use popsicle_core::popsicle::{
    buyer_best_response, build_popsicle_with_budget, vanilla_equilibrium, BuyerChoice, BuyerDist,
};
use popsicle_core::rational::{self, Rational};
use popsicle_core::resilience::{
    all_orderings, check_popsicle_resilience, check_resilience, default_orderings, format_ordering,
    attack_ordering, popsicle_schema, verify_attack, SchemaOptions,
};
use popsicle_core::{
    ContractAst, DeviationSpace, DiscountMode, GameTree, PlayerId, PopsicleParams, PopsicleProfile, SpeOptions,
    SpeSolver, StrategyProfile, UtilityVector,
};
use serde::Serialize;

use crate::config::{Deviations, Expectation, Mode, ScenarioConfig};
use crate::error::{config, CliError, CliResult};

#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: String,
    /// File name and contents, written under the output directory.
    pub files: Vec<(String, String)>,
    pub failure: Option<String>,
}

impl Outcome {
    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let mut out = match cfg.mode {
        Mode::Build => build(cfg),
        Mode::Vanilla if cfg.game.is_some() => solve_game(cfg),
        Mode::Vanilla => vanilla(cfg),
        Mode::Verify => verify(cfg),
        Mode::Expand => expand(cfg),
        Mode::Attack => attack(cfg),
        Mode::Resilience => resilience(cfg),
        Mode::Sweep => crate::sweep::run(cfg),
        Mode::Oracle => crate::oracle::run(cfg),
    }?;
    out.file("summary.txt", out.summary.clone());
    Ok(out)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn buyer_mixing() -> SpeOptions {
    SpeOptions {
        mixing_player: Some(PlayerId::BUYER),
        ..SpeOptions::default()
    }
}

fn load_game(cfg: &ScenarioConfig) -> CliResult<(GameTree, Option<PopsicleParams>)> {
    match &cfg.game {
        Some(path) => Ok((GameTree::from_json(&read_text(path)?)?, None)),
        None => {
            let params = cfg.popsicle_params()?;
            let budget = cfg.commitment_budget()?;
            Ok((build_popsicle_with_budget(&params, budget.max_nodes)?, Some(params)))
        }
    }
}

/// Contract from a file path or inline source, else the built-in one
/// (sweetened when `epsilon` is set).
pub fn load_contract(cfg: &ScenarioConfig, params: &PopsicleParams) -> CliResult<Option<ContractAst>> {
    if cfg.no_contract {
        return Ok(None);
    }
    let ast = match (&cfg.contract, &cfg.epsilon) {
        (Some(src), _) => {
            let path = Path::new(src);
            let text = if path.is_file() {
                read_text(path)?
            } else if src.contains("else") {
                src.clone()
            } else {
                return Err(config(format!("contract `{src}` is neither a file nor contract source")));
            };
            parse_for(&text, params)?
        }
        (None, Some(eps)) => builtin_sweetened(params, eps)?,
        (None, None) => builtin_attack_contract(params)?,
    };
    Ok(Some(ast))
}

fn orderings(cfg: &ScenarioConfig, players: usize, default: Vec<Vec<PlayerId>>) -> Vec<Vec<PlayerId>> {
    if cfg.all_orderings {
        all_orderings(players)
    } else if cfg.orderings.is_empty() {
        default
    } else {
        cfg.orderings
            .iter()
            .map(|o| o.iter().map(|&p| PlayerId(p)).collect())
            .collect()
    }
}

fn describe_buyer(dist: &BuyerDist) -> String {
    if let [(c, _)] = dist.as_slice() {
        return c.to_string();
    }
    dist.iter()
        .map(|(c, p)| format!("{} {c}", rational::format(p)))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn describe_prices(p: &[Rational]) -> String {
    format!("({})", p.iter().map(rational::format).collect::<Vec<_>>().join(", "))
}

// ------------------------------------------------------------------ build

fn build(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let (g, params) = load_game(cfg)?;
    let params = params.expect("build uses the popsicle game");
    let mut o = Outcome::default();
    writeln!(
        o.summary,
        "popsicle game: {} vendors, {} prices, {} side payments",
        params.n,
        params.prices.len(),
        params.effective_q().len()
    )
    .unwrap();
    writeln!(
        o.summary,
        "nodes: {} ({} decisions, {} leaves), information sets: {}",
        g.len(),
        g.decision_count(),
        g.leaf_count(),
        g.info_sets().len()
    )
    .unwrap();
    o.file("game.json", g.to_json() + "\n");
    Ok(o)
}

// ---------------------------------------------------------------- vanilla

#[derive(Serialize)]
struct VanillaDoc {
    params: popsicle_core::popsicle::ParamsDoc,
    prices: Vec<String>,
    buyer: String,
    utilities: UtilityVector,
    subgame_perfect: bool,
    buyer_gets_d: Option<bool>,
    bounds: Vec<BoundDoc>,
    spe_classes: usize,
    spe_classes_with_u0_d: usize,
}

#[derive(Serialize)]
struct BoundDoc {
    name: String,
    value: String,
    holds: bool,
}

fn vanilla(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let (game, params) = load_game(cfg)?;
    let params = params.expect("vanilla uses the popsicle game");
    let eq = vanilla_equilibrium(&params)?;
    let sp = eq.to_strategy_profile(&params)?;
    let check = is_subgame_perfect(&game, &sp, &DeviationSpace::exhaustive(params.n + 1))?;
    let u = check.utilities.clone();
    let multiplicative = params.discount == DiscountMode::Multiplicative;
    let buyer_gets_d = multiplicative.then(|| u.0[0] == params.d);

    let one_minus_d = rational::one() - &params.d;
    let mut bounds = Vec::new();
    if multiplicative {
        for (name, factor) in [
            ("(1-alpha)(1-d)", rational::one() - &params.alpha),
            ("alpha(1-d)", params.alpha.clone()),
        ] {
            let value = factor * &one_minus_d;
            bounds.push(BoundDoc {
                name: format!("u1 <= {name}"),
                holds: u.0[1] <= value,
                value: rational::format(&value),
            });
        }
    }

    let solver = SpeSolver::new(&game, buyer_mixing());
    let classes = solver.classes(game.root(), &BTreeMap::new())?;
    let mut rows = Vec::new();
    let mut with_d = 0;
    for c in &classes {
        let pp = PopsicleProfile::from_strategy_profile(&params, &c.profile)?;
        let gets_d = c.utilities.0[0] == params.d;
        with_d += usize::from(gets_d);
        rows.push(vec![
            describe_prices(&pp.prices),
            pp.on_path().map(describe_buyer).unwrap_or_default(),
            c.utilities.to_string(),
            gets_d.to_string(),
        ]);
    }

    let buyer = eq.on_path().map(describe_buyer).unwrap_or_default();
    let mut o = Outcome::default();
    writeln!(o.summary, "u0 = {}", rational::format(&u.0[0])).unwrap();
    writeln!(o.summary, "u = {u}; subgame perfect: {}", yes(check.verdict)).unwrap();
    writeln!(o.summary, "profile: p = {}; buyer: {buyer}", describe_prices(&eq.prices)).unwrap();
    for b in &bounds {
        writeln!(o.summary, "bound {} = {}: {}", b.name, b.value, if b.holds { "holds" } else { "violated" }).unwrap();
    }
    writeln!(
        o.summary,
        "grid subgame-perfect classes: {} ({} with u0 = d)",
        classes.len(),
        with_d
    )
    .unwrap();

    if !check.verdict {
        let w = check.witness.as_ref().expect("failing checks carry a witness");
        o.failure = Some(format!(
            "the closed-form profile is not subgame perfect: player {} gains {} at node {}",
            w.player,
            rational::format(&w.gain),
            w.subgame_root
        ));
    } else if buyer_gets_d == Some(false) {
        o.failure = Some(format!("buyer utility {} differs from d", rational::format(&u.0[0])));
    }
    o.file(
        "vanilla.json",
        json(&VanillaDoc {
            params: (&params).into(),
            prices: eq.prices.iter().map(rational::format).collect(),
            buyer,
            utilities: u,
            subgame_perfect: check.verdict,
            buyer_gets_d,
            bounds,
            spe_classes: classes.len(),
            spe_classes_with_u0_d: with_d,
        }),
    );
    o.file("spe.csv", csv_text(&["prices", "buyer", "utilities", "u0_equals_d"], &rows));
    Ok(o)
}

#[derive(Serialize)]
struct SolutionDoc {
    utilities: UtilityVector,
    profile: StrategyProfile,
}

fn solve_game(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let (game, _) = load_game(cfg)?;
    let solver = SpeSolver::new(&game, SpeOptions::default());
    let outs = solver.outcomes(game.root())?;
    let mut o = Outcome::default();
    writeln!(o.summary, "subgame-perfect utility vectors: {}", outs.len()).unwrap();
    for out in outs.iter() {
        writeln!(o.summary, "  u = {}", out.utilities).unwrap();
    }
    if game.is_perfect_information() {
        let bi = solve_backward_induction(&game, TieRule::KeepAll, 1 << 20)?;
        writeln!(o.summary, "backward induction: {} pure profiles", bi.len()).unwrap();
    }
    if outs.is_empty() {
        o.failure = Some("no subgame-perfect equilibrium in scope".into());
    }
    let docs: Vec<SolutionDoc> = outs
        .iter()
        .map(|x| SolutionDoc {
            utilities: x.utilities.clone(),
            profile: x.profile(),
        })
        .collect();
    o.file("solution.json", json(&docs));
    Ok(o)
}

// ----------------------------------------------------------------- verify

fn parse_buyer(text: &str) -> CliResult<BuyerChoice> {
    let (v, q) = text
        .split_once(':')
        .ok_or_else(|| config(format!("buyer choice `{text}` is not `vendor:q`")))?;
    let vendor = v
        .trim()
        .parse()
        .map_err(|_| config(format!("buyer choice `{text}`: bad vendor")))?;
    Ok(BuyerChoice::new(vendor, rational::parse(q)?))
}

fn verify(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let (game, params) = load_game(cfg)?;
    let profile = match (&cfg.profile, &params) {
        (Some(path), _) => serde_json::from_str::<StrategyProfile>(&read_text(path)?)
            .map_err(|e| config(format!("{}: {e}", path.display())))?,
        (None, Some(params)) => {
            let prices = cfg.at.clone().expect("validated");
            let choice = match &cfg.buyer {
                Some(b) => parse_buyer(b)?,
                None => buyer_best_response(params, &prices).remove(0),
            };
            PopsicleProfile::with_best_response_policy(params, prices, vec![(choice, rational::one())])?
                .to_strategy_profile(params)?
        }
        (None, None) => unreachable!("validated"),
    };
    profile.validate_for(&game)?;
    let space = match cfg.deviations {
        Deviations::Exhaustive => DeviationSpace::exhaustive(game.players()),
        Deviations::Raw => DeviationSpace::raw_actions(game.players()),
    };
    let ne = is_equilibrium(&game, &profile, &space)?;
    let spe = is_subgame_perfect(&game, &profile, &space)?;
    let mut o = Outcome::default();
    writeln!(o.summary, "{ne}").unwrap();
    writeln!(o.summary, "subgame perfect: {}", yes(spe.verdict)).unwrap();
    if let Some(w) = &spe.witness {
        writeln!(
            o.summary,
            "witness: player {} gains {} at node {} by playing {:?}",
            w.player,
            rational::format(&w.gain),
            w.subgame_root,
            w.deviation
        )
        .unwrap();
    }
    writeln!(o.summary, "deviations: {}", space.label()).unwrap();
    if !spe.verdict {
        o.failure = Some("the profile is not subgame perfect".into());
    }
    #[derive(Serialize)]
    struct VerifyDoc<'a> {
        equilibrium: &'a popsicle_core::EquilibriumReport,
        subgame_perfect: &'a popsicle_core::EquilibriumReport,
    }
    o.file(
        "verify.json",
        json(&VerifyDoc {
            equilibrium: &ne,
            subgame_perfect: &spe,
        }),
    );
    Ok(o)
}

// ----------------------------------------------------------------- expand

fn expand(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let (game, params) = load_game(cfg)?;
    let budget = cfg.commitment_budget()?;
    let default = match &params {
        Some(p) => vec![attack_ordering(p.n)],
        None => vec![(0..game.players()).map(PlayerId).collect()],
    };
    let all = orderings(cfg, game.players(), default);
    let [ordering] = all.as_slice() else {
        return Err(config("expand takes exactly one ordering"));
    };
    let schema = match &params {
        Some(p) if !cfg.exhaustive => {
            let contract = load_contract(cfg, p)?;
            Some(popsicle_schema(p, contract.as_ref(), SchemaOptions::default())?)
        }
        _ => None,
    };
    let x = expand_sequence(&game, ordering, &budget, schema.as_ref())?;
    let options = if params.is_some() { buyer_mixing() } else { SpeOptions::default() };
    let outs = SpeSolver::new(&x.tree, options).outcomes(x.tree.root())?;

    let mut o = Outcome::default();
    writeln!(
        o.summary,
        "ordering {} ({}): {} nodes, from {}",
        format_ordering(ordering),
        x.mode,
        x.tree.len(),
        game.len()
    )
    .unwrap();
    for level in &x.commitment_nodes {
        let shown: Vec<&str> = level.choices.iter().take(8).map(String::as_str).collect();
        let more = if level.choices.len() > 8 { ", ..." } else { "" };
        writeln!(
            o.summary,
            "  player {}: {} commitments [{}{more}]",
            level.player,
            level.choices.len(),
            shown.join(", ")
        )
        .unwrap();
    }
    writeln!(o.summary, "subgame-perfect utility vectors: {}", outs.len()).unwrap();
    for out in outs.iter() {
        writeln!(o.summary, "  u = {}", out.utilities).unwrap();
    }
    o.file("expanded.json", x.tree.to_json() + "\n");
    Ok(o)
}

// ----------------------------------------------------------------- attack

fn attack(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let params = cfg.popsicle_params()?;
    let budget = cfg.commitment_budget()?;
    if cfg.no_contract {
        return Err(config("the attack needs a contract"));
    }
    let contract = load_contract(cfg, &params)?.expect("contract present");
    let report = verify_attack(&params, &contract, cfg.reading.into(), &budget)?;
    let mut o = Outcome::default();
    write!(o.summary, "{report}").unwrap();
    writeln!(o.summary, "contract:\n{contract}").unwrap();
    if !report.verified() {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        o.failure = Some(if failed.is_empty() {
            "the compliance profile is not an equilibrium".into()
        } else {
            format!("failed checks: {}", failed.join(", "))
        });
    }
    o.file("attack.json", report.to_json() + "\n");
    Ok(o)
}

// ------------------------------------------------------------- resilience

fn resilience(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let params = cfg.popsicle_params()?;
    let budget = cfg.commitment_budget()?;
    let orderings = orderings(cfg, params.n + 1, default_orderings(params.n));
    let report = if cfg.exhaustive {
        let game = build_popsicle_with_budget(&params, budget.max_nodes)?;
        let mut r = check_resilience(&game, &orderings, None, &budget, &buyer_mixing())?;
        r.params = Some((&params).into());
        r
    } else {
        let contract = load_contract(cfg, &params)?;
        check_popsicle_resilience(&params, &orderings, contract.as_ref(), SchemaOptions::default(), &budget)?
    };
    let mut o = Outcome::default();
    write!(o.summary, "{report}").unwrap();
    let expected = match cfg.expect {
        Some(Expectation::Resilient) => Some(true),
        Some(Expectation::NotResilient) => Some(false),
        None => None,
    };
    if expected.is_some_and(|e| e != report.resilient) {
        o.failure = Some(format!("expected {:?}, got {}", cfg.expect.unwrap(), report.verdict()));
    }
    if !report.resilient && report.witnesses.iter().any(|w| !w.subgame_perfect) {
        o.failure = Some("a non-resilience witness failed its subgame-perfection re-check".into());
    }
    o.file("resilience.json", report.to_json() + "\n");
    o.file(
        "resilience.csv",
        csv_text(&popsicle_core::ResilienceReport::CSV_HEADER, &report.csv_rows()),
    );
    Ok(o)
}
