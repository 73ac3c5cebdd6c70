//! Parameter sweeps: one CSV row per (n, d, alpha) in lexicographic order.
//! Cells run on a rayon pool; a failing cell records its error in-row.

use std::fmt::Write as _;

use popsicle_core::contract::builtin_attack_contract;
use popsicle_core::equilibrium::is_subgame_perfect;
use popsicle_core::popsicle::{build_popsicle_with_budget, vanilla_equilibrium, ParamsDoc};
use popsicle_core::rational::{self, Rational};
use popsicle_core::resilience::{check_popsicle_resilience, attack_ordering, verify_attack, SchemaOptions};
use popsicle_core::{CommitmentBudget, ComplianceReading, DeviationSpace, PopsicleParams};
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{config, CliResult};
use crate::run::{csv_text, Outcome};

pub const HEADER: [&str; 15] = [
    "n",
    "d",
    "alpha",
    "vanilla_u",
    "vanilla_u0",
    "vanilla_u1",
    "vanilla_subgame_perfect",
    "bound_one_minus_alpha",
    "holds_one_minus_alpha",
    "bound_alpha",
    "holds_alpha",
    "attack_u",
    "attack_u1",
    "attack_verified",
    "resilience",
];

/// Column holding a cell's error, after the fixed columns.
pub const ERROR_COLUMN: &str = "error";

#[derive(Clone, Debug)]
struct Cell {
    n: usize,
    d: Rational,
    alpha: Rational,
}

fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort();
    v.dedup();
    v
}

pub fn run(cfg: &ScenarioConfig) -> CliResult<Outcome> {
    let ranges = cfg.sweep.as_ref().ok_or_else(|| config("missing `sweep` ranges"))?;
    let base = cfg.params.clone().ok_or_else(|| config("missing `params`"))?;
    let budget = cfg.commitment_budget()?;
    let mut cells = Vec::new();
    for n in sorted(&ranges.n) {
        for d in sorted(&ranges.d) {
            for alpha in sorted(&ranges.alpha) {
                cells.push(Cell {
                    n,
                    d: d.clone(),
                    alpha: alpha.clone(),
                });
            }
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = ranges.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| config(format!("worker pool: {e}")))?;
    let rows: Vec<Vec<String>> = pool.install(|| cells.par_iter().map(|c| row(&base, c, &budget)).collect());

    let errors = rows.iter().filter(|r| !r.last().unwrap().is_empty()).count();
    let mut header: Vec<&str> = HEADER.to_vec();
    header.push(ERROR_COLUMN);
    let table = csv_text(&header, &rows);
    let mut o = Outcome::default();
    writeln!(o.summary, "sweep: {} rows, {} with errors", rows.len(), errors).unwrap();
    o.summary.push_str(&table);
    o.file("sweep.csv", table);
    Ok(o)
}

fn row(base: &ParamsDoc, c: &Cell, budget: &CommitmentBudget) -> Vec<String> {
    let mut cols = vec![c.n.to_string(), rational::format(&c.d), rational::format(&c.alpha)];
    let mut doc = base.clone();
    doc.n = c.n;
    doc.d = c.d.clone();
    doc.alpha = c.alpha.clone();
    let mut errors = Vec::new();
    match PopsicleParams::try_from(doc) {
        Ok(params) => {
            fill(&mut cols, &mut errors, 8, || vanilla_cols(&params, budget));
            fill(&mut cols, &mut errors, 3, || attack_cols(&params, budget));
            fill(&mut cols, &mut errors, 1, || resilience_cols(&params, budget));
        }
        Err(e) => {
            cols.resize(HEADER.len(), String::new());
            errors.push(e.to_string());
        }
    }
    cols.push(errors.join("; "));
    cols
}

fn fill(
    cols: &mut Vec<String>,
    errors: &mut Vec<String>,
    width: usize,
    f: impl FnOnce() -> popsicle_core::Result<Vec<String>>,
) {
    match f() {
        Ok(v) => {
            debug_assert_eq!(v.len(), width);
            cols.extend(v);
        }
        Err(e) => {
            cols.extend(std::iter::repeat_n(String::new(), width));
            errors.push(e.to_string());
        }
    }
}

fn vanilla_cols(params: &PopsicleParams, budget: &CommitmentBudget) -> popsicle_core::Result<Vec<String>> {
    let game = build_popsicle_with_budget(params, budget.max_nodes)?;
    let eq = vanilla_equilibrium(params)?;
    let rep = is_subgame_perfect(
        &game,
        &eq.to_strategy_profile(params)?,
        &DeviationSpace::exhaustive(params.n + 1),
    )?;
    let u = &rep.utilities;
    let one_minus_d = rational::one() - &params.d;
    let loose = (rational::one() - &params.alpha) * &one_minus_d;
    let printed = &params.alpha * &one_minus_d;
    Ok(vec![
        u.to_string(),
        rational::format(&u.0[0]),
        rational::format(&u.0[1]),
        rep.verdict.to_string(),
        rational::format(&loose),
        (u.0[1] <= loose).to_string(),
        rational::format(&printed),
        (u.0[1] <= printed).to_string(),
    ])
}

fn attack_cols(params: &PopsicleParams, budget: &CommitmentBudget) -> popsicle_core::Result<Vec<String>> {
    let contract = builtin_attack_contract(params)?;
    let rep = verify_attack(params, &contract, ComplianceReading::CommitHigh, budget)?;
    Ok(vec![
        rep.utilities().to_string(),
        rational::format(&rep.utilities().0[1]),
        rep.verified().to_string(),
    ])
}

fn resilience_cols(params: &PopsicleParams, budget: &CommitmentBudget) -> popsicle_core::Result<Vec<String>> {
    let contract = builtin_attack_contract(params)?;
    let rep = check_popsicle_resilience(
        params,
        &[attack_ordering(params.n)],
        Some(&contract),
        SchemaOptions::default(),
        budget,
    )?;
    Ok(vec![rep.verdict()])
}
