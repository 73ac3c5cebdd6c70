//! `popsicle`: build, solve, expand and verify popsicle-game instances, run
//! the commitment attack, check resilience, and sweep parameters.
//!
//! Exit status: 0 success, 1 a verification failed, 2 a budget was exceeded,
//! 3 the configuration is invalid.

mod config;
mod error;
mod oracle;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use popsicle_core::popsicle::ParamsDoc;
use popsicle_core::rational::{self, Rational};

use config::{Deviations, Expectation, Mode, Reading, ScenarioConfig, SweepRanges};
use error::{CliError, CliResult, EXIT_CONFIG, EXIT_VERIFICATION};

#[derive(Parser, Debug)]
#[command(name = "popsicle", version, about = "Exact experiments on the popsicle game and commitment attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for report files (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Node budget for game construction and expansion; POPSICLE_BUDGET_NODES overrides it.
    #[arg(long, global = true)]
    budget_nodes: Option<usize>,
    /// Cap on cuts enumerated per commitment node.
    #[arg(long, global = true)]
    budget_cuts: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the vanilla game and report its size.
    Build(ParamArgs),
    /// Solve the vanilla game (or a game file) for subgame-perfect equilibria.
    Solve {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        game: GameArgs,
    },
    /// Expand a game with commitments for an ordering.
    Expand {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        game: GameArgs,
        #[command(flatten)]
        contract: ContractArgs,
        /// Player ids, outermost commitment first, e.g. 1,2,0.
        #[arg(long, value_parser = parse_ordering)]
        order: Option<Ordering>,
        /// Use every cut instead of the popsicle catalogs.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Check a strategy profile for equilibrium and subgame perfection.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Strategy-profile JSON file.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Vendor prices, e.g. 1/2,0 (popsicle game only).
        #[arg(long, value_parser = parse_rationals)]
        at: Option<RationalList>,
        /// On-path buyer choice `vendor:q`; defaults to a best response.
        #[arg(long)]
        buyer: Option<String>,
        #[arg(long, value_enum, default_value_t = Deviations::Exhaustive)]
        deviations: Deviations,
    },
    /// Verify the commitment attack for vendor 1.
    Attack {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        contract: ContractArgs,
        /// How vendors other than the contract owner comply.
        #[arg(long, value_enum, default_value_t = Reading::CommitHigh)]
        reading: Reading,
    },
    /// Check Stackelberg resilience over commitment orderings.
    Resilience {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        contract: ContractArgs,
        /// Ordering to test; repeat for several. Defaults to 1..n,0 and its reverse.
        #[arg(long, value_parser = parse_ordering)]
        order: Vec<Ordering>,
        /// Test every ordering of the players.
        #[arg(long, conflicts_with = "order")]
        all_orderings: bool,
        /// Leave the contract out of vendor 1's catalog.
        #[arg(long, conflicts_with_all = ["contract", "epsilon"])]
        no_contract: bool,
        /// Use every cut instead of the popsicle catalogs.
        #[arg(long)]
        exhaustive: bool,
        /// Exit with status 1 unless the verdict matches.
        #[arg(long, value_enum)]
        expect: Option<Expectation>,
    },
    /// Sweep n, d and alpha; one CSV row per combination.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_parser = parse_counts, default_value = "2")]
        n: CountList,
        #[arg(long, value_parser = parse_rationals, default_value = "1/4,1/2,3/4")]
        d: RationalList,
        #[arg(long, value_parser = parse_rationals, default_value = "0,1/4")]
        alpha: RationalList,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare backward induction with brute force on random games.
    Oracle {
        #[arg(long, default_value_t = 100)]
        games: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        max_decisions: usize,
    },
    /// Run a scenario file (TOML or JSON).
    Run {
        config: PathBuf,
    },
}

#[derive(Clone, Debug)]
struct RationalList(Vec<Rational>);

#[derive(Clone, Debug)]
struct CountList(Vec<usize>);

#[derive(Clone, Debug)]
struct Ordering(Vec<usize>);

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

fn parse_rationals(s: &str) -> Result<RationalList, String> {
    rational::parse_list(s).map(RationalList).map_err(|e| e.to_string())
}

fn parse_counts(s: &str) -> Result<CountList, String> {
    if s.trim().is_empty() {
        return Ok(CountList(Vec::new()));
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("`{t}` is not a count")))
        .collect::<Result<_, _>>()
        .map(CountList)
}

fn parse_ordering(s: &str) -> Result<Ordering, String> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("`{t}` is not a player id")))
        .collect::<Result<_, _>>()
        .map(Ordering)
}

/// Price and side-payment grids plus discounting.
#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Vendor price grid; must contain 1.
    #[arg(long, value_parser = parse_rationals, default_value = "0,1/4,1/2,3/4,1")]
    prices: RationalList,
    /// Side-payment grid.
    #[arg(long, value_parser = parse_rationals, default_value = "0,1")]
    q: RationalList,
    /// Buyer discounting: multiplicative (d^(i-1)) or linear (1 - kappa*i*d).
    #[arg(long, default_value = "multiplicative", value_parser = ["multiplicative", "linear"])]
    discount: String,
    #[arg(long, value_parser = parse_rational)]
    kappa: Option<Rational>,
    /// Disable side payments.
    #[arg(long)]
    no_side_payments: bool,
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Number of vendors.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Buyer discount factor.
    #[arg(long, value_parser = parse_rational, default_value = "1")]
    d: Rational,
    /// Sandwich tax rate.
    #[arg(long, value_parser = parse_rational, default_value = "0")]
    alpha: Rational,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug, Clone)]
struct GameArgs {
    /// Game JSON file used instead of the popsicle game.
    #[arg(long)]
    game: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ContractArgs {
    /// Contract file or inline source; defaults to the built-in attack contract.
    #[arg(long)]
    contract: Option<String>,
    /// Use the sweetened built-in contract with this epsilon.
    #[arg(long, value_parser = parse_rational, conflicts_with = "contract")]
    epsilon: Option<Rational>,
}

impl GridArgs {
    fn doc(&self, n: usize, d: Rational, alpha: Rational) -> ParamsDoc {
        ParamsDoc {
            n,
            d,
            alpha,
            prices: self.prices.0.clone(),
            q_grid: self.q.0.clone(),
            discount_mode: self.discount.clone(),
            kappa: self.kappa.clone(),
            side_payments: !self.no_side_payments,
        }
    }
}

impl ParamArgs {
    fn doc(&self) -> ParamsDoc {
        self.grid.doc(self.n, self.d.clone(), self.alpha.clone())
    }
}

fn with_params(mode: Mode, p: &ParamArgs, game: Option<&GameArgs>) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(mode);
    match game.and_then(|g| g.game.clone()) {
        Some(path) => c.game = Some(path),
        None => c.params = Some(p.doc()),
    }
    c
}

fn with_contract(mut c: ScenarioConfig, a: &ContractArgs) -> ScenarioConfig {
    c.contract = a.contract.clone();
    c.epsilon = a.epsilon.clone();
    c
}

fn to_config(cli: &Cli) -> CliResult<ScenarioConfig> {
    let mut c = match &cli.command {
        Command::Build(p) => with_params(Mode::Build, p, None),
        Command::Solve { params, game } => with_params(Mode::Vanilla, params, Some(game)),
        Command::Expand {
            params,
            game,
            contract,
            order,
            exhaustive,
        } => {
            let mut c = with_contract(with_params(Mode::Expand, params, Some(game)), contract);
            c.orderings = order.iter().map(|o| o.0.clone()).collect();
            c.exhaustive = *exhaustive;
            c
        }
        Command::Verify {
            params,
            game,
            profile,
            at,
            buyer,
            deviations,
        } => {
            let mut c = with_params(Mode::Verify, params, Some(game));
            c.profile = profile.clone();
            c.at = at.as_ref().map(|a| a.0.clone());
            c.buyer = buyer.clone();
            c.deviations = *deviations;
            c
        }
        Command::Attack {
            params,
            contract,
            reading,
        } => {
            let mut c = with_contract(with_params(Mode::Attack, params, None), contract);
            c.reading = *reading;
            c
        }
        Command::Resilience {
            params,
            contract,
            order,
            all_orderings,
            no_contract,
            exhaustive,
            expect,
        } => {
            let mut c = with_contract(with_params(Mode::Resilience, params, None), contract);
            c.orderings = order.iter().map(|o| o.0.clone()).collect();
            c.all_orderings = *all_orderings;
            c.no_contract = *no_contract;
            c.exhaustive = *exhaustive;
            c.expect = *expect;
            c
        }
        Command::Sweep {
            grid,
            n,
            d,
            alpha,
            jobs,
        } => {
            let mut c = ScenarioConfig::new(Mode::Sweep);
            // n, d and alpha are placeholders; each cell overrides them
            c.params = Some(grid.doc(2, rational::one(), rational::zero()));
            c.sweep = Some(SweepRanges {
                n: n.0.clone(),
                d: d.0.clone(),
                alpha: alpha.0.clone(),
                jobs: *jobs,
            });
            c
        }
        Command::Oracle {
            games,
            seed,
            max_decisions,
        } => {
            let mut c = ScenarioConfig::new(Mode::Oracle);
            c.oracle.games = *games;
            c.oracle.seed = *seed;
            c.oracle.max_decisions = *max_decisions;
            c
        }
        Command::Run { config } => ScenarioConfig::load(config)?,
    };
    if cli.out.is_some() {
        c.out = cli.out.clone();
    }
    if cli.budget_nodes.is_some() {
        c.budget.max_nodes = cli.budget_nodes;
    }
    if cli.budget_cuts.is_some() {
        c.budget.max_cuts_per_node = cli.budget_cuts;
    }
    Ok(c)
}

fn execute(cli: &Cli) -> CliResult<Option<String>> {
    let cfg = to_config(cli)?;
    let outcome = run::run_scenario(&cfg)?;
    print!("{}", outcome.summary);
    if let Some(dir) = &cfg.out {
        let io = |source| CliError::Io {
            path: dir.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        for (name, contents) in &outcome.files {
            std::fs::write(dir.join(name), contents).map_err(io)?;
        }
    }
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failure)) => {
            eprintln!("error: {}", CliError::Verification(failure));
            ExitCode::from(EXIT_VERIFICATION as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
