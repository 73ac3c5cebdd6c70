//! Scenario configuration, shared by config files and command-line flags.

use std::path::{Path, PathBuf};

use popsicle_core::popsicle::ParamsDoc;
use popsicle_core::rational::{self, Rational};
use popsicle_core::{CommitmentBudget, ComplianceReading, PopsicleParams};
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, CliResult};

pub const BUDGET_ENV: &str = "POPSICLE_BUDGET_NODES";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Build,
    Vanilla,
    Verify,
    Expand,
    Attack,
    Resilience,
    Sweep,
    Oracle,
}

impl Mode {
    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).expect("unit variant")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    #[default]
    CommitHigh,
    ZeroPrice,
}

impl From<Reading> for ComplianceReading {
    fn from(r: Reading) -> Self {
        match r {
            Reading::CommitHigh => ComplianceReading::CommitHigh,
            Reading::ZeroPrice => ComplianceReading::ZeroPrice,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Resilient,
    NotResilient,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Deviations {
    #[default]
    Exhaustive,
    Raw,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub max_nodes: Option<usize>,
    pub max_cuts_per_node: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub games: usize,
    pub seed: u64,
    pub max_decisions: usize,
    pub max_actions: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            games: 100,
            seed: 7,
            max_decisions: 12,
            max_actions: 3,
        }
    }
}

/// Parameter ranges of a sweep; grids and discounting come from `params`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRanges {
    pub n: Vec<usize>,
    #[serde(with = "rational::serde_vec")]
    pub d: Vec<Rational>,
    #[serde(with = "rational::serde_vec")]
    pub alpha: Vec<Rational>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default)]
    pub params: Option<ParamsDoc>,
    /// A game file used instead of the popsicle game (solve, expand, verify).
    #[serde(default)]
    pub game: Option<PathBuf>,
    /// Player ids, outermost commitment first.
    #[serde(default)]
    pub orderings: Vec<Vec<usize>>,
    #[serde(default)]
    pub all_orderings: bool,
    /// Contract file path or inline source.
    #[serde(default)]
    pub contract: Option<String>,
    #[serde(default)]
    pub no_contract: bool,
    #[serde(default, with = "rational::serde_opt")]
    pub epsilon: Option<Rational>,
    #[serde(default)]
    pub reading: Reading,
    /// Expand with every cut instead of the popsicle catalogs.
    #[serde(default)]
    pub exhaustive: bool,
    #[serde(default)]
    pub expect: Option<Expectation>,
    #[serde(default)]
    pub deviations: Deviations,
    /// Strategy-profile file for `verify`.
    #[serde(default)]
    pub profile: Option<PathBuf>,
    /// Vendor prices for `verify` on the popsicle game.
    #[serde(default, with = "opt_vec")]
    pub at: Option<Vec<Rational>>,
    /// On-path buyer choice `vendor:q` for `verify`; best response if absent.
    #[serde(default)]
    pub buyer: Option<String>,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub sweep: Option<SweepRanges>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

mod opt_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.iter().map(rational::format).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rational>>, D::Error> {
        let texts = Option::<Vec<String>>::deserialize(d)?;
        texts
            .map(|t| t.iter().map(|x| rational::parse(x).map_err(serde::de::Error::custom)).collect())
            .transpose()
    }
}

impl ScenarioConfig {
    pub fn new(mode: Mode) -> Self {
        ScenarioConfig {
            mode,
            params: None,
            game: None,
            orderings: Vec::new(),
            all_orderings: false,
            contract: None,
            no_contract: false,
            epsilon: None,
            reading: Reading::default(),
            exhaustive: false,
            expect: None,
            deviations: Deviations::default(),
            profile: None,
            at: None,
            buyer: None,
            budget: BudgetConfig::default(),
            oracle: OracleConfig::default(),
            sweep: None,
            out: None,
        }
    }

    /// Reads a TOML (`.toml`) or JSON (anything else) scenario file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: ScenarioConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))?
        };
        Ok(cfg)
    }

    /// Checks that the fields `mode` needs are present and consistent.
    pub fn validate(&self) -> CliResult<()> {
        let needs_params = match self.mode {
            Mode::Build | Mode::Attack | Mode::Resilience | Mode::Sweep => true,
            Mode::Vanilla | Mode::Expand | Mode::Verify => self.game.is_none(),
            Mode::Oracle => false,
        };
        if needs_params && self.params.is_none() {
            return Err(config(format!("mode {} needs `params`", self.mode.name())));
        }
        if self.game.is_some() && self.params.is_some() {
            return Err(config("give either `params` or `game`, not both"));
        }
        if self.contract.is_some() && (self.epsilon.is_some() || self.no_contract) {
            return Err(config("`contract` excludes `epsilon` and `no_contract`"));
        }
        if self.mode == Mode::Verify && self.profile.is_none() && self.at.is_none() {
            return Err(config("verify needs a `profile` file or vendor prices `at`"));
        }
        if self.mode == Mode::Verify && self.game.is_some() && self.profile.is_none() {
            return Err(config("verify on a game file needs a `profile` file"));
        }
        if self.mode == Mode::Sweep && self.sweep.is_none() {
            return Err(config("mode sweep needs `sweep` ranges"));
        }
        if self.budget.max_nodes == Some(0) || self.budget.max_cuts_per_node == Some(0) {
            return Err(config("budgets must be positive"));
        }
        if self.oracle.max_actions < 2 || self.oracle.max_decisions == 0 {
            return Err(config("oracle games need max_actions >= 2 and max_decisions >= 1"));
        }
        if self.sweep.as_ref().is_some_and(|s| s.jobs == Some(0)) {
            return Err(config("sweep jobs must be positive"));
        }
        Ok(())
    }

    pub fn popsicle_params(&self) -> CliResult<PopsicleParams> {
        let doc = self.params.clone().ok_or_else(|| config("missing `params`"))?;
        Ok(PopsicleParams::try_from(doc)?)
    }

    /// Node budget: the config value, overridden by the environment.
    pub fn commitment_budget(&self) -> CliResult<CommitmentBudget> {
        let mut b = CommitmentBudget::default();
        if let Some(m) = self.budget.max_nodes {
            b.max_nodes = m;
        }
        if let Some(c) = self.budget.max_cuts_per_node {
            b.max_cuts_per_node = c;
        }
        if let Ok(v) = std::env::var(BUDGET_ENV) {
            b.max_nodes = v
                .trim()
                .parse()
                .ok()
                .filter(|&m: &usize| m > 0)
                .ok_or_else(|| config(format!("{BUDGET_ENV}={v} is not a positive integer")))?;
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_doc() -> ParamsDoc {
        let p = PopsicleParams::new(
            2,
            rational::ratio(1, 2),
            rational::ratio(1, 4),
            vec![rational::int(0), rational::ratio(1, 2), rational::int(1)],
            vec![rational::int(0), rational::int(1)],
        )
        .unwrap();
        ParamsDoc::from(&p)
    }

    #[test]
    fn toml_and_json_agree() {
        let toml_src = r#"
mode = "attack"
orderings = [[1, 2, 0]]

[params]
n = 2
d = "1/2"
alpha = "1/4"
prices = ["0", "1/2", "1"]
q_grid = ["0", "1"]
"#;
        let a: ScenarioConfig = toml::from_str(toml_src).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        let b: ScenarioConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.params, Some(params_doc()));
        a.validate().unwrap();
    }

    #[test]
    fn decimals_and_missing_fields_are_rejected() {
        let bad = r#"{"mode": "vanilla", "params": {"n": 2, "d": "0.5", "alpha": "0", "prices": ["0"], "q_grid": ["0"]}}"#;
        assert!(serde_json::from_str::<ScenarioConfig>(bad).is_err());
        let cfg = ScenarioConfig::new(Mode::Vanilla);
        assert!(cfg.validate().is_err());
        let mut v = ScenarioConfig::new(Mode::Verify);
        v.params = Some(params_doc());
        assert!(v.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"mode": "oracle", "typo": 1}"#).is_err());
    }
}
