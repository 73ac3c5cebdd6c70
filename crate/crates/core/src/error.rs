use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid rational `{0}` (expected a, a/b; decimals are not accepted)")]
    InvalidRational(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("no action assigned for information set {0}")]
    MissingAssignment(u32),
    #[error("information set {0} has a mixed assignment where a pure one is required")]
    NotPure(u32),
    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("grid compatibility: {0}")]
    GridIncompatible(String),
    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    BudgetExceeded {
        what: String,
        needed: String,
        limit: String,
    },
    #[error("cut does not match game: {0}")]
    CutMismatch(String),
    #[error("game has imperfect information (information set {0} has several nodes)")]
    ImperfectInformation(u32),
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("type error: {0}")]
    Type(String),
    #[error("contract scope: {0}")]
    ContractScope(String),
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub fn budget(what: impl Into<String>, needed: impl ToString, limit: impl ToString) -> Self {
        Error::BudgetExceeded {
            what: what.into(),
            needed: needed.to_string(),
            limit: limit.to_string(),
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
