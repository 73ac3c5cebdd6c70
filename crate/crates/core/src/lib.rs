//! Exact-arithmetic engine for extensive-form games with absolute commitments.
//!
//! The crate models the popsicle pricing game (vendors post prices, a
//! discounting buyer picks one and may add a side payment), expands games with
//! commitment moves, and verifies or enumerates subgame-perfect equilibria with
//! exact rational utilities.

pub mod commitment;
pub mod contract;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod popsicle;
pub mod rational;
pub mod resilience;


pub use equilibrium::{
    DeviationKind, DeviationSpace, EquilibriumReport, SpeClass, SpeOptions, SpeSolver, TieRule,
    Witness,
};
pub use commitment::{CommitmentBudget, CommitmentSchema, Cut, ExpandedGame, ExpansionMode};
pub use contract::ContractAst;
pub use error::{Error, Result};
pub use game::{
    ActionDist, ActionLabel, GameTree, InfoSetId, Node, NodeId, PlayerId, StrategyProfile,
    UtilityVector,
};
pub use popsicle::{DiscountMode, PopsicleParams, PopsicleProfile};
pub use rational::Rational;
pub use resilience::{AttackReport, ComplianceReading, ResilienceReport};
