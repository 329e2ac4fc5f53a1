//! Threshold budgets for discrete-bidding graph games with advantage
//! tie-breaking.

pub mod budget;
pub mod game;
pub mod oracle;
pub mod turn_based;

pub use budget::{AdvValue, BudgetError, Threshold};
pub use game::{dualize, normalize_objective, validate, FrugalParityGame, GameDoc, GameError, ThresholdMap};
pub mod average;
pub mod certifier;
pub mod engine;
pub mod parity;
pub mod reach;
