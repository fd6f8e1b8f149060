//! Zero-sum optimal stopping game between an intrusion defender and an
//! attacker.
//!
//! The defender observes alert counts and spends up to `L` defensive stops;
//! the attacker sees the full state and decides when to start and when to
//! end an intrusion. The crate simulates the game, learns threshold
//! strategies by fictitious play with SPSA best responses ([`tfp`]), and
//! evaluates strategies by dynamic programming on a belief grid
//! ([`evaluator`]).

pub mod error;
pub mod evaluator;
pub mod game;
pub mod obs_model;
pub mod policy;
pub mod sim;
pub mod spsa;
pub mod strategies;
pub mod tfp;

pub use error::{Error, Result};
pub use game::{Action, ActionPair, Belief, GameConfig, GameState, ObservationModel, State};
pub use strategies::{BaselineDefender, MixedStrategy, Player, ThresholdStrategy};
