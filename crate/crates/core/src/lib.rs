//! Simulator for two-player numbering games: Alice fills tables of partial
//! functions stage by stage, Bob answers with a computable strategy, and a
//! referee decides the winner conditions on declared limits.

pub mod adversaries;
pub mod cli;
pub mod protocol;
pub mod referee;
pub mod strategies;
pub mod tables;

pub use adversaries::{AdversarySpec, Declarations, LimitDecl, Pattern};
pub use protocol::{run_game, run_game_with, AliceMove, BobMove, GameKind, GameState, ProtocolError, Transcript};
pub use referee::{brute_force_referee, referee, RefereeReport, Status, Verdict, Window};
pub use strategies::Bob;
pub use tables::{FiniteFun, FiniteTable, InvalidationSet};
