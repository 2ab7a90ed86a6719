//! Exact solving of small-material chess positions on rectangular, cylindric
//! and toroidal boards, experiments on the intransitivity of the induced
//! "beats" relation between half-positions, and The Magicians — a card game
//! whose positions admit a transitive value function.
//!
//! Module map:
//! - [`board`]: boards, pieces, half/whole positions, superposition, codec.
//! - [`movegen`]: topology-aware legal moves, check detection, application.
//! - [`solver`]: retrograde tables with distance-to-mate, forward oracles,
//!   persistence.
//! - [`intransitivity`]: the beats relation, chains, cycle certificates,
//!   Monte-Carlo and exhaustive searches, potential feasibility.
//! - [`magicians`]: The Magicians rules, perfect values, row heuristic, AI.
//!
//! Draw convention throughout: values are pure game-theoretic (win/draw/loss
//! over the position graph) with no 50-move rule and no repetition counters.

pub mod board;
pub mod intransitivity;
pub mod magicians;
pub mod movegen;
pub mod solver;
