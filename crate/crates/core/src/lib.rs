//! Coinductive semantics for a small shared-variable concurrent language.
//!
//! Programs denote possibly infinite resumption trees. The crate provides
//! big-step, giant-step and small-step constructions of those trees, trace
//! semantics with explicit schedules, and bounded checkers for strong and
//! weak bisimilarity between them.

pub mod bigstep;
pub mod cli;
pub mod corpus;
pub mod equiv;
pub mod giantstep;
pub mod lang;
pub mod resumption;
pub mod smallstep;
pub mod tracesem;
