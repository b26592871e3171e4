//! Stepwise deductive reasoning over controlled-English rulebases.
//!
//! A run repeatedly selects a rule, selects facts that satisfy its premises
//! and composes a one-hop conclusion, until a strategy says stop. The
//! solver then looks the statement up among the given and derived facts and
//! stitches a proof graph from the steps that produced it.

pub mod datagen;
pub mod eval;
pub mod lang;
pub mod par;
pub mod pipeline;
pub mod reasoner;
pub mod strategy;
