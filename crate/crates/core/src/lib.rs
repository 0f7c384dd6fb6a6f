//! Synthesis of Markov chains from finite families.
//!
//! A [`family::Family`] describes finitely many Markov chains over a shared
//! state space, indexed by discrete holes. Families come from sketches
//! ([`sketch`]) or from a JSON interchange format. Synthesis queries (find a
//! member satisfying a reachability property, partition the family, find
//! the best member) are answered by one of three engines in [`synth`]:
//! plain enumeration, abstraction refinement over a quotient MDP, and
//! inductive synthesis with critical-subsystem counterexamples.

pub mod bench;
pub mod cli;
pub mod family;
pub mod model;
pub mod sketch;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;
