//! Automatic complexity of finite words.
//!
//! Exact nondeterministic (`A_N`) and deterministic partial (`A^-`)
//! automatic complexity by canonical state-sequence search, the power-family
//! lower bound `A_N^lower`, critical exponents, k-bonacci words, and
//! engine-verified witness automata built from loop schedules.

pub mod automata;
pub mod cli;
pub mod constructions;
pub mod repetitions;
pub mod search;
pub mod words;

pub use automata::{Nfa, StateSequence};
pub use words::Word;
