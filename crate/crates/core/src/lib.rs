//! Shortest carefully synchronizing words for partial deterministic
//! automata.
//!
//! A word `w` *carefully synchronizes* a partial automaton when applying it
//! letter by letter to the whole state set never hits an undefined
//! transition and ends in a single state. This crate decides, for a fixed
//! length ℓ, whether such a word exists by reduction to CNF
//! ([`encoder`]), solves the CNF ([`solver`]), and searches over ℓ for the
//! minimum ([`search`]). An exact breadth-first search over subsets
//! ([`oracle`]) serves as an independent check for small automata.
//!
//! ```
//! use careful_sync::{min_csw, Pfa, SearchOptions};
//!
//! // a: 1→1, 2→1;  b: 1→2, undefined at 2
//! let pfa: Pfa = "2 2\n1 2\n1 0\n".parse()?;
//! let outcome = min_csw(&pfa, &SearchOptions::default())?;
//! assert_eq!(outcome.min_length, Some(1));
//! assert_eq!(outcome.witness.unwrap().to_string(), "a");
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod automaton;
pub mod cnf;
pub mod encoder;
pub mod experiment;
pub mod generators;
pub mod oracle;
pub mod search;
pub mod solver;

pub use automaton::{Pfa, StateSet, Word};
pub use cnf::{Assignment, Cnf};
pub use encoder::{decode_word, encode, scale, CnfInstance, VarLayout};
pub use generators::{pn, random_pfa, GenConfig};
pub use oracle::{power_bfs, OracleConfig};
pub use search::{min_csw, SearchOptions, SearchOutcome, SearchStatus};
pub use solver::{solve, Backend, Budget, SolveResult, Status};
