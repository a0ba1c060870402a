//! Exact shortest carefully synchronizing words by breadth-first search in
//! the partial power automaton.
//!
//! Nodes are nonempty subsets of `Q`; letter `a` leads from `S` to `S·a`
//! when `a` is defined at every state of `S`. A shortest path from `Q` to a
//! singleton spells a shortest carefully synchronizing word. Letters are
//! expanded in increasing order, so among all shortest witnesses the
//! lexicographically least one is returned.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use thiserror::Error;

use crate::automaton::{Pfa, StateSet, Word, STATE_SET_CAP};
use crate::search::{SearchOutcome, SearchStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Generate subsets on demand, stopping at the first singleton.
    OnTheFly,
    /// Tabulate the action of every letter on all `2^n − 1` subsets first,
    /// then search the resulting graph.
    Materialized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub max_states: usize,
    pub max_visited: usize,
    pub strategy: Strategy,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_states: 24,
            max_visited: 1 << 24,
            strategy: Strategy::OnTheFly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("automaton has {states} states, oracle limit is {limit}")]
    TooManyStates { states: usize, limit: usize },
    #[error("subset budget of {limit} exhausted after visiting {visited} subsets")]
    BudgetExceeded { visited: usize, limit: usize },
}

/// Search statistics alongside the outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub outcome: SearchOutcome,
    pub visited: usize,
}

pub fn power_bfs(pfa: &Pfa, config: &OracleConfig) -> Result<SearchOutcome, OracleError> {
    power_bfs_report(pfa, config).map(|r| r.outcome)
}

pub fn power_bfs_report(pfa: &Pfa, config: &OracleConfig) -> Result<OracleReport, OracleError> {
    let n = pfa.states();
    let limit = config.max_states.min(STATE_SET_CAP);
    if n > limit {
        return Err(OracleError::TooManyStates { states: n, limit });
    }
    let started = Instant::now();
    let (found, visited) = match config.strategy {
        Strategy::OnTheFly => on_the_fly(pfa, config.max_visited)?,
        Strategy::Materialized => materialized(pfa, config.max_visited)?,
    };
    let outcome = match found {
        Some(w) => SearchOutcome::found(w, Vec::new(), 0, started.elapsed()),
        None => SearchOutcome::not_synchronizing(Vec::new(), 0, started.elapsed()),
    };
    Ok(OracleReport { outcome, visited })
}

fn on_the_fly(pfa: &Pfa, max_visited: usize) -> Result<(Option<Word>, usize), OracleError> {
    let start = StateSet::full(pfa.states());
    if start.is_singleton() {
        return Ok((Some(Word::empty()), 1));
    }
    // subset -> (parent, letter); the start node has letter 0
    let mut parent: HashMap<StateSet, (StateSet, u32)> = HashMap::new();
    parent.insert(start, (start, 0));
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for a in 1..=pfa.letters() {
            let Some(t) = pfa.apply_letter(s, a) else {
                continue;
            };
            if parent.contains_key(&t) {
                continue;
            }
            if parent.len() >= max_visited {
                return Err(OracleError::BudgetExceeded {
                    visited: parent.len(),
                    limit: max_visited,
                });
            }
            parent.insert(t, (s, a as u32));
            if t.is_singleton() {
                let visited = parent.len();
                return Ok((Some(walk_back(t, |x| parent[&x])), visited));
            }
            queue.push_back(t);
        }
    }
    Ok((None, parent.len()))
}

fn walk_back(mut node: StateSet, step: impl Fn(StateSet) -> (StateSet, u32)) -> Word {
    let mut letters = Vec::new();
    loop {
        let (prev, a) = step(node);
        if a == 0 {
            break;
        }
        letters.push(a as usize);
        node = prev;
    }
    letters.reverse();
    Word::new(letters)
}

fn materialized(pfa: &Pfa, max_visited: usize) -> Result<(Option<Word>, usize), OracleError> {
    let n = pfa.states();
    let m = pfa.letters();
    // subset ids are stored as u32
    if n > 31 {
        return Err(OracleError::TooManyStates {
            states: n,
            limit: 31,
        });
    }
    let subsets = (1usize << n) - 1;
    if subsets > max_visited {
        return Err(OracleError::BudgetExceeded {
            visited: 0,
            limit: max_visited,
        });
    }
    const UNDEF: u32 = u32::MAX;
    // table[s * m + (a - 1)] = image bits of subset s under a, built from
    // s with its lowest state removed
    let size = subsets + 1;
    let mut table = vec![UNDEF; size * m];
    table[..m].fill(0);
    for s in 1..size {
        let low = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        for a in 0..m {
            let prev = table[rest * m + a];
            let target = pfa.row(a + 1)[low];
            table[s * m + a] = if prev == UNDEF || target == 0 {
                UNDEF
            } else {
                prev | 1 << (target - 1)
            };
        }
    }

    let start = subsets;
    if start.is_power_of_two() {
        return Ok((Some(Word::empty()), 1));
    }
    let mut parent = vec![(0u32, 0u32); size];
    let mut seen = vec![false; size];
    seen[start] = true;
    let mut visited = 1;
    let mut queue = VecDeque::from([start as u32]);
    while let Some(s) = queue.pop_front() {
        for a in 0..m {
            let t = table[s as usize * m + a];
            if t == UNDEF || seen[t as usize] {
                continue;
            }
            seen[t as usize] = true;
            visited += 1;
            parent[t as usize] = (s, a as u32 + 1);
            if t.is_power_of_two() {
                let word = walk_back(StateSet::from_bits(t as u64), |x| {
                    let bits = x.bits() as usize;
                    if bits == start {
                        (x, 0)
                    } else {
                        let (p, a) = parent[bits];
                        (StateSet::from_bits(p as u64), a)
                    }
                });
                return Ok((Some(word), visited));
            }
            queue.push_back(t);
        }
    }
    Ok((None, visited))
}

/// Whether some word carefully maps `Q` onto a singleton, without
/// building witnesses. Same limits as [`power_bfs`].
pub fn is_carefully_synchronizable(pfa: &Pfa, config: &OracleConfig) -> Result<bool, OracleError> {
    power_bfs(pfa, config).map(|o| o.status == SearchStatus::Found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::pn;

    fn both(pfa: &Pfa) -> SearchOutcome {
        let lazy = power_bfs(pfa, &OracleConfig::default()).unwrap();
        let full = power_bfs(
            pfa,
            &OracleConfig {
                strategy: Strategy::Materialized,
                ..OracleConfig::default()
            },
        )
        .unwrap();
        assert_eq!(lazy.status, full.status);
        assert_eq!(lazy.witness, full.witness);
        lazy
    }

    #[test]
    fn a1() {
        let pfa = Pfa::parse("2 2\n1 2\n1 0\n").unwrap();
        let o = both(&pfa);
        assert_eq!(o.status, SearchStatus::Found);
        assert_eq!(o.min_length, Some(1));
        assert_eq!(o.witness, Some(Word::new(vec![1])));
    }

    #[test]
    fn singleton() {
        let o = both(&Pfa::parse("1 1\n0\n").unwrap());
        assert_eq!(o.min_length, Some(0));
        assert_eq!(o.witness, Some(Word::empty()));
    }

    #[test]
    fn no_letter_defined_everywhere() {
        let pfa = Pfa::parse("2 2\n0 1\n2 0\n").unwrap();
        let o = both(&pfa);
        assert_eq!(o.status, SearchStatus::NotSynchronizing);
        assert_eq!(o.witness, None);
    }

    #[test]
    fn cerny_3_has_length_4() {
        // a: cyclic shift, b: merges 1 into 2
        let c3 = Pfa::parse("3 2\n2 2\n3 2\n1 3\n").unwrap();
        let o = both(&c3);
        assert_eq!(o.min_length, Some(4));
        assert!(c3.is_carefully_synchronizing(o.witness.as_ref().unwrap()));
    }

    #[test]
    fn lexicographically_least_witness() {
        // both "a" and "b" synchronize; "a" must win
        let pfa = Pfa::parse("2 2\n1 2\n1 2\n").unwrap();
        assert_eq!(both(&pfa).witness, Some(Word::new(vec![1])));
        let pfa = Pfa::parse("2 2\n1 2\n0 2\n").unwrap();
        assert_eq!(both(&pfa).witness, Some(Word::new(vec![2])));
    }

    #[test]
    fn limits() {
        let p = pn(10).unwrap();
        let cfg = OracleConfig {
            max_states: 8,
            ..OracleConfig::default()
        };
        assert_eq!(
            power_bfs(&p, &cfg),
            Err(OracleError::TooManyStates {
                states: 10,
                limit: 8
            })
        );
        let cfg = OracleConfig {
            max_visited: 5,
            ..OracleConfig::default()
        };
        assert!(matches!(
            power_bfs(&p, &cfg),
            Err(OracleError::BudgetExceeded {
                visited: 5,
                limit: 5
            })
        ));
    }

    #[test]
    fn visited_count_bounded() {
        for n in 3..=8 {
            let r = power_bfs_report(&pn(n).unwrap(), &OracleConfig::default()).unwrap();
            assert!(r.visited < 1 << n);
        }
    }
}
