//! Minimum length of a carefully synchronizing word by repeated SAT queries.
//!
//! If `w` carefully synchronizes and `a` is the first letter of `w`, then so
//! does `aw`: `a` is defined everywhere and `Q·a ⊆ Q`. Satisfiability is
//! therefore monotone in the length, and the least satisfiable length can
//! be bracketed by doubling (1, 2, 4, …) and then isolated by bisection.
//! Every probe instance is derived from the length-1 encoding with
//! [`scale`].

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::automaton::{Pfa, Word};
use crate::encoder::{decode_word, encode, scale, CnfInstance, EncodeError};
use crate::solver::{Backend, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchStatus {
    Found,
    NotSynchronizing,
    UnknownUpToBound,
}

/// One satisfiability query of the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probe {
    pub length: usize,
    pub sat: bool,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub min_length: Option<usize>,
    pub witness: Option<Word>,
    /// Probes in the order they were issued.
    pub probes: Vec<Probe>,
    /// Largest length examined.
    pub bound: usize,
    pub elapsed: Duration,
}

impl SearchOutcome {
    pub(crate) fn found(w: Word, probes: Vec<Probe>, bound: usize, elapsed: Duration) -> Self {
        SearchOutcome {
            status: SearchStatus::Found,
            min_length: Some(w.len()),
            witness: Some(w),
            probes,
            bound,
            elapsed,
        }
    }

    pub(crate) fn not_synchronizing(probes: Vec<Probe>, bound: usize, elapsed: Duration) -> Self {
        SearchOutcome {
            status: SearchStatus::NotSynchronizing,
            min_length: None,
            witness: None,
            probes,
            bound,
            elapsed,
        }
    }

    /// Probe results sorted by length.
    pub fn probes_by_length(&self) -> Vec<Probe> {
        let mut p = self.probes.clone();
        p.sort_by_key(|p| p.length);
        p
    }

    /// CSV of the probe record: `length,result,time_s`.
    pub fn probes_csv(&self) -> String {
        let mut out = String::from("length,result,time_s\n");
        for p in &self.probes {
            out.push_str(&format!(
                "{},{},{:.6}\n",
                p.length,
                if p.sat { "SAT" } else { "UNSAT" },
                p.elapsed.as_secs_f64()
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub max_length: usize,
    pub backend: Backend,
    /// Refute early when some pair of states can never be carefully
    /// merged. Polynomial and sound, not complete.
    pub pair_refutation: bool,
    /// Explore up to this many subsets reachable from `Q` before any SAT
    /// query; running out of subsets without meeting a singleton refutes
    /// synchronizability. `0` disables the check.
    pub subset_budget: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_length: 1 << 20,
            backend: Backend::default(),
            pair_refutation: true,
            subset_budget: 64,
        }
    }
}

impl SearchOptions {
    pub fn with_max_length(mut self, max_length: usize) -> Self {
        self.max_length = max_length;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("max_length must be at least 1")]
    ZeroBound,
    #[error("solver failed at length {length}: {source}")]
    Solver {
        length: usize,
        #[source]
        source: SolveError,
        probes: Vec<Probe>,
    },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("decoded word {word} at length {length} is not carefully synchronizing")]
    WitnessRejected { length: usize, word: Word },
}

impl SearchError {
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            SearchError::Solver {
                source: SolveError::BudgetExceeded { .. },
                ..
            }
        )
    }

    pub fn is_correctness_failure(&self) -> bool {
        match self {
            SearchError::WitnessRejected { .. } => true,
            SearchError::Solver { source, .. } => source.is_correctness_failure(),
            _ => false,
        }
    }
}

/// Whether every pair of distinct states can be carefully merged by some
/// word. A carefully synchronizing word merges every pair, so `false`
/// proves the automaton is not carefully synchronizing.
pub fn all_pairs_mergeable(pfa: &Pfa) -> bool {
    let n = pfa.states();
    if n <= 1 {
        return true;
    }
    let idx = |p: usize, q: usize| {
        let (p, q) = if p < q { (p, q) } else { (q, p) };
        (p - 1) * n + (q - 1)
    };
    let mut good = vec![false; n * n];
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n * n];
    let mut queue = VecDeque::new();
    for p in 1..=n {
        for q in p + 1..=n {
            for a in 1..=pfa.letters() {
                let (Some(p2), Some(q2)) = (pfa.next(p, a), pfa.next(q, a)) else {
                    continue;
                };
                if p2 == q2 {
                    if !good[idx(p, q)] {
                        good[idx(p, q)] = true;
                        queue.push_back(idx(p, q));
                    }
                } else {
                    preds[idx(p2, q2)].push(idx(p, q) as u32);
                }
            }
        }
    }
    while let Some(pair) = queue.pop_front() {
        for &pred in &preds[pair] {
            let pred = pred as usize;
            if !good[pred] {
                good[pred] = true;
                queue.push_back(pred);
            }
        }
    }
    (1..=n).all(|p| (p + 1..=n).all(|q| good[idx(p, q)]))
}

/// Breadth-first exploration of the subsets carefully reachable from `Q`,
/// on bit vectors of any width. `Some(false)` when every reachable subset
/// was seen and none is a singleton, `Some(true)` when a singleton was met,
/// `None` when `budget` subsets were stored first.
pub fn subsets_reach_singleton(pfa: &Pfa, budget: usize) -> Option<bool> {
    let n = pfa.states();
    if n <= 1 {
        return Some(true);
    }
    if budget == 0 {
        return None;
    }
    let words = n.div_ceil(64);
    let mut start = vec![0u64; words];
    for q in 0..n {
        start[q / 64] |= 1 << (q % 64);
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        'letters: for a in 1..=pfa.letters() {
            let row = pfa.row(a);
            let mut t = vec![0u64; words];
            for (w, &bits) in s.iter().enumerate() {
                let mut bits = bits;
                while bits != 0 {
                    let q = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let target = row[q] as usize;
                    if target == 0 {
                        continue 'letters;
                    }
                    t[(target - 1) / 64] |= 1 << ((target - 1) % 64);
                }
            }
            if t.iter().map(|w| w.count_ones()).sum::<u32>() == 1 {
                return Some(true);
            }
            if !seen.contains(&t) {
                if seen.len() >= budget {
                    return None;
                }
                seen.insert(t.clone());
                queue.push_back(t);
            }
        }
    }
    Some(false)
}

struct Prober<'a> {
    template: CnfInstance,
    backend: &'a Backend,
    probes: Vec<Probe>,
}

impl Prober<'_> {
    fn probe(&mut self, length: usize) -> Result<Option<Word>, SearchError> {
        let started = Instant::now();
        let owned;
        let inst = if length == 1 {
            &self.template
        } else {
            owned = scale(&self.template, length)?;
            &owned
        };
        let result = match self.backend.solve(&inst.cnf) {
            Ok(r) => r,
            Err(source) => {
                return Err(SearchError::Solver {
                    length,
                    source,
                    probes: std::mem::take(&mut self.probes),
                })
            }
        };
        let word = match &result.model {
            Some(model) => Some(decode_word(model, &inst.layout)?),
            None => None,
        };
        self.probes.push(Probe {
            length,
            sat: word.is_some(),
            elapsed: started.elapsed(),
        });
        Ok(word)
    }
}

/// Finds a shortest carefully synchronizing word of length at most
/// `options.max_length`.
pub fn min_csw(pfa: &Pfa, options: &SearchOptions) -> Result<SearchOutcome, SearchError> {
    if options.max_length == 0 {
        return Err(SearchError::ZeroBound);
    }
    let started = Instant::now();
    if pfa.states() == 1 {
        return Ok(SearchOutcome::found(
            Word::empty(),
            Vec::new(),
            0,
            started.elapsed(),
        ));
    }
    if pfa.total_letters().next().is_none()
        || (options.pair_refutation && !all_pairs_mergeable(pfa))
    {
        return Ok(SearchOutcome::not_synchronizing(
            Vec::new(),
            0,
            started.elapsed(),
        ));
    }
    if subsets_reach_singleton(pfa, options.subset_budget) == Some(false) {
        return Ok(SearchOutcome::not_synchronizing(
            Vec::new(),
            0,
            started.elapsed(),
        ));
    }

    let mut prober = Prober {
        template: encode(pfa, 1)?,
        backend: &options.backend,
        probes: Vec::new(),
    };

    // lengths <= `unsat` are known unsatisfiable (0 vacuously)
    let mut unsat = 0;
    let mut length = 1;
    let (mut sat, mut witness) = loop {
        if let Some(w) = prober.probe(length)? {
            break (length, w);
        }
        unsat = length;
        if length >= options.max_length {
            return Ok(SearchOutcome {
                status: SearchStatus::UnknownUpToBound,
                min_length: None,
                witness: None,
                probes: prober.probes,
                bound: options.max_length,
                elapsed: started.elapsed(),
            });
        }
        length = length.saturating_mul(2).min(options.max_length);
    };
    let bound = sat;
    while sat - unsat > 1 {
        let mid = unsat + (sat - unsat) / 2;
        match prober.probe(mid)? {
            Some(w) => {
                sat = mid;
                witness = w;
            }
            None => unsat = mid,
        }
    }

    if !pfa.is_carefully_synchronizing(&witness) {
        return Err(SearchError::WitnessRejected {
            length: sat,
            word: witness,
        });
    }
    Ok(SearchOutcome::found(
        witness,
        prober.probes,
        bound,
        started.elapsed(),
    ))
}
