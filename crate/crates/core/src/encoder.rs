//! Reduction from "does the automaton have a carefully synchronizing word of
//! length ℓ" to CNF satisfiability.
//!
//! Variables:
//!
//! * letter variables `x(i, t)`: the `t`-th letter of the word is `i`
//!   (`1 ≤ i ≤ m`, `1 ≤ t ≤ ℓ`);
//! * state variables `y(j, t)`: state `j` is in the image after `t` steps
//!   (`1 ≤ j ≤ n`, `0 ≤ t ≤ ℓ`).
//!
//! Numbering: `y(j, 0) = j`, then one block of `m + n` variables per step,
//! letters first. This makes the instance for length ℓ a shifted copy of
//! the length-1 instance, which [`scale`] exploits.
//!
//! Clause groups, emitted in this order:
//!
//! * **I**: the `n` unit clauses `y(j, 0)`;
//! * per step `t`, **L**: `x(1,t) ∨ … ∨ x(m,t)` and `¬x(r,t) ∨ ¬x(s,t)` for
//!   `r < s`, followed by **T**: for every `(j, i)` in lexicographic order,
//!   `¬y(j,t−1) ∨ ¬x(i,t) ∨ y(k,t)` if `δ(j, i) = k`, otherwise
//!   `¬y(j,t−1) ∨ ¬x(i,t)`;
//! * **S**: `¬y(r,ℓ) ∨ ¬y(s,ℓ)` for `r < s`.

use thiserror::Error;

use crate::automaton::{Pfa, Word};
use crate::cnf::{Assignment, Cnf};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("word length must be at least 1")]
    ZeroLength,
    #[error("template must encode length 1, got length {0}")]
    NotATemplate(usize),
    #[error("template does not have the shape produced by encode")]
    MalformedTemplate,
    #[error("step {step}: {count} letter variables are true, expected exactly one")]
    NotExactlyOneLetter { step: usize, count: usize },
    #[error("assignment covers {got} variables, layout needs {expected}")]
    AssignmentSize { expected: usize, got: usize },
}

/// Numbering of the letter and state variables for one `(n, m, ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarLayout {
    pub states: usize,
    pub letters: usize,
    pub length: usize,
}

impl VarLayout {
    pub fn new(states: usize, letters: usize, length: usize) -> Self {
        VarLayout {
            states,
            letters,
            length,
        }
    }

    /// Width of one step block.
    pub fn stride(&self) -> usize {
        self.states + self.letters
    }

    pub fn var_count(&self) -> usize {
        self.stride() * self.length + self.states
    }

    /// Letter variable `x(i, t)`, `1 ≤ t`.
    #[inline]
    pub fn letter_var(&self, i: usize, t: usize) -> usize {
        debug_assert!((1..=self.letters).contains(&i) && (1..=self.length).contains(&t));
        self.states + (t - 1) * self.stride() + i
    }

    /// State variable `y(j, t)`, `0 ≤ t`.
    #[inline]
    pub fn state_var(&self, j: usize, t: usize) -> usize {
        debug_assert!((1..=self.states).contains(&j) && t <= self.length);
        if t == 0 {
            j
        } else {
            self.states + (t - 1) * self.stride() + self.letters + j
        }
    }

    /// Inverse of the numbering, for diagnostics.
    pub fn describe(&self, v: usize) -> Option<VarRole> {
        if v == 0 || v > self.var_count() {
            return None;
        }
        if v <= self.states {
            return Some(VarRole::State { state: v, step: 0 });
        }
        let off = v - self.states - 1;
        let step = off / self.stride() + 1;
        let within = off % self.stride();
        Some(if within < self.letters {
            VarRole::Letter {
                letter: within + 1,
                step,
            }
        } else {
            VarRole::State {
                state: within - self.letters + 1,
                step,
            }
        })
    }

    pub fn initial_clauses(&self) -> usize {
        self.states
    }

    pub fn letter_clauses(&self) -> usize {
        self.length * (self.letters * (self.letters - 1) / 2 + 1)
    }

    pub fn transition_clauses(&self) -> usize {
        self.length * self.letters * self.states
    }

    pub fn sync_clauses(&self) -> usize {
        self.states * (self.states - 1) / 2
    }

    /// `ℓ(m(m−1)/2 + mn + 1) + n(n+1)/2`
    pub fn clause_count(&self) -> usize {
        let (n, m, l) = (self.states, self.letters, self.length);
        l * (m * (m - 1) / 2 + m * n + 1) + n * (n + 1) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    Letter { letter: usize, step: usize },
    State { state: usize, step: usize },
}

/// Clause counts per group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GroupSizes {
    pub initial: usize,
    pub letter: usize,
    pub transition: usize,
    pub sync: usize,
}

impl GroupSizes {
    pub fn total(&self) -> usize {
        self.initial + self.letter + self.transition + self.sync
    }
}

/// An encoded instance together with its variable layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfInstance {
    pub cnf: Cnf,
    pub layout: VarLayout,
    pub groups: GroupSizes,
}

impl CnfInstance {
    pub fn var_count(&self) -> usize {
        self.cnf.var_count
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.cnf.clauses
    }

    /// DIMACS text with one comment line recording `n`, `m` and `ℓ`.
    pub fn to_dimacs(&self) -> String {
        let l = &self.layout;
        self.cnf.to_dimacs(&[format!(
            "careful synchronization n={} m={} length={}",
            l.states, l.letters, l.length
        )])
    }
}

fn push_step_block(pfa: &Pfa, layout: &VarLayout, t: usize, out: &mut Vec<Vec<i32>>) {
    let (n, m) = (pfa.states(), pfa.letters());
    let x = |i| layout.letter_var(i, t) as i32;
    out.push((1..=m).map(x).collect());
    for r in 1..=m {
        for s in r + 1..=m {
            out.push(vec![-x(r), -x(s)]);
        }
    }
    for j in 1..=n {
        let prev = layout.state_var(j, t - 1) as i32;
        for i in 1..=m {
            match pfa.next(j, i) {
                Some(k) => out.push(vec![-prev, -x(i), layout.state_var(k, t) as i32]),
                None => out.push(vec![-prev, -x(i)]),
            }
        }
    }
}

fn push_sync_block(layout: &VarLayout, out: &mut Vec<Vec<i32>>) {
    let n = layout.states;
    for r in 1..=n {
        for s in r + 1..=n {
            out.push(vec![
                -(layout.state_var(r, layout.length) as i32),
                -(layout.state_var(s, layout.length) as i32),
            ]);
        }
    }
}

/// Encodes the existence of a carefully synchronizing word of length
/// exactly `length`.
pub fn encode(pfa: &Pfa, length: usize) -> Result<CnfInstance, EncodeError> {
    if length == 0 {
        return Err(EncodeError::ZeroLength);
    }
    let layout = VarLayout::new(pfa.states(), pfa.letters(), length);
    let mut clauses = Vec::with_capacity(layout.clause_count());
    clauses.extend((1..=layout.states).map(|j| vec![j as i32]));
    for t in 1..=length {
        push_step_block(pfa, &layout, t, &mut clauses);
    }
    push_sync_block(&layout, &mut clauses);
    debug_assert_eq!(clauses.len(), layout.clause_count());

    Ok(CnfInstance {
        cnf: Cnf::with_clauses(layout.var_count(), clauses),
        layout,
        groups: GroupSizes {
            initial: layout.initial_clauses(),
            letter: layout.letter_clauses(),
            transition: layout.transition_clauses(),
            sync: layout.sync_clauses(),
        },
    })
}

/// Produces the length-`length` instance from the length-1 instance by
/// shifting the step block, without consulting the automaton.
///
/// Copy `t` of the step block shifts every variable above `n` by
/// `(t−1)(m+n)` and rewrites `y(j,0)` to `y(j,t−1)`. The sync clauses
/// are shifted onto the last block.
pub fn scale(template: &CnfInstance, length: usize) -> Result<CnfInstance, EncodeError> {
    if length == 0 {
        return Err(EncodeError::ZeroLength);
    }
    let base = template.layout;
    if base.length != 1 {
        return Err(EncodeError::NotATemplate(base.length));
    }
    if template.clauses().len() != base.clause_count() {
        return Err(EncodeError::MalformedTemplate);
    }
    let n = base.states as i32;
    let stride = base.stride() as i32;
    let layout = VarLayout::new(base.states, base.letters, length);
    let block_len = base.letter_clauses() + base.transition_clauses();

    let src = template.clauses();
    let (initial, rest) = src.split_at(base.states);
    let (block, sync) = rest.split_at(block_len);

    let mut clauses = Vec::with_capacity(layout.clause_count());
    clauses.extend(initial.iter().cloned());
    for t in 1..=length as i32 {
        let shift = (t - 1) * stride;
        // y(j, 0) becomes y(j, t-1), which lives at n + (t-2)·stride + m + j
        let boundary = (t - 2) * stride + (stride - n);
        clauses.extend(block.iter().map(|c| {
            c.iter()
                .map(|&lit| {
                    let v = lit.abs();
                    let mapped = if v > n {
                        v + shift
                    } else if t == 1 {
                        v
                    } else {
                        v + n + boundary
                    };
                    mapped * lit.signum()
                })
                .collect()
        }));
    }
    let last_shift = (length as i32 - 1) * stride;
    clauses.extend(sync.iter().map(|c| {
        c.iter()
            .map(|&lit| (lit.abs() + last_shift) * lit.signum())
            .collect()
    }));

    Ok(CnfInstance {
        cnf: Cnf::with_clauses(layout.var_count(), clauses),
        layout,
        groups: GroupSizes {
            initial: layout.initial_clauses(),
            letter: layout.letter_clauses(),
            transition: layout.transition_clauses(),
            sync: layout.sync_clauses(),
        },
    })
}

/// Reads the word off the letter variables of a model.
pub fn decode_word(assignment: &Assignment, layout: &VarLayout) -> Result<Word, EncodeError> {
    if assignment.len() < layout.var_count() {
        return Err(EncodeError::AssignmentSize {
            expected: layout.var_count(),
            got: assignment.len(),
        });
    }
    let mut word = Word::empty();
    for t in 1..=layout.length {
        let chosen: Vec<usize> = (1..=layout.letters)
            .filter(|&i| assignment.value(layout.letter_var(i, t)))
            .collect();
        match chosen[..] {
            [i] => word.push(i),
            _ => {
                return Err(EncodeError::NotExactlyOneLetter {
                    step: t,
                    count: chosen.len(),
                })
            }
        }
    }
    Ok(word)
}

/// The canonical model for a word: letter variables spell `word`, and
/// `y(j, t)` holds iff `j` lies in the image of the whole state set under
/// the length-`t` prefix. Steps past an undefined transition get an empty
/// image.
pub fn assignment_for_word(pfa: &Pfa, word: &Word) -> Assignment {
    let layout = VarLayout::new(pfa.states(), pfa.letters(), word.len());
    let mut a = Assignment::all_false(layout.var_count());
    let mut active: Vec<bool> = vec![true; pfa.states()];
    for j in 1..=pfa.states() {
        a.set(layout.state_var(j, 0), true);
    }
    for (t, letter) in word.iter().enumerate().map(|(i, l)| (i + 1, l)) {
        a.set(layout.letter_var(letter, t), true);
        let mut next = vec![false; pfa.states()];
        let mut defined = true;
        for j in (1..=pfa.states()).filter(|&j| active[j - 1]) {
            match pfa.next(j, letter) {
                Some(k) => next[k - 1] = true,
                None => defined = false,
            }
        }
        if !defined {
            next.iter_mut().for_each(|b| *b = false);
        }
        for (j, _) in next.iter().enumerate().filter(|(_, &on)| on) {
            a.set(layout.state_var(j + 1, t), true);
        }
        active = next;
    }
    a
}
