//! Partial deterministic automata and careful application of words.
//!
//! States are numbered `1..=n` and letters `1..=m`. A transition table
//! entry of `0` means the transition is undefined, which is also the
//! sentinel used by the text format:
//!
//! ```text
//! # comment lines are skipped
//! n m
//! <line for state 1: m entries, column i = target under letter i>
//! ...
//! <line for state n>
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest automaton whose subsets fit in a [`StateSet`].
pub const STATE_SET_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PfaError {
    #[error("automaton needs at least one state and one letter (got n={n}, m={m})")]
    Empty { n: usize, m: usize },
    #[error("transition table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("state index {target} out of range for δ(q{state}, letter {letter})")]
    TargetOutOfRange {
        state: usize,
        letter: usize,
        target: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing header line \"n m\"")]
    MissingHeader,
    #[error("malformed header at line {line}: {reason}")]
    Header { line: usize, reason: String },
    #[error("invalid integer {token:?} at line {line}")]
    Integer { line: usize, token: String },
    #[error("state index {index} out of range at line {line}")]
    StateOutOfRange { line: usize, index: usize },
    #[error("expected {expected} entries at line {line}, found {got}")]
    RowLength {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("expected {expected} state lines, found {got}")]
    RowCount { expected: usize, got: usize },
}

/// A partial deterministic finite automaton `⟨Q, Σ, δ⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pfa {
    n: usize,
    m: usize,
    // row-major by letter: delta[(a - 1) * n + (q - 1)], 0 = undefined
    delta: Vec<u32>,
}

impl Pfa {
    /// Builds an automaton from a letter-major table: `table[a-1][q-1]` is
    /// the target of state `q` under letter `a`, or `0` when undefined.
    pub fn from_letter_rows(n: usize, rows: &[Vec<usize>]) -> Result<Self, PfaError> {
        let m = rows.len();
        let mut delta = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != n {
                return Err(PfaError::TableSize {
                    expected: n * m,
                    got: rows.iter().map(Vec::len).sum(),
                });
            }
            delta.extend(row.iter().map(|&t| t as u32));
        }
        Self::from_table(n, m, delta)
    }

    /// Builds an automaton from a flat letter-major table.
    pub fn from_table(n: usize, m: usize, delta: Vec<u32>) -> Result<Self, PfaError> {
        if n == 0 || m == 0 {
            return Err(PfaError::Empty { n, m });
        }
        if delta.len() != n * m {
            return Err(PfaError::TableSize {
                expected: n * m,
                got: delta.len(),
            });
        }
        for (idx, &t) in delta.iter().enumerate() {
            if t as usize > n {
                return Err(PfaError::TargetOutOfRange {
                    state: idx % n + 1,
                    letter: idx / n + 1,
                    target: t as usize,
                });
            }
        }
        Ok(Pfa { n, m, delta })
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn letters(&self) -> usize {
        self.m
    }

    /// `δ(q, a)`, or `None` if undefined.
    ///
    /// Panics if `q` or `a` is out of range.
    #[inline]
    pub fn next(&self, q: usize, a: usize) -> Option<usize> {
        assert!((1..=self.n).contains(&q), "state {q} out of range");
        assert!((1..=self.m).contains(&a), "letter {a} out of range");
        match self.delta[(a - 1) * self.n + (q - 1)] {
            0 => None,
            t => Some(t as usize),
        }
    }

    /// The raw row for letter `a`, indexed by `q - 1`, `0` meaning undefined.
    pub fn row(&self, a: usize) -> &[u32] {
        &self.delta[(a - 1) * self.n..a * self.n]
    }

    pub fn is_complete(&self) -> bool {
        self.delta.iter().all(|&t| t != 0)
    }

    pub fn undefined_count(&self) -> usize {
        self.delta.iter().filter(|&&t| t == 0).count()
    }

    /// Letters defined at every state. Only these can start a carefully
    /// synchronizing word.
    pub fn total_letters(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.m).filter(move |&a| self.row(a).iter().all(|&t| t != 0))
    }

    /// Applies `a` to `s`; `None` if `a` is undefined at some member of `s`.
    ///
    /// Panics if the automaton has more than [`STATE_SET_CAP`] states.
    pub fn apply_letter(&self, s: StateSet, a: usize) -> Option<StateSet> {
        assert!(
            self.n <= STATE_SET_CAP,
            "StateSet requires n <= {STATE_SET_CAP}"
        );
        let row = self.row(a);
        let mut out = 0u64;
        let mut bits = s.0;
        while bits != 0 {
            let q = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            match row[q] {
                0 => return None,
                t => out |= 1 << (t - 1),
            }
        }
        Some(StateSet(out))
    }

    /// `s · w`, folding [`Pfa::apply_letter`] left to right.
    pub fn image(&self, s: StateSet, w: &Word) -> Option<StateSet> {
        w.iter().try_fold(s, |cur, a| self.apply_letter(cur, a))
    }

    /// Careful image `Q · w` for automata of any size, as a sorted list of
    /// states.
    pub fn careful_image_of_all(&self, w: &Word) -> Option<Vec<usize>> {
        let mut active = vec![true; self.n];
        let mut next = vec![false; self.n];
        for a in w.iter() {
            next.iter_mut().for_each(|b| *b = false);
            let row = self.row(a);
            for (q, _) in active.iter().enumerate().filter(|(_, &on)| on) {
                match row[q] {
                    0 => return None,
                    t => next[t as usize - 1] = true,
                }
            }
            std::mem::swap(&mut active, &mut next);
        }
        Some(
            active
                .iter()
                .enumerate()
                .filter_map(|(q, &on)| on.then_some(q + 1))
                .collect(),
        )
    }

    /// Whether `w` carefully synchronizes the automaton: every letter is
    /// defined on the current image of `Q` and the final image is a single
    /// state.
    pub fn is_carefully_synchronizing(&self, w: &Word) -> bool {
        if w.iter().any(|a| a == 0 || a > self.m) {
            return false;
        }
        matches!(self.careful_image_of_all(w), Some(img) if img.len() == 1)
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(ParseError::MissingHeader)?;
        let dims = parse_ints(hline, header)?;
        let [n, m] = dims[..] else {
            return Err(ParseError::Header {
                line: hline,
                reason: format!("expected 2 integers, found {}", dims.len()),
            });
        };
        if n == 0 || m == 0 {
            return Err(ParseError::Header {
                line: hline,
                reason: "n and m must be positive".into(),
            });
        }

        let mut delta = vec![0u32; n * m];
        let mut rows = 0;
        for (line, body) in lines {
            rows += 1;
            if rows > n {
                continue;
            }
            let row = parse_ints(line, body)?;
            if row.len() != m {
                return Err(ParseError::RowLength {
                    line,
                    expected: m,
                    got: row.len(),
                });
            }
            if let Some(&bad) = row.iter().find(|&&t| t > n) {
                return Err(ParseError::StateOutOfRange { line, index: bad });
            }
            let q = rows - 1;
            for (a, t) in row.into_iter().enumerate() {
                delta[a * n + q] = t as u32;
            }
        }
        if rows != n {
            return Err(ParseError::RowCount {
                expected: n,
                got: rows,
            });
        }
        Ok(Pfa { n, m, delta })
    }

    /// Canonical text form accepted by [`Pfa::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m);
        for q in 0..self.n {
            let line: Vec<String> = (0..self.m)
                .map(|a| self.delta[a * self.n + q].to_string())
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

fn parse_ints(line: usize, body: &str) -> Result<Vec<usize>, ParseError> {
    body.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| ParseError::Integer {
                line,
                token: tok.to_string(),
            })
        })
        .collect()
}

impl FromStr for Pfa {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pfa::parse(s)
    }
}

impl fmt::Display for Pfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A finite word over letters `1..=m`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Parses letters written as `a`, `b`, ... (letter 1, 2, ...).
    /// Returns `None` on any other character.
    pub fn from_alpha(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| {
                c.is_ascii_lowercase()
                    .then(|| (c as u8 - b'a') as usize + 1)
            })
            .collect::<Option<Vec<_>>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, a: usize) {
        self.0.push(a);
    }

    /// `a · self`
    pub fn prepend(&self, a: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(a);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

/// Letters `1..=26` print as `a..=z`; anything beyond prints as
/// space-separated indices. The empty word prints as `ε`.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        if self.0.iter().all(|&a| (1..=26).contains(&a)) {
            for &a in &self.0 {
                write!(f, "{}", (b'a' + (a - 1) as u8) as char)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
            f.write_str(&parts.join(" "))
        }
    }
}

/// A subset of `{1, ..., n}` for `n <= 64`, bit `q - 1` standing for state `q`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet(u64);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    /// `{1, ..., n}`
    pub fn full(n: usize) -> Self {
        assert!(n <= STATE_SET_CAP);
        if n == STATE_SET_CAP {
            StateSet(u64::MAX)
        } else {
            StateSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(q: usize) -> Self {
        assert!((1..=STATE_SET_CAP).contains(&q));
        StateSet(1 << (q - 1))
    }

    pub fn from_bits(bits: u64) -> Self {
        StateSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_singleton(self) -> bool {
        self.0 != 0 && self.0 & (self.0 - 1) == 0
    }

    pub fn contains(self, q: usize) -> bool {
        (1..=STATE_SET_CAP).contains(&q) && self.0 & (1 << (q - 1)) != 0
    }

    pub fn insert(&mut self, q: usize) {
        assert!((1..=STATE_SET_CAP).contains(&q));
        self.0 |= 1 << (q - 1);
    }

    pub fn is_subset(self, other: StateSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            (bits != 0).then(|| {
                let q = bits.trailing_zeros() as usize + 1;
                bits &= bits - 1;
                q
            })
        })
    }
}

impl FromIterator<usize> for StateSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = StateSet::EMPTY;
        for q in iter {
            s.insert(q);
        }
        s
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::pn;

    fn a1() -> Pfa {
        Pfa::parse("2 2\n1 2\n1 0\n").unwrap()
    }

    fn w(s: &str) -> Word {
        Word::from_alpha(s).unwrap()
    }

    #[test]
    fn parses_a1() {
        let p = a1();
        assert_eq!((p.states(), p.letters()), (2, 2));
        assert_eq!(p.next(1, 1), Some(1));
        assert_eq!(p.next(2, 1), Some(1));
        assert_eq!(p.next(1, 2), Some(2));
        assert_eq!(p.next(2, 2), None);
    }

    #[test]
    fn parses_singleton_and_comments() {
        let p = Pfa::parse("# tiny\n1 1\n\n# row a\n1\n").unwrap();
        assert_eq!(p.next(1, 1), Some(1));
        assert!(p.is_complete());
    }

    #[test]
    fn rejects_out_of_range_target_with_line() {
        let err = Pfa::parse("2 2\n1 2\n3 0\n").unwrap_err();
        assert_eq!(err, ParseError::StateOutOfRange { line: 3, index: 3 });
        assert_eq!(err.to_string(), "state index 3 out of range at line 3");
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(Pfa::parse(""), Err(ParseError::MissingHeader)));
        assert!(matches!(
            Pfa::parse("2\n"),
            Err(ParseError::Header { line: 1, .. })
        ));
        assert!(matches!(
            Pfa::parse("0 1\n"),
            Err(ParseError::Header { .. })
        ));
        assert!(matches!(
            Pfa::parse("2 2\n1 2\n"),
            Err(ParseError::RowCount {
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            Pfa::parse("2 2\n1 2\n1 2\n1 1\n"),
            Err(ParseError::RowCount {
                expected: 2,
                got: 3
            })
        ));
        assert!(matches!(
            Pfa::parse("1 2\n1\n"),
            Err(ParseError::RowLength {
                line: 2,
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            Pfa::parse("1 2\n1 x\n"),
            Err(ParseError::Integer { line: 2, .. })
        ));
        assert!(matches!(
            Pfa::parse("1 1\n-1\n"),
            Err(ParseError::Integer { .. })
        ));
    }

    #[test]
    fn table_validation() {
        assert!(matches!(
            Pfa::from_table(0, 1, vec![]),
            Err(PfaError::Empty { .. })
        ));
        assert!(matches!(
            Pfa::from_table(2, 1, vec![1]),
            Err(PfaError::TableSize {
                expected: 2,
                got: 1
            })
        ));
        assert_eq!(
            Pfa::from_letter_rows(2, &[vec![1, 2], vec![0, 5]]),
            Err(PfaError::TargetOutOfRange {
                state: 2,
                letter: 2,
                target: 5
            })
        );
    }

    #[test]
    fn apply_letter_examples() {
        let p = a1();
        let q = StateSet::full(2);
        assert_eq!(p.apply_letter(q, 1), Some(StateSet::singleton(1)));
        assert_eq!(p.apply_letter(q, 2), None);

        let p4 = pn(4).unwrap();
        let q4 = StateSet::full(4);
        assert_eq!(p4.apply_letter(q4, 2), None);
        assert_eq!(
            p4.apply_letter(q4, 1),
            Some([2, 3, 4].into_iter().collect())
        );
    }

    #[test]
    fn image_examples() {
        let p = a1();
        let q = StateSet::full(2);
        assert_eq!(p.image(q, &Word::empty()), Some(q));
        assert_eq!(p.image(q, &w("a")), Some(StateSet::singleton(1)));
        assert_eq!(p.image(q, &w("ba")), None);
    }

    #[test]
    fn careful_sync_examples() {
        let p = a1();
        assert!(p.is_carefully_synchronizing(&w("a")));
        assert!(!p.is_carefully_synchronizing(&w("b")));
        assert!(!p.is_carefully_synchronizing(&Word::empty()));
        assert!(p.is_carefully_synchronizing(&w("ab")));
        assert!(!p.is_carefully_synchronizing(&w("c")));

        let single = Pfa::parse("1 1\n1\n").unwrap();
        assert!(single.is_carefully_synchronizing(&Word::empty()));
        let dead = Pfa::parse("1 1\n0\n").unwrap();
        assert!(dead.is_carefully_synchronizing(&Word::empty()));
        assert!(!dead.is_carefully_synchronizing(&w("a")));
    }

    #[test]
    fn word_display() {
        assert_eq!(w("abba").to_string(), "abba");
        assert_eq!(Word::empty().to_string(), "ε");
        assert_eq!(Word::new(vec![1, 27]).to_string(), "1 27");
    }

    #[test]
    fn state_set_basics() {
        let s: StateSet = [1, 3, 64].into_iter().collect();
        assert_eq!(s.len(), 3);
        assert!(s.contains(64) && !s.contains(2) && !s.contains(0));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1, 3, 64]);
        assert!(StateSet::singleton(5).is_singleton());
        assert!(!StateSet::EMPTY.is_singleton());
        assert_eq!(StateSet::full(64).len(), 64);
        assert_eq!(format!("{:?}", StateSet::full(3)), "{1, 2, 3}");
    }
}
