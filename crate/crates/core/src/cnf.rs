//! Plain CNF formulas, truth assignments and the DIMACS text format.

use std::fmt::Write as _;

use thiserror::Error;

/// A CNF formula over variables `1..=var_count`. Literals are nonzero
/// signed integers in DIMACS convention.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub var_count: usize,
    pub clauses: Vec<Vec<i32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("clause {clause} contains the zero literal")]
    ZeroLiteral { clause: usize },
    #[error("clause {clause} mentions variable {var}, but var_count is {var_count}")]
    VarOutOfRange {
        clause: usize,
        var: usize,
        var_count: usize,
    },
}

impl Cnf {
    pub fn new(var_count: usize) -> Self {
        Cnf {
            var_count,
            clauses: Vec::new(),
        }
    }

    pub fn with_clauses(var_count: usize, clauses: Vec<Vec<i32>>) -> Self {
        Cnf { var_count, clauses }
    }

    pub fn push(&mut self, clause: Vec<i32>) {
        self.clauses.push(clause);
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    /// Checks that no literal is zero and every variable is in range.
    pub fn validate(&self) -> Result<(), CnfError> {
        for (i, c) in self.clauses.iter().enumerate() {
            for &lit in c {
                if lit == 0 {
                    return Err(CnfError::ZeroLiteral { clause: i });
                }
                let var = lit.unsigned_abs() as usize;
                if var > self.var_count {
                    return Err(CnfError::VarOutOfRange {
                        clause: i,
                        var,
                        var_count: self.var_count,
                    });
                }
            }
        }
        Ok(())
    }

    /// Index of the first clause `a` falsifies, if any. Variables the
    /// assignment does not cover count as false.
    pub fn first_falsified(&self, a: &Assignment) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| !c.iter().any(|&lit| a.satisfies(lit)))
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.first_falsified(a).is_none()
    }

    /// DIMACS text: optional `c` comment lines, the `p cnf` header, then
    /// one zero-terminated clause per line.
    pub fn to_dimacs(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "c {c}");
        }
        let _ = writeln!(out, "p cnf {} {}", self.var_count, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{lit} ");
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('c') {
                continue;
            }
            if body.starts_with('%') {
                break;
            }
            if body.starts_with('p') {
                if header.is_some() {
                    return Err(DimacsError::DuplicateHeader { line });
                }
                let parts: Vec<&str> = body.split_whitespace().collect();
                let parsed = match parts.as_slice() {
                    ["p", "cnf", v, c] => v.parse().ok().zip(c.parse().ok()),
                    _ => None,
                };
                header = Some(parsed.ok_or(DimacsError::BadHeader { line })?);
                continue;
            }
            let (var_count, _) = header.ok_or(DimacsError::MissingHeader { line })?;
            for tok in body.split_whitespace() {
                let lit: i32 = tok.parse().map_err(|_| DimacsError::BadLiteral {
                    line,
                    token: tok.to_string(),
                })?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else if lit.unsigned_abs() as usize > var_count {
                    return Err(DimacsError::VarOutOfRange {
                        line,
                        lit,
                        var_count,
                    });
                } else {
                    current.push(lit);
                }
            }
        }
        let (var_count, clause_count) = header.ok_or(DimacsError::MissingHeader { line: 0 })?;
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != clause_count {
            return Err(DimacsError::ClauseCount {
                declared: clause_count,
                found: clauses.len(),
            });
        }
        Ok(Cnf { var_count, clauses })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("clause data before the \"p cnf\" header at line {line}")]
    MissingHeader { line: usize },
    #[error("second \"p\" line at line {line}")]
    DuplicateHeader { line: usize },
    #[error("malformed \"p cnf <vars> <clauses>\" header at line {line}")]
    BadHeader { line: usize },
    #[error("invalid literal {token:?} at line {line}")]
    BadLiteral { line: usize, token: String },
    #[error("literal {lit} at line {line} exceeds declared variable count {var_count}")]
    VarOutOfRange {
        line: usize,
        lit: i32,
        var_count: usize,
    },
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
}

/// A total truth assignment on variables `1..=len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn all_false(var_count: usize) -> Self {
        Assignment(vec![false; var_count])
    }

    pub fn from_values(values: Vec<bool>) -> Self {
        Assignment(values)
    }

    /// Bit `v - 1` of `bits` gives variable `v`; for `var_count <= 64`.
    pub fn from_bits(var_count: usize, bits: u64) -> Self {
        Assignment((0..var_count).map(|i| bits >> i & 1 == 1).collect())
    }

    /// Builds an assignment from solver output literals (`v` or `-v`);
    /// unmentioned variables default to false.
    pub fn from_literals(var_count: usize, lits: &[i32]) -> Self {
        let mut a = Self::all_false(var_count);
        for &lit in lits {
            let v = lit.unsigned_abs() as usize;
            if (1..=var_count).contains(&v) {
                a.0[v - 1] = lit > 0;
            }
        }
        a
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Value of variable `v` (1-based). Out-of-range variables read false.
    pub fn value(&self, v: usize) -> bool {
        v >= 1 && self.0.get(v - 1).copied().unwrap_or(false)
    }

    pub fn set(&mut self, v: usize, value: bool) {
        self.0[v - 1] = value;
    }

    pub fn satisfies(&self, lit: i32) -> bool {
        self.value(lit.unsigned_abs() as usize) == (lit > 0)
    }

    /// DIMACS-style signed literal list, one per variable.
    pub fn to_literals(&self) -> Vec<i32> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { i as i32 + 1 } else { -(i as i32 + 1) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smallest_instance() {
        let cnf = Cnf::with_clauses(1, vec![vec![1]]);
        assert_eq!(cnf.to_dimacs(&[]), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn parse_tolerates_comments_and_split_clauses() {
        let cnf = Cnf::parse_dimacs("c hello\np cnf 3 2\n1 -2\n 3 0 -1\n0\n%\n0\n").unwrap();
        assert_eq!(cnf.var_count, 3);
        assert_eq!(cnf.clauses, vec![vec![1, -2, 3], vec![-1]]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            Cnf::parse_dimacs("1 0\n"),
            Err(DimacsError::MissingHeader { line: 1 })
        ));
        assert!(matches!(
            Cnf::parse_dimacs(""),
            Err(DimacsError::MissingHeader { .. })
        ));
        assert!(matches!(
            Cnf::parse_dimacs("p cnf x 1\n"),
            Err(DimacsError::BadHeader { line: 1 })
        ));
        assert!(matches!(
            Cnf::parse_dimacs("p cnf 1 1\n2 0\n"),
            Err(DimacsError::VarOutOfRange {
                line: 2,
                lit: 2,
                ..
            })
        ));
        assert!(matches!(
            Cnf::parse_dimacs("p cnf 1 2\n1 0\n"),
            Err(DimacsError::ClauseCount {
                declared: 2,
                found: 1
            })
        ));
        assert!(matches!(
            Cnf::parse_dimacs("p cnf 1 1\n1 y 0\n"),
            Err(DimacsError::BadLiteral { line: 2, .. })
        ));
    }

    #[test]
    fn evaluator() {
        let cnf = Cnf::with_clauses(2, vec![vec![1, 2], vec![-1]]);
        assert!(cnf.is_satisfied_by(&Assignment::from_literals(2, &[-1, 2])));
        assert_eq!(
            cnf.first_falsified(&Assignment::from_literals(2, &[1, 2])),
            Some(1)
        );
        assert_eq!(cnf.first_falsified(&Assignment::all_false(2)), Some(0));
    }

    #[test]
    fn validate_catches_malformed() {
        assert!(Cnf::with_clauses(2, vec![vec![1, -2]]).validate().is_ok());
        assert!(matches!(
            Cnf::with_clauses(2, vec![vec![1], vec![0]]).validate(),
            Err(CnfError::ZeroLiteral { clause: 1 })
        ));
        assert!(matches!(
            Cnf::with_clauses(2, vec![vec![-3]]).validate(),
            Err(CnfError::VarOutOfRange { var: 3, .. })
        ));
    }

    fn arb_cnf() -> impl Strategy<Value = Cnf> {
        (1usize..30).prop_flat_map(|vars| {
            let lit =
                (1..=vars as i32, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v });
            prop::collection::vec(prop::collection::vec(lit, 1..6), 0..40)
                .prop_map(move |clauses| Cnf::with_clauses(vars, clauses))
        })
    }

    proptest! {
        #[test]
        fn dimacs_round_trip(cnf in arb_cnf()) {
            let text = cnf.to_dimacs(&["round trip".to_string()]);
            prop_assert_eq!(Cnf::parse_dimacs(&text).unwrap(), cnf);
        }
    }
}
