//! Satisfiability back ends.
//!
//! [`solve`] runs the built-in CDCL solver; [`solve_external`] hands the
//! formula to another process in DIMACS form. Either way a reported model
//! is checked clause by clause with [`Cnf::first_falsified`] before it is
//! returned, so a `Sat` result always carries a verified model.

mod cdcl;
mod external;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::{Assignment, Cnf, CnfError};

pub use external::{ExternalError, ExternalSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub restarts: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub status: Status,
    /// Present iff `status == Sat`.
    pub model: Option<Assignment>,
    pub stats: Stats,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        self.status == Status::Sat
    }
}

/// Limits on a single solver call. `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_conflicts: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("malformed instance: {0}")]
    Malformed(#[from] CnfError),
    #[error("resource budget exceeded after {} conflicts, {:.3}s", .stats.conflicts, .stats.elapsed.as_secs_f64())]
    BudgetExceeded { stats: Stats },
    #[error("model verification failed: clause {clause} is falsified")]
    ModelVerification { clause: usize },
    #[error(transparent)]
    External(#[from] ExternalError),
}

impl SolveError {
    /// True for failures that indicate a wrong answer rather than a limit
    /// or an environment problem.
    pub fn is_correctness_failure(&self) -> bool {
        matches!(self, SolveError::ModelVerification { .. })
    }
}

/// Which solver answers satisfiability queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Builtin(Budget),
    External(ExternalSolver),
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Builtin(Budget::unlimited())
    }
}

impl Backend {
    pub fn solve(&self, cnf: &Cnf) -> Result<SolveResult, SolveError> {
        match self {
            Backend::Builtin(budget) => solve_with_budget(cnf, budget),
            Backend::External(cmd) => solve_external(cnf, cmd),
        }
    }
}

/// Decides `cnf` with the built-in solver and no resource limit.
pub fn solve(cnf: &Cnf) -> Result<SolveResult, SolveError> {
    solve_with_budget(cnf, &Budget::unlimited())
}

pub fn solve_with_budget(cnf: &Cnf, budget: &Budget) -> Result<SolveResult, SolveError> {
    cnf.validate()?;
    let started = Instant::now();
    let mut solver = cdcl::Cdcl::new(cnf.var_count, &cnf.clauses);
    let outcome = solver.solve(budget);
    let mut stats = solver.stats;
    stats.elapsed = started.elapsed();
    match outcome {
        cdcl::Outcome::Sat(values) => {
            let model = Assignment::from_values(values);
            verified(cnf, Status::Sat, Some(model), stats)
        }
        cdcl::Outcome::Unsat => verified(cnf, Status::Unsat, None, stats),
        cdcl::Outcome::BudgetExceeded => Err(SolveError::BudgetExceeded { stats }),
    }
}

/// Decides `cnf` by running an external solver process.
pub fn solve_external(cnf: &Cnf, solver: &ExternalSolver) -> Result<SolveResult, SolveError> {
    cnf.validate()?;
    let started = Instant::now();
    let answer = solver.run(cnf)?;
    let stats = Stats {
        elapsed: started.elapsed(),
        ..Stats::default()
    };
    match answer {
        external::Answer::Sat(lits) => {
            let model = Assignment::from_literals(cnf.var_count, &lits);
            verified(cnf, Status::Sat, Some(model), stats)
        }
        external::Answer::Unsat => verified(cnf, Status::Unsat, None, stats),
        external::Answer::Unknown => Err(SolveError::BudgetExceeded { stats }),
    }
}

fn verified(
    cnf: &Cnf,
    status: Status,
    model: Option<Assignment>,
    stats: Stats,
) -> Result<SolveResult, SolveError> {
    if let Some(m) = &model {
        if let Some(clause) = cnf.first_falsified(m) {
            return Err(SolveError::ModelVerification { clause });
        }
    }
    Ok(SolveResult {
        status,
        model,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{Pfa, Word};
    use crate::encoder::{decode_word, encode};

    fn cnf(vars: usize, clauses: &[&[i32]]) -> Cnf {
        Cnf::with_clauses(vars, clauses.iter().map(|c| c.to_vec()).collect())
    }

    #[test]
    fn unit_clause_is_sat() {
        let r = solve(&cnf(1, &[&[1]])).unwrap();
        assert_eq!(r.status, Status::Sat);
        assert!(r.model.unwrap().value(1));
    }

    #[test]
    fn contradiction_is_unsat() {
        let r = solve(&cnf(1, &[&[1], &[-1]])).unwrap();
        assert_eq!(r.status, Status::Unsat);
        assert!(r.model.is_none());
    }

    #[test]
    fn empty_formula_and_empty_clause() {
        assert!(solve(&cnf(3, &[])).unwrap().is_sat());
        assert!(!solve(&cnf(3, &[&[1, 2], &[]])).unwrap().is_sat());
        assert!(solve(&cnf(0, &[])).unwrap().is_sat());
    }

    #[test]
    fn tautologies_and_duplicates() {
        let r = solve(&cnf(2, &[&[1, -1], &[2, 2], &[-2, -2, 1]])).unwrap();
        let m = r.model.unwrap();
        assert!(m.value(1) && m.value(2));
    }

    #[test]
    fn malformed_rejected() {
        assert!(matches!(
            solve(&cnf(1, &[&[2]])),
            Err(SolveError::Malformed(CnfError::VarOutOfRange { .. }))
        ));
        assert!(matches!(
            solve(&cnf(1, &[&[0]])),
            Err(SolveError::Malformed(CnfError::ZeroLiteral { .. }))
        ));
    }

    #[test]
    fn a1_decodes_to_a() {
        let pfa = Pfa::parse("2 2\n1 2\n1 0\n").unwrap();
        let inst = encode(&pfa, 1).unwrap();
        let r = solve(&inst.cnf).unwrap();
        let w = decode_word(r.model.as_ref().unwrap(), &inst.layout).unwrap();
        assert_eq!(w, Word::new(vec![1]));
    }

    /// Pigeonhole 6 into 5: small but needs real conflict analysis.
    #[test]
    fn pigeonhole_unsat() {
        let (p, h) = (6, 5);
        let var = |i: usize, j: usize| (i * h + j + 1) as i32;
        let mut c = Cnf::new(p * h);
        for i in 0..p {
            c.push((0..h).map(|j| var(i, j)).collect());
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    c.push(vec![-var(a, j), -var(b, j)]);
                }
            }
        }
        let r = solve(&c).unwrap();
        assert_eq!(r.status, Status::Unsat);
        assert!(r.stats.conflicts > 0);
    }

    #[test]
    fn conflict_budget_is_reported_distinctly() {
        let (p, h) = (9, 8);
        let var = |i: usize, j: usize| (i * h + j + 1) as i32;
        let mut c = Cnf::new(p * h);
        for i in 0..p {
            c.push((0..h).map(|j| var(i, j)).collect());
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    c.push(vec![-var(a, j), -var(b, j)]);
                }
            }
        }
        let budget = Budget {
            max_conflicts: Some(10),
            max_time: None,
        };
        match solve_with_budget(&c, &budget) {
            Err(SolveError::BudgetExceeded { stats }) => assert_eq!(stats.conflicts, 10),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let pfa = crate::generators::pn(6).unwrap();
        let inst = encode(&pfa, 20).unwrap();
        let a = solve(&inst.cnf).unwrap();
        let b = solve(&inst.cnf).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.stats.decisions, b.stats.decisions);
    }
}
