//! Running a SAT solver as a child process.
//!
//! The command is a whitespace-separated program and argument list. Two
//! placeholders are recognised in the arguments:
//!
//! * `{input}`: replaced by the path of a temporary DIMACS file. Without
//!   it the formula is written to the process's standard input.
//! * `{output}`: replaced by the path of a result file in the MiniSat
//!   convention (`SAT` followed by a zero-terminated model, or `UNSAT`).
//!   Without it the answer is read from standard output in the SAT
//!   competition format (`s SATISFIABLE` plus `v` lines).
//!
//! `minisat {input} {output}` and `kissat -q` both fit.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::Cnf;

const INPUT: &str = "{input}";
const OUTPUT: &str = "{output}";

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("empty solver command")]
    EmptyCommand,
    #[error("could not run solver `{program}`: {source}")]
    Spawn {
        program: String,
        source: std::io::Error,
    },
    #[error("i/o error talking to the solver: {0}")]
    Io(#[from] std::io::Error),
    #[error(
        "solver exited with {status} without a recognisable answer; output began: {excerpt:?}"
    )]
    Unparseable { status: String, excerpt: String },
    #[error("solver reported SAT without a model")]
    MissingModel,
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Option<Duration>,
}

#[derive(Debug, PartialEq, Eq)]
pub(super) enum Answer {
    Sat(Vec<i32>),
    Unsat,
    Unknown,
}

impl ExternalSolver {
    pub fn parse(command: &str) -> Result<Self, ExternalError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or(ExternalError::EmptyCommand)?;
        Ok(ExternalSolver {
            program,
            args: parts.collect(),
            timeout: None,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }

    fn uses(&self, placeholder: &str) -> bool {
        self.args.iter().any(|a| a.contains(placeholder))
    }

    pub(super) fn run(&self, cnf: &Cnf) -> Result<Answer, ExternalError> {
        let dir = tempfile::tempdir()?;
        let input_path = dir.path().join("instance.cnf");
        let output_path = dir.path().join("result.txt");
        let dimacs = cnf.to_dimacs(&[]);
        let via_file = self.uses(INPUT);
        let two_file = self.uses(OUTPUT);
        if via_file {
            std::fs::write(&input_path, &dimacs)?;
        }
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                a.replace(INPUT, &input_path.to_string_lossy())
                    .replace(OUTPUT, &output_path.to_string_lossy())
            })
            .collect();

        let mut child = Command::new(&self.program)
            .args(&args)
            .stdin(if via_file {
                Stdio::null()
            } else {
                Stdio::piped()
            })
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| ExternalError::Spawn {
                program: self.program.clone(),
                source,
            })?;

        let writer = child.stdin.take().map(|mut stdin| {
            thread::spawn(move || {
                // a solver may exit before reading everything
                let _ = stdin.write_all(dimacs.as_bytes());
            })
        });
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let reader = thread::spawn(move || {
            let mut buf = String::new();
            stdout.read_to_string(&mut buf).map(|_| buf)
        });

        let started = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if let Some(limit) = self.timeout {
                if started.elapsed() >= limit {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ExternalError::Timeout(limit));
                }
            }
            thread::sleep(Duration::from_millis(2));
        };
        if let Some(w) = writer {
            let _ = w.join();
        }
        let out = reader.join().expect("reader thread panicked")?;

        let parsed = if two_file {
            std::fs::read_to_string(&output_path)
                .ok()
                .and_then(|text| parse_minisat_result(&text))
        } else {
            parse_competition_output(&out)
        };
        match parsed {
            Some(Answer::Sat(lits)) if lits.is_empty() && cnf.var_count > 0 => {
                Err(ExternalError::MissingModel)
            }
            Some(answer) => Ok(answer),
            None => Err(ExternalError::Unparseable {
                status: status.to_string(),
                excerpt: out.chars().take(200).collect(),
            }),
        }
    }
}

/// Parses `s`/`v` lines. A bare `SATISFIABLE`/`UNSATISFIABLE` line (as
/// MiniSat prints to stdout) is accepted too.
pub(super) fn parse_competition_output(text: &str) -> Option<Answer> {
    let mut status = None;
    let mut lits = Vec::new();
    for line in text.lines().map(str::trim) {
        let verdict = line.strip_prefix("s ").map(str::trim).unwrap_or(line);
        match verdict {
            "SATISFIABLE" => status = Some(true),
            "UNSATISFIABLE" => status = Some(false),
            "UNKNOWN" | "INDETERMINATE" if line.starts_with("s ") => return Some(Answer::Unknown),
            _ => {}
        }
        if let Some(rest) = line
            .strip_prefix("v ")
            .or_else(|| (line == "v").then_some(""))
        {
            for tok in rest.split_whitespace() {
                match tok.parse::<i32>() {
                    Ok(0) => {}
                    Ok(l) => lits.push(l),
                    Err(_) => return None,
                }
            }
        }
    }
    match status? {
        true => Some(Answer::Sat(lits)),
        false => Some(Answer::Unsat),
    }
}

pub(super) fn parse_minisat_result(text: &str) -> Option<Answer> {
    let mut tokens = text.split_whitespace();
    match tokens.next()? {
        "SAT" => tokens
            .filter(|t| *t != "0")
            .map(|t| t.parse::<i32>().ok())
            .collect::<Option<Vec<_>>>()
            .map(Answer::Sat),
        "UNSAT" => Some(Answer::Unsat),
        "INDET" => Some(Answer::Unknown),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_parsing() {
        let s = ExternalSolver::parse("  minisat {input}   {output} ").unwrap();
        assert_eq!(s.program, "minisat");
        assert_eq!(s.args, vec!["{input}", "{output}"]);
        assert!(matches!(
            ExternalSolver::parse("  "),
            Err(ExternalError::EmptyCommand)
        ));
    }

    #[test]
    fn competition_format() {
        assert_eq!(
            parse_competition_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n"),
            Some(Answer::Sat(vec![1, -2, 3]))
        );
        assert_eq!(
            parse_competition_output("s UNSATISFIABLE\n"),
            Some(Answer::Unsat)
        );
        assert_eq!(
            parse_competition_output("s UNKNOWN\n"),
            Some(Answer::Unknown)
        );
        assert_eq!(parse_competition_output("garbage\n"), None);
        assert_eq!(parse_competition_output("s SATISFIABLE\nv 1 x 0\n"), None);
        assert_eq!(
            parse_competition_output("stats...\nUNSATISFIABLE\n"),
            Some(Answer::Unsat)
        );
    }

    #[test]
    fn minisat_format() {
        assert_eq!(
            parse_minisat_result("SAT\n-1 2 0\n"),
            Some(Answer::Sat(vec![-1, 2]))
        );
        assert_eq!(parse_minisat_result("UNSAT\n"), Some(Answer::Unsat));
        assert_eq!(parse_minisat_result("INDET\n"), Some(Answer::Unknown));
        assert_eq!(parse_minisat_result(""), None);
    }
}
