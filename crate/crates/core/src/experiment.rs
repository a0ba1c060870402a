//! Dataset experiments: average shortest-word length per state count, a
//! cubic least-squares fit of those averages, and a timing comparison of
//! the SAT search against the power-automaton search.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::automaton::Pfa;
use crate::generators::{pn, random_pfa, GenConfig};
use crate::oracle::{power_bfs, OracleConfig};
use crate::search::{min_csw, SearchOptions, SearchStatus};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("correctness failure on n={n}, seed={seed}: {detail}")]
    Correctness { n: usize, seed: u64, detail: String },
    #[error("could not generate instance: {0}")]
    Generate(String),
}

/// Which automata a dataset is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// [`random_pfa`] with `undefined` undefined transitions in letter `b`.
    Random { undefined: usize },
    /// The `P_n` series (every trial is the same automaton).
    Pn,
}

impl Family {
    pub fn generate(&self, n: usize, seed: u64) -> Result<Pfa, ExperimentError> {
        match *self {
            Family::Random { undefined } => random_pfa(&GenConfig::new(n, undefined, seed)),
            Family::Pn => pn(n),
        }
        .map_err(|e| ExperimentError::Generate(e.to_string()))
    }
}

/// Seed of attempt `attempt` for state count `n`: consecutive attempts use
/// consecutive seeds, and each `n` gets its own block of 2^32 seeds.
pub fn trial_seed(base: u64, n: usize, attempt: u64) -> u64 {
    base.wrapping_add((n as u64) << 32).wrapping_add(attempt)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub state_counts: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub search: SearchOptions,
    /// Run trials on all cores. Results do not depend on this.
    pub parallel: bool,
    /// Give up on a row after `samples * max_attempts_factor` attempts.
    pub max_attempts_factor: usize,
}

impl ExperimentConfig {
    pub fn new(state_counts: Vec<usize>, samples: usize, seed: u64) -> Self {
        ExperimentConfig {
            state_counts,
            samples,
            seed,
            search: SearchOptions::default(),
            parallel: true,
            max_attempts_factor: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub n: usize,
    pub samples: usize,
    /// Instances resampled because no word was found.
    pub discards: usize,
    /// Instances resampled because the solver ran out of budget.
    pub budget_failures: usize,
    pub mean_length: f64,
    /// Sample standard deviation over the mean.
    pub rsd: f64,
    pub mean_time_s: f64,
    pub lengths: Vec<usize>,
}

enum Trial {
    Length(usize, Duration),
    Discard,
    Budget,
}

/// Mean and sample (n − 1) standard deviation.
pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (mean, var.sqrt())
}

pub fn run_experiment(
    config: &ExperimentConfig,
    family: Family,
) -> Result<Vec<ExperimentRow>, ExperimentError> {
    run_experiment_with(config, |n, seed| family.generate(n, seed))
}

/// Like [`run_experiment`] with a caller-supplied generator.
pub fn run_experiment_with<G>(
    config: &ExperimentConfig,
    generate: G,
) -> Result<Vec<ExperimentRow>, ExperimentError>
where
    G: Fn(usize, u64) -> Result<Pfa, ExperimentError> + Sync,
{
    let trial = |n: usize, seed: u64| -> Result<Trial, ExperimentError> {
        let pfa = generate(n, seed)?;
        match min_csw(&pfa, &config.search) {
            Ok(o) => match o.status {
                SearchStatus::Found => Ok(Trial::Length(o.min_length.unwrap(), o.elapsed)),
                _ => Ok(Trial::Discard),
            },
            Err(e) if e.is_correctness_failure() => Err(ExperimentError::Correctness {
                n,
                seed,
                detail: e.to_string(),
            }),
            Err(_) => Ok(Trial::Budget),
        }
    };

    let mut rows = Vec::with_capacity(config.state_counts.len());
    for &n in &config.state_counts {
        let max_attempts = (config.samples * config.max_attempts_factor.max(1)) as u64;
        let mut lengths = Vec::with_capacity(config.samples);
        let mut times = Vec::with_capacity(config.samples);
        let (mut discards, mut budget) = (0, 0);
        let mut attempt = 0u64;
        while lengths.len() < config.samples && attempt < max_attempts {
            let want = ((config.samples - lengths.len()) as u64).min(max_attempts - attempt);
            let seeds: Vec<u64> = (attempt..attempt + want)
                .map(|a| trial_seed(config.seed, n, a))
                .collect();
            attempt += want;
            let results: Vec<Result<Trial, ExperimentError>> = if config.parallel {
                seeds.par_iter().map(|&s| trial(n, s)).collect()
            } else {
                seeds.iter().map(|&s| trial(n, s)).collect()
            };
            for r in results {
                match r? {
                    Trial::Length(l, t) => {
                        lengths.push(l);
                        times.push(t.as_secs_f64());
                    }
                    Trial::Discard => discards += 1,
                    Trial::Budget => budget += 1,
                }
            }
        }
        let as_f64: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
        let (mean, sd) = mean_and_sd(&as_f64);
        let (mean_time, _) = mean_and_sd(&times);
        rows.push(ExperimentRow {
            n,
            samples: lengths.len(),
            discards,
            budget_failures: budget,
            mean_length: mean,
            rsd: if mean > 0.0 { sd / mean } else { 0.0 },
            mean_time_s: mean_time,
            lengths,
        });
    }
    Ok(rows)
}

pub fn experiment_table(rows: &[ExperimentRow], sep: char) -> String {
    let mut out = [
        "n",
        "samples",
        "discards",
        "mean_length",
        "rsd",
        "mean_time_s",
        "budget_failures",
    ]
    .join(&sep.to_string());
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{n}{s}{samples}{s}{discards}{s}{mean:.3}{s}{rsd:.6}{s}{time:.6}{s}{budget}",
            s = sep,
            n = r.n,
            samples = r.samples,
            discards = r.discards,
            mean = r.mean_length,
            rsd = r.rsd,
            time = r.mean_time_s,
            budget = r.budget_failures,
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub state_counts: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub undefined: usize,
    pub search: SearchOptions,
    pub oracle: OracleConfig,
    pub max_attempts_factor: usize,
}

impl CompareConfig {
    pub fn new(state_counts: Vec<usize>, samples: usize, seed: u64) -> Self {
        CompareConfig {
            state_counts,
            samples,
            seed,
            undefined: 1,
            search: SearchOptions::default(),
            oracle: OracleConfig::default(),
            max_attempts_factor: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub n: usize,
    pub samples: usize,
    /// Instances the oracle proved not carefully synchronizing.
    pub discards: usize,
    pub oracle_failures: usize,
    pub sat_failures: usize,
    pub sat_mean_time_s: f64,
    pub oracle_mean_time_s: f64,
    pub agreements: usize,
    /// Seeds on which the two searches returned different lengths.
    pub disagreements: Vec<u64>,
}

/// Times the SAT search and the power-automaton search on the same random
/// instances, one instance at a time. Instances without a carefully
/// synchronizing word (per the oracle) are resampled after checking that
/// the SAT search finds none either.
pub fn compare_backends(config: &CompareConfig) -> Result<Vec<CompareRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &n in &config.state_counts {
        let max_attempts = (config.samples * config.max_attempts_factor.max(1)) as u64;
        let mut row = CompareRow {
            n,
            samples: 0,
            discards: 0,
            oracle_failures: 0,
            sat_failures: 0,
            sat_mean_time_s: 0.0,
            oracle_mean_time_s: 0.0,
            agreements: 0,
            disagreements: Vec::new(),
        };
        let (mut sat_times, mut oracle_times) = (Vec::new(), Vec::new());
        let mut attempt = 0;
        while row.samples < config.samples && attempt < max_attempts {
            let seed = trial_seed(config.seed, n, attempt);
            attempt += 1;
            let pfa = Family::Random {
                undefined: config.undefined,
            }
            .generate(n, seed)?;

            let started = Instant::now();
            let oracle = power_bfs(&pfa, &config.oracle);
            let oracle_time = started.elapsed();
            let oracle = match oracle {
                Ok(o) => o,
                Err(_) => {
                    row.oracle_failures += 1;
                    continue;
                }
            };
            if oracle.status != SearchStatus::Found {
                // the SAT path must not find a word either
                row.discards += 1;
                if let Ok(o) = min_csw(&pfa, &config.search) {
                    if o.status == SearchStatus::Found {
                        row.disagreements.push(seed);
                    }
                }
                continue;
            }

            let started = Instant::now();
            let sat = min_csw(&pfa, &config.search);
            let sat_time = started.elapsed();
            let sat = match sat {
                Ok(o) => o,
                Err(e) if e.is_correctness_failure() => {
                    return Err(ExperimentError::Correctness {
                        n,
                        seed,
                        detail: e.to_string(),
                    })
                }
                Err(_) => {
                    row.sat_failures += 1;
                    continue;
                }
            };

            row.samples += 1;
            sat_times.push(sat_time.as_secs_f64());
            oracle_times.push(oracle_time.as_secs_f64());
            if sat.min_length == oracle.min_length {
                row.agreements += 1;
            } else {
                row.disagreements.push(seed);
            }
        }
        row.sat_mean_time_s = mean_and_sd(&sat_times).0;
        row.oracle_mean_time_s = mean_and_sd(&oracle_times).0;
        rows.push(row);
    }
    Ok(rows)
}

pub fn compare_table(rows: &[CompareRow], sep: char) -> String {
    let mut out = [
        "n",
        "samples",
        "discards",
        "sat_mean_time_s",
        "oracle_mean_time_s",
        "agreements",
        "disagreements",
        "oracle_failures",
        "sat_failures",
    ]
    .join(&sep.to_string());
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}{s}{}{s}{}{s}{:.6}{s}{:.6}{s}{}{s}{}{s}{}{s}{}",
            r.n,
            r.samples,
            r.discards,
            r.sat_mean_time_s,
            r.oracle_mean_time_s,
            r.agreements,
            r.disagreements.len(),
            r.oracle_failures,
            r.sat_failures,
            s = sep,
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("a cubic fit needs at least 4 distinct n values, got {0}")]
    RankDeficient(usize),
    #[error("non-finite input point")]
    NonFinite,
}

/// `c[0] + c[1]·n + c[2]·n² + c[3]·n³` with its residual sum of squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub coefficients: [f64; 4],
    pub rss: f64,
}

impl FitResult {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

/// Residual sum of squares of a cubic on `points`.
pub fn cubic_rss(coefficients: &[f64; 4], points: &[(f64, f64)]) -> f64 {
    let f = FitResult {
        coefficients: *coefficients,
        rss: 0.0,
    };
    points.iter().map(|&(x, y)| (y - f.eval(x)).powi(2)).sum()
}

/// Least-squares cubic through `points` via the normal equations.
///
/// The abscissae are centred and scaled to `[-1, 1]` before forming the
/// 4×4 system, which is solved by Gaussian elimination with partial
/// pivoting; the result is then expanded back into powers of `n`.
pub fn fit_cubic(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    if xs.len() < 4 {
        return Err(FitError::RankDeficient(xs.len()));
    }
    let center = (xs[0] + xs[xs.len() - 1]) / 2.0;
    let scale = (xs[xs.len() - 1] - xs[0]) / 2.0;

    let mut ata = [[0.0f64; 4]; 4];
    let mut aty = [0.0f64; 4];
    for &(x, y) in points {
        let u = (x - center) / scale;
        let pow = [1.0, u, u * u, u * u * u];
        for i in 0..4 {
            aty[i] += pow[i] * y;
            for j in 0..4 {
                ata[i][j] += pow[i] * pow[j];
            }
        }
    }
    let d = solve4(ata, aty).ok_or(FitError::RankDeficient(xs.len()))?;

    // Σ d_k ((x − c)/s)^k expanded by the binomial theorem
    const BINOM: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [1.0, 3.0, 3.0, 1.0],
    ];
    let mut coefficients = [0.0f64; 4];
    for (k, dk) in d.iter().enumerate() {
        let factor = dk / scale.powi(k as i32);
        for (j, c) in coefficients.iter_mut().enumerate().take(k + 1) {
            *c += factor * BINOM[k][j] * (-center).powi((k - j) as i32);
        }
    }
    Ok(FitResult {
        coefficients,
        rss: cubic_rss(&coefficients, points),
    })
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot =
            (col..4).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let tail: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cubic_is_recovered() {
        let truth = [1.0, 2.0, -0.5, 0.01];
        let pts: Vec<(f64, f64)> = (10..=100)
            .step_by(5)
            .map(|n| {
                let x = n as f64;
                (
                    x,
                    truth[0] + truth[1] * x + truth[2] * x * x + truth[3] * x * x * x,
                )
            })
            .collect();
        let fit = fit_cubic(&pts).unwrap();
        for (got, want) in fit.coefficients.iter().zip(truth) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!(fit.rss < 1e-12);
    }

    #[test]
    fn constant_data() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|n| (n as f64, 5.0)).collect();
        let fit = fit_cubic(&pts).unwrap();
        let want = [5.0, 0.0, 0.0, 0.0];
        for (got, want) in fit.coefficients.iter().zip(want) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn needs_four_distinct_abscissae() {
        let pts = [(1.0, 1.0), (2.0, 2.0), (3.0, 0.0), (3.0, 1.0), (1.0, 5.0)];
        assert_eq!(fit_cubic(&pts), Err(FitError::RankDeficient(3)));
        assert_eq!(fit_cubic(&[(f64::NAN, 1.0)]), Err(FitError::NonFinite));
    }

    #[test]
    fn sample_statistics() {
        let (m, sd) = mean_and_sd(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_and_sd(&[3.0]), (3.0, 0.0));
        assert!(mean_and_sd(&[]).0.is_nan());
    }

    #[test]
    fn constant_map_family_has_length_one() {
        let cfg = ExperimentConfig::new(vec![2], 25, 7);
        let rows =
            run_experiment_with(&cfg, |_, _| Ok(Pfa::parse("2 2\n1 1\n1 1\n").unwrap())).unwrap();
        assert_eq!(rows[0].samples, 25);
        assert_eq!(rows[0].mean_length, 1.0);
        assert_eq!(rows[0].rsd, 0.0);
    }

    #[test]
    fn unsynchronizable_family_is_discarded() {
        let mut cfg = ExperimentConfig::new(vec![2], 3, 0);
        cfg.max_attempts_factor = 2;
        let rows =
            run_experiment_with(&cfg, |_, _| Ok(Pfa::parse("2 1\n2\n1\n").unwrap())).unwrap();
        assert_eq!(rows[0].samples, 0);
        assert_eq!(rows[0].discards, 6);
    }

    #[test]
    fn table_is_reproducible_apart_from_timing() {
        let cfg = ExperimentConfig::new(vec![5, 6], 30, 11);
        let strip = |t: String| -> Vec<String> {
            t.lines()
                .map(|l| {
                    let mut f: Vec<&str> = l.split(',').collect();
                    f.remove(5);
                    f.join(",")
                })
                .collect()
        };
        let a = run_experiment(&cfg, Family::Random { undefined: 1 }).unwrap();
        let b = run_experiment(&cfg, Family::Random { undefined: 1 }).unwrap();
        assert_eq!(
            strip(experiment_table(&a, ',')),
            strip(experiment_table(&b, ','))
        );
        let mut seq = cfg.clone();
        seq.parallel = false;
        let c = run_experiment(&seq, Family::Random { undefined: 1 }).unwrap();
        assert_eq!(a[0].lengths, c[0].lengths);
    }

    #[test]
    fn small_comparison_agrees() {
        let rows = compare_backends(&CompareConfig::new(vec![6], 20, 3)).unwrap();
        let r = &rows[0];
        assert_eq!(r.samples, 20);
        assert_eq!(r.agreements, 20);
        assert!(r.disagreements.is_empty());
        assert_eq!(r.oracle_failures + r.sat_failures, 0);
    }
}
