use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use careful_sync::experiment::{
    compare_backends, compare_table, experiment_table, fit_cubic, run_experiment, CompareConfig,
    ExperimentConfig, ExperimentRow, Family,
};
use careful_sync::generators::sample_pfa;
use careful_sync::oracle::{power_bfs_report, OracleError, Strategy};
use careful_sync::solver::{ExternalSolver, SolveError};
use careful_sync::{
    decode_word, encode, min_csw, pn, Backend, Budget, Cnf, GenConfig, OracleConfig, Pfa,
    SearchOptions, SearchOutcome, SearchStatus, Status,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Careful synchronization of partial automata by SAT.
#[derive(Debug, Parser)]
#[command(name = "csync", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Base seed for generated automata.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// `builtin`, or `external:<command>` with optional `{input}` and
    /// `{output}` placeholders.
    #[arg(long, global = true, default_value = "builtin")]
    backend: String,
    /// Conflict limit per query for the built-in solver.
    #[arg(long, global = true)]
    max_conflicts: Option<u64>,
    /// Time limit in seconds per solver query.
    #[arg(long, global = true)]
    timeout: Option<f64>,
    /// Table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Tsv,
}

impl Format {
    fn sep(self) -> char {
        match self {
            Format::Csv => ',',
            Format::Tsv => '\t',
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the CNF for "a carefully synchronizing word of this length
    /// exists" in DIMACS.
    Encode {
        /// Automaton file, `-` for standard input.
        input: PathBuf,
        #[arg(long, short)]
        length: usize,
    },
    /// Decide a DIMACS formula, or an automaton at a fixed length.
    Solve {
        /// DIMACS file (automaton file with --length), `-` for standard input.
        #[arg(default_value = "-")]
        input: PathBuf,
        /// Treat the input as an automaton and ask for a word of this length.
        #[arg(long, short)]
        length: Option<usize>,
        /// Also write the answer to this file in MiniSat's result format.
        #[arg(long)]
        result_file: Option<PathBuf>,
    },
    /// Shortest carefully synchronizing word by SAT search.
    Min {
        input: PathBuf,
        #[arg(long, default_value_t = 1 << 20)]
        max_length: usize,
        /// Write the probe record as a table to this file.
        #[arg(long)]
        emit_probes: Option<PathBuf>,
    },
    /// Shortest carefully synchronizing word by power-automaton search.
    Oracle {
        input: PathBuf,
        #[arg(long, default_value_t = 24)]
        max_states: usize,
        #[arg(long, default_value_t = 1 << 24)]
        max_visited: usize,
        /// Build the whole power automaton before searching.
        #[arg(long)]
        materialized: bool,
    },
    /// Generate benchmark automata.
    Gen {
        #[arg(long, value_enum, default_value_t = GenFamily::Random)]
        family: GenFamily,
        #[arg(long)]
        n: usize,
        /// Undefined transitions of letter b (random family).
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Directory for the files; required when count > 1.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Dataset experiments.
    #[command(subcommand)]
    Bench(Bench),
    /// Cubic least-squares fit of (n, length) data.
    Fit {
        /// A `bench lengths` table, or two columns n and length.
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenFamily {
    Random,
    Pn,
}

#[derive(Debug, Subcommand)]
enum Bench {
    /// Average shortest-word length and its relative standard deviation.
    Lengths {
        /// State counts, e.g. `10,20,50` or `10..20`.
        #[arg(long, value_parser = parse_counts)]
        n: Counts,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1 << 20)]
        max_length: usize,
        /// Also write `<prefix>.dat` and a gnuplot script `<prefix>.gp`.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Time the SAT search against the power-automaton search.
    Compare {
        #[arg(long, value_parser = parse_counts)]
        n: Counts,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        materialized: bool,
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
}

#[derive(Debug, Clone)]
struct Counts(Vec<usize>);

fn parse_counts(s: &str) -> Result<Counts, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a
                .parse()
                .map_err(|_| format!("bad range start in {part:?}"))?;
            let b: usize = b
                .trim_start_matches('=')
                .parse()
                .map_err(|_| format!("bad range end in {part:?}"))?;
            out.extend(a..=b);
        } else {
            out.push(
                part.parse()
                    .map_err(|_| format!("bad state count {part:?}"))?,
            );
        }
    }
    if out.is_empty() {
        return Err("no state counts given".into());
    }
    Ok(Counts(out))
}

/// Failure classes, one per exit code.
enum Failure {
    Usage(anyhow::Error),
    Budget(anyhow::Error),
    Correctness(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Budget(_) => 2,
            Failure::Correctness(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        if e.is_correctness_failure() {
            Failure::Correctness(e.into())
        } else if matches!(e, SolveError::BudgetExceeded { .. }) {
            Failure::Budget(e.into())
        } else {
            Failure::Usage(e.into())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Budget(e) | Failure::Correctness(e)) = &f;
            eprintln!("csync: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn read_pfa(path: &Path) -> anyhow::Result<Pfa> {
    Pfa::parse(&read_input(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn backend(global: &Global) -> anyhow::Result<Backend> {
    let timeout = global.timeout.map(Duration::from_secs_f64);
    match global.backend.split_once(':') {
        _ if global.backend == "builtin" => Ok(Backend::Builtin(Budget {
            max_conflicts: global.max_conflicts,
            max_time: timeout,
        })),
        Some(("external", command)) => {
            let mut solver = ExternalSolver::parse(command)?;
            if let Some(t) = timeout {
                solver = solver.with_timeout(t);
            }
            Ok(Backend::External(solver))
        }
        _ => bail!(
            "unknown backend {:?}; use `builtin` or `external:<command>`",
            global.backend
        ),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let global = &cli.global;
    match cli.command {
        Command::Encode { input, length } => {
            let pfa = read_pfa(&input)?;
            let inst = encode(&pfa, length).map_err(anyhow::Error::from)?;
            print!("{}", inst.to_dimacs());
        }
        Command::Solve {
            input,
            length,
            result_file,
        } => solve_command(global, &input, length, result_file.as_deref())?,
        Command::Min {
            input,
            max_length,
            emit_probes,
        } => {
            let pfa = read_pfa(&input)?;
            let options = SearchOptions::default()
                .with_max_length(max_length)
                .with_backend(backend(global)?);
            let outcome = match min_csw(&pfa, &options) {
                Ok(o) => o,
                Err(e) if e.is_correctness_failure() => return Err(Failure::Correctness(e.into())),
                Err(e) if e.is_budget() => return Err(Failure::Budget(e.into())),
                Err(e) => return Err(Failure::Usage(e.into())),
            };
            if let Some(path) = emit_probes {
                let table = outcome
                    .probes_csv()
                    .replace(',', &global.format.sep().to_string());
                fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{}", describe(&outcome, None));
        }
        Command::Oracle {
            input,
            max_states,
            max_visited,
            materialized,
        } => {
            let pfa = read_pfa(&input)?;
            let config = OracleConfig {
                max_states,
                max_visited,
                strategy: if materialized {
                    Strategy::Materialized
                } else {
                    Strategy::OnTheFly
                },
            };
            let report = power_bfs_report(&pfa, &config).map_err(|e| match e {
                OracleError::BudgetExceeded { .. } => Failure::Budget(e.into()),
                OracleError::TooManyStates { .. } => Failure::Usage(e.into()),
            })?;
            print!("{}", describe(&report.outcome, Some(report.visited)));
        }
        Command::Gen {
            family,
            n,
            k,
            count,
            out_dir,
        } => gen_command(global, family, n, k, count, out_dir.as_deref())?,
        Command::Bench(bench) => bench_command(global, bench)?,
        Command::Fit { input } => fit_command(global, &input)?,
    }
    Ok(())
}

fn describe(o: &SearchOutcome, visited: Option<usize>) -> String {
    let mut out = String::new();
    let status = match o.status {
        SearchStatus::Found => "FOUND",
        SearchStatus::NotSynchronizing => "NOT_SYNCHRONIZING",
        SearchStatus::UnknownUpToBound => "UNKNOWN_UP_TO_BOUND",
    };
    let _ = writeln!(out, "status: {status}");
    if let (Some(l), Some(w)) = (o.min_length, &o.witness) {
        let _ = writeln!(out, "length: {l}");
        let _ = writeln!(out, "word: {w}");
    }
    if !o.probes.is_empty() {
        let _ = writeln!(out, "probes: {}", o.probes.len());
        let _ = writeln!(out, "bound: {}", o.bound);
    }
    if let Some(v) = visited {
        let _ = writeln!(out, "visited: {v}");
    }
    let _ = writeln!(out, "time_s: {:.6}", o.elapsed.as_secs_f64());
    out
}

fn solve_command(
    global: &Global,
    input: &Path,
    length: Option<usize>,
    result_file: Option<&Path>,
) -> Result<(), Failure> {
    let text = read_input(input)?;
    let (cnf, pfa_layout) = match length {
        Some(l) => {
            let pfa = Pfa::parse(&text).context("parsing automaton")?;
            let inst = encode(&pfa, l).map_err(anyhow::Error::from)?;
            (inst.cnf, Some(inst.layout))
        }
        None => (Cnf::parse_dimacs(&text).context("parsing DIMACS")?, None),
    };
    let result = backend(global)?.solve(&cnf)?;
    let mut out = String::new();
    let mut minisat = String::new();
    match (&result.status, &result.model) {
        (Status::Sat, Some(model)) => {
            if let Some(layout) = &pfa_layout {
                let word = decode_word(model, layout).map_err(anyhow::Error::from)?;
                let _ = writeln!(out, "c word {word}");
            }
            out.push_str("s SATISFIABLE\n");
            let lits = model.to_literals();
            for chunk in lits.chunks(16) {
                let line: Vec<String> = chunk.iter().map(i32::to_string).collect();
                let _ = writeln!(out, "v {}", line.join(" "));
            }
            out.push_str("v 0\n");
            let line: Vec<String> = lits.iter().map(i32::to_string).collect();
            let _ = writeln!(minisat, "SAT\n{} 0", line.join(" "));
        }
        _ => {
            out.push_str("s UNSATISFIABLE\n");
            minisat.push_str("UNSAT\n");
        }
    }
    print!("{out}");
    if let Some(path) = result_file {
        fs::write(path, minisat).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn gen_command(
    global: &Global,
    family: GenFamily,
    n: usize,
    k: usize,
    count: usize,
    out_dir: Option<&Path>,
) -> Result<(), Failure> {
    if count > 1 && out_dir.is_none() {
        return Err(anyhow!("--out-dir is required when --count is above 1").into());
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    for i in 0..count as u64 {
        let seed = global.seed.wrapping_add(i);
        let (text, name) = match family {
            GenFamily::Random => {
                let s = sample_pfa(&GenConfig::new(n, k, seed)).map_err(anyhow::Error::from)?;
                (
                    format!(
                        "# family=random n={n} k={k} seed={seed} q_a={} q_b={}\n{}",
                        s.avoid_a,
                        s.undefined_b,
                        s.pfa.to_text()
                    ),
                    format!("random-n{n}-k{k}-s{seed}.pfa"),
                )
            }
            GenFamily::Pn => (
                format!(
                    "# family=pn n={n}\n{}",
                    pn(n).map_err(anyhow::Error::from)?.to_text()
                ),
                format!("pn-{n}.pfa"),
            ),
        };
        match out_dir {
            Some(dir) => {
                let path = dir.join(name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            None => print!("{text}"),
        }
    }
    Ok(())
}

fn bench_command(global: &Global, bench: Bench) -> Result<(), Failure> {
    let sep = global.format.sep();
    match bench {
        Bench::Lengths {
            n,
            samples,
            k,
            max_length,
            gnuplot,
        } => {
            let mut config = ExperimentConfig::new(n.0, samples, global.seed);
            config.search = SearchOptions::default()
                .with_max_length(max_length)
                .with_backend(backend(global)?);
            let rows = run_experiment(&config, Family::Random { undefined: k })
                .map_err(|e| Failure::Correctness(e.into()))?;
            print!("{}", experiment_table(&rows, sep));
            if let Some(prefix) = gnuplot {
                write_lengths_plot(&prefix, &rows)?;
            }
        }
        Bench::Compare {
            n,
            samples,
            k,
            materialized,
            gnuplot,
        } => {
            let mut config = CompareConfig::new(n.0, samples, global.seed);
            config.undefined = k;
            config.search = config.search.with_backend(backend(global)?);
            if materialized {
                config.oracle.strategy = Strategy::Materialized;
            }
            let rows = compare_backends(&config).map_err(|e| Failure::Correctness(e.into()))?;
            print!("{}", compare_table(&rows, sep));
            if let Some(prefix) = gnuplot {
                let mut dat = String::from("# n sat_mean_time_s oracle_mean_time_s\n");
                for r in &rows {
                    let _ = writeln!(
                        dat,
                        "{} {} {}",
                        r.n, r.sat_mean_time_s, r.oracle_mean_time_s
                    );
                }
                write_plot(
                    &prefix,
                    &dat,
                    "set xlabel 'states'\nset ylabel 'mean time (s)'\nset logscale y\n",
                    &[("2", "SAT"), ("3", "power automaton")],
                )?;
            }
            let bad: Vec<u64> = rows.iter().flat_map(|r| r.disagreements.clone()).collect();
            if !bad.is_empty() {
                return Err(Failure::Correctness(anyhow!(
                    "SAT and oracle lengths disagree on seeds {bad:?}"
                )));
            }
        }
    }
    Ok(())
}

fn write_lengths_plot(prefix: &Path, rows: &[ExperimentRow]) -> Result<(), Failure> {
    let mut dat = String::from("# n mean_length rsd\n");
    for r in rows {
        let _ = writeln!(dat, "{} {} {}", r.n, r.mean_length, r.rsd);
    }
    write_plot(
        prefix,
        &dat,
        "set xlabel 'states'\nset ylabel 'mean shortest length'\nset y2label 'rsd'\nset y2tics\n",
        &[("2", "mean length"), ("3", "rsd")],
    )
}

fn write_plot(
    prefix: &Path,
    dat: &str,
    setup: &str,
    columns: &[(&str, &str)],
) -> Result<(), Failure> {
    let dat_path = prefix.with_extension("dat");
    let gp_path = prefix.with_extension("gp");
    let name = dat_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut gp = String::from(setup);
    let plots: Vec<String> = columns
        .iter()
        .enumerate()
        .map(|(i, (col, title))| {
            let axes = if i > 0 && setup.contains("y2tics") {
                " axes x1y2"
            } else {
                ""
            };
            format!("'{name}' using 1:{col}{axes} with linespoints title '{title}'")
        })
        .collect();
    let _ = writeln!(gp, "plot {}", plots.join(", \\\n     "));
    fs::write(&dat_path, dat).with_context(|| format!("writing {}", dat_path.display()))?;
    fs::write(&gp_path, gp).with_context(|| format!("writing {}", gp_path.display()))?;
    Ok(())
}

/// Points from a `bench lengths` table (columns `n` and `mean_length`) or
/// from headerless two-column lines.
fn read_points(text: &str) -> anyhow::Result<Vec<(f64, f64)>> {
    let split = |line: &str| -> Vec<String> {
        line.split([',', '\t', ' '])
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    };
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let (xi, yi) = match lines.peek() {
        Some(first) if first.parse::<f64>().is_err() && split(first)[0].parse::<f64>().is_err() => {
            let header = split(first);
            let find = |name: &str| {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| anyhow!("no `{name}` column in header"))
            };
            let cols = (find("n")?, find("mean_length")?);
            lines.next();
            cols
        }
        _ => (0, 1),
    };
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields = split(line);
            let get = |k: usize| -> anyhow::Result<f64> {
                fields
                    .get(k)
                    .ok_or_else(|| anyhow!("data row {} is too short", i + 1))?
                    .parse()
                    .with_context(|| format!("data row {}", i + 1))
            };
            Ok((get(xi)?, get(yi)?))
        })
        .collect()
}

fn fit_command(global: &Global, input: &Path) -> Result<(), Failure> {
    let points = read_points(&read_input(input)?)?;
    let fit = fit_cubic(&points).map_err(anyhow::Error::from)?;
    let sep = global.format.sep();
    let c = fit.coefficients;
    println!("c0{sep}c1{sep}c2{sep}c3{sep}rss");
    println!(
        "{}{sep}{}{sep}{}{sep}{}{sep}{}",
        c[0], c[1], c[2], c[3], fit.rss
    );
    Ok(())
}
