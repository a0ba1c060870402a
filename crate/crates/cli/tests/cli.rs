use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const A1: &str = "2 2\n1 2\n1 0\n";
// a: cyclic shift, b: merges 1 into 2
const C3: &str = "3 2\n2 2\n3 2\n1 3\n";

fn csync(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_csync"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn encode_a1() {
    let dir = tempfile::tempdir().unwrap();
    let a1 = write(dir.path(), "a1.pfa", A1);
    let o = csync(&["encode", &a1, "--length", "1"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("p cnf 6 9\n"));
    assert_eq!(out.lines().filter(|l| !l.starts_with('c')).count(), 10);
}

#[test]
fn solve_automaton_and_dimacs() {
    let o = csync(&["solve", "-", "--length", "1"], Some(A1));
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("c word a\n"));
    assert!(out.contains("s SATISFIABLE\n"));

    let o = csync(&["solve"], Some("p cnf 1 2\n1 0\n-1 0\n"));
    assert!(o.status.success());
    assert_eq!(stdout(&o), "s UNSATISFIABLE\n");
}

#[test]
fn min_and_oracle_agree_on_c3() {
    let dir = tempfile::tempdir().unwrap();
    let c3 = write(dir.path(), "c3.pfa", C3);
    let probes = dir.path().join("probes.csv");
    let o = csync(
        &["min", &c3, "--emit-probes", probes.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("status: FOUND\nlength: 4\n"));
    let table = fs::read_to_string(&probes).unwrap();
    let rows: Vec<&str> = table
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0)
        .collect();
    assert_eq!(
        rows,
        ["length,result", "1,UNSAT", "2,UNSAT", "4,SAT", "3,UNSAT"]
    );

    let o = csync(&["oracle", &c3], None);
    assert!(o.status.success());
    assert!(stdout(&o).contains("status: FOUND\nlength: 4\n"));
    assert!(stdout(&o).contains("visited: "));
    let o = csync(&["oracle", &c3, "--materialized"], None);
    assert!(stdout(&o).contains("length: 4\n"));
}

#[test]
fn external_backend_conventions() {
    let dir = tempfile::tempdir().unwrap();
    let c3 = write(dir.path(), "c3.pfa", C3);
    let exe = env!("CARGO_BIN_EXE_csync");
    for command in [
        format!("external:{exe} solve"),
        format!("external:{exe} solve {{input}}"),
        format!("external:{exe} solve {{input}} --result-file {{output}}"),
    ] {
        let o = csync(&["min", &c3, "--backend", &command], None);
        assert!(o.status.success(), "{command}: {}", stderr(&o));
        assert!(stdout(&o).contains("length: 4\n"), "{command}");
    }
}

#[cfg(unix)]
#[test]
fn lying_solver_is_caught() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("liar.sh");
    fs::write(
        &script,
        "#!/bin/sh\ncat > /dev/null\necho 's SATISFIABLE'\necho 'v -1 0'\n",
    )
    .unwrap();
    fs::set_permissions(&script, fs::Permissions::from_mode(0o755)).unwrap();
    let backend = format!("external:{}", script.display());
    let o = csync(&["solve", "--backend", &backend], Some("p cnf 1 1\n1 0\n"));
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains("model verification failed"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a1 = write(dir.path(), "a1.pfa", A1);
    assert_eq!(
        csync(&["min", &a1, "--backend", "nope"], None)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        csync(&["min", "/does/not/exist"], None).status.code(),
        Some(1)
    );
    assert_eq!(csync(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(csync(&["--help"], None).status.code(), Some(0));

    let p8 = dir.path().join("p8.pfa");
    let o = csync(&["gen", "--family", "pn", "--n", "8"], None);
    fs::write(&p8, stdout(&o)).unwrap();
    let p8 = p8.to_str().unwrap();
    let o = csync(&["min", p8, "--max-conflicts", "1"], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = csync(&["oracle", p8, "--max-visited", "3"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_writes_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = csync(
        &[
            "gen",
            "--n",
            "6",
            "--count",
            "3",
            "--seed",
            "40",
            "--out-dir",
            out,
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for seed in 40..43 {
        let text =
            fs::read_to_string(dir.path().join(format!("random-n6-k1-s{seed}.pfa"))).unwrap();
        assert!(text.starts_with(&format!("# family=random n=6 k=1 seed={seed} ")));
        let single = csync(&["gen", "--n", "6", "--seed", &seed.to_string()], None);
        assert_eq!(stdout(&single), text);
        let min = csync(&["min", "-"], Some(&text));
        assert!(min.status.success());
    }
    assert_eq!(
        csync(&["gen", "--n", "6", "--count", "2"], None)
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bench_tables_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bench",
        "lengths",
        "--n",
        "5,6",
        "--samples",
        "8",
        "--seed",
        "3",
    ];
    let first = stdout(&csync(&args, None));
    let second = stdout(&csync(&args, None));
    let strip = |t: &str| -> Vec<String> {
        t.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(5);
                f.join(",")
            })
            .collect()
    };
    assert!(first.starts_with("n,samples,discards,mean_length,rsd,mean_time_s,budget_failures\n"));
    assert_eq!(strip(&first), strip(&second));
    assert_eq!(first.lines().count(), 3);

    let prefix = dir.path().join("lengths");
    let o = csync(
        &[
            "bench",
            "lengths",
            "--n",
            "5..6",
            "--samples",
            "4",
            "--format",
            "tsv",
            "--gnuplot",
            prefix.to_str().unwrap(),
        ],
        None,
    );
    assert!(stdout(&o).starts_with("n\tsamples\t"));
    assert!(fs::read_to_string(dir.path().join("lengths.gp"))
        .unwrap()
        .contains("'lengths.dat'"));
    assert_eq!(
        fs::read_to_string(dir.path().join("lengths.dat"))
            .unwrap()
            .lines()
            .count(),
        3
    );

    let o = csync(&["bench", "compare", "--n", "6", "--samples", "5"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.starts_with("n,samples,discards,sat_mean_time_s,oracle_mean_time_s,agreements"));
    assert!(table.lines().nth(1).unwrap().starts_with("6,5,"));

    let points: String = (1..=8)
        .map(|i| {
            let x = (i * 5) as f64;
            format!("{x} {}\n", 2.0 - 0.5 * x + 0.25 * x * x + 0.001 * x * x * x)
        })
        .collect();
    let data = write(dir.path(), "points.txt", &points);
    let o = csync(&["fit", &data], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let values: Vec<f64> = out
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    for (got, want) in values.iter().zip([2.0, -0.5, 0.25, 0.001]) {
        assert!((got - want).abs() < 1e-8, "{out}");
    }

    let table = write(dir.path(), "table.csv", &first);
    let o = csync(&["fit", &table], None);
    // two rows cannot determine a cubic
    assert_eq!(o.status.code(), Some(1));
}
