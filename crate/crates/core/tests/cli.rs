use std::path::Path;
use std::process::{Command, Output};

fn irsbeam(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_irsbeam"));
    cmd.args(args).env_remove("IRSBEAM_THREADS");
    if let Some(t) = threads {
        cmd.env("IRSBEAM_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn scenario(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "kind = \"bound-check\"\nM = 2\nN = 8\ntrials = 64\n";

#[test]
fn validate_prints_canonical_settings() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "s.toml", "kind = compare-rician; N = 16 # comment\nK = 3\nK0 = 0\n");
    let out = irsbeam(&["validate", "--scenario", &path], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in ["kind = compare-rician", "N = 16", "K0 = 0", "K1 = 3", "K2 = 3", "trials = 10000"] {
        assert!(text.lines().any(|l| l == line), "missing `{line}` in\n{text}");
    }

    let again = scenario(dir.path(), "again.toml", &text);
    let out2 = irsbeam(&["validate", "--scenario", &again], None);
    assert_eq!(String::from_utf8(out2.stdout).unwrap(), text);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "kind = bound-check\nN = zero\n",
        "kind = bound-check\nN = 0\n",
        "kind = nonsense\n",
        "kind = bound-check\nM = 2\nM = 3\n",
        "kind = bound-check\nbogus_key = 1\n",
    ];
    for (i, body) in cases.iter().enumerate() {
        let path = scenario(dir.path(), &format!("bad{i}.toml"), body);
        let out = irsbeam(&["validate", "--scenario", &path], None);
        assert_eq!(out.status.code(), Some(1), "case {body:?}");
        assert!(!out.stderr.is_empty());
    }

    let missing = dir.path().join("missing.toml");
    let out = irsbeam(&["validate", "--scenario", missing.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));

    let good = scenario(dir.path(), "good.toml", SMALL);
    for bad in ["0", "many", "-2"] {
        let out = irsbeam(&["run", "--scenario", &good], Some(bad));
        assert_eq!(out.status.code(), Some(1), "IRSBEAM_THREADS={bad}");
    }
    let out = irsbeam(&["run", "--scenario", &good, "--trials", "0"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_csv_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "s.toml", SMALL);
    let out = irsbeam(&["run", "--scenario", &path, "--trials", "32"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# irsbeam results\n"));
    assert!(text.contains("# trials = 32\n"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        data[0],
        "sweep_value,scheme,capacity_bps_hz,std_error,bound_bps_hz,iterations,seed"
    );
    assert_eq!(data.len(), 2);
    let fields: Vec<&str> = data[1].split(',').collect();
    assert_eq!(fields.len(), 7);
    assert_eq!(fields[1], "proposed");
    let capacity: f64 = fields[2].parse().unwrap();
    let bound: f64 = fields[4].parse().unwrap();
    assert!(capacity > 0.0 && bound > 0.0);
}

#[test]
fn out_flag_writes_file_and_seed_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "s.toml", SMALL);
    let file = |name: &str, seed: &str| {
        let target = dir.path().join(name);
        let out = irsbeam(
            &["run", "--scenario", &path, "--seed", seed, "--out", target.to_str().unwrap()],
            None,
        );
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
        std::fs::read_to_string(target).unwrap()
    };
    let a = file("a.csv", "5");
    let b = file("b.csv", "5");
    let c = file("c.csv", "6");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn moments_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "s.toml", SMALL);
    let out = irsbeam(&["moments", "--scenario", &path, "--trials", "200"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("M=2 N=8 trials=200 seed=1\n"));
    for label in ["x2", "x3", "x4", "x5", "x2x3", "x4x5"] {
        assert!(
            text.lines().any(|l| l.split_whitespace().next() == Some(label)),
            "missing row {label}"
        );
    }
    assert!(text.contains("sum: analytic"));
}

#[test]
fn bundled_scenarios_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let out = irsbeam(&["validate", "--scenario", path.to_str().unwrap()], None);
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
        count += 1;
    }
    assert_eq!(count, 7);
}
