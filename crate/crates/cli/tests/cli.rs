use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn kacz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kacz"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

/// CSV rows without the timing column.
fn rows_without_time(file: &Path) -> Vec<String> {
    fs::read_to_string(file)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

#[test]
fn generate_writes_the_system_files() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "diag");
    let o = kacz(&["generate", "--problem", "diagonal:1,2", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("diag");
    assert_eq!(
        fs::read_to_string(dir.join("rhs.txt"))
            .unwrap()
            .lines()
            .count(),
        2
    );
    assert_eq!(
        fs::read_to_string(dir.join("reference.txt"))
            .unwrap()
            .lines()
            .count(),
        2
    );
    assert!(fs::read_to_string(dir.join("problem.toml"))
        .unwrap()
        .contains("seed = 0"));

    let out = path(tmp.path(), "lat");
    assert_eq!(
        code(&kacz(&[
            "generate",
            "--problem",
            "lattice:2",
            "--seed",
            "3",
            "--out",
            &out
        ])),
        0
    );
    let mtx = fs::read_to_string(tmp.path().join("lat/matrix.mtx")).unwrap();
    let mut lines = mtx.lines();
    assert!(lines.next().unwrap().starts_with("%%MatrixMarket"));
    let size: Vec<usize> = lines
        .next()
        .unwrap()
        .split(' ')
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(&size[..2], &[4, 4]);
    let mut per_row = [0usize; 4];
    for l in lines {
        per_row[l.split(' ').next().unwrap().parse::<usize>().unwrap() - 1] += 1;
    }
    assert!(per_row.iter().all(|&c| (1..=5).contains(&c)));
}

#[test]
fn invalid_problems_and_flags_are_usage_errors() {
    assert_eq!(code(&kacz(&["generate", "--problem", "lattice:0"])), 1);
    assert_eq!(code(&kacz(&["generate", "--problem", "nonsense"])), 1);
    assert_eq!(code(&kacz(&["bench", "--problem", "lattice:3"])), 1);
    assert_eq!(
        code(&kacz(&[
            "bench",
            "--problem",
            "lattice:3",
            "--rule",
            "fastest"
        ])),
        1
    );
    assert_eq!(
        code(&kacz(&[
            "bench",
            "--problem",
            "lattice:3",
            "--rule",
            "adaptive-uniform",
            "--graph",
            "none"
        ])),
        1
    );
    assert_eq!(code(&kacz(&["bench", "--bogus-flag"])), 1);
    assert_eq!(code(&kacz(&["--help"])), 0);
}

#[test]
fn missing_files_are_io_errors() {
    let tmp = TempDir::new().unwrap();
    let missing = path(tmp.path(), "nothing");
    assert_eq!(
        code(&kacz(&["bench", "--system", &missing, "--rule", "mr"])),
        3
    );
    assert_eq!(
        code(&kacz(&["bench", "--config", &missing, "--rule", "mr"])),
        3
    );
}

#[test]
fn bench_writes_one_trace_per_rule_and_seed() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "b");
    let args = [
        "bench",
        "--problem",
        "lattice:4",
        "--rule",
        "mr",
        "--rule",
        "uniform",
        "--seed",
        "1",
        "--seed",
        "2",
        "--seed",
        "3",
        "--iters",
        "50",
        "--out",
        &out,
    ];
    let o = kacz(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("b");
    let csvs = fs::read_dir(&dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "csv")
        })
        .count();
    assert_eq!(csvs, 6);
    let summary = json(&dir, "summary.json");
    assert_eq!(summary["rules"].as_array().unwrap().len(), 2);
    assert_eq!(summary["rules"][0]["runs"].as_array().unwrap().len(), 3);
    let trace = fs::read_to_string(dir.join("mr_seed2.csv")).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "iter,row,sq_error,sq_error_norm,sq_dist,sq_dist_norm,wall_ns"
    );
    assert_eq!(trace.lines().count(), 52);

    let again = path(tmp.path(), "b2");
    let mut args2 = args;
    *args2.last_mut().unwrap() = &again;
    assert_eq!(code(&kacz(&args2)), 0);
    for f in ["mr_seed1.csv", "uniform_seed3.csv"] {
        assert_eq!(
            rows_without_time(&dir.join(f)),
            rows_without_time(&tmp.path().join("b2").join(f))
        );
    }
    assert_eq!(summary, json(&tmp.path().join("b2"), "summary.json"));
}

#[test]
fn greedy_rule_solves_the_identity_in_m_steps() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "id");
    let o = kacz(&[
        "bench",
        "--problem",
        "identity:6",
        "--rule",
        "mr",
        "--iters",
        "6",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&tmp.path().join("id"), "summary.json");
    assert_eq!(
        summary["rules"][0]["final_sq_error_norm"].as_f64().unwrap(),
        0.0
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "problem = \"lattice:3\"\nrules = [\"md\"]\niters = 20\nseeds = [4]\nout = \"from-file\"\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&kacz(&["bench", "--config", cfg])), 0);
    assert!(tmp.path().join("from-file/md_seed4.csv").exists());
    let out = path(tmp.path(), "flag");
    assert_eq!(
        code(&kacz(&[
            "bench", "--config", cfg, "--rule", "mr", "--out", &out
        ])),
        0
    );
    assert!(tmp.path().join("flag/mr_seed4.csv").exists());
    assert!(!tmp.path().join("flag/md_seed4.csv").exists());
}

#[test]
fn validate_accepts_greedy_runs_and_rejects_a_corrupted_trace() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "v");
    let o = kacz(&[
        "validate",
        "--problem",
        "diagonal:1,2",
        "--rule",
        "md",
        "--rule",
        "mr",
        "--iters",
        "10",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&tmp.path().join("v"), "report.json");
    assert_eq!(report["passed"], true);
    assert_eq!(report["rules"][0]["violations"], 0);

    let b = path(tmp.path(), "b");
    assert_eq!(
        code(&kacz(&[
            "bench",
            "--problem",
            "lattice:3",
            "--rule",
            "md",
            "--iters",
            "5",
            "--out",
            &b
        ])),
        0
    );
    let text = fs::read_to_string(tmp.path().join("b/md_seed0.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut f: Vec<String> = lines[2].split(',').map(String::from).collect();
    let d0: f64 = lines[1].split(',').nth(4).unwrap().parse().unwrap();
    f[4] = format!("{:?}", 1.5 * d0);
    lines[2] = f.join(",");
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = kacz(&[
        "validate",
        "--problem",
        "lattice:3",
        "--rule",
        "md",
        "--trace",
        bad.to_str().unwrap(),
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn validate_reports_statistics_for_random_rules() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "v");
    let o = kacz(&[
        "validate",
        "--problem",
        "lattice:3",
        "--rule",
        "uniform",
        "--rule",
        "adaptive-nonuniform",
        "--iters",
        "18",
        "--runs",
        "100",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&tmp.path().join("v"), "report.json");
    for r in report["rules"].as_array().unwrap() {
        assert_eq!(r["check"], "statistical");
        assert_eq!(r["statistical"]["runs"], 100);
        assert!(r["statistical"]["std_error"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn validate_needs_an_equality_system() {
    assert_eq!(
        code(&kacz(&[
            "validate",
            "--problem",
            "box:3",
            "--rule",
            "mr",
            "--iters",
            "5"
        ])),
        1
    );
}

#[test]
fn compare_cd_matches_kaczmarz_on_the_identity() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "c");
    let args = [
        "compare-cd",
        "--problem",
        "identity:5",
        "--rule",
        "mr",
        "--iters",
        "5",
        "--out",
        &out,
    ];
    assert_eq!(code(&kacz(&args)), 0);
    let dir = tmp.path().join("c");
    for f in ["kaczmarz_mr.csv", "cd_gs.csv", "cd_gsl.csv", "compare.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let err = |f: &str| -> Vec<String> {
        fs::read_to_string(dir.join(f))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().to_string())
            .collect()
    };
    assert_eq!(err("kaczmarz_mr.csv"), err("cd_gs.csv"));
    let first = fs::read_to_string(dir.join("cd_gsl.csv")).unwrap();
    assert_eq!(code(&kacz(&args)), 0);
    assert_eq!(first, fs::read_to_string(dir.join("cd_gsl.csv")).unwrap());
}

#[test]
fn thread_cap_is_honoured_and_checked() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "t");
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_kacz"))
            .args([
                "bench",
                "--problem",
                "lattice:3",
                "--rule",
                "mr",
                "--iters",
                "5",
                "--out",
                &out,
            ])
            .env("KACZ_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("zero")), 1);
}
