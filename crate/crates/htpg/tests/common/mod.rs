#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

/// Runs the binary inside `dir`.
pub fn htpg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htpg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn htpg")
}

pub fn ok(dir: &Path, args: &[&str]) {
    let out = htpg(dir, args);
    assert!(
        out.status.success(),
        "htpg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Primary outputs of [`pipeline`], relative to its directory.
pub const PRIMARY: &[&str] = &[
    "c432.profile.json",
    "c432.cnf",
    "c432.pat",
    "c432.pat.trace.csv",
    "trojans/trojans.json",
    "trojans/t0.bench",
    "trojans/t1.bench",
    "trojans/t2.bench",
    "detect.json",
    "hw/tap.json",
    "hw/tpg.bench",
    "hw/rom.hex",
    "hw_chunked/tap.json",
    "hw_chunked/tpg.bench",
    "hw_cluster/tap.json",
    "bench.json",
    "bench.csv",
];

/// Every subcommand once, on c432, with small budgets.
pub fn pipeline(dir: &Path, jobs: &str) {
    std::fs::copy(data("c432.bench"), dir.join("c432.bench")).unwrap();
    std::fs::write(dir.join("search.json"), r#"{ "max_iterations": 15 }"#).unwrap();
    std::fs::write(
        dir.join("campaign.json"),
        r#"{
  "circuits": ["c432.bench"],
  "trials": 20000,
  "campaign": {
    "trojan_count": 3,
    "runs_per_trojan": 2,
    "adatest": { "max_iterations": 10 },
    "mero": { "target": 5, "random_pool": 300 },
    "triage": { "max_generations": 15 },
    "seed": 3
  }
}
"#,
    )
    .unwrap();
    let j = ["--jobs", jobs];
    let run = |args: &[&str]| {
        let mut all: Vec<&str> = j.to_vec();
        all.extend_from_slice(args);
        ok(dir, &all)
    };
    run(&[
        "profile",
        "c432.bench",
        "--trials",
        "20000",
        "--seed",
        "1",
        "--out",
        "c432.profile.json",
        "--dimacs",
        "c432.cnf",
    ]);
    run(&[
        "generate",
        "c432.bench",
        "--profile",
        "c432.profile.json",
        "--config",
        "search.json",
        "--seed",
        "2",
        "--out",
        "c432.pat",
    ]);
    run(&[
        "inject",
        "c432.bench",
        "--profile",
        "c432.profile.json",
        "--count",
        "3",
        "--seed",
        "4",
        "--out-dir",
        "trojans",
    ]);
    run(&[
        "detect",
        "c432.bench",
        "--trojans",
        "trojans",
        "--patterns",
        "c432.pat",
        "--out",
        "detect.json",
    ]);
    run(&[
        "emit-hw",
        "c432.pat",
        "--golden",
        "c432.bench",
        "--init-position",
        "2",
        "--out-dir",
        "hw",
    ]);
    run(&[
        "emit-hw",
        "c432.pat",
        "--auto-chunk",
        "--out-dir",
        "hw_chunked",
    ]);
    run(&[
        "emit-hw",
        "c432.pat",
        "--cluster",
        "c432.bench",
        "--mode",
        "centralized",
        "--out-dir",
        "hw_cluster",
    ]);
    run(&[
        "bench",
        "campaign.json",
        "--out",
        "bench.json",
        "--csv",
        "bench.csv",
    ]);
}

/// Paths in `PRIMARY` whose bytes differ between two pipeline directories.
pub fn differing(a: &Path, b: &Path) -> Vec<String> {
    PRIMARY
        .iter()
        .filter(|p| {
            let x = std::fs::read(a.join(p)).unwrap_or_else(|e| panic!("{p}: {e}"));
            let y = std::fs::read(b.join(p)).unwrap_or_else(|e| panic!("{p}: {e}"));
            x != y
        })
        .map(|p| p.to_string())
        .collect()
}
