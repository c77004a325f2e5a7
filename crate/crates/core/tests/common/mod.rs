//! Golden report cases shared by the CLI suite and the acceptance run.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_tsallis-geom");

/// Stands for the fixtures directory in arguments and golden text.
pub const FIXTURES: &str = "<fixtures>";

/// `(golden file, arguments, exit code)`
pub const GOLDEN_CASES: &[(&str, &[&str], i32)] = &[
    ("entropy_uniform2.json", &["entropy", "--q", "0.5", "--dist", "<fixtures>/uniform2.json"], 0),
    (
        "entropy_compose.json",
        &["entropy", "--q", "0.9", "--dist", "<fixtures>/three.csv", "--compose", "<fixtures>/uniform2.json"],
        0,
    ),
    ("entropy_three.csv", &["entropy", "--q", "1.5", "--dist", "<fixtures>/three.csv", "--format", "csv"], 0),
    ("entropy_normal.json", &["entropy", "--q", "0.5", "--density", "normal", "--params", "0,2"], 0),
    ("qeval_tau.json", &["qeval", "--q", "0", "--op", "tau", "--x", "3"], 0),
    ("qeval_group.json", &["qeval", "--q", "0", "--op", "group-commutator", "--g", "1,2", "--h", "0.5,-1"], 0),
    ("qeval_mul.json", &["qeval", "--q", "0.5", "--op", "mul", "--x", "-1.5", "--y", "2"], 0),
    ("curvature_analytic.json", &["curvature", "--q", "0", "--mode", "analytic"], 0),
    (
        "geodesic_closed.csv",
        &["geodesic", "--q", "0.5", "--n", "2", "--from", "0,0,0", "--to", "1,-2,0.5", "--points", "5", "--format", "csv"],
        0,
    ),
    ("superstat.csv", &["superstat", "--q", "1.5", "--format", "csv"], 0),
    (
        "catk_lp1.json",
        &["catk", "--space", "lp", "--p", "1", "--dim", "2", "--k", "-0.1", "--samples", "10000", "--seed", "7"],
        10,
    ),
    (
        "catk_tripod.json",
        &["catk", "--space", "tree", "--tree", "<fixtures>/tripod.json", "--k", "-1", "--samples", "600", "--seed", "1", "--search"],
        0,
    ),
];

pub fn tests_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

pub fn fixtures_dir() -> String {
    tests_dir("fixtures").to_string_lossy().into_owned()
}

/// Runs the binary with `<fixtures>` expanded and the output directory
/// variable cleared.
pub fn run(args: &[&str]) -> Output {
    let dir = fixtures_dir();
    Command::new(BIN)
        .args(args.iter().map(|a| a.replace(FIXTURES, &dir)))
        .env_remove("TSALLIS_GEOM_OUT_DIR")
        .output()
        .expect("binary runs")
}

/// Compares one case with its golden file, or rewrites the file when
/// `TSALLIS_GEOM_BLESS` is set.
pub fn check_golden(name: &str, args: &[&str], code: i32) -> Result<(), String> {
    let o = run(args);
    if o.status.code() != Some(code) {
        return Err(format!(
            "{name}: exit {:?}, expected {code}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    let got = String::from_utf8_lossy(&o.stdout).replace(&fixtures_dir(), FIXTURES);
    let path = tests_dir("golden").join(name);
    if std::env::var_os("TSALLIS_GEOM_BLESS").is_some() {
        std::fs::write(&path, &got).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if got != want {
        return Err(format!("{name}: report differs from its golden file"));
    }
    Ok(())
}
