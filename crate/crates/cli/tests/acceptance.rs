//! Acceptance criteria at the default design size. Prints one PASS/FAIL
//! line per criterion and exits nonzero when any of them fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use semwalk_core::exp::{build_population, ExperimentConfig, Layout};
use semwalk_core::verify::{
    check_breadth, check_modularity_trend, check_oracles, check_redundancy,
    check_redundancy_full_scale, check_robustness, check_stimulation, Check, Tolerance,
};

fn run_all(out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_semwalk"))
        .args([
            "all",
            "--seed",
            "42",
            "--threads",
            &threads.to_string(),
            "--out",
        ])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    Ok(())
}

fn sorted_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

/// `all --seed 42` through the binary twice, on one thread and on four.
fn determinism() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("one"), tmp.path().join("four"));
    let outcome = run_all(&a, 1).and_then(|_| run_all(&b, 4));
    let (passed, detail) = match outcome {
        Err(e) => (false, format!("run failed: {e}")),
        Ok(()) => {
            let (fa, fb) = (sorted_files(&a), sorted_files(&b));
            let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
            let expected = [
                "exp1_modularity.csv",
                "exp2_breadth.csv",
                "exp3_binned.csv",
                "exp3_exposures.csv",
                "exp4_redundancy.csv",
                "summary.json",
            ];
            if names != expected {
                (false, format!("unexpected outputs {names:?}"))
            } else if fa != fb {
                let differing: Vec<&str> = fa
                    .iter()
                    .zip(&fb)
                    .filter(|(x, y)| x != y)
                    .map(|(x, _)| x.0.as_str())
                    .collect();
                (
                    false,
                    format!("differing between 1 and 4 threads: {differing:?}"),
                )
            } else {
                (
                    true,
                    format!("{} files byte-identical for --threads 1 and 4", fa.len()),
                )
            }
        }
    };
    Check {
        id: "AC7".into(),
        passed,
        detail,
    }
}

fn main() {
    let started = Instant::now();
    let config = ExperimentConfig::default();
    let tol = Tolerance::new(1.0);
    let population = build_population(&config, &Layout::population(&config)).expect("population");

    let mut checks = Vec::new();
    let mut record = |check: Check| {
        println!("{check}    ({:.0} s)", started.elapsed().as_secs_f64());
        checks.push(check);
    };
    record(check_modularity_trend(&config).expect("AC1 run"));
    record(check_breadth(&config, &population, tol).expect("AC2 run"));
    record(check_stimulation(&config, &population).expect("AC3 run"));
    record(check_redundancy(&config, &population, tol).expect("AC4 run"));
    record(check_redundancy_full_scale(&config).expect("AC4 full-scale run"));
    record(check_robustness(&config).expect("AC5 run"));
    record(check_oracles(config.master_seed).expect("AC6 run"));
    record(determinism());

    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.id.as_str())
        .collect();
    println!(
        "acceptance: {} of {} criteria passed",
        checks.len() - failed.len(),
        checks.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
