//! End-to-end checks of the command-line contract: exit codes, file
//! outputs, and byte-determinism of reports and controllers.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fondsat")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fondsat-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn plan_verify_simulate_roundtrip() {
    let dir = tmpdir("roundtrip");
    let gen = run(&dir, &["gen", "tireworldLine", "-p", "length=3"]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));

    let domain = "tireworld-line-3-domain.pddl";
    let problem = "tireworld-line-3-problem.pddl";
    let plan = run(&dir, &["plan", domain, problem, "--out", "out"]);
    assert_eq!(plan.status.code(), Some(0));
    assert!(dir.join("out/controller.json").exists());
    assert!(dir.join("out/report.json").exists());

    let verify = run(&dir, &["verify", domain, problem, "--controller", "out/controller.json"]);
    assert_eq!(verify.status.code(), Some(0));

    let sim = run(
        &dir,
        &["simulate", domain, problem, "--controller", "out/controller.json", "--seed", "7"],
    );
    assert_eq!(sim.status.code(), Some(0));
}

#[test]
fn identical_requests_produce_identical_files() {
    let dir = tmpdir("determinism");
    assert!(run(&dir, &["gen", "doors"]).status.success());
    let args = ["plan", "doors-4-domain.pddl", "doors-4-problem.pddl", "--out", "out"];
    assert_eq!(run(&dir, &args).status.code(), Some(0));
    let first: Vec<Vec<u8>> = ["controller.json", "report.json"]
        .iter()
        .map(|f| std::fs::read(dir.join("out").join(f)).unwrap())
        .collect();
    assert_eq!(run(&dir, &args).status.code(), Some(0));
    for (f, a) in ["controller.json", "report.json"].iter().zip(first) {
        let b = std::fs::read(dir.join("out").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn no_solution_within_budget_exits_one() {
    let dir = tmpdir("nosolution");
    assert!(run(&dir, &["gen", "tireworldLine", "-p", "length=3"]).status.success());
    let plan = run(
        &dir,
        &[
            "plan",
            "tireworld-line-3-domain.pddl",
            "tireworld-line-3-problem.pddl",
            "--mode",
            "strong",
            "--max-k",
            "4",
        ],
    );
    assert_eq!(plan.status.code(), Some(1));
}

#[test]
fn input_errors_exit_two() {
    let dir = tmpdir("inputerr");
    let missing = run(&dir, &["plan", "nope-domain.pddl", "nope-problem.pddl"]);
    assert_eq!(missing.status.code(), Some(2));

    std::fs::write(dir.join("bad.pddl"), "(define (domain broken").unwrap();
    std::fs::write(dir.join("bad2.pddl"), "(define (problem broken").unwrap();
    let garbled = run(&dir, &["plan", "bad.pddl", "bad2.pddl"]);
    assert_eq!(garbled.status.code(), Some(2));
}

#[test]
fn tampered_controller_fails_verification() {
    let dir = tmpdir("tampered");
    assert!(run(&dir, &["gen", "doors"]).status.success());
    let plan = run(
        &dir,
        &["plan", "doors-4-domain.pddl", "doors-4-problem.pddl", "--out", "out"],
    );
    assert_eq!(plan.status.code(), Some(0));

    // reroute every transition to the initial node: the goal generally
    // becomes unreachable
    let path = dir.join("out/controller.json");
    let mut c: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for t in c["transitions"].as_array_mut().unwrap() {
        t["to"] = serde_json::json!(0);
    }
    std::fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();

    let verify = run(
        &dir,
        &["verify", "doors-4-domain.pddl", "doors-4-problem.pddl", "--controller", "out/controller.json"],
    );
    assert_eq!(verify.status.code(), Some(4));
}

#[test]
fn encode_emits_dimacs_with_sidecar() {
    let dir = tmpdir("encode");
    assert!(run(&dir, &["gen", "tireworldLine", "-p", "length=1"]).status.success());
    let enc = run(
        &dir,
        &[
            "encode",
            "tireworld-line-1-domain.pddl",
            "tireworld-line-1-problem.pddl",
            "--k",
            "3",
            "--out",
            "cnf",
        ],
    );
    assert_eq!(enc.status.code(), Some(0), "{}", String::from_utf8_lossy(&enc.stderr));
    let text = std::fs::read_to_string(dir.join("cnf/problem.cnf")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("p cnf ")));
    assert!(dir.join("cnf/problem.vars").exists());
}
