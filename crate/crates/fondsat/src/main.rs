use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fondsat::analysis::{analyze, DEFAULT_MISLEADING_CAP, DEFAULT_STATE_BUDGET};
use fondsat::benchgen;
use fondsat::driver::{self, PlanRequest, PlanStatus, SolverChoice};
use fondsat::encoder::{emit_dimacs, encode, EncodeOptions, Mode};
use fondsat::policy::{simulate, Controller, RandomChooser, TrajectoryStatus};
use fondsat::verifier::verify;

const EXIT_OK: u8 = 0;
const EXIT_NO_SOLUTION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "fondsat",
    version,
    about = "SAT-based planner for fully observable non-deterministic problems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a controller by iterative deepening on its size
    Plan(PlanArgs),
    /// Check a controller file against a problem
    Verify(VerifyArgs),
    /// Walk a controller with randomly chosen outcomes
    Simulate(SimulateArgs),
    /// Explicit solvability and misleading-plan analysis
    Analyze(AnalyzeArgs),
    /// Emit a benchmark instance (or list the catalog)
    Gen(GenArgs),
    /// Emit the CNF encoding and variable map without solving
    Encode(EncodeArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Domain and problem PDDL files, or one grounded file
    #[arg(required = true, num_args = 1..=2, value_name = "INPUT")]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct ModeArg {
    /// strong-cyclic, strong, or dual
    #[arg(long, default_value = "strong-cyclic")]
    mode: String,
}

impl ModeArg {
    fn parse(&self) -> Result<Mode, String> {
        match self.mode.as_str() {
            "strong-cyclic" => Ok(Mode::StrongCyclic),
            "strong" => Ok(Mode::Strong),
            "dual" => Ok(Mode::Dual),
            other => Err(format!(
                "mode must be strong-cyclic, strong or dual, got `{other}`"
            )),
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    mode: ModeArg,
    #[arg(long, default_value_t = 2)]
    start_k: usize,
    #[arg(long, default_value_t = 20)]
    max_k: usize,
    /// Total wall-clock budget in seconds
    #[arg(long)]
    max_seconds: Option<f64>,
    /// `internal` or `cmd:<path to DIMACS solver>`
    #[arg(long, default_value = "internal")]
    solver: String,
    /// Skip semantic verification of the decoded controller
    #[arg(long)]
    no_verify: bool,
    /// Directory for report.json and controller.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve k and k+1 concurrently; smallest satisfiable k wins
    #[arg(long)]
    parallel_k: bool,
    /// Use the unoptimized frame clauses
    #[arg(long)]
    basic_clause7: bool,
    /// Disable first-incoming-edge symmetry breaking
    #[arg(long)]
    no_symmetry: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    mode: ModeArg,
    #[arg(long)]
    controller: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    controller: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct GenArgs {
    /// Domain family name from the catalog
    #[arg(required_unless_present = "list")]
    name: Option<String>,
    /// Override a parameter, e.g. -p rooms=5 (repeatable)
    #[arg(short, long = "param", value_name = "KEY=VALUE")]
    param: Vec<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Print the catalog and exit
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    mode: ModeArg,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Plan(a) => run_plan(a),
        Cmd::Verify(a) => run_verify(a),
        Cmd::Simulate(a) => run_simulate(a),
        Cmd::Analyze(a) => run_analyze(a),
        Cmd::Gen(a) => run_gen(a),
        Cmd::Encode(a) => run_encode(a),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl ToString) -> CliError {
    CliError {
        code,
        msg: msg.to_string(),
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    fail(EXIT_INPUT, e)
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    fail(EXIT_INTERNAL, e)
}

fn load(inputs: &[PathBuf]) -> Result<fondsat::model::FondProblem, CliError> {
    driver::load_problem(inputs).map_err(input_err)
}

fn load_controller(path: &PathBuf) -> Result<Controller, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    Controller::from_json(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn write_out(dir: &PathBuf, name: &str, text: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(io_err)?;
    Ok(path)
}

fn run_plan(a: PlanArgs) -> Result<u8, CliError> {
    let mode = a.mode.parse().map_err(input_err)?;
    let problem = load(&a.input.inputs)?;
    let mut req = PlanRequest::new(mode);
    req.start_k = a.start_k;
    req.max_k = a.max_k;
    req.max_seconds = a.max_seconds;
    req.solver = SolverChoice::parse(&a.solver).map_err(input_err)?;
    req.verify_after = !a.no_verify;
    req.parallel_k = a.parallel_k;
    req.options = EncodeOptions::with_mode(mode);
    req.options.use_optimized7 = !a.basic_clause7;
    req.options.symmetry_breaking = !a.no_symmetry;

    let mut report = driver::plan(&problem, &req).map_err(|e| match e {
        driver::PlanError::BadRequest(_) => input_err(e),
        _ => fail(EXIT_INTERNAL, e),
    })?;

    for w in &report.warnings {
        println!("warning: {w}");
    }
    for at in &report.attempts {
        println!(
            "k={}: {} vars, {} clauses, {} ({:.3}s)",
            at.k, at.vars, at.clauses, at.result, at.seconds
        );
    }
    match report.status {
        PlanStatus::Solved => {
            let c = report.controller.as_ref().unwrap();
            let nodes = c.reached.iter().filter(|&&r| r).count();
            println!(
                "solved: k={}, {} reachable controller nodes, verified={}",
                report.k_solved.unwrap(),
                nodes,
                report.verdict.as_ref().map_or(false, |v| v.valid)
            );
        }
        PlanStatus::ExhaustedK => {
            println!("no controller within k <= {} (not an unsolvability proof)", req.max_k)
        }
        PlanStatus::Timeout => println!("time budget exhausted"),
        PlanStatus::VerificationFailed => println!("verification failed; see report"),
    }

    if let Some(dir) = &a.out {
        if let Some(c) = &report.controller {
            let p = write_out(dir, "controller.json", &c.to_json())?;
            report.controller_file = Some(p.display().to_string());
        }
        let json = serde_json::to_string_pretty(&report).map_err(io_err)?;
        let p = write_out(dir, "report.json", &(json + "\n"))?;
        println!("report: {}", p.display());
    } else {
        println!("{}", serde_json::to_string_pretty(&report).map_err(io_err)?);
    }

    Ok(match report.status {
        PlanStatus::Solved => EXIT_OK,
        PlanStatus::ExhaustedK | PlanStatus::Timeout => EXIT_NO_SOLUTION,
        PlanStatus::VerificationFailed => EXIT_VERIFY,
    })
}

fn run_verify(a: VerifyArgs) -> Result<u8, CliError> {
    let mode = a.mode.parse().map_err(input_err)?;
    let problem = load(&a.input.inputs)?;
    let c = load_controller(&a.controller)?;
    let verdict = verify(&problem, &c, mode, fondsat::policy::DEFAULT_PRODUCT_BUDGET)
        .map_err(|e| fail(EXIT_INTERNAL, e))?;
    let json = serde_json::to_string_pretty(&verdict).map_err(io_err)?;
    if let Some(dir) = &a.out {
        let p = write_out(dir, "verdict.json", &(json.clone() + "\n"))?;
        println!("verdict: {}", p.display());
    }
    println!("{json}");
    Ok(if verdict.valid { EXIT_OK } else { EXIT_VERIFY })
}

fn run_simulate(a: SimulateArgs) -> Result<u8, CliError> {
    let problem = load(&a.input.inputs)?;
    let c = load_controller(&a.controller)?;
    let mut chooser = RandomChooser::new(a.seed);
    let t = simulate(&problem, &c, &mut chooser, a.steps);
    println!("{}", serde_json::to_string_pretty(&t).map_err(io_err)?);
    Ok(match t.status {
        TrajectoryStatus::OpenPolicy => EXIT_VERIFY,
        _ => EXIT_OK,
    })
}

fn run_analyze(a: AnalyzeArgs) -> Result<u8, CliError> {
    let problem = load(&a.input.inputs)?;
    let report = analyze(&problem, DEFAULT_STATE_BUDGET, DEFAULT_MISLEADING_CAP)
        .map_err(|e| fail(EXIT_INTERNAL, e))?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(io_err)?);
    Ok(EXIT_OK)
}

fn run_gen(a: GenArgs) -> Result<u8, CliError> {
    if a.list {
        for d in benchgen::list_domains() {
            println!("{}: {}", d.name, d.summary);
            for p in d.params {
                println!(
                    "  {} = {} ({}..={}): {}",
                    p.name, p.default, p.min, p.max, p.doc
                );
            }
            println!(
                "  strong-cyclic={} strong={} dual={} misleading={}",
                d.strong_cyclic, d.strong, d.dual, d.misleading
            );
        }
        return Ok(EXIT_OK);
    }
    let name = a.name.expect("clap enforces name unless --list");
    let mut overrides = BTreeMap::new();
    for p in &a.param {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| input_err(format!("expected KEY=VALUE, got `{p}`")))?;
        let value: usize = value
            .parse()
            .map_err(|_| input_err(format!("parameter `{key}` needs a number, got `{value}`")))?;
        overrides.insert(key.to_string(), value);
    }
    let inst = benchgen::generate(&name, &overrides).map_err(input_err)?;
    let d = write_out(&a.out, &format!("{}-domain.pddl", inst.name), &inst.domain)?;
    let p = write_out(&a.out, &format!("{}-problem.pddl", inst.name), &inst.problem)?;
    println!("{}", d.display());
    println!("{}", p.display());
    Ok(EXIT_OK)
}

fn run_encode(a: EncodeArgs) -> Result<u8, CliError> {
    let mode = a.mode.parse().map_err(input_err)?;
    let problem = load(&a.input.inputs)?;
    let opts = EncodeOptions::with_mode(mode);
    let (cnf, vars) = encode(&problem, a.k, &opts).map_err(input_err)?;
    for w in &vars.warnings {
        println!("warning: {w}");
    }
    let c = write_out(&a.out, "problem.cnf", &emit_dimacs(&cnf, Some(&vars)))?;
    let v = write_out(&a.out, "problem.vars", &vars.sidecar())?;
    println!("{}", c.display());
    println!("{}", v.display());
    Ok(EXIT_OK)
}
