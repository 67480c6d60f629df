use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use capgrowth::harness::{
    emit_report, parse_scenario, run_experiment, write_report, HarnessError, Payload, Report, ReportFormat, Scenario,
    ScenarioKind,
};
use capgrowth::Execution;

#[derive(Parser)]
#[command(name = "capgrowth", version, about = "Run capability-growth scenarios and check their bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Clone, Copy, Default)]
struct Overrides {
    /// Replace the scenario seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replace the number of systems / truncation levels
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Replace the gain threshold used by diminishing-returns diagnostics
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Slack allowed on inequality checks
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trajectory scenario
    Simulate { file: PathBuf },
    /// Run a prediction scenario and check the truncation bounds
    Predict { file: PathBuf },
    /// Decide GL formulas from a scenario file, or a single formula
    Logic { input: String },
    /// Run every *.json scenario in a directory
    Verify {
        dir: PathBuf,
        /// Run scenarios one at a time
        #[arg(long)]
        sequential: bool,
    },
    /// Run a scenario and write its report
    Emit {
        file: PathBuf,
        #[arg(long, default_value = "structured")]
        format: ReportFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Overrides {
    fn apply(self, mut s: Scenario) -> Result<Scenario, HarnessError> {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(n) = self.n_max {
            s.n_max = n;
        }
        if let Some(e) = self.epsilon {
            s.epsilon = e;
        }
        if let Some(t) = self.tolerance {
            s.tolerance = t;
        }
        s.validate()?;
        Ok(s)
    }
}

fn load(path: &Path, overrides: Overrides, expected: Option<ScenarioKind>) -> Result<Scenario, HarnessError> {
    let scenario = overrides.apply(parse_scenario(path)?)?;
    match expected {
        Some(kind) if kind != scenario.kind() => {
            Err(HarnessError::KindMismatch { found: scenario.kind(), scenario: scenario.name, expected: kind })
        }
        _ => Ok(scenario),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into())
}

fn print_report(report: &Report) {
    println!("scenario {} ({}) seed={} n_max={}", report.scenario, report.kind, report.seed, report.n_max);
    match report.kind {
        ScenarioKind::Trajectory => {
            println!("{:>5} {:>14} {:>14}", "n", "U(n)", "delta(n)");
            for s in &report.steps {
                println!("{:>5} {:>14} {:>14}", s.n, fmt_opt(s.utility), fmt_opt(s.delta));
            }
            if let Some(t) = &report.trajectory {
                println!(
                    "telescoping residual {:.3e}; gains >= {} : {} (bound {}); U(N) = {:.6}",
                    t.telescoping_residual,
                    t.diminishing_returns.epsilon,
                    t.diminishing_returns.count,
                    t.diminishing_returns.bound,
                    t.limit.u_last
                );
            }
        }
        ScenarioKind::Prediction => {
            println!("{:>5} {:>14} {:>14} {:>14} {:>14}", "n", "tau_n", "U_pred(n)", "|gain|", "gain slack");
            for s in &report.steps {
                println!(
                    "{:>5} {:>14} {:>14} {:>14} {:>14}",
                    s.n,
                    fmt_opt(s.tau),
                    fmt_opt(s.utility),
                    fmt_opt(s.bound_lhs),
                    fmt_opt(s.slack)
                );
            }
        }
        ScenarioKind::Logic => {
            for l in &report.logic {
                let oracle = l.oracle.map_or("-".to_string(), |o| o.to_string());
                println!("{:<8} oracle={:<8} {}", l.verdict.to_string(), oracle, l.formula);
                if let Some(steps) = &l.proof {
                    for step in steps {
                        println!("    {}{}   [{}]", "  ".repeat(step.depth), step.sequent, step.rule.name());
                    }
                }
                if let Some(c) = &l.countermodel {
                    println!(
                        "    countermodel: {} worlds, relation {:?}, valuation {:?}, refuted at {}",
                        c.worlds, c.relation, c.valuation, c.refuting_world
                    );
                }
            }
        }
    }
    for c in report.failures() {
        println!("FAILED {} at n={:?}: lhs={:e} rhs={:e} slack={:e}", c.name, c.n, c.lhs, c.rhs, c.slack);
    }
    for l in report.logic.iter().filter(|l| !l.pass) {
        println!("FAILED {}: verdict {} expected {:?} oracle {:?}", l.formula, l.verdict, l.expected, l.oracle);
    }
    println!("{}", if report.passed { "PASS" } else { "FAIL" });
}

fn run_one(path: &Path, overrides: Overrides, kind: Option<ScenarioKind>) -> Result<bool, HarnessError> {
    let report = run_experiment(&load(path, overrides, kind)?)?;
    print_report(&report);
    Ok(report.passed)
}

fn verify(dir: &Path, overrides: Overrides, exec: Execution) -> Result<bool, HarnessError> {
    let entries =
        std::fs::read_dir(dir).map_err(|source| HarnessError::Io { path: dir.display().to_string(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let results = exec.map_slice(&files, |path| load(path, overrides, None).and_then(|s| run_experiment(&s)));
    let mut all = !files.is_empty();
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(r) => {
                let failed = r.failures().count() + r.logic.iter().filter(|l| !l.pass).count();
                println!(
                    "{} {} ({}, {} checks, {failed} failed)",
                    if r.passed { "PASS" } else { "FAIL" },
                    path.display(),
                    r.kind,
                    r.checks.len() + r.logic.len()
                );
                all &= r.passed;
            }
            Err(e) => {
                println!("ERROR {}: {e}", path.display());
                all = false;
            }
        }
    }
    if files.is_empty() {
        println!("no scenario files in {}", dir.display());
    }
    Ok(all)
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    let o = cli.overrides;
    match cli.command {
        Command::Simulate { file } => run_one(&file, o, Some(ScenarioKind::Trajectory)),
        Command::Predict { file } => run_one(&file, o, Some(ScenarioKind::Prediction)),
        Command::Logic { input } => {
            let path = Path::new(&input);
            if path.is_file() {
                run_one(path, o, Some(ScenarioKind::Logic))
            } else {
                let report = run_experiment(&Scenario::single_formula(&input)?)?;
                print_report(&report);
                Ok(report.passed)
            }
        }
        Command::Verify { dir, sequential } => {
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            verify(&dir, o, exec)
        }
        Command::Emit { file, format, out } => {
            let scenario = load(&file, o, None)?;
            let report = run_experiment(&scenario)?;
            if out.as_os_str() == "-" {
                use std::io::Write;
                let bytes = emit_report(&report, format)?;
                std::io::stdout()
                    .write_all(&bytes)
                    .map_err(|source| HarnessError::Io { path: "stdout".into(), source })?;
            } else {
                write_report(&report, format, &out)?;
            }
            if matches!(scenario.payload, Payload::Logic(_)) && format == ReportFormat::Csv {
                eprintln!("note: logic scenarios have no per-step rows; the CSV holds only the header");
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
