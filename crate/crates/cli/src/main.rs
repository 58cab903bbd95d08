use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uvlag::suite::{self, RunConfig, CHECK_IDS};

#[derive(Parser)]
#[command(name = "uvlag", version, about = "Certify U-Lagrangian identities on the problem catalog")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run checks and write a JSON report.
    Run(RunArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "verbatim")]
enum ProblemName {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

fn parse_check(s: &str) -> Result<String, String> {
    if s == "all" || CHECK_IDS.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("unknown check `{s}`; expected `all` or one of: {}", CHECK_IDS.join(", ")))
    }
}

#[derive(Args)]
struct RunArgs {
    /// Catalog problem to run (repeatable).
    #[arg(long = "problem", value_enum, required_unless_present = "all", conflicts_with = "all")]
    problems: Vec<ProblemName>,
    /// Run every catalog problem.
    #[arg(long)]
    all: bool,
    /// Check group to run (repeatable), or `all`.
    #[arg(long = "check", value_parser = parse_check, default_value = "all")]
    checks: Vec<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long = "eps-bar")]
    eps_bar: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Seed grid size per V-coordinate for the inner solver.
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Sample count per certificate.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; standard output when omitted.
    #[arg(short, long)]
    out: Option<String>,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        let problems = if self.all {
            uvlag::catalog::NAMES.iter().map(|s| s.to_string()).collect()
        } else {
            self.problems.iter().map(|p| format!("{p:?}")).collect()
        };
        RunConfig {
            problems,
            checks: self.checks.clone(),
            eps: self.eps,
            eps_bar: self.eps_bar,
            rho: self.rho,
            grid_n: self.grid_n,
            samples: self.samples,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run(args) => run(&args.config()),
    }
}

fn run(cfg: &RunConfig) -> ExitCode {
    if let Err(e) = cfg.validate() {
        eprintln!("uvlag: invalid configuration: {e}");
        return ExitCode::from(2);
    }
    let report = match suite::run(cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("uvlag: {e}");
            return ExitCode::from(2);
        }
    };
    let mut json = report.to_json();
    json.push('\n');
    let written = match &cfg.out {
        Some(path) => fs::write(path, &json),
        None => std::io::stdout().write_all(json.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("uvlag: cannot write report: {e}");
        return ExitCode::from(2);
    }
    let s = report.summary;
    eprintln!("uvlag: {} as expected, {} expected failures, {} unexpected", s.pass, s.expected_fail, s.fail);
    for r in report.records.iter().filter(|r| !r.as_expected()) {
        eprintln!("  unexpected: {} [{}] {}", r.id, r.problem.as_deref().unwrap_or("-"), r.note);
    }
    if report.as_expected() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
