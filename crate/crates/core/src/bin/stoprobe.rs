// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stoprobe::harness::{
    self, generate_instance, CheckStatus, ExperimentConfig, FamilyKind, GenParams, MarginalChoice,
    OrderSpec, VerifyReport,
};
use stoprobe::optimizer::{DEFAULT_MARGINAL_SAMPLES, DEFAULT_ROUNDS};
use stoprobe::Error;

#[derive(Parser)]
#[command(
    name = "stoprobe",
    version,
    about = "Stochastic probing with state-dependent costs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen {
        #[arg(long)]
        items: usize,
        #[arg(long)]
        states: usize,
        #[arg(long, default_value_t = 1.0)]
        cost_scale: f64,
        /// separable_concave, nested_coverage or concave_over_modular.
        #[arg(long, value_parser = |s: &str| FamilyKind::parse(s).map_err(|e| e.to_string()))]
        family: FamilyKind,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run continuous greedy and report y, its split and H values.
    Optimize(Common),
    /// Simulate the small, large and combined policies.
    Simulate(Common),
    /// Run the full check battery on an instance or a directory of instances.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    rounds: usize,
    #[arg(long, default_value = "exact", value_parser = parse_with::<MarginalChoice>)]
    marginals: MarginalChoice,
    #[arg(long, default_value_t = DEFAULT_MARGINAL_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = harness::DEFAULT_RUNS)]
    runs: usize,
    #[arg(long, default_value = "identity", value_parser = parse_with::<OrderSpec>)]
    order: OrderSpec,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            instance: self.instance.clone(),
            seed: self.seed,
            rounds: self.rounds,
            marginals: self.marginals,
            samples: self.samples,
            runs: self.runs,
            order: self.order.clone(),
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn print_table(report: &VerifyReport) {
    for r in &report.results {
        eprintln!("{} ({})", r.instance.path, r.instance.family);
        for c in &r.checks {
            let tag = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "skip",
            };
            match c.status {
                CheckStatus::Skipped => eprintln!("  {tag}  {}", c.name),
                _ => eprintln!(
                    "  {tag}  {:<32} {:.6} {} {:.6} (slack {:.2e})",
                    c.name,
                    c.lhs,
                    if matches!(c.relation, harness::Relation::Ge) {
                        ">="
                    } else {
                        "<="
                    },
                    c.rhs,
                    c.slack
                ),
            }
        }
    }
    let s = &report.summary;
    eprintln!(
        "{} instances: {} passed, {} failed, {} skipped; {} runs, {} budget violations",
        s.instances, s.passed, s.failed, s.skipped, s.total_runs, s.budget_violations
    );
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Gen {
            items,
            states,
            cost_scale,
            family,
            seed,
            out,
        } => {
            let file = generate_instance(&GenParams {
                items,
                states,
                cost_scale,
                family,
                seed,
            })?;
            emit(&file.to_json(), out.as_ref())?;
        }
        Command::Optimize(c) => {
            let report = harness::optimize(&c.config())?;
            emit(&to_json(&report), c.out.as_ref())?;
        }
        Command::Simulate(c) => {
            let report = harness::simulate(&c.config())?;
            emit(&to_json(&report), c.out.as_ref())?;
        }
        Command::Verify(c) => {
            let report = harness::verify(&c.config())?;
            emit(&to_json(&report), c.out.as_ref())?;
            print_table(&report);
            if !report.summary.all_passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::BudgetViolation { record, .. } = &e {
                eprintln!("{}", to_json(record.as_ref()));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
