use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use squid_cli::commands::{ladder_compare, parse_vary, simulate, sweep, sweep_jobs};
use squid_cli::config::{apply_override, parse_assignments, resolve, Assignments, Formats, RunConfig};
use squid_cli::error::{CliError, EXIT_OK};
use squid_cli::output::to_json;
use squid_cli::validate::run_suite;

#[derive(Parser)]
#[command(name = "squid-sim", version, about = "dc SQUID photon-pair generation and entanglement transfer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats: csv, json.
    #[arg(long)]
    format: Option<String>,
    /// Override a configuration key, `key=value` or `section.key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write timeseries.csv / report.json.
    Simulate(Common),
    /// Run a grid of scenario jobs concurrently, one directory per job.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Varied key and its values, `key=v1,v2,...` (repeatable).
        #[arg(long, value_name = "KEY=V1,V2,...", required = true)]
        vary: Vec<String>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare the full three-level ladder with its effective two-photon model.
    LadderCompare(Common),
    /// Run the seeded property suite.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Random draws per property.
        #[arg(long)]
        cases: Option<usize>,
    },
}

fn assignments(common: &Common, extra: &[String]) -> Result<Assignments, CliError> {
    let mut a = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            parse_assignments(&text)?
        }
        None => Assignments::new(),
    };
    for s in extra.iter().chain(&common.set) {
        apply_override(&mut a, s)?;
    }
    Ok(a)
}

fn finish(common: &Common, mut cfg: RunConfig) -> Result<RunConfig, CliError> {
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(f) = &common.format {
        cfg.formats = f.parse::<Formats>().map_err(CliError::Usage)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = finish(&common, resolve(&assignments(&common, &[])?)?)?;
            let s = simulate(&cfg)?;
            for f in &s.files {
                println!("{}", f.display());
            }
            Ok(EXIT_OK)
        }
        Command::LadderCompare(common) => {
            let cfg = finish(&common, resolve(&assignments(&common, &["scenario=ladder-compare".into()])?)?)?;
            for f in ladder_compare(&cfg)? {
                println!("{}", f.display());
            }
            Ok(EXIT_OK)
        }
        Command::Sweep { common, vary, jobs } => {
            if common.format.is_some() {
                return Err(CliError::Usage("--format is set per job through the config or --set formats=...".into()));
            }
            let base = assignments(&common, &[])?;
            let out = common
                .out
                .clone()
                .unwrap_or_else(|| resolve(&base).map(|c| c.out_dir).unwrap_or_else(|_| PathBuf::from("out")));
            let vary: Vec<_> = vary.iter().map(|v| parse_vary(v)).collect::<Result<_, _>>()?;
            let jobs_list = sweep_jobs(&base, &vary, &out)?;
            let (summary, code) = sweep(&jobs_list, &out, jobs)?;
            for j in &summary.jobs {
                println!("{} exit={} {}", j.key, j.exit_code, j.dir.display());
            }
            Ok(code)
        }
        Command::Validate { common, seed, cases } => {
            let mut extra = Vec::new();
            if let Some(s) = seed {
                extra.push(format!("seed={s}"));
            }
            if let Some(c) = cases {
                extra.push(format!("cases={c}"));
            }
            let cfg = resolve(&assignments(&common, &extra)?)?;
            let report = run_suite(cfg.seed, cfg.cases).map_err(|e| CliError::Numerical(e.to_string()))?;
            for p in &report.properties {
                eprintln!(
                    "{} {} (cases {}, worst {:e}, tolerance {:e})",
                    if p.passed { "PASS" } else { "FAIL" },
                    p.name,
                    p.cases,
                    p.worst,
                    p.tolerance
                );
            }
            print!("{}", to_json(&report));
            if report.passed {
                Ok(EXIT_OK)
            } else {
                let failed: Vec<_> = report.properties.iter().filter(|p| !p.passed).map(|p| p.name).collect();
                Err(CliError::Validation(failed.join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
