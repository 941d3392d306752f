//! Subcommand implementations. Each returns the files it wrote.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use squid_core::ladder::{compare_effective_vs_full, CompareOptions};
use squid_core::scenarios::{
    run_custom, run_entanglement_transfer, run_pair_generation, ScenarioError, ScenarioReport, ScenarioRun,
};

use crate::config::{apply_override, resolve, Assignments, RunConfig, Scenario};
use crate::error::{from_core, from_scenario, CliError, EXIT_OK};
use crate::output::{timeseries_csv, to_json, write_all_or_nothing, ReportDocument, VERSION};

pub const CSV_NAME: &str = "timeseries.csv";
pub const REPORT_NAME: &str = "report.json";
pub const SUMMARY_NAME: &str = "summary.json";

fn write(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    write_all_or_nothing(dir, files).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

fn scenario_files(
    cfg: &RunConfig,
    run: &ScenarioRun,
    error: Option<String>,
) -> Result<Vec<(&'static str, String)>, CliError> {
    let mut files = Vec::new();
    if cfg.formats.csv {
        files.push((CSV_NAME, timeseries_csv(&run.rows).map_err(CliError::Numerical)?));
    }
    if cfg.formats.json {
        let doc = ReportDocument {
            version: VERSION,
            complete: run.report.complete,
            scenario: cfg.scenario.name(),
            error,
            report: &run.report,
            config: cfg,
        };
        files.push((REPORT_NAME, to_json(&doc)));
    }
    Ok(files)
}

/// Outcome of one scenario run: the report (when one was produced) and the
/// files on disk.
#[derive(Debug)]
pub struct Simulated {
    pub report: Option<ScenarioReport>,
    pub files: Vec<PathBuf>,
}

pub fn simulate(cfg: &RunConfig) -> Result<Simulated, CliError> {
    if cfg.scenario == Scenario::LadderCompare {
        let files = ladder_compare(cfg)?;
        return Ok(Simulated { report: None, files });
    }
    let (p, t_end, integ) = (&cfg.params, cfg.t_end, &cfg.integrator);
    let result = match cfg.scenario {
        Scenario::PairGeneration => run_pair_generation(p, t_end, integ),
        Scenario::Transfer => run_entanglement_transfer(p, t_end, integ),
        Scenario::Custom => run_custom(&cfg.initial_state, p, t_end, integ),
        Scenario::LadderCompare => unreachable!("handled above"),
    };
    match result {
        Ok(run) => {
            let files = write(&cfg.out_dir, &scenario_files(cfg, &run, None)?)?;
            Ok(Simulated { report: Some(run.report), files })
        }
        Err(ScenarioError::Incomplete { run }) => {
            let message = run.report.missing.join("; ");
            let files = write(&cfg.out_dir, &scenario_files(cfg, &run, Some(format!("missing: {message}")))?)?;
            Err(CliError::Incomplete { message, files, report: Some(Box::new(run.report)) })
        }
        Err(e) => Err(from_scenario(e)),
    }
}

/// Effective-vs-full ladder comparison; always writes `report.json`.
pub fn ladder_compare(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let lp = cfg.ladder.params().map_err(from_core)?;
    let opts = CompareOptions { samples: cfg.ladder.samples, solver: cfg.ladder.solver, integrator: cfg.integrator };
    let cmp = compare_effective_vs_full(&lp, cfg.t_end, &opts).map_err(from_core)?;
    let doc = ReportDocument {
        version: VERSION,
        complete: true,
        scenario: Scenario::LadderCompare.name(),
        error: None,
        report: &cmp,
        config: cfg,
    };
    write(&cfg.out_dir, &[(REPORT_NAME, to_json(&doc))])
}

#[derive(Debug, Serialize)]
pub struct JobSummary {
    pub key: String,
    pub dir: PathBuf,
    pub exit_code: i32,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ScenarioReport>,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub version: &'static str,
    pub jobs: Vec<JobSummary>,
}

/// Parse `key=v1,v2,...` into a key and its values.
pub fn parse_vary(spec: &str) -> Result<(String, Vec<String>), CliError> {
    let (k, vs) =
        spec.split_once('=').ok_or_else(|| CliError::Usage(format!("--vary `{spec}` is not key=v1,v2,...")))?;
    let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Usage(format!("--vary `{spec}` has no values")));
    }
    Ok((k.trim().to_string(), values))
}

/// Cartesian product of the varied keys, each job resolved against `base`.
/// Job keys are `k1=v1,k2=v2` in the order the keys were given.
pub fn sweep_jobs(
    base: &Assignments,
    vary: &[(String, Vec<String>)],
    out: &Path,
) -> Result<Vec<(String, RunConfig)>, CliError> {
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (k, values) in vary {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((k.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    let mut jobs = Vec::new();
    for combo in combos {
        let mut a = base.clone();
        for (k, v) in &combo {
            apply_override(&mut a, &format!("{k}={v}"))?;
        }
        let key = combo.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
        let dir_name = if key.is_empty() { "base".to_string() } else { key.replace(['/', '\\'], "_") };
        a.remove("out");
        let mut cfg = resolve(&a)?;
        cfg.out_dir = out.join(dir_name);
        jobs.push((key, cfg));
    }
    jobs.sort_by(|a, b| a.0.cmp(&b.0));
    if jobs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CliError::Usage("sweep has duplicate parameter points".into()));
    }
    Ok(jobs)
}

/// Run all jobs concurrently, then write `summary.json` sorted by job key.
/// Returns the summary and the largest job exit code.
pub fn sweep(
    jobs: &[(String, RunConfig)],
    out: &Path,
    threads: Option<usize>,
) -> Result<(SweepSummary, i32), CliError> {
    let run_all = || {
        jobs.par_iter()
            .map(|(key, cfg)| match simulate(cfg) {
                Ok(s) => JobSummary {
                    key: key.clone(),
                    dir: cfg.out_dir.clone(),
                    exit_code: EXIT_OK,
                    complete: true,
                    error: None,
                    report: s.report,
                },
                Err(e) => JobSummary {
                    key: key.clone(),
                    dir: cfg.out_dir.clone(),
                    exit_code: e.exit_code(),
                    complete: false,
                    error: Some(e.to_string()),
                    report: match e {
                        CliError::Incomplete { report, .. } => report.map(|r| *r),
                        _ => None,
                    },
                },
            })
            .collect::<Vec<_>>()
    };
    let mut results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    results.sort_by(|a, b| a.key.cmp(&b.key));
    let code = results.iter().map(|j| j.exit_code).max().unwrap_or(EXIT_OK);
    let summary = SweepSummary { version: VERSION, jobs: results };
    write(out, &[(SUMMARY_NAME, to_json(&summary))])?;
    Ok((summary, code))
}
