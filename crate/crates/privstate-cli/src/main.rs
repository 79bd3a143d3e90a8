//! Deterministic command-line front end for the private-state workbench.
//!
//! Reports are emitted as line-delimited JSON records (header, one record
//! per trial, summary). Identical config and seed produce byte-identical
//! reports; `--timings` adds wall-clock fields and is therefore off by
//! default.

use clap::{Parser, Subcommand};
use privstate::bell::{ch_facet_max, PipelineOptions};
use privstate::numeric::rng::TRIAL_SEED_DERIVATION;
use privstate::par::{map_collect, Parallelism};
use privstate::polytope::check_membership_with;
use privstate::private::fixtures;
use privstate::report::{
    digest_hex, nonlocality_json, parse_spec_document, parse_table_document, verdict_json,
};
use privstate::{Error as CoreError, NonlocalityReport, Seed};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_OVERFLOW: u8 = 3;

#[derive(Parser)]
#[command(
    name = "privstate",
    version,
    about = "Construct private states, distill their key part, and certify nonlocality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base seed (overrides the config value).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count (overrides the config value).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Write the report stream to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print a human-readable summary table.
    #[arg(long, global = true)]
    summary: bool,
    /// Include wall-clock timings in records (makes reports non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the mode described by a JSON config document.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Certify the built-in fixtures (bell, ghz3, swap-shield).
    Fixtures,
    /// Check a correlation-table document against the local polytope.
    CheckTable { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Fixture,
    RandomEnsemble,
    SingleSpec,
    TableCheck,
}

fn default_seed() -> u64 {
    42
}

fn default_trials() -> u64 {
    1
}

fn default_d_values() -> Vec<usize> {
    vec![2, 3]
}

fn default_n_values() -> Vec<usize> {
    vec![2, 3]
}

fn default_shield_dim() -> usize {
    2
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ch_violation_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key_uniform_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lp_primal_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lp_separation_eps: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    mode: Mode,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_trials")]
    trials: u64,
    #[serde(default = "default_d_values")]
    d_values: Vec<usize>,
    #[serde(default = "default_n_values")]
    n_values: Vec<usize>,
    #[serde(default = "default_shield_dim")]
    shield_dim_per_party: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spec_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[serde(default)]
    tolerances: ToleranceOverrides,
}

impl RunConfig {
    fn validate(&self) -> Result<(), String> {
        if self.trials < 1 {
            return Err("trials must be at least 1".into());
        }
        if self.d_values.is_empty() || self.d_values.iter().any(|&d| d < 2) {
            return Err("d_values must be nonempty with every entry >= 2".into());
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err("n_values must be nonempty with every entry >= 2".into());
        }
        if self.shield_dim_per_party < 1 {
            return Err("shield_dim_per_party must be >= 1".into());
        }
        match self.mode {
            Mode::SingleSpec if self.spec_path.is_none() => {
                Err("single-spec mode needs spec_path".into())
            }
            Mode::TableCheck if self.table_path.is_none() => {
                Err("table-check mode needs table_path".into())
            }
            _ => Ok(()),
        }
    }

    fn pipeline_options(&self) -> PipelineOptions {
        let mut options = PipelineOptions::default();
        if let Some(eps) = self.tolerances.ch_violation_eps {
            options.ch_violation_eps = eps;
        }
        if let Some(tol) = self.tolerances.key_uniform_tol {
            options.key_uniform_tol = tol;
        }
        if let Some(res) = self.tolerances.lp_primal_residual {
            options.membership.primal_residual = res;
        }
        if let Some(eps) = self.tolerances.lp_separation_eps {
            options.membership.separation_eps = eps;
        }
        options
    }
}

struct Failure {
    exit: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            exit: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

fn classify_core_error(err: &CoreError) -> u8 {
    match err {
        CoreError::DimensionOverflow { .. } => EXIT_OVERFLOW,
        CoreError::Parse(_) => EXIT_CONFIG,
        _ => EXIT_ASSERTION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("privstate: {}", failure.message);
            ExitCode::from(failure.exit)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut config = match &cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", config.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| Failure::config(format!("config parse: {e}")))?
        }
        Command::Fixtures => RunConfig {
            mode: Mode::Fixture,
            seed: default_seed(),
            trials: default_trials(),
            d_values: default_d_values(),
            n_values: default_n_values(),
            shield_dim_per_party: default_shield_dim(),
            spec_path: None,
            table_path: None,
            out: None,
            tolerances: ToleranceOverrides::default(),
        },
        Command::CheckTable { path } => RunConfig {
            mode: Mode::TableCheck,
            seed: default_seed(),
            trials: default_trials(),
            d_values: default_d_values(),
            n_values: default_n_values(),
            shield_dim_per_party: default_shield_dim(),
            spec_path: None,
            table_path: Some(path.clone()),
            out: None,
            tolerances: ToleranceOverrides::default(),
        },
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    config.validate().map_err(Failure::config)?;

    let report = execute(&config, cli.timings)?;

    let out_path = config.out.clone();
    write_report(&report.lines, out_path.as_deref())?;
    if cli.summary {
        // When records go to a file the table may use stdout; otherwise keep
        // stdout machine-clean and print the table to stderr.
        if out_path.is_some() {
            print!("{}", report.summary_table);
        } else {
            eprint!("{}", report.summary_table);
        }
    }
    Ok(if report.all_passed {
        EXIT_OK
    } else {
        EXIT_ASSERTION
    })
}

struct RunOutput {
    lines: Vec<String>,
    summary_table: String,
    all_passed: bool,
}

fn header_record(config: &RunConfig) -> Value {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let options = config.pipeline_options();
    json!({
        "record": "header",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": config.mode,
        "seed": config.seed,
        "trials": config.trials,
        "config_digest": digest_hex(canonical.as_bytes()),
        "seed_derivation": TRIAL_SEED_DERIVATION,
        "tolerances": {
            "ch_violation_eps": options.ch_violation_eps,
            "key_uniform_tol": options.key_uniform_tol,
            "lp_primal_residual": options.membership.primal_residual,
            "lp_separation_eps": options.membership.separation_eps,
        },
    })
}

fn execute(config: &RunConfig, timings: bool) -> Result<RunOutput, Failure> {
    match config.mode {
        Mode::Fixture => run_pipeline_trials(config, timings, fixture_trials()),
        Mode::RandomEnsemble => {
            let trials = ensemble_trials(config)?;
            run_pipeline_trials(config, timings, trials)
        }
        Mode::SingleSpec => {
            let path = config.spec_path.as_ref().expect("validated");
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
            let spec = parse_spec_document(&text).map_err(|e| Failure {
                exit: classify_core_error(&e),
                message: e.to_string(),
            })?;
            let label = path.display().to_string();
            run_pipeline_trials(config, timings, vec![(Some(label), None, spec)])
        }
        Mode::TableCheck => run_table_check(config),
    }
}

type Trial = (Option<String>, Option<u64>, privstate::PrivateStateSpec);

fn fixture_trials() -> Vec<Trial> {
    fixtures::NAMED
        .iter()
        .map(|name| {
            let spec = fixtures::by_name(name).expect("named fixture exists");
            (Some((*name).to_string()), None, spec)
        })
        .collect()
}

fn ensemble_trials(config: &RunConfig) -> Result<Vec<Trial>, Failure> {
    let combos: Vec<(usize, usize)> = config
        .d_values
        .iter()
        .flat_map(|&d| config.n_values.iter().map(move |&n| (d, n)))
        .collect();
    let base = Seed(config.seed);
    let mut trials = Vec::with_capacity(config.trials as usize);
    for t in 0..config.trials {
        let (d, n) = combos[t as usize % combos.len()];
        let spec = fixtures::random(d, n, config.shield_dim_per_party, base.for_trial(t))
            .map_err(|e| Failure {
                exit: classify_core_error(&e),
                message: format!("trial {t} (d={d}, N={n}): {e}"),
            })?;
        trials.push((None, Some(t), spec));
    }
    Ok(trials)
}

fn run_pipeline_trials(
    config: &RunConfig,
    timings: bool,
    trials: Vec<Trial>,
) -> Result<RunOutput, Failure> {
    let options = config.pipeline_options();
    let base = Seed(config.seed);
    let results: Vec<(Option<String>, Option<u64>, Result<NonlocalityReport, CoreError>)> =
        map_collect(trials, Parallelism::Rayon, |(label, trial, spec)| {
            let seed = match trial {
                Some(t) => base.for_trial(t).derive(1),
                None => base,
            };
            let result = privstate::bell::verify_nonlocality_pipeline_with(&spec, seed, &options);
            (label, trial, result)
        });

    let mut lines = vec![serde_json::to_string(&header_record(config)).expect("header")];
    let mut table = String::from(
        "label/trial      d  N  pair    |alpha|      CH            CHSH          verdict    status\n",
    );
    let mut passed = 0usize;
    let mut failed = 0usize;
    for (label, trial, result) in &results {
        let name = label
            .clone()
            .unwrap_or_else(|| trial.map(|t| format!("trial {t}")).unwrap_or_default());
        match result {
            Ok(report) => {
                passed += 1;
                lines.push(
                    serde_json::to_string(&nonlocality_json(
                        report,
                        label.as_deref(),
                        *trial,
                        timings,
                    ))
                    .expect("record"),
                );
                table.push_str(&format!(
                    "{name:<16} {d:<2} {n:<2} ({k},{l})   {alpha:<12.6} {ch:<13.9} {chsh:<13.9} {verdict:<10} ok\n",
                    d = report.key_dim,
                    n = report.n_parties,
                    k = report.pair.0,
                    l = report.pair.1,
                    alpha = report.alpha.norm(),
                    ch = report.ch_value,
                    chsh = report.chsh_value,
                    verdict = if report.lp_verdict.is_member() { "member" } else { "nonmember" },
                ));
            }
            Err(err) => {
                failed += 1;
                let mut record = json!({
                    "record": "failure",
                    "error": err.to_string(),
                });
                let obj = record.as_object_mut().expect("object");
                if let Some(label) = label {
                    obj.insert("label".into(), json!(label));
                }
                if let Some(trial) = trial {
                    obj.insert("trial".into(), json!(trial));
                }
                lines.push(serde_json::to_string(&record).expect("failure record"));
                table.push_str(&format!("{name:<16} FAILED: {err}\n"));
            }
        }
    }
    let all_passed = failed == 0;
    lines.push(
        serde_json::to_string(&json!({
            "record": "summary",
            "trials": results.len(),
            "passed": passed,
            "failed": failed,
            "all_passed": all_passed,
        }))
        .expect("summary"),
    );
    Ok(RunOutput {
        lines,
        summary_table: table,
        all_passed,
    })
}

fn run_table_check(config: &RunConfig) -> Result<RunOutput, Failure> {
    let path = config.table_path.as_ref().expect("validated");
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let table = parse_table_document(&text).map_err(|e| Failure {
        exit: classify_core_error(&e),
        message: e.to_string(),
    })?;
    let options = config.pipeline_options();
    let verdict = check_membership_with(&table, &options.membership).map_err(|e| Failure {
        exit: classify_core_error(&e),
        message: e.to_string(),
    })?;

    let mut record = json!({
        "record": "locality",
        "source": path.display().to_string(),
        "lp": verdict_json(&verdict),
    });
    let shape = table.shape();
    if shape.parties == 2 && shape.settings == 2 && shape.outcomes == 2 {
        let facet = ch_facet_max(&table).map_err(|e| Failure {
            exit: classify_core_error(&e),
            message: e.to_string(),
        })?;
        record.as_object_mut().expect("object").insert(
            "ch_facet_max".into(),
            json!(privstate::report::round_sig12(facet.value)),
        );
    }

    let lines = vec![
        serde_json::to_string(&header_record(config)).expect("header"),
        serde_json::to_string(&record).expect("record"),
        serde_json::to_string(&json!({
            "record": "summary",
            "trials": 1,
            "passed": 1,
            "failed": 0,
            "all_passed": true,
        }))
        .expect("summary"),
    ];
    let verdict_name = if verdict.is_member() {
        "member"
    } else {
        "nonmember"
    };
    Ok(RunOutput {
        lines,
        summary_table: format!("{}: {verdict_name}\n", path.display()),
        all_passed: true,
    })
}

fn write_report(lines: &[String], out: Option<&Path>) -> Result<(), Failure> {
    let mut body = lines.join("\n");
    body.push('\n');
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
