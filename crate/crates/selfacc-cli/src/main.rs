//! `selfacc`: runs self-accelerating wave scenarios from config files or
//! built-in presets, reconstructs gain profiles from envelope tables, and
//! referees the library's frozen constants.
//!
//! Exit codes: 0 success, 2 invalid input (bad flags, config, parameters),
//! 3 runtime failure (a run that started but could not finish). A run that
//! aborts mid-propagation still writes its partial outputs and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use selfacc_core::family::SolutionFamily;
use selfacc_core::propagator::Scheme;

use selfacc_cli::config::{parse_config, ScenarioSpec};
use selfacc_cli::output::{self, Timings};
use selfacc_cli::scenario::{apply_override, preset, preset_names, run_scenario};
use selfacc_cli::{referee, table};

#[derive(Parser)]
#[command(
    name = "selfacc",
    about = "Self-accelerating wave scenarios: propagate, synthesize, adjudicate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Output directory (defaults to the scenario name)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the time-stepping scheme (split-step | crank-nicolson)
    #[arg(long)]
    scheme: Option<String>,
    /// Refine space and time together: n and steps scale up by this factor,
    /// dt scales down, recording keeps the same physical times
    #[arg(long)]
    resolution_scale: Option<u32>,
    /// Fan out one run per value: `section.key=v1,v2,...`; each run gets
    /// its own subdirectory of the output directory
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file
    Run {
        config: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run a built-in scenario (see `selfacc preset --list`)
    Preset {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// List the available presets and exit
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Re-derive the frozen constants by residual ladders and write the
    /// decision records
    Adjudicate {
        /// Output directory for the decision records
        #[arg(long, default_value = "adjudication")]
        out: PathBuf,
    },
    /// Reconstruct the current and gain profile from an envelope table
    /// (CSV columns: q, psi, v_real)
    Synthesize {
        table: PathBuf,
        /// Frame acceleration
        #[arg(long)]
        a: f64,
        /// Phase rate
        #[arg(long)]
        mu: f64,
        /// Sign of the current on the rightmost valid segment
        #[arg(long, default_value_t = 1.0)]
        sign: f64,
        #[arg(long, default_value = "synthesis")]
        out: PathBuf,
    },
    /// Print a family's closed-form construction as JSON
    Describe {
        family: String,
        /// Parameters as key=value pairs, e.g. `a=1 omega=2`
        #[arg(value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
}

enum Failure {
    /// The input could not be accepted; nothing was computed.
    Invalid(String),
    /// The computation started and failed.
    Runtime(String),
}

impl Failure {
    fn code(&self) -> ExitCode {
        match self {
            Failure::Invalid(_) => ExitCode::from(2),
            Failure::Runtime(_) => ExitCode::from(3),
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Runtime(m) => m,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, args } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| invalid(format!("{}: {e}", config.display())))?;
            let spec = parse_config(&text).map_err(invalid)?;
            run_command(spec, args)
        }
        Command::Preset { name, list, args } => {
            if list {
                for n in preset_names() {
                    println!("{n}");
                }
                return Ok(());
            }
            let name = name.expect("clap requires a name unless --list");
            let spec = preset(&name).ok_or_else(|| {
                invalid(format!(
                    "unknown preset `{name}`; available: {}",
                    preset_names().join(", ")
                ))
            })?;
            run_command(spec, args)
        }
        Command::Adjudicate { out } => adjudicate_command(&out),
        Command::Synthesize { table, a, mu, sign, out } => {
            synthesize_command(&table, a, mu, sign, &out)
        }
        Command::Describe { family, params } => describe_command(&family, &params),
    }
}

fn run_command(mut spec: ScenarioSpec, args: RunArgs) -> Result<(), Failure> {
    if let Some(scheme) = &args.scheme {
        Scheme::parse(scheme).map_err(invalid)?;
        spec.propagation.scheme = scheme.clone();
    }
    if let Some(k) = args.resolution_scale {
        if k == 0 {
            return Err(Failure::Invalid("--resolution-scale must be >= 1".into()));
        }
        let k_us = k as usize;
        spec.grid.n *= k_us;
        spec.propagation.steps *= k_us;
        spec.propagation.record_stride *= k_us;
        spec.propagation.dt /= k as f64;
    }
    let out_root = args.out.unwrap_or_else(|| PathBuf::from(&spec.name));

    let Some(sweep) = args.sweep else {
        let line = execute_one(&spec, &out_root, None)?;
        println!("{line}");
        return Ok(());
    };

    let (key, values) = sweep
        .split_once('=')
        .ok_or_else(|| Failure::Invalid("--sweep expects section.key=v1,v2,...".into()))?;
    let values: Vec<&str> = values.split(',').filter(|v| !v.is_empty()).collect();
    if values.len() < 2 {
        return Err(Failure::Invalid(
            "--sweep needs at least two comma-separated values".into(),
        ));
    }

    // Validate every variant up front so a typo cannot waste the runs that
    // would have come before it.
    let mut variants: Vec<(String, ScenarioSpec)> = Vec::new();
    for v in &values {
        let mut s = spec.clone();
        apply_override(&mut s, key, v).map_err(invalid)?;
        variants.push((format!("{}-{v}", key.replace('.', "-")), s));
    }

    // Independent runs, one thread each, no shared mutable state; output
    // order is fixed by the variant list, not by completion order.
    let results: Vec<Result<String, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|(label, s)| {
                let dir = out_root.join(label);
                scope.spawn(move || execute_one(s, &dir, Some(label)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run threads do not panic"))
            .collect()
    });

    let mut first_failure = None;
    for r in results {
        match r {
            Ok(line) => println!("{line}"),
            Err(f) => {
                eprintln!("error: {}", f.message());
                if first_failure.is_none() {
                    first_failure = Some(f);
                }
            }
        }
    }
    match first_failure {
        None => Ok(()),
        Some(f) => Err(f),
    }
}

/// Runs one spec and writes its artifacts. Propagation aborts still produce
/// the partial record and manifest before surfacing as a runtime failure.
fn execute_one(
    spec: &ScenarioSpec,
    dir: &Path,
    variant: Option<&str>,
) -> Result<String, Failure> {
    let started = Instant::now();
    let outcome = run_scenario(spec).map_err(invalid)?;
    let timings = Timings {
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    output::write_outputs(dir, &outcome, timings, variant)
        .map_err(|e| runtime(format!("writing {}: {e}", dir.display())))?;
    match &outcome.abort {
        Some(msg) => Err(runtime(format!(
            "{}: propagation aborted ({msg}); partial outputs in {}",
            spec.name,
            dir.display()
        ))),
        None => Ok(format!(
            "{}: {} records, t = {} .. {}, outputs in {}",
            spec.name,
            outcome.record.times.len(),
            outcome.record.times.first().copied().unwrap_or(0.0),
            outcome.record.times.last().copied().unwrap_or(0.0),
            dir.display()
        )),
    }
}

fn adjudicate_command(out: &Path) -> Result<(), Failure> {
    let findings = referee::referee_all().map_err(runtime)?;
    fs::create_dir_all(out).map_err(runtime)?;
    let mut undecided = Vec::new();
    for finding in &findings {
        let path = out.join(format!("{}.json", finding.file_stem));
        let body = serde_json::to_string_pretty(&finding.record).map_err(runtime)?;
        fs::write(&path, body + "\n").map_err(runtime)?;
        let verdict = match finding.record.selected {
            Some(i) => format!(
                "selected `{}`{}",
                finding.record.ladders[i].label,
                if finding.agrees_with_shipped() {
                    " (matches the shipped constant)"
                } else {
                    " (DISAGREES with the shipped constant)"
                }
            ),
            None => {
                undecided.push(finding.record.what.clone());
                format!("no selection: {}", finding.record.rule)
            }
        };
        println!("{}: {verdict} -> {}", finding.record.what, path.display());
    }
    if undecided.is_empty() {
        Ok(())
    } else {
        Err(runtime(format!("undecided: {}", undecided.join("; "))))
    }
}

fn synthesize_command(
    table_path: &Path,
    a: f64,
    mu: f64,
    sign: f64,
    out: &Path,
) -> Result<(), Failure> {
    let text = fs::read_to_string(table_path)
        .map_err(|e| invalid(format!("{}: {e}", table_path.display())))?;
    let table = table::read_envelope_table(&text).map_err(invalid)?;
    let result = table::synthesize_from_table(&table, a, mu, sign).map_err(invalid)?;
    table::write_synthesis(out, &table, &result, a, mu).map_err(runtime)?;
    println!(
        "{} rows, {} valid, terminal sign {}, flips at {:?} -> {}",
        result.qs.len(),
        result.valid_count(),
        result.terminal_sign,
        result.flips,
        out.display()
    );
    Ok(())
}

fn describe_command(family: &str, params: &[String]) -> Result<(), Failure> {
    let mut map = std::collections::BTreeMap::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| invalid(format!("parameter `{p}` is not key=value")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| invalid(format!("parameter `{p}` is not numeric")))?;
        map.insert(k.trim().to_string(), v);
    }
    let fam = SolutionFamily::from_kv(family, &map).map_err(invalid)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&fam.describe()).expect("description serializes")
    );
    Ok(())
}
