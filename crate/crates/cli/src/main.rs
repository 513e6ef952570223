//! `excitable`: run excitable-system scenarios, certify stored runs, and regenerate figure data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use excitable_core::report::{self, OutputFormat, WriteOptions};
use excitable_core::scenarios::{builtin_scenarios, find_builtin, run_scenario, FORMAT_VERSION};
use excitable_core::{Error, ScenarioResult, ScenarioSpec};

const DEFAULT_OUT: &str = "excitable-out";

#[derive(Parser)]
#[command(
    name = "excitable",
    version,
    about = "Reliability and contraction experiments on excitable neuron models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List builtin scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run a builtin scenario or a scenario spec file.
    Run {
        /// Builtin name or path to a spec JSON file.
        target: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Result directory (default: $EXCITABLE_OUT/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-path override, e.g. `input.signal.segments.*.variance=0`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write one trajectory file per trial.
        #[arg(long)]
        per_trial: bool,
    },
    /// Compute the alpha-contraction certificate of a stored FHN run.
    Certify {
        dir: PathBuf,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        t1: Option<f64>,
    },
    /// Run every scenario of a figure and write a combined report.
    Reproduce {
        #[arg(long)]
        figure: u8,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Svg => OutputFormat::Svg,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let diverged = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Diverged { .. })));
            ExitCode::from(if diverged { 2 } else { 1 })
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::List { json } => cmd_list(json),
        Command::Run {
            target,
            seed,
            out,
            overrides,
            format,
            per_trial,
        } => cmd_run(&target, seed, out, &overrides, format.into(), per_trial),
        Command::Certify { dir, mu, t0, t1 } => cmd_certify(&dir, mu, t0, t1),
        Command::Reproduce {
            figure,
            out,
            seed,
            format,
        } => cmd_reproduce(figure, out, seed, format.into()),
    }
}

fn out_root() -> PathBuf {
    std::env::var_os("EXCITABLE_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(value)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn cmd_list(as_json: bool) -> Result<()> {
    let specs = builtin_scenarios::<f64>();
    if as_json {
        let items: Vec<Value> = specs
            .iter()
            .map(|s| {
                json!({
                    "name": s.name,
                    "model": s.model.field().id(),
                    "description": s.description,
                })
            })
            .collect();
        return print_json(&Value::Array(items));
    }
    let width = specs.iter().map(|s| s.name.len()).max().unwrap_or(0);
    let mut out = std::io::stdout().lock();
    for s in &specs {
        if writeln!(out, "{:width$}  {}", s.name, s.description).is_err() {
            break;
        }
    }
    Ok(())
}

fn load_target(target: &str) -> Result<ScenarioSpec<f64>> {
    let path = Path::new(target);
    if path.is_file() || target.ends_with(".json") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {target}"))?;
        return ScenarioSpec::from_json(&text).with_context(|| format!("parsing {target}"));
    }
    Ok(find_builtin(target)?)
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter()
        .map(|o| {
            o.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| anyhow!("override '{o}' is not KEY=VALUE"))
        })
        .collect()
}

fn execute(spec: &ScenarioSpec<f64>, seed: Option<u64>, overrides: &[(String, String)]) -> Result<ScenarioResult<f64>> {
    let mut all = overrides.to_vec();
    if let Some(s) = seed {
        all.push(("seed".into(), s.to_string()));
    }
    eprintln!("running {} ...", spec.name);
    run_scenario(spec, &all).with_context(|| format!("scenario {}", spec.name))
}

fn cmd_run(
    target: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
    overrides: &[String],
    format: OutputFormat,
    per_trial: bool,
) -> Result<()> {
    let spec = load_target(target)?;
    let overrides = parse_overrides(overrides)?;
    let result = execute(&spec, seed, &overrides)?;
    let dir = out.unwrap_or_else(|| out_root().join(&result.spec.name));
    let manifest = report::write_result(&result, &dir, WriteOptions { format, per_trial })
        .with_context(|| format!("writing {}", dir.display()))?;
    print_json(&json!({
        "format_version": FORMAT_VERSION,
        "spec_hash": manifest.spec_hash,
        "scenario": manifest.scenario,
        "seed": manifest.seed,
        "out": dir,
        "files": manifest.files,
        "summary": manifest.summary,
    }))
}

fn cmd_certify(dir: &Path, mu: f64, t0: Option<f64>, t1: Option<f64>) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        bail!("--mu must be positive, got {mu}");
    }
    let run = report::load_run::<f64>(dir).with_context(|| format!("loading run from {}", dir.display()))?;
    let cert = report::certify_stored(&run, mu, t0, t1)?;
    let value = json!({
        "format_version": FORMAT_VERSION,
        "spec_hash": run.manifest.spec_hash,
        "scenario": run.manifest.scenario,
        "certificate": cert,
    });
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    report::write_atomic(&dir.join("certify.json"), &bytes)?;
    print_json(&value)
}

fn figure_scenarios(figure: u8) -> Result<&'static [&'static str]> {
    Ok(match figure {
        1 => &["fig1a", "fig1b", "fig1c", "fig1d"],
        3 => &["fig3a", "fig3b", "fig3c"],
        4 => &["fig4a", "fig4b"],
        other => bail!("unknown figure {other}; expected 1, 3 or 4"),
    })
}

fn cmd_reproduce(figure: u8, out: Option<PathBuf>, seed: Option<u64>, format: OutputFormat) -> Result<()> {
    let names = figure_scenarios(figure)?;
    let root = out.unwrap_or_else(|| out_root().join(format!("figure{figure}")));
    let mut entries = Vec::new();
    let mut results = Vec::new();
    for name in names {
        let spec = find_builtin::<f64>(name)?;
        let result = execute(&spec, seed, &[])?;
        let dir = root.join(name);
        let manifest = report::write_result(
            &result,
            &dir,
            WriteOptions {
                format,
                per_trial: false,
            },
        )?;
        entries.push(json!({
            "name": name,
            "dir": dir,
            "spec_hash": manifest.spec_hash,
            "seed": manifest.seed,
            "summary": manifest.summary,
            "certificate": result.certificate,
        }));
        results.push(result);
    }
    let report = json!({
        "format_version": FORMAT_VERSION,
        "figure": figure,
        "scenarios": entries,
        "comparison": comparison(figure, &results),
    });
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    std::fs::create_dir_all(&root)?;
    report::write_atomic(&root.join("report.json"), &bytes)?;
    print_json(&report)
}

/// Figure-level statistics compared across scenarios.
fn comparison(figure: u8, results: &[ScenarioResult<f64>]) -> Value {
    let by_name = |n: &str| results.iter().find(|r| r.spec.name == n);
    match figure {
        1 => {
            let ratios: serde_json::Map<String, Value> = results
                .iter()
                .filter_map(|r| {
                    r.summary
                        .distance
                        .as_ref()
                        .map(|d| (r.spec.name.clone(), json!(d.ratio)))
                })
                .collect();
            json!({ "distance_ratio": ratios })
        }
        3 => {
            let per: serde_json::Map<String, Value> = results
                .iter()
                .map(|r| {
                    let late_spikes: Vec<usize> = r
                        .events_for("v_e")
                        .map(|e| {
                            e.trials
                                .iter()
                                .map(|t| t.times.iter().filter(|&&x| x > 100.0).count())
                                .collect()
                        })
                        .unwrap_or_default();
                    (
                        r.spec.name.clone(),
                        json!({
                            "distance_ratio": r.summary.distance.as_ref().map(|d| d.ratio),
                            "max_regulation_error": r.summary.regulation.as_ref()
                                .map(|g| g.max_deviation.iter().copied().fold(0.0, f64::max)),
                            "eta_sync_min": r.summary.channel_sync.iter().find(|c| c.channel == "v_i1").map(|c| c.min),
                            "eta_u_sync_mean": r.summary.cross_sync.first().map(|c| c.mean),
                            "y_spikes_after_100": late_spikes,
                        }),
                    )
                })
                .collect();
            Value::Object(per)
        }
        4 => {
            let a = by_name("fig4a").and_then(|r| r.summary.phase_dispersion);
            let b = by_name("fig4b").and_then(|r| r.summary.phase_dispersion);
            json!({
                "dispersion_resonant": a,
                "dispersion_double_frequency": b,
                "ratio": a.zip(b).map(|(a, b)| b / a),
            })
        }
        _ => Value::Null,
    }
}
