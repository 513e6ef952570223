//! Result directories: manifest, trajectories, distance curve, events, certificates, and
//! optional SVG plots. Every file is written to a temporary name and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::contraction::{region_fhn, ContractionCertificate, RegionLabel};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrator::Trajectory;
use crate::models::{ModelSpec, NeuronState};
use crate::scalar::Real;
use crate::scenarios::{Provenance, ScenarioResult, ScenarioSpec, Summary, FORMAT_VERSION};

pub const MANIFEST_FILE: &str = "run.json";
pub const TRAJECTORIES_CSV: &str = "trajectories.csv";
pub const TRAJECTORIES_JSON: &str = "trajectories.json";
pub const DISTANCE_CSV: &str = "distance.csv";
pub const DISTANCE_JSON: &str = "distance.json";
pub const EVENTS_CSV: &str = "events.csv";
pub const EVENTS_JSON: &str = "events.json";
pub const CERTIFICATES_FILE: &str = "certificates.json";
pub const TRAJECTORY_PLOT: &str = "trajectories.svg";
pub const DISTANCE_PLOT: &str = "distance.svg";

/// Encoding of the bulk data files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    /// CSV data plus SVG plots.
    Svg,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::InvalidParameter(format!("unknown output format '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WriteOptions {
    pub format: OutputFormat,
    /// One trajectory file per trial instead of a single file with a `trial` column.
    pub per_trial: bool,
}

impl Default for WriteOptions {
    fn default() -> Self {
        WriteOptions {
            format: OutputFormat::Csv,
            per_trial: false,
        }
    }
}

/// Contents of `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
pub struct RunManifest<T> {
    pub format_version: u32,
    pub spec_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub format: OutputFormat,
    pub per_trial: bool,
    pub trials: usize,
    pub columns: Vec<String>,
    pub files: Vec<String>,
    pub provenance: Provenance,
    pub spec: ScenarioSpec<T>,
    pub summary: Summary<T>,
}

#[derive(Serialize)]
#[serde(bound = "T: Real + Serialize")]
struct CertificatesFile<'a, T> {
    format_version: u32,
    spec_hash: &'a str,
    certificates: Vec<&'a ContractionCertificate<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
struct TrajectoriesFile<T> {
    format_version: u32,
    spec_hash: String,
    columns: Vec<String>,
    t0: T,
    dt: T,
    /// `trials[i][k]` is the row (state then input) of trial `i` at grid point `k`.
    trials: Vec<Vec<Vec<T>>>,
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn json_bytes<S: Serialize>(value: &S) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn trajectory_columns(names: &[&str]) -> Vec<String> {
    std::iter::once("t")
        .chain(names.iter().copied())
        .chain(std::iter::once("u"))
        .map(String::from)
        .collect()
}

fn push_row<T: Real>(out: &mut String, trial: Option<usize>, tr: &Trajectory<T>, k: usize) {
    if let Some(i) = trial {
        let _ = write!(out, "{i},");
    }
    let _ = write!(out, "{:?}", tr.time(k));
    for x in tr.state(k) {
        let _ = write!(out, ",{x:?}");
    }
    let _ = writeln!(out, ",{:?}", tr.inputs[k]);
}

/// Trajectory CSV for all trials, with a leading `trial` column.
pub fn trajectories_csv<T: Real>(trajectories: &[Trajectory<T>], names: &[&str]) -> String {
    let mut out = String::new();
    out.push_str("trial,");
    out.push_str(&trajectory_columns(names).join(","));
    out.push('\n');
    for (i, tr) in trajectories.iter().enumerate() {
        for k in 0..tr.len() {
            push_row(&mut out, Some(i), tr, k);
        }
    }
    out
}

/// Trajectory CSV for one trial.
pub fn trajectory_csv<T: Real>(tr: &Trajectory<T>, names: &[&str]) -> String {
    let mut out = trajectory_columns(names).join(",");
    out.push('\n');
    for k in 0..tr.len() {
        push_row(&mut out, None, tr, k);
    }
    out
}

fn per_trial_name(i: usize, ext: &str) -> String {
    format!("trajectories_{i:03}.{ext}")
}

/// Writes the result directory for `result` and returns the manifest.
pub fn write_result<T>(result: &ScenarioResult<T>, dir: &Path, options: WriteOptions) -> Result<RunManifest<T>>
where
    T: Real + Serialize + DeserializeOwned,
{
    fs::create_dir_all(dir)?;
    let names = &result.component_names;
    let trajectories = &result.run.trajectories;
    let hash = &result.provenance.spec_hash;
    let mut files = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        write_atomic(&dir.join(&name), &bytes)?;
        files.push(name);
        Ok(())
    };

    match options.format {
        OutputFormat::Csv | OutputFormat::Svg => {
            if options.per_trial {
                for (i, tr) in trajectories.iter().enumerate() {
                    put(per_trial_name(i, "csv"), trajectory_csv(tr, names).into_bytes())?;
                }
            } else {
                put(
                    TRAJECTORIES_CSV.into(),
                    trajectories_csv(trajectories, names).into_bytes(),
                )?;
            }
            if let Some(curve) = &result.distance {
                let mut s = String::from("t,d_max\n");
                for (k, d) in curve.values.iter().enumerate() {
                    let _ = writeln!(s, "{:?},{d:?}", curve.grid.time(k));
                }
                put(DISTANCE_CSV.into(), s.into_bytes())?;
            }
            let mut s = String::from("trial,kind,time,channel\n");
            for ch in &result.events {
                for (i, train) in ch.trials.iter().enumerate() {
                    for t in &train.times {
                        let _ = writeln!(s, "{i},{},{t:?},{}", ch.kind.as_str(), ch.channel);
                    }
                }
            }
            put(EVENTS_CSV.into(), s.into_bytes())?;
        }
        OutputFormat::Json => {
            let columns = trajectory_columns(names);
            let rows = |tr: &Trajectory<T>| -> Vec<Vec<T>> {
                (0..tr.len())
                    .map(|k| {
                        let mut r = tr.state(k).to_vec();
                        r.push(tr.inputs[k]);
                        r
                    })
                    .collect()
            };
            let file = |trials: Vec<Vec<Vec<T>>>| TrajectoriesFile {
                format_version: FORMAT_VERSION,
                spec_hash: hash.clone(),
                columns: columns.clone(),
                t0: result.run.grid().t0,
                dt: result.run.grid().dt,
                trials,
            };
            if options.per_trial {
                for (i, tr) in trajectories.iter().enumerate() {
                    put(per_trial_name(i, "json"), json_bytes(&file(vec![rows(tr)]))?)?;
                }
            } else {
                put(
                    TRAJECTORIES_JSON.into(),
                    json_bytes(&file(trajectories.iter().map(rows).collect()))?,
                )?;
            }
            if let Some(curve) = &result.distance {
                put(
                    DISTANCE_JSON.into(),
                    json_bytes(&serde_json::json!({
                        "format_version": FORMAT_VERSION,
                        "spec_hash": hash,
                        "curve": curve,
                    }))?,
                )?;
            }
            put(
                EVENTS_JSON.into(),
                json_bytes(&serde_json::json!({
                    "format_version": FORMAT_VERSION,
                    "spec_hash": hash,
                    "events": result.events,
                }))?,
            )?;
        }
    }

    put(
        CERTIFICATES_FILE.into(),
        json_bytes(&CertificatesFile {
            format_version: FORMAT_VERSION,
            spec_hash: hash,
            certificates: result.certificate.iter().collect(),
        })?,
    )?;

    if options.format == OutputFormat::Svg {
        put(TRAJECTORY_PLOT.into(), trajectory_svg(result).into_bytes())?;
        if let Some(curve) = &result.distance {
            let g = curve.grid;
            let pts: Vec<(f64, f64)> = curve
                .values
                .iter()
                .enumerate()
                .map(|(k, d)| (g.time(k).to_f64_lossy(), d.to_f64_lossy()))
                .collect();
            put(
                DISTANCE_PLOT.into(),
                svg_plot(&format!("{}: max pairwise distance", result.spec.name), &[pts], &[]).into_bytes(),
            )?;
        }
    }

    files.push(MANIFEST_FILE.into());
    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        spec_hash: hash.clone(),
        seed: result.spec.seed,
        scenario: result.spec.name.clone(),
        format: options.format,
        per_trial: options.per_trial,
        trials: trajectories.len(),
        columns: trajectory_columns(names),
        files,
        provenance: result.provenance.clone(),
        spec: result.spec.clone(),
        summary: result.summary.clone(),
    };
    write_atomic(&dir.join(MANIFEST_FILE), &json_bytes(&manifest)?)?;
    Ok(manifest)
}

/// A result directory read back from disk.
#[derive(Clone, Debug)]
pub struct StoredRun<T> {
    pub manifest: RunManifest<T>,
    pub trajectories: Vec<Trajectory<T>>,
}

pub fn read_manifest<T>(dir: &Path) -> Result<RunManifest<T>>
where
    T: Real + Serialize + DeserializeOwned,
{
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let manifest: RunManifest<T> = serde_json::from_str(&text)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported format_version {} in {}",
            manifest.format_version,
            path.display()
        )));
    }
    Ok(manifest)
}

/// Reads the manifest and every stored trajectory of a result directory.
pub fn load_run<T>(dir: &Path) -> Result<StoredRun<T>>
where
    T: Real + Serialize + DeserializeOwned,
{
    let manifest = read_manifest::<T>(dir)?;
    let grid = manifest.spec.horizon.grid()?;
    let width = manifest.columns.len();
    let dim = width - 2;
    let read = |name: &str| -> Result<String> {
        let p: PathBuf = dir.join(name);
        fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
    };
    let mut trajectories = Vec::with_capacity(manifest.trials);
    match manifest.format {
        OutputFormat::Csv | OutputFormat::Svg => {
            if manifest.per_trial {
                for i in 0..manifest.trials {
                    let rows = parse_csv::<T>(&read(&per_trial_name(i, "csv"))?, width)?;
                    trajectories.push(rows_to_trajectory(&grid, dim, rows.into_iter())?);
                }
            } else {
                let rows = parse_csv::<T>(&read(TRAJECTORIES_CSV)?, width + 1)?;
                let mut by_trial: Vec<Vec<Vec<T>>> = vec![Vec::new(); manifest.trials];
                for mut r in rows {
                    let i = r[0]
                        .to_usize()
                        .filter(|&i| i < manifest.trials)
                        .ok_or_else(|| Error::Serialization("bad trial index in trajectories.csv".into()))?;
                    r.remove(0);
                    by_trial[i].push(r);
                }
                for rows in by_trial {
                    trajectories.push(rows_to_trajectory(&grid, dim, rows.into_iter())?);
                }
            }
        }
        OutputFormat::Json => {
            let names: Vec<String> = if manifest.per_trial {
                (0..manifest.trials).map(|i| per_trial_name(i, "json")).collect()
            } else {
                vec![TRAJECTORIES_JSON.to_string()]
            };
            for name in names {
                let file: TrajectoriesFile<T> = serde_json::from_str(&read(&name)?)?;
                for trial in file.trials {
                    let rows = trial.into_iter().enumerate().map(|(k, mut r)| {
                        r.insert(0, grid.time(k));
                        r
                    });
                    trajectories.push(rows_to_trajectory(&grid, dim, rows)?);
                }
            }
        }
    }
    if trajectories.len() != manifest.trials {
        return Err(Error::Serialization(format!(
            "manifest lists {} trials, found {}",
            manifest.trials,
            trajectories.len()
        )));
    }
    Ok(StoredRun { manifest, trajectories })
}

fn parse_csv<T: Real>(text: &str, width: usize) -> Result<Vec<Vec<T>>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let row: Vec<T> = line
            .split(',')
            .map(|f| {
                f.parse::<f64>()
                    .map(T::of)
                    .map_err(|e| Error::Serialization(format!("line {}: '{f}': {e}", n + 1)))
            })
            .collect::<Result<_>>()?;
        if row.len() != width {
            return Err(Error::Serialization(format!(
                "line {}: expected {width} fields, got {}",
                n + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Rows are `(t, state..., u)`.
fn rows_to_trajectory<T: Real>(
    grid: &Grid<T>,
    dim: usize,
    rows: impl Iterator<Item = Vec<T>>,
) -> Result<Trajectory<T>> {
    let mut states = Vec::with_capacity(grid.len() * dim);
    let mut inputs = Vec::with_capacity(grid.len());
    for r in rows {
        states.extend_from_slice(&r[1..=dim]);
        inputs.push(r[dim + 1]);
    }
    if inputs.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "stored trajectory has {} rows, horizon has {} grid points",
            inputs.len(),
            grid.len()
        )));
    }
    Ok(Trajectory {
        grid: *grid,
        dim,
        states,
        inputs,
    })
}

/// Certificate for a stored FHN run over `[t0, t1]` (defaults: the whole horizon).
pub fn certify_stored<T>(run: &StoredRun<T>, mu: T, t0: Option<T>, t1: Option<T>) -> Result<ContractionCertificate<T>>
where
    T: Real,
{
    let params = match &run.manifest.spec.model {
        ModelSpec::Fhn { params } => params,
        _ => {
            return Err(Error::InvalidParameter(
                "certificates apply to FHN ensembles only".into(),
            ))
        }
    };
    let grid = run.trajectories[0].grid;
    crate::contraction::alpha_certificate(
        &run.trajectories,
        mu,
        t0.unwrap_or(grid.t0),
        t1.unwrap_or(grid.t1()),
        params.b,
        params.epsilon,
    )
}

// ---------------------------------------------------------------------------------------------
// SVG

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const MAX_POINTS: usize = 2000;
const COLORS: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Line plot with optional shaded time bands.
pub fn svg_plot(title: &str, series: &[Vec<(f64, f64)>], bands: &[(f64, f64)]) -> String {
    let finite = series.iter().flatten().filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for &(a, b) in bands {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{MARGIN}" width="{:.2}" height="{}" fill="#add8e6" fill-opacity="0.5"/>"##,
            sx(a),
            (sx(b) - sx(a)).max(0.5),
            HEIGHT - 2.0 * MARGIN
        );
    }
    let _ = writeln!(
        s,
        r#"<path d="M{m} {top} V{bottom} H{right}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        top = MARGIN,
        bottom = HEIGHT - MARGIN,
        right = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-size="11" text-anchor="{anchor}">{}</text>"#,
            sx(v),
            HEIGHT - MARGIN + 16.0,
            tick(v)
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            sy(v) + 4.0,
            tick(v)
        );
    }
    for (i, pts) in series.iter().enumerate() {
        let stride = pts.len().div_ceil(MAX_POINTS).max(1);
        let mut d = String::new();
        for (_, &(x, y)) in pts
            .iter()
            .enumerate()
            .filter(|(j, _)| j % stride == 0 || *j + 1 == pts.len())
        {
            if x.is_finite() && y.is_finite() {
                let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(y));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
            d.trim_end(),
            COLORS[i % COLORS.len()]
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// First state component of every trial, with FHN co-contraction bands when available.
fn trajectory_svg<T: Real + Serialize + DeserializeOwned>(result: &ScenarioResult<T>) -> String {
    let series: Vec<Vec<(f64, f64)>> = result
        .run
        .trajectories
        .iter()
        .map(|tr| {
            (0..tr.len())
                .map(|k| (tr.time(k).to_f64_lossy(), tr.state(k)[0].to_f64_lossy()))
                .collect()
        })
        .collect();
    let mut bands = Vec::new();
    if let (ModelSpec::Fhn { .. }, Some(mu)) = (&result.spec.model, result.spec.analysis.region_mu) {
        let trs = &result.run.trajectories;
        let n = trs[0].len();
        let mut start: Option<usize> = None;
        for k in 0..=n {
            let shared = k < n && {
                let first = region_fhn(NeuronState::from_slice(trs[0].state(k)), mu);
                first != RegionLabel::Interior
                    && trs
                        .iter()
                        .all(|tr| region_fhn(NeuronState::from_slice(tr.state(k)), mu) == first)
            };
            match (shared, start) {
                (true, None) => start = Some(k),
                (false, Some(k0)) => {
                    bands.push((trs[0].time(k0).to_f64_lossy(), trs[0].time(k - 1).to_f64_lossy()));
                    start = None;
                }
                _ => {}
            }
        }
    }
    let title = format!("{}: {}", result.spec.name, result.component_names[0]);
    svg_plot(&title, &series, &bands)
}
