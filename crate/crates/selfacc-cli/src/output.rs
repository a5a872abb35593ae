//! Run artifacts: per-time field tables, a scalar time series, a 16-bit
//! density map with its JSON sidecar, and the manifest tying them together.
//!
//! Numbers are written with Rust's shortest-round-trip float formatting and
//! every collection is emitted in a fixed order, so re-running a scenario
//! reproduces each file byte for byte. Wall-clock timings are the one
//! intentionally non-reproducible entry and live under their own manifest
//! key, where comparison tooling can drop them.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::json;

use selfacc_core::field::ComplexWaveField;

use crate::scenario::ScenarioOutcome;

#[derive(Debug, Clone, Copy)]
pub struct Timings {
    pub wall_ms: f64,
}

/// Names of the files a run produces, for the manifest's outputs block.
const TIMESERIES: &str = "timeseries.csv";
const DENSITY_PGM: &str = "density.pgm";
const DENSITY_SIDECAR: &str = "density.pgm.json";
const MANIFEST: &str = "manifest.json";

pub fn write_outputs(
    dir: &Path,
    outcome: &ScenarioOutcome,
    timings: Timings,
    variant: Option<&str>,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_timeseries(&dir.join(TIMESERIES), outcome)?;
    let mut field_files = Vec::new();
    for (i, field) in outcome.record.fields.iter().enumerate() {
        let name = format!("fields_t{i:04}.csv");
        write_field(&dir.join(&name), field)?;
        field_files.push(name);
    }
    let wrote_pgm = write_density_map(dir, outcome)?;
    write_manifest(&dir.join(MANIFEST), outcome, timings, variant, &field_files, wrote_pgm)
}

fn write_timeseries(path: &Path, outcome: &ScenarioOutcome) -> io::Result<()> {
    let r = &outcome.record;
    let mut out = String::from("t,norm,centroid,peak_x,max_abs\n");
    for i in 0..r.times.len() {
        let centroid = r.centroids[i].map_or(String::new(), |c| c.to_string());
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.times[i], r.norms[i], centroid, r.peaks[i], r.max_abs[i]
        ));
    }
    fs::write(path, out)
}

fn write_field(path: &Path, field: &ComplexWaveField) -> io::Result<()> {
    let grid = field.grid();
    let mut out = String::from("x,re,im,density\n");
    for (j, a) in field.amps().iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", grid.x(j), a.re, a.im, a.norm_sqr()));
    }
    fs::write(path, out)
}

/// Greyscale density history: one row per stored field, earliest at the
/// top, columns spanning the grid, globally normalized to the full 16-bit
/// range. Returns whether a map was written (it needs stored fields).
fn write_density_map(dir: &Path, outcome: &ScenarioOutcome) -> io::Result<bool> {
    let fields = &outcome.record.fields;
    if fields.is_empty() {
        return Ok(false);
    }
    let grid = fields[0].grid();
    let cols = grid.n();
    let rows = fields.len();

    let mut max_density = 0.0f64;
    for f in fields {
        for a in f.amps() {
            max_density = max_density.max(a.norm_sqr());
        }
    }
    let scale = if max_density > 0.0 { 65535.0 / max_density } else { 0.0 };

    let mut file = io::BufWriter::new(fs::File::create(dir.join(DENSITY_PGM))?);
    write!(file, "P5\n{cols} {rows}\n65535\n")?;
    for f in fields {
        for a in f.amps() {
            let v = (a.norm_sqr() * scale).round() as u16;
            file.write_all(&v.to_be_bytes())?;
        }
    }
    file.flush()?;

    let times = &outcome.record.times;
    let sidecar = json!({
        "rows": rows,
        "cols": cols,
        "x_min": grid.x_min(),
        "x_max": grid.x_max(),
        "t_first": times.first(),
        "t_last": times.last(),
        "max_density": max_density,
        "value": "round(65535 * density / max_density)",
    });
    fs::write(
        dir.join(DENSITY_SIDECAR),
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    Ok(true)
}

fn write_manifest(
    path: &Path,
    outcome: &ScenarioOutcome,
    timings: Timings,
    variant: Option<&str>,
    field_files: &[String],
    wrote_pgm: bool,
) -> io::Result<()> {
    let r = &outcome.record;
    let grid = r.grid;
    let manifest = json!({
        "scenario": outcome.spec,
        "variant": variant,
        "family": outcome.family.describe(),
        "scheme": r.scheme.name(),
        "grid": {
            "x_min": grid.x_min(),
            "x_max": grid.x_max(),
            "n": grid.n(),
            "dx": grid.dx(),
        },
        "records": {
            "count": r.times.len(),
            "t_first": r.times.first(),
            "t_last": r.times.last(),
            "stored_fields": r.fields.len(),
        },
        "report": outcome.report,
        "warnings": r.warnings,
        "error": outcome.abort,
        "outputs": {
            "timeseries": TIMESERIES,
            "fields": field_files,
            "density_map": if wrote_pgm { Some(DENSITY_PGM) } else { None },
        },
        "determinism": {
            "threads": 1,
            "note": "all outputs except `timings` are byte-reproducible",
        },
        "timings": {
            "wall_ms": timings.wall_ms,
        },
    });
    fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")
}
