//! CSV input and output for envelope synthesis: read a `q,psi,v_real`
//! table, reconstruct the current and gain, and write the result next to a
//! JSON description of the branch structure.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::json;

use selfacc_core::frame::FrameParams;
use selfacc_core::synth::{synthesize_table, PointStatus, SynthesisResult};
use selfacc_core::CoreError;

use crate::config::ConfigError;

#[derive(Debug)]
pub struct EnvelopeTable {
    pub qs: Vec<f64>,
    pub psi: Vec<f64>,
    pub v_real: Vec<f64>,
}

/// Reads a three-column CSV. A first line that does not parse as numbers is
/// taken as a header; every other malformed line is an error with its
/// number.
pub fn read_envelope_table(text: &str) -> Result<EnvelopeTable, ConfigError> {
    let mut table = EnvelopeTable {
        qs: Vec::new(),
        psi: Vec::new(),
        v_real: Vec::new(),
    };
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(ConfigError::Parse {
                line: lineno,
                message: format!("expected 3 columns `q,psi,v_real`, got {}", cells.len()),
            });
        }
        let parsed: Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                table.qs.push(vals[0]);
                table.psi.push(vals[1]);
                table.v_real.push(vals[2]);
            }
            Err(_) if table.qs.is_empty() && lineno == 1 => continue,
            Err(_) => {
                return Err(ConfigError::Parse {
                    line: lineno,
                    message: format!("`{line}` is not three numbers"),
                })
            }
        }
    }
    if table.qs.is_empty() {
        return Err(ConfigError::Invalid("envelope table is empty".into()));
    }
    Ok(table)
}

pub fn synthesize_from_table(
    table: &EnvelopeTable,
    a: f64,
    mu: f64,
    sign: f64,
) -> Result<SynthesisResult, CoreError> {
    let frame = FrameParams::new(a, mu)?;
    synthesize_table(&table.qs, &table.psi, &table.v_real, frame, sign)
}

fn status_label(s: PointStatus) -> &'static str {
    match s {
        PointStatus::Valid => "valid",
        PointStatus::NegativeRadicand => "negative-radicand",
        PointStatus::PsiFloor => "psi-floor",
        PointStatus::Edge => "edge",
    }
}

/// Writes `synthesis.csv` and `synthesis.json` into `dir`.
pub fn write_synthesis(
    dir: &Path,
    table: &EnvelopeTable,
    result: &SynthesisResult,
    a: f64,
    mu: f64,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut csv = String::from("q,psi,v_real,radicand,g,v_imag,status\n");
    for i in 0..result.qs.len() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            result.qs[i],
            result.psi[i],
            table.v_real[i],
            result.radicand[i],
            result.g[i],
            result.v_imag[i],
            status_label(result.status[i]),
        ));
    }
    fs::write(dir.join("synthesis.csv"), csv)?;

    let summary = json!({
        "a": a,
        "mu": mu,
        "rows": result.qs.len(),
        "valid": result.valid_count(),
        "terminal_sign": result.terminal_sign,
        "flips": result.flips,
    });
    fs::write(
        dir.join("synthesis.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )
}
