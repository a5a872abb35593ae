//! Line-oriented scenario configuration.
//!
//! The format is deliberately small: `[section]` headers group `key = value`
//! lines, `#` starts a full-line comment, blank lines are ignored.  Every
//! recognized section and key is listed here; anything else is an error that
//! names the offending line, so a typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

/// Configuration failure, either a malformed line or a semantic problem
/// that only shows up once the whole file has been read.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Invalid(message) => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Everything a single run needs, fully resolved.  Two specs comparing equal
/// means the runs they describe are identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub family: FamilySpec,
    pub grid: GridSpec,
    pub propagation: PropagationSpec,
    pub nonlinear: Option<NonlinearSpec>,
    pub truncation: Option<TruncationSpec>,
    pub absorber: Option<AbsorberSpec>,
    pub diagnostics: DiagnosticsSpec,
}

/// Family tag plus its numeric parameters, passed through to the library
/// constructor which owns validation of the combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySpec {
    pub tag: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationSpec {
    pub scheme: String,
    pub dt: f64,
    pub steps: usize,
    pub record_stride: usize,
    pub store_fields: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearSpec {
    pub sigma: f64,
    pub p: f64,
}

/// Initial-state window.  `hard` zeroes everything outside
/// `center ± half_width`; `gaussian` keeps that interior intact and rolls
/// off beyond it with scale `roll`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationSpec {
    pub kind: String,
    pub center: f64,
    pub half_width: f64,
    pub roll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorberSpec {
    pub width: f64,
    pub strength: f64,
}

/// Which post-run measurements to compute and report in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct DiagnosticsSpec {
    pub interior_half_width: Option<f64>,
    pub compare_analytic: bool,
    pub pattern_shift: bool,
    pub track_minimum: bool,
    pub fit_peak_acceleration: bool,
    pub fit_centroid: bool,
    pub ehrenfest: bool,
}

const SECTIONS: &[&str] = &[
    "scenario",
    "family",
    "grid",
    "propagation",
    "nonlinear",
    "truncation",
    "absorber",
    "diagnostics",
];

#[derive(Default)]
struct Builder {
    name: Option<String>,
    family_tag: Option<String>,
    family_params: BTreeMap<String, f64>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    n: Option<usize>,
    scheme: Option<String>,
    dt: Option<f64>,
    steps: Option<usize>,
    record_stride: Option<usize>,
    store_fields: Option<bool>,
    nl_sigma: Option<f64>,
    nl_p: Option<f64>,
    saw_nonlinear: bool,
    trunc_kind: Option<String>,
    trunc_center: Option<f64>,
    trunc_half_width: Option<f64>,
    trunc_roll: Option<f64>,
    saw_truncation: bool,
    abs_width: Option<f64>,
    abs_strength: Option<f64>,
    saw_absorber: bool,
    diagnostics: DiagnosticsSpec,
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("`{key}` expects a number, got `{value}`")))
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse::<usize>()
        .map_err(|_| parse_err(line, format!("`{key}` expects a non-negative integer, got `{value}`")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(parse_err(
            line,
            format!("`{key}` expects `true` or `false`, got `{value}`"),
        )),
    }
}

/// Stores `val` into `slot`, rejecting a second assignment of the same key.
fn put<T>(slot: &mut Option<T>, val: T, line: usize, key: &str) -> Result<(), ConfigError> {
    if slot.is_some() {
        return Err(parse_err(line, format!("duplicate key `{key}`")));
    }
    *slot = Some(val);
    Ok(())
}

/// Parses the full text of a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioSpec, ConfigError> {
    let mut b = Builder::default();
    let mut section: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(stripped) = line.strip_prefix('[') {
            let name = stripped
                .strip_suffix(']')
                .ok_or_else(|| parse_err(lineno, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(parse_err(lineno, format!("unknown section `[{name}]`")));
            }
            match name {
                "nonlinear" => b.saw_nonlinear = true,
                "truncation" => b.saw_truncation = true,
                "absorber" => b.saw_absorber = true,
                _ => {}
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(parse_err(lineno, "empty key"));
        }
        if value.is_empty() {
            return Err(parse_err(lineno, format!("`{key}` has no value")));
        }
        let section = section
            .as_deref()
            .ok_or_else(|| parse_err(lineno, "key before any [section] header"))?;
        apply_key(&mut b, section, key, value, lineno)?;
    }

    finish(b)
}

fn apply_key(
    b: &mut Builder,
    section: &str,
    key: &str,
    value: &str,
    line: usize,
) -> Result<(), ConfigError> {
    let unknown = || parse_err(line, format!("unknown key `{key}` in [{section}]"));
    match section {
        "scenario" => match key {
            "name" => put(&mut b.name, value.to_string(), line, key),
            _ => Err(unknown()),
        },
        "family" => match key {
            "tag" => put(&mut b.family_tag, value.to_string(), line, key),
            _ => {
                let v = parse_f64(line, key, value)?;
                if b.family_params.insert(key.to_string(), v).is_some() {
                    return Err(parse_err(line, format!("duplicate key `{key}`")));
                }
                Ok(())
            }
        },
        "grid" => match key {
            "x_min" => put(&mut b.x_min, parse_f64(line, key, value)?, line, key),
            "x_max" => put(&mut b.x_max, parse_f64(line, key, value)?, line, key),
            "n" => put(&mut b.n, parse_usize(line, key, value)?, line, key),
            _ => Err(unknown()),
        },
        "propagation" => match key {
            "scheme" => put(&mut b.scheme, value.to_string(), line, key),
            "dt" => put(&mut b.dt, parse_f64(line, key, value)?, line, key),
            "steps" => put(&mut b.steps, parse_usize(line, key, value)?, line, key),
            "record_stride" => put(&mut b.record_stride, parse_usize(line, key, value)?, line, key),
            "store_fields" => put(&mut b.store_fields, parse_bool(line, key, value)?, line, key),
            _ => Err(unknown()),
        },
        "nonlinear" => match key {
            "sigma" => put(&mut b.nl_sigma, parse_f64(line, key, value)?, line, key),
            "p" => put(&mut b.nl_p, parse_f64(line, key, value)?, line, key),
            _ => Err(unknown()),
        },
        "truncation" => match key {
            "kind" => match value {
                "hard" | "gaussian" => put(&mut b.trunc_kind, value.to_string(), line, key),
                _ => Err(parse_err(
                    line,
                    format!("`kind` expects `hard` or `gaussian`, got `{value}`"),
                )),
            },
            "center" => put(&mut b.trunc_center, parse_f64(line, key, value)?, line, key),
            "half_width" => put(&mut b.trunc_half_width, parse_f64(line, key, value)?, line, key),
            "roll" => put(&mut b.trunc_roll, parse_f64(line, key, value)?, line, key),
            _ => Err(unknown()),
        },
        "absorber" => match key {
            "width" => put(&mut b.abs_width, parse_f64(line, key, value)?, line, key),
            "strength" => put(&mut b.abs_strength, parse_f64(line, key, value)?, line, key),
            _ => Err(unknown()),
        },
        "diagnostics" => {
            let d = &mut b.diagnostics;
            match key {
                "interior_half_width" => {
                    put(&mut d.interior_half_width, parse_f64(line, key, value)?, line, key)
                }
                "compare_analytic" => set_flag(&mut d.compare_analytic, value, line, key),
                "pattern_shift" => set_flag(&mut d.pattern_shift, value, line, key),
                "track_minimum" => set_flag(&mut d.track_minimum, value, line, key),
                "fit_peak_acceleration" => set_flag(&mut d.fit_peak_acceleration, value, line, key),
                "fit_centroid" => set_flag(&mut d.fit_centroid, value, line, key),
                "ehrenfest" => set_flag(&mut d.ehrenfest, value, line, key),
                _ => Err(unknown()),
            }
        }
        _ => unreachable!("section names are validated at the header"),
    }
}

/// Diagnostics flags default to false, so a repeated `= true` is harmless;
/// still reject repeats to keep the duplicate rule uniform.
fn set_flag(slot: &mut bool, value: &str, line: usize, key: &str) -> Result<(), ConfigError> {
    if *slot {
        return Err(parse_err(line, format!("duplicate key `{key}`")));
    }
    *slot = parse_bool(line, key, value)?;
    Ok(())
}

fn finish(b: Builder) -> Result<ScenarioSpec, ConfigError> {
    let missing = |what: &str| ConfigError::Invalid(format!("missing required {what}"));

    let name = b.name.ok_or_else(|| missing("[scenario] name"))?;
    let tag = b.family_tag.ok_or_else(|| missing("[family] tag"))?;
    let grid = GridSpec {
        x_min: b.x_min.ok_or_else(|| missing("[grid] x_min"))?,
        x_max: b.x_max.ok_or_else(|| missing("[grid] x_max"))?,
        n: b.n.ok_or_else(|| missing("[grid] n"))?,
    };
    let propagation = PropagationSpec {
        scheme: b.scheme.ok_or_else(|| missing("[propagation] scheme"))?,
        dt: b.dt.ok_or_else(|| missing("[propagation] dt"))?,
        steps: b.steps.ok_or_else(|| missing("[propagation] steps"))?,
        record_stride: b.record_stride.unwrap_or(1),
        store_fields: b.store_fields.unwrap_or(false),
    };

    let nonlinear = if b.saw_nonlinear {
        Some(NonlinearSpec {
            sigma: b.nl_sigma.ok_or_else(|| missing("[nonlinear] sigma"))?,
            p: b.nl_p.ok_or_else(|| missing("[nonlinear] p"))?,
        })
    } else {
        None
    };

    let truncation = if b.saw_truncation {
        let kind = b.trunc_kind.ok_or_else(|| missing("[truncation] kind"))?;
        if kind == "hard" && b.trunc_roll.is_some() {
            return Err(ConfigError::Invalid(
                "`roll` only applies to gaussian truncation windows".to_string(),
            ));
        }
        Some(TruncationSpec {
            kind,
            center: b.trunc_center.ok_or_else(|| missing("[truncation] center"))?,
            half_width: b
                .trunc_half_width
                .ok_or_else(|| missing("[truncation] half_width"))?,
            roll: b.trunc_roll.unwrap_or(4.0),
        })
    } else {
        None
    };

    let absorber = if b.saw_absorber {
        Some(AbsorberSpec {
            width: b.abs_width.ok_or_else(|| missing("[absorber] width"))?,
            strength: b.abs_strength.ok_or_else(|| missing("[absorber] strength"))?,
        })
    } else {
        None
    };

    let spec = ScenarioSpec {
        name,
        family: FamilySpec {
            tag,
            params: b.family_params,
        },
        grid,
        propagation,
        nonlinear,
        truncation,
        absorber,
        diagnostics: b.diagnostics,
    };
    validate(&spec)?;
    Ok(spec)
}

/// Semantic checks that need the assembled spec rather than a single line.
/// Also re-run after programmatic overrides, which bypass the line parser.
pub(crate) fn validate(spec: &ScenarioSpec) -> Result<(), ConfigError> {
    let invalid = |m: String| Err(ConfigError::Invalid(m));
    if spec.name.is_empty() {
        return invalid("scenario name must not be empty".into());
    }
    if !(spec.grid.x_min < spec.grid.x_max) {
        return invalid(format!(
            "grid needs x_min < x_max, got [{}, {}]",
            spec.grid.x_min, spec.grid.x_max
        ));
    }
    if !(spec.propagation.dt > 0.0 && spec.propagation.dt.is_finite()) {
        return invalid(format!("dt must be positive, got {}", spec.propagation.dt));
    }
    if spec.propagation.steps == 0 {
        return invalid("steps must be at least 1".into());
    }
    if spec.propagation.record_stride == 0 {
        return invalid("record_stride must be at least 1".into());
    }
    if let Some(nl) = &spec.nonlinear {
        if !(nl.p > 0.0) {
            return invalid(format!("nonlinear p must be positive, got {}", nl.p));
        }
    }
    if let Some(tr) = &spec.truncation {
        if !(tr.half_width > 0.0) {
            return invalid(format!(
                "truncation half_width must be positive, got {}",
                tr.half_width
            ));
        }
        if !(tr.roll > 0.0) {
            return invalid(format!("truncation roll must be positive, got {}", tr.roll));
        }
    }
    if let Some(ab) = &spec.absorber {
        if !(ab.width > 0.0) || !(ab.strength >= 0.0) {
            return invalid(format!(
                "absorber needs width > 0 and strength >= 0, got {} / {}",
                ab.width, ab.strength
            ));
        }
    }
    if let Some(hw) = spec.diagnostics.interior_half_width {
        if !(hw > 0.0) {
            return invalid(format!("interior_half_width must be positive, got {hw}"));
        }
    }
    Ok(())
}
