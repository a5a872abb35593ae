//! Executes one scenario spec end to end: build the family, window the
//! initial state, propagate, then run the requested measurements.

use serde::Serialize;

use selfacc_core::diagnostics::{
    compare_to_analytic, ehrenfest_residual, fit_parabola, intensity_flatness, minimum_position,
    pattern_shift, FieldComparison, ParabolaFit,
};
use selfacc_core::family::SolutionFamily;
use selfacc_core::field::ComplexWaveField;
use selfacc_core::frame::FrameParams;
use selfacc_core::grid::Grid1D;
use selfacc_core::potential::{ComovingPotential, NonlinearTerm};
use selfacc_core::propagator::{
    propagate, AbsorberSpec as CoreAbsorber, PropagationRecord, PropagatorConfig, Scheme,
};
use selfacc_core::{C64, CoreError};

use crate::config::{parse_config, ConfigError, ScenarioSpec, TruncationSpec};

/// Built-in scenarios are the shipped config files, embedded verbatim, so a
/// preset and its file cannot drift apart.
const PRESET_SOURCES: &[(&str, &str)] = &[
    (
        "gaussian-localized",
        include_str!("../../../configs/gaussian-localized.conf"),
    ),
    (
        "flat-critical",
        include_str!("../../../configs/flat-critical.conf"),
    ),
    (
        "flat-supercritical",
        include_str!("../../../configs/flat-supercritical.conf"),
    ),
    (
        "airy-truncated",
        include_str!("../../../configs/airy-truncated.conf"),
    ),
    (
        "dark-soliton",
        include_str!("../../../configs/dark-soliton.conf"),
    ),
    (
        "nonlinear-shift",
        include_str!("../../../configs/nonlinear-shift.conf"),
    ),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESET_SOURCES.iter().map(|(n, _)| *n).collect()
}

pub fn preset(name: &str) -> Option<ScenarioSpec> {
    PRESET_SOURCES.iter().find(|(n, _)| *n == name).map(|(n, text)| {
        parse_config(text).unwrap_or_else(|e| panic!("shipped preset `{n}` is invalid: {e}"))
    })
}

/// Rewrites a single `section.key` in place, so sweeps and overrides go
/// through the same validation as a parsed file.
pub fn apply_override(
    spec: &mut ScenarioSpec,
    dotted: &str,
    value: &str,
) -> Result<(), ConfigError> {
    let bad = |m: String| ConfigError::Invalid(m);
    let (section, key) = dotted
        .split_once('.')
        .ok_or_else(|| bad(format!("override `{dotted}` needs the form section.key")))?;
    let as_f64 = || {
        value
            .parse::<f64>()
            .map_err(|_| bad(format!("override `{dotted}` expects a number, got `{value}`")))
    };
    let as_usize = || {
        value
            .parse::<usize>()
            .map_err(|_| bad(format!("override `{dotted}` expects an integer, got `{value}`")))
    };
    match (section, key) {
        ("family", k) => {
            spec.family.params.insert(k.to_string(), as_f64()?);
        }
        ("grid", "x_min") => spec.grid.x_min = as_f64()?,
        ("grid", "x_max") => spec.grid.x_max = as_f64()?,
        ("grid", "n") => spec.grid.n = as_usize()?,
        ("propagation", "dt") => spec.propagation.dt = as_f64()?,
        ("propagation", "steps") => spec.propagation.steps = as_usize()?,
        ("propagation", "record_stride") => spec.propagation.record_stride = as_usize()?,
        ("nonlinear", k @ ("sigma" | "p")) => {
            let nl = spec
                .nonlinear
                .as_mut()
                .ok_or_else(|| bad(format!("`{dotted}`: scenario has no [nonlinear] section")))?;
            match k {
                "sigma" => nl.sigma = as_f64()?,
                _ => nl.p = as_f64()?,
            }
        }
        ("truncation", k @ ("center" | "half_width" | "roll")) => {
            let tr = spec
                .truncation
                .as_mut()
                .ok_or_else(|| bad(format!("`{dotted}`: scenario has no [truncation] section")))?;
            match k {
                "center" => tr.center = as_f64()?,
                "half_width" => tr.half_width = as_f64()?,
                _ => tr.roll = as_f64()?,
            }
        }
        ("absorber", k @ ("width" | "strength")) => {
            let ab = spec
                .absorber
                .as_mut()
                .ok_or_else(|| bad(format!("`{dotted}`: scenario has no [absorber] section")))?;
            match k {
                "width" => ab.width = as_f64()?,
                _ => ab.strength = as_f64()?,
            }
        }
        _ => return Err(bad(format!("`{dotted}` is not a sweepable key"))),
    }
    crate::config::validate(spec)
}

/// Measurements computed after the run; every field is present in the
/// manifest so a missing diagnostic is visible as null rather than absent.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunReport {
    pub t_final: f64,
    pub norm_initial: f64,
    pub norm_final: f64,
    /// Worst |density - 1| over the riding interior window, across all
    /// stored fields.
    pub flatness_max: Option<f64>,
    /// Measured translation of the demodulated density pattern between the
    /// first and last stored fields.
    pub pattern_shift: Option<f64>,
    pub pattern_shift_expected: Option<f64>,
    pub analytic_comparison: Option<FieldComparison>,
    pub peak_fit: Option<ParabolaFit>,
    pub centroid_fit: Option<ParabolaFit>,
    pub notch_fit: Option<ParabolaFit>,
    pub notch_track: Vec<(f64, f64)>,
    pub ehrenfest_max: Option<f64>,
    /// Diagnostics that could not be computed, with the reason.
    pub notes: Vec<String>,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub spec: ScenarioSpec,
    pub family: SolutionFamily,
    pub record: PropagationRecord,
    pub report: RunReport,
    /// Present when propagation stopped early; the record holds the part
    /// that completed.
    pub abort: Option<String>,
}

fn window_amplitude(x: f64, tr: &TruncationSpec) -> f64 {
    let excess = (x - tr.center).abs() - tr.half_width;
    if excess <= 0.0 {
        1.0
    } else if tr.kind == "hard" {
        0.0
    } else {
        (-(excess / tr.roll) * (excess / tr.roll)).exp()
    }
}

/// Strips the frame's carrier `exp(i (a t q + S(t)))` so what remains is the
/// comoving pattern translated to the lab position of the frame. Density
/// patterns of flat-modulus states only correlate after this step.
pub fn demodulate(field: &ComplexWaveField, frame: &FrameParams, t: f64) -> ComplexWaveField {
    let grid = field.grid();
    let s_t = frame.s_of_t(t);
    let amps = field
        .amps()
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let q = frame.q_of(grid.x(j), t);
            a * C64::cis(-(frame.a * t * q + s_t))
        })
        .collect();
    ComplexWaveField::new(grid, amps).expect("demodulation preserves the grid")
}

/// Half-width of the window that follows the frame center when hunting the
/// density minimum.
const NOTCH_WINDOW: f64 = 2.0;

pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioOutcome, CoreError> {
    let family = SolutionFamily::from_kv(&spec.family.tag, &spec.family.params)?;
    let grid = Grid1D::new(spec.grid.x_min, spec.grid.x_max, spec.grid.n)?;

    let mut initial = family.assemble_lab_frame(grid, 0.0)?;
    if let Some(tr) = &spec.truncation {
        for j in 0..grid.n() {
            let w = window_amplitude(grid.x(j), tr);
            initial.amps_mut()[j] *= w;
        }
    }

    let potential = ComovingPotential::from_family(&family);
    let nonlinear = spec
        .nonlinear
        .as_ref()
        .map(|nl| NonlinearTerm::new(nl.sigma, nl.p))
        .transpose()?;

    let scheme = Scheme::parse(&spec.propagation.scheme)?;
    let mut cfg = PropagatorConfig::new(scheme, spec.propagation.dt, spec.propagation.steps);
    cfg.record_stride = spec.propagation.record_stride;
    cfg.store_fields = spec.propagation.store_fields;
    if let Some(ab) = &spec.absorber {
        let core_ab = CoreAbsorber::new(ab.width, ab.strength)?;
        if 2.0 * ab.width >= grid.length() {
            return Err(CoreError::invalid_parameter(
                "absorbing layers may not cover the whole domain",
            ));
        }
        cfg.absorber = Some(core_ab);
    }

    let (record, abort) = match propagate(&initial, &potential, nonlinear.as_ref(), &cfg) {
        Ok(r) => (r, None),
        Err(b) => (b.partial, Some(b.error.to_string())),
    };

    let report = diagnose(spec, &family, &potential, &record);
    Ok(ScenarioOutcome {
        spec: spec.clone(),
        family,
        record,
        report,
        abort,
    })
}

fn diagnose(
    spec: &ScenarioSpec,
    family: &SolutionFamily,
    potential: &ComovingPotential,
    record: &PropagationRecord,
) -> RunReport {
    let d = &spec.diagnostics;
    let frame = family.frame();
    let mut report = RunReport {
        t_final: record.times.last().copied().unwrap_or(0.0),
        norm_initial: record.norms.first().copied().unwrap_or(0.0),
        norm_final: record.norms.last().copied().unwrap_or(0.0),
        ..RunReport::default()
    };
    let note = |report: &mut RunReport, what: &str, why: String| {
        report.notes.push(format!("{what}: {why}"));
    };

    if let Some(hw) = d.interior_half_width {
        let mut worst: Option<f64> = None;
        for (i, f) in record.fields.iter().enumerate() {
            let xc = frame.x_center(record.times[i]);
            if let Some(dev) = intensity_flatness(f, xc - hw, xc + hw, 1.0) {
                worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
            }
        }
        report.flatness_max = worst;
    }

    if d.pattern_shift {
        if record.fields.len() >= 2 {
            let t0 = record.times[0];
            let t1 = report.t_final;
            let reference = demodulate(&record.fields[0], &frame, t0);
            let last = demodulate(record.fields.last().unwrap(), &frame, t1);
            let xc = frame.x_center(t1);
            let hw = d.interior_half_width.unwrap_or(3.0);
            let expected = xc - frame.x_center(t0);
            match pattern_shift(&last, &reference, (xc - hw, xc + hw), expected.abs() + 1.0) {
                Ok(s) => {
                    report.pattern_shift = Some(s);
                    report.pattern_shift_expected = Some(expected);
                }
                Err(e) => note(&mut report, "pattern shift", e.to_string()),
            }
        } else {
            note(
                &mut report,
                "pattern shift",
                "needs at least two stored fields".into(),
            );
        }
    }

    if d.compare_analytic {
        if let Some(field) = record.fields.last() {
            let window = d
                .interior_half_width
                .map(|hw| {
                    let xc = frame.x_center(report.t_final);
                    (xc - hw, xc + hw)
                });
            match compare_to_analytic(field, family, report.t_final, true, window) {
                Ok(c) => report.analytic_comparison = Some(c),
                Err(e) => note(&mut report, "analytic comparison", e.to_string()),
            }
        } else {
            note(
                &mut report,
                "analytic comparison",
                "needs stored fields".into(),
            );
        }
    }

    if d.fit_peak_acceleration {
        match fit_parabola(&record.times, &record.peaks) {
            Ok(f) => report.peak_fit = Some(f),
            Err(e) => note(&mut report, "peak fit", e.to_string()),
        }
    }

    if d.fit_centroid {
        let mut ts = Vec::new();
        let mut xs = Vec::new();
        for (t, c) in record.times.iter().zip(record.centroids.iter()) {
            if let Some(x) = c {
                ts.push(*t);
                xs.push(*x);
            }
        }
        match fit_parabola(&ts, &xs) {
            Ok(f) => report.centroid_fit = Some(f),
            Err(e) => note(&mut report, "centroid fit", e.to_string()),
        }
    }

    if d.track_minimum {
        for (i, f) in record.fields.iter().enumerate() {
            let t = record.times[i];
            let xc = frame.x_center(t);
            if let Some(est) = minimum_position(f, xc - NOTCH_WINDOW, xc + NOTCH_WINDOW) {
                report.notch_track.push((t, est.x));
            }
        }
        if report.notch_track.len() >= 3 {
            let ts: Vec<f64> = report.notch_track.iter().map(|p| p.0).collect();
            let xs: Vec<f64> = report.notch_track.iter().map(|p| p.1).collect();
            match fit_parabola(&ts, &xs) {
                Ok(f) => report.notch_fit = Some(f),
                Err(e) => note(&mut report, "notch fit", e.to_string()),
            }
        } else {
            let tracked = report.notch_track.len();
            note(
                &mut report,
                "notch fit",
                format!("only {tracked} tracked points"),
            );
        }
    }

    if d.ehrenfest {
        match ehrenfest_residual(record, potential) {
            Ok(rs) => {
                report.ehrenfest_max = rs.iter().map(|r| r.abs()).fold(None, |acc, v| {
                    Some(acc.map_or(v, |a: f64| a.max(v)))
                });
            }
            Err(e) => note(&mut report, "ehrenfest residual", e.to_string()),
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_builds_its_family() {
        for name in preset_names() {
            let spec = preset(name).unwrap();
            assert_eq!(spec.name, name, "preset name must match its lookup key");
            SolutionFamily::from_kv(&spec.family.tag, &spec.family.params)
                .unwrap_or_else(|e| panic!("{name}: family does not build: {e}"));
            Scheme::parse(&spec.propagation.scheme)
                .unwrap_or_else(|e| panic!("{name}: bad scheme: {e}"));
        }
    }

    #[test]
    fn override_rewrites_nested_keys() {
        let mut spec = preset("airy-truncated").unwrap();
        apply_override(&mut spec, "truncation.half_width", "12").unwrap();
        assert_eq!(spec.truncation.as_ref().unwrap().half_width, 12.0);
        apply_override(&mut spec, "family.a", "0.25").unwrap();
        assert_eq!(spec.family.params["a"], 0.25);
        let err = apply_override(&mut spec, "propagation.scheme", "x").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn override_validation_still_applies() {
        let mut spec = preset("gaussian-localized").unwrap();
        let err = apply_override(&mut spec, "propagation.dt", "-1").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn hard_window_zeroes_the_outside() {
        let tr = TruncationSpec {
            kind: "hard".into(),
            center: 1.0,
            half_width: 2.0,
            roll: 4.0,
        };
        assert_eq!(window_amplitude(2.9, &tr), 1.0);
        assert_eq!(window_amplitude(3.1, &tr), 0.0);
        let soft = TruncationSpec {
            kind: "gaussian".into(),
            ..tr
        };
        let w = window_amplitude(5.0, &soft);
        assert!(((-0.25f64).exp() - w).abs() < 1e-15);
    }

    #[test]
    fn demodulation_leaves_a_translated_pattern() {
        // A flat-critical state demodulated at time t should equal the t=0
        // pattern translated by the frame displacement, up to truncation
        // noise; here we check the pure analytic field, so it is exact.
        let fam = SolutionFamily::const_intensity_inv_harm(1.0, 1.0, 0.25).unwrap();
        let frame = fam.frame();
        let grid = Grid1D::new(-8.0, 8.0, 512).unwrap();
        let t = 0.6;
        let moved = demodulate(&fam.assemble_lab_frame(grid, t).unwrap(), &frame, t);
        let base = demodulate(&fam.assemble_lab_frame(grid, 0.0).unwrap(), &frame, 0.0);
        let xc = frame.x_center(t);
        let shift =
            pattern_shift(&moved, &base, (xc - 3.0, xc + 3.0), xc + 0.5).unwrap();
        // The modulus is 1 everywhere, so the pattern lives in the phase
        // current; correlation of the demodulated fields still locks on.
        assert!(
            (shift - xc).abs() < 2.0 * grid.dx(),
            "shift {shift} vs frame displacement {xc}"
        );
    }

    #[test]
    fn gaussian_preset_runs_and_reports() {
        let mut spec = preset("gaussian-localized").unwrap();
        // Shrink for test speed; keep the physics.
        spec.propagation.steps = 200;
        spec.propagation.record_stride = 20;
        let out = run_scenario(&spec).unwrap();
        assert!(out.abort.is_none(), "{:?}", out.abort);
        assert_eq!(out.record.times.len(), 11);
        let fit = out.report.centroid_fit.expect("centroid fit requested");
        assert!(
            (fit.acceleration - 1.0).abs() < 0.05,
            "acceleration {}",
            fit.acceleration
        );
        let cmp = out.report.analytic_comparison.expect("comparison requested");
        assert!(cmp.l_inf < 1e-3, "l_inf {}", cmp.l_inf);
    }
}
