//! Measurements over fields and propagation records.

use crate::error::CoreError;
use crate::family::SolutionFamily;
use crate::field::ComplexWaveField;
use crate::potential::ComovingPotential;
use crate::propagator::PropagationRecord;
use serde::Serialize;

/// Total probability below this is too small to normalise against.
pub const NORM_FLOOR: f64 = 1e-12;

/// `int |psi|^2 dx` over the grid.
pub fn norm(field: &ComplexWaveField) -> f64 {
    let dx = field.grid().dx();
    field.amps().iter().map(|a| a.norm_sqr()).sum::<f64>() * dx
}

/// Normalised position expectation `<x>`.
pub fn centroid(field: &ComplexWaveField) -> Result<f64, CoreError> {
    let grid = field.grid();
    let dx = grid.dx();
    let mut n = 0.0;
    let mut m = 0.0;
    for (j, a) in field.amps().iter().enumerate() {
        let d = a.norm_sqr();
        n += d;
        m += grid.x(j) * d;
    }
    n *= dx;
    m *= dx;
    if n < NORM_FLOOR {
        return Err(CoreError::NormFloor {
            norm: n,
            floor: NORM_FLOOR,
        });
    }
    Ok(m / n)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PeakEstimate {
    /// Sub-grid refined position.
    pub x: f64,
    /// Grid index of the extremal sample.
    pub index: usize,
    /// Set when the extremum is not unique at 1e-12 relative resolution.
    pub degenerate: bool,
}

/// Position of the density maximum: leftmost maximal sample, refined by a
/// three-point parabola through the density.
pub fn peak_position(field: &ComplexWaveField) -> PeakEstimate {
    let density = field.density();
    extremum_in(&density, field, 0..field.grid().n(), false)
        .expect("non-empty grid always has a maximum")
}

/// Position of the density minimum inside `[x_lo, x_hi]`, or None when no
/// grid point falls in the window.
pub fn minimum_position(
    field: &ComplexWaveField,
    x_lo: f64,
    x_hi: f64,
) -> Option<PeakEstimate> {
    let grid = field.grid();
    let density = field.density();
    let lo = (0..grid.n()).find(|&j| grid.x(j) >= x_lo)?;
    let hi = (0..grid.n()).rev().find(|&j| grid.x(j) <= x_hi)?;
    if hi < lo {
        return None;
    }
    extremum_in(&density, field, lo..hi + 1, true)
}

fn extremum_in(
    density: &[f64],
    field: &ComplexWaveField,
    range: std::ops::Range<usize>,
    minimum: bool,
) -> Option<PeakEstimate> {
    let grid = field.grid();
    let sign = if minimum { -1.0 } else { 1.0 };
    let mut best: Option<(usize, f64)> = None;
    for j in range.clone() {
        let v = sign * density[j];
        match best {
            None => best = Some((j, v)),
            Some((_, bv)) if v > bv => best = Some((j, v)),
            _ => {}
        }
    }
    let (i, bv) = best?;
    let near_ties = range
        .clone()
        .filter(|&j| (bv - sign * density[j]).abs() <= 1e-12 * bv.abs().max(1e-300))
        .count();
    let mut x = grid.x(i);
    // Refine off the sample only when both neighbours are available inside
    // the searched range.
    if i > range.start && i + 1 < range.end {
        let dm = sign * density[i - 1];
        let d0 = bv;
        let dp = sign * density[i + 1];
        let denom = dm - 2.0 * d0 + dp;
        if denom < 0.0 {
            let shift = 0.5 * (dm - dp) / denom * grid.dx();
            if shift.abs() <= 0.5 * grid.dx() {
                x += shift;
            }
        }
    }
    Some(PeakEstimate {
        x,
        index: i,
        degenerate: near_ties > 1,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParabolaFit {
    pub x0: f64,
    pub v0: f64,
    pub acceleration: f64,
    pub rms_residual: f64,
}

/// Least-squares quadratic `x(t) = x0 + v0 t + (acceleration/2) t^2` through
/// the samples, via QR on the time-centered Vandermonde basis.
pub fn fit_parabola(times: &[f64], positions: &[f64]) -> Result<ParabolaFit, CoreError> {
    let n = times.len();
    if n != positions.len() {
        return Err(CoreError::GridMismatch(format!(
            "{} times vs {} positions",
            n,
            positions.len()
        )));
    }
    if n < 3 {
        return Err(CoreError::DegenerateTimes(format!(
            "need at least 3 samples, got {n}"
        )));
    }
    let mut distinct: Vec<f64> = times.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(CoreError::DegenerateTimes(
            "need at least 3 distinct sample times".into(),
        ));
    }

    let t_bar = times.iter().sum::<f64>() / n as f64;
    let cols: [Vec<f64>; 3] = [
        vec![1.0; n],
        times.iter().map(|t| t - t_bar).collect(),
        times.iter().map(|t| (t - t_bar) * (t - t_bar)).collect(),
    ];

    // Modified Gram-Schmidt QR of the 3-column basis.
    let mut q = cols.clone();
    let mut r = [[0.0f64; 3]; 3];
    for j in 0..3 {
        for i in 0..j {
            let rij: f64 = q[i].iter().zip(q[j].iter()).map(|(a, b)| a * b).sum();
            r[i][j] = rij;
            let qi = q[i].clone();
            for (v, u) in q[j].iter_mut().zip(qi.iter()) {
                *v -= rij * u;
            }
        }
        let nrm: f64 = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm < 1e-12 {
            return Err(CoreError::DegenerateTimes(
                "sample times span a degenerate basis".into(),
            ));
        }
        r[j][j] = nrm;
        for v in q[j].iter_mut() {
            *v /= nrm;
        }
    }
    let qty: Vec<f64> = (0..3)
        .map(|j| q[j].iter().zip(positions.iter()).map(|(a, b)| a * b).sum())
        .collect();
    // Back substitution.
    let mut c = [0.0f64; 3];
    for j in (0..3).rev() {
        let mut s = qty[j];
        for k in j + 1..3 {
            s -= r[j][k] * c[k];
        }
        c[j] = s / r[j][j];
    }
    // Uncenter: x(t) = c0 + c1 (t - t_bar) + c2 (t - t_bar)^2.
    let x0 = c[0] - c[1] * t_bar + c[2] * t_bar * t_bar;
    let v0 = c[1] - 2.0 * c[2] * t_bar;
    let acceleration = 2.0 * c[2];

    let mut ss = 0.0;
    for (t, y) in times.iter().zip(positions.iter()) {
        let fit = x0 + v0 * t + 0.5 * acceleration * t * t;
        ss += (y - fit) * (y - fit);
    }
    Ok(ParabolaFit {
        x0,
        v0,
        acceleration,
        rms_residual: (ss / n as f64).sqrt(),
    })
}

/// Checks the force law on a recorded run: returns, for each interior
/// record, the defect `D2<x> + <dV_R/dx> / N` where `D2` is the centered
/// second difference over the (uniform) record times. Requires stored
/// fields.
pub fn ehrenfest_residual(
    record: &PropagationRecord,
    potential: &ComovingPotential,
) -> Result<Vec<f64>, CoreError> {
    let n = record.fields.len();
    if n != record.times.len() || n < 3 {
        return Err(CoreError::invalid_parameter(
            "ehrenfest check needs at least 3 records with stored fields",
        ));
    }
    let dt = record.times[1] - record.times[0];
    for w in record.times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs() {
            return Err(CoreError::DegenerateTimes(
                "record times must be uniformly spaced".into(),
            ));
        }
    }
    let grid = record.grid;
    let dx = grid.dx();
    let mut xs = Vec::with_capacity(n);
    let mut forces = Vec::with_capacity(n);
    for (field, &t) in record.fields.iter().zip(record.times.iter()) {
        xs.push(centroid(field)?);
        let mut f = 0.0;
        let mut nrm = 0.0;
        for (j, a) in field.amps().iter().enumerate() {
            let d = a.norm_sqr();
            f += potential.dv_real_dx(grid.x(j), t) * d;
            nrm += d;
        }
        forces.push(f * dx / (nrm * dx));
    }
    Ok((1..n - 1)
        .map(|i| (xs[i + 1] - 2.0 * xs[i] + xs[i - 1]) / (dt * dt) + forces[i])
        .collect())
}

/// Largest deviation of the density from `target` over `[x_lo, x_hi]`;
/// None when no grid point falls inside.
pub fn intensity_flatness(
    field: &ComplexWaveField,
    x_lo: f64,
    x_hi: f64,
    target: f64,
) -> Option<f64> {
    let grid = field.grid();
    let mut worst: Option<f64> = None;
    for (j, a) in field.amps().iter().enumerate() {
        let x = grid.x(j);
        if x < x_lo || x > x_hi {
            continue;
        }
        let dev = (a.norm_sqr() - target).abs();
        worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
    }
    worst
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldComparison {
    /// `sqrt(int |diff|^2 dx)` over the compared window.
    pub l2: f64,
    pub l_inf: f64,
    /// Global phase removed from `field` before differencing, if requested.
    pub removed_phase: Option<f64>,
}

/// Pointwise difference between `field` and `reference` on a shared grid,
/// optionally after removing the best-fit global phase, optionally
/// restricted to a window.
pub fn compare_fields(
    field: &ComplexWaveField,
    reference: &ComplexWaveField,
    align_phase: bool,
    window: Option<(f64, f64)>,
) -> Result<FieldComparison, CoreError> {
    if field.grid() != reference.grid() {
        return Err(CoreError::GridMismatch(
            "compared fields live on different grids".into(),
        ));
    }
    let grid = field.grid();
    let in_window = |j: usize| match window {
        None => true,
        Some((lo, hi)) => {
            let x = grid.x(j);
            x >= lo && x <= hi
        }
    };
    let mut count = 0usize;
    let phase = if align_phase {
        let mut overlap = crate::C64::new(0.0, 0.0);
        for j in 0..grid.n() {
            if in_window(j) {
                overlap += reference.amps()[j].conj() * field.amps()[j];
                count += 1;
            }
        }
        if count == 0 {
            return Err(CoreError::invalid_parameter(
                "comparison window contains no grid points",
            ));
        }
        if overlap.norm_sqr() > 0.0 {
            Some(overlap.arg())
        } else {
            Some(0.0)
        }
    } else {
        None
    };
    let rot = crate::C64::cis(-phase.unwrap_or(0.0));
    let mut l2 = 0.0;
    let mut l_inf = 0.0f64;
    count = 0;
    for j in 0..grid.n() {
        if !in_window(j) {
            continue;
        }
        count += 1;
        let d = (field.amps()[j] * rot - reference.amps()[j]).norm_sqr();
        l2 += d;
        l_inf = l_inf.max(d.sqrt());
    }
    if count == 0 {
        return Err(CoreError::invalid_parameter(
            "comparison window contains no grid points",
        ));
    }
    Ok(FieldComparison {
        l2: (l2 * grid.dx()).sqrt(),
        l_inf,
        removed_phase: phase,
    })
}

/// Difference against the family's exact lab-frame wave at time `t`.
pub fn compare_to_analytic(
    field: &ComplexWaveField,
    family: &SolutionFamily,
    t: f64,
    align_phase: bool,
    window: Option<(f64, f64)>,
) -> Result<FieldComparison, CoreError> {
    let reference = family.assemble_lab_frame(field.grid(), t)?;
    compare_fields(field, &reference, align_phase, window)
}

/// Translation `s` maximising the overlap of `field` with `reference`
/// shifted by `s`, i.e. `field(x) ~ reference(x - s)` over the window.
/// Scans integer grid shifts up to `max_shift` (periodically wrapped) and
/// refines with a parabola through the correlation magnitudes.
pub fn pattern_shift(
    field: &ComplexWaveField,
    reference: &ComplexWaveField,
    window: (f64, f64),
    max_shift: f64,
) -> Result<f64, CoreError> {
    if field.grid() != reference.grid() {
        return Err(CoreError::GridMismatch(
            "pattern shift needs a shared grid".into(),
        ));
    }
    let grid = field.grid();
    let n = grid.n();
    let m_max = ((max_shift / grid.dx()).ceil() as isize).max(1);
    let idx: Vec<usize> = (0..n)
        .filter(|&j| {
            let x = grid.x(j);
            x >= window.0 && x <= window.1
        })
        .collect();
    if idx.is_empty() {
        return Err(CoreError::invalid_parameter(
            "pattern window contains no grid points",
        ));
    }
    let corr = |m: isize| -> f64 {
        let mut s = crate::C64::new(0.0, 0.0);
        for &j in &idx {
            let k = (j as isize - m).rem_euclid(n as isize) as usize;
            s += reference.amps()[k].conj() * field.amps()[j];
        }
        s.norm()
    };
    let mut best_m = 0isize;
    let mut best_c = f64::NEG_INFINITY;
    for m in -m_max..=m_max {
        let c = corr(m);
        if c > best_c {
            best_c = c;
            best_m = m;
        }
    }
    let mut shift = best_m as f64;
    if best_m > -m_max && best_m < m_max {
        let cm = corr(best_m - 1);
        let cp = corr(best_m + 1);
        let denom = cm - 2.0 * best_c + cp;
        if denom < 0.0 {
            let d = 0.5 * (cm - cp) / denom;
            if d.abs() <= 1.0 {
                shift += d;
            }
        }
    }
    Ok(shift * grid.dx())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::FrameParams;
    use crate::grid::Grid1D;
    use crate::profiles::Profile;
    use crate::propagator::Scheme;
    use crate::C64;

    fn gaussian_field(grid: Grid1D, center: f64) -> ComplexWaveField {
        ComplexWaveField::from_fn(grid, |x| {
            C64::new((-(x - center) * (x - center)).exp(), 0.0)
        })
    }

    #[test]
    fn norm_and_centroid_of_offset_gaussian() {
        let grid = Grid1D::new(-10.0, 12.0, 512).unwrap();
        let f = gaussian_field(grid, 1.0);
        // int exp(-2 x^2) = sqrt(pi/2), to spectral accuracy on this box.
        let want = (std::f64::consts::PI / 2.0).sqrt();
        assert!((norm(&f) - want).abs() < 1e-12);
        assert!((centroid(&f).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn centroid_of_nothing_is_an_error() {
        let grid = Grid1D::new(-5.0, 5.0, 64).unwrap();
        let z = ComplexWaveField::zeros(grid);
        assert!(matches!(
            centroid(&z),
            Err(CoreError::NormFloor { .. })
        ));
    }

    #[test]
    fn peak_lands_between_grid_points() {
        let grid = Grid1D::new(-11.0, 11.0, 512).unwrap();
        let f = gaussian_field(grid, 0.3);
        let p = peak_position(&f);
        assert!(!p.degenerate);
        assert!((p.x - 0.3).abs() < 5e-3, "peak at {}", p.x);
        assert!((p.x - 0.3).abs() < 0.5 * grid.dx());
    }

    #[test]
    fn flat_field_is_degenerate() {
        let grid = Grid1D::new(0.0, 1.0, 32).unwrap();
        let f = ComplexWaveField::from_fn(grid, |_| C64::new(0.7, 0.0));
        assert!(peak_position(&f).degenerate);
    }

    #[test]
    fn minimum_tracks_a_notch() {
        let grid = Grid1D::new(-8.0, 8.0, 256).unwrap();
        let f = ComplexWaveField::from_fn(grid, |x| C64::new((x - 0.4).tanh(), 0.0));
        let m = minimum_position(&f, -2.0, 2.0).unwrap();
        assert!((m.x - 0.4).abs() < 0.5 * grid.dx(), "min at {}", m.x);
        assert!(minimum_position(&f, 100.0, 101.0).is_none());
    }

    #[test]
    fn parabola_fit_recovers_exact_coefficients() {
        let times: Vec<f64> = (0..21).map(|i| 0.1 * i as f64).collect();
        let pos: Vec<f64> = times.iter().map(|t| 1.0 + 2.0 * t + 3.0 * t * t).collect();
        let fit = fit_parabola(&times, &pos).unwrap();
        assert!((fit.x0 - 1.0).abs() < 1e-12);
        assert!((fit.v0 - 2.0).abs() < 1e-12);
        assert!((fit.acceleration - 6.0).abs() < 1e-12);
        assert!(fit.rms_residual < 1e-13);
    }

    #[test]
    fn parabola_fit_needs_three_distinct_times() {
        assert!(matches!(
            fit_parabola(&[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 1.0]),
            Err(CoreError::DegenerateTimes(_))
        ));
        assert!(matches!(
            fit_parabola(&[0.0, 1.0], &[0.0, 1.0]),
            Err(CoreError::DegenerateTimes(_))
        ));
    }

    #[test]
    fn ehrenfest_wiring_on_a_hand_built_record() {
        // Fields are gaussians riding x_c = t^2/2; with V_R = -q the force
        // expectation is exactly -1, cancelling the second difference.
        let grid = Grid1D::new(-10.0, 14.0, 256).unwrap();
        let frame = FrameParams { a: 1.0, mu: 0.0 };
        let pot = ComovingPotential::new(
            Profile::new("-q", |q| -q),
            Profile::zero(),
            frame,
        );
        let times: Vec<f64> = (0..9).map(|i| 0.25 * i as f64).collect();
        let mut record = PropagationRecord {
            scheme: Scheme::SplitStep,
            grid,
            times: times.clone(),
            norms: vec![],
            centroids: vec![],
            peaks: vec![],
            max_abs: vec![],
            fields: times
                .iter()
                .map(|&t| gaussian_field(grid, 0.5 * t * t))
                .collect(),
            warnings: vec![],
        };
        let r = ehrenfest_residual(&record, &pot).unwrap();
        assert_eq!(r.len(), times.len() - 2);
        for v in &r {
            assert!(v.abs() < 1e-9, "residual {v}");
        }
        record.times[3] += 0.01;
        assert!(ehrenfest_residual(&record, &pot).is_err());
    }

    #[test]
    fn flatness_measures_worst_deviation() {
        let grid = Grid1D::new(-4.0, 4.0, 128).unwrap();
        let f = ComplexWaveField::from_fn(grid, |x| {
            C64::new(1.0 + if x.abs() < 0.5 { 0.02 } else { 0.0 }, 0.0)
        });
        // (1.02)^2 - 1 = 0.0404.
        let dev = intensity_flatness(&f, -1.0, 1.0, 1.0).unwrap();
        assert!((dev - 0.0404).abs() < 1e-12);
        let clean = intensity_flatness(&f, 1.0, 3.0, 1.0).unwrap();
        assert!(clean < 1e-15);
        assert!(intensity_flatness(&f, 50.0, 60.0, 1.0).is_none());
    }

    #[test]
    fn phase_alignment_recovers_global_phase() {
        let grid = Grid1D::new(-6.0, 6.0, 128).unwrap();
        let a = gaussian_field(grid, 0.0);
        let rotated = ComplexWaveField::from_fn(grid, |x| {
            C64::new((-(x) * (x)).exp(), 0.0) * C64::cis(0.3)
        });
        let cmp = compare_fields(&rotated, &a, true, None).unwrap();
        assert!((cmp.removed_phase.unwrap() - 0.3).abs() < 1e-12);
        assert!(cmp.l_inf < 1e-13);
        let raw = compare_fields(&rotated, &a, false, None).unwrap();
        assert!(raw.l_inf > 0.2);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ComplexWaveField::zeros(Grid1D::new(-1.0, 1.0, 32).unwrap());
        let b = ComplexWaveField::zeros(Grid1D::new(-1.0, 1.0, 64).unwrap());
        assert!(matches!(
            compare_fields(&a, &b, false, None),
            Err(CoreError::GridMismatch(_))
        ));
    }

    #[test]
    fn pattern_shift_finds_subgrid_translations() {
        let grid = Grid1D::new(-12.0, 12.0, 512).unwrap();
        let dx = grid.dx();
        let s = 3.7 * dx;
        let reference = gaussian_field(grid, 0.0);
        let field = gaussian_field(grid, s);
        let got = pattern_shift(&field, &reference, (-6.0, 6.0), 1.0).unwrap();
        assert!((got - s).abs() < 0.2 * dx, "shift {got} vs {s}");
        // Unshifted data reports (nearly) zero.
        let zero = pattern_shift(&reference, &reference, (-6.0, 6.0), 1.0).unwrap();
        assert!(zero.abs() < 1e-9);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn parabola_fit_is_translation_equivariant(
                c0 in -5.0f64..5.0,
                c1 in -5.0f64..5.0,
                c2 in -5.0f64..5.0,
                dt0 in 0.05f64..0.5,
                tau in -3.0f64..3.0,
                dx in -10.0f64..10.0,
            ) {
                let times: Vec<f64> = (0..12).map(|i| i as f64 * dt0).collect();
                let pos: Vec<f64> =
                    times.iter().map(|t| c0 + c1 * t + c2 * t * t).collect();
                let base = fit_parabola(&times, &pos).unwrap();
                prop_assert!((base.acceleration - 2.0 * c2).abs() < 1e-8);

                let t_shift: Vec<f64> = times.iter().map(|t| t + tau).collect();
                let shifted_t = fit_parabola(&t_shift, &pos).unwrap();
                prop_assert!(
                    (shifted_t.acceleration - base.acceleration).abs() < 1e-7
                );

                let pos_shift: Vec<f64> = pos.iter().map(|p| p + dx).collect();
                let shifted_x = fit_parabola(&times, &pos_shift).unwrap();
                prop_assert!(
                    (shifted_x.acceleration - base.acceleration).abs() < 1e-8
                );
                prop_assert!((shifted_x.x0 - (base.x0 + dx)).abs() < 1e-8);
            }

            #[test]
            fn norm_scales_quadratically(scale in 0.1f64..10.0) {
                let grid = Grid1D::new(-5.0, 5.0, 128).unwrap();
                let f = gaussian_field(grid, 0.0);
                let mut g = f.clone();
                for a in g.amps_mut() {
                    *a *= scale;
                }
                let ratio = norm(&g) / norm(&f);
                prop_assert!((ratio - scale * scale).abs() < 1e-10 * scale * scale);
            }

            #[test]
            fn peak_refinement_stays_within_half_a_cell(center in -3.0f64..3.0) {
                let grid = Grid1D::new(-10.0, 10.0, 256).unwrap();
                let f = gaussian_field(grid, center);
                let p = peak_position(&f);
                prop_assert!((p.x - center).abs() < 0.5 * grid.dx());
            }
        }
    }
}
