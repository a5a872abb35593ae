//! Referees the two frozen constants in the closed-form constructions by
//! pitting candidate values against each other with PDE residual ladders.
//!
//! Each candidate swaps only the global phase rate of the analytic wave; a
//! correct rate makes the residual shrink at the stencil's order, a wrong
//! one leaves an O(1) defect. The decision rule never averages or guesses:
//! a candidate is selected only when it is the unique one that converges.

use selfacc_core::family::{nonlinear_mu_shift, SolutionFamily, NONLINEAR_MU_SHIFT_COEFF};
use selfacc_core::potential::{ComovingPotential, NonlinearTerm};
use selfacc_core::residual::{
    adjudicate, residual_ladder, ConvergenceCriteria, DecisionRecord, PdeProbe, ShiftedMuWave,
    StencilOrder,
};
use selfacc_core::CoreError;

/// Named decision plus whether it agrees with the constant the library
/// actually ships.
pub struct RefereeFinding {
    pub file_stem: &'static str,
    pub record: DecisionRecord,
    /// Index into the record's ladders that the shipped constant implies.
    pub shipped_index: usize,
}

impl RefereeFinding {
    pub fn agrees_with_shipped(&self) -> bool {
        self.record.selected == Some(self.shipped_index)
    }
}

fn probe_at(frame_center: f64, half_width: f64, t: f64) -> PdeProbe {
    PdeProbe {
        x_lo: frame_center - half_width,
        x_hi: frame_center + half_width,
        n_samples: 21,
        t,
        dx: 0.01,
        dt: 1e-3,
        order: StencilOrder::Second,
    }
}

/// Sign of the dark soliton's phase rate. The envelope equation fixes the
/// magnitude to sigma^2; the two sign candidates propagate identically in
/// everything but the rate, so only the residual can separate them.
pub fn referee_rate_sign() -> Result<RefereeFinding, CoreError> {
    let sigma = 1.0;
    let fam = SolutionFamily::dark_soliton(sigma, 1.0)?;
    let pot = ComovingPotential::from_family(&fam);
    let t = 0.7;
    let probe = probe_at(fam.frame().x_center(t), 2.0, t);
    let criteria = ConvergenceCriteria::default();

    let mu_plus = sigma * sigma;
    let shipped_mu = fam.frame().mu;
    let plus = residual_ladder(
        &ShiftedMuWave::new(&fam, mu_plus),
        &pot,
        None,
        &probe,
        3,
        "rate +sigma^2",
        &criteria,
    )?;
    let minus = residual_ladder(
        &ShiftedMuWave::new(&fam, -mu_plus),
        &pot,
        None,
        &probe,
        3,
        "rate -sigma^2",
        &criteria,
    )?;
    let record = adjudicate("dark-soliton phase rate sign", vec![plus, minus]);
    Ok(RefereeFinding {
        file_stem: "decision_rate_sign",
        record,
        shipped_index: if shipped_mu > 0.0 { 0 } else { 1 },
    })
}

/// Coefficient in the nonlinear phase-rate shift `mu -> mu + c sigma_nl`.
/// A flat-modulus wave feels the nonlinearity as a constant potential, so
/// exactly one integer coefficient closes the equation.
pub fn referee_shift_coefficient() -> Result<RefereeFinding, CoreError> {
    let fam = SolutionFamily::const_intensity_inv_harm(1.0, 1.0, 0.25)?;
    let pot = ComovingPotential::from_family(&fam);
    let nl = NonlinearTerm::new(0.1, 2.0)?;
    let mu = fam.frame().mu;
    let t = 0.4;
    let probe = probe_at(fam.frame().x_center(t), 1.5, t);
    let criteria = ConvergenceCriteria::default();

    let candidates = [1.0, 2.0];
    let mut ladders = Vec::new();
    for c in candidates {
        ladders.push(residual_ladder(
            &ShiftedMuWave::new(&fam, mu + c * 0.1),
            &pot,
            Some(&nl),
            &probe,
            3,
            &format!("shift coefficient {c}"),
            &criteria,
        )?);
    }
    let record = adjudicate("nonlinear phase-rate shift coefficient", ladders);
    let shipped_index = candidates
        .iter()
        .position(|&c| {
            // The shipped coefficient must match a candidate exactly; this
            // is an identity check, not a tolerance.
            c == NONLINEAR_MU_SHIFT_COEFF
                && nonlinear_mu_shift(mu, 0.1) == mu + c * 0.1
        })
        .expect("shipped coefficient is one of the adjudicated candidates");
    Ok(RefereeFinding {
        file_stem: "decision_shift_coefficient",
        record,
        shipped_index,
    })
}

pub fn referee_all() -> Result<Vec<RefereeFinding>, CoreError> {
    Ok(vec![referee_rate_sign()?, referee_shift_coefficient()?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_decisions_select_the_shipped_constants() {
        for finding in referee_all().unwrap() {
            let idx = finding.record.require_selection().unwrap_or_else(|e| {
                panic!("{}: no selection: {e}", finding.record.what)
            });
            assert_eq!(
                idx, finding.shipped_index,
                "{} selected {:?}, shipped constant implies {}",
                finding.record.what, finding.record.selected, finding.shipped_index
            );
            assert!(finding.agrees_with_shipped());
        }
    }

    #[test]
    fn losing_candidates_fail_by_a_wide_margin() {
        // The rejection should be a cliff, not a close call: the losing
        // ladder's floor must sit orders of magnitude above the winner.
        for finding in referee_all().unwrap() {
            let rec = &finding.record;
            let winner = rec.selected.unwrap();
            for (i, ladder) in rec.ladders.iter().enumerate() {
                if i == winner {
                    assert!(ladder.converged);
                    continue;
                }
                assert!(!ladder.converged, "{}: loser converged", rec.what);
                assert!(
                    ladder.final_l_inf > 1e-2,
                    "{}: losing floor {} too low for a clean rejection",
                    rec.what,
                    ladder.final_l_inf
                );
            }
        }
    }
}
