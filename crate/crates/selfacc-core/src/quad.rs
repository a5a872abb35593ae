use crate::error::CoreError;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, with Richardson correction on accepted panels. Reversed limits
/// negate the result. Non-finite integrand values abort rather than being
/// silently absorbed.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, CoreError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(CoreError::invalid_parameter(
            "integration limits must be finite",
        ));
    }
    if !(tol > 0.0) {
        return Err(CoreError::invalid_parameter(
            "integration tolerance must be positive",
        ));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (lo + hi);
    let fa = eval(&f, lo, lo, hi)?;
    let fm = eval(&f, m, lo, hi)?;
    let fb = eval(&f, hi, lo, hi)?;
    let s = simpson(lo, hi, fa, fm, fb);
    let v = adapt(&f, lo, hi, fa, fm, fb, s, tol, MAX_DEPTH)?;
    Ok(sign * v)
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64, a: f64, b: f64) -> Result<f64, CoreError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(CoreError::QuadratureFailure {
            a,
            b,
            reason: format!("integrand not finite at x = {x}"),
        })
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, CoreError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(f, lm, a, b)?;
    let frm = eval(f, rm, a, b)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(CoreError::QuadratureFailure {
            a,
            b,
            reason: "max refinement depth reached".to_string(),
        });
    }
    let vl = adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let vr = adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(vl + vr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_near_exact() {
        let v = integrate(|x| x * x, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sine_over_half_period() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn narrow_gaussian_needs_adaptivity() {
        // integral of exp(-100 x^2) over the real line is sqrt(pi)/10;
        // the tails beyond +-10 are negligible at this tolerance.
        let v = integrate(|x| (-100.0 * x * x).exp(), -10.0, 10.0, 1e-12).unwrap();
        let want = std::f64::consts::PI.sqrt() / 10.0;
        assert!((v - want).abs() < 1e-11, "got {v}, want {want}");
    }

    #[test]
    fn reversed_limits_negate() {
        let fwd = integrate(|x| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        let rev = integrate(|x| x.exp(), 1.0, 0.0, 1e-12).unwrap();
        assert!((fwd + rev).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(CoreError::QuadratureFailure { .. })));
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|x| x, 3.0, 3.0, 1e-10).unwrap(), 0.0);
    }
}
