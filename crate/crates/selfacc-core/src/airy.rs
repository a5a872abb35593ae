//! Airy function `Ai` and its derivative on the real line.
//!
//! Three regimes: a Maclaurin double series for `|x| <= 7`, and the standard
//! large-argument expansions on either side beyond that. The switch point is
//! chosen so the asymptotic series still has a sub-1e-10 smallest term while
//! the Maclaurin cancellation error has not yet grown past it; absolute
//! accuracy is better than 1e-10 for `x` in `[-15, 8]` and degrades slowly
//! outside.

use std::f64::consts::PI;

const AI_0: f64 = 0.355_028_053_887_817_239_26;
const AIP_0: f64 = -0.258_819_403_792_806_798_41;
const SQRT_PI: f64 = 1.772_453_850_905_516_027_3;
const SWITCH: f64 = 7.0;

pub fn airy_ai(x: f64) -> f64 {
    airy_ai_and_prime(x).0
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy_ai_and_prime(x).1
}

/// Evaluates `(Ai(x), Ai'(x))` in one pass; the two share all series work.
pub fn airy_ai_and_prime(x: f64) -> (f64, f64) {
    if !x.is_finite() {
        return (f64::NAN, f64::NAN);
    }
    if x.abs() <= SWITCH {
        maclaurin(x)
    } else if x > 0.0 {
        asymptotic_positive(x)
    } else {
        asymptotic_negative(x)
    }
}

/// `Ai = AI_0 * f + AIP_0 * g` where `f` and `g` are the two standard
/// power-series solutions of `y'' = x y` with `f(0)=1, g(0)=0, g'(0)=1`.
fn maclaurin(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    let mut f_sum = 1.0;
    let mut g_sum = x;
    let mut fp_sum = 0.0;
    let mut gp_sum = 1.0;
    let mut tf = 1.0;
    let mut tg = x;
    let mut tgp = 1.0;
    // f' term for k = 1 is x^2 / 2; later terms follow the ratio below.
    let mut tfp = x * x / 2.0;
    fp_sum += tfp;

    for k in 0..200usize {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
        tg *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
        tgp *= x3 / ((3.0 * kf + 1.0) * (3.0 * kf + 3.0));
        f_sum += tf;
        g_sum += tg;
        gp_sum += tgp;
        if k >= 1 {
            tfp *= (kf + 1.0) * x3 / (kf * (3.0 * kf + 2.0) * (3.0 * kf + 3.0));
            fp_sum += tfp;
        }
        let scale = f_sum.abs() + g_sum.abs() + fp_sum.abs() + gp_sum.abs() + 1.0;
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-18 * scale {
            break;
        }
    }

    (
        AI_0 * f_sum + AIP_0 * g_sum,
        AI_0 * fp_sum + AIP_0 * gp_sum,
    )
}

/// Coefficients u_k, v_k of the large-argument expansions, generated until
/// the term `u_k / zeta^k` stops shrinking or drops below 1e-18.
fn asymptotic_coeffs(zeta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut us = vec![1.0];
    let mut vs = vec![1.0];
    let mut u = 1.0;
    let mut term = 1.0;
    for k in 0..60usize {
        let kf = k as f64;
        let next_u = u * (6.0 * kf + 1.0) * (6.0 * kf + 5.0) / (72.0 * (kf + 1.0));
        let next_term = next_u / zeta.powi(k as i32 + 1);
        if next_term >= term || next_term < 1e-18 {
            if next_term < 1e-18 {
                let kp = kf + 1.0;
                us.push(next_u);
                vs.push(next_u * (6.0 * kp + 1.0) / (1.0 - 6.0 * kp));
            }
            break;
        }
        u = next_u;
        term = next_term;
        let kp = kf + 1.0;
        us.push(u);
        vs.push(u * (6.0 * kp + 1.0) / (1.0 - 6.0 * kp));
    }
    (us, vs)
}

fn asymptotic_positive(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (us, vs) = asymptotic_coeffs(zeta);
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut sign = 1.0;
    let mut zp = 1.0;
    for (u, v) in us.iter().zip(vs.iter()) {
        su += sign * u / zp;
        sv += sign * v / zp;
        sign = -sign;
        zp *= zeta;
    }
    let pre = (-zeta).exp() / (2.0 * SQRT_PI);
    let x4 = x.powf(0.25);
    (pre / x4 * su, -pre * x4 * sv)
}

fn asymptotic_negative(x: f64) -> (f64, f64) {
    let z = -x;
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let (us, vs) = asymptotic_coeffs(zeta);
    // Split into the even (P, R) and odd (Q, S) sub-series.
    let mut p = 0.0;
    let mut q = 0.0;
    let mut r = 0.0;
    let mut s = 0.0;
    let mut zp = 1.0;
    for (k, (u, v)) in us.iter().zip(vs.iter()).enumerate() {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * u / zp;
            r += sign * v / zp;
        } else {
            q += sign * u / zp;
            s += sign * v / zp;
        }
        zp *= zeta;
    }
    let phase = zeta - PI / 4.0;
    let (sin_p, cos_p) = phase.sin_cos();
    let z4 = z.powf(0.25);
    (
        (cos_p * p + sin_p * q) / (SQRT_PI * z4),
        (z4 / SQRT_PI) * (sin_p * r - cos_p * s),
    )
}
