//! Modified Bessel functions of order zero.
//!
//! `K0` is needed for the two-dimensional free resolvent kernel
//! `K0(r sqrt(-z)) / 2pi`, which has complex argument off the negative axis.
//! The radial (s-wave) two-dimensional kernel also needs `I0`, but only for
//! real arguments.
//!
//! Evaluation regions for `K0(t)`, `Re t > 0`:
//!
//! * `|t| <= 2`: ascending series. The terms are bounded by
//!   `(|t|^2/4)^k / (k!)^2 * H_k`, so 30 terms leave a remainder below 1e-40.
//! * `2 < |t| < 17`: Steed's continued fraction (CF2) for `K_nu` at `nu = 0`.
//! * `|t| >= 17`: Hankel asymptotic expansion, truncated at the smallest term;
//!   the truncation error is below `e^{-2|t|} < 1e-14`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 17.0;
const CF2_MAX_ITER: usize = 100_000;

fn check_argument(t: Complex64) -> Result<()> {
    if !(t.re.is_finite() && t.im.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite Bessel argument {t}")));
    }
    if t.norm() == 0.0 {
        return Err(Error::InvalidInput("K0 is singular at t = 0".into()));
    }
    if t.re < 0.0 {
        return Err(Error::InvalidInput(format!(
            "K0 evaluated outside the right half-plane: t = {t}"
        )));
    }
    Ok(())
}

/// `e^t K0(t)` for `Re t >= 0`, `t != 0`.
pub fn bessel_k0_scaled(t: Complex64) -> Result<Complex64> {
    check_argument(t)?;
    let modulus = t.norm();
    if modulus <= SERIES_LIMIT {
        Ok(k0_series(t) * t.exp())
    } else if modulus < ASYMPTOTIC_LIMIT {
        k0_steed_scaled(t)
    } else {
        Ok(k0_asymptotic_scaled(t))
    }
}

/// `K0(t)` for `Re t >= 0`, `t != 0`.
pub fn bessel_k0(t: Complex64) -> Result<Complex64> {
    if t.norm() <= SERIES_LIMIT {
        check_argument(t)?;
        return Ok(k0_series(t));
    }
    Ok(bessel_k0_scaled(t)? * (-t).exp())
}

/// `K0(x)` for real `x > 0`.
pub fn bessel_k0_real(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("K0 needs x > 0, got {x}")));
    }
    Ok(bessel_k0(Complex64::new(x, 0.0))?.re)
}

/// `e^x K0(x)` for real `x > 0`.
pub fn bessel_k0_scaled_real(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("K0 needs x > 0, got {x}")));
    }
    Ok(bessel_k0_scaled(Complex64::new(x, 0.0))?.re)
}

/// `e^{-x} I0(x)` for real `x >= 0`.
pub fn bessel_i0_scaled_real(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("I0 scaled needs x >= 0, got {x}")));
    }
    if x <= 15.0 {
        let quarter = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= quarter / (kf * kf);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        Ok(sum * (-x).exp())
    } else {
        // e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! 8^k x^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let odd = (2 * k - 1) as f64;
            let next = term * odd * odd / (8.0 * k as f64 * x);
            if next > term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        Ok(sum / (2.0 * PI * x).sqrt())
    }
}

/// `I0(x)` for real `x`.
pub fn bessel_i0_real(x: f64) -> Result<f64> {
    let ax = x.abs();
    Ok(bessel_i0_scaled_real(ax)? * ax.exp())
}

fn k0_series(t: Complex64) -> Complex64 {
    let quarter = t * t * 0.25;
    let log_term = (t * 0.5).ln() + EULER_GAMMA;
    let mut power = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    let mut i0 = Complex64::new(1.0, 0.0);
    let mut tail = Complex64::new(0.0, 0.0);
    for k in 1..60 {
        let kf = k as f64;
        power *= quarter / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += power;
        tail += power * harmonic;
        if power.norm() * harmonic < 1e-18 * (i0.norm() + tail.norm()) {
            break;
        }
    }
    -log_term * i0 + tail
}

/// Steed's method: CF2 for `K_0` (Temme's normalisation `s`), scaled by `e^t`.
fn k0_steed_scaled(t: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let a1 = 0.25;
    let mut b = (one + t) * 2.0;
    let mut d = one / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = Complex64::new(a1, 0.0);
    let mut a = -a1;
    let mut s = one + q * delh;
    let mut converged = false;
    for i in 2..CF2_MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -c * a / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = one / (b + d * a);
        delh = (b * d - one) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged(format!("K0 continued fraction at t = {t}")));
    }
    Ok((Complex64::new(PI, 0.0) / (t * 2.0)).sqrt() / s)
}

fn k0_asymptotic_scaled(t: Complex64) -> Complex64 {
    let inv = Complex64::new(1.0, 0.0) / t;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = 1.0;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        let next = term * inv * (-(odd * odd) / (8.0 * k as f64));
        let size = next.norm();
        if size > last {
            break;
        }
        term = next;
        sum += term;
        last = size;
        if size < 1e-17 * sum.norm() {
            break;
        }
    }
    (Complex64::new(PI, 0.0) / (t * 2.0)).sqrt() * sum
}
