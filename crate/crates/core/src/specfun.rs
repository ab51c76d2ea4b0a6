//! Real-argument cylinder functions J0, J1, Y0 and the Hankel function H0^(2).
//!
//! Three regimes, all accurate to ~1e-14 absolute:
//! - `x <= SERIES_MAX`: ascending power series.
//! - `SERIES_MAX < x <= ASYMPTOTIC_MIN`: Miller backward recurrence normalised by
//!   `J0 + 2 sum J_2k = 1`, with Y0 from the Neumann series over the same `J_2k`.
//! - `x > ASYMPTOTIC_MIN`: Hankel asymptotic expansion.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::scan::C64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub(crate) const SERIES_MAX: f64 = 2.0;
pub(crate) const ASYMPTOTIC_MIN: f64 = 25.0;

/// First positive zero of J1; `k_s a` must stay below it for the Born cell integral.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512;

fn check_nonnegative(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

fn check_positive(x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("argument must be finite and > 0, got {x}")));
    }
    Ok(())
}

pub fn bessel_j0(x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(j0(x))
}

pub fn bessel_j1(x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(j1(x))
}

pub fn bessel_y0(x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(j0_y0(x).1)
}

/// `H0^(2)(x) = J0(x) - j Y0(x)`.
pub fn hankel2_0(x: f64) -> Result<C64> {
    check_positive(x)?;
    let (j, y) = j0_y0(x);
    Ok(C64::new(j, -y))
}

pub(crate) fn j0(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x <= SERIES_MAX {
        series_j0(x)
    } else if x <= ASYMPTOTIC_MIN {
        miller(x).0
    } else {
        asymptotic(x, 0).0
    }
}

pub(crate) fn j1(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x <= SERIES_MAX {
        series_j1(x)
    } else if x <= ASYMPTOTIC_MIN {
        miller(x).1
    } else {
        asymptotic(x, 1).0
    }
}

/// `(J0(x), Y0(x))` for `x > 0`.
pub(crate) fn j0_y0(x: f64) -> (f64, f64) {
    if x <= SERIES_MAX {
        let j = series_j0(x);
        (j, series_y0(x, j))
    } else if x <= ASYMPTOTIC_MIN {
        let (j, _, y) = miller(x);
        (j, y)
    } else {
        asymptotic(x, 0)
    }
}

pub(crate) fn series_j0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

pub(crate) fn series_j1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -q / (k * (k + 1)) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    0.5 * x * sum
}

pub(crate) fn series_y0(x: f64, j0: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..60 {
        term *= -q / (k * k) as f64;
        harmonic += 1.0 / k as f64;
        let contribution = -harmonic * term;
        sum += contribution;
        if contribution.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + sum)
}

/// Miller backward recurrence; returns `(J0, J1, Y0)`.
pub(crate) fn miller(x: f64) -> (f64, f64, f64) {
    let m = 2 * ((1.2 * x + 30.0) as usize / 2);
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k, starting at k = m (even)
    let half = m / 2;
    let sign = |h: usize| if h.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut even_sum = cur;
    let mut neumann = sign(half) * cur / half as f64;
    let mut j1 = 0.0;
    for k in (1..=m).rev() {
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx >= 2 && idx % 2 == 0 {
            even_sum += cur;
            neumann += sign(idx / 2) * cur / (idx / 2) as f64;
        } else if idx == 1 {
            j1 = cur;
        }
        if cur.abs() > 1e250 {
            const S: f64 = 1e-250;
            cur *= S;
            next *= S;
            even_sum *= S;
            neumann *= S;
            j1 *= S;
        }
    }
    let norm = cur + 2.0 * even_sum;
    let j0 = cur / norm;
    let y0 = 2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0) - 4.0 / PI * neumann / norm;
    (j0, j1 / norm, y0)
}

/// Hankel asymptotic expansion of order `nu` in {0, 1}; returns `(J_nu, Y_nu)`.
pub(crate) fn asymptotic(x: f64, nu: u32) -> (f64, f64) {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut last = f64::INFINITY;
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        let s = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += s * term;
        } else {
            q += s * term;
        }
        if mag < 1e-17 {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    // chi = x - (2 nu + 1) pi / 4
    let (cos_chi, sin_chi) = match nu {
        0 => ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2),
        _ => ((s - c) * FRAC_1_SQRT_2, (-s - c) * FRAC_1_SQRT_2),
    };
    let amp = (2.0 / (PI * x)).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_reference_points() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert!(bessel_j0(2.404825557695773).unwrap().abs() <= 1e-10);
        assert!((bessel_j0(10.0).unwrap() + 0.2459357644513483).abs() <= 1e-10);
    }

    #[test]
    fn j1_reference_points() {
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        assert!(bessel_j1(3.8317059702075123).unwrap().abs() <= 1e-10);
        assert!((bessel_j1(1.0).unwrap() - 0.4400505857449335).abs() <= 1e-10);
    }

    #[test]
    fn y0_reference_points() {
        assert!(bessel_y0(0.8935769662791675).unwrap().abs() <= 1e-10);
        assert!((bessel_y0(1.0).unwrap() - 0.08825696421567696).abs() <= 1e-10);
        assert!(bessel_y0(1e-6).unwrap() < -8.0);
    }

    #[test]
    fn hankel_reference_points() {
        let h = hankel2_0(1.0).unwrap();
        assert!((h.re - 0.7651976866).abs() < 1e-10);
        assert!((h.im + 0.0882569642).abs() < 1e-10);
        let m = hankel2_0(100.0).unwrap().norm();
        assert!((m / 0.0797885 - 1.0).abs() < 0.005);
        let at_zero = hankel2_0(0.8935769662791675).unwrap();
        assert!(at_zero.im.abs() < 1e-10);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_j0(-1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_j1(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(bessel_y0(0.0), Err(Error::Domain(_))));
        assert!(matches!(hankel2_0(-3.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_j0(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn branches_agree_at_switch_points() {
        let x = SERIES_MAX;
        let (mj0, mj1, my0) = miller(x);
        let sj0 = series_j0(x);
        assert!((mj0 - sj0).abs() <= 1e-10);
        assert!((mj1 - series_j1(x)).abs() <= 1e-10);
        assert!((my0 - series_y0(x, sj0)).abs() <= 1e-10);

        let x = ASYMPTOTIC_MIN;
        let (mj0, mj1, my0) = miller(x);
        let (aj0, ay0) = asymptotic(x, 0);
        let (aj1, _) = asymptotic(x, 1);
        assert!((mj0 - aj0).abs() <= 1e-10, "{mj0} {aj0}");
        assert!((mj1 - aj1).abs() <= 1e-10, "{mj1} {aj1}");
        assert!((my0 - ay0).abs() <= 1e-10, "{my0} {ay0}");
    }

    #[test]
    fn derivative_identity_finite_difference() {
        // dJ0/dx = -J1 at 100 pseudo-random points in [0.1, 50]
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..100 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let x = 0.1 + 49.9 * (state >> 11) as f64 / (1u64 << 53) as f64;
            let h = 1e-5;
            let d = (j0(x + h) - j0(x - h)) / (2.0 * h);
            assert!((d + j1(x)).abs() <= 1e-6, "x={x}");
        }
    }

    #[test]
    fn large_argument_magnitude() {
        for x in [1e3, 5e3, 1e4] {
            let (j, y) = j0_y0(x);
            let m = (j * j + y * y).sqrt();
            assert!((m / (2.0 / (PI * x)).sqrt() - 1.0).abs() < 1e-3);
        }
    }
}
