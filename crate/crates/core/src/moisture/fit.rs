use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;

/// Which exponent sign the FSV-vs-SM model uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelForm {
    /// `a (1 - exp(-b sm))`, increasing and saturating at `a` for `a, b > 0`.
    #[default]
    Saturating,
    /// `a (1 - exp(+b sm))`.
    Printed,
}

impl ModelForm {
    fn sign(self) -> f64 {
        match self {
            ModelForm::Saturating => 1.0,
            ModelForm::Printed => -1.0,
        }
    }

    pub fn eval(self, a: f64, b: f64, sm: f64) -> f64 {
        -a * (-self.sign() * b * sm).exp_m1()
    }

    /// Solves `eval(a, b, sm) = fsv` for `sm`; `None` where no non-negative finite solution exists.
    pub fn invert(self, a: f64, b: f64, fsv: f64) -> Option<f64> {
        let sign_ok = match self {
            ModelForm::Saturating => a > 0.0,
            ModelForm::Printed => a < 0.0,
        };
        if !(b > 0.0) || !sign_ok {
            return None;
        }
        let ratio = fsv / a;
        if !(ratio < 1.0) {
            return None;
        }
        let sm = -(-ratio).ln_1p() / (self.sign() * b);
        (sm.is_finite() && sm >= 0.0).then_some(sm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub a: f64,
    pub b: f64,
    /// Sum of squared residuals at the optimum.
    pub residual: f64,
    pub iterations: usize,
}

/// Least-squares fit of `fsv = a (1 - exp(-b sm))` with `b > 0`.
pub fn fit_exponential(samples: &[(f64, f64)]) -> Result<ExpFit> {
    fit_exponential_form(samples, ModelForm::Saturating)
}

/// Levenberg-Marquardt on `(a, ln b)`, so `b` stays positive.
pub fn fit_exponential_form(samples: &[(f64, f64)], form: ModelForm) -> Result<ExpFit> {
    check_samples(samples)?;
    let (a0, b0) = initial_guess(samples, form)?;
    let sign = form.sign();

    let sse = |a: f64, b: f64| -> f64 {
        samples.iter().map(|&(s, y)| (y - form.eval(a, b, s)).powi(2)).sum()
    };
    let scale: f64 = samples.iter().map(|&(_, y)| y * y).sum();

    let (mut a, mut beta) = (a0, b0.ln());
    let mut current = sse(a, b0);
    let mut lambda = 1e-3;
    for iteration in 1..=MAX_ITERATIONS {
        let b = beta.exp();
        // normal equations for the 2-parameter problem
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(s, y) in samples {
            let e = (-sign * b * s).exp();
            let da = 1.0 - e;
            let dbeta = a * sign * s * e * b;
            let r = y - a * da;
            jaa += da * da;
            jab += da * dbeta;
            jbb += dbeta * dbeta;
            ga += da * r;
            gb += dbeta * r;
        }
        let gradient = ga.abs().max(gb.abs());
        if current <= 1e-30 * scale || gradient <= 1e-15 * scale.sqrt() * (jaa + jbb).sqrt() {
            return Ok(ExpFit { a, b, residual: current, iterations: iteration - 1 });
        }
        loop {
            let (maa, mbb) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = maa * mbb - jab * jab;
            if !(det.is_finite() && det > 0.0) {
                lambda *= 10.0;
                if lambda > 1e20 {
                    return Err(stalled(a, b, current, iteration));
                }
                continue;
            }
            let da = (mbb * ga - jab * gb) / det;
            let dbeta = (maa * gb - jab * ga) / det;
            let (na, nbeta) = (a + da, beta + dbeta);
            let trial = sse(na, nbeta.exp());
            if trial.is_finite() && trial <= current {
                let small = da.abs() <= 1e-14 * a.abs().max(1e-300) && dbeta.abs() <= 1e-14;
                a = na;
                beta = nbeta;
                let improvement = current - trial;
                let damped = lambda > 1e-2;
                current = trial;
                lambda = (lambda / 10.0).max(1e-15);
                if small || (!damped && improvement <= 1e-28 * scale) {
                    return Ok(ExpFit { a, b: beta.exp(), residual: current, iterations: iteration });
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                // no descent direction left: stationary up to rounding
                return Ok(ExpFit { a, b: beta.exp(), residual: current, iterations: iteration });
            }
        }
        if !(a.is_finite() && beta.is_finite()) || beta.abs() > 700.0 {
            return Err(stalled(a, beta.exp(), current, iteration));
        }
    }
    Err(Error::Fit(format!(
        "no convergence after {MAX_ITERATIONS} iterations (a = {a}, b = {}, sse = {current})",
        beta.exp()
    )))
}

fn stalled(a: f64, b: f64, sse: f64, iteration: usize) -> Error {
    Error::Fit(format!(
        "fit diverged at iteration {iteration} (a = {a}, b = {b}, sse = {sse})"
    ))
}

fn check_samples(samples: &[(f64, f64)]) -> Result<()> {
    if samples.iter().any(|&(s, y)| !(s.is_finite() && y.is_finite())) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let mut levels: Vec<f64> = samples.iter().map(|&(s, _)| s).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 distinct SM levels, got {}",
            levels.len()
        )));
    }
    let (lo, hi) = end_means(samples);
    if !(hi > lo) {
        return Err(Error::Fit(format!(
            "FSV does not increase with SM (mean {lo} at lowest level, {hi} at highest)"
        )));
    }
    Ok(())
}

/// Mean FSV at the lowest and highest SM level, with those levels.
fn end_points(samples: &[(f64, f64)]) -> ((f64, f64), (f64, f64)) {
    let s_min = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let s_max = samples.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mean_at = |level: f64| {
        let ys: Vec<f64> = samples.iter().filter(|p| p.0 == level).map(|p| p.1).collect();
        ys.iter().sum::<f64>() / ys.len() as f64
    };
    ((s_min, mean_at(s_min)), (s_max, mean_at(s_max)))
}

fn end_means(samples: &[(f64, f64)]) -> (f64, f64) {
    let ((_, lo), (_, hi)) = end_points(samples);
    (lo, hi)
}

fn initial_guess(samples: &[(f64, f64)], form: ModelForm) -> Result<(f64, f64)> {
    let y_max = samples.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let ((s1, y1), (s2, y2)) = end_points(samples);
    match form {
        ModelForm::Saturating => {
            if !(y_max > 0.0) {
                return Err(Error::Fit("FSV values are not positive".into()));
            }
            let a0 = 1.05 * y_max;
            let b0 = two_point_rate(s1, y1, s2, y2)
                .unwrap_or_else(|| -(-(y2 / a0).min(0.99)).ln_1p() / s2.max(f64::MIN_POSITIVE));
            Ok((a0, b0))
        }
        ModelForm::Printed => {
            let b0 = 1.0 / s2.abs().max(1e-12);
            let a0 = y2 / (-(b0 * s2).exp_m1());
            Ok((a0, b0))
        }
    }
}

/// Solves `y2 / y1 = (1 - e^{-b s2}) / (1 - e^{-b s1})` for `b > 0` by bisection.
/// The ratio falls from `s2/s1` (b -> 0) to 1 (b -> inf), so a root exists only
/// for observed ratios strictly inside that range.
fn two_point_rate(s1: f64, y1: f64, s2: f64, y2: f64) -> Option<f64> {
    if !(s1 > 0.0 && s2 > s1 && y1 > 0.0 && y2 > y1) {
        return None;
    }
    let target = y2 / y1;
    if target >= s2 / s1 {
        return None;
    }
    let ratio = |b: f64| (-b * s2).exp_m1() / (-b * s1).exp_m1();
    let (mut lo, mut hi) = (1e-12 / s2, 1.0 / s1);
    while ratio(hi) > target {
        hi *= 2.0;
        if hi > 1e6 / s1 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEVELS: [f64; 8] = [12.5, 25.0, 37.5, 50.0, 62.5, 75.0, 87.5, 100.0];

    fn synth(a: f64, b: f64) -> Vec<(f64, f64)> {
        LEVELS.iter().map(|&s| (s, ModelForm::Saturating.eval(a, b, s))).collect()
    }

    #[test]
    fn recovers_generating_parameters() {
        for (a, b) in [(0.05, 0.04547), (0.1803, 0.0793), (1.0, 0.005), (3.0, 0.3)] {
            let fit = fit_exponential(&synth(a, b)).unwrap();
            assert!(((fit.a - a) / a).abs() < 1e-9, "a {} vs {a}", fit.a);
            assert!(((fit.b - b) / b).abs() < 1e-9, "b {} vs {b}", fit.b);
        }
    }

    #[test]
    fn scaling_data_scales_a_only() {
        let base = synth(0.05, 0.04547);
        let scaled: Vec<_> = base.iter().map(|&(s, y)| (s, 12.0 * y)).collect();
        let f0 = fit_exponential(&base).unwrap();
        let f1 = fit_exponential(&scaled).unwrap();
        assert!((f1.a / f0.a - 12.0).abs() < 1e-9);
        assert!((f1.b / f0.b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_input() {
        let flat: Vec<_> = LEVELS.iter().map(|&s| (s, 0.3)).collect();
        assert!(matches!(fit_exponential(&flat), Err(Error::Fit(_))));
        assert!(fit_exponential(&[(10.0, 0.1), (20.0, 0.2)]).is_err());
        let falling: Vec<_> = LEVELS.iter().map(|&s| (s, 1.0 / s)).collect();
        assert!(fit_exponential(&falling).is_err());
    }

    #[test]
    fn near_linear_data_still_fits() {
        let data: Vec<_> = LEVELS.iter().map(|&s| (s, 0.002 * s)).collect();
        match fit_exponential(&data) {
            Ok(fit) => assert!(fit.b > 0.0 && fit.residual < 1e-8),
            Err(Error::Fit(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn two_point_rate_inverts_ratio() {
        let b = 0.0793;
        let y = |s: f64| ModelForm::Saturating.eval(1.0, b, s);
        let got = two_point_rate(12.5, y(12.5), 100.0, y(100.0)).unwrap();
        assert!((got - b).abs() < 1e-12);
        assert!(two_point_rate(10.0, 1.0, 20.0, 2.5).is_none());
    }

    #[test]
    fn inversion_matches_forms() {
        let (a, b) = (0.1803, 0.0793);
        for &s in &LEVELS {
            let y = ModelForm::Saturating.eval(a, b, s);
            assert!((ModelForm::Saturating.invert(a, b, y).unwrap() - s).abs() < 1e-9);
        }
        assert_eq!(ModelForm::Saturating.invert(a, b, a), None);
        assert_eq!(ModelForm::Saturating.invert(a, -b, 0.1), None);
        // printed form grows without bound for a < 0
        let y = ModelForm::Printed.eval(-0.01, 0.02, 40.0);
        assert!(y > 0.0);
        assert!((ModelForm::Printed.invert(-0.01, 0.02, y).unwrap() - 40.0).abs() < 1e-9);
        assert_eq!(ModelForm::Printed.invert(0.05, 0.04547, 0.045), None);
    }

    #[test]
    fn printed_form_fits_convex_growth() {
        let data: Vec<_> = LEVELS
            .iter()
            .map(|&s| (s, ModelForm::Printed.eval(-0.01, 0.02, s)))
            .collect();
        let fit = fit_exponential_form(&data, ModelForm::Printed).unwrap();
        assert!((fit.a + 0.01).abs() < 1e-8 && (fit.b - 0.02).abs() < 1e-8);
    }
}
