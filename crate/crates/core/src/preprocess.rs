//! Zero timing and SVD clutter reduction.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ThinSvd;
use crate::scan::{BScan, C64};

/// Relative gap below which two singular values are treated as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Outcome of [`clutter_svd_remove`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClutterReport {
    pub removed_count: usize,
    /// All singular values of the input B-scan, non-increasing.
    pub singular_values: Vec<f64>,
    /// `sum_{i<k} s_i^2 / sum s_i^2`.
    pub removed_energy_fraction: f64,
    /// The k-th and (k+1)-th singular values coincide, so the removed subspace is not unique.
    pub ambiguous_cutoff: bool,
}

/// Removes a fixed system delay `t0` by multiplying every sample by `exp(+j w t0)`.
pub fn zero_timing(bscan: &BScan, t0: f64) -> Result<BScan> {
    if !(t0.is_finite() && t0 >= 0.0) {
        return Err(Error::Parameter(format!("t0 must be >= 0, got {t0}")));
    }
    if t0 == 0.0 {
        return Ok(bscan.clone());
    }
    Ok(apply_delay_phase(bscan, t0))
}

/// Multiplies column `f` by `exp(+j w_f t)`; a negative `t` delays the data.
pub(crate) fn apply_delay_phase(bscan: &BScan, t: f64) -> BScan {
    let sweep = *bscan.sweep();
    let phases: Vec<C64> = (0..bscan.n_freqs())
        .map(|f| C64::from_polar(1.0, sweep.angular(f) * t))
        .collect();
    let data = Mat::from_fn(bscan.n_positions(), bscan.n_freqs(), |s, f| {
        bscan.get(s, f) * phases[f]
    });
    bscan.with_data(data).expect("phase rotation keeps samples finite")
}

/// Estimates the system delay from a reference scan as the peak of the inverse
/// DFT of the position-averaged A-scan. The result lies on the delay grid
/// `n / (n_freqs * f_step)`, `n = 0..n_freqs`; on ties the earliest bin wins.
pub fn estimate_time_zero(reference: &BScan) -> Result<f64> {
    let (ns, nf) = reference.dims();
    let mean: Vec<C64> = (0..nf)
        .map(|f| (0..ns).map(|s| reference.get(s, f)).sum::<C64>() / ns as f64)
        .collect();
    let magnitudes: Vec<f64> = (0..nf)
        .map(|n| {
            mean.iter()
                .enumerate()
                .map(|(f, &a)| {
                    let arg = 2.0 * std::f64::consts::PI * ((f * n) % nf) as f64 / nf as f64;
                    a * C64::from_polar(1.0, arg)
                })
                .sum::<C64>()
                .norm()
        })
        .collect();
    let peak = magnitudes.iter().cloned().fold(0.0f64, f64::max);
    if peak == 0.0 {
        return Err(Error::Estimation("reference scan is identically zero".into()));
    }
    let bin = magnitudes
        .iter()
        .position(|&m| m >= peak * (1.0 - 1e-9))
        .expect("peak exists");
    Ok(bin as f64 / (nf as f64 * reference.sweep().f_step()))
}

/// Subtracts the `k` dominant rank-one SVD components of the positions-by-frequencies matrix.
pub fn clutter_svd_remove(bscan: &BScan, k: usize) -> Result<(BScan, ClutterReport)> {
    let (ns, nf) = bscan.dims();
    let limit = ns.min(nf);
    if k > limit {
        return Err(Error::Parameter(format!(
            "clutter removal count {k} exceeds min(N_s, N_f) = {limit}"
        )));
    }
    let svd = ThinSvd::compute(bscan.data().as_ref())?;
    let total: f64 = svd.s.iter().map(|s| s * s).sum();
    let removed: f64 = svd.s[..k].iter().map(|s| s * s).sum();
    let ambiguous_cutoff = k > 0
        && k < svd.s.len()
        && (svd.s[k - 1] - svd.s[k]).abs() <= TIE_TOLERANCE * svd.s[0];
    let report = ClutterReport {
        removed_count: k,
        removed_energy_fraction: if total > 0.0 { removed / total } else { 0.0 },
        singular_values: svd.s.clone(),
        ambiguous_cutoff,
    };
    if k == 0 {
        return Ok((bscan.clone(), report));
    }
    let leading = svd.leading_terms(k);
    let data = bscan.data() - &leading;
    Ok((bscan.with_data(data)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{FrequencySweep, ScanLine};
    use std::f64::consts::PI;

    fn geometry(ns: usize, nf: usize) -> (FrequencySweep, ScanLine) {
        (
            FrequencySweep::new(1.2e9, 25e6, nf).unwrap(),
            ScanLine::new(0.0, 1.2 / 44.0, ns).unwrap(),
        )
    }

    fn pseudo_random(ns: usize, nf: usize, seed: u64) -> BScan {
        let (sweep, line) = geometry(ns, nf);
        let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        BScan::from_fn(sweep, line, |_, _| C64::new(next(), next())).unwrap()
    }

    fn fro(b: &BScan) -> f64 {
        b.frobenius_norm()
    }

    #[test]
    fn zero_timing_identity_and_half_cycle() {
        let b = pseudo_random(3, 4, 1);
        assert_eq!(zero_timing(&b, 0.0).unwrap(), b);
        assert!(zero_timing(&b, -1e-9).is_err());

        let (sweep, line) = geometry(1, 1);
        let one = BScan::from_fn(sweep, line, |_, _| C64::new(1.0, 0.0)).unwrap();
        let t0 = PI / sweep.angular(0);
        let out = zero_timing(&one, t0).unwrap();
        assert!((out.get(0, 0) - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_timing_undoes_delay() {
        let b = pseudo_random(5, 20, 2);
        let t0 = 1.3e-9;
        let delayed = apply_delay_phase(&b, -t0);
        let back = zero_timing(&delayed, t0).unwrap();
        assert!(fro(&BScan::with_data(&b, back.data() - b.data()).unwrap()) < 1e-12);
    }

    #[test]
    fn time_zero_from_pure_delay() {
        let (sweep, line) = geometry(4, 64);
        let dt = 1.0 / (64.0 * sweep.f_step());
        for t_star in [0.0, 3.0 * dt, 17.4 * dt, 40.0 * dt] {
            let reference = BScan::from_fn(sweep, line, |_, f| {
                C64::from_polar(1.0, -sweep.angular(f) * t_star)
            })
            .unwrap();
            let t0 = estimate_time_zero(&reference).unwrap();
            assert!((t0 - t_star).abs() <= dt, "t*={t_star} t0={t0}");
            if t_star == 0.0 {
                assert_eq!(t0, 0.0);
            }
        }
    }

    #[test]
    fn time_zero_tie_takes_earliest() {
        let (sweep, line) = geometry(2, 32);
        let dt = 1.0 / (32.0 * sweep.f_step());
        let (t1, t2) = (5.0 * dt, 12.0 * dt);
        let reference = BScan::from_fn(sweep, line, |_, f| {
            let w = sweep.angular(f);
            C64::from_polar(1.0, -w * t2) + C64::from_polar(1.0, -w * t1)
        })
        .unwrap();
        assert!((estimate_time_zero(&reference).unwrap() - t1).abs() < 1e-3 * dt);
    }

    #[test]
    fn time_zero_of_zero_reference_fails() {
        let (sweep, line) = geometry(2, 8);
        assert!(matches!(
            estimate_time_zero(&BScan::zeros(sweep, line)),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn clutter_k0_identity() {
        let b = pseudo_random(6, 9, 3);
        let (out, report) = clutter_svd_remove(&b, 0).unwrap();
        assert_eq!(out, b);
        assert_eq!(report.removed_energy_fraction, 0.0);
    }

    #[test]
    fn rank_one_clutter_annihilated() {
        let (sweep, line) = geometry(45, 104);
        let row: Vec<C64> = (0..104)
            .map(|f| C64::from_polar(1.0 + 0.01 * f as f64, 0.3 * f as f64))
            .collect();
        let b = BScan::from_fn(sweep, line, |_, f| row[f]).unwrap();
        let (out, report) = clutter_svd_remove(&b, 1).unwrap();
        assert!(fro(&out) <= 1e-12 * fro(&b));
        assert!((report.removed_energy_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_removal_leaves_nothing() {
        let b = pseudo_random(45, 104, 4);
        let (out, report) = clutter_svd_remove(&b, 45).unwrap();
        assert!(fro(&out) <= 1e-12 * fro(&b));
        assert_eq!(report.singular_values.len(), 45);
        assert!(clutter_svd_remove(&b, 46).is_err());
    }

    #[test]
    fn residual_energy_and_orthogonality() {
        let b = pseudo_random(12, 30, 5);
        let svd = ThinSvd::compute(b.data().as_ref()).unwrap();
        let total = fro(&b).powi(2);
        let mut last_fraction = 0.0;
        for k in 0..=12 {
            let (out, report) = clutter_svd_remove(&b, k).unwrap();
            let tail: f64 = svd.s[k..].iter().map(|s| s * s).sum();
            assert!((fro(&out).powi(2) - tail).abs() <= 1e-10 * total);
            assert!(report.removed_energy_fraction >= last_fraction);
            last_fraction = report.removed_energy_fraction;
            let removed = svd.leading_terms(k);
            let mut inner = C64::new(0.0, 0.0);
            for i in 0..12 {
                for j in 0..30 {
                    inner += out.get(i, j) * removed[(i, j)].conj();
                }
            }
            assert!(inner.norm() <= 1e-10 * total);
        }
    }

    #[test]
    fn tie_flagged() {
        let (sweep, line) = geometry(2, 2);
        let b = BScan::from_fn(sweep, line, |i, j| {
            if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        })
        .unwrap();
        let (_, report) = clutter_svd_remove(&b, 1).unwrap();
        assert!(report.ambiguous_cutoff);
    }
}
