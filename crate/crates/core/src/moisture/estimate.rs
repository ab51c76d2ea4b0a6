use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::model::{band_combinations, mean_var, Algorithm, MoistureModel, MoistureSample};
use crate::bscan_io::format_decimal;
use crate::error::{Error, Result};

/// One Monte-Carlo model draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub a: f64,
    pub b: f64,
    /// `None` when the draw cannot reproduce the FSV (a <= fsv, a <= 0 or b <= 0).
    pub sm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub sm_mean: f64,
    pub sm_std: f64,
    pub n_valid_draws: usize,
    pub n_invalid_draws: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<Vec<Draw>>,
}

/// Inverts the model for `fsv` under `n_draws` independent Gaussian draws of `(a, b)`.
/// Draw `i` uses stream `i` of a ChaCha8 generator keyed by `seed`, so results do not
/// depend on evaluation order.
pub fn estimate_sm(fsv: f64, model: &MoistureModel, n_draws: usize, seed: u64) -> Result<EstimationResult> {
    estimate(fsv, model, n_draws, seed, false)
}

/// As [`estimate_sm`], keeping every draw.
pub fn estimate_sm_with_draws(
    fsv: f64,
    model: &MoistureModel,
    n_draws: usize,
    seed: u64,
) -> Result<EstimationResult> {
    estimate(fsv, model, n_draws, seed, true)
}

fn estimate(fsv: f64, model: &MoistureModel, n_draws: usize, seed: u64, keep: bool) -> Result<EstimationResult> {
    if !(fsv.is_finite() && fsv >= 0.0) {
        return Err(Error::Parameter(format!("FSV must be finite and >= 0, got {fsv}")));
    }
    if n_draws == 0 {
        return Err(Error::Parameter("at least one draw is required".into()));
    }
    let dist_a = Normal::new(model.mu_a, model.var_a.sqrt())
        .map_err(|e| Error::Model(format!("bad distribution for a: {e}")))?;
    let dist_b = Normal::new(model.mu_b, model.var_b.sqrt())
        .map_err(|e| Error::Model(format!("bad distribution for b: {e}")))?;

    let draws: Vec<Draw> = (0..n_draws)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let a = dist_a.sample(&mut rng);
            let b = dist_b.sample(&mut rng);
            Draw { a, b, sm: model.form.invert(a, b, fsv) }
        })
        .collect();
    let valid: Vec<f64> = draws.iter().filter_map(|d| d.sm).collect();
    if valid.is_empty() {
        return Err(Error::Saturation { fsv });
    }
    let (sm_mean, var) = mean_var(valid.iter().copied());
    Ok(EstimationResult {
        sm_mean,
        sm_std: var.sqrt(),
        n_valid_draws: valid.len(),
        n_invalid_draws: n_draws - valid.len(),
        draws: keep.then_some(draws),
    })
}

/// SplitMix64 finaliser, used to derive independent seeds.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmeeRow {
    pub sm_exact: f64,
    /// Mean signed error (percent SM); `None` when no estimate exists at this level.
    pub smee: Option<f64>,
    pub n_bands: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub algorithm: Algorithm,
    pub bands: Vec<usize>,
    pub rows: Vec<SmeeRow>,
}

impl EvaluationReport {
    /// `sm_exact,smee,n_bands`; a level with no estimate is written as `absent`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sm_exact,smee,n_bands\n");
        for r in &self.rows {
            let smee = r.smee.map(format_decimal).unwrap_or_else(|| "absent".into());
            out.push_str(&format!("{},{smee},{}\n", format_decimal(r.sm_exact), r.n_bands));
        }
        out
    }

    pub fn max_abs_smee(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.smee).map(f64::abs).reduce(f64::max)
    }
}

/// Estimation seed for one held-out observation, independent of evaluation order.
fn sample_seed(seed: u64, s: &MoistureSample) -> u64 {
    mix_seed(seed, &[s.band as u64, s.sm.to_bits()])
}

/// SMEE per level over held-out samples. Saturated estimates are left out of the
/// mean; a level without any estimate is reported as absent.
pub fn evaluate_model(
    model: &MoistureModel,
    heldout: &[MoistureSample],
    levels: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    if heldout.is_empty() {
        return Err(Error::Parameter("held-out set is empty".into()));
    }
    let mut bands: Vec<usize> = heldout.iter().map(|s| s.band).collect();
    bands.sort_unstable();
    bands.dedup();
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let mut errors = Vec::new();
        for s in heldout.iter().filter(|s| s.sm == level) {
            match estimate_sm(s.fsv, model, n_draws, sample_seed(seed, s)) {
                Ok(e) => errors.push(e.sm_mean - level),
                Err(Error::Saturation { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        rows.push(SmeeRow {
            sm_exact: level,
            smee: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
            n_bands: errors.len(),
        });
    }
    Ok(EvaluationReport { algorithm: model.algorithm, bands, rows })
}

/// Rotating hold-out: every training combination of `k` bands is scored on its
/// complement, and the per-level SMEE is averaged over combinations.
pub fn rotating_evaluation(
    model: &MoistureModel,
    samples: &[MoistureSample],
    k: usize,
    levels: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    let n_bands = model.band_plan.n_bands();
    if k >= n_bands {
        return Err(Error::Parameter(format!(
            "training size {k} leaves no held-out band out of {n_bands}"
        )));
    }
    // one estimate per (band, level), shared by every combination that holds it out
    let mut cache: BTreeMap<(usize, u64), Vec<f64>> = BTreeMap::new();
    for s in samples {
        match estimate_sm(s.fsv, model, n_draws, sample_seed(seed, s)) {
            Ok(e) => cache.entry((s.band, s.sm.to_bits())).or_default().push(e.sm_mean - s.sm),
            Err(Error::Saturation { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let (mut total, mut n_combos, mut n_used) = (0.0, 0usize, 0usize);
        for combo in band_combinations(n_bands, k) {
            let errors: Vec<f64> = (0..n_bands)
                .filter(|b| combo.binary_search(b).is_err())
                .filter_map(|b| cache.get(&(b, level.to_bits())))
                .flatten()
                .copied()
                .collect();
            if !errors.is_empty() {
                total += errors.iter().sum::<f64>() / errors.len() as f64;
                n_combos += 1;
                n_used = n_used.max(errors.len());
            }
        }
        rows.push(SmeeRow {
            sm_exact: level,
            smee: (n_combos > 0).then(|| total / n_combos as f64),
            n_bands: n_used,
        });
    }
    Ok(EvaluationReport {
        algorithm: model.algorithm,
        bands: (0..n_bands).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalPoint {
    pub t_min: f64,
    pub sm_mean: f64,
    pub sm_std: f64,
    /// Rate over the interval ending here (percent per minute); absent for the first point.
    pub rate: Option<f64>,
}

/// Orders estimates in time and attaches finite-difference moisture rates.
/// `points` holds `(t_minutes, sm_mean, sm_std)` with strictly increasing times.
pub fn temporal_series(points: &[(f64, f64, f64)]) -> Result<Vec<TemporalPoint>> {
    if let Some(w) = points.windows(2).find(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Parameter(format!(
            "scan times must be strictly increasing ({} then {})",
            w[0].0, w[1].0
        )));
    }
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, &(t, m, s))| TemporalPoint {
            t_min: t,
            sm_mean: m,
            sm_std: s,
            rate: (i > 0).then(|| (m - points[i - 1].1) / (t - points[i - 1].0)),
        })
        .collect())
}

pub fn temporal_csv(series: &[TemporalPoint]) -> String {
    let mut out = String::from("t_min,sm_mean,sm_std,rate_per_min\n");
    for p in series {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_decimal(p.t_min),
            format_decimal(p.sm_mean),
            format_decimal(p.sm_std),
            p.rate.map(format_decimal).unwrap_or_default()
        ));
    }
    out
}
