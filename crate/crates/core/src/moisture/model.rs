use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_exponential_form, ExpFit, ModelForm};
use crate::bscan_io::format_decimal;
use crate::error::{Error, Result};
use crate::scan::BandPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Baa,
    Bpa,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Baa => "baa",
            Algorithm::Bpa => "bpa",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baa" => Ok(Algorithm::Baa),
            "bpa" => Ok(Algorithm::Bpa),
            _ => Err(Error::Parameter(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// One (SM, FSV) observation from one band's image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoistureSample {
    /// Soil moisture, percent.
    pub sm: f64,
    pub fsv: f64,
    /// Index into the band plan.
    pub band: usize,
    pub algorithm: Algorithm,
}

impl MoistureSample {
    pub fn new(sm: f64, fsv: f64, band: usize, algorithm: Algorithm) -> Result<Self> {
        if !(0.0..=100.0).contains(&sm) {
            return Err(Error::Parameter(format!("SM {sm} outside [0, 100]")));
        }
        if !(fsv.is_finite() && fsv >= 0.0) {
            return Err(Error::Parameter(format!("FSV {fsv} must be finite and >= 0")));
        }
        Ok(Self { sm, fsv, band, algorithm })
    }
}

/// How FSV values were scaled before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Normalization {
    /// Raw FSV of the image magnitude.
    None,
    /// Image divided by its own Frobenius norm before segmentation;
    /// `mean_image_norm` is the average divisor over the training images.
    ImageFrobenius { mean_image_norm: f64 },
}

/// Gaussian statistics of the fitted `(a, b)` across band combinations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoistureModel {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub form: ModelForm,
    pub mu_a: f64,
    pub var_a: f64,
    pub mu_b: f64,
    pub var_b: f64,
    pub normalization: Normalization,
    pub band_plan: BandPlan,
    pub n_combinations: usize,
    pub seed: Option<u64>,
}

impl MoistureModel {
    /// Model with fixed parameters and no spread.
    pub fn degenerate(algorithm: Algorithm, a: f64, b: f64, band_plan: BandPlan) -> Result<Self> {
        Self {
            algorithm,
            form: ModelForm::Saturating,
            mu_a: a,
            var_a: 0.0,
            mu_b: b,
            var_b: 0.0,
            normalization: Normalization::None,
            band_plan,
            n_combinations: 1,
            seed: None,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let finite = [self.mu_a, self.var_a, self.mu_b, self.var_b]
            .iter()
            .all(|v| v.is_finite());
        let signs_ok = match self.form {
            ModelForm::Saturating => self.mu_a > 0.0 && self.mu_b > 0.0,
            ModelForm::Printed => self.mu_a != 0.0 && self.mu_b > 0.0,
        };
        if !finite || self.var_a < 0.0 || self.var_b < 0.0 || !signs_ok {
            return Err(Error::Model(format!(
                "invalid parameters mu_a = {}, var_a = {}, mu_b = {}, var_b = {}",
                self.mu_a, self.var_a, self.mu_b, self.var_b
            )));
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::json("moisture model", e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)
            .map_err(|e| Error::json(format!("model file {}", path.display()), e))?;
        model.validated()
    }
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn band_combinations(n: usize, k: usize) -> BandCombinations {
    BandCombinations {
        n,
        current: (k <= n).then(|| (0..k).collect()),
    }
}

#[derive(Debug, Clone)]
pub struct BandCombinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for BandCombinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        // rightmost index that can still move
        if let Some(i) = (0..k).rev().find(|&i| next[i] < self.n - k + i) {
            next[i] += 1;
            for j in i + 1..k {
                next[j] = next[j - 1] + 1;
            }
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Fit of one training combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationFit {
    pub bands: Vec<usize>,
    pub fit: std::result::Result<ExpFit, String>,
}

/// Model plus the per-combination fits it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBuild {
    pub model: MoistureModel,
    pub fits: Vec<CombinationFit>,
}

impl ModelBuild {
    pub fn n_failed(&self) -> usize {
        self.fits.iter().filter(|f| f.fit.is_err()).count()
    }

    /// CSV listing of every combination's parameters: `combination,bands,a,b,residual`.
    /// Failed combinations keep their row with empty parameter fields.
    pub fn parameters_csv(&self) -> String {
        let mut out = String::from("combination,bands,a,b,residual\n");
        for (i, c) in self.fits.iter().enumerate() {
            let bands: Vec<String> = c.bands.iter().map(|b| b.to_string()).collect();
            match &c.fit {
                Ok(f) => out.push_str(&format!(
                    "{i},{},{},{},{}\n",
                    bands.join(" "),
                    format_decimal(f.a),
                    format_decimal(f.b),
                    format_decimal(f.residual)
                )),
                Err(_) => out.push_str(&format!("{i},{},,,\n", bands.join(" "))),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Share of bands in each training combination (rounded up).
    pub train_fraction: f64,
    pub form: ModelForm,
    /// Largest tolerated share of failed fits.
    pub max_failure_fraction: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            train_fraction: 12.0 / 16.0,
            form: ModelForm::Saturating,
            max_failure_fraction: 0.1,
        }
    }
}

impl BuildOptions {
    /// Bands per training combination: `ceil(train_fraction * n_bands)`, at least 1.
    pub fn train_size(&self, n_bands: usize) -> usize {
        ((self.train_fraction * n_bands as f64) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Fits every training combination of bands and summarises `(a, b)` by mean
/// and unbiased variance.
pub fn build_model(
    samples: &[MoistureSample],
    band_plan: &BandPlan,
    normalization: Normalization,
    options: &BuildOptions,
) -> Result<ModelBuild> {
    let algorithm = match samples.first() {
        Some(s) => s.algorithm,
        None => return Err(Error::Model("empty dataset".into())),
    };
    if samples.iter().any(|s| s.algorithm != algorithm) {
        return Err(Error::Model("dataset mixes algorithms".into()));
    }
    let n_bands = band_plan.n_bands();
    if n_bands < 2 {
        return Err(Error::Model(format!("need at least 2 bands, got {n_bands}")));
    }
    if let Some(s) = samples.iter().find(|s| s.band >= n_bands) {
        return Err(Error::Model(format!("sample refers to band {} of {n_bands}", s.band)));
    }
    for band in 0..n_bands {
        let mut levels: Vec<f64> = samples.iter().filter(|s| s.band == band).map(|s| s.sm).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        if levels.len() < 3 {
            return Err(Error::Model(format!(
                "band {band} covers {} SM levels, need at least 3",
                levels.len()
            )));
        }
    }
    if !(options.train_fraction > 0.0 && options.train_fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction {} outside (0, 1]",
            options.train_fraction
        )));
    }
    let k = options.train_size(n_bands);

    let combos: Vec<Vec<usize>> = band_combinations(n_bands, k).collect();
    let fits: Vec<CombinationFit> = combos
        .into_par_iter()
        .map(|bands| {
            let pooled: Vec<(f64, f64)> = samples
                .iter()
                .filter(|s| bands.binary_search(&s.band).is_ok())
                .map(|s| (s.sm, s.fsv))
                .collect();
            let fit = fit_exponential_form(&pooled, options.form).map_err(|e| e.to_string());
            CombinationFit { bands, fit }
        })
        .collect();

    let good: Vec<&ExpFit> = fits.iter().filter_map(|c| c.fit.as_ref().ok()).collect();
    let failed = fits.len() - good.len();
    if failed as f64 > options.max_failure_fraction * fits.len() as f64 || good.is_empty() {
        let first = fits
            .iter()
            .find_map(|c| c.fit.as_ref().err())
            .cloned()
            .unwrap_or_default();
        return Err(Error::Model(format!(
            "{failed} of {} combination fits failed (first: {first})",
            fits.len()
        )));
    }
    let (mu_a, var_a) = mean_var(good.iter().map(|f| f.a));
    let (mu_b, var_b) = mean_var(good.iter().map(|f| f.b));
    let model = MoistureModel {
        algorithm,
        form: options.form,
        mu_a,
        var_a,
        mu_b,
        var_b,
        normalization,
        band_plan: band_plan.clone(),
        n_combinations: good.len(),
        seed: None,
    }
    .validated()?;
    Ok(ModelBuild { model, fits })
}

/// Mean and unbiased variance; the variance of a single value is 0.
pub(crate) fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let first = values.clone().next().unwrap();
    if values.clone().all(|v| v == first) {
        return (first, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::FrequencySweep;

    const LEVELS: [f64; 8] = [12.5, 25.0, 37.5, 50.0, 62.5, 75.0, 87.5, 100.0];

    fn plan(n: usize) -> BandPlan {
        BandPlan::new((0..n).map(|i| (i, i + 50)).collect()).unwrap()
    }

    fn dataset(n_bands: usize, params: impl Fn(usize) -> (f64, f64)) -> Vec<MoistureSample> {
        let mut out = Vec::new();
        for band in 0..n_bands {
            let (a, b) = params(band);
            for &sm in &LEVELS {
                let fsv = ModelForm::Saturating.eval(a, b, sm);
                out.push(MoistureSample::new(sm, fsv, band, Algorithm::Bpa).unwrap());
            }
        }
        out
    }

    #[test]
    fn combination_counts_and_order() {
        assert_eq!(band_combinations(16, 12).count(), 1820);
        assert_eq!(band_combinations(7, 7).collect::<Vec<_>>(), vec![(0..7).collect::<Vec<_>>()]);
        let five_two: Vec<_> = band_combinations(5, 2).collect();
        assert_eq!(five_two.len(), 10);
        assert_eq!(five_two[0], vec![0, 1]);
        assert_eq!(five_two[9], vec![3, 4]);
        assert_eq!(band_combinations(4, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(band_combinations(3, 4).count(), 0);
        assert!(five_two.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn identical_bands_give_zero_spread() {
        let data = dataset(16, |_| (0.05, 0.04547));
        let build = build_model(&data, &plan(16), Normalization::None, &BuildOptions::default()).unwrap();
        assert_eq!(build.fits.len(), 1820);
        let m = &build.model;
        assert!((m.mu_a - 0.05).abs() < 1e-9 && (m.mu_b - 0.04547).abs() < 1e-9);
        assert!(m.var_a <= 1e-12 && m.var_b <= 1e-12);
        assert_eq!(m.n_combinations, 1820);
    }

    #[test]
    fn mean_of_two_clusters() {
        let (mean, var) = mean_var([0.04, 0.06, 0.04, 0.06].into_iter());
        assert!((mean - 0.05).abs() < 1e-15);
        assert!((var - 0.0001 * 4.0 / 3.0).abs() < 1e-15);
        // one band per combination recovers each band's own parameters
        let data = dataset(2, |band| if band == 0 { (0.04, 0.05) } else { (0.06, 0.05) });
        let options = BuildOptions { train_fraction: 0.5, ..Default::default() };
        let build = build_model(&data, &plan(2), Normalization::None, &options).unwrap();
        assert!((build.model.mu_a - 0.05).abs() < 1e-9);
    }

    #[test]
    fn deterministic_serialisation() {
        let data = dataset(6, |band| (0.05 + 0.001 * band as f64, 0.04 + 0.002 * band as f64));
        let opts = BuildOptions::default();
        let a = build_model(&data, &plan(6), Normalization::None, &opts).unwrap();
        let b = build_model(&data, &plan(6), Normalization::None, &opts).unwrap();
        assert_eq!(a.model.to_json().unwrap(), b.model.to_json().unwrap());
        assert_eq!(a.parameters_csv(), b.parameters_csv());
        assert_eq!(a.fits.len(), 6);
        let back: MoistureModel = serde_json::from_str(&a.model.to_json().unwrap()).unwrap();
        assert_eq!(back, a.model);
    }

    #[test]
    fn too_many_failures_is_model_error() {
        // bands 0..3 are flat: every 3-band combination containing only them fails
        let mut data = dataset(4, |_| (0.05, 0.04));
        for s in data.iter_mut().filter(|s| s.band < 3) {
            s.fsv = 0.01;
        }
        let options = BuildOptions { train_fraction: 0.25, ..Default::default() };
        assert!(matches!(
            build_model(&data, &plan(4), Normalization::None, &options),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn precondition_errors() {
        assert!(build_model(&[], &plan(2), Normalization::None, &BuildOptions::default()).is_err());
        let data = dataset(1, |_| (0.05, 0.04));
        assert!(build_model(&data, &BandPlan::full(&FrequencySweep::reference()), Normalization::None, &BuildOptions::default())
            .is_err());
        assert!(MoistureSample::new(120.0, 0.1, 0, Algorithm::Baa).is_err());
        assert!(MoistureSample::new(10.0, f64::NAN, 0, Algorithm::Baa).is_err());
        assert!(MoistureModel::degenerate(Algorithm::Bpa, -1.0, 0.1, plan(2)).is_err());
    }
}
