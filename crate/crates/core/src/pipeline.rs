//! Per-band processing chain: zero timing, clutter removal, band extraction,
//! imaging, segmentation and FSV; plus dataset assembly and per-scan estimation.

use serde::{Deserialize, Serialize};

use crate::baa::{baa_image_with, build_gamma, GammaMatrix};
use crate::bpa::{bpa_image_with, BpaOptions};
use crate::bscan_io::format_decimal;
use crate::error::{Error, Result};
use crate::grid::ReconstructionGrid;
use crate::image::Image;
use crate::moisture::{
    build_model, estimate_sm_with_draws, fsv, mean_var, mix_seed, normalized_fsv, rotating_evaluation, segment,
    Algorithm, BuildOptions, EstimationResult, EvaluationReport, ModelBuild, MoistureSample, Normalization,
    RegionOfInterest,
};
use crate::preprocess::{clutter_svd_remove, estimate_time_zero, zero_timing, ClutterReport};
use crate::scan::{extract_band, BScan, BandPlan, FrequencySweep, ScanLine, SoilModel};
use crate::scenario::PipeSpec;

/// Region of interest from the surface to the crown of `pipe`, widened by 10 cm each side.
pub fn default_roi(pipe: &PipeSpec) -> RegionOfInterest {
    RegionOfInterest::above_pipe(pipe.x, pipe.diameter / 2.0, 0.10, pipe.top_z).expect("finite pipe geometry")
}

/// Image grid used for moisture work: 2 cm cells around the pipe.
pub fn default_image_grid() -> ReconstructionGrid {
    crate::scenario::default_scene_grid()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsvScaling {
    /// FSV of the raw image magnitude.
    Raw,
    /// FSV after dividing the image by its Frobenius norm.
    #[default]
    ImageFrobenius,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessingConfig {
    pub soil: SoilModel,
    pub grid: ReconstructionGrid,
    pub roi: RegionOfInterest,
    pub band_plan: BandPlan,
    pub clutter_k: usize,
    /// System delay removed before imaging (s).
    pub t0: f64,
    /// Fixed TSVD truncation; `None` uses the knee of each band's spectrum.
    pub keep: Option<usize>,
    pub scaling: FsvScaling,
    pub bpa: BpaOptions,
}

impl ProcessingConfig {
    pub fn reference(sweep: &FrequencySweep) -> Result<Self> {
        Ok(Self {
            soil: SoilModel::default(),
            grid: default_image_grid(),
            roi: default_roi(&PipeSpec::default()),
            band_plan: BandPlan::default_for(sweep)?,
            clutter_k: 0,
            t0: 0.0,
            keep: None,
            scaling: FsvScaling::default(),
            bpa: BpaOptions::default(),
        })
    }
}

/// Preprocessed scan and the clutter-removal diagnostics.
pub fn preprocess(bscan: &BScan, t0: f64, clutter_k: usize) -> Result<(BScan, ClutterReport)> {
    let timed = zero_timing(bscan, t0)?;
    clutter_svd_remove(&timed, clutter_k)
}

/// Delay estimate from a reference scan, for use as `ProcessingConfig::t0`.
pub fn time_zero_from(reference: &BScan) -> Result<f64> {
    estimate_time_zero(reference)
}

/// Imaging state for one acquisition geometry; Born operators are built once per band.
pub struct BandProcessor {
    config: ProcessingConfig,
    sweep: FrequencySweep,
    scanline: ScanLine,
    gammas: Vec<Option<GammaMatrix>>,
}

impl BandProcessor {
    pub fn new(config: ProcessingConfig, sweep: FrequencySweep, scanline: ScanLine) -> Result<Self> {
        config.band_plan.check_against(&sweep)?;
        config.roi.cell_ranges(&config.grid)?;
        let n = config.band_plan.n_bands();
        Ok(Self { config, sweep, scanline, gammas: (0..n).map(|_| None).collect() })
    }

    pub fn config(&self) -> &ProcessingConfig {
        &self.config
    }

    fn check_geometry(&self, bscan: &BScan) -> Result<()> {
        if *bscan.sweep() != self.sweep || *bscan.scanline() != self.scanline {
            return Err(Error::Dimension(
                "B-scan geometry differs from the first scan of the set".into(),
            ));
        }
        Ok(())
    }

    fn gamma(&mut self, band: usize) -> Result<&GammaMatrix> {
        if self.gammas[band].is_none() {
            let (s, e) = self.config.band_plan.bands()[band];
            let sub = self.sweep.sub_sweep(s, e)?;
            self.gammas[band] = Some(build_gamma(&self.config.grid, &self.scanline, &sub, &self.config.soil)?);
        }
        Ok(self.gammas[band].as_ref().expect("just built"))
    }

    /// Image of one band of an already preprocessed scan.
    pub fn band_image(&mut self, clean: &BScan, band: usize, algorithm: Algorithm) -> Result<Image> {
        self.check_geometry(clean)?;
        let range = *self
            .config
            .band_plan
            .bands()
            .get(band)
            .ok_or_else(|| Error::Index(format!("band {band} not in plan")))?;
        let sub = extract_band(clean, range)?;
        match algorithm {
            Algorithm::Bpa => bpa_image_with(&sub, &self.config.grid, &self.config.soil, self.config.bpa),
            Algorithm::Baa => {
                let keep = self.config.keep;
                baa_image_with(self.gamma(band)?, &sub, keep)
            }
        }
    }

    /// FSV of the region of interest in one band image and the image norm.
    pub fn image_fsv(&self, image: &Image) -> Result<(f64, f64)> {
        let norm = image.frobenius_norm();
        let value = match self.config.scaling {
            FsvScaling::Raw => fsv(&segment(image, &self.config.roi)?)?,
            FsvScaling::ImageFrobenius => normalized_fsv(image, &self.config.roi)?,
        };
        Ok((value, norm))
    }

    /// Preprocesses `raw` and returns `(fsv, image_norm)` for every band.
    pub fn scan_fsvs(&mut self, raw: &BScan, algorithm: Algorithm) -> Result<Vec<(f64, f64)>> {
        self.check_geometry(raw)?;
        let (clean, _) = preprocess(raw, self.config.t0, self.config.clutter_k)?;
        (0..self.config.band_plan.n_bands())
            .map(|band| {
                let image = self.band_image(&clean, band, algorithm)?;
                self.image_fsv(&image)
            })
            .collect()
    }

    /// Training samples from scans with known SM, plus the normalisation record.
    pub fn dataset(
        &mut self,
        scans: &[(f64, BScan)],
        algorithm: Algorithm,
    ) -> Result<(Vec<MoistureSample>, Normalization)> {
        let mut samples = Vec::new();
        let mut norms = Vec::new();
        for (sm, scan) in scans {
            for (band, (value, norm)) in self.scan_fsvs(scan, algorithm)?.into_iter().enumerate() {
                samples.push(MoistureSample::new(*sm, value, band, algorithm)?);
                norms.push(norm);
            }
        }
        let normalization = match self.config.scaling {
            FsvScaling::Raw => Normalization::None,
            FsvScaling::ImageFrobenius => Normalization::ImageFrobenius {
                mean_image_norm: if norms.is_empty() { 0.0 } else { norms.iter().sum::<f64>() / norms.len() as f64 },
            },
        };
        Ok((samples, normalization))
    }
}

/// Per-scan estimate pooled over bands, with the per-band FSVs used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEstimate {
    pub fsv: Vec<f64>,
    pub result: EstimationResult,
    /// Bands whose FSV no model draw could reproduce.
    pub saturated_bands: Vec<usize>,
}

/// Estimates SM from every band of `raw` and pools the valid draws.
pub fn estimate_scan(
    processor: &mut BandProcessor,
    raw: &BScan,
    model: &crate::moisture::MoistureModel,
    n_draws: usize,
    seed: u64,
) -> Result<ScanEstimate> {
    if processor.config.band_plan != model.band_plan {
        return Err(Error::Parameter("band plan differs from the one the model was built with".into()));
    }
    let fsvs: Vec<f64> = processor.scan_fsvs(raw, model.algorithm)?.into_iter().map(|p| p.0).collect();
    let mut pooled = Vec::new();
    let mut invalid = 0;
    let mut saturated_bands = Vec::new();
    for (band, &value) in fsvs.iter().enumerate() {
        match estimate_sm_with_draws(value, model, n_draws, mix_seed(seed, &[band as u64])) {
            Ok(r) => {
                invalid += r.n_invalid_draws;
                pooled.extend(r.draws.unwrap_or_default().into_iter().filter_map(|d| d.sm));
            }
            Err(Error::Saturation { .. }) => {
                invalid += n_draws;
                saturated_bands.push(band);
            }
            Err(e) => return Err(e),
        }
    }
    if pooled.is_empty() {
        let worst = fsvs.iter().cloned().fold(0.0, f64::max);
        return Err(Error::Saturation { fsv: worst });
    }
    let (mean, var) = mean_var(pooled.iter().copied());
    Ok(ScanEstimate {
        fsv: fsvs,
        result: EstimationResult {
            sm_mean: mean,
            sm_std: var.sqrt(),
            n_valid_draws: pooled.len(),
            n_invalid_draws: invalid,
            draws: None,
        },
        saturated_bands,
    })
}

/// Model built from one algorithm's dataset and its rotating hold-out evaluation.
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub samples: Vec<MoistureSample>,
    pub build: ModelBuild,
    pub report: EvaluationReport,
}

impl AlgorithmRun {
    /// Bands whose FSV does not strictly increase with SM.
    pub fn non_monotone_bands(&self) -> Vec<usize> {
        non_monotone_bands(&self.samples)
    }
}

/// Builds the dataset for `algorithm`, fits the model and scores every training
/// combination on its held-out bands at the SM levels present in `scans`.
pub fn train_and_evaluate(
    processor: &mut BandProcessor,
    scans: &[(f64, BScan)],
    algorithm: Algorithm,
    options: &BuildOptions,
    n_draws: usize,
    seed: u64,
) -> Result<AlgorithmRun> {
    let (samples, normalization) = processor.dataset(scans, algorithm)?;
    let mut build = build_model(&samples, &processor.config.band_plan, normalization, options)?;
    build.model.seed = Some(seed);
    let mut levels: Vec<f64> = scans.iter().map(|(sm, _)| *sm).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let k = options.train_size(processor.config.band_plan.n_bands());
    let report = rotating_evaluation(&build.model, &samples, k, &levels, n_draws, seed)?;
    Ok(AlgorithmRun { algorithm, samples, build, report })
}

/// Bands whose samples, ordered by SM, are not strictly increasing in FSV.
pub fn non_monotone_bands(samples: &[MoistureSample]) -> Vec<usize> {
    let mut bands: Vec<usize> = samples.iter().map(|s| s.band).collect();
    bands.sort_unstable();
    bands.dedup();
    bands
        .into_iter()
        .filter(|&band| {
            let mut pts: Vec<(f64, f64)> = samples.iter().filter(|s| s.band == band).map(|s| (s.sm, s.fsv)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            !pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1)
        })
        .collect()
}

/// `sm,band,fsv` rows in dataset order.
pub fn samples_csv(samples: &[MoistureSample]) -> String {
    let mut out = String::from("sm,band,fsv\n");
    for s in samples {
        out.push_str(&format!("{},{},{}\n", format_decimal(s.sm), s.band, format_decimal(s.fsv)));
    }
    out
}
