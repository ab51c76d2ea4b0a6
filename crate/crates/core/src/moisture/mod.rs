//! Moist-area segmentation, FSV extraction, exponential model fitting and
//! statistical soil-moisture estimation.

mod estimate;
mod fit;
mod model;
mod segment;

pub use estimate::{
    estimate_sm, estimate_sm_with_draws, evaluate_model, mix_seed, rotating_evaluation, temporal_csv,
    temporal_series, Draw, EstimationResult, EvaluationReport, SmeeRow, TemporalPoint,
};
pub use fit::{fit_exponential, fit_exponential_form, ExpFit, ModelForm};
pub use model::{
    band_combinations, build_model, Algorithm, BandCombinations, BuildOptions, CombinationFit,
    ModelBuild, MoistureModel, MoistureSample, Normalization,
};
pub(crate) use model::mean_var;
pub use segment::{fsv, normalized_fsv, segment, RegionOfInterest};

/// Soil-moisture levels (percent) of the reference measurement series.
pub const REFERENCE_SM_LEVELS: [f64; 8] = [12.5, 25.0, 37.5, 50.0, 62.5, 75.0, 87.5, 100.0];
