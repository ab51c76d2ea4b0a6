//! Run configuration: defaults, JSON file, dotted `key=value` overrides and flags.

use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use sdi_core::bpa::BpaOptions;
use sdi_core::moisture::{Algorithm, BuildOptions, ModelForm, RegionOfInterest};
use sdi_core::pipeline::{default_image_grid, default_roi, FsvScaling, ProcessingConfig};
use sdi_core::scenario::PipeSpec;
use sdi_core::{BandPlan, FrequencySweep, ReconstructionGrid, SoilModel};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmChoice {
    Baa,
    Bpa,
    Both,
}

impl AlgorithmChoice {
    pub fn algorithms(self) -> Vec<Algorithm> {
        match self {
            AlgorithmChoice::Baa => vec![Algorithm::Baa],
            AlgorithmChoice::Bpa => vec![Algorithm::Bpa],
            AlgorithmChoice::Both => vec![Algorithm::Baa, Algorithm::Bpa],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub soil: SoilModel,
    pub grid: ReconstructionGrid,
    pub roi: RegionOfInterest,
    /// Band plan: `default`, `full`, `count:start_hz:width_hz:spacing_hz` or `a-b,c-d`.
    pub bands: String,
    pub clutter_k: usize,
    /// System delay removed before imaging (s).
    pub t0: f64,
    /// Fixed TSVD truncation for Born imaging; absent selects the knee.
    pub keep: Option<usize>,
    pub scaling: FsvScaling,
    pub spreading_compensation: bool,
    pub algorithm: AlgorithmChoice,
    pub seed: u64,
    pub draws: usize,
    pub train_fraction: f64,
    pub form: ModelForm,
    pub max_failure_fraction: f64,
    /// Also write PGM previews of images.
    pub pgm: bool,
}

impl Default for Config {
    fn default() -> Self {
        let build = BuildOptions::default();
        Self {
            soil: SoilModel::default(),
            grid: default_image_grid(),
            roi: default_roi(&PipeSpec::default()),
            bands: "default".into(),
            clutter_k: 0,
            t0: 0.0,
            keep: None,
            scaling: FsvScaling::default(),
            spreading_compensation: false,
            algorithm: AlgorithmChoice::Both,
            seed: 0,
            draws: 1000,
            train_fraction: build.train_fraction,
            form: build.form,
            max_failure_fraction: build.max_failure_fraction,
            pgm: false,
        }
    }
}

impl Config {
    /// Defaults, then `file`, then each `key=value` override in order.
    pub fn assemble(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut value = serde_json::to_value(Config::default()).expect("config serializes");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let from_file: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: line {}: {e}", path.display(), e.line())))?;
            merge(&mut value, from_file);
        }
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override '{item}' is not key=value")))?;
            set_path(&mut value, key, raw)?;
        }
        let config: Config =
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("configuration: {e}")))?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.clutter_k > 2 {
            return Err(CliError::Config(format!("clutter_k must be 0, 1 or 2, got {}", self.clutter_k)));
        }
        if self.draws == 0 {
            return Err(CliError::Config("draws must be at least 1".into()));
        }
        RegionOfInterest::new(self.roi.x_min, self.roi.x_max, self.roi.z_min, self.roi.z_max)?;
        Ok(())
    }

    pub fn band_plan(&self, sweep: &FrequencySweep) -> Result<BandPlan, CliError> {
        Ok(BandPlan::parse(&self.bands, sweep)?)
    }

    pub fn processing(&self, sweep: &FrequencySweep) -> Result<ProcessingConfig, CliError> {
        Ok(self.processing_with(self.band_plan(sweep)?))
    }

    /// Processing settings with an explicit band plan in place of `bands`.
    pub fn processing_with(&self, band_plan: BandPlan) -> ProcessingConfig {
        ProcessingConfig {
            soil: self.soil,
            grid: self.grid,
            roi: self.roi,
            band_plan,
            clutter_k: self.clutter_k,
            t0: self.t0,
            keep: self.keep,
            scaling: self.scaling,
            bpa: BpaOptions { spreading_compensation: self.spreading_compensation },
        }
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            train_fraction: self.train_fraction,
            form: self.form,
            max_failure_fraction: self.max_failure_fraction,
        }
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Sets `a.b.c` to `raw`, read as JSON when it parses and as a string otherwise.
fn set_path(root: &mut Value, key: &str, raw: &str) -> Result<(), CliError> {
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("'{key}': '{}' is not a section", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(CliError::Config(format!("unknown setting '{key}'")));
            }
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj
            .get_mut(*part)
            .ok_or_else(|| CliError::Config(format!("unknown setting '{key}'")))?;
    }
    Err(CliError::Config("empty setting name".into()))
}

/// Rewrites `--a.b=v` and `--a.b v` into `--set a.b=v` so dotted names work as flags.
pub fn expand_dotted_flags(args: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        match arg.strip_prefix("--") {
            Some(name) if name.split('=').next().is_some_and(|n| n.contains('.')) => {
                out.push("--set".into());
                if name.contains('=') {
                    out.push(name.to_string());
                } else {
                    let value = iter.next().unwrap_or_default();
                    out.push(format!("{name}={value}"));
                }
            }
            _ => out.push(arg),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_in_order_and_reject_unknown_keys() {
        let c = Config::assemble(None, &["grid.nx=40".into(), "seed=7".into(), "bands=full".into()]).unwrap();
        assert_eq!((c.grid.nx(), c.seed, c.bands.as_str()), (40, 7, "full"));
        assert!(matches!(Config::assemble(None, &["grid.nq=4".into()]), Err(CliError::Config(_))));
        assert!(matches!(Config::assemble(None, &["clutter_k=5".into()]), Err(CliError::Config(_))));
    }

    #[test]
    fn dotted_flags_become_overrides() {
        let args = ["sdi", "fit", "--grid.nx=40", "--roi.z_max", "0.1", "--seed", "3"].map(String::from).to_vec();
        assert_eq!(
            expand_dotted_flags(args),
            ["sdi", "fit", "--set", "grid.nx=40", "--set", "roi.z_max=0.1", "--seed", "3"].map(String::from)
        );
    }

    #[test]
    fn file_values_merge_into_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"soil": {"eps_real": 9.0}, "draws": 10}"#).unwrap();
        let c = Config::assemble(Some(&path), &[]).unwrap();
        assert_eq!((c.soil.eps_real(), c.draws), (9.0, 10));
        assert_eq!(c.grid, default_image_grid());
    }
}
