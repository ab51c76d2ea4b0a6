//! Scenario files describing synthetic acquisitions, and the manifest written
//! next to the simulated B-scans.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bscan_io::save_bscan;
use crate::error::{Error, Result};
use crate::forward::{
    add_clutter, add_noise, complex_pair, delay, simulate_born_with, simulate_points, ContrastMap,
    PointScatterer, DEFAULT_CLUTTER_DELAY,
};
use crate::baa::GammaOperator;
use crate::grid::ReconstructionGrid;
use crate::moisture::{mix_seed, REFERENCE_SM_LEVELS};
use crate::scan::{BScan, FrequencySweep, ScanLine, SoilModel, C64};

/// Cells used to rasterise contrast patches unless a scenario says otherwise:
/// 2 cm squares over the region around the pipe.
pub fn default_scene_grid() -> ReconstructionGrid {
    ReconstructionGrid::new(0.3, 0.9, 0.02, 0.26, 30, 12).expect("valid grid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Patch {
    Rectangle {
        x_min: f64,
        x_max: f64,
        z_min: f64,
        z_max: f64,
        #[serde(with = "complex_pair")]
        tau: C64,
    },
    Disk {
        x: f64,
        z: f64,
        radius: f64,
        #[serde(with = "complex_pair")]
        tau: C64,
    },
}

impl Patch {
    fn rasterise(&self, map: &mut ContrastMap) -> usize {
        match *self {
            Patch::Rectangle { x_min, x_max, z_min, z_max, tau } => {
                map.add_rectangle(x_min, x_max, z_min, z_max, tau)
            }
            Patch::Disk { x, z, radius, tau } => map.add_disk(x, z, radius, tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub name: String,
    /// True soil moisture (percent), when known.
    #[serde(default)]
    pub sm: Option<f64>,
    /// Acquisition time (minutes) for temporal series.
    #[serde(default)]
    pub time_min: Option<f64>,
    #[serde(default)]
    pub points: Vec<PointScatterer>,
    #[serde(default)]
    pub patches: Vec<Patch>,
}

/// Clutter added to every scene: either an absolute amplitude or a level in dB
/// relative to the scene's RMS sample amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterSpec {
    #[serde(default)]
    pub level: Option<f64>,
    #[serde(default)]
    pub relative_db: Option<f64>,
    #[serde(default = "default_clutter_delay")]
    pub delay_s: f64,
}

fn default_clutter_delay() -> f64 {
    DEFAULT_CLUTTER_DELAY
}

impl ClutterSpec {
    fn amplitude(&self, signal: &BScan) -> Result<f64> {
        match (self.level, self.relative_db) {
            (Some(level), None) => Ok(level),
            (None, Some(db)) => Ok(signal.mean_power().sqrt() * 10f64.powf(db / 20.0)),
            _ => Err(Error::Parameter(
                "clutter needs exactly one of 'level' or 'relative_db'".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipeSpec {
    pub x: f64,
    /// Depth of the pipe crown (m).
    pub top_z: f64,
    pub diameter: f64,
    #[serde(with = "complex_pair")]
    pub tau: C64,
}

impl Default for PipeSpec {
    fn default() -> Self {
        Self { x: 0.6, top_z: 0.12, diameter: 0.045, tau: C64::new(2.0, 0.0) }
    }
}

impl PipeSpec {
    pub fn patch(&self) -> Patch {
        let r = self.diameter / 2.0;
        Patch::Disk { x: self.x, z: self.top_z + r, radius: r, tau: self.tau }
    }
}

/// Moist soil bag above the pipe; contrast grows linearly with SM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BagSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    #[serde(with = "complex_pair")]
    pub tau_per_percent: C64,
}

impl Default for BagSpec {
    fn default() -> Self {
        Self {
            x_min: 0.54,
            x_max: 0.66,
            z_min: 0.04,
            z_max: 0.10,
            tau_per_percent: C64::new(0.005, 0.0),
        }
    }
}

impl BagSpec {
    pub fn patch(&self, sm: f64) -> Patch {
        Patch::Rectangle {
            x_min: self.x_min,
            x_max: self.x_max,
            z_min: self.z_min,
            z_max: self.z_max,
            tau: self.tau_per_percent * sm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoistureSweep {
    #[serde(default)]
    pub pipe: PipeSpec,
    #[serde(default)]
    pub bag: BagSpec,
    #[serde(default = "reference_levels")]
    pub levels: Vec<f64>,
}

fn reference_levels() -> Vec<f64> {
    REFERENCE_SM_LEVELS.to_vec()
}

/// Leak that wets the bag as `sm_final (1 - exp(-t / time_constant_min))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalLeak {
    #[serde(default)]
    pub pipe: PipeSpec,
    #[serde(default)]
    pub bag: BagSpec,
    pub times_min: Vec<f64>,
    pub sm_final: f64,
    pub time_constant_min: f64,
}

impl TemporalLeak {
    pub fn sm_at(&self, t: f64) -> f64 {
        -self.sm_final * (-t / self.time_constant_min).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "FrequencySweep::reference")]
    pub sweep: FrequencySweep,
    #[serde(default = "ScanLine::reference")]
    pub scanline: ScanLine,
    #[serde(default)]
    pub soil: SoilModel,
    #[serde(default)]
    pub seed: u64,
    /// Fixed system delay applied to every scene (s).
    #[serde(default)]
    pub system_delay_s: f64,
    #[serde(default)]
    pub clutter: Option<ClutterSpec>,
    /// Signal-to-noise ratio in dB; absent means noiseless.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_scene_grid")]
    pub scene_grid: ReconstructionGrid,
    #[serde(default)]
    pub scenes: Vec<Scene>,
    #[serde(default)]
    pub moisture_sweep: Option<MoistureSweep>,
    #[serde(default)]
    pub temporal: Option<TemporalLeak>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            line: e.line(),
            message: format!("scenario: {e}"),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Synthetic moisture sweep over the reference SM levels with default pipe and bag.
    pub fn reference_moisture_sweep() -> Self {
        Self {
            sweep: FrequencySweep::reference(),
            scanline: ScanLine::reference(),
            soil: SoilModel::default(),
            seed: 0,
            system_delay_s: 0.0,
            clutter: None,
            snr_db: None,
            scene_grid: default_scene_grid(),
            scenes: Vec::new(),
            moisture_sweep: Some(MoistureSweep {
                pipe: PipeSpec::default(),
                bag: BagSpec::default(),
                levels: reference_levels(),
            }),
            temporal: None,
        }
    }

    /// Explicit scenes followed by generated ones.
    pub fn all_scenes(&self) -> Vec<Scene> {
        let mut scenes = self.scenes.clone();
        if let Some(ms) = &self.moisture_sweep {
            for &sm in &ms.levels {
                scenes.push(Scene {
                    name: format!("sm_{sm}"),
                    sm: Some(sm),
                    time_min: None,
                    points: Vec::new(),
                    patches: vec![ms.pipe.patch(), ms.bag.patch(sm)],
                });
            }
        }
        if let Some(tl) = &self.temporal {
            for &t in &tl.times_min {
                let sm = tl.sm_at(t);
                scenes.push(Scene {
                    name: format!("t_{t}"),
                    sm: Some(sm),
                    time_min: Some(t),
                    points: Vec::new(),
                    patches: vec![tl.pipe.patch(), tl.bag.patch(sm)],
                });
            }
        }
        scenes
    }

    fn check(&self) -> Result<()> {
        if !(self.system_delay_s.is_finite() && self.system_delay_s >= 0.0) {
            return Err(Error::Parameter("system_delay_s must be >= 0".into()));
        }
        if let Some(tl) = &self.temporal {
            if !(tl.time_constant_min > 0.0) {
                return Err(Error::Parameter("time_constant_min must be > 0".into()));
            }
        }
        Ok(())
    }

    /// Simulates every scene in order.
    pub fn simulate(&self) -> Result<Vec<(Scene, BScan)>> {
        self.check()?;
        let scenes = self.all_scenes();
        let needs_born = scenes.iter().any(|s| !s.patches.is_empty());
        let operator = if needs_born {
            Some(GammaOperator::new(&self.scene_grid, &self.scanline, &self.sweep, &self.soil)?)
        } else {
            None
        };
        scenes
            .into_iter()
            .enumerate()
            .map(|(i, scene)| {
                let b = self.simulate_scene(&scene, operator.as_ref(), i as u64)?;
                Ok((scene, b))
            })
            .collect()
    }

    fn simulate_scene(&self, scene: &Scene, operator: Option<&GammaOperator>, index: u64) -> Result<BScan> {
        let mut bscan = BScan::zeros(self.sweep, self.scanline);
        if !scene.patches.is_empty() {
            let mut map = ContrastMap::zeros(self.scene_grid);
            for p in &scene.patches {
                if p.rasterise(&mut map) == 0 {
                    return Err(Error::Geometry(format!(
                        "scene '{}': a patch covers no cell of the scene grid",
                        scene.name
                    )));
                }
            }
            let op = operator.expect("operator built for patch scenes");
            bscan = simulate_born_with(op, &map)?;
        }
        if !scene.points.is_empty() {
            let pts = simulate_points(&scene.points, &self.scanline, &self.sweep, &self.soil)?;
            bscan = bscan.with_data(bscan.data() + pts.data())?;
        }
        if let Some(c) = &self.clutter {
            bscan = add_clutter(&bscan, c.amplitude(&bscan)?, c.delay_s)?;
        }
        if let Some(snr) = self.snr_db {
            bscan = add_noise(&bscan, snr, mix_seed(self.seed, &[index]))?;
        }
        if self.system_delay_s > 0.0 {
            bscan = delay(&bscan, self.system_delay_s)?;
        }
        Ok(bscan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// B-scan path relative to the manifest.
    pub file: PathBuf,
    #[serde(default)]
    pub sm: Option<f64>,
    #[serde(default)]
    pub time_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub soil: SoilModel,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            line: e.line(),
            message: format!("manifest {}: {e}", path.display()),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json("manifest", e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Simulates `scenario` into `out_dir` (one `.bscan` per scene plus `manifest.json`).
pub fn write_scenario(scenario: &Scenario, out_dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::new();
    for (i, (scene, bscan)) in scenario.simulate()?.into_iter().enumerate() {
        let file = PathBuf::from(format!("{i:03}_{}.bscan", sanitize(&scene.name)));
        save_bscan(&bscan, out_dir.join(&file))?;
        entries.push(ManifestEntry { name: scene.name, file, sm: scene.sm, time_min: scene.time_min });
    }
    let manifest = Manifest { soil: scenario.soil, entries };
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let s = Scenario::from_json(r#"{"scenes": []}"#).unwrap();
        assert_eq!(s.sweep, FrequencySweep::reference());
        assert!(s.all_scenes().is_empty());
        assert!(s.simulate().unwrap().is_empty());
    }

    #[test]
    fn parse_error_reports_line() {
        let err = Scenario::from_json("{\n \"scenes\": [\n {\"nme\": 1}\n]}").unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err}");
    }

    #[test]
    fn moisture_sweep_generates_eight_scenes() {
        let s = Scenario::reference_moisture_sweep();
        let scenes = s.all_scenes();
        assert_eq!(scenes.len(), 8);
        assert_eq!(scenes[0].sm, Some(12.5));
        assert_eq!(scenes[7].name, "sm_100");
    }

    #[test]
    fn default_pipe_and_bag_cover_cells() {
        let grid = default_scene_grid();
        let mut map = ContrastMap::zeros(grid);
        assert!(PipeSpec::default().patch().rasterise(&mut map) >= 4);
        assert!(BagSpec::default().patch(50.0).rasterise(&mut map) >= 6);
    }

    #[test]
    fn point_scene_with_noise_is_seeded() {
        let text = r#"{
            "seed": 5, "snr_db": 20, "clutter": {"relative_db": 10},
            "scenes": [{"name": "p", "points": [{"x": 0.6, "z": 0.2, "amplitude": [1, 0]}]}]
        }"#;
        let s = Scenario::from_json(text).unwrap();
        let a = s.simulate().unwrap();
        let b = s.simulate().unwrap();
        assert_eq!(a[0].1, b[0].1);
        let other = Scenario { seed: 6, ..s.clone() }.simulate().unwrap();
        assert_ne!(a[0].1, other[0].1);
    }

    #[test]
    fn temporal_generator_follows_saturation() {
        let t = TemporalLeak {
            pipe: PipeSpec::default(),
            bag: BagSpec::default(),
            times_min: vec![0.0, 30.0],
            sm_final: 20.0,
            time_constant_min: 30.0,
        };
        assert_eq!(t.sm_at(0.0), 0.0);
        assert!((t.sm_at(30.0) - 20.0 * (1.0 - (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn bad_clutter_spec_rejected() {
        let text = r#"{"clutter": {"level": 1, "relative_db": 3},
            "scenes": [{"name": "p", "points": [{"x": 0.6, "z": 0.2, "amplitude": [1, 0]}]}]}"#;
        assert!(Scenario::from_json(text).unwrap().simulate().is_err());
    }
}
