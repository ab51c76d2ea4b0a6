//! Synthetic B-scan generation: point targets, Born-model contrast maps,
//! position-invariant clutter, additive noise and system delay.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::baa::GammaOperator;
use crate::error::{Error, Result};
use crate::grid::ReconstructionGrid;
use crate::preprocess::apply_delay_phase;
use crate::scan::{BScan, FrequencySweep, ScanLine, SoilModel, C64};

/// Delay of the simulated coupling/ground clutter term (s).
pub const DEFAULT_CLUTTER_DELAY: f64 = 0.5e-9;

/// Serialises a complex number as `[re, im]`.
pub mod complex_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scan::C64;

    pub fn serialize<S: Serializer>(v: &C64, s: S) -> Result<S::Ok, S::Error> {
        [v.re, v.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer {
    pub x: f64,
    /// Depth below the surface (m), must be > 0.
    pub z: f64,
    #[serde(with = "complex_pair")]
    pub amplitude: C64,
}

impl PointScatterer {
    pub fn new(x: f64, z: f64, amplitude: C64) -> Self {
        Self { x, z, amplitude }
    }
}

/// Per-cell contrast `tau = eps_r - 1` on a reconstruction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMap {
    grid: ReconstructionGrid,
    tau: Vec<C64>,
}

impl ContrastMap {
    pub fn zeros(grid: ReconstructionGrid) -> Self {
        Self {
            tau: vec![C64::new(0.0, 0.0); grid.n_cells()],
            grid,
        }
    }

    pub fn new(grid: ReconstructionGrid, tau: Vec<C64>) -> Result<Self> {
        if tau.len() != grid.n_cells() {
            return Err(Error::Dimension(format!(
                "{} contrast values for {} cells",
                tau.len(),
                grid.n_cells()
            )));
        }
        if tau.iter().any(|t| !(t.re.is_finite() && t.im.is_finite())) {
            return Err(Error::Parameter("contrast must be finite".into()));
        }
        Ok(Self { grid, tau })
    }

    pub fn grid(&self) -> &ReconstructionGrid {
        &self.grid
    }

    pub fn tau(&self) -> &[C64] {
        &self.tau
    }

    pub fn set(&mut self, ix: usize, iz: usize, value: C64) {
        let m = self.grid.index(ix, iz);
        self.tau[m] = value;
    }

    /// Adds `value` to every cell whose center lies in the rectangle (bounds inclusive).
    pub fn add_rectangle(&mut self, x_min: f64, x_max: f64, z_min: f64, z_max: f64, value: C64) -> usize {
        self.add_where(|x, z| x >= x_min && x <= x_max && z >= z_min && z <= z_max, value)
    }

    /// Adds `value` to every cell whose center lies within `radius` of `(x, z)`.
    pub fn add_disk(&mut self, x: f64, z: f64, radius: f64, value: C64) -> usize {
        self.add_where(|cx, cz| (cx - x).hypot(cz - z) <= radius, value)
    }

    fn add_where(&mut self, inside: impl Fn(f64, f64) -> bool, value: C64) -> usize {
        let mut count = 0;
        for m in 0..self.grid.n_cells() {
            let (x, z) = self.grid.center(m);
            if inside(x, z) {
                self.tau[m] += value;
                count += 1;
            }
        }
        count
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            grid: self.grid,
            tau: self.tau.iter().map(|t| t * c).collect(),
        }
    }
}

/// Round-trip point-target model `E(s, f) = sum_p A_p exp(-2j k_f |r_p - r_s|)`.
pub fn simulate_points(
    scatterers: &[PointScatterer],
    scanline: &ScanLine,
    sweep: &FrequencySweep,
    soil: &SoilModel,
) -> Result<BScan> {
    if scatterers.is_empty() {
        return Err(Error::Parameter("at least one scatterer is required".into()));
    }
    if let Some(p) = scatterers.iter().find(|p| !(p.z > 0.0 && p.x.is_finite())) {
        return Err(Error::Geometry(format!(
            "scatterer at ({}, {}) is not below the surface",
            p.x, p.z
        )));
    }
    let ks: Vec<C64> = sweep.frequencies().map(|f| soil.wavenumber(f)).collect();
    let mut data = Mat::<C64>::zeros(scanline.n_positions(), sweep.n_freqs());
    for s in 0..scanline.n_positions() {
        let xs = scanline.x(s);
        for p in scatterers {
            let d = (p.x - xs).hypot(p.z);
            for (f, k) in ks.iter().enumerate() {
                data[(s, f)] += p.amplitude * (C64::new(0.0, -2.0) * k * d).exp();
            }
        }
    }
    BScan::new(*sweep, *scanline, data)
}

/// Born-model data `Gamma * tau`, reshaped to positions x frequencies.
pub fn simulate_born(
    contrast: &ContrastMap,
    scanline: &ScanLine,
    sweep: &FrequencySweep,
    soil: &SoilModel,
) -> Result<BScan> {
    let op = GammaOperator::new(contrast.grid(), scanline, sweep, soil)?;
    simulate_born_with(&op, contrast)
}

/// As [`simulate_born`] with a prepared operator.
pub fn simulate_born_with(op: &GammaOperator, contrast: &ContrastMap) -> Result<BScan> {
    if op.grid() != contrast.grid() {
        return Err(Error::Dimension("contrast grid differs from operator grid".into()));
    }
    let e = op.apply(contrast.tau())?;
    let nf = op.sweep().n_freqs();
    BScan::from_fn(*op.sweep(), *op.scanline(), |s, f| e[s * nf + f])
}

/// Adds the position-invariant term `level * exp(-j w t_c)` to every row.
pub fn add_clutter(bscan: &BScan, level: f64, t_c: f64) -> Result<BScan> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(Error::Parameter(format!("clutter level must be >= 0, got {level}")));
    }
    if level == 0.0 {
        return Ok(bscan.clone());
    }
    let sweep = bscan.sweep();
    let row: Vec<C64> = (0..bscan.n_freqs())
        .map(|f| C64::from_polar(level, -sweep.angular(f) * t_c))
        .collect();
    let data = Mat::from_fn(bscan.n_positions(), bscan.n_freqs(), |s, f| {
        bscan.get(s, f) + row[f]
    });
    bscan.with_data(data)
}

/// Adds circular complex Gaussian noise at `snr_db` relative to the mean sample power.
/// `f64::INFINITY` leaves the scan untouched.
pub fn add_noise(bscan: &BScan, snr_db: f64, seed: u64) -> Result<BScan> {
    if snr_db == f64::INFINITY {
        return Ok(bscan.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::Parameter(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let signal_power = bscan.mean_power();
    if signal_power == 0.0 {
        return Err(Error::Parameter("cannot set an SNR for an all-zero B-scan".into()));
    }
    let noise_power = signal_power / 10f64.powf(snr_db / 10.0);
    let sigma = (noise_power / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ns, nf) = bscan.dims();
    let mut data = bscan.data().clone();
    for s in 0..ns {
        for f in 0..nf {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            data[(s, f)] += C64::new(re, im) * sigma;
        }
    }
    bscan.with_data(data)
}

/// Applies a system delay `t` (multiplies by `exp(-j w t)`).
pub fn delay(bscan: &BScan, t: f64) -> Result<BScan> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Parameter(format!("delay must be >= 0, got {t}")));
    }
    Ok(apply_delay_phase(bscan, -t))
}
