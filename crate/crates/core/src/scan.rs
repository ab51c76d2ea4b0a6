//! Acquisition geometry, frequency sweeps and the B-scan container.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Speed of light used by the default soil model (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
/// Vacuum permeability (H/m).
pub const MU_0: f64 = 4.0e-7 * PI;

/// Uniform stepped-frequency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SweepSpec", into = "SweepSpec")]
pub struct FrequencySweep {
    f_start: f64,
    f_step: f64,
    n_freqs: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct SweepSpec {
    f_start_hz: f64,
    f_step_hz: f64,
    n_freqs: usize,
}

impl TryFrom<SweepSpec> for FrequencySweep {
    type Error = Error;
    fn try_from(s: SweepSpec) -> Result<Self> {
        FrequencySweep::new(s.f_start_hz, s.f_step_hz, s.n_freqs)
    }
}

impl From<FrequencySweep> for SweepSpec {
    fn from(s: FrequencySweep) -> Self {
        SweepSpec {
            f_start_hz: s.f_start,
            f_step_hz: s.f_step,
            n_freqs: s.n_freqs,
        }
    }
}

impl FrequencySweep {
    pub fn new(f_start: f64, f_step: f64, n_freqs: usize) -> Result<Self> {
        if !(f_start.is_finite() && f_start > 0.0) {
            return Err(Error::Parameter(format!("f_start must be > 0, got {f_start}")));
        }
        if !(f_step.is_finite() && f_step > 0.0) {
            return Err(Error::Parameter(format!("f_step must be > 0, got {f_step}")));
        }
        if n_freqs == 0 {
            return Err(Error::Parameter("sweep needs at least one frequency".into()));
        }
        Ok(Self {
            f_start,
            f_step,
            n_freqs,
        })
    }

    /// Sweep covering `[f_start, f_stop]` inclusive at `f_step`.
    pub fn from_range(f_start: f64, f_stop: f64, f_step: f64) -> Result<Self> {
        if f_stop < f_start {
            return Err(Error::Parameter("f_stop below f_start".into()));
        }
        let n = ((f_stop - f_start) / f_step).round() as usize + 1;
        Self::new(f_start, f_step, n)
    }

    /// 1.2-3.775 GHz in 25 MHz steps (104 frequencies).
    pub fn reference() -> Self {
        Self::from_range(1.2e9, 3.775e9, 25e6).expect("valid constants")
    }

    pub fn f_start(&self) -> f64 {
        self.f_start
    }

    pub fn f_step(&self) -> f64 {
        self.f_step
    }

    pub fn n_freqs(&self) -> usize {
        self.n_freqs
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.f_start + i as f64 * self.f_step
    }

    pub fn angular(&self, i: usize) -> f64 {
        2.0 * PI * self.frequency(i)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_freqs).map(|i| self.frequency(i))
    }

    pub fn f_stop(&self) -> f64 {
        self.frequency(self.n_freqs - 1)
    }

    /// Index of the sweep frequency nearest to `f`.
    pub fn index_of(&self, f: f64) -> Result<usize> {
        let idx = ((f - self.f_start) / self.f_step).round();
        if idx < 0.0 || idx as usize >= self.n_freqs {
            return Err(Error::Index(format!(
                "frequency {f} Hz outside sweep {}..{} Hz",
                self.f_start,
                self.f_stop()
            )));
        }
        Ok(idx as usize)
    }

    pub fn sub_sweep(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.n_freqs {
            return Err(Error::Index(format!(
                "band ({start},{end}) outside sweep of {} frequencies",
                self.n_freqs
            )));
        }
        Self::new(self.frequency(start), self.f_step, end - start + 1)
    }
}

/// Uniformly sampled scan line on the soil surface (z = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScanLineSpec", into = "ScanLineSpec")]
pub struct ScanLine {
    x_start: f64,
    x_step: f64,
    n_positions: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct ScanLineSpec {
    x_start_m: f64,
    x_step_m: f64,
    n_positions: usize,
}

impl TryFrom<ScanLineSpec> for ScanLine {
    type Error = Error;
    fn try_from(s: ScanLineSpec) -> Result<Self> {
        ScanLine::new(s.x_start_m, s.x_step_m, s.n_positions)
    }
}

impl From<ScanLine> for ScanLineSpec {
    fn from(s: ScanLine) -> Self {
        ScanLineSpec {
            x_start_m: s.x_start,
            x_step_m: s.x_step,
            n_positions: s.n_positions,
        }
    }
}

impl ScanLine {
    pub fn new(x_start: f64, x_step: f64, n_positions: usize) -> Result<Self> {
        if !x_start.is_finite() {
            return Err(Error::Parameter("x_start must be finite".into()));
        }
        if !(x_step.is_finite() && x_step > 0.0) {
            return Err(Error::Parameter(format!("x_step must be > 0, got {x_step}")));
        }
        if n_positions == 0 {
            return Err(Error::Parameter("scan line needs at least one position".into()));
        }
        Ok(Self {
            x_start,
            x_step,
            n_positions,
        })
    }

    /// `n_positions` points spread evenly over `[x_start, x_start + length]`.
    pub fn spanning(x_start: f64, length: f64, n_positions: usize) -> Result<Self> {
        if n_positions < 2 {
            return Err(Error::Parameter("spanning scan line needs >= 2 positions".into()));
        }
        Self::new(x_start, length / (n_positions - 1) as f64, n_positions)
    }

    /// 45 positions over 1.2 m.
    pub fn reference() -> Self {
        Self::spanning(0.0, 1.2, 45).expect("valid constants")
    }

    pub fn x_start(&self) -> f64 {
        self.x_start
    }

    pub fn x_step(&self) -> f64 {
        self.x_step
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    pub fn length(&self) -> f64 {
        self.x_step * (self.n_positions - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_start + i as f64 * self.x_step
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_positions).map(|i| self.x(i))
    }
}

/// Homogeneous background soil with complex permittivity `eps_real - j*eps_imag`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SoilSpec", into = "SoilSpec")]
pub struct SoilModel {
    eps_real: f64,
    eps_imag: f64,
    speed_of_light: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct SoilSpec {
    eps_real: f64,
    #[serde(default)]
    eps_imag: f64,
    #[serde(default = "default_c")]
    speed_of_light: f64,
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

impl TryFrom<SoilSpec> for SoilModel {
    type Error = Error;
    fn try_from(s: SoilSpec) -> Result<Self> {
        SoilModel::with_speed_of_light(s.eps_real, s.eps_imag, s.speed_of_light)
    }
}

impl From<SoilModel> for SoilSpec {
    fn from(s: SoilModel) -> Self {
        SoilSpec {
            eps_real: s.eps_real,
            eps_imag: s.eps_imag,
            speed_of_light: s.speed_of_light,
        }
    }
}

impl Default for SoilModel {
    /// Dry sandy soil measured at roughly 4 - 0j across the band.
    fn default() -> Self {
        Self {
            eps_real: 4.0,
            eps_imag: 0.0,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

impl SoilModel {
    pub fn new(eps_real: f64, eps_imag: f64) -> Result<Self> {
        Self::with_speed_of_light(eps_real, eps_imag, SPEED_OF_LIGHT)
    }

    pub fn with_speed_of_light(eps_real: f64, eps_imag: f64, speed_of_light: f64) -> Result<Self> {
        if !(eps_real.is_finite() && eps_real >= 1.0) {
            return Err(Error::Parameter(format!("eps_real must be >= 1, got {eps_real}")));
        }
        if !(eps_imag.is_finite() && eps_imag >= 0.0) {
            return Err(Error::Parameter(format!("eps_imag must be >= 0, got {eps_imag}")));
        }
        if !(speed_of_light.is_finite() && speed_of_light > 0.0) {
            return Err(Error::Parameter("speed of light must be > 0".into()));
        }
        Ok(Self {
            eps_real,
            eps_imag,
            speed_of_light,
        })
    }

    pub fn eps_real(&self) -> f64 {
        self.eps_real
    }

    pub fn eps_imag(&self) -> f64 {
        self.eps_imag
    }

    pub fn speed_of_light(&self) -> f64 {
        self.speed_of_light
    }

    pub fn mu0(&self) -> f64 {
        MU_0
    }

    /// Vacuum permittivity consistent with `mu0` and the configured speed of light.
    pub fn eps0(&self) -> f64 {
        1.0 / (MU_0 * self.speed_of_light * self.speed_of_light)
    }

    pub fn permittivity(&self) -> C64 {
        C64::new(self.eps_real, -self.eps_imag)
    }

    pub fn is_lossless(&self) -> bool {
        self.eps_imag == 0.0
    }

    /// Soil wavenumber `omega * sqrt(eps_c * eps0 * mu0)`; the imaginary part is
    /// non-positive so that `exp(-j k r)` decays.
    pub fn wavenumber(&self, f: f64) -> C64 {
        let omega = 2.0 * PI * f;
        self.permittivity().sqrt() * (omega / self.speed_of_light)
    }
}

/// Soil wavenumber at frequency `f` (Hz).
pub fn wavenumber(f: f64, soil: &SoilModel) -> Result<C64> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::Parameter(format!("frequency must be > 0, got {f}")));
    }
    Ok(soil.wavenumber(f))
}

/// Complex positions-by-frequencies measurement matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BScan {
    sweep: FrequencySweep,
    scanline: ScanLine,
    data: Mat<C64>,
}

impl BScan {
    pub fn new(sweep: FrequencySweep, scanline: ScanLine, data: Mat<C64>) -> Result<Self> {
        if data.nrows() != scanline.n_positions() || data.ncols() != sweep.n_freqs() {
            return Err(Error::Dimension(format!(
                "data is {}x{}, geometry expects {}x{}",
                data.nrows(),
                data.ncols(),
                scanline.n_positions(),
                sweep.n_freqs()
            )));
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                let v = data[(i, j)];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::Parameter(format!("non-finite sample at ({i},{j})")));
                }
            }
        }
        Ok(Self {
            sweep,
            scanline,
            data,
        })
    }

    pub fn zeros(sweep: FrequencySweep, scanline: ScanLine) -> Self {
        Self {
            data: Mat::zeros(scanline.n_positions(), sweep.n_freqs()),
            sweep,
            scanline,
        }
    }

    pub fn from_fn(
        sweep: FrequencySweep,
        scanline: ScanLine,
        f: impl FnMut(usize, usize) -> C64,
    ) -> Result<Self> {
        let data = Mat::from_fn(scanline.n_positions(), sweep.n_freqs(), f);
        Self::new(sweep, scanline, data)
    }

    pub fn sweep(&self) -> &FrequencySweep {
        &self.sweep
    }

    pub fn scanline(&self) -> &ScanLine {
        &self.scanline
    }

    pub fn data(&self) -> &Mat<C64> {
        &self.data
    }

    pub fn n_positions(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_freqs(&self) -> usize {
        self.data.ncols()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_positions(), self.n_freqs())
    }

    pub fn get(&self, pos: usize, freq: usize) -> C64 {
        self.data[(pos, freq)]
    }

    /// Replaces the sample matrix, keeping the geometry.
    pub fn with_data(&self, data: Mat<C64>) -> Result<Self> {
        Self::new(self.sweep, self.scanline, data)
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            sweep: self.sweep,
            scanline: self.scanline,
            data: Mat::from_fn(self.n_positions(), self.n_freqs(), |i, j| self.data[(i, j)] * c),
        }
    }

    /// Samples flattened position-major, frequency-minor (row `s * n_freqs + f`).
    pub fn to_vector(&self) -> Vec<C64> {
        let (ns, nf) = self.dims();
        let mut out = Vec::with_capacity(ns * nf);
        for s in 0..ns {
            for f in 0..nf {
                out.push(self.data[(s, f)]);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n_freqs() {
            for i in 0..self.n_positions() {
                acc += self.data[(i, j)].norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Mean per-sample power.
    pub fn mean_power(&self) -> f64 {
        let n = (self.n_positions() * self.n_freqs()) as f64;
        self.frobenius_norm().powi(2) / n
    }
}

/// Sub-band `start..=end` (sweep indices) of `bscan`; scan positions are unchanged.
pub fn extract_band(bscan: &BScan, band: (usize, usize)) -> Result<BScan> {
    let (start, end) = band;
    let sweep = bscan.sweep().sub_sweep(start, end)?;
    let data = Mat::from_fn(bscan.n_positions(), end - start + 1, |i, j| {
        bscan.data[(i, start + j)]
    });
    Ok(BScan {
        sweep,
        scanline: bscan.scanline,
        data,
    })
}

/// Set of (possibly overlapping) frequency bands, as inclusive index ranges into a sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandPlan {
    bands: Vec<(usize, usize)>,
}

impl BandPlan {
    pub fn new(bands: Vec<(usize, usize)>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Parameter("band plan is empty".into()));
        }
        if let Some(&(s, e)) = bands.iter().find(|(s, e)| s > e) {
            return Err(Error::Parameter(format!("band ({s},{e}) is empty")));
        }
        Ok(Self { bands })
    }

    /// Single band covering the whole sweep.
    pub fn full(sweep: &FrequencySweep) -> Self {
        Self {
            bands: vec![(0, sweep.n_freqs() - 1)],
        }
    }

    /// `count` bands of width `width_hz`, the first starting at `first_start_hz`
    /// and successive starts `spacing_hz` apart. Bands running past the end of
    /// the sweep are clipped to it.
    pub fn uniform(
        sweep: &FrequencySweep,
        count: usize,
        first_start_hz: f64,
        width_hz: f64,
        spacing_hz: f64,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::Parameter("band count must be >= 1".into()));
        }
        let first = sweep.index_of(first_start_hz)?;
        let width = (width_hz / sweep.f_step()).round() as usize;
        let spacing = (spacing_hz / sweep.f_step()).round() as usize;
        let last_idx = sweep.n_freqs() - 1;
        let mut bands = Vec::with_capacity(count);
        for i in 0..count {
            let start = first + i * spacing;
            if start > last_idx {
                return Err(Error::Index(format!("band {i} starts beyond the sweep")));
            }
            bands.push((start, (start + width).min(last_idx)));
        }
        Self::new(bands)
    }

    /// Sixteen 2.2 GHz bands from 1.3 GHz with 25 MHz start spacing, clipped to the sweep.
    pub fn default_for(sweep: &FrequencySweep) -> Result<Self> {
        Self::uniform(sweep, 16, 1.3e9, 2.2e9, 25e6)
    }

    /// Parses either `count:first_start_hz:width_hz:spacing_hz` or a comma
    /// separated list of inclusive index ranges `a-b`.
    pub fn parse(spec: &str, sweep: &FrequencySweep) -> Result<Self> {
        let spec = spec.trim();
        if spec == "full" {
            return Ok(Self::full(sweep));
        }
        if spec == "default" {
            return Self::default_for(sweep);
        }
        if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 4 {
                return Err(Error::Parameter(format!("bad band spec '{spec}'")));
            }
            let count: usize = parts[0]
                .parse()
                .map_err(|_| Error::Parameter(format!("bad band count '{}'", parts[0])))?;
            let nums: Vec<f64> = parts[1..]
                .iter()
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| Error::Parameter(format!("bad number '{p}' in band spec")))
                })
                .collect::<Result<_>>()?;
            return Self::uniform(sweep, count, nums[0], nums[1], nums[2]);
        }
        let mut bands = Vec::new();
        for item in spec.split(',') {
            let (a, b) = item
                .split_once('-')
                .ok_or_else(|| Error::Parameter(format!("bad band range '{item}'")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parameter(format!("bad band index '{t}'")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if b >= sweep.n_freqs() {
                return Err(Error::Index(format!("band {a}-{b} exceeds sweep")));
            }
            bands.push((a, b));
        }
        Self::new(bands)
    }

    pub fn bands(&self) -> &[(usize, usize)] {
        &self.bands
    }

    pub fn n_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn check_against(&self, sweep: &FrequencySweep) -> Result<()> {
        match self.bands.iter().find(|&&(_, e)| e >= sweep.n_freqs()) {
            Some(&(s, e)) => Err(Error::Index(format!(
                "band ({s},{e}) outside sweep of {} frequencies",
                sweep.n_freqs()
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn reference_dimensions() {
        let sweep = FrequencySweep::reference();
        assert_eq!(sweep.n_freqs(), 104);
        assert!(close(sweep.f_stop(), 3.775e9, 1.0));
        let line = ScanLine::reference();
        assert_eq!(line.n_positions(), 45);
        assert!(close(line.length(), 1.2, 1e-12));
    }

    #[test]
    fn wavenumber_values() {
        let soil = SoilModel::default();
        let k = wavenumber(1.5e9, &soil).unwrap();
        assert!(close(k.re, 62.8319, 1e-4), "{k}");
        assert_eq!(k.im, 0.0);
        let k = wavenumber(3.5e9, &soil).unwrap();
        assert!(close(k.re, 146.608, 1e-3), "{k}");

        let vacuum = SoilModel::new(1.0, 0.0).unwrap();
        for f in [1e8, 1.2e9, 7.7e9] {
            let k = wavenumber(f, &vacuum).unwrap();
            assert!(close(k.re, 2.0 * PI * f / SPEED_OF_LIGHT, 1e-12 * k.re));
        }
        assert!(wavenumber(0.0, &soil).is_err());
    }

    #[test]
    fn lossy_wavenumber_decays() {
        let soil = SoilModel::new(4.0, 0.4).unwrap();
        let k = soil.wavenumber(2e9);
        assert!(k.re > 0.0 && k.im < 0.0);
    }

    #[test]
    fn wavenumber_monotone_in_frequency() {
        let soil = SoilModel::default();
        let sweep = FrequencySweep::reference();
        let ks: Vec<f64> = sweep.frequencies().map(|f| soil.wavenumber(f).re).collect();
        assert!(ks.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn soil_and_sweep_validation() {
        assert!(SoilModel::new(0.5, 0.0).is_err());
        assert!(SoilModel::new(4.0, -0.1).is_err());
        assert!(FrequencySweep::new(0.0, 1.0, 3).is_err());
        assert!(FrequencySweep::new(1.0, 0.0, 3).is_err());
        assert!(FrequencySweep::new(1.0, 1.0, 0).is_err());
        assert!(ScanLine::new(0.0, -0.1, 3).is_err());
    }

    #[test]
    fn eps0_mu0_consistent_with_c() {
        let soil = SoilModel::default();
        let c = 1.0 / (soil.eps0() * soil.mu0()).sqrt();
        assert!(close(c, SPEED_OF_LIGHT, 1e-3));
    }

    fn ramp(ns: usize, nf: usize) -> BScan {
        let sweep = FrequencySweep::reference().sub_sweep(0, nf - 1).unwrap();
        let line = ScanLine::new(0.0, 0.01, ns).unwrap();
        BScan::from_fn(sweep, line, |i, j| C64::new(i as f64, j as f64)).unwrap()
    }

    #[test]
    fn extract_full_band_is_identity() {
        let b = ramp(45, 104);
        assert_eq!(extract_band(&b, (0, 103)).unwrap(), b);
    }

    #[test]
    fn extract_single_column() {
        let b = ramp(45, 104);
        let e = extract_band(&b, (0, 0)).unwrap();
        assert_eq!(e.dims(), (45, 1));
        let e = extract_band(&b, (7, 7)).unwrap();
        assert_eq!(e.get(3, 0), C64::new(3.0, 7.0));
        assert_eq!(e.sweep().f_start(), b.sweep().frequency(7));
    }

    #[test]
    fn extract_band_width_2_2ghz() {
        let b = ramp(45, 104);
        let e = extract_band(&b, (4, 4 + 88)).unwrap();
        assert_eq!(e.n_freqs(), 89);
        assert!(close(e.sweep().f_stop() - e.sweep().f_start(), 2.2e9, 1.0));
    }

    #[test]
    fn extract_out_of_range() {
        let b = ramp(3, 5);
        assert!(matches!(extract_band(&b, (2, 5)), Err(Error::Index(_))));
        assert!(matches!(extract_band(&b, (3, 2)), Err(Error::Index(_))));
    }

    #[test]
    fn extract_commutes_with_row_scaling() {
        let b = ramp(4, 10);
        let c = C64::new(0.5, -2.0);
        let lhs = extract_band(&b.scaled(c), (2, 6)).unwrap();
        let rhs = extract_band(&b, (2, 6)).unwrap().scaled(c);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sweep = FrequencySweep::new(1e9, 1e6, 3).unwrap();
        let line = ScanLine::new(0.0, 0.1, 2).unwrap();
        assert!(matches!(
            BScan::new(sweep, line, Mat::zeros(3, 2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn default_band_plan_clips_to_sweep() {
        let sweep = FrequencySweep::reference();
        let plan = BandPlan::default_for(&sweep).unwrap();
        assert_eq!(plan.n_bands(), 16);
        assert_eq!(plan.bands()[0], (4, 92));
        assert_eq!(plan.bands()[11], (15, 103));
        assert_eq!(plan.bands()[15], (19, 103));
        plan.check_against(&sweep).unwrap();
    }

    #[test]
    fn band_plan_parsing() {
        let sweep = FrequencySweep::reference();
        let p = BandPlan::parse("0-10, 5-20", &sweep).unwrap();
        assert_eq!(p.bands(), &[(0, 10), (5, 20)]);
        let q = BandPlan::parse("16:1.3e9:2.2e9:25e6", &sweep).unwrap();
        assert_eq!(q, BandPlan::default_for(&sweep).unwrap());
        assert!(BandPlan::parse("0-200", &sweep).is_err());
        assert!(BandPlan::parse("garbage", &sweep).is_err());
        assert_eq!(BandPlan::parse("full", &sweep).unwrap().bands(), &[(0, 103)]);
    }
}
