//! Born approximation imaging: the discretised scattering operator and its
//! truncated-SVD pseudo-inverse.
//!
//! Each grid cell is replaced by a circle of equal area (radius `a`), whose
//! integral of the 2-D Green's function against a plane-wave incident field has
//! the closed form
//!
//! ```text
//! Gamma[n, m] = -a * j * pi * (k / 2) * exp(-j k r) * J1(k a) * H0^(2)(k r)
//! ```
//!
//! with `r` the distance from cell `m` to the scan position of row `n`.
//! Data rows are ordered position-major, frequency-minor: `n = s * n_freqs + f`.

use faer::Mat;

use crate::error::{Error, Result};
use crate::grid::ReconstructionGrid;
use crate::image::{Image, ImageKind};
use crate::linalg::{frobenius_norm, ThinSvd};
use crate::scan::{BScan, FrequencySweep, ScanLine, SoilModel, C64};
use crate::specfun::{self, J1_FIRST_ZERO};

/// Plane-wave incident field `exp(-j k_s r)` at distance `r` from the source.
pub fn incident_field(r: f64, f: f64, soil: &SoilModel) -> Result<C64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Parameter(format!("distance must be >= 0, got {r}")));
    }
    let k = crate::scan::wavenumber(f, soil)?;
    Ok((-C64::i() * k * r).exp())
}

/// Entry generator for the Born operator, shared by imaging and forward simulation.
#[derive(Debug, Clone)]
pub struct GammaOperator {
    grid: ReconstructionGrid,
    scanline: ScanLine,
    sweep: FrequencySweep,
    soil: SoilModel,
    wavenumbers: Vec<f64>,
    /// `-a j pi (k/2) J1(k a)` per frequency.
    prefactors: Vec<C64>,
}

impl GammaOperator {
    pub fn new(
        grid: &ReconstructionGrid,
        scanline: &ScanLine,
        sweep: &FrequencySweep,
        soil: &SoilModel,
    ) -> Result<Self> {
        if !soil.is_lossless() {
            return Err(Error::Parameter(
                "the Born kernel uses real-argument Bessel functions and needs lossless soil (eps_imag = 0)"
                    .into(),
            ));
        }
        let a = grid.equivalent_radius();
        let mut wavenumbers = Vec::with_capacity(sweep.n_freqs());
        let mut prefactors = Vec::with_capacity(sweep.n_freqs());
        for f in sweep.frequencies() {
            let k = soil.wavenumber(f).re;
            if k * a >= J1_FIRST_ZERO {
                return Err(Error::MeshTooCoarse { ka: k * a, freq_hz: f });
            }
            wavenumbers.push(k);
            prefactors.push(C64::new(0.0, -a * std::f64::consts::PI * 0.5 * k * specfun::j1(k * a)));
        }
        for (m, (x, z)) in grid.centers().enumerate() {
            for xs in scanline.positions() {
                if (x - xs).hypot(z) <= 1e-12 {
                    return Err(Error::Geometry(format!(
                        "cell {m} center coincides with scan point x = {xs}"
                    )));
                }
            }
        }
        Ok(Self {
            grid: *grid,
            scanline: *scanline,
            sweep: *sweep,
            soil: *soil,
            wavenumbers,
            prefactors,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.scanline.n_positions() * self.sweep.n_freqs()
    }

    pub fn n_cols(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn grid(&self) -> &ReconstructionGrid {
        &self.grid
    }

    pub fn scanline(&self) -> &ScanLine {
        &self.scanline
    }

    pub fn sweep(&self) -> &FrequencySweep {
        &self.sweep
    }

    pub fn soil(&self) -> &SoilModel {
        &self.soil
    }

    /// `Gamma[s * n_freqs + f, m]`.
    pub fn entry(&self, s: usize, f: usize, m: usize) -> C64 {
        let (x, z) = self.grid.center(m);
        let r = (x - self.scanline.x(s)).hypot(z);
        self.entry_at_distance(f, r)
    }

    fn entry_at_distance(&self, f: usize, r: f64) -> C64 {
        let kr = self.wavenumbers[f] * r;
        let (j0, y0) = specfun::j0_y0(kr);
        let hankel = C64::new(j0, -y0);
        let incident = C64::from_polar(1.0, -kr);
        self.prefactors[f] * incident * hankel
    }

    /// Column `m` of the operator (the response of cell `m`), in data-row order.
    pub fn column(&self, m: usize) -> Vec<C64> {
        let (x, z) = self.grid.center(m);
        let nf = self.sweep.n_freqs();
        let mut out = Vec::with_capacity(self.n_rows());
        for s in 0..self.scanline.n_positions() {
            let r = (x - self.scanline.x(s)).hypot(z);
            out.extend((0..nf).map(|f| self.entry_at_distance(f, r)));
        }
        out
    }

    pub fn assemble(&self) -> Mat<C64> {
        let mut mat = Mat::<C64>::zeros(self.n_rows(), self.n_cols());
        for m in 0..self.n_cols() {
            for (n, v) in self.column(m).into_iter().enumerate() {
                mat[(n, m)] = v;
            }
        }
        mat
    }

    /// `Gamma * tau`, visiting only the non-zero cells of `tau`.
    pub fn apply(&self, tau: &[C64]) -> Result<Vec<C64>> {
        if tau.len() != self.n_cols() {
            return Err(Error::Dimension(format!(
                "contrast has {} cells, operator has {}",
                tau.len(),
                self.n_cols()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.n_rows()];
        for (m, &t) in tau.iter().enumerate() {
            if t == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, g) in out.iter_mut().zip(self.column(m)) {
                *o += g * t;
            }
        }
        Ok(out)
    }

    pub(crate) fn matches(&self, bscan: &BScan) -> bool {
        bscan.sweep() == &self.sweep && bscan.scanline() == &self.scanline
    }
}

/// Assembled Born operator together with its thin SVD.
#[derive(Debug, Clone)]
pub struct GammaMatrix {
    operator: GammaOperator,
    entries: Mat<C64>,
    svd: ThinSvd,
}

/// Builds the operator for one band and factors it.
pub fn build_gamma(
    grid: &ReconstructionGrid,
    scanline: &ScanLine,
    sweep: &FrequencySweep,
    soil: &SoilModel,
) -> Result<GammaMatrix> {
    GammaMatrix::new(GammaOperator::new(grid, scanline, sweep, soil)?)
}

impl GammaMatrix {
    pub fn new(operator: GammaOperator) -> Result<Self> {
        let entries = operator.assemble();
        let svd = ThinSvd::compute(entries.as_ref())?;
        Ok(Self {
            operator,
            entries,
            svd,
        })
    }

    pub fn operator(&self) -> &GammaOperator {
        &self.operator
    }

    pub fn entries(&self) -> &Mat<C64> {
        &self.entries
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.svd.s
    }

    pub fn svd(&self) -> &ThinSvd {
        &self.svd
    }

    pub fn n_positive(&self) -> usize {
        self.svd.s.iter().take_while(|&&s| s > 0.0).count()
    }

    /// `|| U S V* - Gamma ||_F / || Gamma ||_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let back = self.svd.leading_terms(self.svd.s.len());
        frobenius_norm((&back - &self.entries).as_ref()) / frobenius_norm(self.entries.as_ref())
    }

    /// `Gamma * tau` with the assembled entries.
    pub fn apply(&self, tau: &[C64]) -> Result<Vec<C64>> {
        if tau.len() != self.entries.ncols() {
            return Err(Error::Dimension("contrast length differs from operator columns".into()));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.entries.nrows()];
        for (m, &t) in tau.iter().enumerate() {
            for (n, o) in out.iter_mut().enumerate() {
                *o += self.entries[(n, m)] * t;
            }
        }
        Ok(out)
    }
}

/// Knee of a non-increasing singular value curve: the count `t` (1-based) that
/// maximises `ln(s[t-1] / s[t])`. A drop to exactly zero counts as an infinite gap.
pub fn svd_threshold_index(singular_values: &[f64]) -> Result<usize> {
    if singular_values.len() < 2 {
        return Err(Error::Parameter("knee detection needs at least two singular values".into()));
    }
    if singular_values.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Parameter("singular values must be finite and >= 0".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, w) in singular_values.windows(2).enumerate() {
        let gap = if w[1] > 0.0 {
            (w[0] / w[1]).ln()
        } else if w[0] > 0.0 {
            f64::INFINITY
        } else {
            continue;
        };
        if best.is_none_or(|(_, g)| gap > g) {
            best = Some((i, gap));
        }
    }
    match best {
        Some((i, gap)) if gap > 0.0 => Ok(i + 1),
        _ => Err(Error::NoKnee),
    }
}

/// `tau = sum_{i < keep} (u_i* e_s / s_i) v_i`.
pub fn tsvd_invert(gamma: &GammaMatrix, e_s: &[C64], keep: usize) -> Result<Vec<C64>> {
    let svd = gamma.svd();
    if e_s.len() != svd.u.nrows() {
        return Err(Error::Dimension(format!(
            "data vector has {} entries, operator has {} rows",
            e_s.len(),
            svd.u.nrows()
        )));
    }
    let positive = gamma.n_positive();
    if keep == 0 || keep > positive {
        return Err(Error::Parameter(format!(
            "truncation index {keep} outside 1..={positive}"
        )));
    }
    let m = svd.v.nrows();
    let mut tau = vec![C64::new(0.0, 0.0); m];
    for i in 0..keep {
        let mut coef = C64::new(0.0, 0.0);
        for (n, e) in e_s.iter().enumerate() {
            coef += svd.u[(n, i)].conj() * e;
        }
        coef /= svd.s[i];
        for (j, t) in tau.iter_mut().enumerate() {
            *t += coef * svd.v[(j, i)];
        }
    }
    Ok(tau)
}

/// Born image with a precomputed operator. `keep = None` selects the knee.
pub fn baa_image_with(gamma: &GammaMatrix, bscan: &BScan, keep: Option<usize>) -> Result<Image> {
    if !gamma.operator().matches(bscan) {
        return Err(Error::Dimension(
            "B-scan sweep or scan line differs from the operator geometry".into(),
        ));
    }
    let keep = match keep {
        Some(k) => k,
        None => svd_threshold_index(gamma.singular_values())?,
    };
    let tau = tsvd_invert(gamma, &bscan.to_vector(), keep)?;
    Image::from_cells(*gamma.operator().grid(), &tau, ImageKind::Baa { keep })
}

/// Born image of `bscan` on `grid`.
pub fn baa_image(
    bscan: &BScan,
    grid: &ReconstructionGrid,
    soil: &SoilModel,
    keep: Option<usize>,
) -> Result<Image> {
    let gamma = build_gamma(grid, bscan.scanline(), bscan.sweep(), soil)?;
    baa_image_with(&gamma, bscan, keep)
}
