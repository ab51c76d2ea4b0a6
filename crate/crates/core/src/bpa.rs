//! Frequency-domain back projection.
//!
//! Each cell accumulates `S(r) = sum_f sum_s E(s, f) exp(+2j k_f |r - r_s|)`, which
//! undoes the round-trip phase of a scatterer located at `r`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ReconstructionGrid;
use crate::image::{Image, ImageKind};
use crate::scan::{BScan, SoilModel, C64};

/// Phasors are recomputed directly every this many frequencies to bound rounding drift.
const RESYNC: usize = 32;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BpaOptions {
    /// Weight each term by the one-way distance to offset cylindrical spreading.
    pub spreading_compensation: bool,
}

pub fn bpa_image(bscan: &BScan, grid: &ReconstructionGrid, soil: &SoilModel) -> Result<Image> {
    bpa_image_with(bscan, grid, soil, BpaOptions::default())
}

pub fn bpa_image_with(
    bscan: &BScan,
    grid: &ReconstructionGrid,
    soil: &SoilModel,
    options: BpaOptions,
) -> Result<Image> {
    if grid.n_cells() == 0 {
        return Err(Error::Parameter("reconstruction grid has no cells".into()));
    }
    let sweep = bscan.sweep();
    let line = bscan.scanline();
    // k is proportional to f, so along a sweep exp(2j k_f d) is a geometric sequence
    let k0 = soil.wavenumber(sweep.f_start());
    let dk = soil.wavenumber(sweep.f_step());
    let xs: Vec<f64> = line.positions().collect();
    // row-major copy so the inner loop walks contiguous memory
    let (ns, nf) = bscan.dims();
    let samples: Vec<C64> = (0..ns)
        .flat_map(|s| (0..nf).map(move |f| (s, f)))
        .map(|(s, f)| bscan.get(s, f))
        .collect();

    let cells: Vec<C64> = (0..grid.n_cells())
        .into_par_iter()
        .map(|m| {
            let (x, z) = grid.center(m);
            let mut acc = C64::new(0.0, 0.0);
            for (s, &x_s) in xs.iter().enumerate() {
                let d = (x - x_s).hypot(z);
                let row = &samples[s * nf..(s + 1) * nf];
                let step = (C64::new(0.0, 2.0) * dk * d).exp();
                let mut partial = C64::new(0.0, 0.0);
                for (chunk_index, chunk) in row.chunks(RESYNC).enumerate() {
                    let f0 = (chunk_index * RESYNC) as f64;
                    let mut phasor = (C64::new(0.0, 2.0) * (k0 + dk * f0) * d).exp();
                    for e in chunk {
                        partial += e * phasor;
                        phasor *= step;
                    }
                }
                acc += if options.spreading_compensation { partial * d } else { partial };
            }
            acc
        })
        .collect();
    Image::from_cells(*grid, &cells, ImageKind::Bpa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{simulate_points, PointScatterer};
    use crate::scan::{FrequencySweep, ScanLine};

    fn setup() -> (ScanLine, FrequencySweep, SoilModel, ReconstructionGrid) {
        (
            ScanLine::reference(),
            FrequencySweep::reference(),
            SoilModel::default(),
            ReconstructionGrid::default(),
        )
    }

    fn unit(x: f64, z: f64) -> PointScatterer {
        PointScatterer::new(x, z, C64::new(1.0, 0.0))
    }

    #[test]
    fn point_at_cell_center_sums_coherently() {
        let (line, sweep, soil, grid) = setup();
        let (x, z) = (grid.x_center(27), grid.z_center(18));
        let b = simulate_points(&[unit(x, z)], &line, &sweep, &soil).unwrap();
        let img = bpa_image(&b, &grid, &soil).unwrap();
        let peak = img.peak();
        assert_eq!((peak.ix, peak.iz), (27, 18));
        assert!((peak.magnitude - 4680.0).abs() <= 1e-9 * 4680.0);
    }

    #[test]
    fn zero_scan_gives_zero_image() {
        let (line, sweep, soil, grid) = setup();
        let img = bpa_image(&BScan::zeros(sweep, line), &grid, &soil).unwrap();
        assert_eq!(img.frobenius_norm(), 0.0);
    }

    #[test]
    fn two_scatterers_keep_amplitude_ratio() {
        let (line, sweep, soil, grid) = setup();
        let a = (grid.x_center(20), grid.z_center(15));
        let b = (grid.x_center(40), grid.z_center(40));
        let scan = simulate_points(
            &[unit(a.0, a.1), PointScatterer::new(b.0, b.1, C64::new(0.5, 0.0))],
            &line,
            &sweep,
            &soil,
        )
        .unwrap();
        let img = bpa_image(&scan, &grid, &soil).unwrap();
        let ratio = img.at(20, 15).norm() / img.at(40, 40).norm();
        assert!((ratio - 2.0).abs() <= 0.2, "ratio {ratio}");
    }

    #[test]
    fn linear_in_the_data() {
        let (line, sweep, soil, _) = setup();
        let grid = ReconstructionGrid::new(0.3, 0.9, 0.05, 0.3, 12, 8).unwrap();
        let b1 = simulate_points(&[unit(0.4, 0.1)], &line, &sweep, &soil).unwrap();
        let b2 = simulate_points(&[unit(0.7, 0.2)], &line, &sweep, &soil).unwrap();
        let alpha = C64::new(0.3, -2.0);
        let combined = b1.with_data(b1.data() * faer::Scale(alpha) + b2.data()).unwrap();
        let lhs = bpa_image(&combined, &grid, &soil).unwrap().cells();
        let i1 = bpa_image(&b1, &grid, &soil).unwrap().cells();
        let i2 = bpa_image(&b2, &grid, &soil).unwrap().cells();
        for m in 0..lhs.len() {
            assert!((lhs[m] - (i1[m] * alpha + i2[m])).norm() <= 1e-9 * 4680.0);
        }
    }

    #[test]
    fn spreading_compensation_scales_by_distance() {
        let line = ScanLine::new(0.0, 0.1, 1).unwrap();
        let sweep = FrequencySweep::new(1e9, 1e6, 1).unwrap();
        let soil = SoilModel::default();
        let grid = ReconstructionGrid::new(-0.01, 0.01, 0.29, 0.31, 1, 1).unwrap();
        let b = simulate_points(&[unit(0.0, 0.3)], &line, &sweep, &soil).unwrap();
        let plain = bpa_image(&b, &grid, &soil).unwrap().at(0, 0);
        let weighted = bpa_image_with(&b, &grid, &soil, BpaOptions { spreading_compensation: true })
            .unwrap()
            .at(0, 0);
        assert!((weighted - plain * 0.3).norm() < 1e-12);
    }
}
