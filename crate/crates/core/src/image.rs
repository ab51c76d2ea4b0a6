//! Reconstructed images and their on-disk forms (CSV of magnitudes, JSON sidecar, PGM).

use std::fs;
use std::io::Write;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::bscan_io::format_decimal;
use crate::error::{Error, Result};
use crate::grid::ReconstructionGrid;
use crate::scan::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum ImageKind {
    /// Born inversion; `keep` singular values retained.
    Baa { keep: usize },
    /// Back projection.
    Bpa,
}

impl ImageKind {
    pub fn label(&self) -> &'static str {
        match self {
            ImageKind::Baa { .. } => "baa",
            ImageKind::Bpa => "bpa",
        }
    }
}

/// Complex per-cell reconstruction laid out as an `nz x nx` matrix (z down the rows).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    grid: ReconstructionGrid,
    values: Mat<C64>,
    kind: ImageKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub ix: usize,
    pub iz: usize,
    pub x: f64,
    pub z: f64,
    pub magnitude: f64,
}

impl Image {
    pub fn new(grid: ReconstructionGrid, values: Mat<C64>, kind: ImageKind) -> Result<Self> {
        if values.nrows() != grid.nz() || values.ncols() != grid.nx() {
            return Err(Error::Dimension(format!(
                "image is {}x{}, grid is {}x{}",
                values.nrows(),
                values.ncols(),
                grid.nz(),
                grid.nx()
            )));
        }
        Ok(Self { grid, values, kind })
    }

    /// Image from a cell vector in grid order (`m = iz * nx + ix`).
    pub fn from_cells(grid: ReconstructionGrid, cells: &[C64], kind: ImageKind) -> Result<Self> {
        if cells.len() != grid.n_cells() {
            return Err(Error::Dimension(format!(
                "{} cell values for a grid of {} cells",
                cells.len(),
                grid.n_cells()
            )));
        }
        let values = Mat::from_fn(grid.nz(), grid.nx(), |iz, ix| cells[grid.index(ix, iz)]);
        Self::new(grid, values, kind)
    }

    pub fn grid(&self) -> &ReconstructionGrid {
        &self.grid
    }

    pub fn values(&self) -> &Mat<C64> {
        &self.values
    }

    pub fn kind(&self) -> ImageKind {
        self.kind
    }

    pub fn at(&self, ix: usize, iz: usize) -> C64 {
        self.values[(iz, ix)]
    }

    pub fn cells(&self) -> Vec<C64> {
        (0..self.grid.n_cells())
            .map(|m| {
                let (ix, iz) = self.grid.coords(m);
                self.values[(iz, ix)]
            })
            .collect()
    }

    pub fn magnitude(&self) -> Mat<f64> {
        Mat::from_fn(self.values.nrows(), self.values.ncols(), |i, j| {
            self.values[(i, j)].norm()
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::linalg::frobenius_norm(self.values.as_ref())
    }

    /// Largest-magnitude cell; the first in grid order on ties.
    pub fn peak(&self) -> Peak {
        let mut best = (0, 0, -1.0);
        for iz in 0..self.grid.nz() {
            for ix in 0..self.grid.nx() {
                let m = self.values[(iz, ix)].norm();
                if m > best.2 {
                    best = (ix, iz, m);
                }
            }
        }
        Peak {
            ix: best.0,
            iz: best.1,
            x: self.grid.x_center(best.0),
            z: self.grid.z_center(best.1),
            magnitude: best.2,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: Mat::from_fn(self.values.nrows(), self.values.ncols(), |i, j| {
                self.values[(i, j)] * c
            }),
            kind: self.kind,
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = String::new();
        for iz in 0..self.grid.nz() {
            let row: Vec<String> = (0..self.grid.nx())
                .map(|ix| format_decimal(self.values[(iz, ix)].norm()))
                .collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn sidecar(&self, band: Option<(usize, usize)>, band_hz: Option<(f64, f64)>) -> ImageSidecar {
        ImageSidecar {
            kind: self.kind,
            grid: self.grid,
            band,
            band_hz,
            frobenius_norm: self.frobenius_norm(),
            peak: self.peak(),
        }
    }

    /// 8-bit binary PGM of the magnitude, min-max normalised.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mag = self.magnitude();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..mag.ncols() {
            for i in 0..mag.nrows() {
                lo = lo.min(mag[(i, j)]);
                hi = hi.max(mag[(i, j)]);
            }
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut bytes = format!("P5\n{} {}\n255\n", mag.ncols(), mag.nrows()).into_bytes();
        for i in 0..mag.nrows() {
            for j in 0..mag.ncols() {
                bytes.push((255.0 * (mag[(i, j)] - lo) / span).round() as u8);
            }
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }
}

/// Metadata written next to an image CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub kind: ImageKind,
    pub grid: ReconstructionGrid,
    pub band: Option<(usize, usize)>,
    pub band_hz: Option<(f64, f64)>,
    pub frobenius_norm: f64,
    pub peak: Peak,
}

impl ImageSidecar {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json("image sidecar", e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
