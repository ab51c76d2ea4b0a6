use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular imaging mesh in the vertical plane below the scan line.
///
/// Cells are indexed row-major with x fastest: cell `m = iz * nx + ix`.
/// `z` grows downward into the soil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct ReconstructionGrid {
    x_min: f64,
    x_max: f64,
    z_min: f64,
    z_max: f64,
    nx: usize,
    nz: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct GridSpec {
    x_min: f64,
    x_max: f64,
    z_min: f64,
    z_max: f64,
    nx: usize,
    nz: usize,
}

impl TryFrom<GridSpec> for ReconstructionGrid {
    type Error = Error;
    fn try_from(g: GridSpec) -> Result<Self> {
        ReconstructionGrid::new(g.x_min, g.x_max, g.z_min, g.z_max, g.nx, g.nz)
    }
}

impl From<ReconstructionGrid> for GridSpec {
    fn from(g: ReconstructionGrid) -> Self {
        GridSpec {
            x_min: g.x_min,
            x_max: g.x_max,
            z_min: g.z_min,
            z_max: g.z_max,
            nx: g.nx,
            nz: g.nz,
        }
    }
}

impl Default for ReconstructionGrid {
    /// 60 x 60 cells over x in [0, 1.2] m, z in [0.02, 0.42] m.
    fn default() -> Self {
        Self::new(0.0, 1.2, 0.02, 0.42, 60, 60).expect("valid constants")
    }
}

impl ReconstructionGrid {
    pub fn new(x_min: f64, x_max: f64, z_min: f64, z_max: f64, nx: usize, nz: usize) -> Result<Self> {
        let finite = [x_min, x_max, z_min, z_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || z_max <= z_min {
            return Err(Error::Parameter(format!(
                "degenerate grid bounds x[{x_min},{x_max}] z[{z_min},{z_max}]"
            )));
        }
        if nx == 0 || nz == 0 {
            return Err(Error::Parameter("grid needs at least one cell".into()));
        }
        Ok(Self {
            x_min,
            x_max,
            z_min,
            z_max,
            nx,
            nz,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn z_min(&self) -> f64 {
        self.z_min
    }
    pub fn z_max(&self) -> f64 {
        self.z_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.nz
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / self.nz as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dz()
    }

    /// Radius of the circle with the same area as one cell.
    pub fn equivalent_radius(&self) -> f64 {
        (self.cell_area() / PI).sqrt()
    }

    pub fn x_center(&self, ix: usize) -> f64 {
        self.x_min + (ix as f64 + 0.5) * self.dx()
    }

    pub fn z_center(&self, iz: usize) -> f64 {
        self.z_min + (iz as f64 + 0.5) * self.dz()
    }

    pub fn index(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    /// `(ix, iz)` of flat cell index `m`.
    pub fn coords(&self, m: usize) -> (usize, usize) {
        (m % self.nx, m / self.nx)
    }

    /// Center `(x, z)` of flat cell index `m`.
    pub fn center(&self, m: usize) -> (f64, f64) {
        let (ix, iz) = self.coords(m);
        (self.x_center(ix), self.z_center(iz))
    }

    pub fn centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n_cells()).map(|m| self.center(m))
    }

    /// Cell containing point `(x, z)`, if inside the grid.
    pub fn locate(&self, x: f64, z: f64) -> Option<(usize, usize)> {
        if x < self.x_min || x > self.x_max || z < self.z_min || z > self.z_max {
            return None;
        }
        let ix = (((x - self.x_min) / self.dx()) as usize).min(self.nx - 1);
        let iz = (((z - self.z_min) / self.dz()) as usize).min(self.nz - 1);
        Some((ix, iz))
    }
}
