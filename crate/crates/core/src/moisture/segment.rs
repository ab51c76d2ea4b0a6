use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ReconstructionGrid;
use crate::image::Image;
use crate::linalg;

/// Rectangular moist area (bounds inclusive, metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionOfInterest {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl RegionOfInterest {
    pub fn new(x_min: f64, x_max: f64, z_min: f64, z_max: f64) -> Result<Self> {
        let all = [x_min, x_max, z_min, z_max];
        if all.iter().any(|v| !v.is_finite()) || x_max < x_min || z_max < z_min {
            return Err(Error::Region(format!(
                "invalid region x [{x_min}, {x_max}] z [{z_min}, {z_max}]"
            )));
        }
        Ok(Self { x_min, x_max, z_min, z_max })
    }

    /// Region spanning `pipe_x ± (half_width + margin)` from the surface down to the pipe top.
    pub fn above_pipe(pipe_x: f64, pipe_half_width: f64, margin: f64, pipe_top: f64) -> Result<Self> {
        let h = pipe_half_width + margin;
        Self::new(pipe_x - h, pipe_x + h, 0.0, pipe_top)
    }

    /// Parses `x0,x1,z0,z1`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Region(format!("'{text}' is not x0,x1,z0,z1")))?;
        match parts[..] {
            [x0, x1, z0, z1] => Self::new(x0, x1, z0, z1),
            _ => Err(Error::Region(format!("'{text}' needs four comma-separated values"))),
        }
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min && x <= self.x_max && z >= self.z_min && z <= self.z_max
    }

    /// Column and row index ranges of cells whose centers fall inside.
    pub fn cell_ranges(&self, grid: &ReconstructionGrid) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let cols: Vec<usize> = (0..grid.nx())
            .filter(|&ix| (self.x_min..=self.x_max).contains(&grid.x_center(ix)))
            .collect();
        let rows: Vec<usize> = (0..grid.nz())
            .filter(|&iz| (self.z_min..=self.z_max).contains(&grid.z_center(iz)))
            .collect();
        match (cols.first(), cols.last(), rows.first(), rows.last()) {
            (Some(&c0), Some(&c1), Some(&r0), Some(&r1)) => Ok((c0..c1 + 1, r0..r1 + 1)),
            _ => Err(Error::Region(format!(
                "region x [{}, {}] z [{}, {}] contains no cell centers",
                self.x_min, self.x_max, self.z_min, self.z_max
            ))),
        }
    }
}

/// Magnitudes of the cells inside `roi`, rows along depth.
pub fn segment(image: &Image, roi: &RegionOfInterest) -> Result<Mat<f64>> {
    let (cols, rows) = roi.cell_ranges(image.grid())?;
    Ok(Mat::from_fn(rows.len(), cols.len(), |i, j| {
        image.at(cols.start + j, rows.start + i).norm()
    }))
}

/// Largest singular value; 0 for an empty matrix.
pub fn fsv(submatrix: &Mat<f64>) -> Result<f64> {
    if submatrix.nrows() == 0 || submatrix.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(linalg::singular_values(submatrix.as_ref())?[0])
}

/// FSV of the region after dividing the whole image by its Frobenius norm.
/// An all-zero image yields 0.
pub fn normalized_fsv(image: &Image, roi: &RegionOfInterest) -> Result<f64> {
    let sub = segment(image, roi)?;
    let norm = image.frobenius_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(fsv(&sub)? / norm)
}
