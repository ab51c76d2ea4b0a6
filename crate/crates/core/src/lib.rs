//! Subsurface imaging from stepped-frequency continuous-wave B-scans and
//! soil-moisture estimation around buried drip-irrigation pipes.

pub mod baa;
pub mod bpa;
pub mod bscan_io;
pub mod error;
pub mod forward;
pub mod grid;
pub mod image;
pub mod linalg;
pub mod moisture;
pub mod pipeline;
pub mod preprocess;
pub mod scan;
pub mod scenario;
pub mod specfun;

pub use error::{Error, ErrorCategory, Result};
pub use grid::ReconstructionGrid;
pub use scan::{BScan, BandPlan, FrequencySweep, ScanLine, SoilModel, C64};
