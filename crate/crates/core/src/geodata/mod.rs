//! Spatial products: rasters, slope, traversability, irradiance and
//! inter-cell driving distances.

mod ascii;
mod grid;
mod irradiance;
mod slope;
mod terrain;

pub use ascii::{load_ascii_grid, parse_ascii_grid, write_ascii_grid, format_ascii_grid};
pub use grid::GridMap;
pub use irradiance::{load_irradiance_index, IrradianceStack};
pub use slope::horn_slope;
pub use terrain::{drive_distance, TerrainProducts, DEFAULT_SLOPE_LIMIT_DEG};
