use super::{horn_slope, GridMap, IrradianceStack};
use crate::error::{Error, Result};
use crate::location::{Action, Cell};
use crate::num::Real;

pub const DEFAULT_SLOPE_LIMIT_DEG: f64 = 20.0;

/// Derived terrain layers sharing one geometry.
#[derive(Debug, Clone)]
pub struct TerrainProducts<T> {
    pub elevation: GridMap<T>,
    /// Degrees; nodata on the border and next to elevation gaps.
    pub slope: GridMap<T>,
    pub traversable: Vec<bool>,
    /// Cells that receive no sunlight over the operational window.
    pub psr_mask: Vec<bool>,
    pub slope_limit: T,
}

impl<T: Real> TerrainProducts<T> {
    pub fn build(
        elevation: GridMap<T>,
        stack: &IrradianceStack<T>,
        slope_limit: T,
        window: (T, T),
    ) -> Result<Self> {
        if !elevation.same_geometry(stack.geometry()) {
            return Err(Error::invalid(
                "elevation and irradiance frames are not co-registered",
            ));
        }
        let slope = horn_slope(&elevation)?;
        let traversable = elevation
            .cells()
            .map(|c| match (elevation.value(c), slope.value(c)) {
                (Some(_), Some(s)) => s < slope_limit,
                _ => false,
            })
            .collect();
        let psr_mask = elevation
            .cells()
            .map(|c| stack.dark_throughout(c, window.0, window.1))
            .collect::<Result<_>>()?;
        Ok(TerrainProducts {
            elevation,
            slope,
            traversable,
            psr_mask,
            slope_limit,
        })
    }

    pub fn is_traversable(&self, cell: Cell) -> bool {
        self.elevation.contains(cell) && self.traversable[self.elevation.index(cell)]
    }

    pub fn is_psr(&self, cell: Cell) -> bool {
        self.psr_mask[self.elevation.index(cell)]
    }

    /// Destination of `action`, if it stays on the grid on traversable ground.
    pub fn destination(&self, cell: Cell, action: Action) -> Result<Cell> {
        let blocked = |reason| Error::Blocked {
            row: cell.row,
            col: cell.col,
            action: action.name(),
            reason,
        };
        if !self.is_traversable(cell) {
            return Err(blocked("origin is not traversable"));
        }
        let dest = cell
            .step(action, self.elevation.n_rows, self.elevation.n_cols)
            .ok_or_else(|| blocked("destination is off the grid"))?;
        if !self.is_traversable(dest) {
            return Err(blocked("destination is not traversable"));
        }
        Ok(dest)
    }
}

/// 3-D Euclidean distance between the centres of `cell` and its neighbour
/// along `action`; zero for waiting.
pub fn drive_distance<T: Real>(terrain: &TerrainProducts<T>, cell: Cell, action: Action) -> Result<T> {
    let dest = terrain.destination(cell, action)?;
    if action == Action::Wait {
        return Ok(T::zero());
    }
    let elev = &terrain.elevation;
    let planar = if action.is_diagonal() {
        elev.cell_size * T::lit(2.0).sqrt()
    } else {
        elev.cell_size
    };
    let dz = elev.get(dest) - elev.get(cell);
    Ok((planar * planar + dz * dz).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_stack(rows: usize, cols: usize, lit: &[Cell]) -> IrradianceStack<f64> {
        let mut f = GridMap::new(rows, cols, 240.0, (0.0, 0.0), -9999.0, vec![0.0; rows * cols]).unwrap();
        for c in lit {
            f.set(*c, 100.0);
        }
        IrradianceStack::new(vec![0.0, 3600.0], vec![f.clone(), f]).unwrap()
    }

    fn terrain_with(elev_fn: impl Fn(usize, usize) -> f64) -> TerrainProducts<f64> {
        let mut v = Vec::new();
        for r in 0..5 {
            for c in 0..5 {
                v.push(elev_fn(r, c));
            }
        }
        let elev = GridMap::new(5, 5, 240.0, (0.0, 0.0), -9999.0, v).unwrap();
        TerrainProducts::build(elev, &flat_stack(5, 5, &[Cell::new(2, 2)]), 20.0, (0.0, 3600.0)).unwrap()
    }

    #[test]
    fn flat_distances() {
        let t = terrain_with(|_, _| 0.0);
        let c = Cell::new(2, 2);
        assert_eq!(drive_distance(&t, c, Action::East).unwrap(), 240.0);
        assert!((drive_distance(&t, c, Action::NorthWest).unwrap() - 339.411_255).abs() < 1e-5);
        assert_eq!(drive_distance(&t, c, Action::Wait).unwrap(), 0.0);
    }

    #[test]
    fn elevation_change_adds_length() {
        let t = terrain_with(|_, c| if c >= 3 { 70.0 } else { 0.0 });
        // gentle enough? 70 m over 480 m horizontal stencil is ~8 degrees
        let c = Cell::new(2, 2);
        assert_eq!(drive_distance(&t, c, Action::East).unwrap(), 250.0);
        assert_eq!(drive_distance(&t, Cell::new(2, 3), Action::West).unwrap(), 250.0);
    }

    #[test]
    fn border_is_blocked() {
        let t = terrain_with(|_, _| 0.0);
        let e = drive_distance(&t, Cell::new(1, 1), Action::North).unwrap_err();
        assert!(matches!(e, Error::Blocked { reason: "destination is not traversable", .. }));
        assert!(drive_distance(&t, Cell::new(0, 0), Action::Wait).is_err());
    }

    #[test]
    fn steep_cells_are_excluded() {
        // z = 0.4 x: about 21.8 degrees everywhere
        let t = terrain_with(|_, c| 0.4 * 240.0 * c as f64);
        assert!(t.traversable.iter().all(|b| !b));
        let t = terrain_with(|_, c| 0.35 * 240.0 * c as f64);
        assert!(t.is_traversable(Cell::new(2, 2)));
    }

    #[test]
    fn psr_mask_tracks_darkness() {
        let t = terrain_with(|_, _| 0.0);
        assert!(!t.is_psr(Cell::new(2, 2)));
        assert!(t.is_psr(Cell::new(1, 1)));
    }
}
