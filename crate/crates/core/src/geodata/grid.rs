use crate::error::{Error, Result};
use crate::location::Cell;
use crate::num::Real;

/// Georeferenced single-band raster stored row-major, row 0 northmost.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Metres per pixel.
    pub cell_size: T,
    /// Lower-left corner (easting, northing) in metres.
    pub origin: (T, T),
    pub nodata: T,
    pub values: Vec<T>,
}

impl<T: Real> GridMap<T> {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        cell_size: T,
        origin: (T, T),
        nodata: T,
        values: Vec<T>,
    ) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::invalid(format!(
                "grid has {} values, expected {} x {}",
                values.len(),
                n_rows,
                n_cols
            )));
        }
        if !(cell_size > T::zero()) {
            return Err(Error::invalid("cell size must be positive"));
        }
        Ok(GridMap {
            n_rows,
            n_cols,
            cell_size,
            origin,
            nodata,
            values,
        })
    }

    /// Grid with the same geometry filled with `fill`.
    pub fn filled_like(&self, fill: T) -> Self {
        GridMap {
            values: vec![fill; self.values.len()],
            ..self.clone()
        }
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.n_cols + cell.col
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.n_cols, index % self.n_cols)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.n_rows && cell.col < self.n_cols
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> T {
        self.values[self.index(cell)]
    }

    pub fn set(&mut self, cell: Cell, v: T) {
        let i = self.index(cell);
        self.values[i] = v;
    }

    #[inline]
    pub fn is_nodata(&self, v: T) -> bool {
        v == self.nodata || v.is_nan()
    }

    /// Value at `cell`, or `None` when it holds the nodata sentinel.
    pub fn value(&self, cell: Cell) -> Option<T> {
        let v = self.get(cell);
        (!self.is_nodata(v)).then_some(v)
    }

    pub fn same_geometry(&self, other: &GridMap<T>) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.cell_size == other.cell_size
            && self.origin == other.origin
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for c in 0..self.n_cols {
            for r in 0..self.n_rows {
                values.push(self.get(Cell::new(r, c)));
            }
        }
        GridMap {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            values,
            ..self.clone()
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.n_rows).flat_map(move |r| (0..self.n_cols).map(move |c| Cell::new(r, c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shape() {
        assert!(GridMap::new(2, 2, 1.0, (0.0, 0.0), -9999.0, vec![0.0; 3]).is_err());
        assert!(GridMap::new(1, 1, 0.0, (0.0, 0.0), -9999.0, vec![0.0]).is_err());
    }

    #[test]
    fn transpose_swaps_axes() {
        let g = GridMap::new(2, 3, 1.0f64, (0.0, 0.0), -1.0, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let t = g.transpose();
        assert_eq!((t.n_rows, t.n_cols), (3, 2));
        assert_eq!(t.values, vec![1., 4., 2., 5., 3., 6.]);
        assert_eq!(t.transpose(), g);
    }
}
