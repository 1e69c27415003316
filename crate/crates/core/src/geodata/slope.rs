use super::GridMap;
use crate::error::{Error, Result};
use crate::location::Cell;
use crate::num::Real;

/// Slope magnitude in degrees from Horn's 3x3 finite-difference gradient.
///
/// ```text
/// a b c
/// d e f     dz/dx = ((c + 2f + i) - (a + 2d + g)) / 8h
/// g h i     dz/dy = ((g + 2h + i) - (a + 2b + c)) / 8h
/// ```
///
/// Border cells and cells with a nodata value anywhere in their stencil are
/// written as nodata.
pub fn horn_slope<T: Real>(elev: &GridMap<T>) -> Result<GridMap<T>> {
    if elev.n_rows < 3 || elev.n_cols < 3 {
        return Err(Error::invalid(format!(
            "horn slope needs at least a 3x3 grid, got {}x{}",
            elev.n_rows, elev.n_cols
        )));
    }
    let mut out = elev.filled_like(elev.nodata);
    let two = T::lit(2.0);
    let eight_h = T::lit(8.0) * elev.cell_size;
    for r in 1..elev.n_rows - 1 {
        'cell: for c in 1..elev.n_cols - 1 {
            let mut z = [T::zero(); 9];
            for (k, slot) in z.iter_mut().enumerate() {
                let cell = Cell::new(r + k / 3 - 1, c + k % 3 - 1);
                match elev.value(cell) {
                    Some(v) => *slot = v,
                    None => continue 'cell,
                }
            }
            let [a, b, cc, d, _, f, g, h, i] = z;
            let dzdx = ((cc + two * f + i) - (a + two * d + g)) / eight_h;
            // Rows increase southward, so this is -dz/dnorthing; the sign
            // does not matter for the magnitude.
            let dzdy = ((g + two * h + i) - (a + two * b + cc)) / eight_h;
            let slope = (dzdx * dzdx + dzdy * dzdy).sqrt().atan().to_degrees();
            out.set(Cell::new(r, c), slope);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane(rows: usize, cols: usize, cs: f64, gx: f64, gy: f64) -> GridMap<f64> {
        let mut v = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                v.push(gx * c as f64 * cs + gy * r as f64 * cs);
            }
        }
        GridMap::new(rows, cols, cs, (0.0, 0.0), -9999.0, v).unwrap()
    }

    #[test]
    fn flat_plane_is_level() {
        let s = horn_slope(&plane(5, 5, 240.0, 0.0, 0.0)).unwrap();
        for r in 1..4 {
            for c in 1..4 {
                assert_eq!(s.get(Cell::new(r, c)), 0.0);
            }
        }
        assert_eq!(s.value(Cell::new(0, 2)), None);
        assert_eq!(s.value(Cell::new(4, 4)), None);
    }

    #[test]
    fn inclined_plane_matches_atan() {
        let s = horn_slope(&plane(6, 7, 240.0, 0.1, 0.0)).unwrap();
        let expected = 0.1f64.atan().to_degrees();
        assert!((expected - 5.710593).abs() < 1e-6);
        for r in 1..5 {
            for c in 1..6 {
                assert!((s.get(Cell::new(r, c)) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn twenty_degree_plane() {
        let s = horn_slope(&plane(5, 5, 20.0, 0.364, 0.0)).unwrap();
        let v = s.get(Cell::new(2, 2));
        assert!((v - 0.364f64.atan().to_degrees()).abs() < 1e-9);
        assert!((v - 20.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn works_in_single_precision() {
        let g = plane(5, 5, 240.0, 0.1, 0.0);
        let g32 = GridMap::new(5, 5, 240.0f32, (0.0, 0.0), -9999.0, g.values.iter().map(|v| *v as f32).collect()).unwrap();
        let s = horn_slope(&g32).unwrap();
        assert!((s.get(Cell::new(2, 2)) - 5.7106f32).abs() < 1e-3);
    }

    #[test]
    fn nodata_neighbour_propagates() {
        let mut g = plane(5, 5, 1.0, 0.0, 0.0);
        g.set(Cell::new(1, 1), -9999.0);
        let s = horn_slope(&g).unwrap();
        assert_eq!(s.value(Cell::new(2, 2)), None);
        assert_eq!(s.value(Cell::new(3, 3)), Some(0.0));
    }

    #[test]
    fn too_small() {
        let g = GridMap::new(2, 5, 1.0, (0.0, 0.0), -1.0, vec![0.0; 10]).unwrap();
        assert!(horn_slope(&g).is_err());
    }

    proptest! {
        #[test]
        fn transpose_commutes(vals in proptest::collection::vec(-50.0f64..50.0, 30)) {
            let g = GridMap::new(5, 6, 10.0, (0.0, 0.0), -9999.0, vals).unwrap();
            let a = horn_slope(&g.transpose()).unwrap();
            let b = horn_slope(&g).unwrap().transpose();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
