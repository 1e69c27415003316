use std::path::Path;

use super::{load_ascii_grid, GridMap};
use crate::error::{Error, Result};
use crate::location::Cell;
use crate::num::Real;

/// Time-indexed irradiance frames (W/m²) reconstructed with a zero-order
/// hold: the frame with the largest timestamp `<= t` applies at `t`.
/// Nodata pixels read as zero irradiance.
#[derive(Debug, Clone)]
pub struct IrradianceStack<T> {
    timestamps: Vec<T>,
    frames: Vec<GridMap<T>>,
}

impl<T: Real> IrradianceStack<T> {
    pub fn new(timestamps: Vec<T>, frames: Vec<GridMap<T>>) -> Result<Self> {
        if timestamps.len() != frames.len() {
            return Err(Error::invalid(format!(
                "{} timestamps but {} frames",
                timestamps.len(),
                frames.len()
            )));
        }
        if frames.len() < 2 {
            return Err(Error::invalid("irradiance stack needs at least two frames"));
        }
        if let Some(w) = timestamps.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(format!(
                "irradiance timestamps must strictly increase ({} then {})",
                w[0], w[1]
            )));
        }
        let first = &frames[0];
        for (k, f) in frames.iter().enumerate() {
            if !f.same_geometry(first) {
                return Err(Error::invalid(format!("frame {k} geometry differs from frame 0")));
            }
            if let Some(v) = f.values.iter().find(|v| !f.is_nodata(**v) && **v < T::zero()) {
                return Err(Error::invalid(format!("frame {k} holds negative irradiance {v}")));
            }
        }
        Ok(IrradianceStack { timestamps, frames })
    }

    pub fn timestamps(&self) -> &[T] {
        &self.timestamps
    }

    pub fn frames(&self) -> &[GridMap<T>] {
        &self.frames
    }

    pub fn geometry(&self) -> &GridMap<T> {
        &self.frames[0]
    }

    /// `[t_first, t_last]`.
    pub fn coverage(&self) -> (T, T) {
        (self.timestamps[0], *self.timestamps.last().unwrap())
    }

    fn coverage_error(&self, t: T) -> Error {
        let (first, last) = self.coverage();
        Error::Coverage {
            t: t.as_f64(),
            first: first.as_f64(),
            last: last.as_f64(),
        }
    }

    /// Index of the frame held at `t`.
    pub fn frame_index(&self, t: T) -> Result<usize> {
        let (first, last) = self.coverage();
        if !(t >= first && t <= last) {
            return Err(self.coverage_error(t));
        }
        Ok(self.timestamps.partition_point(|ts| *ts <= t) - 1)
    }

    #[inline]
    fn pixel(&self, k: usize, index: usize) -> T {
        let f = &self.frames[k];
        let v = f.values[index];
        if f.is_nodata(v) {
            T::zero()
        } else {
            v
        }
    }

    pub fn irradiance_at(&self, cell: Cell, t: T) -> Result<T> {
        let k = self.frame_index(t)?;
        Ok(self.pixel(k, self.geometry().index(cell)))
    }

    /// Exact integral of the held irradiance over `[t0, t1]`, in W·s/m².
    pub fn integral(&self, cell: Cell, t0: T, t1: T) -> Result<T> {
        self.integral_at_index(self.geometry().index(cell), t0, t1)
    }

    pub(crate) fn integral_at_index(&self, index: usize, t0: T, t1: T) -> Result<T> {
        if t1 < t0 {
            return Err(Error::invalid("integration interval is reversed"));
        }
        if t1 > self.coverage().1 {
            return Err(self.coverage_error(t1));
        }
        let mut k = self.frame_index(t0)?;
        let mut t = t0;
        let mut acc = T::zero();
        while t < t1 {
            let seg_end = match self.timestamps.get(k + 1) {
                Some(next) => next.min(t1),
                None => t1,
            };
            acc += self.pixel(k, index) * (seg_end - t);
            t = seg_end;
            k += 1;
        }
        Ok(acc)
    }

    /// Piecewise-constant irradiance at `cell` restricted to `[t0, t1]`, as
    /// `(segment_start, irradiance)` knots. The first knot starts at `t0`.
    pub fn segments(&self, cell: Cell, t0: T, t1: T) -> Result<Vec<(T, T)>> {
        if t1 > self.coverage().1 {
            return Err(self.coverage_error(t1));
        }
        let index = self.geometry().index(cell);
        let k0 = self.frame_index(t0)?;
        let mut out = vec![(t0, self.pixel(k0, index))];
        for k in k0 + 1..self.timestamps.len() {
            if self.timestamps[k] > t1 {
                break;
            }
            out.push((self.timestamps[k], self.pixel(k, index)));
        }
        Ok(out)
    }

    /// Time-averaged irradiance over `[t0, t1]`.
    pub fn mean_map(&self, t0: T, t1: T) -> Result<GridMap<T>> {
        if !(t1 > t0) {
            return Err(Error::invalid("averaging window must have positive length"));
        }
        let mut out = self.geometry().filled_like(T::zero());
        for i in 0..out.values.len() {
            out.values[i] = self.integral_at_index(i, t0, t1)? / (t1 - t0);
        }
        Ok(out)
    }

    /// True when every frame held at some instant of `[t0, t1]` is zero at
    /// `cell`.
    pub fn dark_throughout(&self, cell: Cell, t0: T, t1: T) -> Result<bool> {
        let index = self.geometry().index(cell);
        let k0 = self.frame_index(t0)?;
        let k1 = self.frame_index(t1)?;
        Ok((k0..=k1).all(|k| self.pixel(k, index) == T::zero()))
    }
}

/// Reads an index file of `<epoch_seconds> <relative_path>` records; paths
/// resolve against the index file's directory.
pub fn load_irradiance_index<T: Real>(path: impl AsRef<Path>) -> Result<IrradianceStack<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut timestamps = Vec::new();
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let mut tok = line.split_whitespace();
        let (Some(ts), Some(rel), None) = (tok.next(), tok.next(), tok.next()) else {
            return Err(parse_err("expected `<epoch_seconds> <path>`".into()));
        };
        let ts: f64 = ts
            .parse()
            .map_err(|_| parse_err(format!("bad timestamp `{ts}`")))?;
        if let Some(prev) = timestamps.last() {
            if T::lit(ts) <= *prev {
                return Err(parse_err("timestamps must strictly increase".into()));
            }
        }
        timestamps.push(T::lit(ts));
        frames.push(load_ascii_grid(base.join(rel))?);
    }
    IrradianceStack::new(timestamps, frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(v: f64) -> GridMap<f64> {
        GridMap::new(1, 2, 240.0, (0.0, 0.0), -9999.0, vec![v, 0.0]).unwrap()
    }

    fn alternating() -> IrradianceStack<f64> {
        let ts: Vec<f64> = (0..5).map(|k| 3600.0 * k as f64).collect();
        let frames = (0..5).map(|k| frame(if k % 2 == 0 { 0.0 } else { 1000.0 })).collect();
        IrradianceStack::new(ts, frames).unwrap()
    }

    #[test]
    fn hold_semantics() {
        let s = alternating();
        let c = Cell::new(0, 0);
        assert_eq!(s.irradiance_at(c, 3600.0).unwrap(), 1000.0);
        assert_eq!(s.irradiance_at(c, 5400.0).unwrap(), 1000.0);
        assert_eq!(s.irradiance_at(c, 7199.0).unwrap(), 1000.0);
        assert_eq!(s.irradiance_at(c, 7200.0).unwrap(), 0.0);
        assert_eq!(s.irradiance_at(c, 14400.0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_coverage() {
        let s = alternating();
        assert!(matches!(s.irradiance_at(Cell::new(0, 0), -1.0), Err(Error::Coverage { .. })));
        assert!(matches!(s.irradiance_at(Cell::new(0, 0), 14401.0), Err(Error::Coverage { .. })));
        assert!(s.integral(Cell::new(0, 0), 0.0, 15000.0).is_err());
    }

    #[test]
    fn mean_of_alternating_stack() {
        let s = alternating();
        let m = s.mean_map(0.0, 14400.0).unwrap();
        assert!((m.values[0] - 500.0).abs() < 1e-12);
        assert_eq!(m.values[1], 0.0);
    }

    #[test]
    fn darkness_window() {
        let s = alternating();
        assert!(s.dark_throughout(Cell::new(0, 0), 0.0, 3599.0).unwrap());
        assert!(!s.dark_throughout(Cell::new(0, 0), 0.0, 3600.0).unwrap());
        assert!(s.dark_throughout(Cell::new(0, 1), 0.0, 14400.0).unwrap());
    }

    #[test]
    fn validation() {
        assert!(IrradianceStack::new(vec![0.0], vec![frame(0.0)]).is_err());
        assert!(IrradianceStack::new(vec![0.0, 0.0], vec![frame(0.0), frame(0.0)]).is_err());
        assert!(IrradianceStack::new(vec![0.0, 1.0], vec![frame(0.0), frame(-1.0)]).is_err());
        let odd = GridMap::new(2, 1, 240.0, (0.0, 0.0), -9999.0, vec![0.0, 0.0]).unwrap();
        assert!(IrradianceStack::new(vec![0.0, 1.0], vec![frame(0.0), odd]).is_err());
    }

    #[test]
    fn segments_list_hold_knots() {
        let s = alternating();
        let seg = s.segments(Cell::new(0, 0), 1800.0, 9000.0).unwrap();
        assert_eq!(seg, vec![(1800.0, 0.0), (3600.0, 1000.0), (7200.0, 0.0)]);
    }
}
