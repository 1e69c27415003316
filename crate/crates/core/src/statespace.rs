//! Discretised operational region: a (cell, time, energy) lattice plus a
//! failure sink, and the maps from hybrid states onto it.
//!
//! Discrete states sit at lattice points. `map_lower` / `map_upper` floor the
//! energy and take the lower / upper time neighbour; `map_nearest` rounds both
//! coordinates; `map_interp` spreads bilinear weights over the four enclosing
//! lattice points. Every map sends states outside the operational region to
//! the sink, after saturating energy above `b_max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::location::Cell;
use crate::num::Real;
use crate::rover::HybridState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationalBounds<T> {
    pub t_min: T,
    pub t_max: T,
    pub b_min: T,
    pub b_max: T,
}

impl<T: Real> OperationalBounds<T> {
    pub fn validate(&self, battery_capacity: T) -> Result<()> {
        if !(self.t_min < self.t_max) {
            return Err(Error::invalid("t_min must precede t_max"));
        }
        if !(self.b_min >= T::zero() && self.b_min < self.b_max && self.b_max <= battery_capacity) {
            return Err(Error::invalid("need 0 <= b_min < b_max <= battery capacity"));
        }
        Ok(())
    }

    pub fn contains(&self, x: &HybridState<T>) -> bool {
        x.t >= self.t_min && x.t <= self.t_max && x.b >= self.b_min
    }
}

/// Index of a discrete state. Lattice states come first; the sink is the
/// single index after them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Support of a mapped hybrid state: up to four (state, probability) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteMapResult<T> {
    entries: [(StateId, T); 4],
    len: u8,
}

impl<T: Real> DiscreteMapResult<T> {
    fn single(id: StateId) -> Self {
        DiscreteMapResult {
            entries: [(id, T::one()); 4],
            len: 1,
        }
    }

    fn push(&mut self, id: StateId, p: T) {
        if p > T::zero() {
            self.entries[self.len as usize] = (id, p);
            self.len += 1;
        }
    }

    pub fn support(&self) -> &[(StateId, T)] {
        &self.entries[..self.len as usize]
    }

    /// The only state of a deterministic map.
    pub fn single_state(&self) -> Option<StateId> {
        (self.len == 1).then_some(self.entries[0].0)
    }

    pub fn total_probability(&self) -> T {
        self.support().iter().map(|(_, p)| *p).sum()
    }
}

/// Which hybrid-to-discrete map to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    Nearest,
    Interp,
    Lower,
    Upper,
}

/// Lattice coordinate of a state known to be inside the region.
#[derive(Debug, Clone, Copy)]
struct Coord<T> {
    cell: u32,
    /// Fractional lattice positions, already clamped to the lattice span.
    u_t: T,
    u_b: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStateSpace<T> {
    cells: Vec<Cell>,
    lookup: Vec<u32>,
    grid_rows: usize,
    grid_cols: usize,
    bounds: OperationalBounds<T>,
    time_step: T,
    energy_step: T,
    n_t: usize,
    n_b: usize,
    snap: T,
}

const NO_CELL: u32 = u32::MAX;

impl<T: Real> DiscreteStateSpace<T> {
    /// `cells` are the traversable locations in a `grid_rows x grid_cols`
    /// raster. The operational spans must be whole multiples of the steps.
    pub fn new(
        cells: Vec<Cell>,
        grid_rows: usize,
        grid_cols: usize,
        bounds: OperationalBounds<T>,
        time_step: T,
        energy_step: T,
    ) -> Result<Self> {
        if !(time_step > T::zero() && energy_step > T::zero()) {
            return Err(Error::invalid("discretisation steps must be positive"));
        }
        let snap = T::epsilon().sqrt();
        let count = |span: T, step: T, what: &str| -> Result<usize> {
            let n = span / step;
            if (n - n.round()).abs() > snap * n.max(T::one()) {
                return Err(Error::invalid(format!(
                    "{what} span {span} is not a multiple of the resolution {step}"
                )));
            }
            Ok(n.round().to_usize().unwrap_or(0) + 1)
        };
        let n_t = count(bounds.t_max - bounds.t_min, time_step, "time")?;
        let n_b = count(bounds.b_max - bounds.b_min, energy_step, "energy")?;
        let lattice = cells.len() as u64 * n_t as u64 * n_b as u64;
        if lattice >= u32::MAX as u64 - 2 {
            return Err(Error::invalid(format!("{lattice} lattice states exceed the index range")));
        }
        let mut lookup = vec![NO_CELL; grid_rows * grid_cols];
        for (k, c) in cells.iter().enumerate() {
            if c.row >= grid_rows || c.col >= grid_cols {
                return Err(Error::invalid(format!("cell {c} lies outside the grid")));
            }
            lookup[c.row * grid_cols + c.col] = k as u32;
        }
        Ok(DiscreteStateSpace {
            cells,
            lookup,
            grid_rows,
            grid_cols,
            bounds,
            time_step,
            energy_step,
            n_t,
            n_b,
            snap,
        })
    }

    pub fn bounds(&self) -> &OperationalBounds<T> {
        &self.bounds
    }

    /// (rows, cols) of the raster the cells live in.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn n_time(&self) -> usize {
        self.n_t
    }

    pub fn n_energy(&self) -> usize {
        self.n_b
    }

    pub fn time_step(&self) -> T {
        self.time_step
    }

    pub fn energy_step(&self) -> T {
        self.energy_step
    }

    /// Number of lattice states (the sink excluded).
    pub fn n_lattice(&self) -> usize {
        self.cells.len() * self.n_t * self.n_b
    }

    /// |Z| = |C| · n_T · n_B + 1.
    pub fn cardinality(&self) -> usize {
        self.n_lattice() + 1
    }

    pub fn sink(&self) -> StateId {
        StateId(self.n_lattice() as u32)
    }

    pub fn is_sink(&self, z: StateId) -> bool {
        z.index() == self.n_lattice()
    }

    pub fn time_point(&self, ti: usize) -> T {
        self.bounds.t_min + self.time_step * T::lit(ti as f64)
    }

    pub fn energy_point(&self, bi: usize) -> T {
        self.bounds.b_min + self.energy_step * T::lit(bi as f64)
    }

    pub fn cell_index(&self, cell: Cell) -> Option<usize> {
        if cell.row >= self.grid_rows || cell.col >= self.grid_cols {
            return None;
        }
        let k = self.lookup[cell.row * self.grid_cols + cell.col];
        (k != NO_CELL).then_some(k as usize)
    }

    #[inline]
    pub fn id(&self, cell_index: usize, ti: usize, bi: usize) -> StateId {
        StateId(((cell_index * self.n_t + ti) * self.n_b + bi) as u32)
    }

    /// (cell index, time index, energy index) of a lattice state.
    pub fn coords(&self, z: StateId) -> Option<(usize, usize, usize)> {
        let i = z.index();
        if i >= self.n_lattice() {
            return None;
        }
        Some((i / (self.n_t * self.n_b), (i / self.n_b) % self.n_t, i % self.n_b))
    }

    /// The hybrid state at `z`'s lattice coordinates.
    pub fn embed(&self, z: StateId) -> Result<HybridState<T>> {
        let (c, ti, bi) = self
            .coords(z)
            .ok_or_else(|| Error::invalid("the failure sink has no hybrid embedding"))?;
        Ok(HybridState::new(self.cells[c], self.time_point(ti), self.energy_point(bi)))
    }

    fn coord(&self, x: &HybridState<T>) -> Option<Coord<T>> {
        let cell = self.cell_index(x.cell)? as u32;
        let u_t = (x.t - self.bounds.t_min) / self.time_step;
        let top_t = T::lit((self.n_t - 1) as f64);
        if !(u_t >= -self.snap && u_t <= top_t + self.snap) {
            return None;
        }
        let u_b = (x.b.min(self.bounds.b_max) - self.bounds.b_min) / self.energy_step;
        if !(u_b >= -self.snap) {
            return None;
        }
        let top_b = T::lit((self.n_b - 1) as f64);
        Some(Coord {
            cell,
            u_t: u_t.max(T::zero()).min(top_t),
            u_b: u_b.max(T::zero()).min(top_b),
        })
    }

    /// Integer floor with lattice snapping.
    #[inline]
    fn floor_of(&self, u: T) -> usize {
        let r = u.round();
        let v = if (u - r).abs() <= self.snap { r } else { u.floor() };
        v.to_usize().unwrap_or(0)
    }

    #[inline]
    fn ceil_of(&self, u: T) -> usize {
        let r = u.round();
        let v = if (u - r).abs() <= self.snap { r } else { u.ceil() };
        v.to_usize().unwrap_or(0)
    }

    pub fn map(&self, kind: MapKind, x: &HybridState<T>) -> DiscreteMapResult<T> {
        match kind {
            MapKind::Nearest => self.map_nearest(x),
            MapKind::Interp => self.map_interp(x),
            MapKind::Lower => self.map_lower(x),
            MapKind::Upper => self.map_upper(x),
        }
    }

    /// Same cell, nearest time and energy lattice values (halves round up).
    pub fn map_nearest(&self, x: &HybridState<T>) -> DiscreteMapResult<T> {
        let Some(c) = self.coord(x) else {
            return DiscreteMapResult::single(self.sink());
        };
        let half = T::lit(0.5);
        let ti = self.floor_of(c.u_t + half).min(self.n_t - 1);
        let bi = self.floor_of(c.u_b + half).min(self.n_b - 1);
        DiscreteMapResult::single(self.id(c.cell as usize, ti, bi))
    }

    /// Floor time, floor energy.
    pub fn map_lower(&self, x: &HybridState<T>) -> DiscreteMapResult<T> {
        let Some(c) = self.coord(x) else {
            return DiscreteMapResult::single(self.sink());
        };
        DiscreteMapResult::single(self.id(c.cell as usize, self.floor_of(c.u_t), self.floor_of(c.u_b)))
    }

    /// Ceil time, floor energy.
    pub fn map_upper(&self, x: &HybridState<T>) -> DiscreteMapResult<T> {
        let Some(c) = self.coord(x) else {
            return DiscreteMapResult::single(self.sink());
        };
        let ti = self.ceil_of(c.u_t).min(self.n_t - 1);
        DiscreteMapResult::single(self.id(c.cell as usize, ti, self.floor_of(c.u_b)))
    }

    /// Bilinear weights over the enclosing lattice points, listed as
    /// z0 = (t_{j+1}, b_j), z1 = (t_{j+1}, b_{j+1}), z2 = (t_j, b_{j+1}),
    /// z3 = (t_j, b_j). Zero-weight corners are dropped.
    pub fn map_interp(&self, x: &HybridState<T>) -> DiscreteMapResult<T> {
        let Some(c) = self.coord(x) else {
            return DiscreteMapResult::single(self.sink());
        };
        let tj = self.floor_of(c.u_t);
        let bj = self.floor_of(c.u_b);
        let clamp01 = |v: T| v.max(T::zero()).min(T::one());
        let wt = if tj + 1 < self.n_t { clamp01(c.u_t - T::lit(tj as f64)) } else { T::zero() };
        let wb = if bj + 1 < self.n_b { clamp01(c.u_b - T::lit(bj as f64)) } else { T::zero() };
        let cell = c.cell as usize;
        let one = T::one();
        let mut out = DiscreteMapResult {
            entries: [(self.sink(), T::zero()); 4],
            len: 0,
        };
        if wt > T::zero() {
            out.push(self.id(cell, tj + 1, bj), (one - wb) * wt);
            if wb > T::zero() {
                out.push(self.id(cell, tj + 1, bj + 1), wb * wt);
            }
        }
        if wb > T::zero() {
            out.push(self.id(cell, tj, bj + 1), wb * (one - wt));
        }
        out.push(self.id(cell, tj, bj), (one - wb) * (one - wt));
        out
    }
}
