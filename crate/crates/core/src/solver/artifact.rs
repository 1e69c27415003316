//! Binary value/policy artifact.
//!
//! Little-endian layout: magic, format version, |Z|, raster shape, cell list,
//! time and energy lattice descriptors, flavour, number of transition
//! structures per action, epsilon, iteration count, final residual, scenario
//! content hash, tool version, scenario path, |Z| values as f64 and |Z|
//! action codes as u8 (255 where no action applies).

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{Flavour, Solution};
use crate::error::{Error, Result};
use crate::location::{Action, Cell};
use crate::num::Real;
use crate::scenario::Scenario;
use crate::statespace::{DiscreteStateSpace, OperationalBounds};

pub const ARTIFACT_MAGIC: &[u8; 8] = b"HVNWALK\0";
pub const ARTIFACT_VERSION: u32 = 1;
const NO_ACTION: u8 = 255;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyArtifact {
    pub flavour: Flavour,
    pub n_structures: u8,
    pub epsilon: f64,
    pub iterations: u64,
    pub residual: f64,
    pub scenario_hash: String,
    pub tool_version: String,
    pub scenario_path: String,
    pub grid_shape: (usize, usize),
    pub cells: Vec<Cell>,
    pub bounds: OperationalBounds<f64>,
    pub time_step: f64,
    pub energy_step: f64,
    pub n_time: usize,
    pub n_energy: usize,
    /// One per discrete state, sink last.
    pub values: Vec<f64>,
    /// One per discrete state, sink last.
    pub actions: Vec<Option<Action>>,
}

impl PolicyArtifact {
    pub fn from_solution<T: Real>(scenario: &Scenario<T>, solution: &Solution<T>, epsilon: T, tool_version: &str) -> Self {
        let space = &scenario.space;
        let b = space.bounds();
        let mut actions = solution.policy.actions.clone();
        actions.push(None);
        PolicyArtifact {
            flavour: solution.flavour,
            n_structures: solution.flavour.maps().len() as u8,
            epsilon: epsilon.as_f64(),
            iterations: solution.stats.iterations as u64,
            residual: solution.stats.residual.as_f64(),
            scenario_hash: scenario.hash().to_string(),
            tool_version: tool_version.to_string(),
            scenario_path: scenario.source().map(|p| p.display().to_string()).unwrap_or_default(),
            grid_shape: space.grid_shape(),
            cells: space.cells().to_vec(),
            bounds: OperationalBounds {
                t_min: b.t_min.as_f64(),
                t_max: b.t_max.as_f64(),
                b_min: b.b_min.as_f64(),
                b_max: b.b_max.as_f64(),
            },
            time_step: space.time_step().as_f64(),
            energy_step: space.energy_step().as_f64(),
            n_time: space.n_time(),
            n_energy: space.n_energy(),
            values: solution.values.values.iter().map(|v| v.as_f64()).collect(),
            actions,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    /// Rebuilds the lattice the values refer to.
    pub fn space<T: Real>(&self) -> Result<DiscreteStateSpace<T>> {
        let b = &self.bounds;
        let space = DiscreteStateSpace::new(
            self.cells.clone(),
            self.grid_shape.0,
            self.grid_shape.1,
            OperationalBounds {
                t_min: T::lit(b.t_min),
                t_max: T::lit(b.t_max),
                b_min: T::lit(b.b_min),
                b_max: T::lit(b.b_max),
            },
            T::lit(self.time_step),
            T::lit(self.energy_step),
        )?;
        if space.cardinality() != self.values.len() {
            return Err(Error::Artifact("lattice descriptors disagree with the value count".into()));
        }
        Ok(space)
    }

    pub fn values_as<T: Real>(&self) -> Vec<T> {
        self.values.iter().map(|v| T::lit(*v)).collect()
    }

    /// Refuses a scenario other than the one the artifact was solved for.
    pub fn check_scenario(&self, hash: &str) -> Result<()> {
        if self.scenario_hash != hash {
            return Err(Error::HashMismatch {
                expected: self.scenario_hash.clone(),
                found: hash.to_string(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::with_capacity(128 + self.values.len() * 9);
        let io = |r: std::io::Result<()>| r.expect("writing to memory");
        w.extend_from_slice(ARTIFACT_MAGIC);
        io(w.write_u32::<LE>(ARTIFACT_VERSION));
        io(w.write_u64::<LE>(self.values.len() as u64));
        io(w.write_u32::<LE>(self.grid_shape.0 as u32));
        io(w.write_u32::<LE>(self.grid_shape.1 as u32));
        io(w.write_u32::<LE>(self.cells.len() as u32));
        for c in &self.cells {
            io(w.write_u32::<LE>(c.row as u32));
            io(w.write_u32::<LE>(c.col as u32));
        }
        let b = &self.bounds;
        for v in [b.t_min, b.t_max, self.time_step] {
            io(w.write_f64::<LE>(v));
        }
        io(w.write_u32::<LE>(self.n_time as u32));
        for v in [b.b_min, b.b_max, self.energy_step] {
            io(w.write_f64::<LE>(v));
        }
        io(w.write_u32::<LE>(self.n_energy as u32));
        io(w.write_u8(self.flavour.code()));
        io(w.write_u8(self.n_structures));
        io(w.write_f64::<LE>(self.epsilon));
        io(w.write_u64::<LE>(self.iterations));
        io(w.write_f64::<LE>(self.residual));
        for s in [&self.scenario_hash, &self.tool_version, &self.scenario_path] {
            io(w.write_u32::<LE>(s.len() as u32));
            w.extend_from_slice(s.as_bytes());
        }
        for v in &self.values {
            io(w.write_f64::<LE>(*v));
        }
        w.extend(self.actions.iter().map(|a| a.map_or(NO_ACTION, |a| a.index() as u8)));
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        let bad = |what: &str| Error::Artifact(what.to_string());
        let trunc = |_| bad("truncated");
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(trunc)?;
        if &magic != ARTIFACT_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.read_u32::<LE>().map_err(trunc)?;
        if version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!("unsupported version {version}")));
        }
        let n_z = r.read_u64::<LE>().map_err(trunc)? as usize;
        let rows = r.read_u32::<LE>().map_err(trunc)? as usize;
        let cols = r.read_u32::<LE>().map_err(trunc)? as usize;
        let n_cells = r.read_u32::<LE>().map_err(trunc)? as usize;
        if n_cells > bytes.len() / 8 {
            return Err(bad("cell count exceeds file size"));
        }
        let mut cells = Vec::with_capacity(n_cells);
        for _ in 0..n_cells {
            let row = r.read_u32::<LE>().map_err(trunc)? as usize;
            let col = r.read_u32::<LE>().map_err(trunc)? as usize;
            cells.push(Cell::new(row, col));
        }
        let t_min = r.read_f64::<LE>().map_err(trunc)?;
        let t_max = r.read_f64::<LE>().map_err(trunc)?;
        let time_step = r.read_f64::<LE>().map_err(trunc)?;
        let n_time = r.read_u32::<LE>().map_err(trunc)? as usize;
        let b_min = r.read_f64::<LE>().map_err(trunc)?;
        let b_max = r.read_f64::<LE>().map_err(trunc)?;
        let energy_step = r.read_f64::<LE>().map_err(trunc)?;
        let n_energy = r.read_u32::<LE>().map_err(trunc)? as usize;
        let flavour = Flavour::from_code(r.read_u8().map_err(trunc)?).ok_or_else(|| bad("unknown flavour"))?;
        let n_structures = r.read_u8().map_err(trunc)?;
        let epsilon = r.read_f64::<LE>().map_err(trunc)?;
        let iterations = r.read_u64::<LE>().map_err(trunc)?;
        let residual = r.read_f64::<LE>().map_err(trunc)?;
        let mut strings = Vec::with_capacity(3);
        for _ in 0..3 {
            let len = r.read_u32::<LE>().map_err(trunc)? as usize;
            if len > bytes.len() {
                return Err(bad("string length exceeds file size"));
            }
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(trunc)?;
            strings.push(String::from_utf8(buf).map_err(|_| bad("non-UTF-8 string"))?);
        }
        if n_z != n_cells * n_time * n_energy + 1 {
            return Err(bad("|Z| disagrees with the lattice descriptors"));
        }
        if (bytes.len() as u64) < r.position() + n_z as u64 * 9 {
            return Err(bad("truncated"));
        }
        let mut values = Vec::with_capacity(n_z);
        for _ in 0..n_z {
            values.push(r.read_f64::<LE>().map_err(trunc)?);
        }
        let mut actions = Vec::with_capacity(n_z);
        for _ in 0..n_z {
            let code = r.read_u8().map_err(trunc)?;
            actions.push(if code == NO_ACTION {
                None
            } else {
                Some(Action::from_index(code as usize).ok_or_else(|| bad("unknown action code"))?)
            });
        }
        if (r.position() as usize) != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        let mut strings = strings.into_iter();
        Ok(PolicyArtifact {
            flavour,
            n_structures,
            epsilon,
            iterations,
            residual,
            scenario_hash: strings.next().unwrap(),
            tool_version: strings.next().unwrap(),
            scenario_path: strings.next().unwrap(),
            grid_shape: (rows, cols),
            cells,
            bounds: OperationalBounds { t_min, t_max, b_min, b_max },
            time_step,
            energy_step,
            n_time,
            n_energy,
            values,
            actions,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        PolicyArtifact::from_bytes(&bytes)
    }
}
