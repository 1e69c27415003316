//! Synthetic scenarios: gently undulating terrain, an illuminated band that
//! sweeps across the grid, and a permanently dark rectangle.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::faults::FaultParams;
use crate::geodata::{GridMap, IrradianceStack};
use crate::num::Real;
use crate::rover::RoverParams;
use crate::safehaven::HavenSelector;
use crate::scenario::{
    write_scenario_dir, DiscretizationConfig, Scenario, ScenarioConfig, SafeSetConfig, SimulatorConfig,
    SolverConfig, TerrainConfig,
};
use crate::solver::{solve, Flavour};
use crate::statespace::OperationalBounds;

pub const NODATA: f64 = -9999.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub n_rows: usize,
    pub n_cols: usize,
    /// m
    pub cell_size: f64,
    /// Speed of the band front across the ground, m/s. `None` crosses the
    /// grid once over the window.
    pub sweep_speed: Option<f64>,
    /// Operational window length, s.
    pub window_s: f64,
    pub seed: u64,
    /// Peak irradiance inside the band, W/m².
    pub band_irradiance: f64,
    /// Band width as a fraction of the grid extent along the sweep.
    pub band_width: f64,
    /// Initial front position as a fraction of the extent.
    pub front_offset: f64,
    /// Side of the dark rectangle as a fraction of the interior side.
    pub psr_fraction: f64,
    /// Amplitude of the terrain undulation, m.
    pub relief_m: f64,
    pub start_epoch: f64,
    /// Frame spacing, s.
    pub frame_step_s: f64,
    pub rover: RoverParams<f64>,
    pub faults: FaultParams<f64>,
    pub b_min: f64,
    pub b_max: f64,
    pub min_energy_at_limit: f64,
    pub time_resolution_s: f64,
    pub energy_resolution_wh: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            n_rows: 10,
            n_cols: 10,
            cell_size: 240.0,
            sweep_speed: None,
            window_s: 24.0 * 3600.0,
            seed: 1,
            band_irradiance: 1000.0,
            band_width: 0.6,
            front_offset: 0.3,
            psr_fraction: 0.5,
            relief_m: 8.0,
            start_epoch: 1_882_008_000.0,
            frame_step_s: 3600.0,
            rover: RoverParams {
                panel_area: 1.5,
                panel_efficiency: 0.30,
                drive_velocity: 0.10,
                drive_power: 220.0,
                fault_power: 80.0,
                idle_power: 80.0,
                hibernate_power: 40.0,
                battery_capacity: 10_000.0,
                wait_duration: 5000.0,
            },
            faults: FaultParams {
                rate_alpha: 1.0 / 1000.0,
                recovery_duration: 18_000.0,
            },
            b_min: 500.0,
            b_max: 4000.0,
            min_energy_at_limit: 1000.0,
            time_resolution_s: 3600.0,
            energy_resolution_wh: 100.0,
        }
    }
}

/// In-memory scenario parts, ready to write or assemble.
#[derive(Debug, Clone)]
pub struct GeneratedScenario<T> {
    pub config: ScenarioConfig<T>,
    pub elevation: GridMap<T>,
    pub stack: IrradianceStack<T>,
}

impl<T: Real> GeneratedScenario<T> {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        write_scenario_dir(dir, &self.config, &self.elevation, &self.stack)
    }

    pub fn build(self) -> Result<Scenario<T>> {
        Scenario::from_parts(self.config, self.elevation, self.stack)
    }
}

/// Deterministic in `params.seed`.
pub fn gen_sweep_scenario<T: Real>(params: &SweepParams) -> Result<GeneratedScenario<T>> {
    let p = params;
    if p.n_rows < 5 || p.n_cols < 5 {
        return Err(Error::invalid(format!(
            "scenario needs at least 5x5 cells, got {}x{}",
            p.n_rows, p.n_cols
        )));
    }
    if !(p.cell_size > 0.0 && p.window_s > 0.0 && p.frame_step_s > 0.0) {
        return Err(Error::invalid("cell size, window and frame step must be positive"));
    }
    if !(p.band_irradiance >= 0.0 && p.band_width > 0.0) {
        return Err(Error::invalid("band irradiance and width must be positive"));
    }
    if let Some(v) = p.sweep_speed {
        if !(v >= 0.0) {
            return Err(Error::invalid("sweep speed must be non-negative"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (rows, cols, cs) = (p.n_rows, p.n_cols, p.cell_size);

    let phase = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
    let wavelength = (rng.gen_range(3.0..6.0) * cs, rng.gen_range(3.0..6.0) * cs);
    let elevation: Vec<f64> = (0..rows * cols)
        .map(|i| {
            let (x, y) = centre(i / cols, i % cols, rows, cs);
            p.relief_m * (2.0 * PI * x / wavelength.0 + phase.0).sin() * (2.0 * PI * y / wavelength.1 + phase.1).cos()
        })
        .collect();

    // Sun from the south-west quadrant: the band moves north-east.
    let heading = PI / 4.0 + rng.gen_range(-PI / 9.0..PI / 9.0);
    let dir = (heading.cos(), heading.sin());
    let proj: Vec<f64> = (0..rows * cols)
        .map(|i| {
            let (x, y) = centre(i / cols, i % cols, rows, cs);
            x * dir.0 + y * dir.1
        })
        .collect();
    let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let extent = (hi - lo).max(cs);
    let width = p.band_width * extent;
    let speed = p.sweep_speed.unwrap_or(extent / p.window_s);

    if !(p.psr_fraction > 0.0 && p.psr_fraction <= 1.0) {
        return Err(Error::invalid("psr_fraction must lie in (0, 1]"));
    }
    let side = |n: usize| (((n - 2) as f64 * p.psr_fraction).round() as usize).clamp(1, n - 2);
    let (ph, pw) = (side(rows), side(cols));
    let r0 = rng.gen_range(1..=rows - 1 - ph);
    let c0 = rng.gen_range(1..=cols - 1 - pw);
    let in_psr = |i: usize| {
        let (r, c) = (i / cols, i % cols);
        (r0..r0 + ph).contains(&r) && (c0..c0 + pw).contains(&c)
    };
    let texture: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0.85..1.0)).collect();

    // Outcomes started at the end of the window need irradiance beyond it.
    let rover = &p.rover;
    let longest = rover
        .wait_duration
        .max(2f64.sqrt() * cs / rover.drive_velocity + p.faults.recovery_duration);
    let n_frames = ((p.window_s + longest) / p.frame_step_s).ceil() as usize + 2;
    let mut timestamps = Vec::with_capacity(n_frames);
    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let dt = k as f64 * p.frame_step_s;
        let front = lo + p.front_offset * extent + speed * dt;
        let values = (0..rows * cols)
            .map(|i| {
                let lit = !in_psr(i) && proj[i] <= front && proj[i] >= front - width;
                T::lit(if lit { p.band_irradiance * texture[i] } else { 0.0 })
            })
            .collect();
        timestamps.push(T::lit(p.start_epoch + dt));
        frames.push(grid(rows, cols, cs, values)?);
    }
    let stack = IrradianceStack::new(timestamps, frames)?;
    let elevation = grid(rows, cols, cs, elevation.into_iter().map(T::lit).collect())?;

    let t_min = p.start_epoch;
    let t_max = p.start_epoch + p.window_s;
    let config = ScenarioConfig {
        rover: cast_rover(&p.rover),
        faults: FaultParams {
            rate_alpha: T::lit(p.faults.rate_alpha),
            recovery_duration: T::lit(p.faults.recovery_duration),
        },
        bounds: OperationalBounds {
            t_min: T::lit(t_min),
            t_max: T::lit(t_max),
            b_min: T::lit(p.b_min),
            b_max: T::lit(p.b_max),
        },
        safe_set: SafeSetConfig {
            selector: HavenSelector::PsrComplement,
            threshold: T::zero(),
            time_limit: T::lit(t_max),
            min_energy_at_limit: T::lit(p.min_energy_at_limit),
            zeta_step_s: None,
        },
        discretization: DiscretizationConfig {
            time_resolution_s: T::lit(p.time_resolution_s),
            energy_resolution_wh: T::lit(p.energy_resolution_wh),
        },
        terrain: TerrainConfig::default(),
        solver: SolverConfig::default(),
        simulator: SimulatorConfig::default(),
    };
    Ok(GeneratedScenario {
        config,
        elevation,
        stack,
    })
}

/// Tries seeds `params.seed, params.seed + 1, ...` until the conservative
/// solution has a lattice state with value strictly between 0 and 1.
pub fn find_nontrivial_sweep(params: &SweepParams, max_tries: usize) -> Result<(SweepParams, Scenario<f64>)> {
    for k in 0..max_tries as u64 {
        let mut p = params.clone();
        p.seed = params.seed.wrapping_add(k);
        let scenario = gen_sweep_scenario::<f64>(&p)?.build()?;
        let sol = solve(&scenario, Flavour::Conservative, scenario.config.solver.epsilon, scenario.config.solver.max_iterations)?;
        let lattice = &sol.values.values[..scenario.space.n_lattice()];
        if lattice.iter().any(|v| *v > 0.0 && *v < 1.0) {
            return Ok((p, scenario));
        }
    }
    Err(Error::invalid(format!("no scenario with intermediate risk in {max_tries} seeds")))
}

fn centre(row: usize, col: usize, rows: usize, cs: f64) -> (f64, f64) {
    ((col as f64 + 0.5) * cs, (rows as f64 - row as f64 - 0.5) * cs)
}

fn grid<T: Real>(rows: usize, cols: usize, cs: f64, values: Vec<T>) -> Result<GridMap<T>> {
    GridMap::new(rows, cols, T::lit(cs), (T::zero(), T::zero()), T::lit(NODATA), values)
}

fn cast_rover<T: Real>(r: &RoverParams<f64>) -> RoverParams<T> {
    RoverParams {
        panel_area: T::lit(r.panel_area),
        panel_efficiency: T::lit(r.panel_efficiency),
        drive_velocity: T::lit(r.drive_velocity),
        drive_power: T::lit(r.drive_power),
        fault_power: T::lit(r.fault_power),
        idle_power: T::lit(r.idle_power),
        hibernate_power: T::lit(r.hibernate_power),
        battery_capacity: T::lit(r.battery_capacity),
        wait_duration: T::lit(r.wait_duration),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::location::Cell;

    #[test]
    fn rejects_tiny_grids() {
        let p = SweepParams {
            n_rows: 2,
            ..SweepParams::default()
        };
        assert!(gen_sweep_scenario::<f64>(&p).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let p = SweepParams::default();
        let a = gen_sweep_scenario::<f64>(&p).unwrap().build().unwrap();
        let b = gen_sweep_scenario::<f64>(&p).unwrap().build().unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = gen_sweep_scenario::<f64>(&SweepParams { seed: 2, ..p }).unwrap().build().unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn static_sweep_psr_is_initially_dark() {
        let p = SweepParams {
            sweep_speed: Some(0.0),
            ..SweepParams::default()
        };
        let g = gen_sweep_scenario::<f64>(&p).unwrap();
        let first = g.stack.frames()[0].clone();
        let s = g.build().unwrap();
        for c in s.terrain.elevation.cells() {
            assert_eq!(s.terrain.is_psr(c), first.get(c) == 0.0, "{c}");
        }
    }

    #[test]
    fn has_dark_rectangle_and_light() {
        let s = gen_sweep_scenario::<f64>(&SweepParams::default()).unwrap().build().unwrap();
        let interior: Vec<Cell> = s.space.cells().to_vec();
        assert_eq!(interior.len(), 64);
        assert!(interior.iter().any(|c| s.terrain.is_psr(*c)));
        assert!(interior.iter().any(|c| !s.terrain.is_psr(*c)));
        assert!(s.safe_set.havens().count() > 0);
    }
}
