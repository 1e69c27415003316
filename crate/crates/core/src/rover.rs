//! Rover power and kinematics: nominal and fault state changes, and exact
//! energy integration over the zero-order-hold irradiance signal.
//!
//! Time is in seconds and energy in watt-hours throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{drive_distance, IrradianceStack, TerrainProducts};
use crate::location::{Action, Cell};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoverParams<T> {
    /// m²
    pub panel_area: T,
    /// Fraction in (0, 1].
    pub panel_efficiency: T,
    /// m/s
    pub drive_velocity: T,
    /// W
    pub drive_power: T,
    /// W drawn while a fault is being resolved.
    pub fault_power: T,
    /// W drawn while waiting in place.
    pub idle_power: T,
    /// W drawn while hibernating at a safe haven.
    pub hibernate_power: T,
    /// Wh
    pub battery_capacity: T,
    /// Duration of the wait action, s.
    pub wait_duration: T,
}

impl<T: Real> RoverParams<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let powers = [
            self.drive_power,
            self.fault_power,
            self.idle_power,
            self.hibernate_power,
        ];
        if powers.iter().any(|p| !(*p >= z)) {
            return Err(Error::invalid("rover power draws must be non-negative"));
        }
        if !(self.panel_area >= z) {
            return Err(Error::invalid("panel area must be non-negative"));
        }
        if !(self.panel_efficiency > z && self.panel_efficiency <= T::one()) {
            return Err(Error::invalid("panel efficiency must lie in (0, 1]"));
        }
        if !(self.drive_velocity > z && self.battery_capacity > z && self.wait_duration > z) {
            return Err(Error::invalid(
                "velocity, battery capacity and wait duration must be positive",
            ));
        }
        if self.hibernate_power > self.idle_power {
            return Err(Error::invalid("hibernation must draw no more than idling"));
        }
        Ok(())
    }

    /// Panel output per W/m² of irradiance.
    #[inline]
    pub fn panel_gain(&self) -> T {
        self.panel_area * self.panel_efficiency
    }
}

/// A point of the hybrid state space: location, epoch time, stored energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridState<T> {
    pub cell: Cell,
    pub t: T,
    pub b: T,
}

impl<T: Real> HybridState<T> {
    pub fn new(cell: Cell, t: T, b: T) -> Self {
        HybridState { cell, t, b }
    }

    /// Applies `delta`, saturating energy at `ceiling`. Energy is not
    /// clamped from below: running dry is a failure the caller detects.
    pub fn apply(self, delta: &StateDelta<T>, ceiling: T) -> Self {
        let cell = Cell::new(
            (self.cell.row as isize + delta.dcell.0) as usize,
            (self.cell.col as isize + delta.dcell.1) as usize,
        );
        HybridState {
            cell,
            t: self.t + delta.dt,
            b: (self.b + delta.db).min(ceiling),
        }
    }
}

/// Change in (cell, time, energy) produced by one action outcome phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDelta<T> {
    pub dcell: (isize, isize),
    pub dt: T,
    pub db: T,
}

impl<T: Real> StateDelta<T> {
    pub fn combine(&self, other: &StateDelta<T>) -> StateDelta<T> {
        StateDelta {
            dcell: (self.dcell.0 + other.dcell.0, self.dcell.1 + other.dcell.1),
            dt: self.dt + other.dt,
            db: self.db + other.db,
        }
    }
}

pub fn solar_power<T: Real>(
    params: &RoverParams<T>,
    stack: &IrradianceStack<T>,
    cell: Cell,
    t: T,
) -> Result<T> {
    Ok(stack.irradiance_at(cell, t)? * params.panel_gain())
}

/// Net energy (Wh) over `[t0, t0 + dt]` at a fixed cell under constant
/// `load` watts. Exact over the hold segments; the caller saturates SOC.
pub fn integrate_energy<T: Real>(
    params: &RoverParams<T>,
    stack: &IrradianceStack<T>,
    cell: Cell,
    t0: T,
    dt: T,
    load: T,
) -> Result<T> {
    let index = stack.geometry().index(cell);
    integrate_at_index(params, stack, index, t0, dt, load)
}

#[inline]
pub(crate) fn integrate_at_index<T: Real>(
    params: &RoverParams<T>,
    stack: &IrradianceStack<T>,
    index: usize,
    t0: T,
    dt: T,
    load: T,
) -> Result<T> {
    if !(dt > T::zero()) {
        return Err(Error::invalid("integration duration must be positive"));
    }
    let sun = stack.integral_at_index(index, t0, t0 + dt)?;
    Ok((sun * params.panel_gain() - load * dt).hours())
}

/// Fault-free outcome of `action` from `x`. Drive energy is integrated at the
/// originating cell for the whole drive.
pub fn nominal_delta<T: Real>(
    params: &RoverParams<T>,
    stack: &IrradianceStack<T>,
    terrain: &TerrainProducts<T>,
    x: &HybridState<T>,
    action: Action,
) -> Result<StateDelta<T>> {
    let rho = drive_distance(terrain, x.cell, action)?;
    let (dt, load) = if action.is_drive() {
        (rho / params.drive_velocity, params.drive_power)
    } else {
        (params.wait_duration, params.idle_power)
    };
    Ok(StateDelta {
        dcell: action.offset(),
        dt,
        db: integrate_energy(params, stack, x.cell, x.t, dt, load)?,
    })
}

/// The rover holds position for `dt_fault` seconds while a fault is resolved.
pub fn fault_delta<T: Real>(
    params: &RoverParams<T>,
    stack: &IrradianceStack<T>,
    x: &HybridState<T>,
    dt_fault: T,
) -> Result<StateDelta<T>> {
    Ok(StateDelta {
        dcell: (0, 0),
        dt: dt_fault,
        db: integrate_energy(params, stack, x.cell, x.t, dt_fault, params.fault_power)?,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geodata::GridMap;
    use approx::assert_abs_diff_eq;

    pub fn table_rover() -> RoverParams<f64> {
        RoverParams {
            panel_area: 1.5,
            panel_efficiency: 0.30,
            drive_velocity: 0.10,
            drive_power: 220.0,
            fault_power: 80.0,
            idle_power: 80.0,
            hibernate_power: 40.0,
            battery_capacity: 10_000.0,
            wait_duration: 5000.0,
        }
    }

    /// 5x5 flat terrain; cell (2,2) gets `levels[k]` in frame k, others dark.
    fn setup(levels: &[f64], spacing: f64) -> (IrradianceStack<f64>, TerrainProducts<f64>) {
        let ts: Vec<f64> = (0..levels.len()).map(|k| k as f64 * spacing).collect();
        let frames = levels
            .iter()
            .map(|l| {
                let mut g = GridMap::new(5, 5, 240.0, (0.0, 0.0), -9999.0, vec![0.0; 25]).unwrap();
                g.set(Cell::new(2, 2), *l);
                g
            })
            .collect();
        let stack = IrradianceStack::new(ts, frames).unwrap();
        let elev = GridMap::new(5, 5, 240.0, (0.0, 0.0), -9999.0, vec![0.0; 25]).unwrap();
        let terrain = TerrainProducts::build(elev, &stack, 20.0, (0.0, spacing)).unwrap();
        (stack, terrain)
    }

    #[test]
    fn solar_power_values() {
        let r = table_rover();
        let (stack, _) = setup(&[1367.0, 0.0], 3600.0);
        assert_abs_diff_eq!(solar_power(&r, &stack, Cell::new(2, 2), 0.0).unwrap(), 615.15, epsilon = 1e-9);
        assert_eq!(solar_power(&r, &stack, Cell::new(1, 1), 0.0).unwrap(), 0.0);
        let unit = RoverParams { panel_area: 1.0, panel_efficiency: 1.0, ..r };
        assert_eq!(solar_power(&unit, &stack, Cell::new(2, 2), 0.0).unwrap(), 1367.0);
    }

    #[test]
    fn integration_examples() {
        let r = table_rover();
        let (stack, _) = setup(&[0.0, 1367.0, 1367.0], 1800.0);
        let dark = Cell::new(1, 1);
        assert_abs_diff_eq!(integrate_energy(&r, &stack, dark, 0.0, 3600.0, 80.0).unwrap(), -80.0, epsilon = 1e-12);
        let lit = Cell::new(2, 2);
        // half an hour dark, half an hour at 615.15 W
        assert_abs_diff_eq!(integrate_energy(&r, &stack, lit, 0.0, 3600.0, 0.0).unwrap(), 307.575, epsilon = 1e-9);
        // balance
        assert_abs_diff_eq!(integrate_energy(&r, &stack, lit, 1800.0, 1800.0, 615.15).unwrap(), 0.0, epsilon = 1e-9);
        assert!(integrate_energy(&r, &stack, lit, 0.0, 0.0, 1.0).is_err());
        assert!(matches!(integrate_energy(&r, &stack, lit, 3000.0, 1000.0, 1.0), Err(Error::Coverage { .. })));
    }

    #[test]
    fn nominal_wait_and_drive() {
        let r = table_rover();
        let (stack, terrain) = setup(&[0.0; 4], 3600.0);
        let x = HybridState::new(Cell::new(2, 2), 0.0, 5000.0);
        let w = nominal_delta(&r, &stack, &terrain, &x, Action::Wait).unwrap();
        assert_eq!(w.dcell, (0, 0));
        assert_eq!(w.dt, 5000.0);
        assert_abs_diff_eq!(w.db, -111.111_111, epsilon = 1e-5);
        let d = nominal_delta(&r, &stack, &terrain, &x, Action::East).unwrap();
        assert_eq!(d.dcell, (0, 1));
        assert_abs_diff_eq!(d.dt, 2400.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d.db, -146.666_667, epsilon = 1e-5);
        assert!(nominal_delta(&r, &stack, &terrain, &HybridState::new(Cell::new(1, 1), 0.0, 1.0), Action::North).is_err());
    }

    #[test]
    fn drive_in_balanced_sun() {
        let r = table_rover();
        // 220 W of generation needs 220 / 0.45 W/m²
        let (stack, terrain) = setup(&[220.0 / 0.45; 2], 3600.0);
        let x = HybridState::new(Cell::new(2, 2), 0.0, 5000.0);
        let d = nominal_delta(&r, &stack, &terrain, &x, Action::South).unwrap();
        assert_abs_diff_eq!(d.db, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn fault_examples() {
        let r = table_rover();
        let (stack, _) = setup(&[0.0; 12], 3600.0);
        let x = HybridState::new(Cell::new(1, 1), 0.0, 5000.0);
        let f = fault_delta(&r, &stack, &x, 18_000.0).unwrap();
        assert_eq!((f.dcell, f.dt), ((0, 0), 18_000.0));
        assert_abs_diff_eq!(f.db, -400.0, epsilon = 1e-9);
        let r50 = RoverParams { fault_power: 50.0, ..r };
        assert_abs_diff_eq!(fault_delta(&r50, &stack, &x, 36_000.0).unwrap().db, -500.0, epsilon = 1e-9);
        let (stack, _) = setup(&[80.0 / 0.45; 12], 3600.0);
        let lit = HybridState::new(Cell::new(2, 2), 0.0, 5000.0);
        assert_abs_diff_eq!(fault_delta(&r, &stack, &lit, 18_000.0).unwrap().db, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn apply_saturates_only_at_ceiling() {
        let x = HybridState::new(Cell::new(2, 2), 0.0, 9_950.0);
        let up = StateDelta { dcell: (0, 1), dt: 10.0, db: 100.0 };
        let y = x.apply(&up, 10_000.0);
        assert_eq!((y.cell, y.t, y.b), (Cell::new(2, 3), 10.0, 10_000.0));
        let down = StateDelta { dcell: (0, 0), dt: 10.0, db: -20_000.0 };
        assert_eq!(x.apply(&down, 10_000.0).b, -10_050.0);
    }

    #[test]
    fn params_validation() {
        let mut r = table_rover();
        assert!(r.validate().is_ok());
        r.hibernate_power = 100.0;
        assert!(r.validate().is_err());
        let r = RoverParams { drive_velocity: 0.0, ..table_rover() };
        assert!(r.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn integration_is_additive(t0 in 0.0f64..20_000.0, d1 in 1.0f64..9_000.0, d2 in 1.0f64..9_000.0, load in 0.0f64..300.0) {
            let r = table_rover();
            let (stack, _) = setup(&[0.0, 500.0, 1367.0, 0.0, 800.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 3600.0);
            let c = Cell::new(2, 2);
            let a = integrate_energy(&r, &stack, c, t0, d1, load).unwrap();
            let b = integrate_energy(&r, &stack, c, t0 + d1, d2, load).unwrap();
            let ab = integrate_energy(&r, &stack, c, t0, d1 + d2, load).unwrap();
            proptest::prop_assert!((a + b - ab).abs() < 1e-9);
        }
    }
}
