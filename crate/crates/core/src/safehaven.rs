//! Safe havens: per-cell minimum-energy arrival curves and the safe-set
//! membership test.
//!
//! A haven's curve is anchored at its boundary condition (energy `b̄` at time
//! `t̄`) and stepped backwards over a fixed lattice assuming the rover
//! hibernates from arrival onwards. Between lattice points the requirement is
//! evaluated exactly by integrating back from the next later lattice point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{GridMap, IrradianceStack, TerrainProducts};
use crate::location::Cell;
use crate::num::Real;
use crate::rover::{HybridState, RoverParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeHavenSpec<T> {
    pub cell: Cell,
    /// t̄: epoch seconds by which the energy condition must hold.
    pub time_limit: T,
    /// b̄: Wh required at `time_limit`.
    pub min_energy_at_limit: T,
}

/// ζ(t) for one haven. Infinite entries mark arrival times from which the
/// boundary condition cannot be met.
#[derive(Debug, Clone, PartialEq)]
pub struct MinEnergySeries<T> {
    pub cell: Cell,
    pub timestamps: Vec<T>,
    pub zeta: Vec<T>,
    pub time_limit: T,
    floor: T,
    capacity: T,
    /// `(segment_start, net hibernation power W)` over `[timestamps[0], time_limit]`.
    net_power: Vec<(T, T)>,
}

impl<T: Real> MinEnergySeries<T> {
    /// Net hibernation energy (Wh) gained over `[a, b]`.
    pub fn net_between(&self, a: T, b: T) -> T {
        let mut acc = T::zero();
        let start = self.net_power.partition_point(|(s, _)| *s <= a).max(1) - 1;
        for (k, (s, p)) in self.net_power.iter().enumerate().skip(start) {
            if *s >= b {
                break;
            }
            let end = self.net_power.get(k + 1).map_or(b, |(n, _)| n.min(b));
            let lo = s.max(a);
            if end > lo {
                acc += *p * (end - lo);
            }
        }
        acc.hours()
    }

    /// Least energy at `a` that hibernation brings to at least `later` by
    /// `b`, inverting each hold segment so saturation inside the interval is
    /// honoured, then floored.
    fn step_back(&self, later: T, a: T, b: T) -> T {
        if later.is_infinite() {
            return T::infinity();
        }
        let mut need = later;
        let first = self.net_power.partition_point(|(s, _)| *s <= a).max(1) - 1;
        let last = self.net_power.partition_point(|(s, _)| *s < b);
        for k in (first..last).rev() {
            let (s, p) = self.net_power[k];
            let end = self.net_power.get(k + 1).map_or(b, |(n, _)| n.min(b));
            let lo = s.max(a);
            if end <= lo {
                continue;
            }
            if need > self.capacity {
                return T::infinity();
            }
            need -= (p * (end - lo)).hours();
        }
        let need = need.max(self.floor);
        if need > self.capacity {
            T::infinity()
        } else {
            need
        }
    }

    /// Minimum energy on arrival at `t`; infinite past the time limit or
    /// before the first lattice point.
    pub fn zeta_at(&self, t: T) -> T {
        if t > self.time_limit || t < self.timestamps[0] {
            return T::infinity();
        }
        let k = self.timestamps.partition_point(|s| *s < t);
        let tk = self.timestamps[k];
        if tk == t {
            self.zeta[k]
        } else {
            self.step_back(self.zeta[k], t, tk)
        }
    }

    pub fn floor(&self) -> T {
        self.floor
    }
}

/// Backward construction of ζ on the lattice `t̄, t̄ - step, ...` down to
/// `earliest` (which is always included as the first point).
pub fn build_zeta<T: Real>(
    spec: &SafeHavenSpec<T>,
    rover: &RoverParams<T>,
    stack: &IrradianceStack<T>,
    step: T,
    earliest: T,
    floor: T,
) -> Result<MinEnergySeries<T>> {
    if !(step > T::zero()) {
        return Err(Error::invalid("zeta lattice step must be positive"));
    }
    if !(spec.min_energy_at_limit > T::zero() && spec.min_energy_at_limit <= rover.battery_capacity) {
        return Err(Error::invalid("haven energy requirement must lie in (0, capacity]"));
    }
    if earliest > spec.time_limit {
        return Err(Error::invalid("haven time limit precedes the operational window"));
    }
    let gain = rover.panel_gain();
    let net_power = stack
        .segments(spec.cell, earliest, spec.time_limit)?
        .into_iter()
        .map(|(s, irr)| (s, irr * gain - rover.hibernate_power))
        .collect();

    let mut series = MinEnergySeries {
        cell: spec.cell,
        timestamps: vec![spec.time_limit],
        zeta: vec![spec.min_energy_at_limit.max(floor)],
        time_limit: spec.time_limit,
        floor,
        capacity: rover.battery_capacity,
        net_power,
    };
    let mut k = 1usize;
    loop {
        let later_t = *series.timestamps.last().unwrap();
        if later_t <= earliest {
            break;
        }
        let t = (spec.time_limit - step * T::lit(k as f64)).max(earliest);
        let z = series.step_back(*series.zeta.last().unwrap(), t, later_t);
        series.timestamps.push(t);
        series.zeta.push(z);
        k += 1;
    }
    series.timestamps.reverse();
    series.zeta.reverse();
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HavenSelector {
    /// Every traversable cell outside permanent shadow.
    PsrComplement,
    /// Traversable cells whose mean irradiance over the window reaches the
    /// configured threshold.
    MeanIrradianceThreshold,
}

/// Traversable haven candidates.
pub fn select_havens<T: Real>(
    terrain: &TerrainProducts<T>,
    mean_irradiance: &GridMap<T>,
    selector: HavenSelector,
    threshold: T,
) -> Vec<Cell> {
    terrain
        .elevation
        .cells()
        .filter(|c| terrain.is_traversable(*c))
        .filter(|c| match selector {
            HavenSelector::PsrComplement => !terrain.is_psr(*c),
            HavenSelector::MeanIrradianceThreshold => mean_irradiance.get(*c) >= threshold,
        })
        .collect()
}

/// ζ curves indexed by grid position.
#[derive(Debug, Clone)]
pub struct SafeSet<T> {
    n_cols: usize,
    series: Vec<Option<MinEnergySeries<T>>>,
}

impl<T: Real> SafeSet<T> {
    pub fn build(
        geometry: &GridMap<T>,
        specs: &[SafeHavenSpec<T>],
        rover: &RoverParams<T>,
        stack: &IrradianceStack<T>,
        step: T,
        earliest: T,
        floor: T,
    ) -> Result<Self> {
        let built: Vec<MinEnergySeries<T>> = specs
            .par_iter()
            .map(|s| build_zeta(s, rover, stack, step, earliest, floor))
            .collect::<Result<_>>()?;
        let mut series = vec![None; geometry.values.len()];
        for s in built {
            let i = geometry.index(s.cell);
            series[i] = Some(s);
        }
        Ok(SafeSet {
            n_cols: geometry.n_cols,
            series,
        })
    }

    pub fn series(&self, cell: Cell) -> Option<&MinEnergySeries<T>> {
        self.series
            .get(cell.row * self.n_cols + cell.col)
            .and_then(|s| s.as_ref())
    }

    pub fn havens(&self) -> impl Iterator<Item = &MinEnergySeries<T>> {
        self.series.iter().flatten()
    }

    pub fn zeta_at(&self, cell: Cell, t: T) -> T {
        self.series(cell).map_or(T::infinity(), |s| s.zeta_at(t))
    }

    pub fn is_safe(&self, x: &HybridState<T>) -> bool {
        self.zeta_at(x.cell, x.t) <= x.b
    }
}

/// Free-function form of [`SafeSet::is_safe`].
pub fn is_safe<T: Real>(x: &HybridState<T>, safe_set: &SafeSet<T>) -> bool {
    safe_set.is_safe(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rover::tests::table_rover;
    use approx::assert_abs_diff_eq;

    const H: f64 = 3600.0;

    fn stack(levels: &[f64]) -> IrradianceStack<f64> {
        let ts = (0..levels.len()).map(|k| k as f64 * H).collect();
        let frames = levels
            .iter()
            .map(|l| GridMap::new(1, 1, 240.0, (0.0, 0.0), -9999.0, vec![*l]).unwrap())
            .collect();
        IrradianceStack::new(ts, frames).unwrap()
    }

    fn spec(t: f64, b: f64) -> SafeHavenSpec<f64> {
        SafeHavenSpec { cell: Cell::new(0, 0), time_limit: t, min_energy_at_limit: b }
    }

    #[test]
    fn dark_backward_step() {
        let s = stack(&[0.0; 300]);
        let z = build_zeta(&spec(299.0 * H, 1000.0), &table_rover(), &s, H, 0.0, 500.0).unwrap();
        assert_eq!(*z.zeta.last().unwrap(), 1000.0);
        assert_abs_diff_eq!(z.zeta_at(298.0 * H), 1040.0, epsilon = 1e-9);
        assert_abs_diff_eq!(z.zeta_at(298.5 * H), 1020.0, epsilon = 1e-9);
        assert!(z.zeta_at(299.0 * H + 1.0).is_infinite());
    }

    #[test]
    fn dark_haven_becomes_unreachable() {
        let s = stack(&[0.0; 300]);
        let tbar = 299.0 * H;
        let z = build_zeta(&spec(tbar, 1000.0), &table_rover(), &s, H, 0.0, 500.0).unwrap();
        assert_abs_diff_eq!(z.zeta_at(tbar - 225.0 * H), 10_000.0, epsilon = 1e-6);
        assert!(z.zeta_at(tbar - 226.0 * H).is_infinite());
        assert!(z.zeta_at(tbar - 225.0 * H - 1.0).is_infinite());
        assert!(z.zeta_at(0.0).is_infinite());
    }

    #[test]
    fn surplus_is_non_increasing_backwards_and_floored() {
        let s = stack(&[1000.0; 30]);
        let z = build_zeta(&spec(29.0 * H, 2000.0), &table_rover(), &s, H, 0.0, 500.0).unwrap();
        for w in z.zeta.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert_eq!(z.zeta[0], 500.0);
        assert!(z.zeta.iter().all(|v| *v >= 500.0));
    }

    #[test]
    fn off_lattice_earliest_point() {
        let s = stack(&[0.0; 10]);
        let z = build_zeta(&spec(9.0 * H, 1000.0), &table_rover(), &s, H, 0.5 * H, 500.0).unwrap();
        assert_eq!(z.timestamps[0], 0.5 * H);
        assert_eq!(z.timestamps[1], 1.0 * H);
        assert_abs_diff_eq!(z.zeta[0], 1000.0 + 40.0 * 8.5, epsilon = 1e-9);
    }

    #[test]
    fn membership() {
        let s = stack(&[0.0; 10]);
        let geom = s.geometry().clone();
        let set = SafeSet::build(&geom, &[spec(9.0 * H, 1000.0)], &table_rover(), &s, H, 0.0, 500.0).unwrap();
        let c = Cell::new(0, 0);
        let z = set.zeta_at(c, 8.0 * H);
        assert!(set.is_safe(&HybridState::new(c, 8.0 * H, z)));
        assert!(!set.is_safe(&HybridState::new(c, 8.0 * H, z - 1e-9)));
        assert!(!set.is_safe(&HybridState::new(c, 9.0 * H + 1.0, 1e9)));
        let empty = SafeSet::build(&geom, &[], &table_rover(), &s, H, 0.0, 500.0).unwrap();
        assert!(!is_safe(&HybridState::new(c, 0.0, 1e9), &empty));
    }

    #[test]
    fn forward_hibernation_meets_boundary() {
        let levels: Vec<f64> = (0..48).map(|k| if (k / 6) % 2 == 0 { 0.0 } else { 300.0 }).collect();
        let s = stack(&levels);
        let r = table_rover();
        let tbar = 47.0 * H;
        let z = build_zeta(&spec(tbar, 3000.0), &r, &s, 1800.0, 0.0, 500.0).unwrap();
        for (i, (t, zeta)) in z.timestamps.iter().zip(&z.zeta).enumerate() {
            if zeta.is_infinite() {
                continue;
            }
            let mut b = *zeta;
            for w in z.timestamps[i..].windows(2) {
                let sun = s.integral(Cell::new(0, 0), w[0], w[1]).unwrap() * r.panel_gain();
                b = (b + (sun - r.hibernate_power * (w[1] - w[0])) / 3600.0).min(r.battery_capacity);
            }
            assert!(b >= 3000.0 - 1e-9, "from t={t}: {b}");
        }
    }

    #[test]
    fn saturation_inside_a_step_is_inverted_exactly() {
        // 4 h of strong sun then 6 h dark: the battery fills, then drains.
        let mut levels = vec![5000.0; 4];
        levels.extend([0.0; 7]);
        let s = stack(&levels);
        let r = table_rover();
        let z = build_zeta(&spec(10.0 * H, 9_900.0), &r, &s, 10.0 * H, 0.0, 500.0).unwrap();
        // 6 h dark at 40 W from a full 10 kWh battery leaves 9760 Wh.
        assert!(z.zeta[0].is_infinite());
        let z = build_zeta(&spec(10.0 * H, 9_700.0), &r, &s, 10.0 * H, 0.0, 500.0).unwrap();
        assert_abs_diff_eq!(z.zeta[0], 9_940.0 - 4.0 * 2210.0, epsilon = 1e-9);
    }
}
