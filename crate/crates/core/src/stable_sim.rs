//! Killed Cauchy paths sampled on a uniform time grid.
//!
//! Increments over a step of length `dt` are exact Cauchy(`dt`) draws, so the
//! grid values have the law of the process at the grid times. Exit from
//! `(-barrier, barrier)` is detected at the first grid point outside it.

use std::io::Write;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::{open01, rng_from_seed};

pub const DEFAULT_TIME_STEP: f64 = 1e-4;
pub const DEFAULT_MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub time_step: f64,
    pub barrier: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { time_step: DEFAULT_TIME_STEP, barrier: 1.0, max_steps: DEFAULT_MAX_STEPS, seed: 0 }
    }
}

impl SimConfig {
    pub fn new(time_step: f64, barrier: f64, max_steps: usize, seed: u64) -> Result<Self> {
        let cfg = Self { time_step, barrier, max_steps, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.time_step > 0.0 && self.time_step.is_finite(), || {
            format!("time_step must be positive, got {}", self.time_step)
        })?;
        ensure(self.barrier > 0.0 && self.barrier.is_finite(), || {
            format!("barrier must be positive, got {}", self.barrier)
        })?;
        ensure(self.max_steps >= 1, || "max_steps must be at least 1".into())
    }
}

/// A sampled Cauchy trajectory, possibly killed on leaving `(-barrier, barrier)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyPath {
    pub time_step: f64,
    pub barrier: f64,
    pub positions: Vec<f64>,
    pub killed: bool,
    /// Index of the first position with `|x| >= barrier`.
    pub exit_index: Option<usize>,
}

impl CauchyPath {
    /// Builds a path from raw positions, locating the exit index.
    pub fn from_positions(time_step: f64, barrier: f64, positions: Vec<f64>) -> Result<Self> {
        ensure(time_step > 0.0, || "time_step must be positive".into())?;
        ensure(!positions.is_empty(), || "path must be nonempty".into())?;
        let exit_index = positions.iter().position(|x| x.abs() >= barrier);
        let positions = match exit_index {
            Some(k) => positions[..=k].to_vec(),
            None => positions,
        };
        Ok(Self { time_step, barrier, positions, killed: exit_index.is_some(), exit_index })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.positions.len()).map(move |i| i as f64 * self.time_step)
    }

    /// Exit time `exit_index * time_step`, if killed.
    pub fn exit_time(&self) -> Option<f64> {
        self.exit_index.map(|k| k as f64 * self.time_step)
    }

    /// Number of leading positions that carry occupation time: all positions
    /// strictly before the exit, or the whole path when unkilled.
    pub fn occupied_len(&self) -> usize {
        self.exit_index.unwrap_or(self.positions.len())
    }

    /// Positions that carry occupation time.
    pub fn occupied(&self) -> &[f64] {
        &self.positions[..self.occupied_len()]
    }

    /// Writes the path as CSV with header `t,x`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x")?;
        for (t, x) in self.times().zip(&self.positions) {
            writeln!(w, "{:.16e},{:.16e}", t, x)?;
        }
        Ok(())
    }
}

/// Symmetric Cauchy quantile at probability `u`.
#[inline]
pub fn cauchy_quantile(u: f64, scale: f64) -> f64 {
    scale * (std::f64::consts::PI * (u - 0.5)).tan()
}

/// Symmetric Cauchy distribution function.
pub fn cauchy_cdf(x: f64, scale: f64) -> f64 {
    0.5 + (x / scale).atan() / std::f64::consts::PI
}

/// One Cauchy(`scale`) draw from a single uniform via the quantile transform.
pub fn sample_cauchy_increment<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("Cauchy scale must be positive, got {scale}")));
    }
    Ok(cauchy_quantile(open01(rng), scale))
}

fn check_start(config: &SimConfig, start: f64) -> Result<()> {
    config.validate()?;
    if !(start.abs() < config.barrier) {
        return Err(Error::InvalidArgument(format!(
            "start {start} lies outside (-{b}, {b})",
            b = config.barrier
        )));
    }
    Ok(())
}

/// Simulates from `start` until the first grid point with `|x| >= barrier`,
/// or until `max_steps` increments have been taken (then `killed` is false).
pub fn simulate_until_exit(config: &SimConfig, start: f64) -> Result<CauchyPath> {
    check_start(config, start)?;
    let mut rng = rng_from_seed(config.seed);
    Ok(simulate_with_rng(config, start, &mut rng))
}

/// As [`simulate_until_exit`] with a caller-provided stream. Preconditions are
/// not rechecked.
pub fn simulate_with_rng<R: RngCore + ?Sized>(config: &SimConfig, start: f64, rng: &mut R) -> CauchyPath {
    let dt = config.time_step;
    let r = config.barrier;
    let mut positions = Vec::with_capacity(1024.min(config.max_steps + 1));
    positions.push(start);
    let mut x = start;
    let mut exit_index = None;
    for i in 1..=config.max_steps {
        x += cauchy_quantile(open01(rng), dt);
        positions.push(x);
        if x.abs() >= r {
            exit_index = Some(i);
            break;
        }
    }
    CauchyPath { time_step: dt, barrier: r, positions, killed: exit_index.is_some(), exit_index }
}

/// Simulates a coupled pair `(fine, coarse)`: the fine path uses step
/// `time_step / 2`, and each coarse increment is the sum of two consecutive
/// fine increments, hence exactly Cauchy(`time_step`). Simulation continues
/// until the coarse path exits or takes `max_steps` coarse steps.
pub fn simulate_refinement_pair(config: &SimConfig, start: f64) -> Result<(CauchyPath, CauchyPath)> {
    check_start(config, start)?;
    let mut rng = rng_from_seed(config.seed);
    let r = config.barrier;
    let half = 0.5 * config.time_step;
    let mut fine = vec![start];
    let mut coarse = vec![start];
    let mut fine_exit = None;
    let mut coarse_exit = None;
    let mut x = start;
    for i in 1..=config.max_steps {
        for _ in 0..2 {
            x += cauchy_quantile(open01(&mut rng), half);
            if fine_exit.is_none() {
                fine.push(x);
                if x.abs() >= r {
                    fine_exit = Some(fine.len() - 1);
                }
            }
        }
        coarse.push(x);
        if x.abs() >= r {
            coarse_exit = Some(i);
            break;
        }
    }
    let fine = CauchyPath { time_step: half, barrier: r, positions: fine, killed: fine_exit.is_some(), exit_index: fine_exit };
    let coarse = CauchyPath {
        time_step: config.time_step,
        barrier: r,
        positions: coarse,
        killed: coarse_exit.is_some(),
        exit_index: coarse_exit,
    };
    Ok((fine, coarse))
}

/// Left-Riemann occupation time of the open interval `(center - radius, center + radius)`.
pub fn occupation_measure(path: &CauchyPath, center: f64, radius: f64) -> Result<f64> {
    ensure(radius > 0.0, || format!("radius must be positive, got {radius}"))?;
    ensure(!path.is_empty(), || "path must be nonempty".into())?;
    let hits = path.occupied().iter().filter(|x| (*x - center).abs() < radius).count();
    Ok(hits as f64 * path.time_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_median_and_quartile() {
        assert_eq!(cauchy_quantile(0.5, 3.0), 0.0);
        assert!((cauchy_quantile(0.75, 2.5) - 2.5).abs() < 1e-15 * 2.5);
        assert!((cauchy_quantile(0.25, 2.5) + 2.5).abs() < 1e-15 * 2.5);
    }

    #[test]
    fn nonpositive_scale_rejected() {
        let mut rng = rng_from_seed(0);
        assert!(matches!(sample_cauchy_increment(0.0, &mut rng), Err(Error::InvalidArgument(_))));
        assert!(sample_cauchy_increment(-1.0, &mut rng).is_err());
    }

    #[test]
    fn start_outside_rejected() {
        let cfg = SimConfig::new(1e-3, 1.0, 100, 1).unwrap();
        assert!(matches!(simulate_until_exit(&cfg, 2.0), Err(Error::InvalidArgument(_))));
        assert!(simulate_until_exit(&cfg, 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0, 10, 0).is_err());
        assert!(SimConfig::new(1e-3, -1.0, 10, 0).is_err());
        assert!(SimConfig::new(1e-3, 1.0, 0, 0).is_err());
    }

    #[test]
    fn unkilled_path_is_flagged() {
        let cfg = SimConfig::new(1e-9, 1.0, 5, 7).unwrap();
        let p = simulate_until_exit(&cfg, 0.0).unwrap();
        assert!(!p.killed);
        assert_eq!(p.exit_index, None);
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn constant_path_occupation() {
        let p = CauchyPath::from_positions(0.25, 1.0, vec![0.0; 8]).unwrap();
        assert_eq!(occupation_measure(&p, 0.0, 1.0).unwrap(), 2.0);
        assert_eq!(occupation_measure(&p, 10.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn hand_path_occupation() {
        let p = CauchyPath::from_positions(1.0, 1.0, vec![0.0, 0.5, -0.2]).unwrap();
        assert_eq!(occupation_measure(&p, 0.0, 0.3).unwrap(), 2.0);
        assert!(occupation_measure(&p, 0.0, 0.0).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = CauchyPath::from_positions(0.5, 1.0, vec![0.0, 0.25, 1.5]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "t,x");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "5.0000000000000000e-1,2.5000000000000000e-1");
    }

    #[test]
    fn refinement_pair_is_coupled() {
        let cfg = SimConfig::new(1e-3, 1.0, 1_000_000, 11).unwrap();
        let (fine, coarse) = simulate_refinement_pair(&cfg, 0.0).unwrap();
        assert!(coarse.killed && fine.killed);
        // coarse grid points are a subset of the fine grid points
        for (i, x) in coarse.positions.iter().enumerate() {
            if 2 * i < fine.len() {
                assert_eq!(*x, fine.positions[2 * i]);
            }
        }
        assert!(fine.exit_time().unwrap() <= coarse.exit_time().unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn killed_paths_stay_inside_before_exit(seed in any::<u64>(), start in -0.99f64..0.99) {
            let cfg = SimConfig::new(1e-3, 1.0, 200_000, seed).unwrap();
            let p = simulate_until_exit(&cfg, start).unwrap();
            prop_assert_eq!(p.positions[0], start);
            prop_assert!(p.len() <= cfg.max_steps + 1);
            if let Some(k) = p.exit_index {
                prop_assert!(p.killed);
                prop_assert!(p.positions[..k].iter().all(|x| x.abs() < 1.0));
                prop_assert!(p.positions[k].abs() >= 1.0);
                let total = occupation_measure(&p, 0.0, 1.0).unwrap();
                prop_assert_eq!(total, k as f64 * cfg.time_step);
            }
        }

        #[test]
        fn reproducible_for_fixed_seed(seed in any::<u64>()) {
            let cfg = SimConfig::new(1e-3, 1.0, 100_000, seed).unwrap();
            prop_assert_eq!(simulate_until_exit(&cfg, 0.1).unwrap(), simulate_until_exit(&cfg, 0.1).unwrap());
        }

        #[test]
        fn occupation_additive_and_monotone(seed in any::<u64>(), c in -0.9f64..0.9, r in 0.001f64..0.5) {
            let cfg = SimConfig::new(1e-3, 1.0, 100_000, seed).unwrap();
            let p = simulate_until_exit(&cfg, 0.0).unwrap();
            let whole = occupation_measure(&p, c, r).unwrap();
            let bigger = occupation_measure(&p, c, 1.5 * r).unwrap();
            prop_assert!(whole <= bigger);
            // (c - 3r, c - r) and (c - r, c + r) are disjoint open intervals
            let left = occupation_measure(&p, c - 2.0 * r, r).unwrap();
            let hits_union = p.occupied().iter()
                .filter(|x| (*x - (c - 2.0 * r)).abs() < r || (*x - c).abs() < r)
                .count() as f64 * cfg.time_step;
            prop_assert!((left + whole - hits_union).abs() <= 1e-12 * hits_union.max(1.0));
        }

        #[test]
        fn scaling_by_power_of_two_is_exact(seed in any::<u64>(), k in -3i32..4, start in -0.9f64..0.9) {
            let c = 2f64.powi(k);
            let base = SimConfig::new(1e-3, 1.0, 100_000, seed).unwrap();
            let scaled = SimConfig::new(c * 1e-3, c, 100_000, seed).unwrap();
            let p = simulate_until_exit(&base, start).unwrap();
            let q = simulate_until_exit(&scaled, c * start).unwrap();
            prop_assert_eq!(p.exit_index, q.exit_index);
            let rescaled: Vec<f64> = q.positions.iter().map(|x| x / c).collect();
            prop_assert_eq!(rescaled, p.positions.clone());
            let t: Vec<f64> = q.times().map(|t| t / c).collect();
            prop_assert_eq!(t, p.times().collect::<Vec<_>>());
        }
    }
}
