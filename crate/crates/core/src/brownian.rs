//! Planar Brownian motion, band estimates of the local time of `B2` at 0,
//! the time-changed process `B1(tau(t))`, projected intersection local time
//! and excursion counts between concentric circles.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::rng_from_seed;
use crate::stable_sim::CauchyPath;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarConfig {
    pub time_step: f64,
    pub max_steps: usize,
    pub seed: u64,
    /// Half-width of the band `|B2| <= delta`; defaults to `sqrt(time_step)`.
    pub band_halfwidth: Option<f64>,
}

impl PlanarConfig {
    pub fn new(time_step: f64, max_steps: usize, seed: u64) -> Self {
        Self { time_step, max_steps, seed, band_halfwidth: None }
    }

    pub fn with_band(mut self, delta: f64) -> Self {
        self.band_halfwidth = Some(delta);
        self
    }

    pub fn band(&self) -> f64 {
        self.band_halfwidth.unwrap_or_else(|| self.time_step.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// First grid time with `|B - center| >= radius`.
    ExitDisk { center: Point, radius: f64 },
    /// First grid time with `|B2| <= delta` and `|B1| >= barrier`.
    AxisExit { barrier: f64 },
    /// First grid time `i` with band local time `L_i >= level`, the discrete
    /// inverse local time `tau(level)`.
    LocalTime { level: f64 },
    /// Run exactly `max_steps` steps.
    Horizon,
}

impl StopRule {
    #[inline]
    fn reached(&self, p: Point, delta: f64) -> bool {
        match *self {
            StopRule::ExitDisk { center, radius } => dist(p, center) >= radius,
            StopRule::AxisExit { barrier } => p[1].abs() <= delta && p[0].abs() >= barrier,
            StopRule::LocalTime { .. } | StopRule::Horizon => false,
        }
    }
}

#[inline]
fn dist(p: Point, q: Point) -> f64 {
    let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
    (dx * dx + dy * dy).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPath {
    pub time_step: f64,
    pub positions: Vec<Point>,
    pub band_halfwidth: f64,
    /// Whether the stop rule was reached (always true for `Horizon`).
    pub stopped: bool,
}

impl PlanarPath {
    pub fn from_positions(time_step: f64, band_halfwidth: f64, positions: Vec<Point>) -> Result<Self> {
        ensure(time_step > 0.0, || "time_step must be positive".into())?;
        ensure(band_halfwidth > 0.0, || "band_halfwidth must be positive".into())?;
        ensure(!positions.is_empty(), || "path must be nonempty".into())?;
        Ok(Self { time_step, positions, band_halfwidth, stopped: true })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.time_step
    }

    /// Same path with a different local-time band.
    pub fn with_band_halfwidth(&self, delta: f64) -> Self {
        Self { band_halfwidth: delta, ..self.clone() }
    }

    #[inline]
    fn in_band(&self, i: usize) -> bool {
        self.positions[i][1].abs() <= self.band_halfwidth
    }

    /// CSV with header `t,x1,x2,L`.
    pub fn write_csv<W: Write>(&self, trace: &LocalTimeTrace, mut w: W) -> Result<()> {
        ensure(trace.values.len() == self.len(), || "trace is not aligned with the path".into())?;
        writeln!(w, "t,x1,x2,L")?;
        for (i, (p, l)) in self.positions.iter().zip(&trace.values).enumerate() {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", self.time(i), p[0], p[1], l)?;
        }
        Ok(())
    }
}

/// Simulates planar Brownian motion with independent `N(0, time_step)`
/// coordinate increments until `stop` is met or `max_steps` steps are taken.
pub fn simulate_planar_bm(config: &PlanarConfig, start: Point, stop: StopRule) -> Result<PlanarPath> {
    ensure(config.time_step > 0.0 && config.time_step.is_finite(), || {
        format!("time_step must be positive, got {}", config.time_step)
    })?;
    let delta = config.band();
    ensure(delta > 0.0, || format!("band half-width must be positive, got {delta}"))?;
    match stop {
        StopRule::ExitDisk { radius, .. } => ensure(radius > 0.0, || "disk radius must be positive".into())?,
        StopRule::AxisExit { barrier } => ensure(barrier > 0.0, || "barrier must be positive".into())?,
        StopRule::LocalTime { level } => ensure(level >= 0.0, || "local-time level must be nonnegative".into())?,
        StopRule::Horizon => {}
    }
    let mut rng = rng_from_seed(config.seed);
    let sd = config.time_step.sqrt();
    let mut positions = Vec::with_capacity(config.max_steps.min(1 << 16) + 1);
    positions.push(start);
    let mut p = start;
    let horizon = matches!(stop, StopRule::Horizon);
    // band visits strictly before the current index, as in `local_time_trace`
    let unit = config.time_step / (2.0 * delta);
    let mut visits = 0u64;
    let level_reached = |visits: u64| matches!(stop, StopRule::LocalTime { level } if unit * visits as f64 >= level);
    let mut stopped = horizon || stop.reached(p, delta) || level_reached(0);
    if horizon || !stopped {
        for _ in 0..config.max_steps {
            if p[1].abs() <= delta {
                visits += 1;
            }
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            p = [p[0] + sd * dx, p[1] + sd * dy];
            positions.push(p);
            if !horizon && (stop.reached(p, delta) || level_reached(visits)) {
                stopped = true;
                break;
            }
        }
    }
    Ok(PlanarPath { time_step: config.time_step, positions, band_halfwidth: delta, stopped })
}

/// Band-occupation estimate of the local time of `B2` at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeTrace {
    /// `L_i`, aligned with the path grid.
    pub values: Vec<f64>,
    /// Increment per band visit, `step / (2 delta)`.
    pub unit: f64,
}

impl LocalTimeTrace {
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }
}

/// `L_i = step / (2 delta) * #{j < i : |B2_j| <= delta}`, so `L_0 = 0`.
pub fn local_time_trace(path: &PlanarPath) -> LocalTimeTrace {
    let unit = path.time_step / (2.0 * path.band_halfwidth);
    let mut values = Vec::with_capacity(path.len());
    let mut count = 0u64;
    for i in 0..path.len() {
        values.push(unit * count as f64);
        if path.in_band(i) {
            count += 1;
        }
    }
    LocalTimeTrace { values, unit }
}

/// Relative disagreement allowed between band estimates at `delta` and `delta/2`.
pub const BAND_REFINEMENT_TOL: f64 = 0.10;

/// Accepts a band-based estimate only when the estimates at `delta` and
/// `delta / 2` agree to `tol`; returns the finer one.
pub fn refinement_check(coarse: f64, fine: f64, tol: f64) -> Result<f64> {
    let scale = coarse.abs().max(fine.abs());
    let relative = if scale == 0.0 { 0.0 } else { (coarse - fine).abs() / scale };
    if relative <= tol {
        Ok(fine)
    } else {
        Err(Error::Refinement { coarse, fine, relative })
    }
}

/// `B1` sampled at the inverse local time of each requested level.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSample {
    pub levels: Vec<f64>,
    /// `tau(level)`: first grid index with `L >= level`.
    pub indices: Vec<usize>,
    pub positions: Vec<f64>,
    /// Some requested level exceeded the final local time.
    pub truncated: bool,
}

impl EmbeddedSample {
    /// Reinterprets a uniform level grid starting at 0 as a killed Cauchy path.
    pub fn to_cauchy_path(&self, barrier: f64) -> Result<CauchyPath> {
        ensure(self.levels.len() >= 2, || "need at least two levels".into())?;
        ensure(self.levels[0] == 0.0, || "level grid must start at 0".into())?;
        let step = self.levels[1] - self.levels[0];
        let uniform = self
            .levels
            .iter()
            .enumerate()
            .all(|(j, l)| (l - j as f64 * step).abs() <= 1e-9 * step.max(l.abs()));
        ensure(uniform, || "level grid must be uniform".into())?;
        CauchyPath::from_positions(step, barrier, self.positions.clone())
    }
}

/// Levels `0, step, 2 step, ...` not exceeding `max_level`.
pub fn uniform_levels(step: f64, max_level: f64) -> Vec<f64> {
    let n = (max_level / step).floor() as usize;
    (0..=n).map(|j| j as f64 * step).collect()
}

pub fn embedded_cauchy(path: &PlanarPath, trace: &LocalTimeTrace, levels: &[f64]) -> Result<EmbeddedSample> {
    ensure(trace.values.len() == path.len(), || "trace is not aligned with the path".into())?;
    ensure(levels.windows(2).all(|w| w[0] < w[1]), || "levels must be increasing".into())?;
    let mut out = EmbeddedSample { levels: Vec::new(), indices: Vec::new(), positions: Vec::new(), truncated: false };
    for &t in levels {
        let i = trace.values.partition_point(|l| *l < t);
        if i == trace.values.len() {
            out.truncated = true;
            break;
        }
        out.levels.push(t);
        out.indices.push(i);
        out.positions.push(path.positions[i][0]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Disk { center: Point, radius: f64 },
    /// `{|x1| < halfwidth}`.
    Strip { halfwidth: f64 },
    Everything,
}

impl Region {
    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::Disk { center, radius } => dist(p, center) < radius,
            Region::Strip { halfwidth } => p[0].abs() < halfwidth,
            Region::Everything => true,
        }
    }
}

/// Local time accumulated while `B` is in `region`, over grid steps `i < upto`.
pub fn intersection_local_time(path: &PlanarPath, trace: &LocalTimeTrace, region: Region, upto: usize) -> Result<f64> {
    ensure(trace.values.len() == path.len(), || "trace is not aligned with the path".into())?;
    ensure(upto < path.len(), || format!("upto = {upto} exceeds the last index {}", path.len() - 1))?;
    let hits = (0..upto).filter(|&i| path.in_band(i) && region.contains(path.positions[i])).count();
    Ok(trace.unit * hits as f64)
}

/// Number of completed traversals from the circle of radius `eps_outer` to
/// the circle of radius `eps_inner` about `center`, before the path first
/// reaches distance `rho`. A path starting on or outside the outer circle
/// begins armed.
pub fn count_excursions(path: &PlanarPath, center: Point, eps_outer: f64, eps_inner: f64, rho: f64) -> Result<u64> {
    ensure(eps_inner > 0.0 && eps_inner < eps_outer && eps_outer < rho, || {
        format!("need 0 < eps_inner < eps_outer < rho, got {eps_inner}, {eps_outer}, {rho}")
    })?;
    let arm_at = eps_outer * (1.0 - 1e-12);
    let mut armed = false;
    let mut count = 0;
    for &p in &path.positions {
        let d = dist(p, center);
        if d >= rho {
            break;
        }
        if !armed && d >= arm_at {
            armed = true;
        }
        if armed && d <= eps_inner {
            count += 1;
            armed = false;
        }
    }
    Ok(count)
}

/// Scales `eps_k = eps_1 (k!)^-3`, targets `n_k = 3 a k^2 log k` and the
/// observed counts `N_k^x(1/2)`, `N_k^x(2)` per center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSchedule {
    pub a: f64,
    pub epsilon1: f64,
    pub k_max: usize,
    pub centers: Vec<CenterCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterCounts {
    pub center: Point,
    /// Indexed by `k`; entries 0 and 1 unused.
    pub at_half: Vec<Option<u64>>,
    pub at_two: Vec<Option<u64>>,
}

/// The two outer radii at which counts are compared.
pub const RHO_INNER: f64 = 0.5;
pub const RHO_OUTER: f64 = 2.0;

impl ExcursionSchedule {
    pub fn new(a: f64, epsilon1: f64, k_max: usize) -> Result<Self> {
        ensure(a > 0.0 && a < 2.0 / std::f64::consts::PI, || format!("a must lie in (0, 2/pi), got {a}"))?;
        ensure(epsilon1 > 0.0 && epsilon1 < RHO_INNER, || format!("epsilon1 must lie in (0, 1/2), got {epsilon1}"))?;
        ensure(k_max >= 1, || "k_max must be at least 1".into())?;
        Ok(Self { a, epsilon1, k_max, centers: Vec::new() })
    }

    /// `eps_k` for `k >= 1`.
    pub fn scale(&self, k: usize) -> f64 {
        let fact: f64 = (2..=k).map(|l| l as f64).product();
        self.epsilon1 / fact.powi(3)
    }

    pub fn scales(&self) -> Vec<f64> {
        (1..=self.k_max).map(|k| self.scale(k)).collect()
    }

    /// `n_k = 3 a k^2 log k`.
    pub fn target(&self, k: usize) -> f64 {
        3.0 * self.a * (k * k) as f64 * (k as f64).ln()
    }

    fn entry(&mut self, center: Point) -> &mut CenterCounts {
        let pos = match self.centers.iter().position(|c| c.center == center) {
            Some(p) => p,
            None => {
                self.centers.push(CenterCounts {
                    center,
                    at_half: vec![None; self.k_max + 1],
                    at_two: vec![None; self.k_max + 1],
                });
                self.centers.len() - 1
            }
        };
        &mut self.centers[pos]
    }

    pub fn record(&mut self, center: Point, k: usize, rho: f64, count: u64) -> Result<()> {
        ensure(k >= 2 && k <= self.k_max, || format!("k = {k} outside 2..={}", self.k_max))?;
        let e = self.entry(center);
        if rho == RHO_INNER {
            e.at_half[k] = Some(count);
        } else if rho == RHO_OUTER {
            e.at_two[k] = Some(count);
        } else {
            return Err(Error::InvalidArgument(format!("rho must be 1/2 or 2, got {rho}")));
        }
        Ok(())
    }

    /// Counts `N_k^x(rho)` on `path` for every `k` in `2..=k_max` and both radii.
    pub fn record_path(&mut self, path: &PlanarPath, center: Point) -> Result<()> {
        for k in 2..=self.k_max {
            let (outer, inner) = (self.scale(k - 1), self.scale(k));
            for rho in [RHO_INNER, RHO_OUTER] {
                let n = count_excursions(path, center, outer, inner, rho)?;
                self.record(center, k, rho, n)?;
            }
        }
        Ok(())
    }

    pub fn counts(&self, center: Point) -> Option<&CenterCounts> {
        self.centers.iter().find(|c| c.center == center)
    }

    /// Flat rows for JSON reports.
    pub fn report(&self, n: usize) -> Vec<ExcursionReport> {
        let mut rows = Vec::new();
        for c in &self.centers {
            let perfect = is_n_perfect(self, c.center, n).ok();
            for k in 2..=self.k_max {
                for (rho, v) in [(RHO_INNER, c.at_half[k]), (RHO_OUTER, c.at_two[k])] {
                    if let Some(count) = v {
                        rows.push(ExcursionReport { center: c.center, k, rho, count, target: self.target(k), perfect });
                    }
                }
            }
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionReport {
    pub center: Point,
    pub k: usize,
    pub rho: f64,
    pub count: u64,
    pub target: f64,
    pub perfect: Option<bool>,
}

/// `n_k - k <= N_k^x(1/2) <= N_k^x(2) <= n_k + k` for all `k = 2..=n`.
pub fn is_n_perfect(schedule: &ExcursionSchedule, x: Point, n: usize) -> Result<bool> {
    if n < 2 {
        return Ok(true);
    }
    if n > schedule.k_max {
        return Err(Error::IncompleteData(format!("n = {n} exceeds k_max = {}", schedule.k_max)));
    }
    let c = schedule
        .counts(x)
        .ok_or_else(|| Error::IncompleteData(format!("no counts recorded for center {x:?}")))?;
    for k in 2..=n {
        let (half, two) = match (c.at_half[k], c.at_two[k]) {
            (Some(h), Some(t)) => (h as f64, t as f64),
            _ => return Err(Error::IncompleteData(format!("missing counts at k = {k}"))),
        };
        let nk = schedule.target(k);
        let kf = k as f64;
        if !(nk - kf <= half && half <= two && two <= nk + kf) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(points: Vec<Point>, delta: f64) -> PlanarPath {
        PlanarPath::from_positions(1.0, delta, points).unwrap()
    }

    #[test]
    fn zero_steps_gives_start_only() {
        let cfg = PlanarConfig::new(1e-3, 0, 1);
        let p = simulate_planar_bm(&cfg, [0.3, -0.2], StopRule::Horizon).unwrap();
        assert_eq!(p.positions, vec![[0.3, -0.2]]);
    }

    #[test]
    fn local_time_stop_is_first_passage_of_trace() {
        let cfg = PlanarConfig::new(1e-4, 1_000_000, 5);
        let p = simulate_planar_bm(&cfg, [0.0, 0.0], StopRule::LocalTime { level: 0.05 }).unwrap();
        assert!(p.stopped);
        let t = local_time_trace(&p);
        let n = t.values.len();
        assert!(t.values[n - 1] >= 0.05);
        assert!(t.values[n - 2] < 0.05);
        let z = simulate_planar_bm(&cfg, [0.4, 0.0], StopRule::LocalTime { level: 0.0 }).unwrap();
        assert_eq!(z.positions.len(), 1);
    }

    #[test]
    fn stop_rules_respected() {
        let cfg = PlanarConfig::new(1e-4, 1_000_000, 2);
        let p = simulate_planar_bm(&cfg, [0.0, 0.0], StopRule::ExitDisk { center: [0.0, 0.0], radius: 0.3 }).unwrap();
        assert!(p.stopped);
        let last = *p.positions.last().unwrap();
        assert!(dist(last, [0.0, 0.0]) >= 0.3);
        assert!(p.positions[..p.len() - 1].iter().all(|q| dist(*q, [0.0, 0.0]) < 0.3));

        let q = simulate_planar_bm(&cfg, [0.0, 0.0], StopRule::AxisExit { barrier: 0.2 }).unwrap();
        let last = *q.positions.last().unwrap();
        assert!(q.stopped && last[1].abs() <= cfg.band() && last[0].abs() >= 0.2);

        let short = PlanarConfig::new(1e-6, 10, 2);
        let r = simulate_planar_bm(&short, [0.0, 0.0], StopRule::ExitDisk { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        assert!(!r.stopped);
        assert_eq!(r.len(), 11);
    }

    #[test]
    fn local_time_off_axis_is_zero() {
        let p = path(vec![[0.0, 5.0]; 10], 0.1);
        assert!(local_time_trace(&p).values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn local_time_on_axis_is_linear() {
        let mut p = path(vec![[0.0, 0.0]; 10], 0.1);
        p.time_step = 0.01;
        let t = local_time_trace(&p);
        for (i, v) in t.values.iter().enumerate() {
            assert!((v - 0.01 * i as f64 / 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn embedded_of_constant_zero_path() {
        let p = path(vec![[0.0, 0.0]; 50], 0.5);
        let t = local_time_trace(&p);
        let e = embedded_cauchy(&p, &t, &uniform_levels(1.0, 40.0)).unwrap();
        assert!(e.positions.iter().all(|x| *x == 0.0));
        assert!(e.indices.windows(2).all(|w| w[0] <= w[1]));
        let beyond = embedded_cauchy(&p, &t, &[1.0, 1e6]).unwrap();
        assert!(beyond.truncated);
        assert_eq!(beyond.positions.len(), 1);
    }

    #[test]
    fn intersection_local_time_basics() {
        let pts: Vec<Point> = (0..20).map(|i| [i as f64 * 0.1, 0.0]).collect();
        let p = path(pts, 0.5);
        let t = local_time_trace(&p);
        let far = Region::Disk { center: [0.0, 10.0], radius: 1.0 };
        assert_eq!(intersection_local_time(&p, &t, far, 19).unwrap(), 0.0);
        assert_eq!(intersection_local_time(&p, &t, Region::Everything, 19).unwrap(), t.values[19]);
        assert!(intersection_local_time(&p, &t, Region::Everything, 20).is_err());
    }

    #[test]
    fn excursions_hand_traced() {
        let c = [0.0, 0.0];
        // out (0.2) -> in (0.04) -> out (0.15) -> in (0.01) -> out
        let pts: Vec<Point> = [0.2, 0.07, 0.04, 0.08, 0.15, 0.06, 0.01, 0.3].iter().map(|r| [*r, 0.0]).collect();
        let p = path(pts, 0.1);
        assert_eq!(count_excursions(&p, c, 0.1, 0.05, 1.0).unwrap(), 2);
        // stopping at rho = 0.18 removes everything after the first point
        assert_eq!(count_excursions(&p, c, 0.1, 0.05, 0.18).unwrap(), 0);
        let never: Vec<Point> = vec![[0.5, 0.5]; 5];
        assert_eq!(count_excursions(&path(never, 0.1), c, 0.1, 0.05, 2.0).unwrap(), 0);
        assert!(count_excursions(&p, c, 0.05, 0.1, 1.0).is_err());
    }

    #[test]
    fn schedule_scales_and_targets() {
        let s = ExcursionSchedule::new(0.5, 0.125, 5).unwrap();
        assert_eq!(s.scale(1), 0.125);
        assert!((s.scale(3) - 0.125 / 216.0).abs() < 1e-18);
        assert!(s.scales().windows(2).all(|w| w[0] > w[1]));
        assert!((2..5).all(|k| s.target(k) <= s.target(k + 1)));
        assert!((s.target(2) - 6.0 * 2f64.ln()).abs() < 1e-14);
        assert!(ExcursionSchedule::new(0.7, 0.125, 3).is_err());
    }

    #[test]
    fn perfection_checks() {
        let mut s = ExcursionSchedule::new(0.5, 0.125, 4).unwrap();
        let x = [0.15, 0.0];
        assert!(is_n_perfect(&s, x, 1).unwrap());
        assert!(matches!(is_n_perfect(&s, x, 3), Err(Error::IncompleteData(_))));
        for k in 2..=4 {
            let n = s.target(k).round() as u64;
            s.record(x, k, RHO_INNER, n).unwrap();
            s.record(x, k, RHO_OUTER, n).unwrap();
        }
        assert!(is_n_perfect(&s, x, 4).unwrap());
        let bad = (s.target(3) + 3.0 + 1.0).ceil() as u64;
        s.record(x, 3, RHO_OUTER, bad).unwrap();
        assert!(!is_n_perfect(&s, x, 4).unwrap());
        assert!(is_n_perfect(&s, x, 2).unwrap());
        assert!(is_n_perfect(&s, x, 5).is_err());
    }

    #[test]
    fn refinement_gate() {
        assert_eq!(refinement_check(1.0, 1.05, 0.1).unwrap(), 1.05);
        assert!(matches!(refinement_check(1.0, 1.3, 0.1), Err(Error::Refinement { .. })));
    }

    #[test]
    fn embedded_path_conversion() {
        let p = path((0..30).map(|i| [i as f64 * 0.1, 0.0]).collect(), 0.5);
        let t = local_time_trace(&p);
        let e = embedded_cauchy(&p, &t, &uniform_levels(1.0, 20.0)).unwrap();
        let c = e.to_cauchy_path(1.0).unwrap();
        assert!(c.killed);
        assert_eq!(c.time_step, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn trace_and_counts_are_monotone(seed in any::<u64>()) {
            let cfg = PlanarConfig::new(1e-4, 200_000, seed);
            let p = simulate_planar_bm(&cfg, [0.1, 0.0], StopRule::ExitDisk { center: [0.0, 0.0], radius: 2.0 }).unwrap();
            let t = local_time_trace(&p);
            prop_assert_eq!(t.values[0], 0.0);
            for w in t.values.windows(2) {
                let inc = w[1] - w[0];
                prop_assert!(inc >= 0.0 && inc <= t.unit * (1.0 + 1e-12));
            }
            let c = [0.0, 0.0];
            let small = count_excursions(&p, c, 0.1, 0.05, 0.5).unwrap();
            let large = count_excursions(&p, c, 0.1, 0.05, 1.5).unwrap();
            prop_assert!(small <= large);
            let upto = p.len() - 1;
            let a = intersection_local_time(&p, &t, Region::Disk { center: [0.0, 0.0], radius: 0.3 }, upto).unwrap();
            let b = intersection_local_time(&p, &t, Region::Disk { center: [0.0, 0.0], radius: 0.6 }, upto).unwrap();
            prop_assert!(a <= b);
            let l = intersection_local_time(&p, &t, Region::Strip { halfwidth: 0.0 }, upto).unwrap();
            prop_assert_eq!(l, 0.0);
        }
    }
}
