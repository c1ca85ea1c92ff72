//! Integer-valued discrete analogues: the walk with steps `P(X = n) = C/(1+n^2)`
//! and the horizontal position of a planar simple random walk read off at the
//! successive zero-visits of its vertical coordinate.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::rng_from_seed;

/// Steps with `|n| <= STEP_CUTOFF` come from a tabulated CDF; larger ones
/// from the inverse of the tail sum.
pub const STEP_CUTOFF: i64 = 1_000_000;

/// Default cap on the number of distinct sites a walk may visit.
pub const DEFAULT_SITE_CAP: usize = 50_000_000;

/// `sum_{n >= m} 1/(1+n^2)` by the midpoint-integral approximation
/// `atan(1/(m - 1/2))`, accurate to `O(m^-3)/12`.
pub fn tail_sum(m: i64) -> f64 {
    (1.0 / (m as f64 - 0.5)).atan()
}

struct StepTable {
    c: f64,
    /// Mass beyond the cutoff on each side.
    side_tail: f64,
    /// `cdf[i] = P(X <= i - STEP_CUTOFF)`.
    cdf: Vec<f64>,
}

fn table() -> &'static StepTable {
    static TABLE: OnceLock<StepTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let c = normalizing_constant();
        let side_tail = c * tail_sum(STEP_CUTOFF + 1);
        let mut cdf = Vec::with_capacity(2 * STEP_CUTOFF as usize + 1);
        let mut acc = side_tail;
        for n in -STEP_CUTOFF..=STEP_CUTOFF {
            acc += c / (1.0 + (n * n) as f64);
            cdf.push(acc);
        }
        StepTable { c, side_tail, cdf }
    })
}

/// `C = 1 / sum_{n in Z} 1/(1+n^2)`; the exact value is `1 / (pi coth pi)`.
pub fn normalizing_constant() -> f64 {
    // smallest terms first
    let mut s = 0.0;
    for n in (1..=STEP_CUTOFF).rev() {
        s += 1.0 / (1.0 + (n * n) as f64);
    }
    1.0 / (1.0 + 2.0 * (s + tail_sum(STEP_CUTOFF + 1)))
}

/// One step of the Cauchy-tailed integer walk.
pub fn sample_step<R: RngCore + ?Sized>(rng: &mut R) -> i64 {
    let t = table();
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    if u < t.side_tail {
        -tail_index(u / t.c)
    } else if u >= 1.0 - t.side_tail {
        tail_index((1.0 - u) / t.c)
    } else {
        let i = t.cdf.partition_point(|p| *p <= u).min(t.cdf.len() - 1);
        i as i64 - STEP_CUTOFF
    }
}

/// Inverse of the tail sum: the `m > STEP_CUTOFF` with
/// `tail_sum(m + 1) < v <= tail_sum(m)`.
fn tail_index(v: f64) -> i64 {
    let m = (1.0 / v.max(f64::MIN_POSITIVE).tan() + 0.5).floor();
    (m.min(4.0e18) as i64).max(STEP_CUTOFF + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegerWalk {
    pub steps_taken: usize,
    /// `S_0 = 0, ..., S_n`.
    pub positions: Vec<i64>,
    /// Visit counts `L_n(x)`.
    pub local_times: HashMap<i64, u64>,
}

pub fn run_walk(n: usize, seed: u64, site_cap: usize) -> Result<IntegerWalk> {
    let mut rng = rng_from_seed(seed);
    run_walk_with(n, site_cap, || sample_step(&mut rng))
}

/// Walk driven by an arbitrary step source.
pub fn run_walk_with<F: FnMut() -> i64>(n: usize, site_cap: usize, mut step: F) -> Result<IntegerWalk> {
    ensure(site_cap >= 1, || "site cap must be at least 1".into())?;
    let mut positions = Vec::with_capacity(n + 1);
    let mut local_times = HashMap::new();
    let mut s = 0i64;
    positions.push(s);
    local_times.insert(s, 1u64);
    for _ in 0..n {
        s = s.wrapping_add(step());
        positions.push(s);
        *local_times.entry(s).or_insert(0) += 1;
        if local_times.len() > site_cap {
            return Err(Error::SiteCapExceeded { cap: site_cap });
        }
    }
    Ok(IntegerWalk { steps_taken: n, positions, local_times })
}

/// `T_n = max_x L_n(x)`.
pub fn max_local_time(walk: &IntegerWalk) -> u64 {
    walk.local_times.values().copied().max().unwrap_or(0)
}

/// `T_m` at each checkpoint `m <= steps_taken`, by replaying the walk.
pub fn max_local_time_at(walk: &IntegerWalk, checkpoints: &[usize]) -> Result<Vec<u64>> {
    ensure(checkpoints.windows(2).all(|w| w[0] <= w[1]), || "checkpoints must be sorted".into())?;
    ensure(checkpoints.last().is_none_or(|&m| m <= walk.steps_taken), || "checkpoint beyond the walk".into())?;
    let mut counts: HashMap<i64, u64> = HashMap::with_capacity(walk.positions.len());
    let mut best = 0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for (i, &x) in walk.positions.iter().enumerate() {
        let c = counts.entry(x).or_insert(0);
        *c += 1;
        best = best.max(*c);
        while next < checkpoints.len() && checkpoints[next] == i {
            out.push(best);
            next += 1;
        }
        if next == checkpoints.len() {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub n: usize,
    #[serde(rename = "T_n")]
    pub t_n: u64,
    #[serde(rename = "T_n/(log n)^2")]
    pub ratio: f64,
    pub seed: u64,
}

impl ScalingReport {
    pub fn new(n: usize, t_n: u64, seed: u64) -> Self {
        let l = (n as f64).ln();
        Self { n, t_n, ratio: t_n as f64 / (l * l), seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrwStep {
    Left,
    Right,
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrwEmbedding {
    /// `Y_k`: horizontal position at the k-th time `i >= 1` with `X2_i = 0`.
    pub values: Vec<i64>,
    /// Step budget ran out before the requested number of zero-visits.
    pub exhausted: bool,
    pub steps: u64,
}

pub fn embedded_srw_walk(n_zero_visits: usize, seed: u64, step_budget: u64) -> Result<SrwEmbedding> {
    let mut rng = rng_from_seed(seed);
    let mut bits = 0u64;
    let mut left = 0u32;
    embedded_srw_walk_with(n_zero_visits, step_budget, || {
        if left == 0 {
            bits = rng.next_u64();
            left = 32;
        }
        let s = match bits & 3 {
            0 => SrwStep::Left,
            1 => SrwStep::Right,
            2 => SrwStep::Up,
            _ => SrwStep::Down,
        };
        bits >>= 2;
        left -= 1;
        s
    })
}

/// Embedding driven by an arbitrary step source.
pub fn embedded_srw_walk_with<F: FnMut() -> SrwStep>(n_zero_visits: usize, step_budget: u64, mut step: F) -> Result<SrwEmbedding> {
    ensure(n_zero_visits >= 1, || "need at least one zero-visit".into())?;
    let (mut x1, mut x2) = (0i64, 0i64);
    let mut values = Vec::with_capacity(n_zero_visits.min(1 << 20));
    let mut steps = 0u64;
    while values.len() < n_zero_visits {
        if steps == step_budget {
            return Ok(SrwEmbedding { values, exhausted: true, steps });
        }
        match step() {
            SrwStep::Left => x1 -= 1,
            SrwStep::Right => x1 += 1,
            SrwStep::Up => x2 += 1,
            SrwStep::Down => x2 -= 1,
        }
        steps += 1;
        if x2 == 0 {
            values.push(x1);
        }
    }
    Ok(SrwEmbedding { values, exhausted: false, steps })
}
