//! Seeded batch runs: configuration, worker pool, and the command runners
//! behind the CLI. Every output records the config echo and its hash.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::brownian::{simulate_planar_bm, ExcursionReport, ExcursionSchedule, PlanarConfig, StopRule};
use crate::error::{ensure, Error, Result};
use crate::green::{clamp_probability, green_function, mean_bound, moment_bound, tail_bound, BoundEnv, SlitDomain};
use crate::occupation::{spectrum_from_masses, sup_statistic, thick_point_mass, OccupationProfile, SpectrumEstimate};
use crate::rng::replication_seed;
use crate::stable_sim::{simulate_until_exit, SimConfig, DEFAULT_MAX_STEPS};
use crate::walk::{max_local_time_at, run_walk, ScalingReport, DEFAULT_SITE_CAP};

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Parameters shared by all commands. `out` and `threads` affect where and how
/// fast results are produced, not what they are, so they are not serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub reps: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub threads: usize,
    pub dt: Option<f64>,
    pub barrier: f64,
    pub max_steps: Option<usize>,
    pub eps: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    /// Overrides keyed by check name prefix, e.g. `agreement` or `ks`.
    pub tolerances: BTreeMap<String, f64>,
    /// Command-specific parameters (`x0`, `r1`, `grid`, ...).
    pub params: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            reps: None,
            out: None,
            threads: 0,
            dt: None,
            barrier: 1.0,
            max_steps: None,
            eps: None,
            a: None,
            tolerances: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse {key} = {value:?}")))
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected key = value", n + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl ExperimentConfig {
    /// Applies one setting. Later calls win, so file values go first and
    /// command-line flags after.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "reps" => self.reps = Some(parse(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "threads" => self.threads = parse(key, value)?,
            "dt" => {
                let dt: f64 = parse(key, value)?;
                ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
                self.dt = Some(dt);
            }
            "barrier" => {
                let b: f64 = parse(key, value)?;
                ensure(b > 0.0 && b.is_finite(), || format!("barrier must be positive, got {b}"))?;
                self.barrier = b;
            }
            "max_steps" => self.max_steps = Some(parse(key, value)?),
            "eps" => self.eps = Some(parse_list(key, value)?),
            "a" => self.a = Some(parse_list(key, value)?),
            _ => {
                if let Some(name) = key.strip_prefix("tol.") {
                    self.tolerances.insert(name.to_string(), parse(key, value)?);
                } else {
                    self.params.insert(key.to_string(), value.to_string());
                }
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_config_text(&fs::read_to_string(path)?)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn reps_or(&self, default: usize) -> usize {
        self.reps.unwrap_or(default)
    }

    pub fn dt_or(&self, default: f64) -> f64 {
        self.dt.unwrap_or(default)
    }

    pub fn max_steps_or(&self, default: usize) -> usize {
        self.max_steps.unwrap_or(default)
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn param<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.params.get(key).map(|v| parse(key, v)).transpose()
    }

    pub fn param_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.param(key)?.unwrap_or(default))
    }

    pub fn param_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.params.get(key) {
            Some(v) => parse_list(key, v),
            None => Ok(default.to_vec()),
        }
    }

    /// SHA-256 of the serialized config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }
}

/// Runs `f(index, seed)` for `reps` replications on a pool of `threads`
/// workers (0 = one per core). Results come back in index order.
pub fn run_replications<T, F>(threads: usize, base_seed: u64, reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| (0..reps).into_par_iter().map(|i| f(i, replication_seed(base_seed, i as u64))).collect())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub file: String,
    pub dt: f64,
    pub barrier: f64,
    pub steps: usize,
    pub exit_time: Option<f64>,
    pub killed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub runs: Vec<RunRecord>,
}

/// Killed Cauchy paths, one CSV per replication plus `manifest.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Manifest> {
    let dir = cfg.out_dir()?;
    let dt = cfg.dt_or(crate::stable_sim::DEFAULT_TIME_STEP);
    let max_steps = cfg.max_steps_or(DEFAULT_MAX_STEPS);
    let x0: f64 = cfg.param_or("x0", 0.0)?;
    let runs = run_replications(cfg.threads, cfg.seed, cfg.reps_or(1), |i, seed| {
        let sim = SimConfig::new(dt, cfg.barrier, max_steps, seed)?;
        let path = simulate_until_exit(&sim, x0)?;
        let file = format!("path_{i:05}.csv");
        let mut w = create(&dir.join(&file))?;
        path.write_csv(&mut w)?;
        w.flush()?;
        Ok(RunRecord {
            index: i,
            seed,
            file,
            dt,
            barrier: cfg.barrier,
            steps: path.len() - 1,
            exit_time: path.exit_time(),
            killed: path.killed,
        })
    })?;
    let manifest = Manifest { command: "simulate".into(), config: cfg.clone(), config_hash: cfg.hash(), runs };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Interior grid `x_j = -r + (2j + 1) r / n`, `j = 0..n`.
pub fn green_grid_points(n: usize, radius: f64) -> Vec<f64> {
    (0..n).map(|j| -radius + (2 * j + 1) as f64 * radius / n as f64).collect()
}

/// CSV `x0,x,G` over the `n x n` grid; the diagonal is `inf`.
pub fn write_green_grid<W: Write>(n: usize, radius: f64, mut w: W) -> Result<()> {
    let d = SlitDomain::new(radius)?;
    let pts = green_grid_points(n, radius);
    writeln!(w, "x0,x,G")?;
    for &x0 in &pts {
        for &x in &pts {
            let g = if x == x0 { f64::INFINITY } else { green_function(x0, x, &d)? };
            writeln!(w, "{:.16e},{:.16e},{:.16e}", x0, x, g)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: u32,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub bound: f64,
    pub clamped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsTable {
    pub r1: f64,
    pub r3: f64,
    pub c: f64,
    pub mean_bound: f64,
    pub moments: Vec<MomentRow>,
    pub tail: Vec<TailRow>,
}

/// Moment bounds for `k = 1..=k_max` and tail bounds at `t in ts`.
pub fn bounds_table(r1: f64, r3: f64, c: f64, k_max: u32, ts: &[f64]) -> Result<BoundsTable> {
    let env = BoundEnv::new(r1, r3, c)?;
    let moments = (1..=k_max).map(|k| MomentRow { k, bound: moment_bound(&env, k) }).collect();
    let tail = ts
        .iter()
        .map(|&t| {
            let b = tail_bound(t, &env)?;
            Ok(TailRow { t, bound: b, clamped: clamp_probability(b) })
        })
        .collect::<Result<_>>()?;
    Ok(BoundsTable { r1, r3, c, mean_bound: mean_bound(&env), moments, tail })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupSummary {
    pub eps: f64,
    pub values: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub spectra: Vec<SpectrumEstimate>,
    pub sup: SupSummary,
    /// Whether thick-point mass is nonincreasing in `a` on every profile.
    pub mass_monotone_in_a: bool,
}

pub const SPECTRUM_DT: f64 = 1e-5;
pub const SPECTRUM_EPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const SPECTRUM_A: [f64; 3] = [0.1, 0.2, 0.3];

/// Profiles of `reps` paths from 0, their coarse spectra and sup statistics.
pub fn spectrum_run(cfg: &ExperimentConfig, base_seed: u64, default_reps: usize) -> Result<SpectrumSummary> {
    let dt = cfg.dt_or(SPECTRUM_DT);
    let eps = cfg.eps.clone().unwrap_or_else(|| SPECTRUM_EPS.to_vec());
    let mut a_list = cfg.a.clone().unwrap_or_else(|| SPECTRUM_A.to_vec());
    a_list.sort_by(f64::total_cmp);
    let sup_eps: f64 = cfg.param_or("sup_eps", eps[eps.len() / 2])?;
    let max_steps = cfg.max_steps_or(DEFAULT_MAX_STEPS);
    let reps = cfg.reps_or(default_reps);
    ensure(reps >= 1, || "spectrum needs at least one replication".into())?;
    let per_path = run_replications(cfg.threads, base_seed, reps, |_, seed| {
        let sim = SimConfig::new(dt, cfg.barrier, max_steps, seed)?;
        let path = simulate_until_exit(&sim, 0.0)?;
        let profile = OccupationProfile::build(&path, &eps)?;
        let sup = sup_statistic(&profile, sup_eps)?;
        let mut monotone = true;
        for &e in &eps {
            let masses = a_list.iter().map(|&a| thick_point_mass(&profile, a, e)).collect::<Result<Vec<_>>>()?;
            monotone &= masses.windows(2).all(|w| w[1] <= w[0]);
        }
        let masses = a_list
            .iter()
            .map(|&a| eps.iter().map(|&e| thick_point_mass(&profile, a, e)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok((seed, sup, monotone, masses))
    })?;
    let mut spectra = Vec::new();
    for (j, &a) in a_list.iter().enumerate() {
        let mut mean = vec![0.0; eps.len()];
        for (_, _, _, m) in &per_path {
            mean.iter_mut().zip(&m[j]).for_each(|(s, v)| *s += v);
        }
        mean.iter_mut().for_each(|s| *s /= reps as f64);
        spectra.push(spectrum_from_masses(a, &eps, &mean, reps)?);
    }
    let values: Vec<f64> = per_path.iter().map(|p| p.1).collect();
    let sup = SupSummary {
        eps: sup_eps,
        mean: values.iter().sum::<f64>() / values.len() as f64,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        values,
        reference: 2.0 / std::f64::consts::PI,
    };
    Ok(SpectrumSummary {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        seeds: per_path.iter().map(|p| p.0).collect(),
        spectra,
        sup,
        mass_monotone_in_a: per_path.iter().all(|p| p.2),
    })
}

/// `spectrum_a<a>.csv` per `a`, `sup.csv` and `spectrum.json`.
pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<SpectrumSummary> {
    let dir = cfg.out_dir()?;
    let summary = spectrum_run(cfg, cfg.seed, 200)?;
    for s in &summary.spectra {
        let mut w = create(&dir.join(format!("spectrum_a{}.csv", s.a)))?;
        s.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut w = create(&dir.join("sup.csv"))?;
    writeln!(w, "seed,sup")?;
    for (seed, v) in summary.seeds.iter().zip(&summary.sup.values) {
        writeln!(w, "{seed},{v:.16e}")?;
    }
    w.flush()?;
    write_json(&dir.join("spectrum.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSummary {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub scales: Vec<f64>,
    /// Whether `dt <= (eps_k / 10)^2` at the finest scale.
    pub resolved: bool,
    pub rows: Vec<ExcursionReport>,
}

/// One planar path from the origin per center; centers equispaced on the axis
/// in `[-span, span]`. Counts `N_k^x(1/2)` and `N_k^x(2)` for `k = 2..=k_max`.
pub fn cmd_excursions(cfg: &ExperimentConfig) -> Result<ExcursionSummary> {
    let dir = cfg.out_dir()?;
    let a = cfg.a.as_ref().and_then(|v| v.first().copied()).unwrap_or(0.2);
    let epsilon1: f64 = cfg.param_or("epsilon1", 0.25)?;
    let k_max: usize = cfg.param_or("k_max", 2)?;
    let span: f64 = cfg.param_or("span", 0.25)?;
    let dt = cfg.dt_or(1e-5);
    let max_steps = cfg.max_steps_or(50_000_000);
    let reps = cfg.reps_or(4);
    let template = ExcursionSchedule::new(a, epsilon1, k_max)?;
    let finest = template.scale(k_max);
    let per = run_replications(cfg.threads, cfg.seed, reps, |i, seed| {
        let x = if reps == 1 { 0.0 } else { -span + 2.0 * span * i as f64 / (reps - 1) as f64 };
        let center = [x, 0.0];
        let pc = PlanarConfig::new(dt, max_steps, seed);
        let path = simulate_planar_bm(&pc, [0.0, 0.0], StopRule::ExitDisk { center, radius: crate::brownian::RHO_OUTER })?;
        let mut s = template.clone();
        s.record_path(&path, center)?;
        Ok((seed, s.centers.pop().expect("one center recorded")))
    })?;
    let mut schedule = template.clone();
    let seeds = per.iter().map(|p| p.0).collect();
    schedule.centers = per.into_iter().map(|p| p.1).collect();
    let summary = ExcursionSummary {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        seeds,
        scales: schedule.scales(),
        resolved: dt <= (finest / 10.0).powi(2),
        rows: schedule.report(k_max),
    };
    write_json(&dir.join("excursions.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub reports: Vec<ScalingReport>,
    /// `T_n/(log n)^2` averaged over seeds, per `n`.
    pub mean_ratios: Vec<f64>,
}

/// `T_n` at each checkpoint along one walk per seed.
pub fn walk_scaling(cfg: &ExperimentConfig, base_seed: u64, ns: &[usize], reps: usize) -> Result<(Vec<ScalingReport>, Vec<f64>)> {
    ensure(!ns.is_empty() && ns.windows(2).all(|w| w[0] < w[1]), || "checkpoints must be increasing".into())?;
    ensure(reps >= 1, || "need at least one walk".into())?;
    let n_max = *ns.last().unwrap();
    let cap: usize = cfg.param_or("site_cap", DEFAULT_SITE_CAP)?;
    let dump = cfg.param_or("trajectory", false)?;
    let dir = if dump { Some(cfg.out_dir()?) } else { None };
    let per = run_replications(cfg.threads, base_seed, reps, |i, seed| {
        let walk = run_walk(n_max, seed, cap)?;
        if let Some(dir) = &dir {
            let mut w = create(&dir.join(format!("walk_{i:05}.csv")))?;
            writeln!(w, "step,position")?;
            for (j, x) in walk.positions.iter().enumerate() {
                writeln!(w, "{j},{x}")?;
            }
            w.flush()?;
        }
        let ts = max_local_time_at(&walk, ns)?;
        Ok(ns.iter().zip(ts).map(|(&n, t)| ScalingReport::new(n, t, seed)).collect::<Vec<_>>())
    })?;
    let mean = (0..ns.len())
        .map(|j| per.iter().map(|r| r[j].ratio).sum::<f64>() / reps as f64)
        .collect();
    Ok((per.into_iter().flatten().collect(), mean))
}

pub const WALK_CHECKPOINTS: [usize; 3] = [10_000, 100_000, 1_000_000];

/// Scaling reports written to `walk.json`; `trajectory = true` also dumps
/// `walk_XXXXX.csv` per seed.
pub fn cmd_walk(cfg: &ExperimentConfig) -> Result<WalkSummary> {
    let dir = cfg.out_dir()?;
    let ns: Vec<usize> = match cfg.params.get("n") {
        Some(v) => v.split(',').map(|s| parse("n", s)).collect::<Result<_>>()?,
        None => WALK_CHECKPOINTS.to_vec(),
    };
    let (reports, mean_ratios) = walk_scaling(cfg, cfg.seed, &ns, cfg.reps_or(20))?;
    let summary = WalkSummary { config: cfg.clone(), config_hash: cfg.hash(), reports, mean_ratios };
    write_json(&dir.join("walk.json"), &summary)?;
    Ok(summary)
}
