//! Càdlàg real semimartingales of drift + Brownian + compound-Poisson type,
//! their brackets, stopping and random partitions.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::trajectory::{ScalarPath, Trajectory};

/// Law of the driver `z_t = z_0 + μt + σW_t + Σ_{s≤t} Δz_s`, with jumps
/// arriving at rate `jump_intensity` and sizes `N(jump_mean, jump_sd²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemimartingaleSpec {
    pub z0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub jump_intensity: f64,
    pub jump_mean: f64,
    pub jump_sd: f64,
    pub horizon: f64,
}

impl Default for SemimartingaleSpec {
    fn default() -> Self {
        Self {
            z0: 0.0,
            mu: 0.0,
            sigma: 1.0,
            jump_intensity: 0.0,
            jump_mean: 0.0,
            jump_sd: 1.0,
            horizon: 1.0,
        }
    }
}

impl SemimartingaleSpec {
    pub fn brownian(sigma: f64, horizon: f64) -> Self {
        Self {
            sigma,
            horizon,
            ..Self::default()
        }
    }

    pub fn drift(mu: f64, horizon: f64) -> Self {
        Self {
            mu,
            sigma: 0.0,
            horizon,
            ..Self::default()
        }
    }

    /// Checks the parameter constraints, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("z0", self.z0),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("jump_intensity", self.jump_intensity),
            ("jump_mean", self.jump_mean),
            ("jump_sd", self.jump_sd),
            ("horizon", self.horizon),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} must be finite")));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidInput(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if self.jump_intensity < 0.0 {
            return Err(Error::InvalidInput(format!(
                "jump_intensity must be nonnegative, got {}",
                self.jump_intensity
            )));
        }
        if self.jump_sd < 0.0 {
            return Err(Error::InvalidInput(format!(
                "jump_sd must be nonnegative, got {}",
                self.jump_sd
            )));
        }
        if self.horizon <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// One trajectory: the continuous part sampled on a grid (linear between
/// grid points) plus an explicit ledger of jumps, optionally stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    grid: Vec<f64>,
    continuous: Vec<f64>,
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
    /// `jump_cum[k] = Σ_{i<k} jump_sizes[i]`, length `jumps + 1`.
    jump_cum: Vec<f64>,
    stop: f64,
}

impl CadlagPath {
    /// Assembles a path from grid values of the continuous part and a jump
    /// ledger. Jump times must be distinct and lie in `(0, T]`.
    pub fn from_parts(
        grid: Vec<f64>,
        continuous: Vec<f64>,
        mut jumps: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if grid.len() < 2 || grid.len() != continuous.len() {
            return Err(Error::InvalidInput(
                "grid needs at least two points and one value per point".into(),
            ));
        }
        if grid[0] != 0.0 {
            return Err(Error::InvalidInput("grid must start at 0".into()));
        }
        if grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        {
            return Err(Error::InvalidInput(
                "grid must be strictly increasing".into(),
            ));
        }
        let horizon = *grid.last().unwrap();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        if jumps.iter().any(|&(s, _)| !(s > 0.0 && s <= horizon)) {
            return Err(Error::InvalidInput("jump times must lie in (0, T]".into()));
        }
        if jumps.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput("jump times must be distinct".into()));
        }
        let (jump_times, jump_sizes): (Vec<f64>, Vec<f64>) = jumps.into_iter().unzip();
        let mut jump_cum = Vec::with_capacity(jump_sizes.len() + 1);
        jump_cum.push(0.0);
        let mut acc = 0.0;
        for d in &jump_sizes {
            acc += d;
            jump_cum.push(acc);
        }
        Ok(Self {
            grid,
            continuous,
            jump_times,
            jump_sizes,
            jump_cum,
            stop: horizon,
        })
    }

    /// Continuous path `t ↦ f(t)` sampled on `m` uniform cells of `[0, T]`.
    pub fn from_fn(horizon: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = uniform_grid(horizon, m);
        let continuous = grid.iter().map(|&t| f(t)).collect();
        Self::from_parts(grid, continuous, Vec::new())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Time at which the path is frozen (`T` if never stopped).
    pub fn stop_time(&self) -> f64 {
        self.stop
    }

    pub fn initial(&self) -> f64 {
        self.continuous[0]
    }

    /// Jump ledger entries up to the stopping time.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let live = self.live_jumps();
        self.jump_times[..live]
            .iter()
            .copied()
            .zip(self.jump_sizes[..live].iter().copied())
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times[..self.live_jumps()]
    }

    fn live_jumps(&self) -> usize {
        self.jump_times.partition_point(|&s| s <= self.stop)
    }

    /// `Δz_t`, zero off the ledger.
    pub fn jump_at(&self, t: f64) -> f64 {
        if t > self.stop {
            return 0.0;
        }
        match self.jump_times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(k) => self.jump_sizes[k],
            Err(_) => 0.0,
        }
    }

    fn continuous_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon());
        let i = self.grid.partition_point(|&g| g <= t);
        // i ≥ 1 since grid[0] = 0 ≤ t
        let lo = i - 1;
        if self.grid[lo] == t || lo + 1 == self.grid.len() {
            return self.continuous[lo];
        }
        let (t0, t1) = (self.grid[lo], self.grid[lo + 1]);
        let w = (t - t0) / (t1 - t0);
        self.continuous[lo] + w * (self.continuous[lo + 1] - self.continuous[lo])
    }

    fn raw_value(&self, t: f64) -> f64 {
        self.continuous_at(t) + self.jump_cum[self.jump_times.partition_point(|&s| s <= t)]
    }

    fn raw_left_limit(&self, t: f64) -> f64 {
        self.continuous_at(t) + self.jump_cum[self.jump_times.partition_point(|&s| s < t)]
    }

    /// `Σ_{s ≤ t} (Δz_s)²`.
    pub fn jump_square_sum(&self, t: f64) -> f64 {
        self.jumps()
            .take_while(|&(s, _)| s <= t)
            .map(|(_, d)| d * d)
            .sum()
    }

    /// Realized variance `Σ (z_{t_{i+1}} - z_{t_i})²` over grid cells up to `t`.
    pub fn realized_variance(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for w in self.grid.windows(2).take_while(|w| w[1] <= t) {
            let d = self.value(w[1]) - self.value(w[0]);
            acc += d * d;
        }
        acc
    }

    /// Grid times merged with ledger jump times, sorted and deduplicated.
    pub fn event_times(&self) -> Vec<f64> {
        merge_sorted(&self.grid, self.jump_times())
    }

    /// Scalar trajectory of the path observed at `times`.
    pub fn observe(&self, times: &[f64]) -> Result<Trajectory> {
        Trajectory::from_fn(times, |t| self.value(t))
    }
}

impl ScalarPath for CadlagPath {
    fn value(&self, t: f64) -> f64 {
        self.raw_value(t.min(self.stop))
    }

    fn left_limit(&self, t: f64) -> f64 {
        if t > self.stop {
            self.raw_value(self.stop)
        } else if t <= 0.0 {
            self.continuous[0]
        } else {
            self.raw_left_limit(t)
        }
    }

    fn horizon(&self) -> f64 {
        CadlagPath::horizon(self)
    }

    /// Discretely monitored: the first grid or jump time at which
    /// `|z_t| ≥ level`.
    fn first_passage(&self, level: f64) -> Option<f64> {
        self.event_times()
            .into_iter()
            .find(|&t| t <= self.stop && self.value(t).abs() >= level)
    }
}

/// `t ↦ z_{t∧τ}`; jumps after `τ` are dropped.
pub fn stop_path(path: &CadlagPath, tau: f64) -> CadlagPath {
    let mut out = path.clone();
    out.stop = path.stop.min(tau.max(0.0));
    out
}

pub fn uniform_grid(horizon: f64, m: usize) -> Vec<f64> {
    (0..=m)
        .map(|i| {
            if i == m {
                horizon
            } else {
                horizon * i as f64 / m as f64
            }
        })
        .collect()
}

/// Simulates one path on `m` uniform cells with stream 0 of `seed`.
pub fn simulate(spec: &SemimartingaleSpec, m: usize, seed: u64) -> Result<CadlagPath> {
    simulate_replica(spec, m, seed, 0)
}

/// Simulates replica `index`; each replica reads its own ChaCha stream so
/// the result does not depend on scheduling.
pub fn simulate_replica(
    spec: &SemimartingaleSpec,
    m: usize,
    seed: u64,
    index: u64,
) -> Result<CadlagPath> {
    spec.validate()?;
    if m == 0 {
        return Err(Error::InvalidInput("grid needs at least one cell".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);

    let grid = uniform_grid(spec.horizon, m);
    let mut continuous = Vec::with_capacity(m + 1);
    continuous.push(spec.z0);
    let mut z = spec.z0;
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let mut dz = spec.mu * dt;
        if spec.sigma > 0.0 {
            let g: f64 = StandardNormal.sample(&mut rng);
            dz += spec.sigma * dt.sqrt() * g;
        }
        z += dz;
        continuous.push(z);
    }

    let mut jumps = Vec::new();
    let mean = spec.jump_intensity * spec.horizon;
    if mean > 0.0 {
        let count = Poisson::new(mean)
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .sample(&mut rng) as usize;
        let sizes = Normal::new(spec.jump_mean, spec.jump_sd)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut times: Vec<f64> = Vec::with_capacity(count);
        while times.len() < count {
            // uniform on (0, T], kept off grid points and previous jumps
            let s = spec.horizon * (1.0 - rng.random::<f64>());
            let on_grid = grid.binary_search_by(|g| g.total_cmp(&s)).is_ok();
            if !on_grid && !times.contains(&s) {
                times.push(s);
            }
        }
        for s in times {
            jumps.push((s, sizes.sample(&mut rng)));
        }
    }
    CadlagPath::from_parts(grid, continuous, jumps)
}

/// `count` replicas simulated in parallel, ordered by replica index.
pub fn simulate_ensemble(
    spec: &SemimartingaleSpec,
    m: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<CadlagPath>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_replica(spec, m, seed, i))
        .collect()
}

/// `[z, z]_t = σ²t + Σ_{s≤t} (Δz_s)²`, using the model-exact continuous
/// bracket and honouring the path's stopping time.
pub fn quadratic_variation(path: &CadlagPath, spec: &SemimartingaleSpec, t: f64) -> f64 {
    bracket_continuous(spec, t.min(path.stop_time())) + path.jump_square_sum(t)
}

/// `<z^c, z^c>_t = σ²t`.
pub fn bracket_continuous(spec: &SemimartingaleSpec, t: f64) -> f64 {
    spec.sigma * spec.sigma * t
}

/// Finite nondecreasing sequence of stopping times `0 = τ_0 ≤ … ≤ τ_{m+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPartition {
    times: Vec<f64>,
}

/// Partition families used by the integrators and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionKind {
    /// `τ_k = kT/2ⁿ`.
    Dyadic { level: u32 },
    /// Dyadic times merged with the path's jump times.
    JumpRefined { level: u32 },
    /// First passages of `|z|` through increasing levels, capped at `T`.
    Hitting { levels: Vec<f64> },
}

impl RandomPartition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::InvalidInput("partition must start at 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("partition times must be finite".into()));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(
                "partition times must be nondecreasing".into(),
            ));
        }
        Ok(Self { times })
    }

    pub fn dyadic(level: u32, horizon: f64) -> Self {
        let m = 1usize << level;
        Self {
            times: uniform_grid(horizon, m),
        }
    }

    /// Merges `extra` times into the partition.
    pub fn refine(&self, extra: &[f64]) -> Self {
        let mut sorted = extra.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            times: merge_sorted(&self.times, &sorted),
        }
    }

    pub fn jump_refined(&self, path: &CadlagPath) -> Self {
        self.refine(path.jump_times())
    }

    pub fn hitting(levels: &[f64], path: &CadlagPath) -> Result<Self> {
        if levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(
                "hitting levels must be nondecreasing".into(),
            ));
        }
        let horizon = path.horizon();
        let mut times = vec![0.0];
        times.extend(
            levels
                .iter()
                .map(|&l| path.first_passage(l).unwrap_or(horizon)),
        );
        times.push(horizon);
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn last(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn mesh(&self) -> f64 {
        self.times.windows(2).fold(0.0, |m, w| m.max(w[1] - w[0]))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.times.binary_search_by(|s| s.total_cmp(&t)).is_ok()
    }
}

pub fn make_partition(
    kind: &PartitionKind,
    horizon: f64,
    path: Option<&CadlagPath>,
) -> Result<RandomPartition> {
    let need_path =
        || path.ok_or_else(|| Error::InvalidInput("this partition kind needs a path".into()));
    match kind {
        PartitionKind::Dyadic { level } => Ok(RandomPartition::dyadic(*level, horizon)),
        PartitionKind::JumpRefined { level } => {
            Ok(RandomPartition::dyadic(*level, horizon).jump_refined(need_path()?))
        }
        PartitionKind::Hitting { levels } => RandomPartition::hitting(levels, need_path()?),
    }
}

/// Sorted union of two sorted slices without duplicates.
pub(crate) fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x <= y => {
                i += 1;
                if x == y {
                    j += 1;
                }
                x
            }
            (_, Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, None) => unreachable!(),
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}
