//! Slot-synchronous Monte Carlo simulation of saturated cooperative users.
//!
//! Every user always has a packet. While nobody holds the channel, each of
//! the `m` users transmits with probability `pr`; a lone transmitter wins
//! the channel. The holder then transmits in every slot and keeps the
//! channel until one of the other `m − 1` users (each still transmitting
//! with probability `pr`) interferes, which turns that slot into a
//! collision and returns the system to contention.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};
use thiserror::Error;

/// Number of batches used for the batch-means confidence interval.
pub const BATCHES: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("not supported: {0}")]
    NotSupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub m: u32,
    pub pr: f64,
    pub pt: f64,
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub replications: u32,
}

impl SimConfig {
    /// Single replication with `pt = 1` and the default warmup.
    pub fn new(m: u32, pr: f64, slots: u64, seed: u64) -> Self {
        Self {
            m,
            pr,
            pt: 1.0,
            slots,
            warmup: default_warmup(slots),
            seed,
            replications: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::ConfigInvalid(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        for (name, p) in [("pr", self.pr), ("pt", self.pt)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1] (got {p})"));
            }
        }
        if self.slots == 0 {
            return bad("slots must be positive".into());
        }
        if self.warmup >= self.slots {
            return bad(format!(
                "warmup ({}) must be smaller than slots ({})",
                self.warmup, self.slots
            ));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.pt != 1.0 {
            return Err(SimError::NotSupported(format!(
                "pt = {} (only the saturated model pt = 1 is simulated)",
                self.pt
            )));
        }
        Ok(())
    }

    /// Measured slots per replication.
    pub fn measured_slots(&self) -> u64 {
        self.slots - self.warmup
    }
}

/// 1% of the slot budget, at least 1000 slots; falls back to 10% when the
/// budget is too small for that.
pub fn default_warmup(slots: u64) -> u64 {
    let warmup = (slots / 100).max(1000);
    if warmup < slots {
        warmup
    } else {
        slots / 10
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index`: `mix64(base ^ mix64(index))`.
pub fn replication_seed(base: u64, index: u32) -> u64 {
    mix64(base ^ mix64(u64::from(index)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlotOutcome {
    Idle,
    Success(usize),
    Collision(usize),
}

impl SlotOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, SlotOutcome::Success(_))
    }
}

impl std::fmt::Display for SlotOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlotOutcome::Idle => write!(f, "idle"),
            SlotOutcome::Success(user) => write!(f, "success {user}"),
            SlotOutcome::Collision(count) => write!(f, "collision {count}"),
        }
    }
}

/// Channel state between slots. Non-holders are all backlogged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChannelState {
    pub holder: Option<usize>,
}

impl ChannelState {
    /// Users that draw this slot: all `m` in contention, the `m − 1`
    /// non-holders otherwise.
    pub fn contenders(&self, m: usize) -> usize {
        match self.holder {
            Some(_) => m - 1,
            None => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    m: usize,
    pr: f64,
}

impl Channel {
    pub fn new(m: usize, pr: f64) -> Self {
        assert!(m >= 1, "channel needs at least one user");
        Self { m, pr }
    }

    /// Advances one slot. `draws` holds one uniform `[0, 1)` sample per
    /// contender, in user order with the holder (if any) skipped.
    pub fn step(&self, state: ChannelState, draws: &[f64]) -> (ChannelState, SlotOutcome) {
        assert_eq!(
            draws.len(),
            state.contenders(self.m),
            "one draw per contender"
        );
        match state.holder {
            None => {
                let mut transmitters = 0;
                let mut first = 0;
                for (user, &u) in draws.iter().enumerate() {
                    if u < self.pr {
                        if transmitters == 0 {
                            first = user;
                        }
                        transmitters += 1;
                    }
                }
                match transmitters {
                    0 => (state, SlotOutcome::Idle),
                    1 => (
                        ChannelState {
                            holder: Some(first),
                        },
                        SlotOutcome::Success(first),
                    ),
                    n => (state, SlotOutcome::Collision(n)),
                }
            }
            Some(holder) => {
                let interferers = draws.iter().filter(|&&u| u < self.pr).count();
                if interferers == 0 {
                    (state, SlotOutcome::Success(holder))
                } else {
                    (
                        ChannelState::default(),
                        SlotOutcome::Collision(interferers + 1),
                    )
                }
            }
        }
    }
}

/// Drives a [`Channel`] from a seeded RNG.
struct SlotStream {
    channel: Channel,
    state: ChannelState,
    rng: ChaCha8Rng,
    draws: Vec<f64>,
}

impl SlotStream {
    fn new(config: &SimConfig, seed: u64) -> Self {
        let m = config.m as usize;
        Self {
            channel: Channel::new(m, config.pr),
            state: ChannelState::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws: Vec::with_capacity(m),
        }
    }

    fn next_slot(&mut self) -> (Option<usize>, SlotOutcome) {
        let n = self.state.contenders(self.channel.m);
        self.draws.clear();
        for _ in 0..n {
            self.draws.push(self.rng.random::<f64>());
        }
        let before = self.state.holder;
        let (next, outcome) = self.channel.step(self.state, &self.draws);
        self.state = next;
        (before, outcome)
    }
}

/// Empirical transition counts between the busy and non-busy chain states.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TransitionCounts {
    pub from_busy: u64,
    pub busy_to_busy: u64,
    pub from_other: u64,
    pub other_to_busy: u64,
}

impl TransitionCounts {
    fn merge(&mut self, other: &Self) {
        self.from_busy += other.from_busy;
        self.busy_to_busy += other.busy_to_busy;
        self.from_other += other.from_other;
        self.other_to_busy += other.other_to_busy;
    }

    /// Estimated busy → busy probability, `None` without busy slots.
    pub fn pc_hat(&self) -> Option<f64> {
        ratio(self.busy_to_busy, self.from_busy)
    }

    pub fn p0_hat(&self) -> Option<f64> {
        ratio(self.other_to_busy, self.from_other)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoldingRecord {
    pub user_id: usize,
    pub run_length: u64,
}

/// Estimates aggregated over all replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    pub measured_slots: u64,
    pub idle_slots: u64,
    pub success_slots: u64,
    pub collision_slots: u64,
    /// Fraction of measured slots that were successes (estimates π1).
    pub busy_fraction: f64,
    /// 95% batch-means half-width for `busy_fraction`.
    pub ci_halfwidth: f64,
    pub per_user_success: Vec<u64>,
    pub jain_index: f64,
    /// Mean completed holding length (estimates U); `None` when no holding
    /// completed inside the measurement window.
    pub mean_holding: Option<f64>,
    pub completed_holdings: u64,
    /// Holdings still open when the run ended.
    pub censored_holdings: u64,
    pub holding_histogram: BTreeMap<u64, u64>,
    pub transitions: TransitionCounts,
    /// Mean slots between consecutive channel acquisitions by the same user.
    pub mean_reacquisition_gap: Option<f64>,
    pub replication_busy_fractions: Vec<f64>,
    /// Sample variance of `replication_busy_fractions` (needs ≥ 2).
    pub between_replication_variance: Option<f64>,
}

impl SimStats {
    /// Jain fairness index over the per-user success counts.
    pub fn jain(counts: &[u64]) -> f64 {
        let sum: f64 = counts.iter().map(|&c| c as f64).sum();
        let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
        if sum_sq == 0.0 {
            // All-zero shares are equal shares.
            return 1.0;
        }
        sum * sum / (counts.len() as f64 * sum_sq)
    }

    /// Each user's fraction of the measured slots.
    pub fn per_user_share(&self) -> Vec<f64> {
        self.per_user_success
            .iter()
            .map(|&c| c as f64 / self.measured_slots as f64)
            .collect()
    }

    /// Chi-square goodness of fit of the completed holding lengths against
    /// `Geometric(1 − pc)` on `{1, 2, …}`.
    pub fn holding_fit(&self, pc: f64) -> Option<GeometricFit> {
        geometric_fit(&self.holding_histogram, pc)
    }
}

/// Per-replication accumulator.
struct RunAccumulator {
    warmup: u64,
    measured: u64,
    idle: u64,
    success: u64,
    collision: u64,
    per_user: Vec<u64>,
    batch_success: Vec<u64>,
    batch_len: u64,
    histogram: BTreeMap<u64, u64>,
    censored: u64,
    transitions: TransitionCounts,
    gap_sum: u64,
    gap_count: u64,
    last_acquired: Vec<Option<u64>>,
    open_run: Option<(u64, u64)>,
    prev_busy: Option<bool>,
}

impl RunAccumulator {
    fn new(config: &SimConfig) -> Self {
        let measured = config.measured_slots();
        let m = config.m as usize;
        Self {
            warmup: config.warmup,
            measured,
            idle: 0,
            success: 0,
            collision: 0,
            per_user: vec![0; m],
            batch_success: vec![0; BATCHES],
            batch_len: (measured / BATCHES as u64).max(1),
            histogram: BTreeMap::new(),
            censored: 0,
            transitions: TransitionCounts::default(),
            gap_sum: 0,
            gap_count: 0,
            last_acquired: vec![None; m],
            open_run: None,
            prev_busy: None,
        }
    }

    fn record(&mut self, slot: u64, holder_before: Option<usize>, outcome: SlotOutcome) {
        let measuring = slot >= self.warmup;
        let busy = outcome.is_success();

        // Holding runs: start on a contention win, end on interruption.
        match (holder_before, outcome) {
            (None, SlotOutcome::Success(user)) => {
                self.open_run = Some((slot, 1));
                if measuring {
                    if let Some(prev) = self.last_acquired[user] {
                        if prev >= self.warmup {
                            self.gap_sum += slot - prev;
                            self.gap_count += 1;
                        }
                    }
                }
                self.last_acquired[user] = Some(slot);
            }
            (Some(_), SlotOutcome::Success(_)) => {
                if let Some((_, len)) = self.open_run.as_mut() {
                    *len += 1;
                }
            }
            (Some(_), _) => {
                if let Some((start, len)) = self.open_run.take() {
                    if start >= self.warmup {
                        *self.histogram.entry(len).or_insert(0) += 1;
                    }
                }
            }
            (None, _) => {}
        }

        if measuring {
            if let Some(prev) = self.prev_busy {
                if prev {
                    self.transitions.from_busy += 1;
                    self.transitions.busy_to_busy += u64::from(busy);
                } else {
                    self.transitions.from_other += 1;
                    self.transitions.other_to_busy += u64::from(busy);
                }
            }
            match outcome {
                SlotOutcome::Idle => self.idle += 1,
                SlotOutcome::Collision(_) => self.collision += 1,
                SlotOutcome::Success(user) => {
                    self.success += 1;
                    self.per_user[user] += 1;
                    let batch = ((slot - self.warmup) / self.batch_len) as usize;
                    self.batch_success[batch.min(BATCHES - 1)] += 1;
                }
            }
        }
        self.prev_busy = Some(busy);
    }

    fn finish(mut self) -> RunSummary {
        if self.open_run.take().is_some() {
            self.censored += 1;
        }
        let batch_means = (0..BATCHES)
            .map(|b| {
                let len = if b == BATCHES - 1 {
                    self.measured - self.batch_len * (BATCHES as u64 - 1)
                } else {
                    self.batch_len
                };
                if len == 0 {
                    0.0
                } else {
                    self.batch_success[b] as f64 / len as f64
                }
            })
            .collect();
        RunSummary {
            measured: self.measured,
            idle: self.idle,
            success: self.success,
            collision: self.collision,
            per_user: self.per_user,
            batch_means,
            histogram: self.histogram,
            censored: self.censored,
            transitions: self.transitions,
            gap_sum: self.gap_sum,
            gap_count: self.gap_count,
        }
    }
}

struct RunSummary {
    measured: u64,
    idle: u64,
    success: u64,
    collision: u64,
    per_user: Vec<u64>,
    batch_means: Vec<f64>,
    histogram: BTreeMap<u64, u64>,
    censored: u64,
    transitions: TransitionCounts,
    gap_sum: u64,
    gap_count: u64,
}

fn run_replication(config: &SimConfig, index: u32) -> RunSummary {
    let mut stream = SlotStream::new(config, replication_seed(config.seed, index));
    let mut acc = RunAccumulator::new(config);
    for slot in 0..config.slots {
        let (holder_before, outcome) = stream.next_slot();
        acc.record(slot, holder_before, outcome);
    }
    acc.finish()
}

/// Runs every replication (concurrently) and merges them in index order.
pub fn run(config: &SimConfig) -> Result<SimStats, SimError> {
    config.validate()?;
    let runs: Vec<RunSummary> = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect();
    Ok(merge(config, runs))
}

fn merge(config: &SimConfig, runs: Vec<RunSummary>) -> SimStats {
    let m = config.m as usize;
    let mut measured = 0;
    let mut idle = 0;
    let mut success = 0;
    let mut collision = 0;
    let mut per_user = vec![0u64; m];
    let mut histogram = BTreeMap::new();
    let mut censored = 0;
    let mut transitions = TransitionCounts::default();
    let mut gap_sum = 0;
    let mut gap_count = 0;
    let mut batch_means = Vec::with_capacity(BATCHES * runs.len());
    let mut replication_busy_fractions = Vec::with_capacity(runs.len());

    for run in runs {
        measured += run.measured;
        idle += run.idle;
        success += run.success;
        collision += run.collision;
        for (total, c) in per_user.iter_mut().zip(&run.per_user) {
            *total += c;
        }
        for (len, count) in run.histogram {
            *histogram.entry(len).or_insert(0) += count;
        }
        censored += run.censored;
        transitions.merge(&run.transitions);
        gap_sum += run.gap_sum;
        gap_count += run.gap_count;
        batch_means.extend(run.batch_means);
        replication_busy_fractions.push(run.success as f64 / run.measured as f64);
    }

    let completed: u64 = histogram.values().sum();
    let holding_total: u64 = histogram.iter().map(|(len, count)| len * count).sum();
    let between_replication_variance = sample_variance(&replication_busy_fractions);

    SimStats {
        measured_slots: measured,
        idle_slots: idle,
        success_slots: success,
        collision_slots: collision,
        busy_fraction: success as f64 / measured as f64,
        ci_halfwidth: batch_means_halfwidth(&batch_means),
        jain_index: SimStats::jain(&per_user),
        per_user_success: per_user,
        mean_holding: ratio(holding_total, completed),
        completed_holdings: completed,
        censored_holdings: censored,
        holding_histogram: histogram,
        transitions,
        mean_reacquisition_gap: ratio(gap_sum, gap_count),
        replication_busy_fractions,
        between_replication_variance,
    }
}

fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some(xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

/// 95% Student-t half-width of the mean of the batch means.
pub fn batch_means_halfwidth(batch_means: &[f64]) -> f64 {
    let Some(var) = sample_variance(batch_means) else {
        return f64::INFINITY;
    };
    let n = batch_means.len() as f64;
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("dof >= 1")
        .inverse_cdf(0.975);
    t * (var / n).sqrt()
}

/// First `limit` slot outcomes of replication 0, warmup included.
pub fn trace(config: &SimConfig, limit: u64) -> Result<Vec<SlotOutcome>, SimError> {
    config.validate()?;
    if limit > config.slots {
        return Err(SimError::ConfigInvalid(format!(
            "trace limit {limit} exceeds slot budget {}",
            config.slots
        )));
    }
    let mut stream = SlotStream::new(config, replication_seed(config.seed, 0));
    Ok((0..limit).map(|_| stream.next_slot().1).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricFit {
    pub statistic: f64,
    pub dof: u64,
    /// 99% critical value of χ²(dof); zero when `dof == 0`.
    pub critical_99: f64,
}

impl GeometricFit {
    pub fn consistent(&self) -> bool {
        self.statistic <= self.critical_99
    }
}

/// Pearson χ² of run lengths against `P(L = k) = pc^(k−1)·(1 − pc)`.
///
/// Bins `1..K` are kept while their expected count is at least 5 and the
/// tail `L > K` is pooled (and folded into bin `K` if it is itself below
/// 5). No parameter is estimated, so `dof = bins − 1`. Returns `None` for
/// an empty histogram or `pc` outside `[0, 1)`.
pub fn geometric_fit(histogram: &BTreeMap<u64, u64>, pc: f64) -> Option<GeometricFit> {
    let n: u64 = histogram.values().sum();
    if n == 0 || !(0.0..1.0).contains(&pc) {
        return None;
    }
    let total = n as f64;
    // (observed, expected) per bin.
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut k = 1u64;
    let mut tail_mass = 1.0; // P(L >= k)
    loop {
        let p_k = tail_mass * (1.0 - pc);
        let next_tail = tail_mass * pc;
        if total * p_k < 5.0 || total * next_tail < 5.0 {
            break;
        }
        let observed = histogram.get(&k).copied().unwrap_or(0) as f64;
        bins.push((observed, total * p_k));
        tail_mass = next_tail;
        k += 1;
    }
    let observed_tail = histogram.range(k..).map(|(_, &c)| c).sum::<u64>() as f64;
    let expected_tail = total * tail_mass;
    match bins.last_mut() {
        Some(last) if expected_tail < 5.0 => {
            last.0 += observed_tail;
            last.1 += expected_tail;
        }
        _ => bins.push((observed_tail, expected_tail)),
    }
    let statistic = bins
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = bins.len() as u64 - 1;
    let critical_99 = if dof == 0 {
        0.0
    } else {
        ChiSquared::new(dof as f64)
            .expect("dof >= 1")
            .inverse_cdf(0.99)
    };
    Some(GeometricFit {
        statistic,
        dof,
        critical_99,
    })
}
