//! Trial-by-trial simulation of the ARQ protocols.
//!
//! Each trial delivers one codeword and counts the slots spent. Outcomes of
//! every transmission are drawn afresh: either as Bernoulli events with
//! fixed outage probabilities, or by sampling Rayleigh power gains and
//! comparing the resulting SNR with `2^rate - 1`. The sampled path never
//! evaluates a closed-form outage probability, so it checks the channel
//! formulas as well as the protocol analysis.
//!
//! Randomness is keyed by `(seed, trial_index)`: trial `i` runs its own
//! xoshiro256++ generator whose state is expanded from a key that is a
//! bijection of `i` for a fixed seed. Per-chunk statistics are integer sums,
//! so the report does not depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, GoodputResult, Mode};
use crate::channel::{self, sample_link_gain, ChannelParams, Outage, OutageSet};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_SLOTS: u64 = 10_000;

const CHUNK: u64 = 1024;

/// Where per-transmission outcomes come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OutageSource {
    /// Draw fading gains for every transmission.
    SampledFading,
    /// Bernoulli outages with the given probabilities. `path2` is the AF
    /// relay path or the DF source-relay link; `rd` is used by DF only.
    FixedEps { sd: f64, path2: f64, rd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub mode: Mode,
    pub params: ChannelParams,
    pub rate: f64,
    pub trials: u64,
    pub seed: u64,
    pub max_slots_per_codeword: u64,
    pub outage_source: OutageSource,
}

impl SimConfig {
    pub fn new(mode: Mode, params: ChannelParams, rate: f64, trials: u64, seed: u64) -> Self {
        SimConfig {
            mode,
            params,
            rate,
            trials,
            seed,
            max_slots_per_codeword: DEFAULT_MAX_SLOTS,
            outage_source: OutageSource::SampledFading,
        }
    }

    pub fn with_fixed_eps(mut self, sd: f64, path2: f64, rd: f64) -> Self {
        self.outage_source = OutageSource::FixedEps { sd, path2, rd };
        self
    }

    pub fn with_max_slots(mut self, cap: u64) -> Self {
        self.max_slots_per_codeword = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.max_slots_per_codeword < 2 {
            return Err(Error::Config("max_slots_per_codeword must be at least 2".into()));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::Config(format!("rate must be positive, got {}", self.rate)));
        }
        if let OutageSource::FixedEps { .. } = self.outage_source {
            let set = self.outage_set()?;
            if self.analytic_from(&set).goodput <= 0.0 {
                return Err(Error::Config(
                    "outage probabilities leave no path to successful delivery".into(),
                ));
            }
        }
        Ok(())
    }

    /// Outage probabilities this configuration simulates.
    pub fn outage_set(&self) -> Result<OutageSet> {
        match self.outage_source {
            OutageSource::SampledFading => analytic::outages(self.mode, &self.params, self.rate),
            OutageSource::FixedEps { sd, path2, rd } => {
                let sd = closed_probability("sd", sd)?;
                let path2 = closed_probability("path2", path2)?;
                let rd = closed_probability("rd", rd)?;
                Ok(OutageSet {
                    sd,
                    path2,
                    rd: (self.mode == Mode::Df).then_some(rd),
                })
            }
        }
    }

    /// Closed-form expected slots and goodput for this configuration.
    pub fn analytic(&self) -> Result<GoodputResult> {
        Ok(self.analytic_from(&self.outage_set()?))
    }

    fn analytic_from(&self, set: &OutageSet) -> GoodputResult {
        match self.mode {
            Mode::Single => {
                let q = set.sd.success();
                GoodputResult {
                    mode: Mode::Single,
                    rate: self.rate,
                    expected_time: 1.0 / q,
                    goodput: self.rate * q,
                }
            }
            Mode::Af => analytic::goodput_af_from_outages(self.rate, set),
            Mode::Df => analytic::goodput_df_from_outages(self.rate, set),
        }
    }
}

fn closed_probability(name: &str, p: f64) -> Result<Outage> {
    if (0.0..=1.0).contains(&p) {
        Ok(Outage::from_closed(p))
    } else {
        Err(Error::Config(format!("{name} outage must lie in [0, 1], got {p}")))
    }
}

/// Result of delivering one codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub slots: u64,
    /// First-round network state, numbered from 1 in the order of
    /// [`analytic::StateDistribution`].
    pub first_state: u8,
    /// The slot cap was hit before delivery.
    pub truncated: bool,
}

/// Per-transmission success draws. `true` means the receiver decoded.
trait Links {
    fn direct<R: Rng + ?Sized>(&self, rng: &mut R) -> bool;
    fn relay_path<R: Rng + ?Sized>(&self, rng: &mut R) -> bool;
    fn relay_dest<R: Rng + ?Sized>(&self, rng: &mut R) -> bool;
}

#[derive(Debug, Clone, Copy)]
struct Bernoulli {
    sd: f64,
    path2: f64,
    rd: f64,
}

impl Links for Bernoulli {
    #[inline]
    fn direct<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() >= self.sd
    }

    #[inline]
    fn relay_path<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() >= self.path2
    }

    #[inline]
    fn relay_dest<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() >= self.rd
    }
}

#[derive(Debug, Clone, Copy)]
struct Fading {
    mode: Mode,
    gamma: f64,
    threshold: f64,
    var_sr: f64,
    var_rd: f64,
}

impl Links for Fading {
    #[inline]
    fn direct<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.gamma * sample_link_gain(rng, 1.0) >= self.threshold
    }

    #[inline]
    fn relay_path<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        let snr_sr = self.gamma * sample_link_gain(rng, self.var_sr);
        match self.mode {
            Mode::Af => {
                // The end-to-end SNR is below snr_sr, so a failed first hop
                // decides the outcome without drawing the second.
                if snr_sr < self.threshold {
                    return false;
                }
                let snr_rd = self.gamma * sample_link_gain(rng, self.var_rd);
                snr_sr * snr_rd / (snr_sr + snr_rd + 1.0) >= self.threshold
            }
            _ => snr_sr >= self.threshold,
        }
    }

    #[inline]
    fn relay_dest<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.gamma * sample_link_gain(rng, self.var_rd) >= self.threshold
    }
}

/// Draw model resolved from a [`SimConfig`].
#[derive(Debug, Clone, Copy)]
pub struct TrialModel {
    mode: Mode,
    cap: u64,
    links: LinkModel,
}

#[derive(Debug, Clone, Copy)]
enum LinkModel {
    Bernoulli(Bernoulli),
    Fading(Fading),
}

impl TrialModel {
    pub fn from_config(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let links = match config.outage_source {
            OutageSource::FixedEps { sd, path2, rd } => {
                LinkModel::Bernoulli(Bernoulli { sd, path2, rd })
            }
            OutageSource::SampledFading => LinkModel::Fading(Fading {
                mode: config.mode,
                gamma: config.params.gamma(),
                threshold: channel::snr_threshold(config.rate),
                var_sr: config.params.variance_sr(),
                var_rd: config.params.variance_rd(),
            }),
        };
        Ok(TrialModel {
            mode: config.mode,
            cap: config.max_slots_per_codeword,
            links,
        })
    }

    /// Runs one trial with the mode's protocol.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> TrialOutcome {
        match (self.mode, &self.links) {
            (Mode::Single, LinkModel::Bernoulli(l)) => single_trial(l, rng, self.cap),
            (Mode::Single, LinkModel::Fading(l)) => single_trial(l, rng, self.cap),
            (Mode::Af, LinkModel::Bernoulli(l)) => af_trial(l, rng, self.cap),
            (Mode::Af, LinkModel::Fading(l)) => af_trial(l, rng, self.cap),
            (Mode::Df, LinkModel::Bernoulli(l)) => df_trial(l, rng, self.cap),
            (Mode::Df, LinkModel::Fading(l)) => df_trial(l, rng, self.cap),
        }
    }
}

/// One amplify-and-forward codeword delivery. `model` must be built for
/// [`Mode::Af`].
pub fn run_af_trial<R: Rng + ?Sized>(model: &TrialModel, rng: &mut R) -> TrialOutcome {
    debug_assert_eq!(model.mode, Mode::Af);
    model.run(rng)
}

/// One decode-and-forward codeword delivery. `model` must be built for
/// [`Mode::Df`].
pub fn run_df_trial<R: Rng + ?Sized>(model: &TrialModel, rng: &mut R) -> TrialOutcome {
    debug_assert_eq!(model.mode, Mode::Df);
    model.run(rng)
}

fn single_trial<L: Links, R: Rng + ?Sized>(links: &L, rng: &mut R, cap: u64) -> TrialOutcome {
    let mut slots = 0;
    let mut first_state = 0;
    while slots < cap {
        slots += 1;
        let ok = links.direct(rng);
        if first_state == 0 {
            first_state = if ok { 1 } else { 2 };
        }
        if ok {
            return TrialOutcome { slots, first_state, truncated: false };
        }
    }
    TrialOutcome { slots, first_state, truncated: true }
}

/// Each round: the source broadcasts; on direct failure the relay forwards
/// in a second slot; if both fail the source starts a new round.
fn af_trial<L: Links, R: Rng + ?Sized>(links: &L, rng: &mut R, cap: u64) -> TrialOutcome {
    let mut slots = 0;
    let mut first_state = 0;
    while slots < cap {
        slots += 1;
        if links.direct(rng) {
            if first_state == 0 {
                first_state = 1;
            }
            return TrialOutcome { slots, first_state, truncated: false };
        }
        if slots == cap {
            break;
        }
        slots += 1;
        let ok = links.relay_path(rng);
        if first_state == 0 {
            first_state = if ok { 2 } else { 3 };
        }
        if ok {
            return TrialOutcome { slots, first_state, truncated: false };
        }
    }
    TrialOutcome { slots, first_state, truncated: true }
}

/// Outer loop: the source broadcasts; if neither destination nor relay
/// decodes, the source retransmits. Once the relay holds the codeword it
/// retransmits alone until the destination decodes.
fn df_trial<L: Links, R: Rng + ?Sized>(links: &L, rng: &mut R, cap: u64) -> TrialOutcome {
    let mut slots = 0;
    let mut first_state = 0;
    while slots < cap {
        slots += 1;
        if links.direct(rng) {
            if first_state == 0 {
                first_state = 1;
            }
            return TrialOutcome { slots, first_state, truncated: false };
        }
        if !links.relay_path(rng) {
            if first_state == 0 {
                first_state = 2;
            }
            continue;
        }
        let mut first_relay_attempt = true;
        while slots < cap {
            slots += 1;
            let ok = links.relay_dest(rng);
            if first_relay_attempt && first_state == 0 {
                first_state = if ok { 3 } else { 4 };
            }
            first_relay_attempt = false;
            if ok {
                return TrialOutcome { slots, first_state, truncated: false };
            }
        }
    }
    TrialOutcome { slots, first_state, truncated: true }
}

/// Monte Carlo estimate for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub mode: Mode,
    pub rate: f64,
    pub seed: u64,
    /// Mean slots per delivered codeword over completed trials.
    pub mean_slots: f64,
    /// Standard error of `mean_slots` (unbiased sample deviation over
    /// `sqrt(trials_used)`).
    pub std_error: f64,
    pub empirical_goodput: f64,
    /// Delta-method standard error of `empirical_goodput`.
    pub goodput_std_error: f64,
    pub trials_used: u64,
    pub truncated_trials: u64,
    /// First-round state counts; entry `i` is state `i + 1`.
    pub per_state_counts: Vec<u64>,
}

impl SimReport {
    /// `(mean_slots - expected) / std_error`; zero when both the spread and
    /// the difference vanish.
    pub fn z_score(&self, expected_slots: f64) -> f64 {
        let diff = self.mean_slots - expected_slots;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }

    pub fn state_frequencies(&self) -> Vec<f64> {
        let n = (self.trials_used + self.truncated_trials) as f64;
        self.per_state_counts.iter().map(|&c| c as f64 / n).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    completed: u64,
    truncated: u64,
    sum: u128,
    sum_sq: u128,
    states: [u64; 4],
}

impl Accum {
    fn push(&mut self, t: TrialOutcome) {
        if t.first_state > 0 {
            self.states[t.first_state as usize - 1] += 1;
        }
        if t.truncated {
            self.truncated += 1;
        } else {
            let s = t.slots as u128;
            self.completed += 1;
            self.sum += s;
            self.sum_sq += s * s;
        }
    }

    fn merge(mut self, o: Accum) -> Accum {
        self.completed += o.completed;
        self.truncated += o.truncated;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        for (a, b) in self.states.iter_mut().zip(o.states) {
            *a += b;
        }
        self
    }

    fn variance(&self) -> f64 {
        let n = self.completed as u128;
        if n < 2 {
            return 0.0;
        }
        // n * sum_sq - sum^2 is exact in integers when it fits.
        match n
            .checked_mul(self.sum_sq)
            .and_then(|a| self.sum.checked_mul(self.sum).map(|b| a - b))
        {
            Some(num) => num as f64 / (n * (n - 1)) as f64,
            None => {
                let nf = n as f64;
                let mean = self.sum as f64 / nf;
                (self.sum_sq as f64 / nf - mean * mean) * nf / (nf - 1.0)
            }
        }
    }
}

/// SplitMix64 finalizer; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for trial `index` of a batch seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(mix64(seed) ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn run_chunk(model: &TrialModel, seed: u64, start: u64, end: u64) -> Accum {
    let mut acc = Accum::default();
    for index in start..end {
        acc.push(model.run(&mut trial_rng(seed, index)));
    }
    acc
}

/// Runs `config.trials` trials on the current rayon pool.
pub fn run_batch(config: &SimConfig) -> Result<SimReport> {
    let model = TrialModel::from_config(config)?;
    let chunks = config.trials.div_ceil(CHUNK);
    let acc = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(config.trials);
            run_chunk(&model, config.seed, start, end)
        })
        .reduce(Accum::default, Accum::merge);
    report(config, acc)
}

/// Runs `config.trials` trials on a dedicated pool of `threads` workers.
pub fn run_batch_with_threads(config: &SimConfig, threads: usize) -> Result<SimReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_batch(config))
}

fn report(config: &SimConfig, acc: Accum) -> Result<SimReport> {
    if acc.truncated > 0 {
        log::warn!(
            "{} of {} trials hit the {}-slot cap",
            acc.truncated,
            config.trials,
            config.max_slots_per_codeword
        );
    }
    if acc.completed == 0 {
        return Err(Error::Config(format!(
            "all {} trials hit the {}-slot cap",
            config.trials, config.max_slots_per_codeword
        )));
    }
    let n = acc.completed as f64;
    let mean = acc.sum as f64 / n;
    let std_error = (acc.variance() / n).sqrt();
    Ok(SimReport {
        mode: config.mode,
        rate: config.rate,
        seed: config.seed,
        mean_slots: mean,
        std_error,
        empirical_goodput: config.rate / mean,
        goodput_std_error: config.rate * std_error / (mean * mean),
        trials_used: acc.completed,
        truncated_trials: acc.truncated,
        per_state_counts: acc.states[..config.mode.state_count()].to_vec(),
    })
}
