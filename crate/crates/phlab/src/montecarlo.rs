//! Trial-by-trial stochastic model of the heralding experiment.
//!
//! Each write slot draws a photon-pair number from the two-mode-squeezed
//! source, thins both modes by their path transmittances, optionally sends
//! the herald mode through the frequency converter (additive Poissonian
//! background, then joint thinning by the device efficiency), splits each
//! surviving mode on a half beamsplitter and applies threshold detection
//! with per-window dark counts.
//!
//! Trials are grouped into batches that own child generators derived from
//! `(master_seed, batch index)`, so runs are bit-identical for a fixed
//! [`RngPlan`] regardless of thread count, and batch aggregates merge into
//! exactly the single-pass result.

use crate::channel::{Channel, ChannelSet};
use crate::correlation::CountAggregate;
use crate::timetag::{TimeTagRecord, WindowConfig, SLOTS_PER_CYCLE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Physical model of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceParams {
    /// Mean photon-pair number of the two-mode squeezed source per slot.
    pub mean_pairs: f64,
    /// Transmittance of the read-out (S) path including detector efficiency.
    pub eta_s: f64,
    /// Transmittance of the herald (AS) path up to and including direct
    /// detection; with conversion enabled it is the path to the converter
    /// input.
    pub eta_asv: f64,
    /// Converter device efficiency, applied jointly to signal and noise.
    pub eta_conv: f64,
    /// Mean equivalent-input noise photons per herald window.
    pub noise_mean: f64,
    /// Dark counts per analysis window, per channel.
    pub dark_rate: [f64; Channel::COUNT],
}

impl Default for SourceParams {
    fn default() -> SourceParams {
        SourceParams {
            mean_pairs: 0.0,
            eta_s: 1.0,
            eta_asv: 1.0,
            eta_conv: 1.0,
            noise_mean: 0.0,
            dark_rate: [0.0; Channel::COUNT],
        }
    }
}

impl SourceParams {
    /// Probability that a slot holds at least one pair: `1 - P(n = 0)` of
    /// the geometric pair-number law. At small values it coincides with the
    /// mean pair number.
    pub fn excitation_probability(&self) -> f64 {
        self.mean_pairs / (1.0 + self.mean_pairs)
    }

    /// The mean pair number whose excitation probability is `p_ex`.
    pub fn mean_pairs_for_excitation(p_ex: f64) -> f64 {
        p_ex / (1.0 - p_ex)
    }

    /// Signal-to-noise ratio at the converter input, when noise is present.
    pub fn zeta(&self) -> Option<f64> {
        (self.noise_mean > 0.0).then(|| self.mean_pairs * self.eta_asv / self.noise_mean)
    }

    /// The noise mean that realizes a given converter-input signal-to-noise
    /// ratio for this source.
    pub fn noise_mean_for_zeta(&self, zeta: f64) -> f64 {
        self.mean_pairs * self.eta_asv / zeta
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let check_unit = |name: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                Err(SimError::InvalidParams(format!("{name} = {v} not in [0, 1]")))
            } else {
                Ok(())
            }
        };
        check_unit("eta_s", self.eta_s)?;
        check_unit("eta_asv", self.eta_asv)?;
        check_unit("eta_conv", self.eta_conv)?;
        if !(self.mean_pairs >= 0.0) {
            return Err(SimError::InvalidParams(format!(
                "mean_pairs = {} must be non-negative",
                self.mean_pairs
            )));
        }
        if !(self.noise_mean >= 0.0) {
            return Err(SimError::InvalidParams(format!(
                "noise_mean = {} must be non-negative",
                self.noise_mean
            )));
        }
        for (ch, d) in Channel::ALL.iter().zip(self.dark_rate) {
            if !(d >= 0.0) {
                return Err(SimError::InvalidParams(format!(
                    "dark rate for {ch} = {d} must be non-negative"
                )));
            }
        }
        Ok(())
    }
}

/// Photon numbers and clicks of a single slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Pair number emitted by the source.
    pub n_pairs: u32,
    /// Read-out photons surviving to the S beamsplitter.
    pub n_s: u32,
    /// Herald photons surviving the AS path (at the beamsplitter without
    /// conversion, at the converter input with it).
    pub n_asv: u32,
    /// Background photons added by the converter (before its thinning).
    pub n_noise: u32,
    /// Converted photons at the telecom beamsplitter.
    pub n_ast: u32,
    /// Click pattern of the slot.
    pub clicks: ChannelSet,
}

/// Deterministic batching scheme: batch `i` draws from stream `2 i` of a
/// ChaCha generator seeded with the master seed, and its time-tag jitter
/// from stream `2 i + 1`, so aggregates do not depend on whether tags are
/// emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngPlan {
    pub master_seed: u64,
    pub batch_size: u64,
}

impl Default for RngPlan {
    fn default() -> RngPlan {
        RngPlan {
            master_seed: 1,
            batch_size: 100 * SLOTS_PER_CYCLE as u64,
        }
    }
}

impl RngPlan {
    pub fn new(master_seed: u64) -> RngPlan {
        RngPlan {
            master_seed,
            ..RngPlan::default()
        }
    }

    pub fn batch_rng(&self, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(2 * batch);
        rng
    }

    pub fn tag_rng(&self, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(2 * batch + 1);
        rng
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.batch_size == 0 {
            return Err(SimError::InvalidParams("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// A synthetic leakage peak: emitted on `channel` with the given per-slot
/// probability, uniformly over `[offset, offset + width)`. Models the
/// drive-pulse peaks that the analysis windows are meant to reject, so it
/// should be placed outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct NuisancePeak {
    pub channel: Channel,
    pub offset_ns: u64,
    pub width_ns: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub trials: u64,
    /// Route the herald photons through the frequency converter onto the
    /// telecom detectors instead of detecting them directly.
    pub qfc: bool,
    pub emit_tags: bool,
    /// Collect one aggregate per trap cycle (for cycle-level bootstrap).
    pub per_cycle: bool,
    pub parallel: bool,
}

impl RunOptions {
    pub fn new(trials: u64) -> RunOptions {
        RunOptions {
            trials,
            qfc: false,
            emit_tags: false,
            per_cycle: false,
            parallel: true,
        }
    }

    pub fn qfc(mut self, on: bool) -> RunOptions {
        self.qfc = on;
        self
    }

    pub fn emit_tags(mut self, on: bool) -> RunOptions {
        self.emit_tags = on;
        self
    }

    pub fn per_cycle(mut self, on: bool) -> RunOptions {
        self.per_cycle = on;
        self
    }

    pub fn parallel(mut self, on: bool) -> RunOptions {
        self.parallel = on;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimOutput {
    pub aggregate: CountAggregate,
    /// Emitted time tags in slot order; empty unless requested.
    pub tags: Vec<TimeTagRecord>,
    /// Per-cycle aggregates in cycle order; empty unless requested.
    pub cycle_aggregates: Vec<CountAggregate>,
}

/// Draws the joint pair number of the two-mode squeezed source. Both modes
/// carry the same number before any loss.
pub fn sample_pair_numbers<R: Rng + ?Sized>(params: &SourceParams, rng: &mut R) -> (u32, u32) {
    if params.mean_pairs <= 0.0 {
        return (0, 0);
    }
    // Geometric law P(n) = (1 - x) x^n with x = mean / (1 + mean).
    let p_success = 1.0 / (1.0 + params.mean_pairs);
    let n = Geometric::new(p_success)
        .expect("valid geometric parameter")
        .sample(rng) as u32;
    (n, n)
}

/// Binomial thinning: each photon independently survives with probability
/// `eta`.
pub fn apply_loss<R: Rng + ?Sized>(n: u32, eta: f64, rng: &mut R) -> u32 {
    if n == 0 || eta <= 0.0 {
        return 0;
    }
    if eta >= 1.0 {
        return n;
    }
    if n <= 64 {
        (0..n).filter(|_| rng.random::<f64>() < eta).count() as u32
    } else {
        Binomial::new(n as u64, eta)
            .expect("valid binomial parameters")
            .sample(rng) as u32
    }
}

fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive Poisson mean")
        .sample(rng) as u32
}

/// Frequency conversion of the herald mode: adds the Poissonian background
/// induced by the pump, then thins signal and background jointly by the
/// device efficiency.
pub fn add_conversion_noise<R: Rng + ?Sized>(
    n_asv: u32,
    params: &SourceParams,
    rng: &mut R,
) -> u32 {
    let noise = sample_poisson(params.noise_mean, rng);
    apply_loss(n_asv + noise, params.eta_conv, rng)
}

fn dark_click<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> bool {
    // P(Poisson(rate) > 0) = 1 - exp(-rate).
    rate > 0.0 && rng.random::<f64>() < 1.0 - (-rate).exp()
}

/// Splits `n` photons 50/50 onto two arms and applies threshold detection
/// with the given per-window dark rates.
pub fn split_and_detect<R: Rng + ?Sized>(
    n: u32,
    dark: (f64, f64),
    rng: &mut R,
) -> (bool, bool) {
    let (a, b) = match n {
        0 => (0, 0),
        1 => {
            if rng.random::<f64>() < 0.5 {
                (1, 0)
            } else {
                (0, 1)
            }
        }
        n => {
            let a = apply_loss(n, 0.5, rng);
            (a, n - a)
        }
    };
    (
        a > 0 || dark_click(dark.0, rng),
        b > 0 || dark_click(dark.1, rng),
    )
}

/// Runs one complete slot: source, losses, optional conversion, splitting
/// and detection.
pub fn sample_trial<R: Rng + ?Sized>(
    params: &SourceParams,
    qfc: bool,
    rng: &mut R,
) -> TrialOutcome {
    let (n_pairs, _) = sample_pair_numbers(params, rng);
    let n_s = apply_loss(n_pairs, params.eta_s, rng);
    let n_asv = apply_loss(n_pairs, params.eta_asv, rng);
    let dark = &params.dark_rate;
    let (s1, s2) = split_and_detect(n_s, (dark[0], dark[1]), rng);

    let mut clicks = ChannelSet::EMPTY;
    if s1 {
        clicks = clicks.with(Channel::Ds1);
    }
    if s2 {
        clicks = clicks.with(Channel::Ds2);
    }

    let mut n_noise = 0;
    let mut n_ast = 0;
    if qfc {
        n_noise = sample_poisson(params.noise_mean, rng);
        n_ast = apply_loss(n_asv + n_noise, params.eta_conv, rng);
        let (t1, t2) = split_and_detect(n_ast, (dark[4], dark[5]), rng);
        if t1 {
            clicks = clicks.with(Channel::Dt1);
        }
        if t2 {
            clicks = clicks.with(Channel::Dt2);
        }
    } else {
        let (v1, v2) = split_and_detect(n_asv, (dark[2], dark[3]), rng);
        if v1 {
            clicks = clicks.with(Channel::Dv1);
        }
        if v2 {
            clicks = clicks.with(Channel::Dv2);
        }
    }

    TrialOutcome {
        n_pairs,
        n_s,
        n_asv,
        n_noise,
        n_ast,
        clicks,
    }
}

/// A configured experiment: the source, the analysis windows (which double
/// as the emission windows for synthetic tags) and optional leakage peaks.
#[derive(Debug, Clone, Default)]
pub struct Experiment {
    pub source: SourceParams,
    pub windows: WindowConfig,
    pub nuisance: Vec<NuisancePeak>,
}

struct BatchOutput {
    aggregate: CountAggregate,
    tags: Vec<TimeTagRecord>,
    cycles: BTreeMap<u32, CountAggregate>,
}

impl Experiment {
    pub fn new(source: SourceParams) -> Experiment {
        Experiment {
            source,
            windows: WindowConfig::default(),
            nuisance: Vec::new(),
        }
    }

    fn validate(&self, plan: &RngPlan, opts: &RunOptions) -> Result<(), SimError> {
        self.source.validate()?;
        plan.validate()?;
        self.windows
            .validate()
            .map_err(|e| SimError::InvalidParams(e.to_string()))?;
        if opts.trials == 0 {
            return Err(SimError::InvalidParams("trials must be positive".into()));
        }
        for peak in &self.nuisance {
            if peak.width_ns == 0
                || peak.offset_ns + peak.width_ns > crate::timetag::SLOT_NS
                || !(0.0..=1.0).contains(&peak.probability)
            {
                return Err(SimError::InvalidParams(format!(
                    "nuisance peak on {} is malformed",
                    peak.channel
                )));
            }
        }
        Ok(())
    }

    fn run_batch(&self, plan: &RngPlan, opts: &RunOptions, start: u64, end: u64) -> BatchOutput {
        let batch_index = start / plan.batch_size;
        let mut rng = plan.batch_rng(batch_index);
        let mut tag_rng = plan.tag_rng(batch_index);
        let mut out = BatchOutput {
            aggregate: CountAggregate::new(),
            tags: Vec::new(),
            cycles: BTreeMap::new(),
        };
        let slots = SLOTS_PER_CYCLE as u64;
        for trial in start..end {
            let outcome = sample_trial(&self.source, opts.qfc, &mut rng);
            out.aggregate.record(outcome.clicks);
            let cycle = (trial / slots) as u32;
            if opts.per_cycle {
                out.cycles.entry(cycle).or_default().record(outcome.clicks);
            }
            if opts.emit_tags {
                let sequence = (trial % slots) as u16;
                for channel in outcome.clicks.iter() {
                    let w = self.windows.window_for(channel);
                    let jitter = (tag_rng.random::<f64>() * w.width_ns as f64) as u64;
                    out.tags.push(TimeTagRecord {
                        cycle,
                        sequence,
                        channel,
                        timestamp_ns: w.offset_ns + jitter,
                    });
                }
                for peak in &self.nuisance {
                    if tag_rng.random::<f64>() < peak.probability {
                        let jitter = (tag_rng.random::<f64>() * peak.width_ns as f64) as u64;
                        out.tags.push(TimeTagRecord {
                            cycle,
                            sequence,
                            channel: peak.channel,
                            timestamp_ns: peak.offset_ns + jitter,
                        });
                    }
                }
            }
        }
        out
    }

    /// Runs `opts.trials` slots and merges the batch results in order.
    pub fn run(&self, plan: &RngPlan, opts: &RunOptions) -> Result<SimOutput, SimError> {
        self.validate(plan, opts)?;
        let ranges: Vec<(u64, u64)> = (0..opts.trials)
            .step_by(plan.batch_size as usize)
            .map(|start| (start, (start + plan.batch_size).min(opts.trials)))
            .collect();
        let batches: Vec<BatchOutput> = if opts.parallel {
            ranges
                .par_iter()
                .map(|(s, e)| self.run_batch(plan, opts, *s, *e))
                .collect()
        } else {
            ranges
                .iter()
                .map(|(s, e)| self.run_batch(plan, opts, *s, *e))
                .collect()
        };

        let mut output = SimOutput::default();
        let mut cycles: BTreeMap<u32, CountAggregate> = BTreeMap::new();
        for batch in batches {
            output.aggregate.merge(&batch.aggregate);
            output.tags.extend(batch.tags);
            for (cycle, agg) in batch.cycles {
                cycles.entry(cycle).or_default().merge(&agg);
            }
        }
        output.cycle_aggregates = cycles.into_values().collect();
        Ok(output)
    }
}
