//! Closed-form click statistics for the simulated source model, used as an
//! independent oracle against the Monte Carlo estimators.
//!
//! The joint pair number n of the two modes follows a geometric law with
//! probability generating function G(z) = (1 - x)/(1 - x z),
//! x = mean/(1 + mean). Every photon of a mode independently ends up
//! clicking a given detector with a fixed per-photon probability, and the
//! converter background contributes independent Poisson clicks, so the
//! probability that *none* of a channel subset fires factorizes as
//! G((1 - A)(1 - B)) exp(-N): A and B the summed per-photon probabilities
//! of the subset for the two modes, N its summed Poisson means. Any
//! coincidence probability then follows by inclusion-exclusion.

#![allow(dead_code)]

use phlab::montecarlo::SourceParams;
use phlab::{Channel, ChannelSet};

#[derive(Debug, Clone)]
pub struct AnalyticModel {
    pub source: SourceParams,
    pub qfc: bool,
}

impl AnalyticModel {
    pub fn new(source: SourceParams, qfc: bool) -> AnalyticModel {
        AnalyticModel { source, qfc }
    }

    fn pgf(&self, z: f64) -> f64 {
        let mean = self.source.mean_pairs;
        if mean <= 0.0 {
            return 1.0;
        }
        let x = mean / (1.0 + mean);
        (1.0 - x) / (1.0 - x * z)
    }

    /// Per-S-photon probability of clicking this channel.
    fn per_photon_s(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Ds1 | Channel::Ds2 => self.source.eta_s / 2.0,
            _ => 0.0,
        }
    }

    /// Per-AS-photon probability of clicking this channel.
    fn per_photon_as(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Dv1 | Channel::Dv2 if !self.qfc => self.source.eta_asv / 2.0,
            Channel::Dt1 | Channel::Dt2 if self.qfc => {
                self.source.eta_asv * self.source.eta_conv / 2.0
            }
            _ => 0.0,
        }
    }

    /// Poisson click mean of this channel (converted background plus darks).
    fn poisson_mean(&self, channel: Channel) -> f64 {
        let mut mean = self.source.dark_rate[channel.index()];
        if self.qfc && matches!(channel, Channel::Dt1 | Channel::Dt2) {
            mean += self.source.noise_mean * self.source.eta_conv / 2.0;
        }
        mean
    }

    /// Probability that no channel of the mask fires in a slot.
    pub fn p_none(&self, mask: ChannelSet) -> f64 {
        let mut a = 0.0;
        let mut b = 0.0;
        let mut poisson = 0.0;
        for channel in mask.iter() {
            a += self.per_photon_s(channel);
            b += self.per_photon_as(channel);
            poisson += self.poisson_mean(channel);
        }
        self.pgf((1.0 - a) * (1.0 - b)) * (-poisson).exp()
    }

    /// Probability that every listed channel group fires at least once,
    /// by inclusion-exclusion over the groups.
    pub fn p_all(&self, groups: &[ChannelSet]) -> f64 {
        let mut total = 0.0;
        for subset in 0u32..(1 << groups.len()) {
            let mut mask = ChannelSet::EMPTY;
            for (i, group) in groups.iter().enumerate() {
                if subset & (1 << i) != 0 {
                    mask = mask.union(*group);
                }
            }
            let sign = if subset.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * self.p_none(mask);
        }
        total
    }

    pub fn p_click(&self, mask: ChannelSet) -> f64 {
        1.0 - self.p_none(mask)
    }

    /// Expected cross-correlation estimate between two channel groups.
    pub fn g2_cross(&self, a: ChannelSet, b: ChannelSet) -> f64 {
        self.p_all(&[a, b]) / (self.p_click(a) * self.p_click(b))
    }

    /// Expected Hanbury Brown-Twiss autocorrelation estimate.
    pub fn g2_auto(&self, arm_a: ChannelSet, arm_b: ChannelSet) -> f64 {
        self.g2_cross(arm_a, arm_b)
    }

    /// Expected heralded autocorrelation estimate.
    pub fn g2_heralded(&self, arm_a: ChannelSet, arm_b: ChannelSet, herald: ChannelSet) -> f64 {
        self.p_all(&[arm_a, arm_b, herald]) * self.p_click(herald)
            / (self.p_all(&[arm_a, herald]) * self.p_all(&[arm_b, herald]))
    }
}

/// Asserts a Monte Carlo estimate lies within `n_sigma` of the analytic
/// target, using the estimator's own standard error. Degenerate estimates
/// (zero numerator) pass when the target sits inside their Poisson bound.
pub fn assert_within_sigma(
    label: &str,
    estimate: &phlab::G2Estimate,
    target: f64,
    n_sigma: f64,
) {
    let sigma = estimate.std_err;
    assert!(
        sigma.is_finite() && sigma > 0.0,
        "{label}: unusable standard error {sigma}"
    );
    let distance = (estimate.value - target).abs();
    assert!(
        distance <= n_sigma * sigma,
        "{label}: estimate {} +- {sigma} vs target {target} ({:.1} sigma)",
        estimate.value,
        distance / sigma
    );
}

/// Mean and standard error of `values` via the scatter of batch means.
pub fn batch_mean_err(values: &[f64], batches: usize) -> (f64, f64) {
    assert!(values.len() >= batches && batches >= 2);
    let chunk = values.len() / batches;
    let means: Vec<f64> = values
        .chunks(chunk)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
