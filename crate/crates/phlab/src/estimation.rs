//! Collection-efficiency inference from singles and coincidence
//! probabilities.
//!
//! For a two-mode squeezed source at small excitation probability the
//! detection probabilities factorize as `p_s = p_ex eta_s`,
//! `p_v = p_ex eta_asv` and `p_sv = p_ex eta_s eta_asv`, which invert in
//! closed form. The linearized relations bias the estimates at larger
//! excitation; the simulation tests document that bias.

use crate::channel::ChannelSet;
use crate::correlation::CountAggregate;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),
}

/// Inferred operating point of the source and its collection paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyEstimate {
    pub p_ex: f64,
    pub eta_s: f64,
    pub eta_asv: Option<f64>,
    /// Overall transmittance of the converted-photon path, including the
    /// converter efficiency; present when telecom counts exist.
    pub eta_ast: Option<f64>,
    /// Set when an inverted quantity falls outside [0, 1].
    pub out_of_range: bool,
}

impl EfficiencyEstimate {
    fn flag_ranges(mut self) -> EfficiencyEstimate {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        self.out_of_range = !in_unit(self.p_ex)
            || !in_unit(self.eta_s)
            || self.eta_asv.map(|v| !in_unit(v)).unwrap_or(false)
            || self.eta_ast.map(|v| !in_unit(v)).unwrap_or(false);
        self
    }
}

/// Inverts the factorized detection probabilities:
/// `eta_asv = p_sv / p_s`, `eta_s = p_sv / p_v`, `p_ex = p_s p_v / p_sv`.
pub fn estimate_efficiencies(
    p_s: f64,
    p_v: f64,
    p_sv: f64,
) -> Result<EfficiencyEstimate, EstimationError> {
    if !(p_s > 0.0) || !(p_v > 0.0) || !(p_sv > 0.0) {
        return Err(EstimationError::InvalidProbabilities(format!(
            "p_s {p_s}, p_v {p_v}, p_sv {p_sv} must all be positive"
        )));
    }
    if p_sv > p_s.min(p_v) {
        return Err(EstimationError::InvalidProbabilities(format!(
            "coincidence probability {p_sv} exceeds a singles probability"
        )));
    }
    Ok(EfficiencyEstimate {
        p_ex: p_s * p_v / p_sv,
        eta_s: p_sv / p_v,
        eta_asv: Some(p_sv / p_s),
        eta_ast: None,
        out_of_range: false,
    }
    .flag_ranges())
}

/// Applies the same inversion to the counts of an aggregate, using the
/// direct herald channels when they carry counts and the telecom channels
/// otherwise. Telecom counts additionally yield the converted-path
/// transmittance.
pub fn estimate_from_aggregate(
    agg: &CountAggregate,
) -> Result<EfficiencyEstimate, EstimationError> {
    if agg.trials() == 0 {
        return Err(EstimationError::InvalidProbabilities(
            "aggregate holds no trials".to_string(),
        ));
    }
    let trials = agg.trials() as f64;
    let prob = |set: ChannelSet| agg.union_singles(set) as f64 / trials;
    let coinc =
        |a: ChannelSet, b: ChannelSet| agg.pair_coinc(a, b) as f64 / trials;
    let p_s = prob(ChannelSet::MODE_S);
    let p_v = prob(ChannelSet::MODE_ASV);
    let p_t = prob(ChannelSet::MODE_AST);

    let mut estimate = if p_v > 0.0 {
        estimate_efficiencies(p_s, p_v, coinc(ChannelSet::MODE_S, ChannelSet::MODE_ASV))?
    } else {
        let base = estimate_efficiencies(p_s, p_t, coinc(ChannelSet::MODE_S, ChannelSet::MODE_AST))?;
        EfficiencyEstimate {
            eta_ast: base.eta_asv,
            eta_asv: None,
            ..base
        }
    };
    if p_v > 0.0 && p_t > 0.0 {
        let p_st = coinc(ChannelSet::MODE_S, ChannelSet::MODE_AST);
        if p_st > 0.0 {
            estimate.eta_ast = Some(p_st / p_s);
        }
    }
    Ok(estimate.flag_ranges())
}

/// Strips known detector and filter factors from a path transmittance:
/// the probability that an emitted photon is collected into the path at all.
pub fn collection_probability(
    eta_asv: f64,
    detector_qe: f64,
    filter_transmittance: f64,
) -> Result<f64, EstimationError> {
    for (name, v) in [
        ("eta_asv", eta_asv),
        ("detector_qe", detector_qe),
        ("filter_transmittance", filter_transmittance),
    ] {
        if !(v > 0.0) || v > 1.0 {
            return Err(EstimationError::InvalidProbabilities(format!(
                "{name} = {v} must lie in (0, 1]"
            )));
        }
    }
    Ok(eta_asv / (detector_qe * filter_transmittance))
}
