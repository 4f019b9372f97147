//! Closed-form algebra for additive conversion noise.
//!
//! The converter adds background photons that are statistically independent
//! of the signal. With `zeta` the ratio of mean signal photon number to mean
//! equivalent-input noise photon number at the converter input, the measured
//! correlation functions after conversion are weighted mixtures of the
//! signal and noise statistics. Conversion efficiency multiplies signal and
//! noise alike and cancels from every ratio here, so it never appears.

use crate::correlation::CorrelationSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseModelError {
    #[error("no positive solution: {0}")]
    NoSolution(String),
    #[error("division by zero: converted cross correlation is 0")]
    DivisionByZero,
    #[error("correlation table is missing statistic {0}")]
    MissingStatistic(&'static str),
}

/// The correlation functions of the unconverted source together with the
/// noise parameters, i.e. everything the mixing formulas need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMix {
    /// Signal-to-noise mean photon number ratio at the converter input.
    pub zeta: f64,
    /// Autocorrelation of the noise photons (1 = Poissonian).
    pub g2_noise: f64,
    /// Cross correlation of the unconverted herald with the read-out mode.
    pub g2_cross_in: f64,
    /// Unheralded autocorrelation of the unconverted herald mode.
    pub g2_signal_auto: f64,
    /// Autocorrelation of the herald mode conditioned on a read-out click.
    pub g2_signal_auto_heralded: f64,
    /// Unheralded autocorrelation of the read-out mode.
    pub g2_ss: f64,
    /// Autocorrelation of the read-out mode conditioned on a herald click.
    pub g2_ss_heralded_in: f64,
}

/// A what-if configuration: scale `zeta` by a factor and repredict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub label: String,
    pub zeta_multiplier: f64,
}

/// Cross correlation after mixing in noise:
/// `(g_in * zeta + 1) / (zeta + 1)`.
///
/// Fixes `g_in = 1` exactly for every `zeta` and is monotone in `zeta`.
pub fn mix_cross(g2_cross_in: f64, zeta: f64) -> f64 {
    debug_assert!(zeta >= 0.0 && g2_cross_in >= 0.0);
    (g2_cross_in * zeta + 1.0) / (zeta + 1.0)
}

/// Autocorrelation after mixing in noise:
/// `(zeta^2 g_signal + g_noise + 2 zeta) / (1 + zeta)^2`.
///
/// Numerator and denominator share their operation order so a fully
/// Poissonian input (`g_signal = g_noise = 1`) returns exactly 1.
pub fn mix_auto(g2_signal_auto: f64, g2_noise: f64, zeta: f64) -> f64 {
    debug_assert!(zeta >= 0.0 && g2_signal_auto >= 0.0 && g2_noise >= 0.0);
    let numerator = zeta * zeta * g2_signal_auto + 2.0 * zeta + g2_noise;
    let denominator = zeta * zeta + 2.0 * zeta + 1.0;
    numerator / denominator
}

/// Heralded autocorrelation of the read-out mode when the herald is the
/// converted photon:
///
/// `g_ss|out = g_ss|in (g_x_in/g_x_out)^2 zeta/(zeta+1)
///           + g_ss (1/g_x_out)^2 1/(zeta+1)`.
pub fn mix_heralded_ss(
    g2_ss_heralded_in: f64,
    g2_ss: f64,
    g2_cross_in: f64,
    g2_cross_out: f64,
    zeta: f64,
) -> Result<f64, NoiseModelError> {
    if g2_cross_out == 0.0 {
        return Err(NoiseModelError::DivisionByZero);
    }
    let signal_term =
        g2_ss_heralded_in * (g2_cross_in / g2_cross_out).powi(2) * (zeta / (zeta + 1.0));
    let noise_term = g2_ss * (1.0 / g2_cross_out).powi(2) * (1.0 / (zeta + 1.0));
    Ok(signal_term + noise_term)
}

/// Same as [`mix_heralded_ss`] with the converted cross correlation
/// recomputed internally via [`mix_cross`].
pub fn mix_heralded_ss_recomputed(
    g2_ss_heralded_in: f64,
    g2_ss: f64,
    g2_cross_in: f64,
    zeta: f64,
) -> Result<f64, NoiseModelError> {
    let g2_cross_out = mix_cross(g2_cross_in, zeta);
    mix_heralded_ss(g2_ss_heralded_in, g2_ss, g2_cross_in, g2_cross_out, zeta)
}

/// Observed correlation functions before and after conversion, the inputs
/// of [`solve_zeta_gnoise`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedMix {
    pub g2_cross_in: f64,
    pub g2_cross_out: f64,
    pub g2_signal_auto: f64,
    pub g2_auto_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaSolution {
    pub zeta: f64,
    pub g2_noise: f64,
    /// Set when the inversion produced a (small) negative noise
    /// autocorrelation, which observed values may do within their errors.
    pub negative_noise: bool,
}

/// Inverts the mixing formulas:
/// `zeta = (g_x_out - 1) / (g_x_in - g_x_out)` and
/// `g_noise = g_a_out (1+zeta)^2 - zeta^2 g_signal - 2 zeta`.
pub fn solve_zeta_gnoise(obs: &ObservedMix) -> Result<ZetaSolution, NoiseModelError> {
    if obs.g2_cross_in <= 1.0 {
        return Err(NoiseModelError::NoSolution(format!(
            "input cross correlation {} must exceed 1",
            obs.g2_cross_in
        )));
    }
    if obs.g2_cross_out <= 1.0 || obs.g2_cross_out >= obs.g2_cross_in {
        return Err(NoiseModelError::NoSolution(format!(
            "converted cross correlation {} must lie strictly between 1 and {}",
            obs.g2_cross_out, obs.g2_cross_in
        )));
    }
    let zeta = (obs.g2_cross_out - 1.0) / (obs.g2_cross_in - obs.g2_cross_out);
    let g2_noise =
        obs.g2_auto_out * (zeta * zeta + 2.0 * zeta + 1.0) - zeta * zeta * obs.g2_signal_auto
            - 2.0 * zeta;
    Ok(ZetaSolution {
        zeta,
        g2_noise,
        negative_noise: g2_noise < 0.0,
    })
}

/// Predicted heralded autocorrelations for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioPrediction {
    pub label: String,
    pub zeta: f64,
    pub g2_noise: f64,
    pub g2_ss_given_ast: f64,
    pub g2_ast_ast_given_s: f64,
}

/// Repredicts both heralded autocorrelations after scaling `zeta`.
///
/// The heralded autocorrelation of the converted mode reuses the plain
/// mixing formula with the herald-conditioned substitutions: `zeta` becomes
/// `g_cross_in * zeta` and the signal autocorrelation its heralded value.
pub fn predict_scenario(
    base: &NoiseMix,
    spec: &ScenarioSpec,
) -> Result<ScenarioPrediction, NoiseModelError> {
    if !(spec.zeta_multiplier > 0.0) {
        return Err(NoiseModelError::NoSolution(format!(
            "scenario multiplier {} must be positive",
            spec.zeta_multiplier
        )));
    }
    let zeta = base.zeta * spec.zeta_multiplier;
    let g2_ss_given_ast =
        mix_heralded_ss_recomputed(base.g2_ss_heralded_in, base.g2_ss, base.g2_cross_in, zeta)?;
    let zeta_heralded = base.g2_cross_in * zeta;
    let g2_ast_ast_given_s =
        mix_auto(base.g2_signal_auto_heralded, base.g2_noise, zeta_heralded);
    Ok(ScenarioPrediction {
        label: spec.label.clone(),
        zeta,
        g2_noise: base.g2_noise,
        g2_ss_given_ast,
        g2_ast_ast_given_s,
    })
}

impl NoiseMix {
    /// Assembles a mix from an observed correlation table, solving for
    /// `zeta` and the noise autocorrelation from the cross and unheralded
    /// autocorrelation pairs.
    pub fn from_observed(set: &CorrelationSet) -> Result<NoiseMix, NoiseModelError> {
        let need = |opt: Option<f64>, name: &'static str| {
            opt.ok_or(NoiseModelError::MissingStatistic(name))
        };
        let g2_cross_in = need(set.s_asv.map(|e| e.value), "s_asv")?;
        let g2_cross_out = need(set.s_ast.map(|e| e.value), "s_ast")?;
        let g2_signal_auto = need(set.asv_asv.map(|e| e.value), "asv_asv")?;
        let g2_auto_out = need(set.ast_ast.map(|e| e.value), "ast_ast")?;
        let g2_ss = need(set.s_s.map(|e| e.value), "s_s")?;
        let g2_ss_heralded_in = need(set.s_s_given_asv.map(|e| e.value), "s_s_given_asv")?;
        let g2_signal_auto_heralded =
            need(set.asv_asv_given_s.map(|e| e.value), "asv_asv_given_s")?;
        let solution = solve_zeta_gnoise(&ObservedMix {
            g2_cross_in,
            g2_cross_out,
            g2_signal_auto,
            g2_auto_out,
        })?;
        Ok(NoiseMix {
            zeta: solution.zeta,
            g2_noise: solution.g2_noise,
            g2_cross_in,
            g2_signal_auto,
            g2_signal_auto_heralded,
            g2_ss,
            g2_ss_heralded_in,
        })
    }
}
