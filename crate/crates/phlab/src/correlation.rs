//! Second-order correlation estimators over raw count aggregates.
//!
//! Estimators work on per-slot click patterns with threshold-detector
//! semantics: a slot contributes at most one detection per channel, and a
//! mode-level event such as "a click in mode S" is the union over the
//! mode's physical channels. All counts are stored as a histogram over the
//! 64 possible click patterns, from which any singles, pair or triple
//! coincidence count is derived exactly.

use crate::channel::{Channel, ChannelSet};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    /// A denominator count of the requested estimator is zero.
    #[error("degenerate counts: {0}")]
    DegenerateCounts(String),
    /// A serialized aggregate or correlation table could not be parsed.
    #[error("bad table at line {line}: {reason}")]
    BadTable { line: usize, reason: String },
}

/// Per-slot click counts for one analysis run.
///
/// Internally a histogram over all 64 click patterns, so merging is plain
/// element-wise addition (associative and commutative) and every derived
/// coincidence count is consistent by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountAggregate {
    trials: u64,
    pattern_counts: [u64; ChannelSet::PATTERNS],
}

impl Default for CountAggregate {
    fn default() -> CountAggregate {
        CountAggregate {
            trials: 0,
            pattern_counts: [0; ChannelSet::PATTERNS],
        }
    }
}

impl CountAggregate {
    pub fn new() -> CountAggregate {
        CountAggregate::default()
    }

    /// Records one analyzed slot with the given click pattern.
    pub fn record(&mut self, pattern: ChannelSet) {
        self.trials += 1;
        self.pattern_counts[pattern.bits() as usize] += 1;
    }

    /// Records `count` slots sharing one click pattern.
    pub fn record_many(&mut self, pattern: ChannelSet, count: u64) {
        self.trials += count;
        self.pattern_counts[pattern.bits() as usize] += count;
    }

    pub fn merge(&mut self, other: &CountAggregate) {
        self.trials += other.trials;
        for (mine, theirs) in self.pattern_counts.iter_mut().zip(&other.pattern_counts) {
            *mine += theirs;
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn pattern_count(&self, pattern: ChannelSet) -> u64 {
        self.pattern_counts[pattern.bits() as usize]
    }

    /// Number of slots in which every listed channel group saw at least one
    /// click. With a single group this is a (union) singles count, with two
    /// a pair coincidence, and so on.
    pub fn count_where(&self, groups: &[ChannelSet]) -> u64 {
        self.pattern_counts
            .iter()
            .enumerate()
            .filter(|(bits, _)| {
                let pattern = ChannelSet::from_bits(*bits as u8).unwrap();
                groups.iter().all(|g| pattern.intersects(*g))
            })
            .map(|(_, count)| count)
            .sum()
    }

    pub fn singles(&self, channel: Channel) -> u64 {
        self.count_where(&[ChannelSet::of(channel)])
    }

    pub fn union_singles(&self, set: ChannelSet) -> u64 {
        self.count_where(&[set])
    }

    pub fn pair_coinc(&self, a: ChannelSet, b: ChannelSet) -> u64 {
        self.count_where(&[a, b])
    }

    pub fn triple_coinc(&self, a: ChannelSet, b: ChannelSet, c: ChannelSet) -> u64 {
        self.count_where(&[a, b, c])
    }

    /// Flat CSV form: a `field,value` table holding the trial count and the
    /// non-zero pattern counts.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str("field,value\n");
        out.push_str(&format!("trials,{}\n", self.trials));
        for bits in 0..ChannelSet::PATTERNS {
            let count = self.pattern_counts[bits];
            if count > 0 {
                let pattern = ChannelSet::from_bits(bits as u8).unwrap();
                out.push_str(&format!("pattern_{pattern},{count}\n"));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<CountAggregate, CorrelationError> {
        let mut trials: Option<u64> = None;
        let mut pattern_counts = [0u64; ChannelSet::PATTERNS];
        let mut sum = 0u64;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == "field,value" {
                continue;
            }
            let bad = |reason: &str| CorrelationError::BadTable {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let (field, value) = line.split_once(',').ok_or_else(|| bad("expected field,value"))?;
            let value: u64 = value.trim().parse().map_err(|_| bad("count is not an integer"))?;
            if field == "trials" {
                trials = Some(value);
            } else if let Some(name) = field.strip_prefix("pattern_") {
                let pattern =
                    ChannelSet::parse(name).ok_or_else(|| bad("unknown click pattern"))?;
                pattern_counts[pattern.bits() as usize] += value;
                sum += value;
            } else {
                return Err(bad("unknown field"));
            }
        }
        let trials = trials.ok_or(CorrelationError::BadTable {
            line: 0,
            reason: "missing trials row".to_string(),
        })?;
        if sum != trials {
            return Err(CorrelationError::BadTable {
                line: 0,
                reason: format!("pattern counts sum to {sum}, trials say {trials}"),
            });
        }
        Ok(CountAggregate {
            trials,
            pattern_counts,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum G2Kind {
    Cross,
    AutoUnheralded,
    AutoHeralded,
}

/// A normalized second-order correlation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Estimate {
    pub value: f64,
    pub std_err: f64,
    pub numerator_counts: u64,
    pub kind: G2Kind,
    /// Set when the numerator count is zero; `value` is then 0 and
    /// `std_err` is the value a single numerator count would produce
    /// (a Poisson upper-bound scale).
    pub degenerate: bool,
}

/// Relative Poisson error propagated over independent counts entering an
/// estimator: `sqrt(sum 1/N_k)` times the value. Any zero count yields an
/// infinite error.
pub fn g2_std_err(value: f64, counts: &[u64]) -> f64 {
    let rel: f64 = counts
        .iter()
        .map(|&n| if n == 0 { f64::INFINITY } else { 1.0 / n as f64 })
        .sum();
    value * rel.sqrt()
}

fn ratio_estimate(
    numerator: u64,
    scale: u64,
    denom_a: u64,
    denom_b: u64,
    kind: G2Kind,
) -> G2Estimate {
    let denominator = denom_a as f64 * denom_b as f64;
    if numerator == 0 {
        return G2Estimate {
            value: 0.0,
            std_err: scale as f64 / denominator,
            numerator_counts: 0,
            kind,
            degenerate: true,
        };
    }
    // One correctly rounded division over exact integer products keeps the
    // value exactly invariant under a common scaling of all counts.
    let value = (numerator as f64 * scale as f64) / denominator;
    G2Estimate {
        value,
        std_err: g2_std_err(value, &[numerator, scale, denom_a, denom_b]),
        numerator_counts: numerator,
        kind,
    degenerate: false,
    }
}

/// Cross correlation between two channel groups:
/// `N_ab * N_trials / (N_a * N_b)`.
pub fn cross_g2(
    agg: &CountAggregate,
    mode_a: ChannelSet,
    mode_b: ChannelSet,
) -> Result<G2Estimate, CorrelationError> {
    let n_a = agg.union_singles(mode_a);
    let n_b = agg.union_singles(mode_b);
    if n_a == 0 || n_b == 0 || agg.trials == 0 {
        return Err(CorrelationError::DegenerateCounts(format!(
            "cross({mode_a},{mode_b}): singles {n_a}/{n_b} over {} trials",
            agg.trials
        )));
    }
    let n_ab = agg.pair_coinc(mode_a, mode_b);
    let mut est = ratio_estimate(n_ab, agg.trials, n_a, n_b, G2Kind::Cross);
    // With the trial count in the scale position its Poisson term does not
    // belong in the error budget; recompute without it.
    if !est.degenerate {
        est.std_err = g2_std_err(est.value, &[n_ab, n_a, n_b]);
    }
    Ok(est)
}

/// Hanbury Brown-Twiss autocorrelation over the two arms of one half
/// beamsplitter: `N_ab * N_trials / (N_a * N_b)`.
pub fn auto_g2_unheralded(
    agg: &CountAggregate,
    arm_a: ChannelSet,
    arm_b: ChannelSet,
) -> Result<G2Estimate, CorrelationError> {
    let n_a = agg.union_singles(arm_a);
    let n_b = agg.union_singles(arm_b);
    if n_a == 0 || n_b == 0 || agg.trials == 0 {
        return Err(CorrelationError::DegenerateCounts(format!(
            "auto({arm_a},{arm_b}): singles {n_a}/{n_b} over {} trials",
            agg.trials
        )));
    }
    let n_ab = agg.pair_coinc(arm_a, arm_b);
    let mut est = ratio_estimate(n_ab, agg.trials, n_a, n_b, G2Kind::AutoUnheralded);
    if !est.degenerate {
        est.std_err = g2_std_err(est.value, &[n_ab, n_a, n_b]);
    }
    Ok(est)
}

/// Heralded autocorrelation: `N_abh * N_h / (N_ah * N_bh)`.
///
/// Zero triple coincidences are not an error; the estimate is 0 with the
/// single-count Poisson bound as its error and the degenerate flag set.
pub fn auto_g2_heralded(
    agg: &CountAggregate,
    arm_a: ChannelSet,
    arm_b: ChannelSet,
    herald: ChannelSet,
) -> Result<G2Estimate, CorrelationError> {
    let n_h = agg.union_singles(herald);
    let n_ah = agg.pair_coinc(arm_a, herald);
    let n_bh = agg.pair_coinc(arm_b, herald);
    if n_ah == 0 || n_bh == 0 {
        return Err(CorrelationError::DegenerateCounts(format!(
            "heralded({arm_a},{arm_b}|{herald}): heralded singles {n_ah}/{n_bh}"
        )));
    }
    let n_abh = agg.triple_coinc(arm_a, arm_b, herald);
    let mut est = ratio_estimate(n_abh, n_h, n_ah, n_bh, G2Kind::AutoHeralded);
    if !est.degenerate {
        est.std_err = g2_std_err(est.value, &[n_abh, n_h, n_ah, n_bh]);
    }
    Ok(est)
}

/// Bootstrap standard error: resamples chunk aggregates (typically one per
/// MOT cycle) with replacement and takes the spread of the re-estimated
/// values. Cross-checks the Poisson propagation of [`g2_std_err`].
pub fn bootstrap_std_err<F, R>(
    chunks: &[CountAggregate],
    estimator: F,
    resamples: usize,
    rng: &mut R,
) -> Result<f64, CorrelationError>
where
    F: Fn(&CountAggregate) -> Result<G2Estimate, CorrelationError>,
    R: Rng + ?Sized,
{
    if chunks.is_empty() || resamples < 2 {
        return Err(CorrelationError::DegenerateCounts(
            "bootstrap needs chunks and at least two resamples".to_string(),
        ));
    }
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut merged = CountAggregate::new();
        for _ in 0..chunks.len() {
            merged.merge(&chunks[rng.random_range(0..chunks.len())]);
        }
        if let Ok(est) = estimator(&merged) {
            values.push(est.value);
        }
    }
    if values.len() < resamples / 2 {
        return Err(CorrelationError::DegenerateCounts(
            "most bootstrap resamples were degenerate".to_string(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt())
}

/// The correlation statistics of one experiment, keyed by the detection
/// configuration. Entries are absent when their channels saw no counts.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CorrelationSet {
    pub s_asv: Option<G2Estimate>,
    pub s_ast: Option<G2Estimate>,
    pub s_s: Option<G2Estimate>,
    pub asv_asv: Option<G2Estimate>,
    pub ast_ast: Option<G2Estimate>,
    pub s_s_given_asv: Option<G2Estimate>,
    pub s_s_given_ast: Option<G2Estimate>,
    pub asv_asv_given_s: Option<G2Estimate>,
    pub ast_ast_given_s: Option<G2Estimate>,
}

pub const STATISTIC_NAMES: [&str; 9] = [
    "s_asv",
    "s_ast",
    "s_s",
    "asv_asv",
    "ast_ast",
    "s_s_given_asv",
    "s_s_given_ast",
    "asv_asv_given_s",
    "ast_ast_given_s",
];

impl CorrelationSet {
    /// Computes every statistic whose channels carry counts.
    pub fn from_aggregate(agg: &CountAggregate) -> CorrelationSet {
        use ChannelSet as C;
        CorrelationSet {
            s_asv: cross_g2(agg, C::MODE_S, C::MODE_ASV).ok(),
            s_ast: cross_g2(agg, C::MODE_S, C::MODE_AST).ok(),
            s_s: auto_g2_unheralded(agg, C::DS1, C::DS2).ok(),
            asv_asv: auto_g2_unheralded(agg, C::DV1, C::DV2).ok(),
            ast_ast: auto_g2_unheralded(agg, C::DT1, C::DT2).ok(),
            s_s_given_asv: auto_g2_heralded(agg, C::DS1, C::DS2, C::MODE_ASV).ok(),
            s_s_given_ast: auto_g2_heralded(agg, C::DS1, C::DS2, C::MODE_AST).ok(),
            asv_asv_given_s: auto_g2_heralded(agg, C::DV1, C::DV2, C::MODE_S).ok(),
            ast_ast_given_s: auto_g2_heralded(agg, C::DT1, C::DT2, C::MODE_S).ok(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&G2Estimate> {
        match name {
            "s_asv" => self.s_asv.as_ref(),
            "s_ast" => self.s_ast.as_ref(),
            "s_s" => self.s_s.as_ref(),
            "asv_asv" => self.asv_asv.as_ref(),
            "ast_ast" => self.ast_ast.as_ref(),
            "s_s_given_asv" => self.s_s_given_asv.as_ref(),
            "s_s_given_ast" => self.s_s_given_ast.as_ref(),
            "asv_asv_given_s" => self.asv_asv_given_s.as_ref(),
            "ast_ast_given_s" => self.ast_ast_given_s.as_ref(),
            _ => None,
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut Option<G2Estimate>> {
        match name {
            "s_asv" => Some(&mut self.s_asv),
            "s_ast" => Some(&mut self.s_ast),
            "s_s" => Some(&mut self.s_s),
            "asv_asv" => Some(&mut self.asv_asv),
            "ast_ast" => Some(&mut self.ast_ast),
            "s_s_given_asv" => Some(&mut self.s_s_given_asv),
            "s_s_given_ast" => Some(&mut self.s_s_given_ast),
            "asv_asv_given_s" => Some(&mut self.asv_asv_given_s),
            "ast_ast_given_s" => Some(&mut self.ast_ast_given_s),
            _ => None,
        }
    }

    /// Present entries in the fixed table order.
    pub fn entries(&self) -> Vec<(&'static str, &G2Estimate)> {
        STATISTIC_NAMES
            .iter()
            .filter_map(|name| self.get(name).map(|est| (*name, est)))
            .collect()
    }

    /// Fills statistics missing here from another set (used to combine the
    /// direct-detection and converted-detection runs of a report).
    pub fn fill_missing_from(&mut self, other: &CorrelationSet) {
        for name in STATISTIC_NAMES {
            let slot = self.slot(name).unwrap();
            if slot.is_none() {
                *slot = other.get(name).copied();
            }
        }
    }

    /// Flat CSV: `name,value,std_err,numerator_counts`, rows in the fixed
    /// statistic order.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str("name,value,std_err,numerator_counts\n");
        for (name, est) in self.entries() {
            out.push_str(&format!(
                "{name},{},{},{}\n",
                est.value, est.std_err, est.numerator_counts
            ));
        }
        out
    }

    /// One JSON object per present statistic, one per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (name, est) in self.entries() {
            let mut obj = serde_json::to_value(est).expect("estimate serializes");
            obj.as_object_mut()
                .unwrap()
                .insert("name".to_string(), serde_json::Value::String(name.to_string()));
            out.push_str(&obj.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<CorrelationSet, CorrelationError> {
        let mut set = CorrelationSet::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("name,") {
                continue;
            }
            let bad = |reason: &str| CorrelationError::BadTable {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad("expected name,value,std_err,numerator_counts"));
            }
            let name = fields[0].trim();
            let value: f64 = fields[1].trim().parse().map_err(|_| bad("bad value"))?;
            let std_err: f64 = fields[2].trim().parse().map_err(|_| bad("bad std_err"))?;
            let numerator_counts: u64 =
                fields[3].trim().parse().map_err(|_| bad("bad numerator_counts"))?;
            let kind = if name.contains("given") {
                G2Kind::AutoHeralded
            } else if name == "s_asv" || name == "s_ast" {
                G2Kind::Cross
            } else {
                G2Kind::AutoUnheralded
            };
            let slot = set.slot(name).ok_or_else(|| bad("unknown statistic name"))?;
            *slot = Some(G2Estimate {
                value,
                std_err,
                numerator_counts,
                kind,
                degenerate: numerator_counts == 0,
            });
        }
        Ok(set)
    }
}
