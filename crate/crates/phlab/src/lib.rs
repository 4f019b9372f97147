//! Simulation and analysis toolkit for heralded photon-pair experiments
//! with quantum frequency conversion.
//!
//! The crate models a write/read atomic-ensemble photon-pair source whose
//! herald photons can be converted to the telecom band before detection,
//! and the full counting analysis applied to such an experiment.
//!
//! # Capabilities
//!
//! - [`montecarlo`] — trial-by-trial simulation: geometric pair statistics,
//!   binomial losses, additive converter noise, beamsplitters, dark counts
//!   and threshold detection, with deterministic batch-parallel execution.
//! - [`correlation`] — cross, Hanbury Brown-Twiss and heralded
//!   second-order correlation estimators over per-slot click counts, with
//!   Poisson-propagated and bootstrap uncertainties.
//! - [`noisemodel`] — the closed-form mixing algebra for additive
//!   conversion noise, its inversion to the signal-to-noise ratio and noise
//!   autocorrelation, and what-if scenario predictions.
//! - [`timetag`] — a compact binary time-tag format with a streaming
//!   parser, slot histograms and window-based coincidence counting.
//! - [`hom`] — Hong-Ou-Mandel visibility from a measured autocorrelation
//!   or from normal-ordered moment sampling.
//! - [`atomic`] — hyperfine transition-matrix products giving the
//!   polarization-selection loss of the heralds.
//! - [`estimation`] — excitation-probability and collection-efficiency
//!   inference from singles and coincidence probabilities.
//!
//! # Examples
//!
//! Each capability has a runnable example:
//!
//! ```bash
//! cargo run --release -p phlab --example simulate_pairs
//! cargo run --release -p phlab --example qfc_noise_mixing
//! cargo run --release -p phlab --example hom_visibility
//! cargo run --release -p phlab --example transition_ratio
//! cargo run --release -p phlab --example collection_efficiency
//! cargo run --release -p phlab --example timetag_pipeline
//! cargo run --release -p phlab --example excitation_sweep
//! ```
//!
//! The same functionality is scriptable through the thin `phlab` binary
//! (`simulate`, `analyze`, `estimate`, `predict`, `hom`, `atomic`,
//! `report`), driven by a TOML config; see the repository README.

pub mod atomic;
pub mod channel;
pub mod cli;
pub mod config;
pub mod correlation;
pub mod estimation;
pub mod hom;
pub mod montecarlo;
pub mod noisemodel;
pub mod timetag;

pub use channel::{Channel, ChannelSet, Mode};
pub use config::RunConfig;
pub use correlation::{CorrelationSet, CountAggregate, G2Estimate, G2Kind};
pub use montecarlo::{Experiment, RngPlan, RunOptions, SourceParams};
pub use noisemodel::{NoiseMix, ScenarioSpec};
pub use timetag::{TimeTagRecord, Window, WindowConfig};
