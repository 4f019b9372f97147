//! Command-line pipelines over the library: simulation, tag-file analysis,
//! efficiency estimation, noise-mixing predictions and combined reports.
//!
//! All table outputs are CSV with a header row, all structured outputs
//! JSON; every output file embeds the SHA-256 hash of the config it was
//! produced from, and identical (config, seed) pairs produce byte-identical
//! outputs. Errors are reported as machine-readable JSON on stderr.

use crate::channel::ChannelSet;
use crate::config::{ConfigError, RunConfig};
use crate::correlation::{CorrelationError, CorrelationSet, CountAggregate};
use crate::estimation::{self, EstimationError};
use crate::hom::{self, HomError};
use crate::montecarlo::{sample_trial, Experiment, RunOptions, SimError};
use crate::noisemodel::{NoiseMix, NoiseModelError, ScenarioPrediction};
use crate::timetag::{self, TimeTagError};
use crate::{atomic, noisemodel};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Once;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    TimeTag(#[from] TimeTagError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    NoiseModel(#[from] NoiseModelError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::TimeTag(_) => "timetag",
            CliError::Correlation(_) => "correlation",
            CliError::NoiseModel(_) => "noisemodel",
            CliError::Estimation(_) => "estimation",
            CliError::Sim(_) => "simulation",
            CliError::Hom(_) => "hom",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
        }
    }

    /// Machine-readable error form printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn as_bool(self) -> bool {
        matches!(self, OnOff::On)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "phlab", version, about = "Heralded photon-pair simulation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Monte Carlo experiment and write the count aggregate.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Number of write slots; defaults to rng.trials from the config.
        #[arg(long)]
        trials: Option<u64>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the synthetic time-tag stream to this file
        /// (.csv for text, anything else for the binary format).
        #[arg(long)]
        emit_timetags: Option<PathBuf>,
        /// Route the heralds through the frequency converter.
        #[arg(long, value_enum, default_value = "off")]
        qfc: OnOff,
        /// Aggregate CSV destination; stdout when omitted.
        #[arg(long)]
        aggregate_out: Option<PathBuf>,
    },
    /// Parse tag files, apply the windows and compute correlations.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Tag files to parse and merge.
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        /// Analyzed slot count; defaults to rng.trials from the config.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        histogram_out: Option<PathBuf>,
        /// Correlation CSV destination; stdout when omitted.
        #[arg(long)]
        correlations_out: Option<PathBuf>,
    },
    /// Infer excitation probability and path efficiencies from an
    /// aggregate CSV.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        aggregate: PathBuf,
        /// JSON destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the noise mix from a correlation table and predict scenarios.
    Predict {
        #[arg(long)]
        config: PathBuf,
        /// Correlation CSV (as written by analyze or report).
        #[arg(long)]
        correlations: PathBuf,
        /// Prediction CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hong-Ou-Mandel visibility, from a measured autocorrelation or from
    /// a simulated heralded source.
    Hom {
        /// Autocorrelation of each input photon.
        #[arg(long, conflicts_with = "simulate")]
        g2: Option<f64>,
        /// Sample a heralded source from the config instead.
        #[arg(long, requires = "config")]
        simulate: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Heralded pairs to sample in --simulate mode.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, value_enum, default_value = "off")]
        qfc: OnOff,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the hyperfine transition matrices, intensity ratio and
    /// polarization-selection loss.
    Atomic {
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chain simulate -> analyze -> estimate -> predict into a report
    /// directory.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to io.output_dir from the config, then ".".
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn init_thread_pool() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Ok(text) = std::env::var("PHLAB_THREADS") {
            if let Ok(threads) = text.parse::<usize>() {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads.max(1))
                    .build_global();
            }
        }
    });
}

fn config_hash(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, content).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn predictions_csv(
    comment: &str,
    predictions: &[ScenarioPrediction],
) -> String {
    let mut out = format!("# {comment}\n");
    out.push_str("scenario,zeta,g2_noise,g2_ss_given_ast,g2_ast_ast_given_s\n");
    for p in predictions {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.label, p.zeta, p.g2_noise, p.g2_ss_given_ast, p.g2_ast_ast_given_s
        ));
    }
    out
}

fn estimate_json(
    config: &RunConfig,
    hash: &str,
    aggregate: &CountAggregate,
) -> Result<serde_json::Value, CliError> {
    let estimate = estimation::estimate_from_aggregate(aggregate)?;
    let collection = match (
        estimate.eta_asv,
        config.detectors.quantum_efficiency,
        config.detectors.filter_transmittance,
    ) {
        (Some(eta), Some(qe), Some(ft)) => {
            Some(estimation::collection_probability(eta, qe, ft)?)
        }
        _ => None,
    };
    let mut value = serde_json::to_value(estimate).expect("estimate serializes");
    let obj = value.as_object_mut().unwrap();
    obj.insert("collection_probability".into(), serde_json::json!(collection));
    obj.insert("config_hash".into(), serde_json::json!(hash));
    Ok(value)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    init_thread_pool();
    match cli.command {
        Command::Simulate {
            config,
            trials,
            seed,
            emit_timetags,
            qfc,
            aggregate_out,
        } => {
            let hash = config_hash(&config)?;
            let config = RunConfig::load(&config)?;
            let mut plan = config.rng_plan();
            if let Some(seed) = seed {
                plan.master_seed = seed;
            }
            let trials = trials.unwrap_or(config.rng.trials);
            let experiment = Experiment {
                source: config.source_params()?,
                windows: config.window_config(),
                nuisance: config.nuisance_peaks(),
            };
            let opts = RunOptions::new(trials)
                .qfc(qfc.as_bool())
                .emit_tags(emit_timetags.is_some());
            let output = experiment.run(&plan, &opts)?;
            if let Some(tag_path) = emit_timetags {
                timetag::write_records(&tag_path, &output.tags)?;
            }
            let comment = format!("config_hash={hash} seed={}", plan.master_seed);
            write_output(
                aggregate_out.as_deref(),
                &output.aggregate.to_csv(Some(&comment)),
            )
        }
        Command::Analyze {
            config,
            input,
            trials,
            histogram_out,
            correlations_out,
        } => {
            let hash = config_hash(&config)?;
            let config = RunConfig::load(&config)?;
            let windows = config.window_config();
            windows.validate()?;
            let trials = trials.unwrap_or(config.rng.trials);
            let mut records = Vec::new();
            for path in &input {
                records.extend(timetag::read_records(path)?);
            }
            if let Some(hist_path) = histogram_out {
                let hist = timetag::histogram(records.iter().copied(), windows.histogram_bin_ns)?;
                let comment = format!("config_hash={hash}");
                write_output(Some(&hist_path), &hist.to_csv(Some(&comment)))?;
            }
            let flags = timetag::window_select(records, &windows);
            let aggregate = timetag::accumulate(&flags, trials)?;
            let set = CorrelationSet::from_aggregate(&aggregate);
            let comment = format!("config_hash={hash}");
            write_output(correlations_out.as_deref(), &set.to_csv(Some(&comment)))
        }
        Command::Estimate {
            config,
            aggregate,
            out,
        } => {
            let hash = config_hash(&config)?;
            let config = RunConfig::load(&config)?;
            let aggregate = CountAggregate::from_csv(&read_to_string(&aggregate)?)?;
            let value = estimate_json(&config, &hash, &aggregate)?;
            write_output(out.as_deref(), &format!("{value}\n"))
        }
        Command::Predict {
            config,
            correlations,
            out,
        } => {
            let hash = config_hash(&config)?;
            let config = RunConfig::load(&config)?;
            let set = CorrelationSet::from_csv(&read_to_string(&correlations)?)?;
            let mix = NoiseMix::from_observed(&set)?;
            let mut predictions = Vec::new();
            for spec in config.scenario_specs() {
                predictions.push(noisemodel::predict_scenario(&mix, &spec)?);
            }
            let comment = format!("config_hash={hash}");
            write_output(out.as_deref(), &predictions_csv(&comment, &predictions))
        }
        Command::Hom {
            g2,
            simulate,
            config,
            trials,
            qfc,
            seed,
        } => {
            if let Some(g2) = g2 {
                if g2 < 0.0 {
                    return Err(CliError::Usage("--g2 must be non-negative".into()));
                }
                let value = serde_json::json!({
                    "g2": g2,
                    "visibility": hom::visibility_from_g2(g2),
                });
                return write_output(None, &format!("{value}\n"));
            }
            if !simulate {
                return Err(CliError::Usage(
                    "pass --g2 <value> or --simulate with a config".into(),
                ));
            }
            let config_path = config.expect("clap enforces --config with --simulate");
            let config = RunConfig::load(&config_path)?;
            let params = config.source_params()?;
            params.validate()?;
            let qfc = qfc.as_bool();
            let mut plan = config.rng_plan();
            if let Some(seed) = seed {
                plan.master_seed = seed;
            }
            let mut rng = plan.batch_rng(0);
            let mut heralded_photons = move || loop {
                let outcome = sample_trial(&params, qfc, &mut rng);
                if outcome.clicks.intersects(ChannelSet::MODE_S) {
                    return if qfc { outcome.n_ast } else { outcome.n_asv } as u64;
                }
            };
            let result = hom::visibility_from_moments(
                |_| (heralded_photons(), heralded_photons()),
                trials,
                &mut plan.tag_rng(0),
            )?;
            let value = serde_json::json!({
                "trials": trials,
                "qfc": qfc,
                "result": result,
            });
            write_output(None, &format!("{value}\n"))
        }
        Command::Atomic { format, out } => {
            let set = atomic::build_matrices();
            let selection = atomic::polarization_ratio_and_loss();
            let content = match format {
                OutputFormat::Json => {
                    let value = serde_json::json!({
                        "ratio": selection.ratio,
                        "loss": selection.loss,
                        "matrices": {
                            "excitation": set.excitation.to_rows(),
                            "emission_sigma_plus": set.emission_sigma_plus.to_rows(),
                            "emission_sigma_minus": set.emission_sigma_minus.to_rows(),
                            "read_sigma_plus": set.read_sigma_plus.to_rows(),
                            "readout_emission": set.readout_emission.to_rows(),
                        },
                    });
                    format!("{value}\n")
                }
                OutputFormat::Csv => {
                    let mut text = String::from("field,value\n");
                    text.push_str(&format!("ratio,{}\n", selection.ratio));
                    text.push_str(&format!("loss,{}\n", selection.loss));
                    let matrices = [
                        ("excitation", &set.excitation),
                        ("emission_sigma_plus", &set.emission_sigma_plus),
                        ("emission_sigma_minus", &set.emission_sigma_minus),
                        ("read_sigma_plus", &set.read_sigma_plus),
                        ("readout_emission", &set.readout_emission),
                    ];
                    text.push_str("matrix,row,entries\n");
                    for (name, matrix) in matrices {
                        for (row_idx, row) in matrix.to_rows().iter().enumerate() {
                            let entries: Vec<String> =
                                row.iter().map(|e| e.to_string()).collect();
                            text.push_str(&format!(
                                "{name},{row_idx},{}\n",
                                entries.join(";")
                            ));
                        }
                    }
                    text
                }
            };
            write_output(out.as_deref(), &content)
        }
        Command::Report {
            config: config_path,
            seed,
            out_dir,
        } => {
            let hash = config_hash(&config_path)?;
            let config = RunConfig::load(&config_path)?;
            let dir = out_dir
                .or_else(|| config.io.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;

            let mut plan = config.rng_plan();
            if let Some(seed) = seed {
                plan.master_seed = seed;
            }
            let experiment = Experiment {
                source: config.source_params()?,
                windows: config.window_config(),
                nuisance: config.nuisance_peaks(),
            };
            let trials = config.rng.trials;

            // Direct-detection run, then the converted run on its own seed
            // stream, exactly as two consecutive hardware configurations.
            let direct = experiment.run(&plan, &RunOptions::new(trials))?;
            let mut qfc_plan = plan;
            qfc_plan.master_seed = plan.master_seed.wrapping_add(1);
            let converted = experiment.run(&qfc_plan, &RunOptions::new(trials).qfc(true))?;

            let mut table = CorrelationSet::from_aggregate(&direct.aggregate);
            table.fill_missing_from(&CorrelationSet::from_aggregate(&converted.aggregate));
            let comment = format!("config_hash={hash} seed={}", plan.master_seed);
            write_output(
                Some(&dir.join("correlations.csv")),
                &table.to_csv(Some(&comment)),
            )?;

            let estimate = estimate_json(&config, &hash, &direct.aggregate)?;
            write_output(Some(&dir.join("efficiencies.json")), &format!("{estimate}\n"))?;

            let (predictions, solved) = match NoiseMix::from_observed(&table) {
                Ok(mix) => {
                    let mut rows = Vec::new();
                    for spec in config.scenario_specs() {
                        rows.push(noisemodel::predict_scenario(&mix, &spec)?);
                    }
                    (predictions_csv(&comment, &rows), Some(mix))
                }
                Err(e) => (
                    format!(
                        "# {comment}\n# predictions unavailable: {e}\nscenario,zeta,g2_noise,g2_ss_given_ast,g2_ast_ast_given_s\n"
                    ),
                    None,
                ),
            };
            write_output(Some(&dir.join("predictions.csv")), &predictions)?;

            let provenance = serde_json::json!({
                "tool": "phlab",
                "version": env!("CARGO_PKG_VERSION"),
                "config_hash": hash,
                "seed": plan.master_seed,
                "trials": trials,
                "zeta": solved.map(|m| m.zeta),
                "g2_noise": solved.map(|m| m.g2_noise),
            });
            write_output(Some(&dir.join("provenance.json")), &format!("{provenance}\n"))
        }
    }
}
