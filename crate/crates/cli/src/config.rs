//! Config-file loading and flag/file/default resolution.
//!
//! The config file is flat JSON whose keys mirror the flag names; flags
//! override file values, file values override defaults. Unknown keys are
//! rejected.

use serde::Deserialize;
use spikewatch::detect::{DetectorConfig, TrackerSpec, DEFAULT_GAIN_MV};
use spikewatch::encode::DEFAULT_EPSILON_SD;
use spikewatch::neuron::SpikeMode;
use std::path::{Path, PathBuf};

/// Error classes mapped to process exit codes: configuration problems exit
/// with 2, data problems with 3.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Data(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) => 3,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "configuration error: {msg}"),
            AppError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

pub fn data_err(msg: impl std::fmt::Display) -> AppError {
    AppError::Data(msg.to_string())
}

/// Flat config file; every key mirrors a flag name.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n_inputs: Option<usize>,
    pub interval_ms: Option<f64>,
    pub theta_mv: Option<f64>,
    pub tau_ms: Option<f64>,
    pub rho_max: Option<f64>,
    pub weight: Option<f64>,
    pub gain_mv: Option<f64>,
    pub tracker: Option<String>,
    pub alpha: Option<f64>,
    pub window_k: Option<usize>,
    pub warmup: Option<u64>,
    pub epsilon_sd: Option<f64>,
    pub v_reset_mv: Option<f64>,
    pub spike_mode: Option<String>,
    pub seed: Option<u64>,
    pub leak: Option<bool>,
    pub carry_over: Option<bool>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub dataset_key: Option<String>,
    pub alphas: Option<Vec<f64>>,
}

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig, AppError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| config_err(format!("invalid config {}: {e}", path.display())))
}

/// Detector-facing flags shared by `detect`, `sweep` and `encode`.
#[derive(Debug, Default, clap::Args)]
pub struct DetectorArgs {
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Print the fully resolved configuration and exit
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Number of input neurons (lags)
    #[arg(long)]
    pub n_inputs: Option<usize>,

    /// Simulation interval per data point, ms
    #[arg(long)]
    pub interval_ms: Option<f64>,

    /// Output neuron firing threshold, mV
    #[arg(long)]
    pub theta_mv: Option<f64>,

    /// Output neuron decay constant, ms
    #[arg(long)]
    pub tau_ms: Option<f64>,

    /// Maximal firing rate, spikes/ms
    #[arg(long)]
    pub rho_max: Option<f64>,

    /// Synaptic weight
    #[arg(long)]
    pub weight: Option<f64>,

    /// Per-spike membrane increment, mV
    #[arg(long)]
    pub gain_mv: Option<f64>,

    /// Statistics tracker: cumulative, windowed or ewma
    #[arg(long)]
    pub tracker: Option<String>,

    /// Forgetting rate for the ewma tracker (implies --tracker ewma)
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Window size for the windowed tracker (implies --tracker windowed)
    #[arg(long)]
    pub window_k: Option<usize>,

    /// Samples emitting rate 0 at stream start (default depends on tracker)
    #[arg(long)]
    pub warmup: Option<u64>,

    /// Floor for the standard-deviation divisor
    #[arg(long)]
    pub epsilon_sd: Option<f64>,

    /// Post-spike reset level, mV (default -0.1 * theta)
    #[arg(long)]
    pub v_reset_mv: Option<f64>,

    /// Spike generation: deterministic or poisson
    #[arg(long)]
    pub spike_mode: Option<String>,

    /// RNG seed (required for poisson mode); echoed into output headers
    #[arg(long)]
    pub seed: Option<u64>,

    /// Disable the output neuron's membrane leak
    #[arg(long)]
    pub no_leak: bool,

    /// Reset the output membrane at every step boundary
    #[arg(long)]
    pub no_carry_over: bool,

    /// Input series CSV (timestamp,value)
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Output file
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Anomaly-window label JSON
    #[arg(long)]
    pub labels: Option<PathBuf>,

    /// Dataset key when the label file maps keys to windows
    #[arg(long)]
    pub dataset_key: Option<String>,
}

/// Everything a command needs after precedence resolution.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub detector: DetectorConfig,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub dataset_key: Option<String>,
    pub alphas: Option<Vec<f64>>,
}

fn parse_tracker(
    name: Option<&str>,
    alpha: Option<f64>,
    window_k: Option<usize>,
) -> Result<TrackerSpec, AppError> {
    let spec = match name {
        Some("cumulative") => TrackerSpec::Cumulative,
        Some("windowed") => TrackerSpec::Windowed {
            k: window_k.ok_or_else(|| config_err("--tracker windowed requires --window-k"))?,
        },
        Some("ewma") => TrackerSpec::Ewma {
            alpha: alpha.ok_or_else(|| config_err("--tracker ewma requires --alpha"))?,
        },
        Some(other) => {
            return Err(config_err(format!(
                "unknown tracker {other:?}; expected cumulative, windowed or ewma"
            )))
        }
        // no explicit tracker: infer from whichever parameter was given
        None => match (alpha, window_k) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "--alpha and --window-k are mutually exclusive without an explicit --tracker",
                ))
            }
            (Some(alpha), None) => TrackerSpec::Ewma { alpha },
            (None, Some(k)) => TrackerSpec::Windowed { k },
            (None, None) => TrackerSpec::Cumulative,
        },
    };
    match spec {
        TrackerSpec::Ewma { alpha } if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) => {
            Err(config_err(format!("alpha must lie in (0, 1), got {alpha}")))
        }
        TrackerSpec::Windowed { k } if k < 2 => {
            Err(config_err(format!("window size must be >= 2, got {k}")))
        }
        ok => Ok(ok),
    }
}

fn parse_spike_mode(name: Option<&str>) -> Result<SpikeMode, AppError> {
    match name {
        None | Some("deterministic") => Ok(SpikeMode::Deterministic),
        Some("poisson") => Ok(SpikeMode::Poisson),
        Some(other) => Err(config_err(format!(
            "unknown spike mode {other:?}; expected deterministic or poisson"
        ))),
    }
}

impl DetectorArgs {
    /// Apply precedence (flags over file over defaults) and validate.
    pub fn resolve(&self) -> Result<Resolved, AppError> {
        let file = load_file_config(self.config.as_deref())?;
        let defaults = DetectorConfig::default();

        let tracker_name = self
            .tracker
            .clone()
            .or(file.tracker.clone());
        let alpha = self.alpha.or(file.alpha);
        let window_k = self.window_k.or(file.window_k);
        let tracker = parse_tracker(tracker_name.as_deref(), alpha, window_k)?;

        let spike_mode_name = self.spike_mode.clone().or(file.spike_mode.clone());
        let spike_mode = parse_spike_mode(spike_mode_name.as_deref())?;

        let detector = DetectorConfig {
            n_inputs: self.n_inputs.or(file.n_inputs).unwrap_or(defaults.n_inputs),
            interval_ms: self
                .interval_ms
                .or(file.interval_ms)
                .unwrap_or(defaults.interval_ms),
            theta_mv: self.theta_mv.or(file.theta_mv).unwrap_or(defaults.theta_mv),
            tau_ms: self.tau_ms.or(file.tau_ms).unwrap_or(defaults.tau_ms),
            rho_max: self.rho_max.or(file.rho_max).unwrap_or(defaults.rho_max),
            weight: self.weight.or(file.weight).unwrap_or(defaults.weight),
            gain_mv: self.gain_mv.or(file.gain_mv).unwrap_or(DEFAULT_GAIN_MV),
            tracker,
            spike_mode,
            seed: self.seed.or(file.seed),
            warmup: self.warmup.or(file.warmup),
            epsilon_sd: self
                .epsilon_sd
                .or(file.epsilon_sd)
                .unwrap_or(DEFAULT_EPSILON_SD),
            v_reset_mv: self.v_reset_mv.or(file.v_reset_mv),
            leak: if self.no_leak { false } else { file.leak.unwrap_or(true) },
            carry_over: if self.no_carry_over {
                false
            } else {
                file.carry_over.unwrap_or(true)
            },
        };

        Ok(Resolved {
            detector,
            input: self.input.clone().or(file.input),
            out: self.out.clone().or(file.out),
            labels: self.labels.clone().or(file.labels),
            dataset_key: self.dataset_key.clone().or(file.dataset_key),
            alphas: file.alphas,
        })
    }
}

impl Resolved {
    /// Effective warmup after tracker-dependent default resolution.
    pub fn effective_warmup(&self) -> u64 {
        self.detector.warmup.unwrap_or(match self.detector.tracker {
            TrackerSpec::Cumulative => 10,
            TrackerSpec::Windowed { k } => k as u64,
            TrackerSpec::Ewma { alpha } => (1.0 / alpha).ceil() as u64,
        })
    }

    pub fn tracker_description(&self) -> String {
        match self.detector.tracker {
            TrackerSpec::Cumulative => "cumulative".to_string(),
            TrackerSpec::Windowed { k } => format!("windowed k={k}"),
            TrackerSpec::Ewma { alpha } => format!("ewma alpha={alpha:.4}"),
        }
    }

    /// JSON view of the fully resolved configuration.
    pub fn as_json(&self) -> serde_json::Value {
        let d = &self.detector;
        let (tracker, alpha, window_k) = match d.tracker {
            TrackerSpec::Cumulative => ("cumulative", None, None),
            TrackerSpec::Windowed { k } => ("windowed", None, Some(k)),
            TrackerSpec::Ewma { alpha } => ("ewma", Some(alpha), None),
        };
        serde_json::json!({
            "n_inputs": d.n_inputs,
            "interval_ms": d.interval_ms,
            "theta_mv": d.theta_mv,
            "tau_ms": d.tau_ms,
            "rho_max": d.rho_max,
            "weight": d.weight,
            "gain_mv": d.gain_mv,
            "tracker": tracker,
            "alpha": alpha,
            "window_k": window_k,
            "warmup": self.effective_warmup(),
            "epsilon_sd": d.epsilon_sd,
            "v_reset_mv": d.v_reset_mv.unwrap_or(-0.1 * d.theta_mv),
            "spike_mode": match d.spike_mode {
                SpikeMode::Deterministic => "deterministic",
                SpikeMode::Poisson => "poisson",
            },
            "seed": d.seed,
            "leak": d.leak,
            "carry_over": d.carry_over,
            "input": self.input,
            "out": self.out,
            "labels": self.labels,
            "dataset_key": self.dataset_key,
            "alphas": self.alphas,
        })
    }

    /// Metadata comment lines for output files.
    pub fn comment_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("tool: spikewatch {}", env!("CARGO_PKG_VERSION")),
            format!("tracker: {}", self.tracker_description()),
            format!(
                "mode: {}",
                match self.detector.spike_mode {
                    SpikeMode::Deterministic => "deterministic",
                    SpikeMode::Poisson => "poisson",
                }
            ),
        ];
        if let Some(seed) = self.detector.seed {
            lines.push(format!("seed: {seed}"));
        }
        lines
    }
}
