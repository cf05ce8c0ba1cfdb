//! Streaming anomaly detector: lagged adaptive encoders driving one output
//! neuron.
//!
//! Each arriving value updates one shared statistics tracker, then the last
//! `n_inputs` values are re-encoded against the current statistics, one lag
//! per input neuron. Every rate becomes a spike train over the step's
//! simulation interval, all trains are merged in time order, and the merged
//! events drive a single output LIF neuron whose membrane persists across
//! steps. Any output spike inside the interval flags the step as anomalous.

use crate::encode::{default_warmup, AdaptiveEncoder, EncodeError, DEFAULT_EPSILON_SD};
use crate::neuron::{generate_spikes, LifNeuron, NeuronError, SpikeMode};
use crate::stats::{StatsError, StatsTracker};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("non-finite value {0} rejected")]
    NonFiniteValue(f64),
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Neuron(#[from] NeuronError),
}

/// Which statistics tracker the detector's encoder uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackerSpec {
    Cumulative,
    Windowed { k: usize },
    Ewma { alpha: f64 },
}

impl TrackerSpec {
    pub fn build(&self) -> Result<StatsTracker, StatsError> {
        match *self {
            TrackerSpec::Cumulative => Ok(StatsTracker::cumulative()),
            TrackerSpec::Windowed { k } => StatsTracker::windowed(k),
            TrackerSpec::Ewma { alpha } => StatsTracker::ewma(alpha),
        }
    }
}

/// Full parameter set of one detector instance.
#[derive(Debug, Clone)]
pub struct DetectorConfig {
    /// Number of input neurons; neuron `j` sees the value `j` steps back.
    pub n_inputs: usize,
    /// Simulation time allotted to one data point, in ms.
    pub interval_ms: f64,
    /// Output neuron firing threshold, mV above rest.
    pub theta_mv: f64,
    /// Output neuron membrane decay constant, ms.
    pub tau_ms: f64,
    /// Absolute firing-rate ceiling for the input neurons, spikes/ms.
    pub rho_max: f64,
    /// Synaptic weight from every input neuron to the output.
    pub weight: f64,
    /// Per-spike membrane increment, mV. The default keeps steady
    /// background rates below threshold while sustained near-maximal drive
    /// from all inputs crosses it within two intervals.
    pub gain_mv: f64,
    pub tracker: TrackerSpec,
    pub spike_mode: SpikeMode,
    /// Base RNG seed; required in Poisson mode.
    pub seed: Option<u64>,
    /// Samples emitting rate 0 at stream start; `None` selects the
    /// tracker-appropriate default.
    pub warmup: Option<u64>,
    /// Floor for the standard-deviation divisor, input units.
    pub epsilon_sd: f64,
    /// Post-spike reset level, mV; `None` selects `-0.1 * theta_mv`.
    pub v_reset_mv: Option<f64>,
    /// Disable to run the output neuron without membrane leak.
    pub leak: bool,
    /// Whether the output membrane carries over between steps.
    pub carry_over: bool,
}

pub const DEFAULT_GAIN_MV: f64 = 0.8;

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            n_inputs: 10,
            interval_ms: 10.0,
            theta_mv: 40.0,
            tau_ms: 10.0,
            rho_max: 0.5,
            weight: 1.0,
            gain_mv: DEFAULT_GAIN_MV,
            tracker: TrackerSpec::Cumulative,
            spike_mode: SpikeMode::Deterministic,
            seed: None,
            warmup: None,
            epsilon_sd: DEFAULT_EPSILON_SD,
            v_reset_mv: None,
            leak: true,
            carry_over: true,
        }
    }
}

impl DetectorConfig {
    /// Same configuration with an exponentially weighted tracker at `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            tracker: TrackerSpec::Ewma { alpha },
            ..self.clone()
        }
    }
}

/// Result of one detector step.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub index: usize,
    pub timestamp: String,
    pub value: f64,
    /// Normalized rate of the most recent value, in [0, 1).
    pub rate: f64,
    pub detected: bool,
}

/// A rejected input row: its position and the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestError {
    pub row: usize,
    pub message: String,
}

/// Records plus the tally of rejected rows from one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DetectionRecord>,
    pub ingest_errors: Vec<IngestError>,
}

/// One detector instance; strictly sequential over its stream.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    encoder: AdaptiveEncoder,
    lags: VecDeque<f64>,
    output: LifNeuron,
    step_index: usize,
    ingest_error_count: usize,
    events: Vec<(f64, u32)>,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self, DetectError> {
        if config.n_inputs == 0 {
            return Err(DetectError::InvalidConfig(
                "at least one input neuron is required".into(),
            ));
        }
        if !(config.interval_ms.is_finite() && config.interval_ms > 0.0) {
            return Err(DetectError::InvalidConfig(format!(
                "interval must be positive, got {} ms",
                config.interval_ms
            )));
        }
        if !(config.weight.is_finite() && config.gain_mv.is_finite()) {
            return Err(DetectError::InvalidConfig(
                "synaptic weight and gain must be finite".into(),
            ));
        }
        if config.spike_mode == SpikeMode::Poisson && config.seed.is_none() {
            return Err(DetectError::Neuron(NeuronError::MissingSeed));
        }
        let tracker = config.tracker.build()?;
        let warmup = config.warmup.unwrap_or_else(|| default_warmup(&tracker));
        let encoder = AdaptiveEncoder::new(tracker, config.rho_max, config.epsilon_sd, warmup)?;
        let v_reset = config.v_reset_mv.unwrap_or(-0.1 * config.theta_mv);
        let output = if config.leak {
            LifNeuron::lif(config.theta_mv, config.tau_ms, v_reset)?
        } else {
            LifNeuron::integrate_and_fire(config.theta_mv)?
        };
        Ok(Self {
            config,
            encoder,
            lags: VecDeque::new(),
            output,
            step_index: 0,
            ingest_error_count: 0,
            events: Vec::new(),
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Warmup length in effect after default resolution.
    pub fn warmup(&self) -> u64 {
        self.encoder.warmup()
    }

    /// Current output-neuron membrane potential, mV.
    pub fn potential(&self) -> f64 {
        self.output.potential()
    }

    /// Rows rejected so far.
    pub fn ingest_error_count(&self) -> usize {
        self.ingest_error_count
    }

    /// Process one data point. Rejects non-finite values without touching
    /// the detector state (beyond the error tally).
    pub fn step(&mut self, timestamp: &str, value: f64) -> Result<DetectionRecord, DetectError> {
        if !value.is_finite() {
            self.ingest_error_count += 1;
            return Err(DetectError::NonFiniteValue(value));
        }

        self.encoder.update(value)?;
        self.lags.push_front(value);
        if self.lags.len() > self.config.n_inputs {
            self.lags.pop_back();
        }

        // Step i occupies [i*interval, (i+1)*interval) of simulation time.
        let interval_start = self.step_index as f64 * self.config.interval_ms;
        if !self.config.carry_over {
            self.output.reset(interval_start)?;
        }

        self.events.clear();
        let mut lag0_rate = 0.0;
        for (j, &lagged) in self.lags.iter().enumerate() {
            let sample = self.encoder.rate_of(lagged)?;
            if j == 0 {
                lag0_rate = sample.normalized;
            }
            if sample.absolute == 0.0 {
                continue;
            }
            let seed = self
                .config
                .seed
                .map(|base| mix_seed(base, self.step_index as u64, j as u64));
            let train = generate_spikes(
                &sample,
                self.config.interval_ms,
                self.config.spike_mode,
                seed,
                j as u32,
            )?;
            for &t in &train.times {
                self.events.push((interval_start + t, j as u32));
            }
        }

        // Merge all trains; simultaneous spikes resolve by source index.
        self.events
            .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let amplitude = self.config.weight * self.config.gain_mv;
        let mut detected = false;
        for i in 0..self.events.len() {
            let t = self.events[i].0;
            if self.output.receive(t, amplitude)? {
                detected = true;
            }
        }

        let record = DetectionRecord {
            index: self.step_index,
            timestamp: timestamp.to_string(),
            value,
            rate: lag0_rate,
            detected,
        };
        self.step_index += 1;
        Ok(record)
    }
}

/// Run a detector over a whole stream of `(timestamp, value)` rows.
///
/// Rejected rows are reported with their 0-based position; valid rows each
/// produce exactly one record.
pub fn run<'a, I>(stream: I, config: DetectorConfig) -> Result<RunOutput, DetectError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut detector = Detector::new(config)?;
    let mut records = Vec::new();
    let mut ingest_errors = Vec::new();
    for (row, (timestamp, value)) in stream.into_iter().enumerate() {
        match detector.step(timestamp, value) {
            Ok(record) => records.push(record),
            Err(DetectError::NonFiniteValue(v)) => ingest_errors.push(IngestError {
                row,
                message: format!("non-finite value {v}"),
            }),
            Err(other) => return Err(other),
        }
    }
    Ok(RunOutput {
        records,
        ingest_errors,
    })
}

/// Decorrelate per-(step, neuron) Poisson streams from one base seed.
fn mix_seed(base: u64, step: u64, neuron: u64) -> u64 {
    let mut z = base
        .wrapping_add(step.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(neuron.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
