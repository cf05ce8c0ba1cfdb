//! Conversion of scalar values into firing rates or spike latencies.
//!
//! [`AdaptiveEncoder`] is the streaming encoder: it standardizes each value
//! against an online tracker and maps the deviation through `|tanh|`, so the
//! response is centred on the running mean and scaled by the running
//! standard deviation. [`GrfEncoder`] is the fixed-range baseline: a
//! population of Gaussian receptive fields mapping one value to per-neuron
//! spike latencies.

use crate::stats::{StatsError, StatsTracker};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("non-finite input {0} rejected")]
    NonFiniteInput(f64),
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),
}

impl From<StatsError> for EncodeError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::NonFiniteInput(x) => EncodeError::NonFiniteInput(x),
            other => EncodeError::InvalidConfig(other.to_string()),
        }
    }
}

/// Largest normalized rate the encoder will emit. `tanh` rounds to 1.0 in
/// f64 for arguments beyond ~19.06; clamping one ulp below keeps the
/// emitted rate inside `[0, 1)` and the absolute rate inside `[0, rho_max)`.
const MAX_NORMALIZED_RATE: f64 = 1.0 - f64::EPSILON;

/// One encoded sample: the normalized rate in `[0, 1)` and the absolute
/// rate (`normalized * rho_max`) in spikes per millisecond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub normalized: f64,
    pub absolute: f64,
}

/// `|2*logistic(x) - 1|`: the on/off-cell pair response.
///
/// The on-cell (`logistic`) and off-cell (`1 - logistic`) responses differ
/// by exactly this amount, and the identity `2*logistic(x) - 1 = tanh(x/2)`
/// ties it to the tanh form used by [`AdaptiveEncoder`].
pub fn rate_logistic(x_norm: f64) -> f64 {
    (2.0 / (1.0 + (-x_norm).exp()) - 1.0).abs()
}

/// Streaming rate encoder: `rate = |tanh((x - mean) / sd)| * rho_max`.
///
/// The embedded tracker supplies `mean` and `sd`, so the response curve
/// recentres and rescales itself as the stream statistics drift. A floor
/// `epsilon_sd` keeps the divisor positive for constant prefixes, and the
/// first `warmup` samples emit rate 0 while the statistics settle.
#[derive(Debug, Clone)]
pub struct AdaptiveEncoder {
    tracker: StatsTracker,
    rho_max: f64,
    epsilon_sd: f64,
    warmup: u64,
}

/// Default sd floor, in input units.
pub const DEFAULT_EPSILON_SD: f64 = 1e-9;

/// Default warmup length for a tracker: the window size for windowed
/// trackers, `ceil(1/alpha)` for exponentially weighted ones, and 10
/// samples for the cumulative tracker.
pub fn default_warmup(tracker: &StatsTracker) -> u64 {
    match tracker {
        StatsTracker::Cumulative(_) => 10,
        StatsTracker::Windowed(t) => t.window_k() as u64,
        StatsTracker::Ewma(t) => (1.0 / t.alpha()).ceil() as u64,
    }
}

impl AdaptiveEncoder {
    pub fn new(
        tracker: StatsTracker,
        rho_max: f64,
        epsilon_sd: f64,
        warmup: u64,
    ) -> Result<Self, EncodeError> {
        if !(rho_max.is_finite() && rho_max > 0.0) {
            return Err(EncodeError::InvalidConfig(format!(
                "rho_max must be a positive rate, got {rho_max}"
            )));
        }
        if !(epsilon_sd.is_finite() && epsilon_sd > 0.0) {
            return Err(EncodeError::InvalidConfig(format!(
                "epsilon_sd must be positive, got {epsilon_sd}"
            )));
        }
        Ok(Self {
            tracker,
            rho_max,
            epsilon_sd,
            warmup,
        })
    }

    /// Encoder with the default sd floor and the tracker-appropriate warmup.
    pub fn with_defaults(tracker: StatsTracker, rho_max: f64) -> Result<Self, EncodeError> {
        let warmup = default_warmup(&tracker);
        Self::new(tracker, rho_max, DEFAULT_EPSILON_SD, warmup)
    }

    pub fn tracker(&self) -> &StatsTracker {
        &self.tracker
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn warmup(&self) -> u64 {
        self.warmup
    }

    /// Advance the embedded tracker by one sample without encoding.
    pub fn update(&mut self, x: f64) -> Result<(), EncodeError> {
        self.tracker.update(x)?;
        Ok(())
    }

    /// Encode `x` against the current statistics without updating them.
    ///
    /// Emits rate 0 while fewer than `warmup` samples have been absorbed.
    pub fn rate_of(&self, x: f64) -> Result<RateSample, EncodeError> {
        if !x.is_finite() {
            return Err(EncodeError::NonFiniteInput(x));
        }
        if self.tracker.count() <= self.warmup {
            return Ok(RateSample {
                normalized: 0.0,
                absolute: 0.0,
            });
        }
        let mean = self.tracker.mean()?;
        let sd = self.tracker.std_dev()?.max(self.epsilon_sd);
        let normalized = ((x - mean) / sd).tanh().abs().min(MAX_NORMALIZED_RATE);
        Ok(RateSample {
            normalized,
            absolute: normalized * self.rho_max,
        })
    }

    /// Update-then-encode: absorb `x` into the statistics, then encode it.
    pub fn encode(&mut self, x: f64) -> Result<RateSample, EncodeError> {
        self.update(x)?;
        self.rate_of(x)
    }
}

/// Per-neuron response of the receptive-field baseline for one input value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrfResponse {
    pub neuron: usize,
    /// Normalized latency in [0, 1]: 0 at the field centre, 1 far away.
    pub latency: f64,
    /// Whether the latency is at or below the firing threshold.
    pub fires: bool,
}

/// Centres and common width of `n` Gaussian receptive fields covering
/// `[x_min, x_max]`.
///
/// Centres are evenly spaced with step `(x_max - x_min) / (n - 2)` and the
/// outermost ones extend past the covered range; the shared width is
/// `(x_max - x_min) / (beta * (n - 2))`.
pub fn grf_centers(
    n: usize,
    x_min: f64,
    x_max: f64,
    beta: f64,
) -> Result<(Vec<f64>, f64), EncodeError> {
    if n < 3 {
        return Err(EncodeError::InvalidConfig(format!(
            "receptive-field populations need at least 3 neurons, got {n}"
        )));
    }
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
        return Err(EncodeError::InvalidConfig(format!(
            "invalid range [{x_min}, {x_max}]"
        )));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(EncodeError::InvalidConfig(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let range = x_max - x_min;
    let denom = 2.0 * (n as f64 - 2.0);
    let centers = (1..=n)
        .map(|i| x_min + (2.0 * i as f64 - 3.0) * range / denom)
        .collect();
    let sigma = range / (beta * (n as f64 - 2.0));
    Ok((centers, sigma))
}

/// Gaussian receptive-field latency encoder over a fixed value range.
#[derive(Debug, Clone)]
pub struct GrfEncoder {
    centers: Vec<f64>,
    sigma: f64,
    theta_latency: f64,
}

/// Default latency threshold above which a neuron stays silent.
pub const DEFAULT_THETA_LATENCY: f64 = 0.9;

impl GrfEncoder {
    pub fn new(
        n_neurons: usize,
        x_min: f64,
        x_max: f64,
        beta: f64,
        theta_latency: f64,
    ) -> Result<Self, EncodeError> {
        if !(theta_latency > 0.0 && theta_latency < 1.0) {
            return Err(EncodeError::InvalidConfig(format!(
                "latency threshold must lie in (0, 1), got {theta_latency}"
            )));
        }
        let (centers, sigma) = grf_centers(n_neurons, x_min, x_max, beta)?;
        Ok(Self {
            centers,
            sigma,
            theta_latency,
        })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn theta_latency(&self) -> f64 {
        self.theta_latency
    }

    /// Latency of every neuron for input `x`: `1 - exp(-(x-c)^2 / (2 sigma^2))`.
    ///
    /// Equidistant neurons report identical latencies; all firing neurons
    /// emit, so no tie-breaking is applied.
    pub fn latencies(&self, x: f64) -> Result<Vec<GrfResponse>, EncodeError> {
        if !x.is_finite() {
            return Err(EncodeError::NonFiniteInput(x));
        }
        let two_sigma_sq = 2.0 * self.sigma * self.sigma;
        Ok(self
            .centers
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let d = x - c;
                let latency = 1.0 - (-(d * d) / two_sigma_sq).exp();
                GrfResponse {
                    neuron: i,
                    latency,
                    fires: latency <= self.theta_latency,
                }
            })
            .collect())
    }
}

/// Map a normalized latency in [0, 1] linearly onto a spike time within a
/// simulation interval.
pub fn latency_to_time(latency: f64, interval_ms: f64) -> f64 {
    latency * interval_ms
}
