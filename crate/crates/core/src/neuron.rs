//! Integrate-and-fire point neurons and rate-to-spike-train conversion.
//!
//! Neurons are updated event by event: between events the membrane either
//! holds its level (IF) or decays exponentially with time constant `tau`
//! (LIF). Crossing the threshold emits a spike and resets the membrane, to
//! 0 for IF neurons or to a hyperpolarized level below rest for LIF.

use crate::encode::RateSample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeuronError {
    #[error("event at t={t} ms precedes the neuron's last update at {last} ms")]
    TimeReversal { t: f64, last: f64 },
    #[error("poisson spike generation requires a seed for reproducible runs")]
    MissingSeed,
    #[error("invalid neuron configuration: {0}")]
    InvalidConfig(String),
}

/// How a firing rate is turned into spike times within an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpikeMode {
    /// `round(rate * interval)` spikes, evenly spaced at interval midpoints.
    Deterministic,
    /// Seeded exponential inter-arrival times, truncated to the interval.
    Poisson,
}

/// Ordered spike times (ms) emitted by one source within one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    pub times: Vec<f64>,
    pub source: u32,
}

impl SpikeTrain {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Convert a rate sample into a spike train over `[0, interval_ms)`.
///
/// Deterministic mode places `round(rate.absolute * interval_ms)` spikes at
/// `(j + 0.5) * interval_ms / count`; Poisson mode draws exponential
/// inter-arrival times with mean `1 / rate.absolute` from a seeded RNG.
pub fn generate_spikes(
    rate: &RateSample,
    interval_ms: f64,
    mode: SpikeMode,
    seed: Option<u64>,
    source: u32,
) -> Result<SpikeTrain, NeuronError> {
    if !(interval_ms.is_finite() && interval_ms > 0.0) {
        return Err(NeuronError::InvalidConfig(format!(
            "interval must be positive, got {interval_ms} ms"
        )));
    }
    if !(rate.absolute.is_finite() && rate.absolute >= 0.0) {
        return Err(NeuronError::InvalidConfig(format!(
            "absolute rate must be a finite non-negative value, got {}",
            rate.absolute
        )));
    }
    if rate.absolute == 0.0 {
        return Ok(SpikeTrain {
            times: Vec::new(),
            source,
        });
    }
    let times = match mode {
        SpikeMode::Deterministic => {
            let count = (rate.absolute * interval_ms).round() as usize;
            (0..count)
                .map(|j| (j as f64 + 0.5) * interval_ms / count as f64)
                .collect()
        }
        SpikeMode::Poisson => {
            let seed = seed.ok_or(NeuronError::MissingSeed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let exp = Exp::new(rate.absolute)
                .map_err(|e| NeuronError::InvalidConfig(e.to_string()))?;
            let mut times = Vec::new();
            let mut t = 0.0;
            loop {
                t += exp.sample(&mut rng);
                if t >= interval_ms {
                    break;
                }
                times.push(t);
            }
            times
        }
    };
    debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
    Ok(SpikeTrain { times, source })
}

/// Integrate-and-fire neuron with optional membrane leak.
#[derive(Debug, Clone)]
pub struct LifNeuron {
    theta: f64,
    tau: f64,
    v: f64,
    v_reset: f64,
    last_time: f64,
    leak_enabled: bool,
}

impl LifNeuron {
    /// Leaky neuron: decays as `exp(-dt/tau)` between events and resets to
    /// `v_reset` (at or below rest) after a spike.
    pub fn lif(theta: f64, tau: f64, v_reset: f64) -> Result<Self, NeuronError> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(NeuronError::InvalidConfig(format!(
                "firing threshold must be positive, got {theta} mV"
            )));
        }
        // infinite tau is allowed: it is the no-leak limit
        if tau.is_nan() || tau <= 0.0 {
            return Err(NeuronError::InvalidConfig(format!(
                "decay constant must be positive, got {tau} ms"
            )));
        }
        if v_reset.is_nan() || v_reset > 0.0 {
            return Err(NeuronError::InvalidConfig(format!(
                "reset level must not exceed the resting potential, got {v_reset} mV"
            )));
        }
        Ok(Self {
            theta,
            tau,
            v: 0.0,
            v_reset,
            last_time: 0.0,
            leak_enabled: true,
        })
    }

    /// Non-leaky neuron: holds its depolarisation indefinitely and resets
    /// to the resting potential after a spike.
    pub fn integrate_and_fire(theta: f64) -> Result<Self, NeuronError> {
        let mut n = Self::lif(theta, f64::INFINITY, 0.0)?;
        n.leak_enabled = false;
        Ok(n)
    }

    pub fn potential(&self) -> f64 {
        self.v
    }

    pub fn last_time(&self) -> f64 {
        self.last_time
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Membrane level at time `t` with no intervening input; read-only.
    pub fn potential_at(&self, t: f64) -> Result<f64, NeuronError> {
        if t < self.last_time {
            return Err(NeuronError::TimeReversal {
                t,
                last: self.last_time,
            });
        }
        if self.leak_enabled {
            Ok(self.v * (-(t - self.last_time) / self.tau).exp())
        } else {
            Ok(self.v)
        }
    }

    /// Deliver one synaptic event of `amplitude` mV at time `t`.
    ///
    /// Returns whether the neuron fired. A threshold crossing and its reset
    /// happen within the same event, so the membrane never rests at or
    /// above `theta`.
    pub fn receive(&mut self, t: f64, amplitude: f64) -> Result<bool, NeuronError> {
        self.v = self.potential_at(t)?;
        self.last_time = t;
        self.v += amplitude;
        if self.v >= self.theta {
            self.v = if self.leak_enabled { self.v_reset } else { 0.0 };
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Clamp the membrane back to rest at time `t` (used when interval
    /// carry-over is disabled).
    pub fn reset(&mut self, t: f64) -> Result<(), NeuronError> {
        if t < self.last_time {
            return Err(NeuronError::TimeReversal {
                t,
                last: self.last_time,
            });
        }
        self.v = 0.0;
        self.last_time = t;
        Ok(())
    }
}
