//! Online mean/variance trackers for scalar streams.
//!
//! Three update policies share one interface: a cumulative tracker over the
//! whole history (Welford recurrence), an exact sliding window over the last
//! `k` values, and an exponentially weighted tracker with forgetting rate
//! `alpha`. All three start from the same boundary condition: after the
//! first sample the mean equals that sample and the variance state is zero.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("non-finite input {0} rejected")]
    NonFiniteInput(f64),
    #[error("tracker is empty; at least one update is required")]
    Empty,
    #[error("invalid tracker configuration: {0}")]
    InvalidConfig(String),
}

/// Cumulative mean/variance over the entire stream.
///
/// Maintains the running mean and the sum of squared deviations (`m2`);
/// the sample variance is `m2 / (count - 1)`.
#[derive(Debug, Clone, Default)]
pub struct CumulativeTracker {
    count: u64,
    mean: f64,
    m2: f64,
}

impl CumulativeTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: f64) -> Result<(), StatsError> {
        if !x.is_finite() {
            return Err(StatsError::NonFiniteInput(x));
        }
        self.count += 1;
        if self.count == 1 {
            self.mean = x;
            self.m2 = 0.0;
        } else {
            let delta = x - self.mean;
            self.mean += delta / self.count as f64;
            let delta2 = x - self.mean;
            self.m2 = (self.m2 + delta * delta2).max(0.0);
        }
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        Ok(self.mean)
    }

    /// Sample standard deviation (`n - 1` normalization); 0 after one sample.
    pub fn std_dev(&self) -> Result<f64, StatsError> {
        match self.count {
            0 => Err(StatsError::Empty),
            1 => Ok(0.0),
            n => Ok((self.m2 / (n - 1) as f64).sqrt()),
        }
    }
}

/// Exact mean/variance of the last `k` values.
///
/// Until `k` samples have arrived this behaves like the cumulative tracker;
/// afterwards each update evicts the oldest value, so the statistics are
/// always those of the literal window contents.
#[derive(Debug, Clone)]
pub struct WindowedTracker {
    window_k: usize,
    buffer: std::collections::VecDeque<f64>,
    count: u64,
    mean: f64,
    m2: f64,
}

impl WindowedTracker {
    pub fn new(window_k: usize) -> Result<Self, StatsError> {
        if window_k < 2 {
            return Err(StatsError::InvalidConfig(format!(
                "window size must be >= 2, got {window_k}"
            )));
        }
        Ok(Self {
            window_k,
            buffer: std::collections::VecDeque::with_capacity(window_k),
            count: 0,
            mean: 0.0,
            m2: 0.0,
        })
    }

    pub fn window_k(&self) -> usize {
        self.window_k
    }

    pub fn update(&mut self, x: f64) -> Result<(), StatsError> {
        if !x.is_finite() {
            return Err(StatsError::NonFiniteInput(x));
        }
        self.count += 1;
        if self.buffer.len() < self.window_k {
            self.buffer.push_back(x);
            let n = self.buffer.len() as f64;
            if self.buffer.len() == 1 {
                self.mean = x;
                self.m2 = 0.0;
            } else {
                let delta = x - self.mean;
                self.mean += delta / n;
                let delta2 = x - self.mean;
                self.m2 = (self.m2 + delta * delta2).max(0.0);
            }
        } else {
            // Window full: replace the oldest value in one pass.
            let old = self.buffer.pop_front().expect("window is non-empty");
            self.buffer.push_back(x);
            let k = self.window_k as f64;
            let prev_mean = self.mean;
            self.mean += (x - old) / k;
            self.m2 = (self.m2 + (x - old) * (x - prev_mean + old - self.mean)).max(0.0);
        }
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Number of values currently inside the window: `min(count, k)`.
    pub fn occupancy(&self) -> usize {
        self.buffer.len()
    }

    pub fn mean(&self) -> Result<f64, StatsError> {
        if self.buffer.is_empty() {
            return Err(StatsError::Empty);
        }
        Ok(self.mean)
    }

    pub fn std_dev(&self) -> Result<f64, StatsError> {
        match self.buffer.len() {
            0 => Err(StatsError::Empty),
            1 => Ok(0.0),
            n => Ok((self.m2 / (n - 1) as f64).sqrt()),
        }
    }
}

/// Exponentially weighted mean and variance.
///
/// `mean' = mean + alpha * (x - mean)` and
/// `var'  = (1 - alpha) * (var + alpha * (x - mean)^2)`,
/// seeded with `mean = x1`, `var = 0` on the first sample. Unlike the other
/// trackers the variance state is already a variance, not a sum of squares.
#[derive(Debug, Clone)]
pub struct EwmaTracker {
    alpha: f64,
    count: u64,
    mean: f64,
    var: f64,
}

impl EwmaTracker {
    pub fn new(alpha: f64) -> Result<Self, StatsError> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
            return Err(StatsError::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            count: 0,
            mean: 0.0,
            var: 0.0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn update(&mut self, x: f64) -> Result<(), StatsError> {
        if !x.is_finite() {
            return Err(StatsError::NonFiniteInput(x));
        }
        self.count += 1;
        if self.count == 1 {
            self.mean = x;
            self.var = 0.0;
        } else {
            let delta = x - self.mean;
            self.mean += self.alpha * delta;
            self.var = ((1.0 - self.alpha) * (self.var + self.alpha * delta * delta)).max(0.0);
        }
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        Ok(self.mean)
    }

    pub fn std_dev(&self) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        Ok(self.var.sqrt())
    }
}

/// A tracker of any variant, selected at construction time.
#[derive(Debug, Clone)]
pub enum StatsTracker {
    Cumulative(CumulativeTracker),
    Windowed(WindowedTracker),
    Ewma(EwmaTracker),
}

impl StatsTracker {
    pub fn cumulative() -> Self {
        Self::Cumulative(CumulativeTracker::new())
    }

    pub fn windowed(window_k: usize) -> Result<Self, StatsError> {
        Ok(Self::Windowed(WindowedTracker::new(window_k)?))
    }

    pub fn ewma(alpha: f64) -> Result<Self, StatsError> {
        Ok(Self::Ewma(EwmaTracker::new(alpha)?))
    }

    pub fn update(&mut self, x: f64) -> Result<(), StatsError> {
        match self {
            Self::Cumulative(t) => t.update(x),
            Self::Windowed(t) => t.update(x),
            Self::Ewma(t) => t.update(x),
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            Self::Cumulative(t) => t.count(),
            Self::Windowed(t) => t.count(),
            Self::Ewma(t) => t.count(),
        }
    }

    pub fn mean(&self) -> Result<f64, StatsError> {
        match self {
            Self::Cumulative(t) => t.mean(),
            Self::Windowed(t) => t.mean(),
            Self::Ewma(t) => t.mean(),
        }
    }

    pub fn std_dev(&self) -> Result<f64, StatsError> {
        match self {
            Self::Cumulative(t) => t.std_dev(),
            Self::Windowed(t) => t.std_dev(),
            Self::Ewma(t) => t.std_dev(),
        }
    }
}
