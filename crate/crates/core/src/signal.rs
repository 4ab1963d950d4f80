use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqStream {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl IqStream {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same sample rate, new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self::new(samples, self.sample_rate_hz)
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.samples
            .iter()
            .position(|s| !s.re.is_finite() || !s.im.is_finite())
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}
