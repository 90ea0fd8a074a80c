//! Gaussian-mechanism release of numeric series.
//!
//! Values are clamped to `[clamp_lo, clamp_hi]` first, which bounds the
//! per-record sensitivity at `clamp_hi - clamp_lo`, then `N(0, σ²)` noise is
//! added with
//!
//! ```text
//! σ = Δ · sqrt(2 · ln(1.25 / δ)) / ε
//! ```
//!
//! Noise stream: block `i` is `SHA-256(encode(seed) ‖ encode(i))`. Its first
//! eight bytes give `u1 = ((w >> 11) + 1) / 2^53` in `(0, 1]` and the next
//! eight `u2 = (w >> 11) / 2^53` in `[0, 1)`. Box–Muller turns each block into
//! the pair `r·cos(2πu2)`, `r·sin(2πu2)` with `r = sqrt(-2 ln u1)`, consumed in
//! that order.

use thiserror::Error;

use crate::crypto::{canonical_encode, hash};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrivacyError {
    #[error("epsilon must be finite and > 0, got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("sensitivity must be finite and > 0, got {0}")]
    InvalidSensitivity(f64),
    #[error("sigma must be finite and >= 0, got {0}")]
    InvalidSigma(f64),
    #[error("clamp bounds must be finite with lo < hi, got [{lo}, {hi}]")]
    InvalidClamp { lo: f64, hi: f64 },
    #[error("value at position {0} is NaN")]
    NanValue(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericSeries {
    pub values: Vec<f64>,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
    pub unit: String,
}

impl NumericSeries {
    pub fn new(
        values: Vec<f64>,
        clamp_lo: f64,
        clamp_hi: f64,
        unit: impl Into<String>,
    ) -> Result<Self, PrivacyError> {
        let series = NumericSeries {
            values,
            clamp_lo,
            clamp_hi,
            unit: unit.into(),
        };
        series.validate()?;
        Ok(series)
    }

    pub fn validate(&self) -> Result<(), PrivacyError> {
        if !(self.clamp_lo.is_finite()
            && self.clamp_hi.is_finite()
            && self.clamp_lo < self.clamp_hi)
        {
            return Err(PrivacyError::InvalidClamp {
                lo: self.clamp_lo,
                hi: self.clamp_hi,
            });
        }
        match self.values.iter().position(|v| v.is_nan()) {
            Some(i) => Err(PrivacyError::NanValue(i)),
            None => Ok(()),
        }
    }

    pub fn sensitivity(&self) -> f64 {
        self.clamp_hi - self.clamp_lo
    }

    pub fn clamped(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v.clamp(self.clamp_lo, self.clamp_hi))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub sensitivity: f64,
}

impl PrivacyBudget {
    pub fn validate(&self) -> Result<(), PrivacyError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(PrivacyError::InvalidEpsilon(self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(PrivacyError::InvalidDelta(self.delta));
        }
        if !(self.sensitivity.is_finite() && self.sensitivity > 0.0) {
            return Err(PrivacyError::InvalidSensitivity(self.sensitivity));
        }
        Ok(())
    }
}

pub fn calibrate_sigma(budget: &PrivacyBudget) -> Result<f64, PrivacyError> {
    budget.validate()?;
    Ok(budget.sensitivity * (2.0 * (1.25 / budget.delta).ln()).sqrt() / budget.epsilon)
}

/// Deterministic standard-normal stream described in the module docs.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    seed: Vec<u8>,
    counter: u64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream {
            seed: canonical_encode(&seed).expect("u64 encodes").into_vec(),
            counter: 0,
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let mut input = self.seed.clone();
        input.extend_from_slice(&self.counter.to_be_bytes());
        self.counter += 1;
        let block = hash(&input);
        let word = |i: usize| u64::from_be_bytes(block.0[i..i + 8].try_into().expect("8 bytes"));
        let scale = 1.0 / (1u64 << 53) as f64;
        let u1 = ((word(0) >> 11) + 1) as f64 * scale;
        let u2 = (word(8) >> 11) as f64 * scale;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

impl Iterator for GaussianStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_standard())
    }
}

pub fn add_noise(
    series: &NumericSeries,
    sigma: f64,
    seed: u64,
) -> Result<NumericSeries, PrivacyError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(PrivacyError::InvalidSigma(sigma));
    }
    series.validate()?;
    let values = series
        .clamped()
        .into_iter()
        .zip(GaussianStream::new(seed))
        .map(|(v, z)| if sigma == 0.0 { v } else { v + sigma * z })
        .collect();
    Ok(NumericSeries {
        values,
        ..series.clone()
    })
}
