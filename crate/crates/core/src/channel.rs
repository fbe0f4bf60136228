//! The q-ary symmetric channel and the leakage bookkeeping around it.
//!
//! Entropies are in base-q units throughout, so a uniformly random symbol
//! carries exactly one unit and efficiencies are unitless.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::Symbol;
use crate::llr::LlrVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("alphabet size {0} must be at least 2")]
    AlphabetTooSmall(usize),
    #[error("transition probability {p} outside [0, {max}]")]
    ProbabilityOutOfRange { p: f64, max: f64 },
    #[error("conditional entropy is zero; efficiency is undefined")]
    ZeroEntropy,
    #[error("conditional entropy is one; beta conversion is singular")]
    SingularConversion,
    #[error("rate {0} outside (0, 1)")]
    RateOutOfRange(f64),
    #[error("{what} must be at least 1")]
    EmptyFrame { what: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    q: usize,
    p: f64,
}

impl ChannelModel {
    pub fn new(q: usize, p: f64) -> Result<Self, ChannelError> {
        if q < 2 {
            return Err(ChannelError::AlphabetTooSmall(q));
        }
        let max = max_transition(q);
        if !(0.0..=max).contains(&p) || p.is_nan() {
            return Err(ChannelError::ProbabilityOutOfRange { p, max });
        }
        Ok(Self { q, p })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Symbol error probability (the QBER).
    pub fn p(&self) -> f64 {
        self.p
    }

    /// H(X|Y) for uniform input, base q.
    pub fn conditional_entropy(&self) -> f64 {
        conditional_entropy(self.q, self.p)
    }

    pub fn conditional_entropy_bits(&self) -> f64 {
        qary_to_bits(self.conditional_entropy(), self.q)
    }

    /// Minimum syndrome length `n * H(X|Y)` in q-ary symbols.
    pub fn slepian_wolf_min(&self, n: usize) -> f64 {
        n as f64 * self.conditional_entropy()
    }

    /// Passes `x` through the channel: each symbol survives with probability
    /// `1 - p` and otherwise becomes one of the other `q - 1` symbols uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, x: &[Symbol], rng: &mut R) -> Vec<Symbol> {
        let mut y = Vec::with_capacity(x.len());
        self.sample_into(x, &mut y, rng);
        y
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, x: &[Symbol], y: &mut Vec<Symbol>, rng: &mut R) {
        y.clear();
        y.extend(x.iter().map(|&xi| self.sample_symbol(xi, rng)));
    }

    #[inline]
    pub fn sample_symbol<R: Rng + ?Sized>(&self, x: Symbol, rng: &mut R) -> Symbol {
        let q = self.q as u32;
        debug_assert!((x as u32) < q);
        if self.p > 0.0 && rng.random::<f64>() < self.p {
            let r = rng.random_range(0..q - 1);
            (if r >= x as u32 { r + 1 } else { r }) as Symbol
        } else {
            x
        }
    }

    /// Initial decoder message for an observed symbol.
    ///
    /// Returns the message and whether it was clipped, which happens exactly
    /// when `p == 0` and the true LLRs are infinite.
    pub fn prior(&self, y: Symbol, saturation: f64) -> (LlrVector, bool) {
        let mut values = vec![0.0; self.q];
        let clipped = self.prior_into(y, &mut values, saturation);
        (LlrVector::from_raw(values), clipped)
    }

    pub fn prior_into(&self, y: Symbol, out: &mut [f64], saturation: f64) -> bool {
        let spread = self.prior_spread();
        let clipped = spread >= saturation || spread.is_nan();
        let spread = spread.min(saturation);
        if y == 0 {
            out.fill(spread);
            out[0] = 0.0;
        } else {
            out.fill(0.0);
            out[y as usize] = -spread;
        }
        clipped
    }

    /// `ln((1-p) / (p/(q-1)))`, infinite for a noiseless channel.
    pub fn prior_spread(&self) -> f64 {
        if self.p == 0.0 {
            return f64::INFINITY;
        }
        ((1.0 - self.p) * (self.q - 1) as f64 / self.p).ln()
    }
}

/// Largest meaningful transition probability, where the output is independent
/// of the input.
pub fn max_transition(q: usize) -> f64 {
    (q - 1) as f64 / q as f64
}

/// `-(1-p) log_q(1-p) - p log_q(p/(q-1))`, with the limits at 0 and (q-1)/q.
pub fn conditional_entropy(q: usize, p: f64) -> f64 {
    let ln_q = (q as f64).ln();
    let mut h = 0.0;
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    if p > 0.0 {
        h -= p * (p / (q - 1) as f64).ln();
    }
    (h / ln_q).clamp(0.0, 1.0)
}

pub fn qary_to_bits(h: f64, q: usize) -> f64 {
    h * (q as f64).log2()
}

/// The channel parameter at which `H(X|Y) = 1 - rate`, i.e. the best threshold
/// any code of this rate can reach.
pub fn theoretical_threshold(q: usize, rate: f64) -> Result<f64, ChannelError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(ChannelError::RateOutOfRange(rate));
    }
    let target = 1.0 - rate;
    let (mut lo, mut hi) = (0.0, max_transition(q));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if conditional_entropy(q, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `f = m / (n H(X|Y))`.
pub fn efficiency(m: usize, n: usize, channel: &ChannelModel) -> Result<f64, ChannelError> {
    if m == 0 {
        return Err(ChannelError::EmptyFrame {
            what: "syndrome length",
        });
    }
    if n == 0 {
        return Err(ChannelError::EmptyFrame { what: "frame length" });
    }
    let h = channel.conditional_entropy();
    if h <= 0.0 {
        return Err(ChannelError::ZeroEntropy);
    }
    Ok(m as f64 / (n as f64 * h))
}

/// Converts efficiency `f` to the reconciliation efficiency `beta` used for
/// continuous-variable systems, assuming uniform input (`H(X) = 1`).
pub fn beta_from_f(f: f64, channel: &ChannelModel) -> Result<f64, ChannelError> {
    let h = channel.conditional_entropy();
    if h >= 1.0 {
        return Err(ChannelError::SingularConversion);
    }
    Ok((1.0 - f * h) / (1.0 - h))
}

pub fn f_from_beta(beta: f64, channel: &ChannelModel) -> Result<f64, ChannelError> {
    let h = channel.conditional_entropy();
    if h >= 1.0 {
        return Err(ChannelError::SingularConversion);
    }
    if h <= 0.0 {
        return Err(ChannelError::ZeroEntropy);
    }
    Ok((1.0 - beta * (1.0 - h)) / h)
}
