//! Syndrome-based belief propagation over GF(q) with transform-domain check
//! updates and a flooding schedule.

pub mod check;
pub mod transform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelModel;
use crate::code::{CodeError, SparseParityCheck, Syndrome};
use crate::gf::Symbol;
use crate::llr::{
    entropy_of_probs, hard_decision, probs_from_llr_into, saturate_in_place, LlrError, LlrVector,
    DEFAULT_LLR_SATURATION,
};

pub use check::check_to_var;
pub use transform::{fwd_transform, fwht, inv_transform, spectral_permutations};

use check::CheckKernel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("edge weight 0 is not invertible")]
    ZeroWeight,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite message at iteration {iteration}, node {node}")]
    NonFinite { iteration: usize, node: usize },
    #[error("invalid decoder configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Llr(#[from] LlrError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub max_iterations: usize,
    pub llr_saturation: f64,
    /// Test the syndrome every this many iterations.
    pub check_every: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            llr_saturation: DEFAULT_LLR_SATURATION,
            check_every: 1,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.max_iterations == 0 {
            return Err(DecodeError::InvalidConfig("max_iterations must be positive".into()));
        }
        if self.check_every == 0 {
            return Err(DecodeError::InvalidConfig("check_every must be positive".into()));
        }
        if !(self.llr_saturation.is_finite() && self.llr_saturation > 0.0) {
            return Err(DecodeError::InvalidConfig(format!(
                "llr_saturation {} must be positive and finite",
                self.llr_saturation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub word: Vec<Symbol>,
    /// Iterations run; 0 when the channel output already met the syndrome.
    pub iterations: usize,
    /// The hard decision satisfies the target syndrome.
    pub converged: bool,
    /// Mean base-q entropy of the final posteriors.
    pub posterior_entropy: f64,
}

/// Posterior of a variable: its prior plus every incoming check message.
pub fn posterior(prior: &LlrVector, incoming: &[LlrVector], saturation: f64) -> Result<LlrVector, DecodeError> {
    let mut sum = prior.values().to_vec();
    accumulate(&mut sum, incoming)?;
    Ok(LlrVector::from_values(sum, saturation))
}

/// Message from a variable to one check, given the messages from its other
/// checks.
pub fn var_to_check(prior: &LlrVector, others: &[LlrVector], saturation: f64) -> Result<LlrVector, DecodeError> {
    posterior(prior, others, saturation)
}

fn accumulate(sum: &mut [f64], incoming: &[LlrVector]) -> Result<(), DecodeError> {
    for msg in incoming {
        if msg.len() != sum.len() {
            return Err(DecodeError::Dimension(format!(
                "message length {}, prior length {}",
                msg.len(),
                sum.len()
            )));
        }
        for (s, v) in sum.iter_mut().zip(msg.values()) {
            *s += v;
        }
    }
    Ok(())
}

/// Reusable decoder bound to one code. Holds all message buffers, so repeated
/// frames do not allocate.
pub struct Decoder<'a> {
    code: &'a SparseParityCheck,
    config: DecoderConfig,
    q: usize,
    /// Edges in row order: column and weight.
    edge_col: Vec<u32>,
    edge_weight: Vec<Symbol>,
    row_start: Vec<usize>,
    /// Edge ids grouped by column.
    col_edges: Vec<usize>,
    col_start: Vec<usize>,
    // Messages and posteriors are kept as probabilities: the LLR spread
    // bound becomes a floor of `max * exp(-saturation)` on every entry, and
    // no transcendental calls are needed per edge.
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    /// Channel priors as saturated LLRs, `n * q`.
    priors: Vec<f64>,
    prior_probs: Vec<f64>,
    post: Vec<f64>,
    word: Vec<Symbol>,
    kernel: CheckKernel,
}

impl<'a> Decoder<'a> {
    pub fn new(code: &'a SparseParityCheck, config: DecoderConfig) -> Result<Self, DecodeError> {
        config.validate()?;
        let q = code.q();
        let n = code.n();
        let e = code.edge_count();
        let mut edge_col = Vec::with_capacity(e);
        let mut edge_weight = Vec::with_capacity(e);
        let mut row_start = Vec::with_capacity(code.m() + 1);
        row_start.push(0);
        for row in code.rows() {
            for &(c, w) in row {
                edge_col.push(c);
                edge_weight.push(w);
            }
            row_start.push(edge_col.len());
        }
        let mut col_start = vec![0usize; n + 1];
        for &c in &edge_col {
            col_start[c as usize + 1] += 1;
        }
        for j in 0..n {
            col_start[j + 1] += col_start[j];
        }
        let mut fill = col_start.clone();
        let mut col_edges = vec![0usize; e];
        for (id, &c) in edge_col.iter().enumerate() {
            col_edges[fill[c as usize]] = id;
            fill[c as usize] += 1;
        }
        let max_row = code.row_degrees().into_iter().max().unwrap_or(0);
        let mut kernel = CheckKernel::new(q);
        kernel.reset(max_row);
        Ok(Self {
            code,
            config,
            q,
            edge_col,
            edge_weight,
            row_start,
            col_edges,
            col_start,
            v2c: vec![0.0; e * q],
            c2v: vec![0.0; e * q],
            priors: vec![0.0; n * q],
            prior_probs: vec![0.0; n * q],
            post: vec![0.0; n * q],
            word: vec![0; n],
            kernel,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn code(&self) -> &'a SparseParityCheck {
        self.code
    }

    /// Loads channel priors for the observation `y`. Returns how many priors
    /// hit the saturation bound.
    pub fn load_observation(&mut self, y: &[Symbol], channel: &ChannelModel) -> Result<usize, DecodeError> {
        self.code.check_word(y)?;
        if channel.q() != self.q {
            return Err(DecodeError::Dimension(format!(
                "channel alphabet {} but code over GF({})",
                channel.q(),
                self.q
            )));
        }
        let q = self.q;
        let sat = self.config.llr_saturation;
        let mut clipped = 0;
        for (j, &yj) in y.iter().enumerate() {
            if channel.prior_into(yj, &mut self.priors[j * q..(j + 1) * q], sat) {
                clipped += 1;
            }
        }
        Ok(clipped)
    }

    /// Loads arbitrary priors, `n * q` values in variable order.
    pub fn load_priors(&mut self, priors: &[f64]) -> Result<(), DecodeError> {
        if priors.len() != self.priors.len() {
            return Err(DecodeError::Dimension(format!(
                "{} prior values, expected {}",
                priors.len(),
                self.priors.len()
            )));
        }
        self.priors.copy_from_slice(priors);
        let q = self.q;
        for chunk in self.priors.chunks_exact_mut(q) {
            saturate_in_place(chunk, self.config.llr_saturation);
        }
        Ok(())
    }

    /// Decodes toward `syndrome` from the currently loaded priors.
    pub fn run(&mut self, syndrome: &Syndrome) -> Result<DecodeOutcome, DecodeError> {
        if syndrome.len() != self.code.m() {
            return Err(DecodeError::Dimension(format!(
                "syndrome length {}, code has {} checks",
                syndrome.len(),
                self.code.m()
            )));
        }
        if let Some(&bad) = syndrome.values().iter().find(|&&s| s as usize >= self.q) {
            return Err(DecodeError::Dimension(format!("syndrome symbol {bad} >= q={}", self.q)));
        }
        let q = self.q;
        let n = self.code.n();
        for j in 0..n {
            let prior = &self.priors[j * q..(j + 1) * q];
            self.word[j] = hard_decision(prior);
            let probs = &mut self.prior_probs[j * q..(j + 1) * q];
            probs_from_llr_into(prior, probs);
            self.post[j * q..(j + 1) * q].copy_from_slice(probs);
            for &e in &self.col_edges[self.col_start[j]..self.col_start[j + 1]] {
                self.v2c[e * q..(e + 1) * q].copy_from_slice(probs);
            }
        }
        if self.code.satisfies(&self.word, syndrome) {
            return Ok(self.outcome(0, true));
        }

        for iter in 1..=self.config.max_iterations {
            self.iterate(syndrome, iter)?;
            let last = iter == self.config.max_iterations;
            if (iter % self.config.check_every == 0 || last) && self.code.satisfies(&self.word, syndrome) {
                return Ok(self.outcome(iter, true));
            }
        }
        Ok(self.outcome(self.config.max_iterations, false))
    }

    /// Loads `y` under `channel` and decodes toward `syndrome`.
    pub fn decode(
        &mut self,
        syndrome: &Syndrome,
        y: &[Symbol],
        channel: &ChannelModel,
    ) -> Result<DecodeOutcome, DecodeError> {
        self.load_observation(y, channel)?;
        self.run(syndrome)
    }

    fn iterate(&mut self, syndrome: &Syndrome, iter: usize) -> Result<(), DecodeError> {
        match self.q {
            2 => self.iterate_sized::<2>(syndrome, iter),
            4 => self.iterate_sized::<4>(syndrome, iter),
            8 => self.iterate_sized::<8>(syndrome, iter),
            16 => self.iterate_sized::<16>(syndrome, iter),
            32 => self.iterate_sized::<32>(syndrome, iter),
            64 => self.iterate_sized::<64>(syndrome, iter),
            _ => self.iterate_sized::<0>(syndrome, iter),
        }
    }

    /// One flooding iteration with the field order fixed at compile time
    /// (`Q = 0` reads it at run time).
    fn iterate_sized<const Q: usize>(&mut self, syndrome: &Syndrome, iter: usize) -> Result<(), DecodeError> {
        self.check_phase::<Q>(syndrome, iter)?;
        self.variable_phase::<Q>(iter)
    }

    #[inline(always)]
    fn check_phase<const Q: usize>(&mut self, syndrome: &Syndrome, iter: usize) -> Result<(), DecodeError> {
        let q = if Q == 0 { self.q } else { Q };
        let gf = self.code.gf();
        for (i, &s) in syndrome.values().iter().enumerate() {
            let (lo, hi) = (self.row_start[i], self.row_start[i + 1]);
            let degree = hi - lo;
            for k in 0..degree {
                let e = lo + k;
                self.kernel
                    .load_probs::<Q>(k, &self.v2c[e * q..(e + 1) * q], self.edge_weight[e], gf)?;
            }
            self.kernel.prepare_extrinsic::<Q>(degree);
            for k in 0..degree {
                let e = lo + k;
                self.kernel
                    .extrinsic_probs::<Q>(k, self.edge_weight[e], s, gf, &mut self.c2v[e * q..(e + 1) * q]);
            }
            if self.c2v[lo * q..hi * q].iter().any(|v| !v.is_finite()) {
                return Err(DecodeError::NonFinite {
                    iteration: iter,
                    node: i,
                });
            }
        }
        Ok(())
    }

    #[inline(always)]
    fn variable_phase<const Q: usize>(&mut self, iter: usize) -> Result<(), DecodeError> {
        let q = if Q == 0 { self.q } else { Q };
        let floor = (-self.config.llr_saturation).exp();
        for j in 0..self.code.n() {
            let post = &mut self.post[j * q..(j + 1) * q];
            post.copy_from_slice(&self.prior_probs[j * q..(j + 1) * q]);
            let edges = &self.col_edges[self.col_start[j]..self.col_start[j + 1]];
            for &e in edges {
                for (p, v) in post.iter_mut().zip(&self.c2v[e * q..(e + 1) * q]) {
                    *p *= v;
                }
                scale_to_max(post);
            }
            if post.iter().any(|v| !v.is_finite()) {
                return Err(DecodeError::NonFinite {
                    iteration: iter,
                    node: j,
                });
            }
            for &e in edges {
                let out = &mut self.v2c[e * q..(e + 1) * q];
                for ((o, p), c) in out.iter_mut().zip(post.iter()).zip(&self.c2v[e * q..(e + 1) * q]) {
                    *o = p / c;
                }
                scale_to_max(out);
                let mut total = 0.0;
                for o in out.iter_mut() {
                    *o = o.max(floor);
                    total += *o;
                }
                let inv = 1.0 / total;
                for o in out.iter_mut() {
                    *o *= inv;
                }
            }
            self.word[j] = argmax(post);
        }
        Ok(())
    }

    fn outcome(&self, iterations: usize, converged: bool) -> DecodeOutcome {
        let q = self.q;
        let n = self.code.n();
        let mut buf = vec![0.0; q];
        let mut total = 0.0;
        for post in self.post.chunks_exact(q) {
            let sum: f64 = post.iter().sum();
            for (b, p) in buf.iter_mut().zip(post) {
                *b = p / sum;
            }
            total += entropy_of_probs(&buf);
        }
        DecodeOutcome {
            word: self.word.clone(),
            iterations,
            converged,
            posterior_entropy: if n == 0 { 0.0 } else { total / n as f64 },
        }
    }

    /// Number of edges of the bound code.
    pub fn edge_count(&self) -> usize {
        self.edge_col.len()
    }
}

/// Divides by the largest entry. Entries are non-negative and at least one
/// is positive.
#[inline]
fn scale_to_max(v: &mut [f64]) {
    let top = v.iter().copied().fold(0.0, f64::max);
    let inv = 1.0 / top;
    for x in v.iter_mut() {
        *x *= inv;
    }
}

/// First index of the largest entry.
#[inline]
fn argmax(v: &[f64]) -> Symbol {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best as Symbol
}

/// One-shot decode of `y` toward syndrome `s`.
pub fn decode(
    code: &SparseParityCheck,
    syndrome: &Syndrome,
    y: &[Symbol],
    channel: &ChannelModel,
    config: &DecoderConfig,
) -> Result<DecodeOutcome, DecodeError> {
    Decoder::new(code, *config)?.decode(syndrome, y, channel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{construct_code, DegreeDistribution, EdgeDistribution};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> SparseParityCheck {
        SparseParityCheck::from_dense(8, &[vec![1, 2, 0, 1], vec![0, 1, 3, 2]]).unwrap()
    }

    #[test]
    fn posterior_without_messages_is_prior_and_opposites_cancel() {
        let prior = LlrVector::from_raw(vec![0.0, 1.5, -0.5, 2.0]);
        assert_eq!(posterior(&prior, &[], 30.0).unwrap(), prior);
        let m = LlrVector::from_raw(vec![0.0, 3.0, -2.0, 0.25]);
        let neg = LlrVector::from_raw(m.values().iter().map(|v| -v).collect());
        let p = posterior(&prior, &[m, neg], 30.0).unwrap();
        for (a, b) in p.values().iter().zip(prior.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_sums_messages() {
        let prior = LlrVector::from_raw(vec![0.0, 1.0, 2.0, 3.0]);
        let a = LlrVector::from_raw(vec![0.0, -1.0, 0.5, 0.0]);
        let b = LlrVector::from_raw(vec![0.0, 0.5, 0.5, -4.0]);
        let p = posterior(&prior, &[a, b], 30.0).unwrap();
        assert_eq!(p.values(), &[0.0, 0.5, 3.0, -1.0]);
        assert_eq!(p.hard_decision(), 3);
    }

    #[test]
    fn exact_observation_stops_immediately() {
        let h = toy();
        let x = vec![1, 2, 3, 4];
        let s = h.syndrome(&x).unwrap();
        let ch = ChannelModel::new(8, 0.05).unwrap();
        let out = decode(&h, &s, &x, &ch, &DecoderConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.word, x);
    }

    #[test]
    fn corrects_single_error_on_toy() {
        let h = toy();
        let x = vec![1, 2, 3, 4];
        let s = h.syndrome(&x).unwrap();
        let ch = ChannelModel::new(8, 0.05).unwrap();
        let mut y = x.clone();
        y[2] = 6;
        let out = decode(&h, &s, &y, &ch, &DecoderConfig::default()).unwrap();
        assert!(out.converged);
        assert!(h.satisfies(&out.word, &s));
    }

    #[test]
    fn reconciles_moderate_noise_on_real_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lambda = EdgeDistribution::regular(3);
        let dist = DegreeDistribution::concentrated(lambda, 0.5).unwrap();
        let built = construct_code(&dist, 16, 1000, &mut rng).unwrap();
        let h = built.code;
        let ch = ChannelModel::new(16, 0.08).unwrap();
        let mut dec = Decoder::new(&h, DecoderConfig::default()).unwrap();
        let mut ok = 0;
        for _ in 0..10 {
            let x: Vec<Symbol> = (0..h.n()).map(|_| rng.random_range(0..16) as Symbol).collect();
            let y = ch.sample(&x, &mut rng);
            let s = h.syndrome(&x).unwrap();
            let out = dec.decode(&s, &y, &ch).unwrap();
            if out.converged && out.word == x {
                ok += 1;
            }
        }
        assert!(ok >= 9, "{ok}/10 frames");
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = toy();
        let ch = ChannelModel::new(8, 0.05).unwrap();
        let s = Syndrome::new(vec![0, 0]);
        let cfg = DecoderConfig::default();
        assert!(decode(&h, &s, &[0, 0, 0], &ch, &cfg).is_err());
        assert!(decode(&h, &Syndrome::new(vec![0]), &[0; 4], &ch, &cfg).is_err());
        let ch4 = ChannelModel::new(4, 0.05).unwrap();
        assert!(decode(&h, &s, &[0; 4], &ch4, &cfg).is_err());
        let bad = DecoderConfig {
            max_iterations: 0,
            ..cfg
        };
        assert!(matches!(Decoder::new(&h, bad), Err(DecodeError::InvalidConfig(_))));
    }

    #[test]
    fn noiseless_channel_saturates_but_decodes() {
        let h = toy();
        let x = vec![7, 0, 5, 1];
        let s = h.syndrome(&x).unwrap();
        let ch = ChannelModel::new(8, 0.0).unwrap();
        let mut dec = Decoder::new(&h, DecoderConfig::default()).unwrap();
        assert_eq!(dec.load_observation(&x, &ch).unwrap(), 4);
        let out = dec.run(&s).unwrap();
        assert!(out.converged);
        assert_eq!(out.word, x);
    }
}
