//! Frame-level reconciliation runs and FER sweeps.
//!
//! One frame: Alice draws `x`, Bob observes `y` through the channel, Alice
//! sends `s = H x`, Bob decodes and both compare short hashes of `x` and of
//! Bob's estimate. Frames whose hashes differ are discarded.
//!
//! Frame `i` of point `k` always uses random stream `(k << 40) | i`. Frames are
//! decoded in fixed-size batches and the tally is cut at the exact frame that
//! reaches the error limit, so results do not depend on the thread count.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{efficiency, ChannelError, ChannelModel};
use crate::code::{CodeError, SparseParityCheck};
use crate::decoder::{DecodeError, Decoder, DecoderConfig};
use crate::gf::Symbol;
use crate::hash::hash_symbols;
use crate::seeds::stream_rng;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub frames: usize,
    /// Stop a point once this many frames failed.
    pub error_stop: usize,
    /// Frames decoded between early-stop checks.
    pub batch: usize,
    pub decoder: DecoderConfig,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            frames: 5000,
            error_stop: 100,
            batch: 64,
            decoder: DecoderConfig::default(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.frames == 0 {
            return Err(SimError::InvalidConfig("frames must be positive".into()));
        }
        if self.error_stop == 0 {
            return Err(SimError::InvalidConfig("error_stop must be positive".into()));
        }
        if self.batch == 0 {
            return Err(SimError::InvalidConfig("batch must be positive".into()));
        }
        self.decoder.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub converged: bool,
    /// Hashes of `x` and of the estimate agree.
    pub verified: bool,
    pub iterations: usize,
    pub symbol_errors: usize,
    /// Symbols disclosed for this frame: the syndrome length.
    pub leak: usize,
    pub hash_alice: u64,
    pub hash_bob: u64,
}

impl FrameReport {
    /// Decoder claimed success but the estimate is wrong.
    pub fn undetected_error(&self) -> bool {
        self.converged && !self.verified
    }
}

/// Runs one frame for a given `x`, drawing the channel noise from `rng`.
pub fn reconcile_frame<R: Rng + ?Sized>(
    decoder: &mut Decoder<'_>,
    x: &[Symbol],
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<FrameReport, SimError> {
    let code = decoder.code();
    let syndrome = code.syndrome(x)?;
    let y = channel.sample(x, rng);
    let out = decoder.decode(&syndrome, &y, channel)?;
    if out.converged {
        debug_assert!(code.satisfies(&out.word, &syndrome));
    }
    let hash_alice = hash_symbols(x);
    let hash_bob = hash_symbols(&out.word);
    Ok(FrameReport {
        converged: out.converged,
        verified: hash_alice == hash_bob,
        iterations: out.iterations,
        symbol_errors: x.iter().zip(&out.word).filter(|(a, b)| a != b).count(),
        leak: code.m(),
        hash_alice,
        hash_bob,
    })
}

/// Uniformly random frame of length `n` over GF(q).
pub fn random_word<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> Vec<Symbol> {
    (0..n).map(|_| rng.random_range(0..q) as Symbol).collect()
}

/// Stream id of frame `frame` at sweep point `point`.
pub fn frame_stream(point: u64, frame: u64) -> u64 {
    (point << 40) | frame
}

/// Draws `x`, then the channel noise, from the frame's own stream.
pub fn simulate_frame(
    decoder: &mut Decoder<'_>,
    channel: &ChannelModel,
    seed: u64,
    point: u64,
    frame: u64,
) -> Result<FrameReport, SimError> {
    let mut rng = stream_rng(seed, frame_stream(point, frame));
    let x = random_word(decoder.code().n(), decoder.code().q(), &mut rng);
    reconcile_frame(decoder, &x, channel, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub qber: f64,
    pub frames: usize,
    pub frame_errors: usize,
    pub fer: f64,
    pub mean_iterations: f64,
    /// `m / (n H(X|Y))`; `None` on a noiseless channel.
    pub efficiency: Option<f64>,
    pub undetected_errors: usize,
    /// Total disclosed symbols; always `frames * m`.
    pub leaked_symbols: usize,
    pub wall_seconds: f64,
}

/// Frames at one QBER, stopping at `cfg.frames` or `cfg.error_stop` failures.
pub fn simulate_point(
    code: &SparseParityCheck,
    qber: f64,
    cfg: &SimConfig,
    point: u64,
) -> Result<PointResult, SimError> {
    cfg.validate()?;
    let channel = ChannelModel::new(code.q(), qber)?;
    let start = Instant::now();
    let mut frames = 0;
    let mut errors = 0;
    let mut undetected = 0;
    let mut iterations = 0;
    let mut leaked = 0;
    'outer: while frames < cfg.frames {
        let end = (frames + cfg.batch).min(cfg.frames);
        let reports: Vec<FrameReport> = (frames..end)
            .into_par_iter()
            .map_init(
                || Decoder::new(code, cfg.decoder),
                |dec, f| {
                    let dec = dec.as_mut().map_err(|e| SimError::Decode(e.clone()))?;
                    simulate_frame(dec, &channel, cfg.seed, point, f as u64)
                },
            )
            .collect::<Result<_, _>>()?;
        for r in reports {
            frames += 1;
            iterations += r.iterations;
            leaked += r.leak;
            if r.undetected_error() {
                undetected += 1;
                log::warn!(
                    "frame {} at qber {qber}: decoder converged but hashes differ",
                    frames - 1
                );
            }
            if !r.verified {
                errors += 1;
                if errors >= cfg.error_stop {
                    break 'outer;
                }
            }
        }
    }
    Ok(PointResult {
        qber,
        frames,
        frame_errors: errors,
        fer: errors as f64 / frames as f64,
        mean_iterations: iterations as f64 / frames as f64,
        efficiency: efficiency(code.m(), code.n(), &channel).ok(),
        undetected_errors: undetected,
        leaked_symbols: leaked,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// One [`PointResult`] per QBER, point indices in input order.
pub fn sweep(code: &SparseParityCheck, qbers: &[f64], cfg: &SimConfig) -> Result<Vec<PointResult>, SimError> {
    qbers
        .iter()
        .enumerate()
        .map(|(k, &p)| simulate_point(code, p, cfg, k as u64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkingPoint {
    /// Highest tested QBER whose FER met the target.
    pub point: Option<PointResult>,
    pub target_fer: f64,
    pub evaluated: Vec<PointResult>,
}

/// Bisection over QBER in `[lo, hi]` for the largest value with
/// `FER <= target_fer`.
pub fn find_working_point(
    code: &SparseParityCheck,
    target_fer: f64,
    lo: f64,
    hi: f64,
    steps: usize,
    cfg: &SimConfig,
) -> Result<WorkingPoint, SimError> {
    let bad_range = lo.is_nan() || hi.is_nan() || lo >= hi;
    let bad_target = target_fer.is_nan() || target_fer <= 0.0 || target_fer >= 1.0;
    if bad_range || bad_target {
        return Err(SimError::InvalidConfig(format!(
            "bad working-point search: range [{lo}, {hi}], target {target_fer}"
        )));
    }
    let mut evaluated = Vec::new();
    let first = simulate_point(code, lo, cfg, 0)?;
    let mut best = (first.fer <= target_fer).then(|| first.clone());
    evaluated.push(first);
    if best.is_none() {
        return Ok(WorkingPoint {
            point: None,
            target_fer,
            evaluated,
        });
    }
    let (mut a, mut b) = (lo, hi);
    for step in 0..steps {
        let mid = 0.5 * (a + b);
        let r = simulate_point(code, mid, cfg, 1 + step as u64)?;
        if r.fer <= target_fer {
            a = mid;
            best = Some(r.clone());
        } else {
            b = mid;
        }
        evaluated.push(r);
    }
    Ok(WorkingPoint {
        point: best,
        target_fer,
        evaluated,
    })
}
