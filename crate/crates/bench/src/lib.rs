//! Shared fixtures for the benchmarks.

use nbrecon_core::code::{construct_code, ConstructedCode};
use nbrecon_core::ensembles;
use nbrecon_core::sim::random_word;
use nbrecon_core::{ChannelModel, DegreeDistribution, LlrVector, SparseParityCheck, Symbol, Syndrome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Built-in ensemble by registry key, e.g. `r050`.
pub fn ensemble(key: &str) -> DegreeDistribution {
    ensembles::lookup(key)
        .and_then(|e| e.distribution().ok())
        .unwrap_or_else(|| panic!("no usable ensemble {key}"))
}

pub fn code(key: &str, q: usize, n: usize, seed: u64) -> ConstructedCode {
    construct_code(&ensemble(key), q, n, &mut rng(seed)).expect("fixture code builds")
}

/// Random incoming check messages with weights, for one check of `degree`
/// edges (the outgoing edge excluded).
pub fn check_inputs(q: usize, degree: usize, seed: u64) -> (Vec<LlrVector>, Vec<Symbol>) {
    let mut r = rng(seed);
    let msgs = (0..degree - 1)
        .map(|_| {
            let mut v: Vec<f64> = (0..q).map(|_| r.random_range(-6.0..6.0)).collect();
            let base = v[0];
            v.iter_mut().for_each(|x| *x -= base);
            LlrVector::from_raw(v)
        })
        .collect();
    let weights = (0..degree - 1).map(|_| r.random_range(1..q) as Symbol).collect();
    (msgs, weights)
}

/// One reconciliation instance: syndrome of a random word and Bob's noisy copy.
pub struct Frame {
    pub syndrome: Syndrome,
    pub y: Vec<Symbol>,
    pub channel: ChannelModel,
}

pub fn frame(code: &SparseParityCheck, qber: f64, seed: u64) -> Frame {
    let mut r = rng(seed);
    let channel = ChannelModel::new(code.q(), qber).expect("valid qber");
    let x = random_word(code.n(), code.q(), &mut r);
    Frame {
        syndrome: code.syndrome(&x).expect("word fits code"),
        y: channel.sample(&x, &mut r),
        channel,
    }
}
