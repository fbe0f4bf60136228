//! Monte-Carlo density evolution for GF(q) ensembles on the q-ary symmetric
//! channel.
//!
//! A pool of variable-to-check messages stands in for the message density.
//! Each iteration rebuilds a check-to-variable pool, every entry from a check
//! degree drawn from `rho`, inputs drawn uniformly with replacement from the
//! pool and fresh uniform nonzero edge weights. The variable pool is then
//! rebuilt the same way from `lambda` and fresh channel priors. The all-zero
//! word is transmitted, so every check has syndrome zero.
//!
//! Work is split into fixed chunks, each with its own random stream, so a run
//! is reproducible from its seed whatever the thread count.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DesignError;
use crate::channel::{theoretical_threshold, ChannelModel};
use crate::code::{DegreeDistribution, EdgeDistribution};
use crate::decoder::{fwht, spectral_permutations};
use crate::gf::{GfTable, Symbol};
use crate::llr::{
    entropy_of_probs, llr_from_probs_into, probs_from_llr_into, saturate_in_place, LlrVector, DEFAULT_LLR_SATURATION,
    PROB_FLOOR,
};
use crate::seeds::{derive_seed, stream_rng};

/// Default cutoff on the mean message entropy, in base-q units.
pub const DEFAULT_ENTROPY_EPSILON: f64 = 1e-4;

/// Smallest pool accepted by [`McdeConfig::validate`].
pub const MIN_NODE_COUNT: usize = 1000;

const CHUNK: usize = 1024;

/// Base-q entropy of the distribution a message represents.
pub fn message_entropy(msg: &LlrVector) -> f64 {
    msg.entropy()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdSearch {
    /// Ascending walk over every grid point until the first confirmed failure.
    Sweep,
    /// Bisection between the first and last grid points.
    Bisect { steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McdeConfig {
    pub node_count: usize,
    pub max_iterations: usize,
    pub entropy_epsilon: f64,
    pub llr_saturation: f64,
    /// Channel parameters to test. Empty means [`default_grid`].
    pub qber_grid: Vec<f64>,
    pub search: ThresholdSearch,
    /// Re-run a failing sweep point with twice the pool before accepting it.
    pub confirm_failures: bool,
}

impl Default for McdeConfig {
    fn default() -> Self {
        Self {
            node_count: 100_000,
            max_iterations: 150,
            entropy_epsilon: DEFAULT_ENTROPY_EPSILON,
            llr_saturation: DEFAULT_LLR_SATURATION,
            qber_grid: Vec::new(),
            search: ThresholdSearch::Sweep,
            confirm_failures: true,
        }
    }
}

impl McdeConfig {
    pub fn validate(&self) -> Result<(), DesignError> {
        let bad = |m: String| Err(DesignError::InvalidConfig(m));
        if self.node_count < MIN_NODE_COUNT {
            return bad(format!("node_count {} below {MIN_NODE_COUNT}", self.node_count));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive".into());
        }
        if !(self.entropy_epsilon > 0.0 && self.entropy_epsilon < 1.0) {
            return bad(format!("entropy_epsilon {} outside (0, 1)", self.entropy_epsilon));
        }
        if !(self.llr_saturation.is_finite() && self.llr_saturation > 0.0) {
            return bad(format!("llr_saturation {} must be positive", self.llr_saturation));
        }
        if let ThresholdSearch::Bisect { steps: 0 } = self.search {
            return bad("bisection needs at least one step".into());
        }
        Ok(())
    }
}

/// `points` equally spaced values over `[0.8 p*, p*]`, where `p*` is the
/// largest channel parameter any rate-`rate` code can handle.
pub fn default_grid(q: usize, rate: f64, points: usize) -> Result<Vec<f64>, DesignError> {
    let top = theoretical_threshold(q, rate)?;
    Ok(linspace(0.8 * top, top, points))
}

pub(crate) fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

struct DegreeSampler {
    degrees: Vec<usize>,
    index: WeightedIndex<f64>,
}

impl DegreeSampler {
    fn new(dist: &EdgeDistribution) -> Result<Self, DesignError> {
        let degrees = dist.terms().iter().map(|t| t.0).collect();
        let index = WeightedIndex::new(dist.terms().iter().map(|t| t.1))
            .map_err(|e| DesignError::Degenerate(format!("degree distribution: {e}")))?;
        Ok(Self { degrees, index })
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.degrees[self.index.sample(rng)]
    }
}

/// One density-evolution experiment at a fixed channel parameter.
pub struct Mcde {
    q: usize,
    gf: GfTable,
    perm: Vec<Symbol>,
    lambda: DegreeSampler,
    rho: DegreeSampler,
    channel: ChannelModel,
    node_count: usize,
    saturation: f64,
    seed: u64,
    iteration: usize,
    v2c: Vec<f64>,
    v2c_spectra: Vec<f64>,
    c2v: Vec<f64>,
    entropy: f64,
}

impl Mcde {
    /// Fills the pool with channel priors for the all-zero word.
    pub fn new(
        dist: &DegreeDistribution,
        channel: &ChannelModel,
        node_count: usize,
        saturation: f64,
        seed: u64,
    ) -> Result<Self, DesignError> {
        if node_count == 0 {
            return Err(DesignError::InvalidConfig("empty message pool".into()));
        }
        let q = channel.q();
        let gf = GfTable::new(q).map_err(crate::code::CodeError::from)?;
        let mut state = Self {
            q,
            perm: spectral_permutations(&gf),
            gf,
            lambda: DegreeSampler::new(dist.lambda())?,
            rho: DegreeSampler::new(dist.rho())?,
            channel: *channel,
            node_count,
            saturation,
            seed,
            iteration: 0,
            v2c: vec![0.0; node_count * q],
            v2c_spectra: vec![0.0; node_count * q],
            c2v: vec![0.0; node_count * q],
            entropy: 1.0,
        };
        state.variable_phase(true);
        Ok(state)
    }

    pub fn mean_entropy(&self) -> f64 {
        self.entropy
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Variable-to-check pool, `node_count` messages of length q.
    pub fn pool(&self) -> &[f64] {
        &self.v2c
    }

    /// One check sweep then one variable sweep. Returns the new mean entropy.
    pub fn step(&mut self) -> Result<f64, DesignError> {
        self.iteration += 1;
        self.check_phase();
        self.variable_phase(false);
        if !self.entropy.is_finite() {
            return Err(DesignError::Degenerate(format!(
                "mean entropy {} at iteration {}",
                self.entropy, self.iteration
            )));
        }
        Ok(self.entropy)
    }

    fn stream(&self, phase: u64, chunk: usize) -> u64 {
        ((self.iteration as u64) << 34) | (phase << 32) | chunk as u64
    }

    fn check_phase(&mut self) {
        let q = self.q;
        let n = self.node_count;
        let (gf, perm, rho, spectra, sat) = (&self.gf, &self.perm, &self.rho, &self.v2c_spectra, self.saturation);
        let seed = self.seed;
        let streams: Vec<u64> = (0..n.div_ceil(CHUNK)).map(|c| self.stream(1, c)).collect();
        self.c2v
            .par_chunks_mut(CHUNK * q)
            .zip(streams.par_iter())
            .for_each(|(out, &stream)| {
                let mut rng = stream_rng(seed, stream);
                let mut product = vec![0.0; q];
                let mut probs = vec![0.0; q];
                let scale = 1.0 / q as f64;
                for slot in out.chunks_exact_mut(q) {
                    let degree = rho.sample(&mut rng);
                    product.fill(1.0);
                    for _ in 1..degree {
                        let r = rng.random_range(0..n);
                        let h = rng.random_range(1..q);
                        let row = &perm[h * q..(h + 1) * q];
                        let spec = &spectra[r * q..(r + 1) * q];
                        for (p, &idx) in product.iter_mut().zip(row) {
                            *p *= spec[idx as usize];
                        }
                    }
                    fwht(&mut product);
                    let h_out = rng.random_range(1..q) as Symbol;
                    let row = gf.mul_row(h_out);
                    for (k, p) in probs.iter_mut().enumerate() {
                        *p = (product[row[k] as usize] * scale).max(PROB_FLOOR);
                    }
                    llr_from_probs_into(&probs, slot, sat);
                }
            });
    }

    /// Rebuilds the variable pool. The initial fill uses priors only.
    fn variable_phase(&mut self, initial: bool) {
        let q = self.q;
        let n = self.node_count;
        let (lambda, channel, c2v, sat) = (&self.lambda, &self.channel, &self.c2v, self.saturation);
        let seed = self.seed;
        let streams: Vec<u64> = (0..n.div_ceil(CHUNK)).map(|c| self.stream(2, c)).collect();
        let sums: Vec<f64> = self
            .v2c
            .par_chunks_mut(CHUNK * q)
            .zip(self.v2c_spectra.par_chunks_mut(CHUNK * q))
            .zip(streams.par_iter())
            .map(|((out, spectra), &stream)| {
                let mut rng = stream_rng(seed, stream);
                let mut entropy = 0.0;
                for (slot, spec) in out.chunks_exact_mut(q).zip(spectra.chunks_exact_mut(q)) {
                    let y = channel.sample_symbol(0, &mut rng);
                    channel.prior_into(y, slot, sat);
                    if !initial {
                        let degree = lambda.sample(&mut rng);
                        for _ in 1..degree {
                            let r = rng.random_range(0..n);
                            for (s, v) in slot.iter_mut().zip(&c2v[r * q..(r + 1) * q]) {
                                *s += v;
                            }
                        }
                        saturate_in_place(slot, sat);
                    }
                    probs_from_llr_into(slot, spec);
                    entropy += entropy_of_probs(spec);
                    fwht(spec);
                }
                entropy
            })
            .collect();
        self.entropy = sums.iter().sum::<f64>() / n as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdeRun {
    pub p: f64,
    pub node_count: usize,
    pub converged: bool,
    /// Mean entropy before the first iteration and after each one.
    pub trajectory: Vec<f64>,
}

impl McdeRun {
    pub fn iterations(&self) -> usize {
        self.trajectory.len() - 1
    }

    pub fn final_entropy(&self) -> f64 {
        *self.trajectory.last().expect("trajectory holds the initial entropy")
    }
}

/// Iterates until the mean entropy drops below `epsilon` or `max_iterations`
/// have run.
pub fn mcde_run(
    dist: &DegreeDistribution,
    channel: &ChannelModel,
    node_count: usize,
    max_iterations: usize,
    epsilon: f64,
    saturation: f64,
    seed: u64,
) -> Result<McdeRun, DesignError> {
    let mut state = Mcde::new(dist, channel, node_count, saturation, seed)?;
    let mut trajectory = vec![state.mean_entropy()];
    let mut converged = state.mean_entropy() < epsilon;
    while !converged && state.iteration() < max_iterations {
        let h = state.step()?;
        trajectory.push(h);
        converged = h < epsilon;
    }
    Ok(McdeRun {
        p: channel.p(),
        node_count,
        converged,
        trajectory,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridBoundary {
    Interior,
    /// Even the smallest tested parameter failed; the threshold lies below.
    BelowGrid,
    /// The largest tested parameter succeeded; the threshold may lie above.
    AboveGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointVerdict {
    pub p: f64,
    pub node_count: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_entropy: f64,
    /// A repeat of an earlier failing verdict at the same `p`.
    pub confirmation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    /// Largest tested parameter that converged with every smaller tested one;
    /// `None` when the first point already failed.
    pub threshold: Option<f64>,
    pub boundary: GridBoundary,
    pub verdicts: Vec<PointVerdict>,
    /// Failures overturned by a confirmation run.
    pub overturned: usize,
}

impl ThresholdEstimate {
    /// Threshold as a plain number, 0 when below the grid.
    pub fn value(&self) -> f64 {
        self.threshold.unwrap_or(0.0)
    }
}

/// Density-evolution threshold of `dist` on the q-ary symmetric channel.
pub fn mcde_threshold(
    dist: &DegreeDistribution,
    q: usize,
    cfg: &McdeConfig,
    seed: u64,
) -> Result<ThresholdEstimate, DesignError> {
    cfg.validate()?;
    let mut grid = if cfg.qber_grid.is_empty() {
        default_grid(q, dist.design_rate(), 20)?
    } else {
        cfg.qber_grid.clone()
    };
    if grid.iter().any(|p| !p.is_finite()) {
        return Err(DesignError::InvalidConfig("grid contains a non-finite value".into()));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    for &p in &grid {
        ChannelModel::new(q, p)?;
    }

    let eval = |p: f64, nodes: usize, tag: u64, confirmation: bool| -> Result<PointVerdict, DesignError> {
        let channel = ChannelModel::new(q, p)?;
        let run = mcde_run(
            dist,
            &channel,
            nodes,
            cfg.max_iterations,
            cfg.entropy_epsilon,
            cfg.llr_saturation,
            derive_seed(seed, tag),
        )?;
        log::debug!(
            "mcde p={p:.5} nodes={nodes} converged={} after {} iterations (H={:.2e})",
            run.converged,
            run.iterations(),
            run.final_entropy()
        );
        Ok(PointVerdict {
            p,
            node_count: nodes,
            converged: run.converged,
            iterations: run.iterations(),
            final_entropy: run.final_entropy(),
            confirmation,
        })
    };

    match cfg.search {
        ThresholdSearch::Sweep => sweep(&grid, cfg, eval),
        ThresholdSearch::Bisect { steps } => bisect(&grid, cfg.node_count, steps, eval),
    }
}

fn sweep<F>(grid: &[f64], cfg: &McdeConfig, eval: F) -> Result<ThresholdEstimate, DesignError>
where
    F: Fn(f64, usize, u64, bool) -> Result<PointVerdict, DesignError>,
{
    let mut verdicts = Vec::new();
    let mut overturned = 0;
    let mut last_ok = None;
    for (i, &p) in grid.iter().enumerate() {
        let v = eval(p, cfg.node_count, i as u64, false)?;
        let mut ok = v.converged;
        verdicts.push(v);
        if !ok && cfg.confirm_failures {
            let again = eval(p, 2 * cfg.node_count, (1 << 32) | i as u64, true)?;
            ok = again.converged;
            verdicts.push(again);
            if ok {
                overturned += 1;
            }
        }
        if !ok {
            let boundary = if last_ok.is_none() {
                GridBoundary::BelowGrid
            } else {
                GridBoundary::Interior
            };
            return Ok(ThresholdEstimate {
                threshold: last_ok,
                boundary,
                verdicts,
                overturned,
            });
        }
        last_ok = Some(p);
    }
    Ok(ThresholdEstimate {
        threshold: last_ok,
        boundary: GridBoundary::AboveGrid,
        verdicts,
        overturned,
    })
}

fn bisect<F>(grid: &[f64], nodes: usize, steps: usize, eval: F) -> Result<ThresholdEstimate, DesignError>
where
    F: Fn(f64, usize, u64, bool) -> Result<PointVerdict, DesignError>,
{
    let (mut lo, mut hi) = match (grid.first(), grid.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(DesignError::InvalidConfig("empty search grid".into())),
    };
    let mut verdicts = vec![eval(lo, nodes, 0, false)?];
    if !verdicts[0].converged {
        return Ok(ThresholdEstimate {
            threshold: None,
            boundary: GridBoundary::BelowGrid,
            verdicts,
            overturned: 0,
        });
    }
    let mut saw_failure = false;
    if hi > lo {
        for step in 0..steps {
            let mid = 0.5 * (lo + hi);
            let v = eval(mid, nodes, 1 + step as u64, false)?;
            if v.converged {
                lo = mid;
            } else {
                hi = mid;
                saw_failure = true;
            }
            verdicts.push(v);
        }
    }
    let mut boundary = GridBoundary::Interior;
    if !saw_failure {
        let top = grid[grid.len() - 1];
        let v = eval(top, nodes, 1 + steps as u64, false)?;
        if v.converged {
            lo = top;
            boundary = GridBoundary::AboveGrid;
        }
        verdicts.push(v);
    }
    Ok(ThresholdEstimate {
        threshold: Some(lo),
        boundary,
        verdicts,
        overturned: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles;

    fn regular_36() -> DegreeDistribution {
        DegreeDistribution::concentrated(EdgeDistribution::regular(3), 0.5).unwrap()
    }

    #[test]
    fn entropy_of_reference_messages() {
        assert!((message_entropy(&LlrVector::uniform(8)) - 1.0).abs() < 1e-12);
        let delta = LlrVector::from_values(vec![0.0, 30.0, 30.0, 30.0], 30.0);
        assert!(message_entropy(&delta) < 1e-10);
        let half = LlrVector::from_probs(&[0.5, 0.5, 0.0, 0.0], 30.0).unwrap();
        assert!((message_entropy(&half) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn noiseless_channel_converges_in_one_step() {
        let ch = ChannelModel::new(8, 0.0).unwrap();
        let dist = ensembles::by_rate(0.5).unwrap().distribution().unwrap();
        let mut state = Mcde::new(&dist, &ch, 2000, 30.0, 1).unwrap();
        let h = state.step().unwrap();
        assert!(h < 1e-9, "{h}");
    }

    #[test]
    fn same_seed_same_trajectory() {
        let ch = ChannelModel::new(4, 0.1).unwrap();
        let a = mcde_run(&regular_36(), &ch, 3000, 10, 1e-4, 30.0, 9).unwrap();
        let b = mcde_run(&regular_36(), &ch, 3000, 10, 1e-4, 30.0, 9).unwrap();
        let c = mcde_run(&regular_36(), &ch, 3000, 10, 1e-4, 30.0, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trajectory, c.trajectory);
    }

    #[test]
    fn binary_three_six_below_and_above_its_threshold() {
        // the (3,6) ensemble on the binary symmetric channel has threshold
        // near 0.084
        let dist = regular_36();
        let good = mcde_run(&dist, &ChannelModel::new(2, 0.06).unwrap(), 5000, 150, 1e-4, 30.0, 3).unwrap();
        assert!(good.converged);
        assert!(good.trajectory.windows(2).take(10).all(|w| w[1] <= w[0] + 1e-3));
        let bad = mcde_run(&dist, &ChannelModel::new(2, 0.11).unwrap(), 5000, 60, 1e-4, 30.0, 3).unwrap();
        assert!(!bad.converged);
        assert!(bad.final_entropy() > 0.1);
    }

    #[test]
    fn far_above_threshold_has_no_collapse() {
        let dist = ensembles::by_rate(0.5).unwrap().distribution().unwrap();
        let run = mcde_run(&dist, &ChannelModel::new(8, 0.30).unwrap(), 2000, 40, 1e-4, 30.0, 5).unwrap();
        assert!(!run.converged);
        assert!(run.final_entropy() > 0.2, "{}", run.final_entropy());
    }

    #[test]
    fn single_zero_point_is_above_grid() {
        let cfg = McdeConfig {
            node_count: 1000,
            qber_grid: vec![0.0],
            ..McdeConfig::default()
        };
        let est = mcde_threshold(&regular_36(), 8, &cfg, 0).unwrap();
        assert_eq!(est.threshold, Some(0.0));
        assert_eq!(est.boundary, GridBoundary::AboveGrid);
    }

    #[test]
    fn grid_entirely_above_threshold_is_flagged() {
        let cfg = McdeConfig {
            node_count: 1000,
            max_iterations: 30,
            qber_grid: vec![0.5, 0.6],
            confirm_failures: false,
            ..McdeConfig::default()
        };
        let est = mcde_threshold(&regular_36(), 8, &cfg, 0).unwrap();
        assert_eq!(est.threshold, None);
        assert_eq!(est.boundary, GridBoundary::BelowGrid);
        assert_eq!(est.verdicts.len(), 1);
    }

    #[test]
    fn sweep_and_bisection_agree_roughly() {
        let dist = regular_36();
        let grid = linspace(0.04, 0.12, 9);
        let sweep_cfg = McdeConfig {
            node_count: 4000,
            qber_grid: grid.clone(),
            ..McdeConfig::default()
        };
        let sweep = mcde_threshold(&dist, 2, &sweep_cfg, 11).unwrap();
        let bisect_cfg = McdeConfig {
            search: ThresholdSearch::Bisect { steps: 5 },
            ..sweep_cfg.clone()
        };
        let bis = mcde_threshold(&dist, 2, &bisect_cfg, 11).unwrap();
        assert_eq!(sweep.boundary, GridBoundary::Interior);
        assert_eq!(bis.boundary, GridBoundary::Interior);
        assert!(
            (sweep.value() - bis.value()).abs() <= 0.011,
            "{} vs {}",
            sweep.value(),
            bis.value()
        );
        // every point up to the threshold has a converged verdict
        for v in sweep.verdicts.iter().filter(|v| v.p <= sweep.value()) {
            assert!(sweep.verdicts.iter().any(|w| w.p == v.p && w.converged));
        }
    }

    #[test]
    fn config_validation() {
        let cfg = McdeConfig {
            node_count: 10,
            ..McdeConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = McdeConfig {
            entropy_epsilon: 0.0,
            ..McdeConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = McdeConfig {
            search: ThresholdSearch::Bisect { steps: 0 },
            ..McdeConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_grid_spans_the_top_fifth() {
        let g = default_grid(8, 0.5, 20).unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[19] - 0.2473).abs() < 5e-4, "{}", g[19]);
        assert!((g[0] - 0.8 * g[19]).abs() < 1e-12);
    }
}
