//! Differential evolution (DE/rand/1/bin) over variable-side degree
//! distributions, scored by the density-evolution threshold.
//!
//! A genome holds `max_distinct_degrees` degree genes followed by as many
//! coefficient genes. Degrees are rounded into `[2, d_v_max]`, duplicates are
//! merged, negative coefficients clipped, only the largest
//! `max_distinct_degrees` terms kept and the rest renormalized. The check side
//! is always the concentrated distribution for the target rate.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mcde::{mcde_threshold, GridBoundary, McdeConfig, ThresholdSearch};
use super::DesignError;
use crate::channel::{conditional_entropy, theoretical_threshold};
use crate::code::{validate_lambda, DegreeDistribution, EdgeDistribution, LambdaPolicy};
use crate::seeds::{derive_seed, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    pub population_size: usize,
    pub differential_weight: f64,
    pub crossover_prob: f64,
    pub max_distinct_degrees: usize,
    pub d_v_max: usize,
    /// Generations including the initial population.
    pub generations: usize,
    /// Threshold search window as fractions of the best possible threshold.
    pub window: (f64, f64),
    pub bisect_steps: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population_size: 15,
            differential_weight: 0.85,
            crossover_prob: 0.7,
            max_distinct_degrees: 10,
            d_v_max: 40,
            generations: 30,
            window: (0.5, 1.2),
            bisect_steps: 6,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<(), DesignError> {
        let bad = |m: String| Err(DesignError::InvalidConfig(m));
        if self.population_size < 4 {
            return bad(format!("population_size {} below 4", self.population_size));
        }
        if !(self.differential_weight > 0.0 && self.differential_weight.is_finite()) {
            return bad(format!(
                "differential_weight {} must be positive",
                self.differential_weight
            ));
        }
        if !(self.crossover_prob > 0.0 && self.crossover_prob <= 1.0) {
            return bad(format!("crossover_prob {} outside (0, 1]", self.crossover_prob));
        }
        if self.max_distinct_degrees == 0 {
            return bad("max_distinct_degrees must be positive".into());
        }
        if self.d_v_max < 2 {
            return bad(format!("d_v_max {} below 2", self.d_v_max));
        }
        if self.generations == 0 {
            return bad("generations must be positive".into());
        }
        if !(self.window.0 >= 0.0 && self.window.0 < self.window.1) {
            return bad(format!("search window {:?} is empty", self.window));
        }
        if self.bisect_steps == 0 {
            return bad("bisect_steps must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub generation: usize,
    pub candidate: usize,
    /// `degree:coefficient` text form.
    pub lambda: String,
    pub threshold: Option<f64>,
    pub boundary: GridBoundary,
    /// Conditional entropy at the estimated threshold.
    pub entropy_at_threshold: Option<f64>,
    /// Entered the population.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeAudit {
    pub seed: u64,
    pub rate: f64,
    pub q: usize,
    pub generations: usize,
    pub evaluations: usize,
    pub window: (f64, f64),
    pub entries: Vec<AuditEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeResult {
    pub distribution: DegreeDistribution,
    pub threshold: Option<f64>,
    pub audit: DeAudit,
    pub warnings: Vec<String>,
}

/// Projects a raw genome onto a valid distribution. Returns the repaired
/// genome (rounded degrees, merged and renormalized coefficients) and the
/// distribution it encodes.
pub fn repair_genome(genome: &[f64], cfg: &DeConfig) -> Result<(Vec<f64>, EdgeDistribution), DesignError> {
    let genes = cfg.max_distinct_degrees;
    if genome.len() != 2 * genes {
        return Err(DesignError::InvalidConfig(format!(
            "genome length {} is not 2 x {genes}",
            genome.len()
        )));
    }
    let degree_of = |g: f64| -> usize {
        let d = if g.is_finite() { g.round() } else { 2.0 };
        d.clamp(2.0, cfg.d_v_max as f64) as usize
    };
    let degrees: Vec<usize> = genome[..genes].iter().map(|&g| degree_of(g)).collect();
    let coefs: Vec<f64> = genome[genes..]
        .iter()
        .map(|&c| if c.is_finite() { c.max(0.0) } else { 0.0 })
        .collect();

    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for (&d, &c) in degrees.iter().zip(&coefs) {
        *merged.entry(d).or_default() += c;
    }
    let mut terms: Vec<(usize, f64)> = merged.into_iter().filter(|t| t.1 > 0.0).collect();
    if terms.is_empty() {
        terms.push((degrees[0], 1.0));
    }
    if terms.len() > cfg.max_distinct_degrees {
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        terms.truncate(cfg.max_distinct_degrees);
        terms.sort_by_key(|t| t.0);
    }
    let total: f64 = terms.iter().map(|t| t.1).sum();
    for t in &mut terms {
        t.1 /= total;
    }

    let mut repaired = vec![0.0; 2 * genes];
    let mut placed = Vec::new();
    for (k, &d) in degrees.iter().enumerate() {
        repaired[k] = d as f64;
        if !placed.contains(&d) {
            if let Some(t) = terms.iter().find(|t| t.0 == d) {
                repaired[genes + k] = t.1;
                placed.push(d);
            }
        }
    }
    let policy = LambdaPolicy {
        max_distinct: Some(cfg.max_distinct_degrees),
        ..LambdaPolicy::strict(cfg.d_v_max)
    };
    let lambda = validate_lambda(&terms, &policy)?.lambda;
    Ok((repaired, lambda))
}

struct Scored {
    genome: Vec<f64>,
    dist: DegreeDistribution,
    threshold: Option<f64>,
    boundary: GridBoundary,
}

impl Scored {
    fn fitness(&self) -> f64 {
        self.threshold.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Searches for the variable-side distribution with the highest estimated
/// threshold at `rate` over GF(q).
pub fn de_optimize(rate: f64, q: usize, de: &DeConfig, mcde: &McdeConfig, seed: u64) -> Result<DeResult, DesignError> {
    de.validate()?;
    mcde.validate()?;
    let top = theoretical_threshold(q, rate)?;
    let window = (
        de.window.0 * top,
        (de.window.1 * top).min(crate::channel::max_transition(q)),
    );
    let objective = McdeConfig {
        qber_grid: vec![window.0, window.1],
        search: ThresholdSearch::Bisect { steps: de.bisect_steps },
        ..mcde.clone()
    };
    let genes = de.max_distinct_degrees;
    let mut rng = stream_rng(seed, 0);

    let evaluate = |genomes: Vec<Vec<f64>>, generation: usize| -> Result<Vec<Scored>, DesignError> {
        genomes
            .into_par_iter()
            .enumerate()
            .map(|(i, raw)| {
                let (genome, lambda) = repair_genome(&raw, de)?;
                let dist = DegreeDistribution::concentrated(lambda, rate)?;
                let tag = ((generation as u64) << 20) | i as u64;
                let est = mcde_threshold(&dist, q, &objective, derive_seed(seed, tag))?;
                Ok(Scored {
                    genome,
                    dist,
                    threshold: est.threshold,
                    boundary: est.boundary,
                })
            })
            .collect()
    };
    let entry = |s: &Scored, generation: usize, candidate: usize, accepted: bool| AuditEntry {
        generation,
        candidate,
        lambda: s.dist.lambda().to_string(),
        threshold: s.threshold,
        boundary: s.boundary,
        entropy_at_threshold: s.threshold.map(|p| conditional_entropy(q, p)),
        accepted,
    };

    let initial: Vec<Vec<f64>> = (0..de.population_size)
        .map(|_| {
            let mut g = vec![0.0; 2 * genes];
            for x in &mut g[..genes] {
                *x = rng.random_range(2.0..=de.d_v_max as f64);
            }
            for x in &mut g[genes..] {
                *x = rng.random::<f64>();
            }
            g
        })
        .collect();
    let mut population = evaluate(initial, 0)?;
    let mut entries: Vec<AuditEntry> = population
        .iter()
        .enumerate()
        .map(|(i, s)| entry(s, 0, i, true))
        .collect();
    let mut evaluations = population.len();
    let mut best = best_index(&population);
    let mut improved_last = false;

    for generation in 1..de.generations {
        let n = population.len();
        let trials: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let picks = pick_three(&mut rng, n, i);
                let (a, b, c) = (
                    &population[picks[0]].genome,
                    &population[picks[1]].genome,
                    &population[picks[2]].genome,
                );
                let target = &population[i].genome;
                let forced = rng.random_range(0..2 * genes);
                (0..2 * genes)
                    .map(|j| {
                        if j == forced || rng.random::<f64>() < de.crossover_prob {
                            a[j] + de.differential_weight * (b[j] - c[j])
                        } else {
                            target[j]
                        }
                    })
                    .collect()
            })
            .collect();
        let scored = evaluate(trials, generation)?;
        evaluations += scored.len();
        let before = population[best].fitness();
        for (i, trial) in scored.into_iter().enumerate() {
            let accept = trial.fitness() >= population[i].fitness();
            entries.push(entry(&trial, generation, i, accept));
            if accept {
                population[i] = trial;
            }
        }
        best = best_index(&population);
        improved_last = population[best].fitness() > before;
        log::info!(
            "generation {generation}: best threshold {:?} ({})",
            population[best].threshold,
            population[best].dist.lambda()
        );
    }

    let mut warnings = Vec::new();
    if de.generations == 1 {
        warnings.push("generation budget of 1 only scores the initial population; returning its best".to_string());
    } else if improved_last {
        warnings.push(format!(
            "budget of {} generations exhausted while the best candidate was still improving",
            de.generations
        ));
    }
    if population[best].threshold.is_none() {
        warnings.push(format!(
            "no candidate converged anywhere in the search window [{:.5}, {:.5}]",
            window.0, window.1
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let winner = &population[best];
    Ok(DeResult {
        distribution: winner.dist.clone(),
        threshold: winner.threshold,
        audit: DeAudit {
            seed,
            rate,
            q,
            generations: de.generations,
            evaluations,
            window,
            entries,
        },
        warnings,
    })
}

fn best_index(population: &[Scored]) -> usize {
    let mut best = 0;
    for (i, s) in population.iter().enumerate() {
        if s.fitness() > population[best].fitness() {
            best = i;
        }
    }
    best
}

/// Three distinct indices different from `exclude`.
fn pick_three<R: Rng + ?Sized>(rng: &mut R, n: usize, exclude: usize) -> [usize; 3] {
    let idx = sample(rng, n - 1, 3);
    let fix = |k: usize| if k >= exclude { k + 1 } else { k };
    [fix(idx.index(0)), fix(idx.index(1)), fix(idx.index(2))]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (DeConfig, McdeConfig) {
        let de = DeConfig {
            population_size: 4,
            generations: 2,
            max_distinct_degrees: 4,
            d_v_max: 12,
            bisect_steps: 3,
            ..DeConfig::default()
        };
        let mcde = McdeConfig {
            node_count: 1000,
            max_iterations: 40,
            ..McdeConfig::default()
        };
        (de, mcde)
    }

    #[test]
    fn repair_merges_clips_and_renormalizes() {
        let cfg = DeConfig {
            max_distinct_degrees: 4,
            d_v_max: 10,
            ..DeConfig::default()
        };
        let genome = [2.4, 2.0, 57.0, 5.6, 0.3, 0.1, -0.5, 0.6];
        let (repaired, lambda) = repair_genome(&genome, &cfg).unwrap();
        assert_eq!(lambda.terms(), &[(2, 0.4), (6, 0.6)]);
        assert_eq!(&repaired[..4], &[2.0, 2.0, 10.0, 6.0]);
        assert_eq!(&repaired[4..], &[0.4, 0.0, 0.0, 0.6]);
        let (again, _) = repair_genome(&repaired, &cfg).unwrap();
        assert_eq!(again, repaired);
    }

    #[test]
    fn repair_enforces_sparsity() {
        let cfg = DeConfig {
            max_distinct_degrees: 3,
            ..DeConfig::default()
        };
        // more distinct degrees than allowed cannot arise from 3 genes, but a
        // zero-sum genome must still produce something valid
        let (_, lambda) = repair_genome(&[3.0, 4.0, 5.0, 0.0, -1.0, 0.0], &cfg).unwrap();
        assert_eq!(lambda.terms(), &[(3, 1.0)]);
    }

    #[test]
    fn small_population_rejected() {
        let (mut de, mcde) = tiny();
        de.population_size = 2;
        assert!(matches!(
            de_optimize(0.5, 8, &de, &mcde, 0),
            Err(DesignError::InvalidConfig(_))
        ));
    }

    #[test]
    fn single_generation_warns_and_logs_everything() {
        let (mut de, mcde) = tiny();
        de.generations = 1;
        let res = de_optimize(0.5, 4, &de, &mcde, 3).unwrap();
        assert_eq!(res.audit.evaluations, 4);
        assert_eq!(res.audit.entries.len(), 4);
        assert!(res.warnings.iter().any(|w| w.contains("initial population")));
    }

    #[test]
    fn outputs_respect_constraints_and_capacity() {
        let (de, mcde) = tiny();
        let rate = 0.5;
        let res = de_optimize(rate, 4, &de, &mcde, 8).unwrap();
        assert_eq!(res.audit.evaluations, 8);
        let lambda = res.distribution.lambda();
        assert!(lambda.distinct_degrees() <= de.max_distinct_degrees);
        assert!(lambda.max_degree() <= de.d_v_max);
        assert!((res.distribution.design_rate() - rate).abs() < 1e-9);
        for e in &res.audit.entries {
            if let Some(h) = e.entropy_at_threshold {
                assert!(h <= 1.0 - rate + 0.005, "{e:?}");
            }
        }
        let again = de_optimize(rate, 4, &de, &mcde, 8).unwrap();
        assert_eq!(res.audit, again.audit);
    }
}
