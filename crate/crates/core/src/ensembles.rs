//! Built-in registry of published 8-ary ensembles, one per design rate.
//!
//! Variable-side coefficients are stored exactly as printed, keyed by node
//! degree (exponent plus one). Printed rows are rounded, so they are loaded
//! with [`LambdaPolicy::published_table`] and rescaled to sum to one; the
//! rate-0.50 row sums to 0.970.

use crate::code::{validate_lambda, CheckedLambda, CodeError, DegreeDistribution, LambdaPolicy};

/// Field order all registry entries were designed for.
pub const REGISTRY_Q: usize = 8;

/// Degree cap used for the published designs.
pub const REGISTRY_D_V_MAX: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedEnsemble {
    pub rate: f64,
    /// Largest QBER any rate-`rate` code can handle, from `H(X|Y) = 1 - rate`.
    pub theoretical_threshold: f64,
    /// Density-evolution threshold of the ensemble.
    pub ensemble_threshold: f64,
    /// Efficiency at the ensemble threshold.
    pub ensemble_efficiency: f64,
    /// Efficiency of a finite-length code at FER 1%.
    pub code_efficiency: f64,
    /// `(degree, coefficient)` pairs as printed.
    pub lambda_raw: &'static [(usize, f64)],
    /// False when the printed efficiency disagrees with the printed
    /// thresholds by more than rounding explains.
    pub efficiency_consistent: bool,
}

impl PublishedEnsemble {
    /// Registry key, e.g. `r050` for rate 0.50.
    pub fn name(&self) -> String {
        format!("r{:03}", (self.rate * 100.0).round() as usize)
    }

    pub fn lambda(&self) -> Result<CheckedLambda, CodeError> {
        validate_lambda(self.lambda_raw, &LambdaPolicy::published_table(REGISTRY_D_V_MAX))
    }

    /// Variable side from the table with the concentrated check side for
    /// this rate.
    pub fn distribution(&self) -> Result<DegreeDistribution, CodeError> {
        DegreeDistribution::concentrated(self.lambda()?.lambda, self.rate)
    }
}

macro_rules! ensemble {
    ($rate:expr, $tt:expr, $et:expr, $ee:expr, $ce:expr, $ok:expr, [$(($d:expr, $c:expr)),* $(,)?]) => {
        PublishedEnsemble {
            rate: $rate,
            theoretical_threshold: $tt,
            ensemble_threshold: $et,
            ensemble_efficiency: $ee,
            code_efficiency: $ce,
            lambda_raw: &[$(($d, $c)),*],
            efficiency_consistent: $ok,
        }
    };
}

pub static PUBLISHED: [PublishedEnsemble; 9] = [
    ensemble!(
        0.90,
        0.033,
        0.031,
        1.060,
        1.17,
        true,
        [
            (2, 0.112),
            (3, 0.103),
            (4, 0.194),
            (10, 0.146),
            (11, 0.163),
            (18, 0.003),
            (20, 0.173),
            (27, 0.049),
            (29, 0.006),
            (30, 0.052),
        ]
    ),
    ensemble!(
        0.85,
        0.053,
        0.052,
        1.080,
        1.12,
        false,
        [
            (2, 0.125),
            (3, 0.165),
            (6, 0.163),
            (8, 0.11),
            (13, 0.073),
            (19, 0.089),
            (28, 0.122),
            (33, 0.154),
        ]
    ),
    ensemble!(
        0.80,
        0.0758,
        0.0724,
        1.038,
        1.12,
        true,
        [
            (2, 0.146),
            (3, 0.177),
            (5, 0.130),
            (8, 0.084),
            (11, 0.149),
            (20, 0.035),
            (23, 0.029),
            (26, 0.087),
            (27, 0.163),
        ]
    ),
    ensemble!(
        0.75,
        0.100,
        0.096,
        1.030,
        1.10,
        true,
        [
            (2, 0.165),
            (3, 0.192),
            (6, 0.092),
            (8, 0.176),
            (11, 0.019),
            (18, 0.086),
            (20, 0.129),
            (31, 0.103),
            (32, 0.038),
        ]
    ),
    ensemble!(
        0.70,
        0.126,
        0.121,
        1.030,
        1.10,
        true,
        [
            (2, 0.160),
            (3, 0.208),
            (6, 0.140),
            (9, 0.096),
            (11, 0.028),
            (12, 0.013),
            (19, 0.113),
            (22, 0.032),
            (28, 0.211),
        ]
    ),
    ensemble!(
        0.65,
        0.154,
        0.147,
        1.032,
        1.10,
        true,
        [
            (2, 0.173),
            (3, 0.228),
            (5, 0.092),
            (9, 0.169),
            (15, 0.112),
            (24, 0.019),
            (25, 0.012),
            (29, 0.195),
        ]
    ),
    ensemble!(
        0.60,
        0.183,
        0.177,
        1.026,
        1.10,
        true,
        [
            (2, 0.192),
            (3, 0.196),
            (6, 0.222),
            (14, 0.104),
            (24, 0.114),
            (26, 0.055),
            (28, 0.117),
        ]
    ),
    ensemble!(
        0.55,
        0.214,
        0.207,
        1.024,
        1.10,
        true,
        [
            (2, 0.183),
            (3, 0.269),
            (7, 0.124),
            (9, 0.036),
            (11, 0.097),
            (22, 0.004),
            (26, 0.116),
            (27, 0.171),
        ]
    ),
    ensemble!(
        0.50,
        0.247,
        0.239,
        1.024,
        1.11,
        true,
        [
            (2, 0.215),
            (3, 0.256),
            (5, 0.030),
            (8, 0.154),
            (12, 0.065),
            (14, 0.050),
            (22, 0.072),
            (28, 0.128),
        ]
    ),
];

/// Entry whose rate is within 1e-9 of `rate`.
pub fn by_rate(rate: f64) -> Option<&'static PublishedEnsemble> {
    PUBLISHED.iter().find(|e| (e.rate - rate).abs() < 1e-9)
}

/// Entry by registry key (`r050`) or by rate written as a number (`0.5`).
pub fn lookup(name: &str) -> Option<&'static PublishedEnsemble> {
    if let Some(e) = PUBLISHED.iter().find(|e| e.name() == name) {
        return Some(e);
    }
    name.parse::<f64>().ok().and_then(by_rate)
}
