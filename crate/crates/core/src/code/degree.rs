//! Edge-perspective degree distributions.
//!
//! `lambda_i` (`rho_i`) is the fraction of edges attached to variable (check)
//! nodes of degree `i`, i.e. the coefficient of `x^(i-1)`. The text form used
//! by the CLI and the designer lists `degree:fraction` pairs, for example
//! `2:0.215 3:0.256 5:0.03`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CodeError;

/// Tolerance on `sum(lambda) == 1` for user input.
pub const STRICT_SUM_TOLERANCE: f64 = 1e-6;

/// Tolerance used for published tables whose printed coefficients are rounded.
pub const TABLE_SUM_TOLERANCE: f64 = 0.05;

/// Largest check degree a concentrated distribution may ask for.
pub const MAX_CHECK_DEGREE: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDistribution {
    terms: Vec<(usize, f64)>,
}

impl EdgeDistribution {
    /// Sorted, merged, strictly positive terms. No normalization is applied.
    fn from_clean(terms: Vec<(usize, f64)>) -> Self {
        Self { terms }
    }

    /// A single degree carrying all edges.
    pub fn regular(degree: usize) -> Self {
        Self {
            terms: vec![(degree, 1.0)],
        }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn coefficient(&self, degree: usize) -> f64 {
        self.terms.iter().find(|(d, _)| *d == degree).map_or(0.0, |(_, c)| *c)
    }

    /// `sum_i f_i / i`, the number of nodes per edge.
    pub fn nodes_per_edge(&self) -> f64 {
        self.terms.iter().map(|&(d, c)| c / d as f64).sum()
    }

    /// Average node degree.
    pub fn average_degree(&self) -> f64 {
        1.0 / self.nodes_per_edge()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.last().map_or(0, |t| t.0)
    }

    pub fn min_degree(&self) -> usize {
        self.terms.first().map_or(0, |t| t.0)
    }

    pub fn distinct_degrees(&self) -> usize {
        self.terms.len()
    }

    pub fn sum(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum()
    }

    /// Fraction of nodes (rather than edges) of each degree.
    pub fn node_fractions(&self) -> Vec<(usize, f64)> {
        let total = self.nodes_per_edge();
        self.terms.iter().map(|&(d, c)| (d, c / d as f64 / total)).collect()
    }
}

impl fmt::Display for EdgeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (d, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{d}:{c}")?;
        }
        Ok(())
    }
}

/// Raw `degree:fraction` pairs as typed by a user, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTerms(pub Vec<(usize, f64)>);

impl FromStr for RawTerms {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut terms = Vec::new();
        for tok in s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let (d, c) = tok
                .split_once(':')
                .ok_or_else(|| CodeError::Parse(format!("expected degree:fraction, got {tok:?}")))?;
            let d = d
                .trim()
                .parse::<usize>()
                .map_err(|e| CodeError::Parse(format!("bad degree in {tok:?}: {e}")))?;
            let c = c
                .trim()
                .parse::<f64>()
                .map_err(|e| CodeError::Parse(format!("bad fraction in {tok:?}: {e}")))?;
            terms.push((d, c));
        }
        if terms.is_empty() {
            return Err(CodeError::EmptyDistribution);
        }
        Ok(Self(terms))
    }
}

/// Constraints applied by [`validate_lambda`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPolicy {
    pub d_v_max: usize,
    pub sum_tolerance: f64,
    pub max_distinct: Option<usize>,
}

impl LambdaPolicy {
    pub fn strict(d_v_max: usize) -> Self {
        Self {
            d_v_max,
            sum_tolerance: STRICT_SUM_TOLERANCE,
            max_distinct: None,
        }
    }

    /// Accepts the rounding seen in published coefficient tables.
    pub fn published_table(d_v_max: usize) -> Self {
        Self {
            sum_tolerance: TABLE_SUM_TOLERANCE,
            ..Self::strict(d_v_max)
        }
    }
}

/// A validated variable-side distribution together with the sum of the raw
/// coefficients it was rescaled from.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedLambda {
    pub lambda: EdgeDistribution,
    pub raw_sum: f64,
}

impl CheckedLambda {
    pub fn was_rescaled(&self) -> bool {
        self.raw_sum != 1.0
    }
}

/// Checks and normalizes a variable-node edge distribution.
///
/// Duplicate degrees are merged and zero coefficients dropped. Degrees must
/// lie in `[2, d_v_max]`. If the coefficients sum to within
/// `policy.sum_tolerance` of one they are rescaled proportionally.
pub fn validate_lambda(raw: &[(usize, f64)], policy: &LambdaPolicy) -> Result<CheckedLambda, CodeError> {
    let mut terms: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
    for &(d, c) in raw {
        if !c.is_finite() || c < 0.0 {
            return Err(CodeError::NegativeCoefficient { degree: d, value: c });
        }
        if d < 2 {
            return Err(CodeError::DegreeTooSmall(d));
        }
        if d > policy.d_v_max {
            return Err(CodeError::DegreeTooLarge {
                degree: d,
                max: policy.d_v_max,
            });
        }
        if c == 0.0 {
            continue;
        }
        match terms.iter_mut().find(|t| t.0 == d) {
            Some(t) => t.1 += c,
            None => terms.push((d, c)),
        }
    }
    if terms.is_empty() {
        return Err(CodeError::EmptyDistribution);
    }
    terms.sort_by_key(|t| t.0);
    if let Some(max) = policy.max_distinct {
        if terms.len() > max {
            return Err(CodeError::TooManyDegrees {
                count: terms.len(),
                max,
            });
        }
    }
    let raw_sum: f64 = terms.iter().map(|t| t.1).sum();
    if (raw_sum - 1.0).abs() > policy.sum_tolerance {
        return Err(CodeError::SumMismatch {
            sum: raw_sum,
            tolerance: policy.sum_tolerance,
        });
    }
    if raw_sum != 1.0 {
        if (raw_sum - 1.0).abs() > STRICT_SUM_TOLERANCE {
            log::info!("rescaling variable degree distribution from sum {raw_sum:.6} to 1");
        }
        for t in &mut terms {
            t.1 /= raw_sum;
        }
    }
    Ok(CheckedLambda {
        lambda: EdgeDistribution::from_clean(terms),
        raw_sum,
    })
}

/// Check-side distribution on at most two consecutive degrees meeting the
/// design rate exactly.
pub fn concentrated_rho(lambda: &EdgeDistribution, rate: f64) -> Result<EdgeDistribution, CodeError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(CodeError::InvalidRate(rate));
    }
    let avg = 1.0 / ((1.0 - rate) * lambda.nodes_per_edge());
    if avg.is_nan() || avg < 2.0 {
        return Err(CodeError::CheckDegreeTooSmall(avg));
    }
    if avg > MAX_CHECK_DEGREE as f64 {
        return Err(CodeError::CheckDegreeTooLarge(avg));
    }
    let d = avg.floor() as usize;
    let low = (d * (d + 1)) as f64 / avg - d as f64;
    if low >= 1.0 - 1e-12 {
        return Ok(EdgeDistribution::regular(d));
    }
    Ok(EdgeDistribution::from_clean(vec![(d, low), (d + 1, 1.0 - low)]))
}

/// A variable/check distribution pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    lambda: EdgeDistribution,
    rho: EdgeDistribution,
}

impl DegreeDistribution {
    pub fn new(lambda: EdgeDistribution, rho: EdgeDistribution) -> Result<Self, CodeError> {
        let dist = Self { lambda, rho };
        let r = dist.design_rate();
        if !(r > 0.0 && r < 1.0) {
            return Err(CodeError::InvalidRate(r));
        }
        Ok(dist)
    }

    /// `lambda` with the concentrated check distribution for `rate`.
    pub fn concentrated(lambda: EdgeDistribution, rate: f64) -> Result<Self, CodeError> {
        let rho = concentrated_rho(&lambda, rate)?;
        Self::new(lambda, rho)
    }

    pub fn lambda(&self) -> &EdgeDistribution {
        &self.lambda
    }

    pub fn rho(&self) -> &EdgeDistribution {
        &self.rho
    }

    pub fn d_v_max(&self) -> usize {
        self.lambda.max_degree()
    }

    pub fn d_c_max(&self) -> usize {
        self.rho.max_degree()
    }

    /// `1 - (sum rho_i/i) / (sum lambda_i/i)`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.rho.nodes_per_edge() / self.lambda.nodes_per_edge()
    }
}
