//! Quantizing an ensemble to per-node degrees for a finite code.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::degree::DegreeDistribution;
use super::CodeError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSequences {
    /// Variable-node degrees in non-decreasing order.
    pub var: Vec<usize>,
    /// Check-node degrees, shuffled.
    pub chk: Vec<usize>,
}

impl DegreeSequences {
    pub fn edge_count(&self) -> usize {
        self.var.iter().sum()
    }
}

/// Number of parity checks for a frame of `n` symbols at design rate `rate`.
pub fn check_count(n: usize, rate: f64) -> Result<usize, CodeError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(CodeError::InvalidRate(rate));
    }
    let m = (n as f64 * (1.0 - rate)).round() as usize;
    if m == 0 || m >= n {
        return Err(CodeError::Infeasible(format!(
            "rate {rate} with n={n} gives {m} checks"
        )));
    }
    Ok(m)
}

/// Splits `total` items over `weights` (summing to one) so that each count is
/// within one of its exact share. Remainders go to the largest fractional
/// parts, earlier entries first on ties.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Node degree sequences for `n` variable and `m` check nodes whose edge
/// totals agree.
///
/// Both sides are apportioned from the node-perspective fractions. Any
/// mismatch in edge totals is absorbed on the check side: surplus check edges
/// are removed from the highest-degree checks and missing ones added to the
/// lowest-degree checks, which keeps a concentrated distribution on two
/// consecutive degrees.
pub fn realize_degree_sequences<R: Rng + ?Sized>(
    dist: &DegreeDistribution,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<DegreeSequences, CodeError> {
    if n == 0 || m == 0 {
        return Err(CodeError::Infeasible(format!("n={n}, m={m}")));
    }
    let var = expand(n, &dist.lambda().node_fractions());
    let max_var = *var.last().expect("n > 0");
    if max_var > m {
        return Err(CodeError::Infeasible(format!(
            "variable degree {max_var} exceeds the {m} available checks"
        )));
    }
    let edges: usize = var.iter().sum();
    if edges < m {
        return Err(CodeError::Infeasible(format!("{edges} edges cannot cover {m} checks")));
    }

    let mut chk = expand(m, &dist.rho().node_fractions());
    let mut chk_edges: usize = chk.iter().sum();
    // chk is sorted ascending; adjust from the ends.
    while chk_edges < edges {
        let low = chk[0];
        let idx = chk.partition_point(|&d| d <= low) - 1;
        chk[idx] += 1;
        chk_edges += 1;
    }
    while chk_edges > edges {
        let high = chk[m - 1];
        let idx = chk.partition_point(|&d| d < high);
        if chk[idx] <= 1 {
            return Err(CodeError::Infeasible("check degrees would drop to zero".into()));
        }
        chk[idx] -= 1;
        chk_edges -= 1;
    }
    let max_chk = *chk.last().expect("m > 0");
    if max_chk > n {
        return Err(CodeError::Infeasible(format!(
            "check degree {max_chk} exceeds the {n} available variables"
        )));
    }
    chk.shuffle(rng);
    Ok(DegreeSequences { var, chk })
}

fn expand(total: usize, fractions: &[(usize, f64)]) -> Vec<usize> {
    let weights: Vec<f64> = fractions.iter().map(|t| t.1).collect();
    let counts = largest_remainder(total, &weights);
    let mut out = Vec::with_capacity(total);
    for (&(d, _), &c) in fractions.iter().zip(&counts) {
        out.extend(std::iter::repeat(d).take(c));
    }
    out
}
