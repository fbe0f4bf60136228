//! Log-likelihood-ratio messages over a q-ary alphabet.
//!
//! A message stores `m[j] = ln(p[0] / p[j])`, so `m[0] == 0` and the most
//! likely symbol has the smallest entry.

use thiserror::Error;

use crate::gf::{GfError, GfTable, Symbol};

/// Default bound on the magnitude of any LLR entry (natural-log units).
pub const DEFAULT_LLR_SATURATION: f64 = 30.0;

/// Probabilities are floored here before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlrError {
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probability vector sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("message length {len} is not the field order {q}")]
    LengthMismatch { len: usize, q: usize },
    #[error(transparent)]
    Field(#[from] GfError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector(Vec<f64>);

impl LlrVector {
    /// The all-zero message, i.e. the uniform distribution.
    pub fn uniform(q: usize) -> Self {
        Self(vec![0.0; q])
    }

    /// Wraps raw values, re-referencing them so entry 0 is zero and bounding
    /// the dynamic range by `saturation`.
    pub fn from_values(mut values: Vec<f64>, saturation: f64) -> Self {
        saturate_in_place(&mut values, saturation);
        Self(values)
    }

    /// Wraps values verbatim. Callers are responsible for the conventions.
    pub fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn from_probs(probs: &[f64], saturation: f64) -> Result<Self, LlrError> {
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, &p)| p < 0.0) {
            return Err(LlrError::NegativeProbability { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(LlrError::NotNormalized(sum));
        }
        let mut values = vec![0.0; probs.len()];
        llr_from_probs_into(probs, &mut values, saturation);
        Ok(Self(values))
    }

    pub fn to_probs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.0.len()];
        probs_from_llr_into(&self.0, &mut out);
        out
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(a . m)[k] = m[k / a]`: the message of `a * X` given the message of `X`.
    pub fn permute_mul(&self, a: Symbol, gf: &GfTable) -> Result<Self, LlrError> {
        self.check_len(gf)?;
        let inv = gf.inv(a)?;
        let row = gf.mul_row(inv);
        Ok(Self((0..gf.q()).map(|k| self.0[row[k] as usize]).collect()))
    }

    /// `(m / a)[k] = m[k * a]`: the message of `X` given the message of `a * X`.
    pub fn permute_div(&self, a: Symbol, gf: &GfTable) -> Result<Self, LlrError> {
        self.check_len(gf)?;
        gf.inv(a)?;
        let row = gf.mul_row(a);
        Ok(Self((0..gf.q()).map(|k| self.0[row[k] as usize]).collect()))
    }

    /// Index of the smallest entry; ties go to the smaller symbol.
    pub fn hard_decision(&self) -> Symbol {
        hard_decision(&self.0)
    }

    /// Shannon entropy of the represented distribution in base-q units.
    pub fn entropy(&self) -> f64 {
        entropy_qary(&self.0)
    }

    fn check_len(&self, gf: &GfTable) -> Result<(), LlrError> {
        if self.0.len() != gf.q() {
            return Err(LlrError::LengthMismatch {
                len: self.0.len(),
                q: gf.q(),
            });
        }
        Ok(())
    }
}

/// Re-references `m` to entry 0 after limiting every entry to at most
/// `saturation` above the minimum.
///
/// Bounding the spread rather than each entry keeps the ordering of the
/// likely symbols intact when symbol 0 itself is very unlikely. The result
/// always lies in `[-saturation, saturation]`.
#[inline]
pub fn saturate_in_place(m: &mut [f64], saturation: f64) {
    let min = m.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return;
    }
    for v in m.iter_mut() {
        *v = (*v - min).min(saturation);
    }
    let zero = m[0];
    for v in m.iter_mut() {
        *v -= zero;
    }
}

#[inline]
pub fn llr_from_probs_into(probs: &[f64], out: &mut [f64], saturation: f64) {
    let p0 = probs[0].max(PROB_FLOOR).ln();
    for (o, &p) in out.iter_mut().zip(probs) {
        *o = p0 - p.max(PROB_FLOOR).ln();
    }
    saturate_in_place(out, saturation);
}

#[inline]
pub fn probs_from_llr_into(m: &[f64], out: &mut [f64]) {
    let min = m.iter().copied().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(m) {
        *o = (min - v).exp();
        total += *o;
    }
    let inv = 1.0 / total;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

#[inline]
pub fn hard_decision(m: &[f64]) -> Symbol {
    let mut best = 0;
    for (k, &v) in m.iter().enumerate().skip(1) {
        if v < m[best] {
            best = k;
        }
    }
    best as Symbol
}

pub fn entropy_qary(m: &[f64]) -> f64 {
    let q = m.len();
    let mut probs = vec![0.0; q];
    probs_from_llr_into(m, &mut probs);
    entropy_of_probs(&probs)
}

/// Base-q Shannon entropy of a probability vector of length q.
#[inline]
pub fn entropy_of_probs(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h / (probs.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simplex(q: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.001f64..1.0, q).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    #[test]
    fn uniform_probs_give_zero_llr() {
        let m = LlrVector::from_probs(&[0.25; 4], DEFAULT_LLR_SATURATION).unwrap();
        assert_eq!(m.values(), &[0.0; 4]);
        assert!((m.entropy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qber_prior_llr() {
        let off = 0.0758 / 7.0;
        let mut p = vec![off; 8];
        p[0] = 0.9242;
        let m = LlrVector::from_probs(&p, DEFAULT_LLR_SATURATION).unwrap();
        assert_eq!(m.values()[0], 0.0);
        for &v in &m.values()[1..] {
            assert!((v - (0.9242f64 / off).ln()).abs() < 1e-12);
            assert!((v - 4.4467).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_probability_maps_to_large_finite_llr() {
        let m = LlrVector::from_probs(&[1.0, 0.0, 0.0, 0.0], DEFAULT_LLR_SATURATION).unwrap();
        for &v in &m.values()[1..] {
            assert!(v.is_finite() && v > 27.0 && v <= DEFAULT_LLR_SATURATION);
        }
        assert!(m.entropy() < 1e-9);
    }

    #[test]
    fn negative_probability_rejected() {
        let err = LlrVector::from_probs(&[1.1, -0.1], 30.0).unwrap_err();
        assert!(matches!(err, LlrError::NegativeProbability { index: 1, .. }));
    }

    #[test]
    fn half_half_entropy() {
        let m = LlrVector::from_probs(&[0.5, 0.5, 0.0, 0.0], 30.0).unwrap();
        assert!((m.entropy() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn saturation_bounds_spread_and_keeps_order() {
        // symbol 0 very unlikely, symbol 3 most likely, symbol 5 second.
        let mut m = vec![0.0, -10.0, -12.0, -46.0, -20.0, -34.5, -1.0, -2.0];
        saturate_in_place(&mut m, 30.0);
        assert_eq!(m[0], 0.0);
        assert!(m.iter().all(|v| v.abs() <= 30.0));
        assert_eq!(hard_decision(&m), 3);
        assert!(m[5] > m[3]);
    }

    #[test]
    fn gf4_permutation_by_hand() {
        // GF(4) with x^2+x+1: 2*0=0, 2*1=2, 2*2=3, 2*3=1; 2^-1 = 3.
        let gf = GfTable::new(4).unwrap();
        let m = LlrVector::from_raw(vec![0.0, 1.0, 2.0, 3.0]);
        // (2 . m)[k] = m[k * 3]: 3*0=0, 3*1=3, 3*2=1, 3*3=2.
        assert_eq!(m.permute_mul(2, &gf).unwrap().values(), &[0.0, 3.0, 1.0, 2.0]);
        // (m / 2)[k] = m[k * 2].
        assert_eq!(m.permute_div(2, &gf).unwrap().values(), &[0.0, 2.0, 3.0, 1.0]);
        assert_eq!(m.permute_mul(1, &gf).unwrap(), m);
        assert!(m.permute_mul(0, &gf).is_err());
    }

    #[test]
    fn hard_decision_ties_go_low() {
        assert_eq!(hard_decision(&[0.0; 8]), 0);
        assert_eq!(hard_decision(&[0.0, -1.0, -1.0, 2.0]), 1);
    }

    proptest! {
        #[test]
        fn prob_roundtrip(p in simplex(8)) {
            let m = LlrVector::from_probs(&p, DEFAULT_LLR_SATURATION).unwrap();
            let back = m.to_probs();
            for (a, b) in p.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn permutations_are_inverse(a in 1u8..16, v in prop::collection::vec(-30.0f64..30.0, 16)) {
            let gf = GfTable::new(16).unwrap();
            let m = LlrVector::from_raw(v);
            let back = m.permute_mul(a, &gf).unwrap().permute_div(a, &gf).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn hard_decision_is_argmin(v in prop::collection::vec(-30.0f64..30.0, 8)) {
            let d = hard_decision(&v) as usize;
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(v[d], min);
            prop_assert!(v[..d].iter().all(|&x| x > min));
        }
    }
}
