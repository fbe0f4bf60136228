//! Check-node update with a nonzero syndrome symbol.
//!
//! For check `i` with syndrome symbol `s`, the constraint is
//! `sum_j h_j x_j = s`. The incoming messages are scaled by their weights and
//! XOR-convolved in the transform domain, giving the distribution `U` of the
//! sum over the other neighbors. The outgoing edge then satisfies
//! `h x = s + U`, so `P(x = k) = P_U(h k + s)`. This is the same as dividing
//! by `h` and shifting the result by the weighted syndrome `s / h`.

use super::transform::{fwht_sized, load_scaled};
use super::DecodeError;
use crate::gf::{GfTable, Symbol};
use crate::llr::{llr_from_probs_into, probs_from_llr_into, LlrVector, PROB_FLOOR};

/// Reusable buffers for check-node updates of up to any degree.
#[derive(Debug, Clone)]
pub(crate) struct CheckKernel {
    q: usize,
    spectra: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    product: Vec<f64>,
    probs: Vec<f64>,
}

// Methods taking `const Q: usize` treat a nonzero `Q` as the field order,
// letting the decoder monomorphize its inner loops; `Q = 0` reads `self.q`.
impl CheckKernel {
    pub(crate) fn new(q: usize) -> Self {
        Self {
            q,
            spectra: Vec::new(),
            prefix: Vec::new(),
            suffix: Vec::new(),
            product: vec![0.0; q],
            probs: vec![0.0; q],
        }
    }

    #[inline(always)]
    fn order<const Q: usize>(&self) -> usize {
        if Q == 0 {
            self.q
        } else {
            debug_assert_eq!(Q, self.q);
            Q
        }
    }

    /// Makes room for `degree` input spectra.
    #[inline]
    pub(crate) fn reset(&mut self, degree: usize) {
        let len = degree * self.q;
        if self.spectra.len() < len {
            self.spectra.resize(len, 0.0);
            self.prefix.resize(len + self.q, 0.0);
            self.suffix.resize(len + self.q, 0.0);
        }
    }

    /// Stores the spectrum of `weight * X` for input slot `k`, where `probs`
    /// is the distribution of `X`.
    #[inline(always)]
    pub(crate) fn load_probs<const Q: usize>(
        &mut self,
        k: usize,
        probs: &[f64],
        weight: Symbol,
        gf: &GfTable,
    ) -> Result<(), DecodeError> {
        let q = self.order::<Q>();
        let slot = &mut self.spectra[k * q..(k + 1) * q];
        load_scaled::<Q>(probs, weight, gf, slot)?;
        fwht_sized::<Q>(slot);
        Ok(())
    }

    #[inline]
    pub(crate) fn load_llr(&mut self, k: usize, llr: &[f64], weight: Symbol, gf: &GfTable) -> Result<(), DecodeError> {
        let mut probs = std::mem::take(&mut self.probs);
        probs_from_llr_into(llr, &mut probs);
        let res = self.load_probs::<0>(k, &probs, weight, gf);
        self.probs = probs;
        res
    }

    /// Prepares leave-one-out products over the first `degree` slots.
    #[inline(always)]
    pub(crate) fn prepare_extrinsic<const Q: usize>(&mut self, degree: usize) {
        let q = self.order::<Q>();
        self.prefix[..q].fill(1.0);
        for k in 0..degree {
            let (done, rest) = self.prefix.split_at_mut((k + 1) * q);
            let prev = &done[k * q..];
            let spec = &self.spectra[k * q..(k + 1) * q];
            for ((o, a), b) in rest[..q].iter_mut().zip(prev).zip(spec) {
                *o = a * b;
            }
        }
        self.suffix[degree * q..(degree + 1) * q].fill(1.0);
        for k in (0..degree).rev() {
            let (head, tail) = self.suffix.split_at_mut((k + 1) * q);
            let next = &tail[..q];
            let spec = &self.spectra[k * q..(k + 1) * q];
            for ((o, a), b) in head[k * q..].iter_mut().zip(next).zip(spec) {
                *o = a * b;
            }
        }
    }

    /// Outgoing distribution for the edge in slot `k` (weight `h`), using
    /// every other slot; floored entrywise, not renormalized. Requires
    /// [`prepare_extrinsic`](Self::prepare_extrinsic).
    #[inline(always)]
    pub(crate) fn extrinsic_probs<const Q: usize>(
        &mut self,
        k: usize,
        h: Symbol,
        syndrome: Symbol,
        gf: &GfTable,
        out: &mut [f64],
    ) {
        let q = self.order::<Q>();
        let pre = &self.prefix[k * q..(k + 1) * q];
        let suf = &self.suffix[(k + 1) * q..(k + 2) * q];
        for ((o, a), b) in self.product[..q].iter_mut().zip(pre).zip(suf) {
            *o = a * b;
        }
        self.finish_probs::<Q>(h, syndrome, gf, out);
    }

    /// Message to an extra edge of weight `h` that uses all `degree` slots.
    #[inline]
    pub(crate) fn combined(
        &mut self,
        degree: usize,
        h: Symbol,
        syndrome: Symbol,
        gf: &GfTable,
        out: &mut [f64],
        saturation: f64,
    ) {
        let q = self.q;
        self.product.fill(1.0);
        for k in 0..degree {
            for t in 0..q {
                self.product[t] *= self.spectra[k * q + t];
            }
        }
        let mut probs = std::mem::take(&mut self.probs);
        self.finish_probs::<0>(h, syndrome, gf, &mut probs);
        llr_from_probs_into(&probs, out, saturation);
        self.probs = probs;
    }

    #[inline(always)]
    fn finish_probs<const Q: usize>(&mut self, h: Symbol, syndrome: Symbol, gf: &GfTable, out: &mut [f64]) {
        let q = self.order::<Q>();
        let product = &mut self.product[..q];
        fwht_sized::<Q>(product);
        let scale = 1.0 / q as f64;
        let row = &gf.mul_row(h)[..q];
        for (o, &r) in out[..q].iter_mut().zip(row) {
            *o = (product[(r ^ syndrome) as usize & (q - 1)] * scale).max(PROB_FLOOR);
        }
    }
}

/// Check-to-variable message for one edge of weight `h_out`, given the
/// messages and weights on the other edges of the check and its syndrome
/// symbol.
pub fn check_to_var(
    incoming: &[LlrVector],
    weights: &[Symbol],
    h_out: Symbol,
    syndrome: Symbol,
    gf: &GfTable,
    saturation: f64,
) -> Result<LlrVector, DecodeError> {
    let q = gf.q();
    if incoming.len() != weights.len() {
        return Err(DecodeError::Dimension(format!(
            "{} messages but {} weights",
            incoming.len(),
            weights.len()
        )));
    }
    if incoming.is_empty() {
        return Err(DecodeError::Dimension("check node without other neighbors".into()));
    }
    if h_out == 0 {
        return Err(DecodeError::ZeroWeight);
    }
    if !gf.contains(syndrome as usize) {
        return Err(DecodeError::Dimension(format!("syndrome symbol {syndrome} >= q={q}")));
    }
    let mut kernel = CheckKernel::new(q);
    kernel.reset(incoming.len());
    for (k, (msg, &w)) in incoming.iter().zip(weights).enumerate() {
        if msg.len() != q {
            return Err(DecodeError::Dimension(format!("message length {}, q={q}", msg.len())));
        }
        kernel.load_llr(k, msg.values(), w, gf)?;
    }
    let mut out = vec![0.0; q];
    kernel.combined(incoming.len(), h_out, syndrome, gf, &mut out, saturation);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(DecodeError::NonFinite { iteration: 0, node: 0 });
    }
    Ok(LlrVector::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llr::DEFAULT_LLR_SATURATION;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Marginal of the output symbol by enumerating every assignment of the
    /// other neighbors that satisfies the check.
    fn brute_force(incoming: &[Vec<f64>], weights: &[Symbol], h_out: Symbol, s: Symbol, gf: &GfTable) -> Vec<f64> {
        let q = gf.q();
        let d = incoming.len();
        let mut out = vec![0.0; q];
        let mut assign = vec![0usize; d];
        loop {
            let mut acc = s;
            let mut p = 1.0;
            for (k, &a) in assign.iter().enumerate() {
                acc ^= gf.mul(weights[k], a as Symbol);
                p *= incoming[k][a];
            }
            // h_out * x = s + sum, solve for x
            let x = gf.div(acc, h_out).unwrap();
            out[x as usize] += p;
            let mut k = 0;
            while k < d {
                assign[k] += 1;
                if assign[k] < q {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        let total: f64 = out.iter().sum();
        out.iter().map(|v| v / total).collect()
    }

    fn random_probs(q: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let v: Vec<f64> = (0..q).map(|_| rng.random::<f64>() + 0.01).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn degree_two_passthrough() {
        let gf = GfTable::new(8).unwrap();
        let m = LlrVector::from_raw(vec![0.0, 1.0, -2.0, 0.5, 3.0, 0.1, 0.0, 2.0]);
        let out = check_to_var(std::slice::from_ref(&m), &[1], 1, 0, &gf, DEFAULT_LLR_SATURATION).unwrap();
        for (a, b) in m.values().iter().zip(out.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn gf4_weighted_syndrome_case() {
        let gf = GfTable::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = random_probs(4, &mut rng);
        let m = LlrVector::from_probs(&p, DEFAULT_LLR_SATURATION).unwrap();
        // 2 x1 + 3 x2 = 1, message from x1 toward x2
        let out = check_to_var(&[m], &[2], 3, 1, &gf, DEFAULT_LLR_SATURATION).unwrap();
        let oracle = brute_force(&[p], &[2], 3, 1, &gf);
        for (a, b) in out.to_probs().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for q in [2usize, 4, 8] {
            let gf = GfTable::new(q).unwrap();
            for degree in 2..=5 {
                for _ in 0..20 {
                    let others = degree - 1;
                    let probs: Vec<Vec<f64>> = (0..others).map(|_| random_probs(q, &mut rng)).collect();
                    let weights: Vec<Symbol> = (0..others).map(|_| rng.random_range(1..q) as Symbol).collect();
                    let h = rng.random_range(1..q) as Symbol;
                    let s = rng.random_range(0..q) as Symbol;
                    let msgs: Vec<LlrVector> = probs
                        .iter()
                        .map(|p| LlrVector::from_probs(p, DEFAULT_LLR_SATURATION).unwrap())
                        .collect();
                    let out = check_to_var(&msgs, &weights, h, s, &gf, DEFAULT_LLR_SATURATION).unwrap();
                    let oracle = brute_force(&probs, &weights, h, s, &gf);
                    for (a, b) in out.to_probs().iter().zip(&oracle) {
                        assert!((a - b).abs() < 1e-9, "q={q} d={degree}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn extrinsic_matches_combined() {
        let gf = GfTable::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let probs: Vec<Vec<f64>> = (0..5).map(|_| random_probs(8, &mut rng)).collect();
        let weights: Vec<Symbol> = (0..5).map(|_| rng.random_range(1..8) as Symbol).collect();
        let mut kernel = CheckKernel::new(8);
        kernel.reset(5);
        for k in 0..5 {
            kernel.load_probs::<0>(k, &probs[k], weights[k], &gf).unwrap();
        }
        kernel.prepare_extrinsic::<8>(5);
        for k in 0..5 {
            let mut p = vec![0.0; 8];
            kernel.extrinsic_probs::<8>(k, weights[k], 6, &gf, &mut p);
            let out = LlrVector::from_probs(&p, DEFAULT_LLR_SATURATION).unwrap().into_values();
            let others: Vec<LlrVector> = (0..5)
                .filter(|&j| j != k)
                .map(|j| LlrVector::from_probs(&probs[j], DEFAULT_LLR_SATURATION).unwrap())
                .collect();
            let w: Vec<Symbol> = (0..5).filter(|&j| j != k).map(|j| weights[j]).collect();
            let direct = check_to_var(&others, &w, weights[k], 6, &gf, DEFAULT_LLR_SATURATION).unwrap();
            for (a, b) in out.iter().zip(direct.values()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn input_validation() {
        let gf = GfTable::new(4).unwrap();
        let m = LlrVector::uniform(4);
        assert!(check_to_var(&[], &[], 1, 0, &gf, 30.0).is_err());
        assert!(check_to_var(std::slice::from_ref(&m), &[1, 2], 1, 0, &gf, 30.0).is_err());
        assert!(matches!(
            check_to_var(std::slice::from_ref(&m), &[0], 1, 0, &gf, 30.0),
            Err(DecodeError::ZeroWeight)
        ));
        assert!(matches!(
            check_to_var(&[m], &[1], 0, 0, &gf, 30.0),
            Err(DecodeError::ZeroWeight)
        ));
    }
}
