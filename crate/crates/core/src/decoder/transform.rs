//! Walsh-Hadamard transforms over the additive group of GF(2^w).
//!
//! Adding field elements is XOR, so the distribution of a sum of independent
//! symbols is the XOR-convolution of their distributions, which the WHT turns
//! into a pointwise product.

use super::DecodeError;
use crate::gf::{GfTable, Symbol};
use crate::llr::{llr_from_probs_into, probs_from_llr_into, LlrVector, PROB_FLOOR};

/// Unnormalized in-place Walsh-Hadamard transform. `data.len()` must be a
/// power of two. Applying it twice multiplies by `data.len()`.
#[inline]
pub fn fwht(data: &mut [f64]) {
    fwht_sized::<0>(data);
}

/// [`fwht`] on the first `Q` entries, or on all of them when `Q` is 0. A
/// constant `Q` lets the butterflies unroll.
#[inline(always)]
pub(crate) fn fwht_sized<const Q: usize>(data: &mut [f64]) {
    let len = if Q == 0 { data.len() } else { Q };
    let data = &mut data[..len];
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        let mut start = 0;
        while start < len {
            let (lo, hi) = data[start..start + 2 * half].split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
            start += 2 * half;
        }
        half *= 2;
    }
}

/// Spectrum of the message of `h * X`, given the LLR message of `X`.
pub fn fwd_transform(msg: &LlrVector, h: Symbol, gf: &GfTable) -> Result<Vec<f64>, DecodeError> {
    let q = gf.q();
    check_len(msg.len(), q)?;
    let mut probs = vec![0.0; q];
    probs_from_llr_into(msg.values(), &mut probs);
    let mut out = vec![0.0; q];
    load_scaled::<0>(&probs, h, gf, &mut out)?;
    fwht(&mut out);
    Ok(out)
}

/// Inverse of [`fwd_transform`]: back to probabilities, to LLR form, then
/// undoes the multiplication by `h`.
pub fn inv_transform(spectrum: &[f64], h: Symbol, gf: &GfTable, saturation: f64) -> Result<LlrVector, DecodeError> {
    let q = gf.q();
    check_len(spectrum.len(), q)?;
    let row = gf.mul_row(nonzero(h, gf)?);
    let mut probs = spectrum.to_vec();
    fwht(&mut probs);
    let scale = 1.0 / q as f64;
    let out_probs: Vec<f64> = (0..q)
        .map(|k| (probs[row[k] as usize] * scale).max(PROB_FLOOR))
        .collect();
    let mut out = vec![0.0; q];
    llr_from_probs_into(&out_probs, &mut out, saturation);
    Ok(LlrVector::from_raw(out))
}

/// `out[t] = probs[t / h]`, the distribution of `h * X`.
#[inline(always)]
pub(crate) fn load_scaled<const Q: usize>(
    probs: &[f64],
    h: Symbol,
    gf: &GfTable,
    out: &mut [f64],
) -> Result<(), DecodeError> {
    let q = if Q == 0 { gf.q() } else { Q };
    let inv_row = &gf.mul_row(gf.inv(h).map_err(|_| DecodeError::ZeroWeight)?)[..q];
    let probs = &probs[..q];
    for (o, &i) in out[..q].iter_mut().zip(inv_row) {
        *o = probs[i as usize & (q - 1)];
    }
    Ok(())
}

/// Index tables acting on spectra: for every weight `h`, the spectrum of
/// `h * X` at `k` is the spectrum of `X` at `table[h * q + k]`.
///
/// Multiplication by `h` is a linear map `A` on the bit vectors of GF(2)^w,
/// so the transform of the permuted distribution is read off at `A^T k`.
/// Row 0 is unused and left as the identity.
pub fn spectral_permutations(gf: &GfTable) -> Vec<Symbol> {
    let q = gf.q();
    let w = gf.w();
    let mut table: Vec<Symbol> = (0..q * q).map(|i| (i % q) as Symbol).collect();
    for h in 1..q {
        let images: Vec<Symbol> = (0..w).map(|j| gf.mul(h as Symbol, 1 << j)).collect();
        for k in 0..q {
            let mut out = 0;
            for (j, &img) in images.iter().enumerate() {
                if (k as Symbol & img).count_ones() % 2 == 1 {
                    out |= 1 << j;
                }
            }
            table[h * q + k] = out;
        }
    }
    table
}

fn nonzero(h: Symbol, gf: &GfTable) -> Result<Symbol, DecodeError> {
    gf.inv(h).map_err(|_| DecodeError::ZeroWeight)?;
    Ok(h)
}

fn check_len(len: usize, q: usize) -> Result<(), DecodeError> {
    if len != q {
        return Err(DecodeError::Dimension(format!("message length {len}, field order {q}")));
    }
    Ok(())
}
