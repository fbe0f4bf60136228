//! Arithmetic in GF(2^w) for 1 <= w <= 8.
//!
//! Elements are the integers `0..q` read as polynomials over GF(2) in the
//! usual bit convention (bit `i` is the coefficient of `x^i`), so addition is
//! XOR. Multiplication is reduced by one fixed primitive polynomial per
//! extension degree:
//!
//! | w | polynomial              | mask    |
//! |---|-------------------------|---------|
//! | 1 | x + 1                   | `0x3`   |
//! | 2 | x^2 + x + 1             | `0x7`   |
//! | 3 | x^3 + x + 1             | `0xB`   |
//! | 4 | x^4 + x + 1             | `0x13`  |
//! | 5 | x^5 + x^2 + 1           | `0x25`  |
//! | 6 | x^6 + x + 1             | `0x43`  |
//! | 7 | x^7 + x^3 + 1           | `0x89`  |
//! | 8 | x^8 + x^4 + x^3 + x^2 + 1 | `0x11D` |
//!
//! Code files record the polynomial alongside `q`, so a matrix is only ever
//! interpreted with the arithmetic it was built for.

use thiserror::Error;

/// A field element, always `< q`.
pub type Symbol = u8;

/// Largest supported field order.
pub const MAX_ORDER: usize = 256;

const PRIMITIVE_POLYS: [u32; 9] = [0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("field order {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("field order {0} outside supported range [2, 256]")]
    OrderOutOfRange(usize),
    #[error("division by zero in GF({0})")]
    DivisionByZero(usize),
    #[error("primitive polynomial {poly:#x} does not match the canonical polynomial {expected:#x} for GF({q})")]
    PolynomialMismatch { q: usize, poly: u32, expected: u32 },
}

/// Returns the canonical primitive polynomial mask for extension degree `w`.
pub fn primitive_poly(w: u32) -> Option<u32> {
    PRIMITIVE_POLYS.get(w as usize).copied().filter(|&p| p != 0)
}

/// Lookup tables for one field. Immutable once built.
#[derive(Clone)]
pub struct GfTable {
    q: usize,
    w: u32,
    poly: u32,
    exp: Vec<Symbol>,
    log: Vec<u16>,
    mul: Vec<Symbol>,
    inv: Vec<Symbol>,
}

impl std::fmt::Debug for GfTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GfTable")
            .field("q", &self.q)
            .field("w", &self.w)
            .field("poly", &format_args!("{:#x}", self.poly))
            .finish()
    }
}

impl PartialEq for GfTable {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.poly == other.poly
    }
}

impl Eq for GfTable {}

impl GfTable {
    pub fn new(q: usize) -> Result<Self, GfError> {
        if !(2..=MAX_ORDER).contains(&q) {
            if q.is_power_of_two() || q == 0 {
                return Err(GfError::OrderOutOfRange(q));
            }
            return Err(GfError::NotPowerOfTwo(q));
        }
        if !q.is_power_of_two() {
            return Err(GfError::NotPowerOfTwo(q));
        }
        let w = q.trailing_zeros();
        let poly = PRIMITIVE_POLYS[w as usize];

        let order = q - 1;
        let mut exp = vec![0 as Symbol; 2 * order];
        let mut log = vec![0u16; q];
        let mut acc: u32 = 1;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            *e = acc as Symbol;
            log[acc as usize] = i as u16;
            acc <<= 1;
            if acc & (q as u32) != 0 {
                acc ^= poly;
            }
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }

        let mut mul = vec![0 as Symbol; q * q];
        let mut inv = vec![0 as Symbol; q];
        for a in 1..q {
            for b in 1..q {
                mul[a * q + b] = exp[log[a] as usize + log[b] as usize];
            }
            inv[a] = exp[(order - log[a] as usize) % order];
        }

        Ok(Self {
            q,
            w,
            poly,
            exp,
            log,
            mul,
            inv,
        })
    }

    /// Builds the field for `q` and checks that `poly` is the canonical one.
    pub fn with_poly(q: usize, poly: u32) -> Result<Self, GfError> {
        let gf = Self::new(q)?;
        if gf.poly != poly {
            return Err(GfError::PolynomialMismatch {
                q,
                poly,
                expected: gf.poly,
            });
        }
        Ok(gf)
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn w(&self) -> u32 {
        self.w
    }

    /// Reduction polynomial as a bit mask including the leading term.
    #[inline]
    pub fn poly(&self) -> u32 {
        self.poly
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    /// Same as [`add`](Self::add) in characteristic 2.
    #[inline]
    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        self.mul[a as usize * self.q + b as usize]
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol, GfError> {
        if a == 0 {
            return Err(GfError::DivisionByZero(self.q));
        }
        Ok(self.inv[a as usize])
    }

    /// `alpha^i` for the primitive element `alpha = x`.
    pub fn exp(&self, i: usize) -> Symbol {
        self.exp[i % (self.q - 1)]
    }

    /// Discrete log base `x`; `None` for zero.
    pub fn log(&self, a: Symbol) -> Option<usize> {
        (a != 0).then(|| self.log[a as usize] as usize)
    }

    /// Row `a` of the multiplication table: `row[b] == a * b`.
    #[inline]
    pub fn mul_row(&self, a: Symbol) -> &[Symbol] {
        let start = a as usize * self.q;
        &self.mul[start..start + self.q]
    }

    /// Validates that `a` is a field element.
    #[inline]
    pub fn contains(&self, a: usize) -> bool {
        a < self.q
    }
}
