//! Unit-energy QAM alphabets and the product enumeration `k ↦ x_k` over
//! `M^{N_t}` symbol vectors.
//!
//! Vector index `k` is little-endian radix-`M`: antenna `i` carries symbol
//! `digit_i(k) = (k / M^i) mod M`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::c64;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    /// Square QAM for `M ∈ {4, 16, 64}` and cross QAM (6×6 grid minus the
    /// corners) for `M = 32`, scaled to unit average energy.
    ///
    /// Points are laid out row-major over the I/Q grid: imaginary level
    /// ascending in the outer loop, real level ascending in the inner loop.
    pub fn qam(order: usize) -> Result<Self> {
        let (side, skip_corners) = match order {
            4 => (2, false),
            16 => (4, false),
            64 => (8, false),
            32 => (6, true),
            other => return Err(Error::UnsupportedOrder(other)),
        };
        let level = |i: usize| (2 * i) as f64 - (side as f64 - 1.0);
        let corner = |i: usize| i == 0 || i == side - 1;
        let mut raw = Vec::with_capacity(order);
        for q in 0..side {
            for i in 0..side {
                if skip_corners && corner(i) && corner(q) {
                    continue;
                }
                raw.push(c64(level(i), level(q)));
            }
        }
        debug_assert_eq!(raw.len(), order);
        let energy = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        let scale = energy.recip().sqrt();
        let points = raw.into_iter().map(|p| p * scale).collect();
        Ok(Self { order, points })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.order as f64).log2()
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order as f64
    }

    /// `M^{n_t}`, or `Overflow` if it does not fit in a `u64`.
    pub fn vector_count(&self, n_t: usize) -> Result<u64> {
        (self.order as u64)
            .checked_pow(n_t as u32)
            .ok_or(Error::Overflow("M^N_t"))
    }

    pub fn symbol_vector(&self, n_t: usize, k: u64) -> Result<Vec<Complex64>> {
        let digits = SymbolVectorIndex::new(self.order, n_t, k)?;
        Ok(digits.digits().iter().map(|&d| self.points[d]).collect())
    }

    /// `x_k − x_m` for every `m`, in enumeration order.
    pub fn difference_vectors(&self, n_t: usize, k: u64) -> Result<Vec<Vec<Complex64>>> {
        let count = self.vector_count(n_t)?;
        let xk = self.symbol_vector(n_t, k)?;
        (0..count)
            .map(|m| {
                let xm = self.symbol_vector(n_t, m)?;
                Ok(xk.iter().zip(&xm).map(|(a, b)| a - b).collect())
            })
            .collect()
    }

    /// All `M^{n_t}` symbol vectors, flattened row-wise (`n_t` entries per vector).
    pub fn all_vectors(&self, n_t: usize) -> Result<Vec<Complex64>> {
        let count = self.vector_count(n_t)?;
        let mut out = Vec::with_capacity(count as usize * n_t);
        for k in 0..count {
            let mut rem = k;
            for _ in 0..n_t {
                out.push(self.points[(rem % self.order as u64) as usize]);
                rem /= self.order as u64;
            }
        }
        Ok(out)
    }
}

/// Digits of a product-constellation index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolVectorIndex {
    k: u64,
    digits: Vec<usize>,
}

impl SymbolVectorIndex {
    pub fn new(order: usize, n_t: usize, k: u64) -> Result<Self> {
        let limit = (order as u64)
            .checked_pow(n_t as u32)
            .ok_or(Error::Overflow("M^N_t"))?;
        if k >= limit {
            return Err(Error::IndexOutOfRange { index: k, limit });
        }
        let mut rem = k;
        let digits = (0..n_t)
            .map(|_| {
                let d = (rem % order as u64) as usize;
                rem /= order as u64;
                d
            })
            .collect();
        Ok(Self { k, digits })
    }

    pub fn from_digits(order: usize, digits: &[usize]) -> Result<Self> {
        let mut k = 0u64;
        for &d in digits.iter().rev() {
            if d >= order {
                return Err(Error::IndexOutOfRange {
                    index: d as u64,
                    limit: order as u64,
                });
            }
            k = k
                .checked_mul(order as u64)
                .and_then(|v| v.checked_add(d as u64))
                .ok_or(Error::Overflow("symbol vector index"))?;
        }
        Ok(Self {
            k,
            digits: digits.to_vec(),
        })
    }

    pub fn index(&self) -> u64 {
        self.k
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }
}
