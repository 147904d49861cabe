//! Gauss-Hermite rules for `∫ exp(−x²) f(x) dx` and tensor-grid iteration
//! over several independent real dimensions.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 20;
/// Default cap on the number of tensor-grid points.
pub const DEFAULT_TENSOR_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Physicists' Hermite polynomials `H_{n}(x)` and `H_{n−1}(x)` by recurrence.
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl QuadratureRule {
    /// `L`-point rule. Nodes are the roots of `H_L`, found as eigenvalues of
    /// the symmetric Jacobi matrix and polished with one Newton step; weights
    /// use `c = 2^{L−1} L! √π / (L² H_{L−1}(v)²)`.
    pub fn hermite(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::try_new(jacobi, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::NumericalFailure("Jacobi eigensolver did not converge".into()))?;
        let mut roots: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        roots.sort_by(f64::total_cmp);
        for r in roots.iter_mut() {
            // H_L'(x) = 2L H_{L−1}(x)
            let (h, h_prev) = hermite_pair(order, *r);
            let d = 2.0 * order as f64 * h_prev;
            if d != 0.0 {
                *r -= h / d;
            }
        }
        // enforce exact symmetry about zero
        let mut nodes = vec![0.0; order];
        for i in 0..order / 2 {
            let a = 0.5 * (roots[order - 1 - i] - roots[i]);
            nodes[i] = -a;
            nodes[order - 1 - i] = a;
        }
        let scale = 2f64.powi(order as i32 - 1) * factorial(order) * std::f64::consts::PI.sqrt()
            / (order * order) as f64;
        let weights: Vec<f64> = nodes
            .iter()
            .map(|&v| {
                let h = hermite_pair(order - 1, v).0;
                scale / (h * h)
            })
            .collect();
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::NumericalFailure("non-positive quadrature weight".into()));
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&v, &c)| c * f(v)).sum()
    }

    /// Grid over `dims` dimensions, capped at [`DEFAULT_TENSOR_CAP`] points.
    pub fn tensor(&self, dims: usize) -> Result<TensorGrid<'_>> {
        self.tensor_with_cap(dims, DEFAULT_TENSOR_CAP)
    }

    pub fn tensor_with_cap(&self, dims: usize, cap: u64) -> Result<TensorGrid<'_>> {
        if dims == 0 {
            return Err(Error::InvalidParameter("tensor grid needs at least one dimension".into()));
        }
        let len = (self.order() as u64)
            .checked_pow(dims as u32)
            .ok_or(Error::Overflow("L^dims"))?;
        if len > cap {
            return Err(Error::Overflow("L^dims exceeds the tensor grid cap"));
        }
        Ok(TensorGrid {
            rule: self,
            dims,
            len,
        })
    }
}

/// Odometer position on the tensor grid: `coords[0]` varies fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorIndex {
    pub coords: Vec<usize>,
}

impl TensorIndex {
    pub fn zero(dims: usize) -> Self {
        Self { coords: vec![0; dims] }
    }

    pub fn from_linear(mut linear: u64, dims: usize, order: usize) -> Self {
        let coords = (0..dims)
            .map(|_| {
                let c = (linear % order as u64) as usize;
                linear /= order as u64;
                c
            })
            .collect();
        Self { coords }
    }

    /// Advance to the lexicographic successor; returns `true` when the
    /// odometer wrapped back to all zeros.
    pub fn advance(&mut self, order: usize) -> bool {
        for c in self.coords.iter_mut() {
            *c += 1;
            if *c < order {
                return false;
            }
            *c = 0;
        }
        true
    }
}

/// One grid point: product weight and the node vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorPoint {
    pub index: TensorIndex,
    pub weight: f64,
    pub nodes: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct TensorGrid<'a> {
    rule: &'a QuadratureRule,
    dims: usize,
    len: u64,
}

impl<'a> TensorGrid<'a> {
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn point(&self, index: &TensorIndex) -> TensorPoint {
        let weight = index.coords.iter().map(|&c| self.rule.weights[c]).product();
        let nodes = index.coords.iter().map(|&c| self.rule.nodes[c]).collect();
        TensorPoint {
            index: index.clone(),
            weight,
            nodes,
        }
    }

    pub fn iter(&self) -> TensorIter<'a> {
        self.range(0, self.len)
    }

    /// Points with linear index in `[start, end)`, for partitioned sums.
    pub fn range(&self, start: u64, end: u64) -> TensorIter<'a> {
        let end = end.min(self.len);
        TensorIter {
            grid: *self,
            next: TensorIndex::from_linear(start, self.dims, self.rule.order()),
            remaining: end.saturating_sub(start),
        }
    }

    /// Contiguous chunk boundaries covering `[0, len)`.
    pub fn chunks(&self, chunk_len: u64) -> Vec<(u64, u64)> {
        let step = chunk_len.max(1);
        (0..self.len.div_ceil(step))
            .map(|i| (i * step, ((i + 1) * step).min(self.len)))
            .collect()
    }
}

pub struct TensorIter<'a> {
    grid: TensorGrid<'a>,
    next: TensorIndex,
    remaining: u64,
}

impl Iterator for TensorIter<'_> {
    type Item = TensorPoint;

    fn next(&mut self) -> Option<TensorPoint> {
        if self.remaining == 0 {
            return None;
        }
        let p = self.grid.point(&self.next);
        self.next.advance(self.grid.rule.order());
        self.remaining -= 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}
