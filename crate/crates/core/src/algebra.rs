//! Finite-dimensional C*-algebras `M_{n_1}(C) ⊕ ... ⊕ M_{n_k}(C)`.
//!
//! The basis used everywhere is the list of matrix units `E^{(k)}_{ij}`, block by
//! block, row-major within each block. NC-OOM operator lists are indexed by this
//! order, so it must not change.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{OomError, Result};

pub type C64 = Complex64;

/// Default tolerance for positivity tests.
pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-10;

/// A direct sum of full complex matrix blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CStarAlgebra {
    block_dims: Vec<usize>,
    total_dim: usize,
}

impl CStarAlgebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(OomError::Validation(
                "algebra needs at least one block".into(),
            ));
        }
        if let Some(pos) = block_dims.iter().position(|&d| d == 0) {
            return Err(OomError::Validation(format!(
                "block {pos} has non-positive size"
            )));
        }
        let total_dim = block_dims.iter().map(|d| d * d).sum();
        Ok(CStarAlgebra {
            block_dims,
            total_dim,
        })
    }

    /// The commutative algebra `C(Δ)` with `|Δ| = n`.
    pub fn commutative(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    /// Linear dimension, `Σ n_k²`.
    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn is_commutative(&self) -> bool {
        self.block_dims.iter().all(|&d| d == 1)
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self
                .block_dims
                .iter()
                .map(|&d| DMatrix::zeros(d, d))
                .collect(),
        }
    }

    pub fn unit(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self
                .block_dims
                .iter()
                .map(|&d| DMatrix::identity(d, d))
                .collect(),
        }
    }

    /// Maps a basis index to `(block, row, col)`.
    pub fn basis_position(&self, index: usize) -> Option<(usize, usize, usize)> {
        let mut offset = 0;
        for (k, &d) in self.block_dims.iter().enumerate() {
            if index < offset + d * d {
                let local = index - offset;
                return Some((k, local / d, local % d));
            }
            offset += d * d;
        }
        None
    }

    /// The matrix unit with the given basis index.
    pub fn basis_element(&self, index: usize) -> Result<AlgebraElement> {
        let (k, i, j) = self.basis_position(index).ok_or(OomError::SymbolIndex {
            index,
            size: self.total_dim,
        })?;
        let mut e = self.zero();
        e.blocks[k][(i, j)] = C64::new(1.0, 0.0);
        Ok(e)
    }

    /// All matrix units in basis order.
    pub fn basis(&self) -> Vec<AlgebraElement> {
        (0..self.total_dim)
            .map(|i| self.basis_element(i).expect("index in range"))
            .collect()
    }

    /// Basis-coordinate vector of the unit element.
    pub fn unit_coefficients(&self) -> Vec<C64> {
        self.unit().coefficients()
    }

    /// Builds an element from its coordinates in the matrix-unit basis.
    pub fn from_coefficients(&self, coeffs: &[C64]) -> Result<AlgebraElement> {
        if coeffs.len() != self.total_dim {
            return Err(OomError::Shape {
                field: "coefficients".into(),
                expected: self.total_dim.to_string(),
                found: coeffs.len().to_string(),
            });
        }
        let mut offset = 0;
        let blocks = self
            .block_dims
            .iter()
            .map(|&d| {
                let m = DMatrix::from_row_slice(d, d, &coeffs[offset..offset + d * d]);
                offset += d * d;
                m
            })
            .collect();
        Ok(AlgebraElement {
            algebra: self.clone(),
            blocks,
        })
    }

    pub fn element(&self, blocks: Vec<DMatrix<C64>>) -> Result<AlgebraElement> {
        if blocks.len() != self.block_dims.len() {
            return Err(OomError::Shape {
                field: "blocks".into(),
                expected: self.block_dims.len().to_string(),
                found: blocks.len().to_string(),
            });
        }
        for (k, (b, &d)) in blocks.iter().zip(&self.block_dims).enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(OomError::Shape {
                    field: format!("blocks[{k}]"),
                    expected: format!("{d}x{d}"),
                    found: format!("{}x{}", b.nrows(), b.ncols()),
                });
            }
        }
        Ok(AlgebraElement {
            algebra: self.clone(),
            blocks,
        })
    }

    /// Element with independent uniform entries in `[-1, 1] + i[-1, 1]`.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let coeffs: Vec<C64> = (0..self.total_dim)
            .map(|_| C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
            .collect();
        self.from_coefficients(&coeffs).expect("length matches")
    }

    /// `b* b` for a random `b`, scaled to unit Frobenius norm.
    pub fn random_positive<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let b = self.random_element(rng);
        let p = b.adjoint() * &b;
        let norm = p.norm();
        if norm > 0.0 {
            p.scale(C64::new(1.0 / norm, 0.0))
        } else {
            self.unit()
        }
    }
}

/// An element of a [`CStarAlgebra`], stored block by block.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    algebra: CStarAlgebra,
    blocks: Vec<DMatrix<C64>>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    /// Coordinates in the matrix-unit basis (the entries, block-major, row-major).
    pub fn coefficients(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.algebra.total_dim);
        for b in &self.blocks {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    out.push(b[(i, j)]);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> AlgebraElement {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b * s).collect(),
        }
    }

    /// Frobenius norm over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn checked_mul(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.same_algebra(other)?;
        Ok(self.zip_blocks(other, |a, b| a * b))
    }

    pub fn checked_add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.same_algebra(other)?;
        Ok(self.zip_blocks(other, |a, b| a + b))
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| {
            let diff = b - b.adjoint();
            diff.iter().all(|z| z.norm() <= tol)
        })
    }

    /// Smallest eigenvalue over all blocks of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let h = (b + b.adjoint()) * C64::new(0.5, 0.0);
                h.symmetric_eigenvalues().min()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Membership in the positive cone: self-adjoint within `tol` and every
    /// block's smallest eigenvalue at least `-tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_self_adjoint(tol) && self.min_eigenvalue() >= -tol
    }

    fn same_algebra(&self, other: &AlgebraElement) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(OomError::AlgebraMismatch {
                expected: self.algebra.block_dims.clone(),
                found: other.algebra.block_dims.clone(),
            });
        }
        Ok(())
    }

    fn zip_blocks(
        &self,
        other: &AlgebraElement,
        f: impl Fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64>,
    ) -> AlgebraElement {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }
}

/// Panics if the operands belong to different algebras; use
/// [`AlgebraElement::checked_mul`] when that is not known statically.
impl Mul<&AlgebraElement> for AlgebraElement {
    type Output = AlgebraElement;

    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.checked_mul(rhs).expect("operands in the same algebra")
    }
}

impl Mul<&AlgebraElement> for &AlgebraElement {
    type Output = AlgebraElement;

    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.checked_mul(rhs).expect("operands in the same algebra")
    }
}

impl Add<&AlgebraElement> for &AlgebraElement {
    type Output = AlgebraElement;

    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.checked_add(rhs).expect("operands in the same algebra")
    }
}

impl Sub<&AlgebraElement> for &AlgebraElement {
    type Output = AlgebraElement;

    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.checked_add(&rhs.scale(C64::new(-1.0, 0.0)))
            .expect("operands in the same algebra")
    }
}
