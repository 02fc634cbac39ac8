//! Integer-index representation of the reciprocal lattice.
//!
//! Lattice points are always carried as integer coordinates with respect to
//! the generator set, so half-space and plane membership tests are exact.
//! Real coordinates only appear when norms are needed.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative Gram-determinant threshold below which a generator set is
/// rejected as degenerate.
pub const GRAM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice dimension must be positive")]
    EmptyBasis,
    #[error("generator {index} has {found} components, expected {expected}")]
    GeneratorLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("generator {index} has a non-finite component")]
    NonFinite { index: usize },
    #[error("generators are linearly dependent (relative Gram determinant {relative_det:.3e})")]
    Degenerate { relative_det: f64 },
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("vector has {found} components, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Orientation of a half-lattice `Γ(k±)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Integer coordinates `n` of the lattice vector `n_1 v_1 + ... + n_d v_d`.
///
/// Ordering is lexicographic on the coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexVector(pub Vec<i64>);

impl IndexVector {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        IndexVector(coords.into())
    }

    pub fn zero(dim: usize) -> Self {
        IndexVector(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// The component along generator `axis`, i.e. the plane index `p` in
    /// `δ = a + p v_k`.
    pub fn component(&self, axis: usize) -> i64 {
        self.0[axis]
    }

    /// Split into the part lying in the sublattice spanned by the other
    /// generators and the integer multiple of `v_axis`.
    pub fn decompose(&self, axis: usize) -> (IndexVector, i64) {
        let mut a = self.0.clone();
        let p = a[axis];
        a[axis] = 0;
        (IndexVector(a), p)
    }

    /// Membership in `Γ(k+)` (strictly positive component along `axis`) or
    /// `Γ(k-)`.
    pub fn in_halfspace(&self, axis: usize, sign: Sign) -> bool {
        sign.as_i64() * self.0[axis] >= 1
    }

    pub fn add(&self, other: &IndexVector) -> IndexVector {
        IndexVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &IndexVector) -> IndexVector {
        IndexVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> IndexVector {
        IndexVector(self.0.iter().map(|a| -a).collect())
    }
}

impl From<Vec<i64>> for IndexVector {
    fn from(v: Vec<i64>) -> Self {
        IndexVector(v)
    }
}

impl<const N: usize> From<[i64; N]> for IndexVector {
    fn from(v: [i64; N]) -> Self {
        IndexVector(v.to_vec())
    }
}

impl fmt::Display for IndexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Generators `v_1..v_d` of the reciprocal lattice together with the
/// derived orthogonal components `h_k` and separation constants `c(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    generators: Vec<Vec<f64>>,
    /// Component of `v_k` orthogonal to the span of the other generators.
    orthogonal: Vec<Vec<f64>>,
    separation: Vec<f64>,
    /// Dual vectors `w_k` with `<w_k, v_j> = δ_kj`.
    dual: Vec<Vec<f64>>,
}

impl LatticeBasis {
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self, LatticeError> {
        let dim = generators.len();
        if dim == 0 {
            return Err(LatticeError::EmptyBasis);
        }
        for (index, g) in generators.iter().enumerate() {
            if g.len() != dim {
                return Err(LatticeError::GeneratorLength {
                    index,
                    expected: dim,
                    found: g.len(),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(LatticeError::NonFinite { index });
            }
        }

        let gram = DMatrix::from_fn(dim, dim, |i, j| dot(&generators[i], &generators[j]));
        let scale: f64 = (0..dim).map(|i| gram[(i, i)]).product();
        let relative_det = if scale > 0.0 {
            gram.determinant() / scale
        } else {
            0.0
        };
        if relative_det.is_nan() || relative_det <= GRAM_TOLERANCE {
            return Err(LatticeError::Degenerate { relative_det });
        }
        let gram_inverse = gram
            .clone()
            .try_inverse()
            .ok_or(LatticeError::Degenerate { relative_det })?;

        let dual: Vec<Vec<f64>> = (0..dim)
            .map(|k| combine(&generators, (0..dim).map(|j| gram_inverse[(k, j)])))
            .collect();

        let mut orthogonal = Vec::with_capacity(dim);
        for k in 0..dim {
            orthogonal.push(orthogonal_component(&generators, &gram, k));
        }
        let separation = orthogonal.iter().map(|h| norm(h)).collect();

        Ok(LatticeBasis {
            generators,
            orthogonal,
            separation,
            dual,
        })
    }

    /// The standard basis of `Z^d`.
    pub fn identity(dim: usize) -> Self {
        let generators = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        LatticeBasis::new(generators).expect("identity basis is valid")
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> &[f64] {
        &self.generators[k]
    }

    pub fn orthogonal_component(&self, k: usize) -> &[f64] {
        &self.orthogonal[k]
    }

    pub fn check_axis(&self, axis: usize) -> Result<(), LatticeError> {
        if axis >= self.dim() {
            Err(LatticeError::AxisOutOfRange {
                axis,
                dim: self.dim(),
            })
        } else {
            Ok(())
        }
    }

    pub fn check_vector(&self, x: &[f64]) -> Result<(), LatticeError> {
        if x.len() != self.dim() {
            Err(LatticeError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            })
        } else {
            Ok(())
        }
    }

    /// `c(k) = ‖h_k‖`, the lower bound on `‖γ_1 + ... + γ_s‖ / s` for
    /// elements of `Γ(k±)`.
    pub fn separation_constant(&self, axis: usize) -> Result<f64, LatticeError> {
        self.check_axis(axis)?;
        Ok(self.separation[axis])
    }

    pub fn to_cartesian(&self, n: &IndexVector) -> Vec<f64> {
        debug_assert_eq!(n.dim(), self.dim());
        combine(&self.generators, n.0.iter().map(|&c| c as f64))
    }

    /// `γ + t` for the lattice vector with index `n`.
    pub fn shifted(&self, n: &IndexVector, t: &[f64]) -> Vec<f64> {
        let mut x = self.to_cartesian(n);
        for (xi, ti) in x.iter_mut().zip(t) {
            *xi += ti;
        }
        x
    }

    /// Real coordinates of `x` with respect to the generators.
    pub fn generator_coords(&self, x: &[f64]) -> Vec<f64> {
        self.dual.iter().map(|w| dot(w, x)).collect()
    }

    pub fn from_generator_coords(&self, coords: &[f64]) -> Vec<f64> {
        combine(&self.generators, coords.iter().copied())
    }

    /// Map `t` to the representative of `t + Γ` whose generator coordinates
    /// lie in `[-1/2, 1/2)`.
    pub fn reduce_quasimomentum(&self, t: &[f64]) -> Vec<f64> {
        let coords: Vec<f64> = self
            .generator_coords(t)
            .into_iter()
            .map(|c| c - (c + 0.5).floor())
            .collect();
        self.from_generator_coords(&coords)
    }

    /// Largest distance between two points of the closed fundamental cell
    /// `{Σ c_j v_j : c_j ∈ [-1/2, 1/2]}`.
    pub fn cell_diameter(&self) -> f64 {
        let dim = self.dim();
        let mut best = 0.0f64;
        for mask in 0u64..(1u64 << dim) {
            let coeffs = (0..dim).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 });
            best = best.max(norm(&combine(&self.generators, coeffs)));
        }
        best
    }

    /// All lattice indices whose cartesian point lies in the closed ball of
    /// the given radius around `center`, in lexicographic order.
    pub fn enumerate_ball(&self, center: &[f64], radius: f64) -> Vec<IndexVector> {
        let dim = self.dim();
        if radius < 0.0 {
            return Vec::new();
        }
        let center_coords = self.generator_coords(center);
        // n_j = <w_j, x>, so |n_j - <w_j, center>| <= ‖w_j‖ * radius.
        let bounds: Vec<(i64, i64)> = (0..dim)
            .map(|j| {
                let reach = norm(&self.dual[j]) * radius;
                let lo = (center_coords[j] - reach).floor() as i64 - 1;
                let hi = (center_coords[j] + reach).ceil() as i64 + 1;
                (lo, hi)
            })
            .collect();

        let radius_sq = radius * radius;
        let mut out = Vec::new();
        let mut current: Vec<i64> = bounds.iter().map(|b| b.0).collect();
        loop {
            let n = IndexVector(current.clone());
            let x = self.to_cartesian(&n);
            let dist_sq: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist_sq <= radius_sq {
                out.push(n);
            }
            // odometer, last coordinate fastest -> lexicographic order
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if current[axis] < bounds[axis].1 {
                    current[axis] += 1;
                    for (c, b) in current.iter_mut().zip(&bounds).skip(axis + 1) {
                        *c = b.0;
                    }
                    break;
                }
            }
        }
    }
}

/// `h_k = v_k - Σ_{j≠k} α_j v_j` with `α` solving the Gram system of the
/// remaining generators.
fn orthogonal_component(generators: &[Vec<f64>], gram: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let dim = generators.len();
    if dim == 1 {
        return generators[0].clone();
    }
    let others: Vec<usize> = (0..dim).filter(|&j| j != k).collect();
    let sub = DMatrix::from_fn(others.len(), others.len(), |a, b| gram[(others[a], others[b])]);
    let rhs = DVector::from_iterator(others.len(), others.iter().map(|&j| gram[(j, k)]));
    let alpha = sub
        .lu()
        .solve(&rhs)
        .expect("sub-Gram matrix of an independent set is invertible");
    let mut h = generators[k].clone();
    for (a, &j) in others.iter().enumerate() {
        if alpha[a] != 0.0 {
            for (hi, vi) in h.iter_mut().zip(&generators[j]) {
                *hi -= alpha[a] * vi;
            }
        }
    }
    h
}

fn combine(generators: &[Vec<f64>], coeffs: impl Iterator<Item = f64>) -> Vec<f64> {
    let dim = generators.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (c, g) in coeffs.zip(generators) {
        for (o, gi) in out.iter_mut().zip(g) {
            *o += c * gi;
        }
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}
