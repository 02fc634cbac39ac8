//! Truncated plane-wave matrix of `-Δ + q` under quasiperiodic conditions.
//!
//! Rows and columns are indexed by lattice vectors in plane-major order
//! (ascending depth into the potential's half-space, ties lexicographic).
//! For a half-space potential the coupling `q_{γ-γ'}` is nonzero only when
//! `γ` lies on a strictly deeper plane than `γ'`, so the matrix is lower
//! triangular with the free levels `|γ+t|²` on the diagonal. This is used as
//! an independent check of the analytic constructions.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{IndexVector, LatticeError};
use crate::potential::{FourierPotential, HalfSpace};
use crate::spectrum::eigenvalue;

/// Rank threshold relative to the spectral norm of the matrix.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Accumulated right-hand side below which a repeated diagonal row is
/// treated as consistent during forward substitution.
pub const DEFAULT_RHS_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GalerkinError {
    #[error("matrix is not strictly triangular in plane-major order: entry ({row}, {col}) = {value}")]
    NotTriangular {
        row: IndexVector,
        col: IndexVector,
        value: Complex64,
    },
    #[error("diagonal index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("no eigenvector with leading term at row {leading}: row {row} carries {residual:.3e}")]
    NoEigenvector {
        leading: usize,
        row: usize,
        residual: f64,
    },
    #[error("{lambda} matches no diagonal entry")]
    NotAnEigenvalue { lambda: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    t: Vec<f64>,
    halfspace: HalfSpace,
    indices: Vec<IndexVector>,
    matrix: DMatrix<Complex64>,
}

impl TruncatedOperator {
    /// Plane waves with `‖γ‖ <= cutoff`.
    pub fn build(q: &FourierPotential, t: &[f64], cutoff: f64) -> Result<Self, GalerkinError> {
        let origin = vec![0.0; q.dim()];
        let indices = q.basis().enumerate_ball(&origin, cutoff);
        Self::build_on(q, t, indices)
    }

    /// Operator compressed to an arbitrary index set. The ordering axis is
    /// the potential's half-space, or the first axis (`+`) when the
    /// potential is unclassified.
    pub fn build_on(
        q: &FourierPotential,
        t: &[f64],
        mut indices: Vec<IndexVector>,
    ) -> Result<Self, GalerkinError> {
        let basis = q.basis();
        basis.check_vector(t)?;
        let halfspace = q.classification().unwrap_or(HalfSpace::plus(0));
        indices.sort();
        indices.dedup();
        indices.sort_by(|a, b| halfspace.depth(a).cmp(&halfspace.depth(b)).then_with(|| a.cmp(b)));

        let n = indices.len();
        let mut matrix = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for (r, row) in indices.iter().enumerate() {
            matrix[(r, r)] = Complex64::new(eigenvalue(basis, row, t), 0.0);
            for (c, col) in indices.iter().enumerate() {
                if let Some(v) = q.coeffs().get(&row.sub(col)) {
                    matrix[(r, c)] += v;
                }
            }
        }
        Ok(TruncatedOperator {
            t: t.to_vec(),
            halfspace,
            indices,
            matrix,
        })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn halfspace(&self) -> HalfSpace {
        self.halfspace
    }

    pub fn indices(&self) -> &[IndexVector] {
        &self.indices
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn position(&self, n: &IndexVector) -> Option<usize> {
        self.indices.iter().position(|m| m == n)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// First entry that breaks strict triangularity, if any: a nonzero
    /// off-diagonal entry whose row is not on a deeper plane than its column.
    pub fn triangularity_violation(&self) -> Option<(usize, usize)> {
        let n = self.size();
        for r in 0..n {
            let dr = self.halfspace.depth(&self.indices[r]);
            for c in 0..n {
                if r != c
                    && dr <= self.halfspace.depth(&self.indices[c])
                    && self.matrix[(r, c)] != Complex64::new(0.0, 0.0)
                {
                    return Some((r, c));
                }
            }
        }
        None
    }

    pub fn is_strictly_triangular(&self) -> bool {
        self.triangularity_violation().is_none()
    }

    fn require_triangular(&self) -> Result<(), GalerkinError> {
        match self.triangularity_violation() {
            None => Ok(()),
            Some((r, c)) => Err(GalerkinError::NotTriangular {
                row: self.indices[r].clone(),
                col: self.indices[c].clone(),
                value: self.matrix[(r, c)],
            }),
        }
    }

    /// Eigenvalues of the truncated matrix. The matrix is triangular, so
    /// they are exactly the diagonal entries.
    pub fn truncated_spectrum(&self) -> Result<Vec<f64>, GalerkinError> {
        self.require_triangular()?;
        Ok(self.diagonal())
    }

    /// Rows whose diagonal entry lies within `tol` of `lambda`.
    pub fn rows_at(&self, lambda: f64, tol: f64) -> Vec<usize> {
        (0..self.size())
            .filter(|&i| (self.matrix[(i, i)].re - lambda).abs() <= tol)
            .collect()
    }

    /// Solves `(M - λ_i I) x = 0` by forward substitution from row `i` with
    /// `x_i = 1` and `x_j = 0` before it.
    pub fn eigenvector_backsolve(
        &self,
        leading: usize,
        group_tol: f64,
        rhs_tol: f64,
    ) -> Result<Backsolve, GalerkinError> {
        self.require_triangular()?;
        let n = self.size();
        if leading >= n {
            return Err(GalerkinError::IndexOutOfRange {
                index: leading,
                size: n,
            });
        }
        let lambda = self.matrix[(leading, leading)].re;
        let mut x = DVector::from_element(n, Complex64::new(0.0, 0.0));
        x[leading] = Complex64::new(1.0, 0.0);
        let mut free_rows = Vec::new();
        for r in leading + 1..n {
            let mut rhs = Complex64::new(0.0, 0.0);
            for c in leading..r {
                rhs += self.matrix[(r, c)] * x[c];
            }
            let diag = self.matrix[(r, r)] - lambda;
            if diag.norm() <= group_tol {
                if rhs.norm() > rhs_tol {
                    return Err(GalerkinError::NoEigenvector {
                        leading,
                        row: r,
                        residual: rhs.norm(),
                    });
                }
                free_rows.push(r);
            } else {
                x[r] = -rhs / diag;
            }
        }
        Ok(Backsolve {
            lambda,
            vector: x,
            free_rows,
        })
    }

    fn shifted(&self, lambda: f64) -> DMatrix<Complex64> {
        let mut a = self.matrix.clone();
        for i in 0..self.size() {
            a[(i, i)] -= lambda;
        }
        a
    }

    /// Largest singular value of the matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.matrix.singular_values().max()
    }

    /// Dimension of `ker(M - λI)` from the singular values of `M - λI`,
    /// counting those at or below `rank_tol * ‖M‖`.
    pub fn geometric_multiplicity(
        &self,
        lambda: f64,
        group_tol: f64,
        rank_tol: f64,
    ) -> Result<RankReport, GalerkinError> {
        if self.rows_at(lambda, group_tol).is_empty() {
            return Err(GalerkinError::NotAnEigenvalue { lambda });
        }
        let threshold = rank_tol * self.spectral_norm();
        Ok(nullity(&self.shifted(lambda), threshold))
    }

    /// Nullities of `M - λI` and `(M - λI)²`. A strict increase means a
    /// Jordan chain of length at least two.
    pub fn jordan_probe(
        &self,
        lambda: f64,
        group_tol: f64,
        rank_tol: f64,
    ) -> Result<JordanProbe, GalerkinError> {
        if self.rows_at(lambda, group_tol).is_empty() {
            return Err(GalerkinError::NotAnEigenvalue { lambda });
        }
        let norm = self.spectral_norm();
        let a = self.shifted(lambda);
        let a2 = &a * &a;
        let first = nullity(&a, rank_tol * norm);
        let second = nullity(&a2, rank_tol * norm * norm);
        Ok(JordanProbe { first, second })
    }

    /// Orthonormal basis of the numerical kernel of `M - λI`.
    pub fn kernel_basis(&self, lambda: f64, rank_tol: f64) -> Vec<DVector<Complex64>> {
        let threshold = rank_tol * self.spectral_norm();
        let svd = self.shifted(lambda).svd(false, true);
        let v_t = svd.v_t.expect("requested V");
        svd.singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= threshold)
            .map(|(i, _)| v_t.row(i).adjoint())
            .collect()
    }

    /// Least-squares solution of `(M - λI) x = rhs` and its residual norm.
    pub fn solve_shifted(
        &self,
        lambda: f64,
        rhs: &DVector<Complex64>,
        rank_tol: f64,
    ) -> (DVector<Complex64>, f64) {
        let a = self.shifted(lambda);
        let eps = rank_tol * self.spectral_norm();
        let svd = a.clone().svd(true, true);
        let x = svd.solve(rhs, eps).expect("U and V were computed");
        let residual = (&a * &x - rhs).norm();
        (x, residual)
    }

    /// Row-major CSV with `re+imi` cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.size() {
            for c in 0..self.size() {
                if c > 0 {
                    out.push(',');
                }
                let v = self.matrix[(r, c)];
                let sign = if v.im.is_sign_negative() { '-' } else { '+' };
                let _ = write!(out, "{}{}{}i", v.re, sign, v.im.abs());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Backsolve {
    pub lambda: f64,
    pub vector: DVector<Complex64>,
    /// Repeated-diagonal rows passed with a vanishing right-hand side; the
    /// entry there was set to zero.
    pub free_rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankReport {
    pub nullity: usize,
    pub threshold: f64,
    /// A singular value lies within a factor 10 of the threshold.
    pub borderline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanProbe {
    pub first: RankReport,
    pub second: RankReport,
}

impl JordanProbe {
    pub fn has_jordan_chain(&self) -> bool {
        self.second.nullity > self.first.nullity
    }

    pub fn borderline(&self) -> bool {
        self.first.borderline || self.second.borderline
    }
}

fn nullity(a: &DMatrix<Complex64>, threshold: f64) -> RankReport {
    let sv = a.singular_values();
    let nullity = sv.iter().filter(|&&s| s <= threshold).count();
    let borderline = sv
        .iter()
        .any(|&s| s > threshold / 10.0 && s <= threshold * 10.0);
    RankReport {
        nullity,
        threshold,
        borderline,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBasis;
    use crate::spectrum::DEFAULT_GROUP_TOL;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn iv(a: i64, b: i64) -> IndexVector {
        [a, b].into()
    }

    fn oned(q: &[(i64, f64)]) -> FourierPotential {
        let basis = LatticeBasis::new(vec![vec![2.0 * PI]]).unwrap();
        FourierPotential::new(basis, q.iter().map(|&(m, v)| (IndexVector::from([m]), c(v, 0.0)))).unwrap()
    }

    #[test]
    fn free_operator_is_diagonal() {
        let q = FourierPotential::zero(LatticeBasis::identity(2));
        let op = TruncatedOperator::build(&q, &[0.5, 0.3], 1.5).unwrap();
        assert_eq!(op.size(), 9);
        for r in 0..9 {
            for col in 0..9 {
                if r != col {
                    assert_eq!(op.matrix()[(r, col)], c(0.0, 0.0));
                }
            }
            let expected = eigenvalue(q.basis(), &op.indices()[r], &[0.5, 0.3]);
            assert_eq!(op.matrix()[(r, r)].re, expected);
        }
        // plane-major: first axis ascending
        assert_eq!(op.indices()[0], iv(-1, -1));
        assert_eq!(op.indices()[8], iv(1, 1));
    }

    #[test]
    fn single_harmonic_entries() {
        let a = c(0.4, -0.1);
        let q = FourierPotential::new(LatticeBasis::identity(2), [(iv(1, 0), a)]).unwrap();
        let op = TruncatedOperator::build(&q, &[0.5, 0.3], 2.0).unwrap();
        for (r, row) in op.indices().iter().enumerate() {
            for (col, colv) in op.indices().iter().enumerate() {
                let expected = if row.sub(colv) == iv(1, 0) {
                    a
                } else if r == col {
                    op.matrix()[(r, r)]
                } else {
                    c(0.0, 0.0)
                };
                assert_eq!(op.matrix()[(r, col)], expected);
            }
        }
        assert!(op.is_strictly_triangular());
    }

    #[test]
    fn spectrum_is_free_spectrum() {
        let basis = LatticeBasis::identity(2);
        let q = FourierPotential::new(
            basis.clone(),
            [(iv(1, 0), c(0.9, 0.1)), (iv(2, -3), c(-0.5, 0.5)), (iv(1, 2), c(0.0, 0.7))],
        )
        .unwrap();
        let t = [0.25, -0.125];
        let free = TruncatedOperator::build(&FourierPotential::zero(basis), &t, 4.0).unwrap();
        let op = TruncatedOperator::build(&q, &t, 4.0).unwrap();
        assert_eq!(op.truncated_spectrum().unwrap(), free.truncated_spectrum().unwrap());
    }

    #[test]
    fn unclassified_potential_fails_guard() {
        let q = FourierPotential::new(
            LatticeBasis::identity(2),
            [(iv(1, 0), c(0.1, 0.0)), (iv(-1, 0), c(0.1, 0.0))],
        )
        .unwrap();
        let op = TruncatedOperator::build(&q, &[0.0, 0.0], 2.0).unwrap();
        assert!(matches!(op.truncated_spectrum(), Err(GalerkinError::NotTriangular { .. })));
    }

    #[test]
    fn minus_halfspace_is_triangular() {
        let q = FourierPotential::new(
            LatticeBasis::identity(2),
            [(iv(0, -1), c(0.3, 0.0)), (iv(2, -2), c(0.1, 0.1))],
        )
        .unwrap();
        let op = TruncatedOperator::build(&q, &[0.1, 0.1], 3.0).unwrap();
        assert!(op.is_strictly_triangular());
    }

    #[test]
    fn backsolve_free_is_unit_vector() {
        let q = FourierPotential::zero(LatticeBasis::identity(2));
        let op = TruncatedOperator::build(&q, &[0.5, 0.3], 2.0).unwrap();
        let i = op.position(&iv(0, 0)).unwrap();
        let b = op.eigenvector_backsolve(i, DEFAULT_GROUP_TOL, DEFAULT_RHS_TOL).unwrap();
        for (j, v) in b.vector.iter().enumerate() {
            assert_eq!(*v, if j == i { c(1.0, 0.0) } else { c(0.0, 0.0) });
        }
    }

    #[test]
    fn free_multiplicity_on_unit_circle() {
        let q = FourierPotential::zero(LatticeBasis::identity(2));
        let op = TruncatedOperator::build(&q, &[0.0, 0.0], 2.0).unwrap();
        let m = op.geometric_multiplicity(1.0, DEFAULT_GROUP_TOL, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(m.nullity, 4);
        assert!(!m.borderline);
        assert!(matches!(
            op.geometric_multiplicity(0.5, DEFAULT_GROUP_TOL, DEFAULT_RANK_TOL),
            Err(GalerkinError::NotAnEigenvalue { .. })
        ));
    }

    #[test]
    fn oned_multiplicity_examples() {
        let a = 0.3;
        let lambda = (2.0 * PI).powi(2);
        let tuned = oned(&[(1, a), (2, -a * a / (4.0 * PI * PI))]);
        let op = TruncatedOperator::build(&tuned, &[0.0], 2.0 * PI * 6.0).unwrap();
        let m = op.geometric_multiplicity(lambda, 1e-9, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(m.nullity, 2);

        let plain = oned(&[(1, a)]);
        let op = TruncatedOperator::build(&plain, &[0.0], 2.0 * PI * 6.0).unwrap();
        let m = op.geometric_multiplicity(lambda, 1e-9, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(m.nullity, 1);
        let probe = op.jordan_probe(lambda, 1e-9, DEFAULT_RANK_TOL).unwrap();
        assert!(probe.has_jordan_chain());

        // the repeated row blocks substitution from -1 but not from +1
        let minus = op.position(&IndexVector::from([-1])).unwrap();
        let plus = op.position(&IndexVector::from([1])).unwrap();
        assert!(matches!(
            op.eigenvector_backsolve(minus, 1e-9, DEFAULT_RHS_TOL),
            Err(GalerkinError::NoEigenvector { .. })
        ));
        assert!(op.eigenvector_backsolve(plus, 1e-9, DEFAULT_RHS_TOL).is_ok());
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let a = 0.3;
        let tuned = oned(&[(1, a), (2, -a * a / (4.0 * PI * PI))]);
        let op = TruncatedOperator::build(&tuned, &[0.0], 2.0 * PI * 6.0).unwrap();
        let lambda = (2.0 * PI).powi(2);
        let kernel = op.kernel_basis(lambda, DEFAULT_RANK_TOL);
        assert_eq!(kernel.len(), 2);
        for v in kernel {
            let mut a = op.matrix().clone();
            for i in 0..op.size() {
                a[(i, i)] -= lambda;
            }
            assert!((a * v).norm() < 1e-9);
        }
    }

    #[test]
    fn csv_cells() {
        let q = FourierPotential::new(LatticeBasis::identity(1), [([1].into(), c(0.5, -0.25))]).unwrap();
        let op = TruncatedOperator::build(&q, &[0.0], 1.0).unwrap();
        let csv = op.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "1+0i,0+0i,0+0i");
        assert_eq!(lines[1], "0.5-0.25i,0+0i,0+0i");
    }
}
