//! Root functions at multiple eigenvalues.
//!
//! For a degeneracy group whose members spread over several planes, the
//! candidate root function led by a second-plane member is built plane by
//! plane; it is an eigenfunction exactly when `s` scalar criteria (one per
//! first-plane member) vanish. The one-dimensional periodic problem has an
//! explicit criterion for `(2πn)²` to be a double eigenvalue, evaluated in
//! exact arithmetic.

pub mod exact;
pub mod oned;
pub mod second_plane;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{IndexVector, LatticeError};
use crate::spectrum::EigenGroup;

pub use exact::{parse_rational, rational_from_f64, PiLaurent, RationalParseError};
pub use oned::{
    classify_eigenfunction_form, oned_coefficient, oned_coefficients, oned_double_criterion,
    EigenForm, OneDimPotential,
};
pub use second_plane::{
    analyze_root_function, invariant_subspace_operator, oracle_root_class, second_plane_solve,
};

/// Absolute tolerance for declaring a criterion value zero.
pub const CRITERION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootFnError {
    #[error("index {index} is not positive")]
    NonPositiveIndex { index: i64 },
    #[error("coefficient at {index} is not finite")]
    NonFinite { index: i64 },
    #[error("p = {p} outside 1..={}", 2 * n - 1)]
    PlaneOutOfRange { p: i64, n: i64 },
    #[error("nonzero coefficient at {index} does not fit either form for n = {n}")]
    MalformedForm { index: i64, n: i64 },
    #[error("group has {planes} plane(s); a second plane is required")]
    NoSecondPlane { planes: usize },
    #[error("member {member} out of range for a plane with {size} members")]
    MemberOutOfRange { member: usize, size: usize },
    #[error("potential is not of half-space type")]
    Unclassified,
    #[error("potential half-space {potential} does not match the group's {group}")]
    HalfSpaceMismatch { potential: String, group: String },
    #[error("unexpected degeneracy at {index}: λ - |x+t|² = {denominator:.3e}")]
    UnexpectedDegeneracy { index: IndexVector, denominator: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "order", rename_all = "kebab-case")]
pub enum RootClass {
    Eigenfunction,
    /// Associated function of order at most the given bound.
    AssociatedUpTo(usize),
}

/// `c(a, n)` with `a` the index with its axis component cleared and `n`
/// the axis component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneCoefficient {
    pub a: IndexVector,
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootFunctionReport {
    pub group: EigenGroup,
    /// 1-based plane of the leading member.
    pub plane: usize,
    /// 0-based position of the leading member inside its plane.
    pub member: usize,
    pub leading: IndexVector,
    pub coefficients: Vec<PlaneCoefficient>,
    /// One value per first-plane member; empty when only the coarse bound
    /// is available.
    pub criterion_values: Vec<ComplexValue>,
    pub classification: RootClass,
    pub criterion_tol: f64,
}
