//! Sparse Fourier potentials and their half-space classification.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{dot, IndexVector, LatticeBasis, LatticeError, Sign};

/// Sparse map from lattice index to coefficient.
pub type Coefficients = BTreeMap<IndexVector, Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("coefficient index {index} has dimension {found}, expected {expected}")]
    IndexDimension {
        index: IndexVector,
        expected: usize,
        found: usize,
    },
    #[error("coefficient at {index} is not finite")]
    NonFinite { index: IndexVector },
    #[error("square-summable input mode is only admitted in dimensions 2 and 3, got {dim}")]
    SquareSummableDimension { dim: usize },
    #[error("truncation radius must be finite and non-negative, got {radius}")]
    BadTruncation { radius: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Half-space `Γ(k±)` containing the Fourier support. `axis` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HalfSpace {
    pub axis: usize,
    pub sign: Sign,
}

impl HalfSpace {
    pub fn new(axis: usize, sign: Sign) -> Self {
        HalfSpace { axis, sign }
    }

    pub fn plus(axis: usize) -> Self {
        HalfSpace::new(axis, Sign::Plus)
    }

    /// Signed plane index: positive exactly on `Γ(k±)`.
    pub fn depth(&self, n: &IndexVector) -> i64 {
        self.sign.as_i64() * n.component(self.axis)
    }

    pub fn contains(&self, n: &IndexVector) -> bool {
        n.in_halfspace(self.axis, self.sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Summability {
    Summable,
    SquareSummable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierPotential {
    basis: LatticeBasis,
    coeffs: Coefficients,
    classification: Option<HalfSpace>,
    mode: Summability,
    truncation_radius: Option<f64>,
}

impl FourierPotential {
    /// Builds a finitely supported potential. Zero coefficients are dropped
    /// and repeated indices are summed.
    pub fn new(
        basis: LatticeBasis,
        entries: impl IntoIterator<Item = (IndexVector, Complex64)>,
    ) -> Result<Self, PotentialError> {
        let dim = basis.dim();
        let mut coeffs = Coefficients::new();
        for (index, value) in entries {
            if index.dim() != dim {
                return Err(PotentialError::IndexDimension {
                    expected: dim,
                    found: index.dim(),
                    index,
                });
            }
            if !(value.re.is_finite() && value.im.is_finite()) {
                return Err(PotentialError::NonFinite { index });
            }
            *coeffs.entry(index).or_insert(Complex64::new(0.0, 0.0)) += value;
        }
        coeffs.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        let classification = classify(&coeffs, dim);
        Ok(FourierPotential {
            basis,
            coeffs,
            classification,
            mode: Summability::Summable,
            truncation_radius: None,
        })
    }

    /// Square-summable input: coefficients whose lattice vector is longer
    /// than `radius` are discarded and the radius is recorded.
    pub fn square_summable(
        basis: LatticeBasis,
        entries: impl IntoIterator<Item = (IndexVector, Complex64)>,
        radius: f64,
    ) -> Result<Self, PotentialError> {
        let dim = basis.dim();
        if !(dim == 2 || dim == 3) {
            return Err(PotentialError::SquareSummableDimension { dim });
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(PotentialError::BadTruncation { radius });
        }
        let mut kept = Vec::new();
        for (index, value) in entries {
            if index.dim() == dim {
                let x = basis.to_cartesian(&index);
                if dot(&x, &x).sqrt() > radius {
                    continue;
                }
            }
            kept.push((index, value));
        }
        let mut q = FourierPotential::new(basis, kept)?;
        q.mode = Summability::SquareSummable;
        q.truncation_radius = Some(radius);
        Ok(q)
    }

    pub fn zero(basis: LatticeBasis) -> Self {
        FourierPotential::new(basis, std::iter::empty()).expect("empty potential is valid")
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn coeffs(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn coefficient(&self, n: &IndexVector) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn classification(&self) -> Option<HalfSpace> {
        self.classification
    }

    pub fn mode(&self) -> Summability {
        self.mode
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    /// All coefficients real: the PT-symmetric subclass.
    pub fn is_pt_symmetric(&self) -> bool {
        self.coeffs.values().all(|v| v.im == 0.0)
    }

    /// `M = Σ |q_γ|`.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `q(x) = Σ q_γ exp(i<γ, x>)`.
    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(n, q)| q * Complex64::from_polar(1.0, dot(&self.basis.to_cartesian(n), x)))
            .sum()
    }

    /// A pair of support indices that no single half-space contains, if one
    /// exists. Only meaningful when the potential is unclassified.
    pub fn conflicting_pair(&self) -> Option<(IndexVector, IndexVector)> {
        let dim = self.dim();
        let support: Vec<&IndexVector> = self.coeffs.keys().collect();
        for (i, a) in support.iter().enumerate() {
            if !any_halfspace(dim, |h| h.contains(a)) {
                return Some(((*a).clone(), (*a).clone()));
            }
            for b in &support[i + 1..] {
                if !any_halfspace(dim, |h| h.contains(a) && h.contains(b)) {
                    return Some(((*a).clone(), (*b).clone()));
                }
            }
        }
        None
    }
}

fn any_halfspace(dim: usize, pred: impl Fn(&HalfSpace) -> bool) -> bool {
    (0..dim).any(|axis| [Sign::Plus, Sign::Minus].iter().any(|&s| pred(&HalfSpace::new(axis, s))))
}

/// Smallest axis (then `+` before `-`) whose half-lattice contains every
/// support index. The empty support is classified as `(0, +)`.
pub fn classify(coeffs: &Coefficients, dim: usize) -> Option<HalfSpace> {
    for axis in 0..dim {
        for sign in [Sign::Plus, Sign::Minus] {
            let h = HalfSpace::new(axis, sign);
            if coeffs.keys().all(|n| h.contains(n)) {
                return Some(h);
            }
        }
    }
    None
}

/// Sparse convolution of two coefficient maps.
pub fn convolve(a: &Coefficients, b: &Coefficients) -> Coefficients {
    let mut out = Coefficients::new();
    for (ia, va) in a {
        for (ib, vb) in b {
            *out.entry(ia.add(ib)).or_default() += va * vb;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn support(idx: &[[i64; 2]]) -> Coefficients {
        idx.iter().map(|i| (IndexVector::from(*i), c(1.0, 0.0))).collect()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&support(&[[1, 0], [1, 1], [2, -1]]), 2),
            Some(HalfSpace::new(0, Sign::Plus))
        );
        assert_eq!(classify(&support(&[[1, 0], [-1, 0]]), 2), None);
        assert_eq!(
            classify(&support(&[[0, -2], [1, -5]]), 2),
            Some(HalfSpace::new(1, Sign::Minus))
        );
    }

    #[test]
    fn evaluate_examples() {
        let b = LatticeBasis::identity(2);
        let zero = FourierPotential::zero(b.clone());
        assert_eq!(zero.evaluate(&[0.3, 0.1]), c(0.0, 0.0));
        let q = FourierPotential::new(b, [([1, 0].into(), c(1.0, 0.0))]).unwrap();
        assert!((q.evaluate(&[0.0, 0.0]) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((q.evaluate(&[PI, 0.0]) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn norm_examples() {
        let b = LatticeBasis::identity(2);
        let zero = FourierPotential::zero(b.clone());
        assert_eq!((zero.l1_norm(), zero.l2_norm()), (0.0, 0.0));
        let q = FourierPotential::new(b.clone(), [([1, 0].into(), c(3.0, 4.0))]).unwrap();
        assert_eq!((q.l1_norm(), q.l2_norm()), (5.0, 5.0));
        let q = FourierPotential::new(
            b,
            [([1, 0].into(), c(1.0, 0.0)), ([2, 0].into(), c(1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(q.l1_norm(), 2.0);
        assert!((q.l2_norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let q = FourierPotential::new(
            LatticeBasis::identity(2),
            [
                ([1, 0].into(), c(0.0, 0.0)),
                ([-1, 0].into(), c(0.5, 0.0)),
                ([-1, 0].into(), c(-0.5, 0.0)),
            ],
        )
        .unwrap();
        assert!(q.is_zero());
        assert_eq!(q.classification(), Some(HalfSpace::plus(0)));
    }

    #[test]
    fn bad_inputs() {
        let b = LatticeBasis::identity(2);
        assert!(matches!(
            FourierPotential::new(b.clone(), [([1].into(), c(1.0, 0.0))]),
            Err(PotentialError::IndexDimension { .. })
        ));
        assert!(matches!(
            FourierPotential::new(b, [([1, 0].into(), c(f64::NAN, 0.0))]),
            Err(PotentialError::NonFinite { .. })
        ));
        assert!(matches!(
            FourierPotential::square_summable(LatticeBasis::identity(1), [], 3.0),
            Err(PotentialError::SquareSummableDimension { dim: 1 })
        ));
    }

    #[test]
    fn square_summable_truncates() {
        let entries = (1..=20).map(|m| (IndexVector::from([m, 0]), c(1.0 / m as f64, 0.0)));
        let q = FourierPotential::square_summable(LatticeBasis::identity(2), entries, 5.0).unwrap();
        assert_eq!(q.coeffs().len(), 5);
        assert_eq!(q.mode(), Summability::SquareSummable);
        assert_eq!(q.truncation_radius(), Some(5.0));
    }

    #[test]
    fn conflicting_pair_witness() {
        let q = FourierPotential::new(
            LatticeBasis::identity(2),
            [([1, 0].into(), c(1.0, 0.0)), ([-1, 0].into(), c(1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(q.classification(), None);
        assert_eq!(q.conflicting_pair(), Some(([-1, 0].into(), [1, 0].into())));
    }

    #[test]
    fn pt_flag() {
        let b = LatticeBasis::identity(2);
        let real = FourierPotential::new(b.clone(), [([1, 0].into(), c(0.2, 0.0))]).unwrap();
        let cplx = FourierPotential::new(b, [([1, 0].into(), c(0.2, 0.1))]).unwrap();
        assert!(real.is_pt_symmetric());
        assert!(!cplx.is_pt_symmetric());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn entries() -> impl Strategy<Value = Vec<([i64; 2], (f64, f64))>> {
            prop::collection::vec(((-3i64..=3, -3i64..=3), (-1.0..1.0f64, -1.0..1.0f64)), 0..8)
                .prop_map(|v| v.into_iter().map(|((a, b), w)| ([a, b], w)).collect())
        }

        proptest! {
            #[test]
            fn classify_is_order_independent(mut e in entries()) {
                let b = LatticeBasis::identity(2);
                let mk = |e: &Vec<([i64; 2], (f64, f64))>| {
                    FourierPotential::new(
                        b.clone(),
                        e.iter().map(|(i, (re, im))| (IndexVector::from(*i), c(*re, *im))),
                    )
                    .unwrap()
                };
                let first = mk(&e).classification();
                e.reverse();
                prop_assert_eq!(first, mk(&e).classification());
                let q = mk(&e);
                prop_assert_eq!(classify(q.coeffs(), 2), q.classification());
            }

            #[test]
            fn convolution_powers_climb_planes(
                idx in prop::collection::vec((1i64..=3, -3i64..=3), 1..5),
                power in 1usize..=4,
            ) {
                let coeffs: Coefficients =
                    idx.iter().map(|&(p, a)| (IndexVector::from([p, a]), c(0.5, 0.25))).collect();
                let mut acc = coeffs.clone();
                for _ in 1..power {
                    acc = convolve(&acc, &coeffs);
                }
                for n in acc.keys() {
                    prop_assert!(n.component(0) >= power as i64);
                }
            }
        }
    }
}
