//! Free Bloch eigenvalues `|γ+t|²`, simplicity, and the degeneracy-group /
//! plane structure of multiple eigenvalues.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{norm_sq, IndexVector, LatticeBasis, LatticeError};
use crate::potential::HalfSpace;

/// Width (in energy units) within which two free eigenvalues are treated as
/// the same level.
pub const DEFAULT_GROUP_TOL: f64 = 1e-9;
/// Gap (in `|γ+t|` units) required between distinct levels for `is_simple`.
pub const DEFAULT_SIMPLE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("cutoff {cutoff} is below the required {required} for |γ+t| = {norm}")]
    CutoffTooSmall {
        cutoff: f64,
        required: f64,
        norm: f64,
    },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// `|γ + t|²`.
pub fn eigenvalue(basis: &LatticeBasis, gamma: &IndexVector, t: &[f64]) -> f64 {
    norm_sq(&basis.shifted(gamma, t))
}

/// Minimum cutoff radius for which every colliding `b` is enumerated.
pub fn required_cutoff(basis: &LatticeBasis, gamma: &IndexVector, t: &[f64]) -> f64 {
    let r = eigenvalue(basis, gamma, t).sqrt();
    2.0 * (r + r)
}

fn check_cutoff(
    basis: &LatticeBasis,
    gamma: &IndexVector,
    t: &[f64],
    cutoff: f64,
) -> Result<(), SpectrumError> {
    basis.check_vector(t)?;
    let required = required_cutoff(basis, gamma, t);
    if cutoff < required {
        return Err(SpectrumError::CutoffTooSmall {
            cutoff,
            required,
            norm: eigenvalue(basis, gamma, t).sqrt(),
        });
    }
    Ok(())
}

/// True when `γ + t` lies on no diffraction hyperplane, i.e. every other
/// `γ + b + t` within the cutoff differs in length by more than `tol`.
pub fn is_simple(
    basis: &LatticeBasis,
    gamma: &IndexVector,
    t: &[f64],
    cutoff: f64,
    tol: f64,
) -> Result<bool, SpectrumError> {
    check_cutoff(basis, gamma, t, cutoff)?;
    let r = eigenvalue(basis, gamma, t).sqrt();
    let zero = vec![0.0; basis.dim()];
    Ok(basis
        .enumerate_ball(&zero, cutoff)
        .into_iter()
        .filter(|b| !b.is_zero())
        .all(|b| (eigenvalue(basis, &gamma.add(&b), t).sqrt() - r).abs() > tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMember {
    pub index: IndexVector,
    pub plane: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub n: i64,
    pub members: Vec<IndexVector>,
}

/// All lattice vectors sharing one free eigenvalue, ordered by plane along
/// the chosen axis (first plane = the one deepest inside the half-space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenGroup {
    pub lambda: f64,
    pub t: Vec<f64>,
    pub halfspace: HalfSpace,
    pub members: Vec<GroupMember>,
    /// Number of members on the first plane.
    pub s: usize,
    pub planes: Vec<Plane>,
    /// Smallest `| |b+t|² - λ |` over enumerated non-members, for auditing
    /// near-degenerate clusters. `None` when nothing else was enumerated.
    pub nearest_gap: Option<f64>,
}

impl EigenGroup {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }

    /// Leading members `b_1..b_s`.
    pub fn leading(&self) -> &[IndexVector] {
        &self.planes[0].members
    }

    pub fn contains(&self, n: &IndexVector) -> bool {
        self.members.iter().any(|m| &m.index == n)
    }
}

/// Collects every `b` with `| |b+t|² - |γ+t|² | <= group_tol` and arranges
/// them into planes along `halfspace.axis`.
pub fn degeneracy_group(
    basis: &LatticeBasis,
    gamma: &IndexVector,
    t: &[f64],
    halfspace: HalfSpace,
    cutoff: f64,
    group_tol: f64,
) -> Result<EigenGroup, SpectrumError> {
    basis.check_axis(halfspace.axis)?;
    check_cutoff(basis, gamma, t, cutoff)?;
    let lambda = eigenvalue(basis, gamma, t);
    let zero = vec![0.0; basis.dim()];
    let mut colliding = Vec::new();
    let mut nearest_gap: Option<f64> = None;
    for b in basis.enumerate_ball(&zero, cutoff) {
        let cand = gamma.add(&b);
        let gap = (eigenvalue(basis, &cand, t) - lambda).abs();
        if gap <= group_tol {
            colliding.push(cand);
        } else {
            nearest_gap = Some(nearest_gap.map_or(gap, |g: f64| g.min(gap)));
        }
    }
    Ok(group_from_members(lambda, t, halfspace, colliding, nearest_gap))
}

/// Canonical group built from an already known collision list.
pub fn group_from_members(
    lambda: f64,
    t: &[f64],
    halfspace: HalfSpace,
    mut colliding: Vec<IndexVector>,
    nearest_gap: Option<f64>,
) -> EigenGroup {
    colliding.sort();
    colliding.dedup();
    // deepest plane first, then descending lexicographic within a plane
    colliding.sort_by(|a, b| {
        halfspace
            .depth(b)
            .cmp(&halfspace.depth(a))
            .then_with(|| b.cmp(a))
    });
    let members: Vec<GroupMember> = colliding
        .into_iter()
        .map(|index| GroupMember {
            plane: index.component(halfspace.axis),
            index,
        })
        .collect();

    let mut planes: Vec<Plane> = Vec::new();
    for m in &members {
        match planes.last_mut() {
            Some(p) if p.n == m.plane => p.members.push(m.index.clone()),
            _ => planes.push(Plane {
                n: m.plane,
                members: vec![m.index.clone()],
            }),
        }
    }
    let s = planes.first().map_or(0, |p| p.members.len());
    EigenGroup {
        lambda,
        t: t.to_vec(),
        halfspace,
        members,
        s,
        planes,
        nearest_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Sign;

    fn id() -> LatticeBasis {
        LatticeBasis::identity(2)
    }

    fn iv(a: i64, b: i64) -> IndexVector {
        [a, b].into()
    }

    #[test]
    fn eigenvalue_examples() {
        assert!((eigenvalue(&id(), &iv(1, 0), &[0.1, 0.2]) - 1.25).abs() < 1e-14);
        assert_eq!(eigenvalue(&id(), &iv(0, 0), &[0.0, 0.0]), 0.0);
        assert!((eigenvalue(&id(), &iv(0, 1), &[0.5, 0.3]) - 1.94).abs() < 1e-14);
    }

    #[test]
    fn simplicity_examples() {
        assert!(!is_simple(&id(), &iv(1, 0), &[0.0, 0.0], 4.0, DEFAULT_SIMPLE_TOL).unwrap());
        assert!(is_simple(&id(), &iv(0, 0), &[0.1, 0.2], 4.0, DEFAULT_SIMPLE_TOL).unwrap());
        assert!(!is_simple(&id(), &iv(0, 0), &[0.5, 0.0], 4.0, DEFAULT_SIMPLE_TOL).unwrap());
    }

    #[test]
    fn simple_gap_matches_enumeration() {
        // brute force over a generous box: smallest |λ_b - λ| for b != 0
        let t = [0.1, 0.2];
        let lambda = 0.05;
        let mut gap = f64::INFINITY;
        for i in -6i64..=6 {
            for j in -6i64..=6 {
                if (i, j) != (0, 0) {
                    let l = (i as f64 + t[0]).powi(2) + (j as f64 + t[1]).powi(2);
                    gap = gap.min((l - lambda).abs());
                }
            }
        }
        let g = degeneracy_group(&id(), &iv(0, 0), &t, HalfSpace::plus(0), 4.0, DEFAULT_GROUP_TOL)
            .unwrap();
        assert!((g.nearest_gap.unwrap() - gap).abs() < 1e-14);
        assert!((gap - 0.6).abs() < 1e-12);
    }

    #[test]
    fn cutoff_precondition() {
        let err = is_simple(&id(), &iv(2, 0), &[0.0, 0.0], 3.0, DEFAULT_SIMPLE_TOL).unwrap_err();
        assert!(matches!(err, SpectrumError::CutoffTooSmall { .. }));
    }

    #[test]
    fn unit_circle_group() {
        let g = degeneracy_group(&id(), &iv(1, 0), &[0.0, 0.0], HalfSpace::plus(0), 4.0, DEFAULT_GROUP_TOL)
            .unwrap();
        assert_eq!(g.lambda, 1.0);
        let members: Vec<(IndexVector, i64)> =
            g.members.iter().map(|m| (m.index.clone(), m.plane)).collect();
        assert_eq!(
            members,
            vec![(iv(1, 0), 1), (iv(0, 1), 0), (iv(0, -1), 0), (iv(-1, 0), -1)]
        );
        assert_eq!(g.s, 1);
        let planes: Vec<(i64, usize)> = g.planes.iter().map(|p| (p.n, p.members.len())).collect();
        assert_eq!(planes, vec![(1, 1), (0, 2), (-1, 1)]);
    }

    #[test]
    fn simple_level_is_one_member_group() {
        let g = degeneracy_group(&id(), &iv(0, 0), &[0.1, 0.2], HalfSpace::plus(0), 4.0, DEFAULT_GROUP_TOL)
            .unwrap();
        assert_eq!(g.multiplicity(), 1);
        assert_eq!(g.s, 1);
        assert_eq!(g.planes.len(), 1);
    }

    #[test]
    fn corner_group() {
        let g = degeneracy_group(&id(), &iv(0, 0), &[0.5, 0.5], HalfSpace::plus(0), 4.0, DEFAULT_GROUP_TOL)
            .unwrap();
        assert!((g.lambda - 0.5).abs() < 1e-15);
        let idx: Vec<IndexVector> = g.members.iter().map(|m| m.index.clone()).collect();
        assert_eq!(idx, vec![iv(0, 0), iv(0, -1), iv(-1, 0), iv(-1, -1)]);
        // (0,0) and (0,-1) both sit on plane 0 along the first axis
        assert_eq!(g.s, 2);
    }

    #[test]
    fn minus_orientation_puts_lowest_plane_first() {
        let g = degeneracy_group(
            &id(),
            &iv(1, 0),
            &[0.0, 0.0],
            HalfSpace::new(0, Sign::Minus),
            4.0,
            DEFAULT_GROUP_TOL,
        )
        .unwrap();
        assert_eq!(g.leading(), &[iv(-1, 0)]);
        assert_eq!(g.planes.last().unwrap().n, 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn group_is_permutation_invariant(seed in 0u64..1000) {
                let g = degeneracy_group(&id(), &iv(1, 1), &[0.0, 0.0], HalfSpace::plus(1), 8.0, DEFAULT_GROUP_TOL)
                    .unwrap();
                let mut list: Vec<IndexVector> = g.members.iter().map(|m| m.index.clone()).collect();
                let n = list.len();
                for i in 0..n {
                    let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 17)) % n;
                    list.swap(i, j);
                }
                let again = group_from_members(g.lambda, &g.t, g.halfspace, list, g.nearest_gap);
                prop_assert_eq!(again, g);
            }

            #[test]
            fn members_share_lambda_and_simplicity_agrees(
                a in -3i64..=3, b in -3i64..=3,
                tn in (-4i64..4, -4i64..4),
            ) {
                let t = [tn.0 as f64 / 8.0, tn.1 as f64 / 8.0];
                let gamma = iv(a, b);
                let cutoff = required_cutoff(&id(), &gamma, &t) + 1.0;
                let g = degeneracy_group(&id(), &gamma, &t, HalfSpace::plus(0), cutoff, DEFAULT_GROUP_TOL).unwrap();
                for m in &g.members {
                    prop_assert!((eigenvalue(&id(), &m.index, &t) - g.lambda).abs() <= DEFAULT_GROUP_TOL);
                }
                let total: usize = g.planes.iter().map(|p| p.members.len()).sum();
                prop_assert_eq!(total, g.multiplicity());
                let simple = is_simple(&id(), &gamma, &t, cutoff, DEFAULT_SIMPLE_TOL).unwrap();
                prop_assert_eq!(simple, g.multiplicity() == 1);
            }
        }
    }
}
