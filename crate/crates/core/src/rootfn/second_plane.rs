//! Root function led by a second-plane member of a degeneracy group.
//!
//! Writing `Φ = e_b + Σ c(x) e_x` over the cone reachable from `b` by adding
//! support vectors, the equation `(L - λ)Φ = 0` determines `c(x)` on every
//! non-member `x` up to and including the first plane. At a first-plane
//! member `b_i` the diagonal vanishes, so the equation there reduces to the
//! scalar condition `Σ_γ q_γ c(b_i - γ) = 0`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use super::{
    ComplexValue, PlaneCoefficient, RootClass, RootFnError, RootFunctionReport, CRITERION_TOL,
};
use crate::bloch::denominator_tolerance;
use crate::galerkin::{GalerkinError, JordanProbe, TruncatedOperator};
use crate::lattice::IndexVector;
use crate::potential::FourierPotential;
use crate::spectrum::{eigenvalue, EigenGroup};

fn check_halfspace(q: &FourierPotential, group: &EigenGroup) -> Result<(), RootFnError> {
    if q.is_zero() {
        return Ok(());
    }
    let hs = q.classification().ok_or(RootFnError::Unclassified)?;
    if hs != group.halfspace {
        return Err(RootFnError::HalfSpaceMismatch {
            potential: format!("({}{})", hs.axis + 1, hs.sign),
            group: format!("({}{})", group.halfspace.axis + 1, group.halfspace.sign),
        });
    }
    Ok(())
}

/// Solves for the coefficients of the root function led by the `member`-th
/// index of the group's second plane, then evaluates one criterion value per
/// first-plane member.
pub fn second_plane_solve(
    q: &FourierPotential,
    group: &EigenGroup,
    member: usize,
) -> Result<RootFunctionReport, RootFnError> {
    check_halfspace(q, group)?;
    if group.planes.len() < 2 {
        return Err(RootFnError::NoSecondPlane {
            planes: group.planes.len(),
        });
    }
    let second = &group.planes[1].members;
    let target = second.get(member).ok_or(RootFnError::MemberOutOfRange {
        member,
        size: second.len(),
    })?;
    let hs = group.halfspace;
    let top = hs.depth(&group.leading()[0]);
    let leading: BTreeSet<&IndexVector> = group.leading().iter().collect();
    let basis = q.basis();
    let lambda = group.lambda;
    let tol = denominator_tolerance(lambda);

    // reachable cone up to the first plane, excluding its members
    let mut reachable: BTreeSet<IndexVector> = BTreeSet::new();
    let mut frontier = vec![target.clone()];
    while let Some(x) = frontier.pop() {
        for g in q.coeffs().keys() {
            let y = x.add(g);
            if hs.depth(&y) <= top && !leading.contains(&y) && reachable.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    let mut order: Vec<IndexVector> = reachable.into_iter().collect();
    order.sort_by(|a, b| hs.depth(a).cmp(&hs.depth(b)).then_with(|| a.cmp(b)));

    let mut c: BTreeMap<IndexVector, Complex64> = BTreeMap::new();
    c.insert(target.clone(), Complex64::new(1.0, 0.0));
    let conv = |c: &BTreeMap<IndexVector, Complex64>, x: &IndexVector| -> Complex64 {
        q.coeffs()
            .iter()
            .filter_map(|(g, v)| c.get(&x.sub(g)).map(|w| v * w))
            .sum()
    };
    for x in &order {
        let denominator = lambda - eigenvalue(basis, x, &group.t);
        if denominator.abs() <= tol {
            return Err(RootFnError::UnexpectedDegeneracy {
                index: x.clone(),
                denominator,
            });
        }
        let value = conv(&c, x) / denominator;
        c.insert(x.clone(), value);
    }

    let criterion: Vec<Complex64> = group.leading().iter().map(|b| conv(&c, b)).collect();
    let classification = if criterion.iter().all(|v| v.norm() <= CRITERION_TOL) {
        RootClass::Eigenfunction
    } else {
        RootClass::AssociatedUpTo(1)
    };

    c.remove(target);
    let coefficients = order
        .iter()
        .map(|x| {
            let (a, n) = x.decompose(hs.axis);
            let v = c[x];
            PlaneCoefficient {
                a,
                n,
                re: v.re,
                im: v.im,
            }
        })
        .collect();
    Ok(RootFunctionReport {
        group: group.clone(),
        plane: 2,
        member,
        leading: target.clone(),
        coefficients,
        criterion_values: criterion
            .iter()
            .map(|v| ComplexValue { re: v.re, im: v.im })
            .collect(),
        classification,
        criterion_tol: CRITERION_TOL,
    })
}

/// Report for the root function led by member `member` of plane `plane`
/// (1-based). First-plane members lead eigenfunctions, the second plane is
/// decided by [`second_plane_solve`], and deeper planes only get the bound
/// `AssociatedUpTo(plane - 1)`.
pub fn analyze_root_function(
    q: &FourierPotential,
    group: &EigenGroup,
    plane: usize,
    member: usize,
) -> Result<RootFunctionReport, RootFnError> {
    check_halfspace(q, group)?;
    if plane == 2 {
        return second_plane_solve(q, group, member);
    }
    let members = group
        .planes
        .get(plane.wrapping_sub(1))
        .map(|p| p.members.as_slice())
        .ok_or(RootFnError::NoSecondPlane {
            planes: group.planes.len(),
        })?;
    let leading = members.get(member).ok_or(RootFnError::MemberOutOfRange {
        member,
        size: members.len(),
    })?;
    let classification = if plane == 1 {
        RootClass::Eigenfunction
    } else {
        RootClass::AssociatedUpTo(plane - 1)
    };
    Ok(RootFunctionReport {
        group: group.clone(),
        plane,
        member,
        leading: leading.clone(),
        coefficients: Vec::new(),
        criterion_values: Vec::new(),
        classification,
        criterion_tol: CRITERION_TOL,
    })
}

/// The operator compressed to plane waves strictly deeper than the second
/// plane, plus the chosen second-plane member. This span is invariant, and
/// at `λ` it carries the `s` first-plane eigenfunctions and the root
/// function led by the member.
pub fn invariant_subspace_operator(
    q: &FourierPotential,
    group: &EigenGroup,
    member: usize,
    cutoff: f64,
) -> Result<TruncatedOperator, RootFnError> {
    if group.planes.len() < 2 {
        return Err(RootFnError::NoSecondPlane {
            planes: group.planes.len(),
        });
    }
    let second = &group.planes[1].members;
    let target = second.get(member).ok_or(RootFnError::MemberOutOfRange {
        member,
        size: second.len(),
    })?;
    let hs = group.halfspace;
    let floor = hs.depth(target);
    let origin = vec![0.0; q.dim()];
    let mut indices: Vec<IndexVector> = q
        .basis()
        .enumerate_ball(&origin, cutoff)
        .into_iter()
        .filter(|x| hs.depth(x) > floor)
        .collect();
    indices.push(target.clone());
    TruncatedOperator::build_on(q, &group.t, indices).map_err(|e| match e {
        GalerkinError::Lattice(l) => RootFnError::Lattice(l),
        other => unreachable!("build_on only fails on lattice checks: {other}"),
    })
}

/// Reads a classification off a Jordan probe of [`invariant_subspace_operator`]:
/// nullity `s + 1` means the member leads an eigenfunction, nullity `s` with
/// `(M - λ)²` gaining one dimension means a Jordan chain. Anything else is
/// inconclusive.
pub fn oracle_root_class(probe: &JordanProbe, s: usize) -> Option<RootClass> {
    if probe.first.nullity == s + 1 {
        Some(RootClass::Eigenfunction)
    } else if probe.first.nullity == s && probe.second.nullity > s {
        Some(RootClass::AssociatedUpTo(1))
    } else {
        None
    }
}
