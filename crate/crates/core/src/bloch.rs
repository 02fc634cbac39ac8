//! Bloch functions of class-S potentials in Fourier form.
//!
//! A Bloch function attached to the free level `λ = |γ+t|²` is stored as the
//! sparse map `δ ↦ c(γ, δ)` of its coefficients at `exp(i<γ+δ+t, x>)`, with
//! `c(γ, 0) = 1`. Two independent constructions are provided:
//!
//! * [`bloch_series`] sums `Σ A(γ)^n e_γ`, where `A(γ)` divides each
//!   convolution with `q` by `λ - |γ+δ+t|²`;
//! * [`closed_form_coeffs`] fills the coefficients plane by plane, each plane
//!   only reading the planes below it.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{IndexVector, LatticeError};
use crate::potential::{Coefficients, FourierPotential, HalfSpace};
use crate::spectrum::eigenvalue;

/// Relative size of the resonance guard: a denominator is treated as zero
/// when `|λ - |γ+δ+t|²| < DENOM_REL_TOL * (1 + λ)`.
pub const DENOM_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlochError {
    #[error("resonant denominator {denominator:.3e} at δ = {delta}")]
    Resonance {
        delta: IndexVector,
        denominator: f64,
    },
    #[error("potential is not supported in a half-lattice")]
    Unclassified,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Series,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlochCoefficients {
    pub gamma: IndexVector,
    pub t: Vec<f64>,
    pub halfspace: HalfSpace,
    pub lambda: f64,
    /// `δ ↦ c(γ, δ)`, relative to the base vector.
    pub coeffs: Coefficients,
    pub method: Method,
    /// Series order, or deepest plane for the closed form.
    pub order: usize,
    /// l¹ mass of the last series term (zero for the closed form).
    pub tail: f64,
    /// l¹ mass of every series term `A^n e_γ`, starting at `n = 0`.
    pub term_masses: Vec<f64>,
    pub converged: bool,
}

impl BlochCoefficients {
    pub fn coefficient(&self, delta: &IndexVector) -> Complex64 {
        self.coeffs.get(delta).copied().unwrap_or_default()
    }

    /// Every stored `δ` is either zero or strictly inside the half-space.
    pub fn is_halfspace_supported(&self) -> bool {
        self.coeffs
            .keys()
            .all(|d| d.is_zero() || self.halfspace.depth(d) >= 1)
    }

    /// Largest coefficient difference over planes `1..=max_plane`.
    pub fn max_discrepancy(&self, other: &BlochCoefficients, max_plane: i64) -> f64 {
        let mut keys: Vec<&IndexVector> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .filter(|d| self.halfspace.depth(d) <= max_plane)
            .map(|d| (self.coefficient(d) - other.coefficient(d)).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> BlochRecord {
        BlochRecord {
            gamma: self.gamma.clone(),
            t: self.t.clone(),
            lambda: self.lambda,
            order: self.order,
            entries: self
                .coeffs
                .iter()
                .map(|(delta, v)| CoefficientEntry {
                    delta: delta.clone(),
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        }
    }
}

/// Wire form of [`BlochCoefficients`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochRecord {
    pub gamma: IndexVector,
    pub t: Vec<f64>,
    pub lambda: f64,
    pub order: usize,
    pub entries: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub delta: IndexVector,
    pub re: f64,
    pub im: f64,
}

pub fn denominator_tolerance(lambda: f64) -> f64 {
    DENOM_REL_TOL * (1.0 + lambda.abs())
}

/// One application of `A(γ)`:
/// `Σ_δ Σ_{γ1} q_{γ1} f(δ) / (λ - |γ+δ+γ1+t|²)` accumulated at `δ + γ1`.
pub fn apply_a(
    q: &FourierPotential,
    gamma: &IndexVector,
    t: &[f64],
    input: &Coefficients,
) -> Result<Coefficients, BlochError> {
    let basis = q.basis();
    let lambda = eigenvalue(basis, gamma, t);
    let tol = denominator_tolerance(lambda);
    let mut denominators: BTreeMap<IndexVector, f64> = BTreeMap::new();
    let mut out = Coefficients::new();
    for (delta, value) in input {
        for (g1, qv) in q.coeffs() {
            let target = delta.add(g1);
            let denom = match denominators.get(&target) {
                Some(d) => *d,
                None => {
                    let d = lambda - eigenvalue(basis, &gamma.add(&target), t);
                    if d.abs() < tol {
                        return Err(BlochError::Resonance {
                            delta: target,
                            denominator: d,
                        });
                    }
                    denominators.insert(target.clone(), d);
                    d
                }
            };
            *out.entry(target).or_default() += qv * value / denom;
        }
    }
    Ok(out)
}

fn l1(c: &Coefficients) -> f64 {
    c.values().map(|v| v.norm()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub max_order: usize,
    /// Stop once the l¹ mass of the last term drops below this. `None` runs
    /// exactly `max_order` terms.
    pub tail_tol: Option<f64>,
}

impl SeriesOptions {
    pub fn fixed(order: usize) -> Self {
        SeriesOptions {
            max_order: order,
            tail_tol: None,
        }
    }
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            max_order: 64,
            tail_tol: Some(1e-14),
        }
    }
}

/// Partial sum of `e_γ + A(γ) e_γ + A(γ)² e_γ + ...`.
///
/// Valid when `|γ+t|²` is a simple free level, or when `γ` is one of the
/// leading members of its degeneracy group; any other resonance surfaces as
/// [`BlochError::Resonance`].
pub fn bloch_series(
    q: &FourierPotential,
    gamma: &IndexVector,
    t: &[f64],
    opts: SeriesOptions,
) -> Result<BlochCoefficients, BlochError> {
    let halfspace = q.classification().ok_or(BlochError::Unclassified)?;
    q.basis().check_vector(t)?;
    let dim = q.dim();
    let lambda = eigenvalue(q.basis(), gamma, t);

    let mut term = Coefficients::new();
    term.insert(IndexVector::zero(dim), Complex64::new(1.0, 0.0));
    let mut sum = term.clone();
    let mut masses = vec![1.0];
    let mut order = 0;
    let mut tail = 1.0;
    for n in 1..=opts.max_order {
        if let Some(tol) = opts.tail_tol {
            if tail < tol {
                break;
            }
        }
        term = apply_a(q, gamma, t, &term)?;
        tail = l1(&term);
        masses.push(tail);
        order = n;
        for (k, v) in &term {
            *sum.entry(k.clone()).or_default() += v;
        }
        if term.is_empty() {
            break;
        }
    }
    let converged = match opts.tail_tol {
        Some(tol) => tail < tol,
        None => true,
    };
    Ok(BlochCoefficients {
        gamma: gamma.clone(),
        t: t.to_vec(),
        halfspace,
        lambda,
        coeffs: sum,
        method: Method::Series,
        order,
        tail,
        term_masses: masses,
        converged,
    })
}

/// Coefficients `c(γ, δ)` for every reachable `δ` on planes `1..=depth`.
///
/// On plane `p`, `c(γ, δ) = d(γ, δ)^{-1} Σ_{γ1} q_{γ1} c(γ, δ - γ1)` with
/// `d(γ, δ) = |γ+t|² - |γ+δ+t|²`, where `δ - γ1` runs over planes `0..p`
/// and `c(γ, 0) = 1`. Expanding the recursion reproduces the chain sums over
/// `γ_1, ..., γ_j, δ - γ(j) ∈ Γ(k±)`.
pub fn closed_form_coeffs(
    q: &FourierPotential,
    gamma: &IndexVector,
    t: &[f64],
    depth: usize,
) -> Result<BlochCoefficients, BlochError> {
    let halfspace = q.classification().ok_or(BlochError::Unclassified)?;
    q.basis().check_vector(t)?;
    let basis = q.basis();
    let dim = q.dim();
    let lambda = eigenvalue(basis, gamma, t);
    let tol = denominator_tolerance(lambda);

    let support: Vec<(&IndexVector, &Complex64, i64)> = q
        .coeffs()
        .iter()
        .map(|(g, v)| (g, v, halfspace.depth(g)))
        .collect();

    let mut planes: Vec<Coefficients> = Vec::with_capacity(depth + 1);
    let mut base = Coefficients::new();
    base.insert(IndexVector::zero(dim), Complex64::new(1.0, 0.0));
    planes.push(base);

    for p in 1..=depth as i64 {
        let mut targets: Vec<IndexVector> = Vec::new();
        for &(g1, _, dp) in &support {
            if dp <= p {
                targets.extend(planes[(p - dp) as usize].keys().map(|d| d.add(g1)));
            }
        }
        targets.sort();
        targets.dedup();

        let mut plane = Coefficients::new();
        for delta in targets {
            let d = lambda - eigenvalue(basis, &gamma.add(&delta), t);
            if d.abs() < tol {
                return Err(BlochError::Resonance {
                    delta,
                    denominator: d,
                });
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for &(g1, qv, dp) in &support {
                if dp <= p {
                    if let Some(c) = planes[(p - dp) as usize].get(&delta.sub(g1)) {
                        acc += qv * c;
                    }
                }
            }
            plane.insert(delta, acc / d);
        }
        planes.push(plane);
    }

    let coeffs: Coefficients = planes.into_iter().flatten().collect();
    Ok(BlochCoefficients {
        gamma: gamma.clone(),
        t: t.to_vec(),
        halfspace,
        lambda,
        coeffs,
        method: Method::ClosedForm,
        order: depth,
        tail: 0.0,
        term_masses: Vec::new(),
        converged: true,
    })
}

/// Fourier coefficients of `(-Δ + q - λ) Ψ`, over the support of `Ψ` and of
/// one convolution with `q`.
pub fn defect(q: &FourierPotential, psi: &BlochCoefficients) -> Coefficients {
    let basis = q.basis();
    let mut out = Coefficients::new();
    for (delta, c) in &psi.coeffs {
        let diag = eigenvalue(basis, &psi.gamma.add(delta), &psi.t) - psi.lambda;
        *out.entry(delta.clone()).or_default() += diag * c;
        for (g1, qv) in q.coeffs() {
            *out.entry(delta.add(g1)).or_default() += qv * c;
        }
    }
    out
}

/// l² norm of [`defect`].
pub fn residual(q: &FourierPotential, psi: &BlochCoefficients) -> f64 {
    defect(q, psi)
        .values()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}
