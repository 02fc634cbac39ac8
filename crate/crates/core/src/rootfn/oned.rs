//! Periodic potentials on `[0, 1]` with Fourier support on positive indices:
//! coefficients of the `(71)`-type eigenfunction at `(2πn)²` and the exact
//! criterion for that eigenvalue to have geometric multiplicity two.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::exact::PiLaurent;
use super::RootFnError;
use crate::lattice::{IndexVector, LatticeBasis};
use crate::potential::FourierPotential;

/// `q_1, q_2, ...` of `q(x) = Σ_{m >= 1} q_m exp(i 2π m x)`, held exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OneDimPotential {
    coeffs: BTreeMap<i64, PiLaurent>,
}

impl OneDimPotential {
    pub fn new(entries: impl IntoIterator<Item = (i64, PiLaurent)>) -> Result<Self, RootFnError> {
        let mut coeffs: BTreeMap<i64, PiLaurent> = BTreeMap::new();
        for (m, v) in entries {
            if m < 1 {
                return Err(RootFnError::NonPositiveIndex { index: m });
            }
            let entry = coeffs.entry(m).or_default();
            *entry = &*entry + &v;
        }
        coeffs.retain(|_, v| !v.is_zero());
        Ok(OneDimPotential { coeffs })
    }

    pub fn from_f64(entries: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self, RootFnError> {
        let mut exact = Vec::new();
        for (m, v) in entries {
            let value = PiLaurent::from_f64(v.re, v.im).ok_or(RootFnError::NonFinite { index: m })?;
            exact.push((m, value));
        }
        OneDimPotential::new(exact)
    }

    pub fn get(&self, m: i64) -> PiLaurent {
        self.coeffs.get(&m).cloned().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (i64, &PiLaurent)> {
        self.coeffs.iter().map(|(m, v)| (*m, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The lattice `2πZ`, the reciprocal lattice of period-1 functions.
    pub fn basis() -> LatticeBasis {
        LatticeBasis::new(vec![vec![2.0 * PI]]).expect("2π is a valid generator")
    }

    /// Floating-point potential on `2πZ`, for the Galerkin oracle.
    pub fn to_fourier(&self) -> FourierPotential {
        FourierPotential::new(
            OneDimPotential::basis(),
            self.coeffs
                .iter()
                .map(|(m, v)| (IndexVector::from([*m]), v.to_complex())),
        )
        .expect("finite coefficients")
    }
}

/// `c_1, ..., c_{2n-1}` with `c_p = (Ψ, exp(i2π(-n+p)x))` for the eigenfunction
/// normalised by `(Ψ, exp(-i2πnx)) = 1`:
/// `c_p = (q_p + Σ_{m=1}^{p-1} q_m c_{p-m}) / (4π² p (2n - p))`.
pub fn oned_coefficients(n: i64, q: &OneDimPotential) -> Result<Vec<PiLaurent>, RootFnError> {
    if n < 1 {
        return Err(RootFnError::NonPositiveIndex { index: n });
    }
    let top = (2 * n - 1) as usize;
    let mut c: Vec<PiLaurent> = Vec::with_capacity(top + 1);
    c.push(PiLaurent::one());
    for p in 1..=top as i64 {
        let mut acc = PiLaurent::zero();
        for (m, qm) in q.entries().take_while(|(m, _)| *m <= p) {
            acc = &acc + &(qm * &c[(p - m) as usize]);
        }
        c.push(acc.div_four_pi_sq(p * (2 * n - p)));
    }
    c.remove(0);
    Ok(c)
}

/// A single `c_p`, `1 <= p <= 2n - 1`.
pub fn oned_coefficient(n: i64, q: &OneDimPotential, p: i64) -> Result<PiLaurent, RootFnError> {
    if p < 1 || p > 2 * n - 1 {
        return Err(RootFnError::PlaneOutOfRange { p, n });
    }
    let mut all = oned_coefficients(n, q)?;
    Ok(all.swap_remove((p - 1) as usize))
}

/// `q_{2n} + Σ_{p=1}^{2n-1} q_{2n-p} c_p`. It vanishes exactly when
/// `(2πn)²` has geometric multiplicity two for the periodic problem.
pub fn oned_double_criterion(n: i64, q: &OneDimPotential) -> Result<PiLaurent, RootFnError> {
    let c = oned_coefficients(n, q)?;
    let mut acc = q.get(2 * n);
    for (i, cp) in c.iter().enumerate() {
        let p = i as i64 + 1;
        acc = &acc + &(&q.get(2 * n - p) * cp);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenForm {
    /// Leading term `exp(-i2πnx)`, support in `{-n, -n+1, ...}`.
    MinusForm,
    /// Leading term `exp(i2πnx)`, support in `{n, n+1, ...}`.
    PlusForm,
    Zero,
}

/// Reads off which of the two admissible shapes a coefficient vector has.
/// Entries with modulus at most `tol · max|Ψ_m|` count as zero.
pub fn classify_eigenfunction_form(
    psi: &BTreeMap<i64, Complex64>,
    n: i64,
    tol: f64,
) -> Result<EigenForm, RootFnError> {
    let scale = psi.values().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(EigenForm::Zero);
    }
    let nonzero: Vec<i64> = psi
        .iter()
        .filter(|(_, v)| v.norm() > tol * scale)
        .map(|(m, _)| *m)
        .collect();
    if let Some(&m) = nonzero.iter().find(|&&m| m < -n) {
        return Err(RootFnError::MalformedForm { index: m, n });
    }
    if nonzero.contains(&-n) {
        return Ok(EigenForm::MinusForm);
    }
    if let Some(&m) = nonzero.iter().find(|&&m| m < n) {
        return Err(RootFnError::MalformedForm { index: m, n });
    }
    if nonzero.contains(&n) {
        Ok(EigenForm::PlusForm)
    } else {
        Err(RootFnError::MalformedForm { index: nonzero[0], n })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootfn::exact::parse_rational;

    fn exact(re: &str, im: &str, power: i32) -> PiLaurent {
        PiLaurent::monomial(parse_rational(re).unwrap(), parse_rational(im).unwrap(), power)
    }

    fn pot(entries: &[(i64, PiLaurent)]) -> OneDimPotential {
        OneDimPotential::new(entries.iter().cloned()).unwrap()
    }

    /// Literal chain sum: compositions `(n_1, ..., n_k, p - n(k))` of `p`
    /// into positive parts, weighted by `1 / b(n, p, k)`.
    fn chain_sum_oracle(n: i64, q: &OneDimPotential, p: i64) -> PiLaurent {
        fn compositions(total: i64) -> Vec<Vec<i64>> {
            if total == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for first in 1..=total {
                for mut rest in compositions(total - first) {
                    rest.insert(0, first);
                    out.push(rest);
                }
            }
            out
        }
        let mut inner = PiLaurent::zero();
        for parts in compositions(p) {
            // parts = n_1..n_k followed by the closing part p - n(k)
            let k = parts.len() - 1;
            let mut term = PiLaurent::one();
            for part in &parts {
                term = &term * &q.get(*part);
            }
            let mut partial = 0;
            for part in &parts[..k] {
                partial += part;
                term = term.div_four_pi_sq((p - partial) * (2 * n - p + partial));
            }
            inner = &inner + &term;
        }
        inner.div_four_pi_sq(p * (2 * n - p))
    }

    #[test]
    fn coefficient_examples() {
        let zero = OneDimPotential::default();
        assert!(oned_coefficient(1, &zero, 1).unwrap().is_zero());

        let a = Complex64::new(0.3, -0.2);
        let q = OneDimPotential::from_f64([(1, a)]).unwrap();
        let c = oned_coefficient(1, &q, 1).unwrap().to_complex();
        assert!((c - a / (4.0 * PI * PI)).norm() < 1e-16);
        let c = oned_coefficient(2, &q, 1).unwrap().to_complex();
        assert!((c - a / (12.0 * PI * PI)).norm() < 1e-16);
        assert!(matches!(
            oned_coefficient(1, &q, 2),
            Err(RootFnError::PlaneOutOfRange { p: 2, n: 1 })
        ));
    }

    #[test]
    fn recursion_matches_chain_sum() {
        let q = pot(&[
            (1, exact("3/10", "0", 0)),
            (2, exact("-7/10", "1/5", 0)),
            (3, exact("1/4", "-1/3", -1)),
            (4, exact("0", "2", 0)),
            (5, exact("1", "1", 1)),
        ]);
        for n in 1..=3 {
            let c = oned_coefficients(n, &q).unwrap();
            for p in 1..=(2 * n - 1) {
                assert_eq!(c[(p - 1) as usize], chain_sum_oracle(n, &q, p), "n={n} p={p}");
            }
        }
    }

    #[test]
    fn criterion_examples() {
        for n in 1..=3 {
            assert!(oned_double_criterion(n, &OneDimPotential::default()).unwrap().is_zero());
        }
        let a = Complex64::new(0.7, 0.2);
        let q = OneDimPotential::from_f64([(1, a)]).unwrap();
        let crit = oned_double_criterion(1, &q).unwrap();
        assert!((crit.to_complex() - a * a / (4.0 * PI * PI)).norm() < 1e-16);

        let tuned = pot(&[(1, exact("0.3", "0", 0)), (2, exact("-0.0225", "0", -1))]);
        assert!(oned_double_criterion(1, &tuned).unwrap().is_zero());
    }

    #[test]
    fn only_first_2n_coefficients_matter() {
        let base = pot(&[(1, exact("0.3", "0", 0)), (2, exact("0.7", "0.2", 0))]);
        let extended = pot(&[
            (1, exact("0.3", "0", 0)),
            (2, exact("0.7", "0.2", 0)),
            (3, exact("5", "0", 0)),
        ]);
        assert_eq!(
            oned_double_criterion(1, &base).unwrap(),
            oned_double_criterion(1, &extended).unwrap()
        );
    }

    #[test]
    fn rejects_non_positive_support() {
        assert!(matches!(
            OneDimPotential::new([(0, exact("1", "0", 0))]),
            Err(RootFnError::NonPositiveIndex { index: 0 })
        ));
    }

    #[test]
    fn form_examples() {
        let one = Complex64::new(1.0, 0.0);
        let minus: BTreeMap<i64, Complex64> = [(-2, one)].into_iter().collect();
        let plus: BTreeMap<i64, Complex64> = [(2, one), (3, one * 0.1)].into_iter().collect();
        assert_eq!(classify_eigenfunction_form(&minus, 2, 1e-12).unwrap(), EigenForm::MinusForm);
        assert_eq!(classify_eigenfunction_form(&plus, 2, 1e-12).unwrap(), EigenForm::PlusForm);
        assert_eq!(
            classify_eigenfunction_form(&BTreeMap::new(), 2, 1e-12).unwrap(),
            EigenForm::Zero
        );
        let below: BTreeMap<i64, Complex64> = [(-3, one), (-2, one)].into_iter().collect();
        assert!(matches!(
            classify_eigenfunction_form(&below, 2, 1e-12),
            Err(RootFnError::MalformedForm { index: -3, n: 2 })
        ));
        let gap: BTreeMap<i64, Complex64> = [(0, one), (2, one)].into_iter().collect();
        assert!(classify_eigenfunction_form(&gap, 2, 1e-12).is_err());
    }
}
