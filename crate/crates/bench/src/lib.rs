//! Fixed workloads shared by the benchmarks.

use halfspace_core::{FourierPotential, IndexVector, LatticeBasis};
use num_complex::Complex64;

/// A deterministic potential on the identity lattice with `harmonics` terms
/// in the half-lattice of positive first component, l1 norm 0.5.
pub fn fixture(harmonics: usize) -> FourierPotential {
    let entries: Vec<(IndexVector, Complex64)> = (0..harmonics)
        .map(|i| {
            let i = i as i64;
            let index = IndexVector::from([1 + i % 3, (i * 7) % 5 - 2]);
            let phase = 0.7 * i as f64;
            (index, Complex64::from_polar(1.0, phase))
        })
        .collect();
    let total = harmonics.max(1) as f64;
    FourierPotential::new(
        LatticeBasis::identity(2),
        entries.into_iter().map(|(k, v)| (k, v * (0.5 / total))),
    )
    .expect("fixture is finite")
}

pub const T: [f64; 2] = [0.23, -0.31];
