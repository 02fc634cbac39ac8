//! Bloch spectra and Bloch functions of multidimensional periodic
//! Schrödinger operators `-Δ + q` whose potential has Fourier support in a
//! half-lattice.
//!
//! Lattice vectors are integer index tuples ([`IndexVector`]) over a fixed
//! generator set ([`LatticeBasis`]); potentials are sparse coefficient maps
//! ([`FourierPotential`]). The [`galerkin`] module provides an independent
//! truncated plane-wave oracle for every analytic construction.

pub mod bloch;
pub mod galerkin;
pub mod isoenergetic;
pub mod lattice;
pub mod potential;
pub mod rootfn;
pub mod spectrum;

pub use bloch::{BlochCoefficients, BlochError, SeriesOptions};
pub use galerkin::{GalerkinError, TruncatedOperator};
pub use isoenergetic::{IsoError, SurfaceSample};
pub use lattice::{IndexVector, LatticeBasis, LatticeError, Sign};
pub use potential::{Coefficients, FourierPotential, HalfSpace, PotentialError, Summability};
pub use rootfn::{RootClass, RootFnError, RootFunctionReport};
pub use spectrum::{EigenGroup, SpectrumError};
