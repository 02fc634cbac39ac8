//! Isoenergetic (Fermi) surfaces: quasimomenta `t` at which some level
//! `|γ+t|²` equals `ρ²`, sampled on a uniform grid over the fundamental cell.
//!
//! The scan can read the levels either from the free lattice or from the
//! diagonal of the truncated operator with a half-space potential. Both use
//! the same index set and the same level formula, so the two samples are
//! comparable point by point.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galerkin::{GalerkinError, TruncatedOperator};
use crate::lattice::{IndexVector, LatticeBasis, LatticeError};
use crate::potential::FourierPotential;
use crate::spectrum::eigenvalue;

/// Distances closer than this are treated as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsoError {
    #[error("cutoff {cutoff} is below rho + cell diameter = {required}")]
    CutoffTooSmall { cutoff: f64, required: f64 },
    #[error("rho must be finite and non-negative, got {rho}")]
    BadRho { rho: f64 },
    #[error("resolution must be at least 2 per axis, got {resolution}")]
    BadResolution { resolution: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub t: Vec<f64>,
    pub distance: f64,
    pub nearest: IndexVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub rho: f64,
    /// Grid points per axis.
    pub grid: Vec<usize>,
    pub threshold: f64,
    pub points: Vec<SurfacePoint>,
}

impl SurfaceSample {
    /// One row per retained point: `t` coordinates, distance, nearest index.
    pub fn to_csv(&self) -> String {
        let d = self.grid.len();
        let mut out = String::new();
        let t_cols: Vec<String> = (1..=d).map(|i| format!("t{i}")).collect();
        let g_cols: Vec<String> = (1..=d).map(|i| format!("gamma{i}")).collect();
        let _ = writeln!(out, "{},distance,{}", t_cols.join(","), g_cols.join(","));
        for p in &self.points {
            let t: Vec<String> = p.t.iter().map(|x| format!("{x:.17e}")).collect();
            let g: Vec<String> = p.nearest.coords().iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "{},{:.17e},{}", t.join(","), p.distance, g.join(","));
        }
        out
    }

    pub fn quasimomenta(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.t.clone()).collect()
    }
}

fn check_rho(rho: f64) -> Result<(), IsoError> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(IsoError::BadRho { rho })
    }
}

/// Smallest radius that encloses every candidate nearest point.
pub fn required_cutoff(basis: &LatticeBasis, rho: f64) -> f64 {
    rho + basis.cell_diameter()
}

fn candidates(basis: &LatticeBasis, t: &[f64], cutoff: f64) -> Vec<IndexVector> {
    let center: Vec<f64> = t.iter().map(|x| -x).collect();
    basis.enumerate_ball(&center, cutoff)
}

/// Nearest level by `| sqrt(level) - rho |`; ties go to the first entry,
/// which callers supply in lexicographic order.
fn nearest<'a>(
    levels: impl Iterator<Item = (&'a IndexVector, f64)>,
    rho: f64,
) -> Option<(f64, IndexVector)> {
    let mut best: Option<(f64, &IndexVector)> = None;
    for (g, level) in levels {
        let d = (level.max(0.0).sqrt() - rho).abs();
        if best.is_none_or(|(b, _)| d < b - TIE_TOL) {
            best = Some((d, g));
        }
    }
    best.map(|(d, g)| (d, g.clone()))
}

/// `min_γ | ‖γ+t‖ - rho |` and the lexicographically smallest minimiser.
pub fn distance_to_surface(
    basis: &LatticeBasis,
    t: &[f64],
    rho: f64,
    cutoff: f64,
) -> Result<(f64, IndexVector), IsoError> {
    basis.check_vector(t)?;
    check_rho(rho)?;
    let required = required_cutoff(basis, rho);
    if cutoff < required {
        return Err(IsoError::CutoffTooSmall { cutoff, required });
    }
    let cands = candidates(basis, t, cutoff);
    let levels = cands.iter().map(|g| (g, eigenvalue(basis, g, t)));
    Ok(nearest(levels, rho).expect("ball of radius >= diameter is never empty"))
}

/// Generator coordinates `(2i - (r-1)) / (2(r-1))`, `i = 0..r`: a closed grid
/// on `[-1/2, 1/2]` that is exactly symmetric under negation.
pub fn grid_coordinates(resolution: usize) -> Vec<f64> {
    let r = resolution as i64;
    (0..r)
        .map(|i| (2 * i - (r - 1)) as f64 / (2 * (r - 1)) as f64)
        .collect()
}

/// All grid quasimomenta, the first axis varying slowest.
pub fn grid_points(basis: &LatticeBasis, resolution: usize) -> Vec<Vec<f64>> {
    let axis = grid_coordinates(resolution);
    let dim = basis.dim();
    let total = resolution.pow(dim as u32);
    (0..total)
        .map(|flat| {
            let mut rest = flat;
            let mut coords = vec![0.0; dim];
            for j in (0..dim).rev() {
                coords[j] = axis[rest % resolution];
                rest /= resolution;
            }
            basis.from_generator_coords(&coords)
        })
        .collect()
}

fn scan<F>(
    basis: &LatticeBasis,
    rho: f64,
    resolution: usize,
    threshold: f64,
    probe: F,
) -> Result<SurfaceSample, IsoError>
where
    F: Fn(&[f64], Vec<IndexVector>) -> Result<Option<(f64, IndexVector)>, IsoError> + Sync,
{
    check_rho(rho)?;
    if resolution < 2 {
        return Err(IsoError::BadResolution { resolution });
    }
    let cutoff = required_cutoff(basis, rho);
    let grid = grid_points(basis, resolution);
    let found: Vec<Option<SurfacePoint>> = grid
        .par_iter()
        .map(|t| {
            let hit = probe(t, candidates(basis, t, cutoff))?;
            Ok(hit
                .filter(|(d, _)| *d <= threshold)
                .map(|(distance, nearest)| SurfacePoint {
                    t: t.clone(),
                    distance,
                    nearest,
                }))
        })
        .collect::<Result<_, IsoError>>()?;
    Ok(SurfaceSample {
        rho,
        grid: vec![resolution; basis.dim()],
        threshold,
        points: found.into_iter().flatten().collect(),
    })
}

/// Grid points of the free isoenergetic surface `I_ρ(0)` within `threshold`.
pub fn sample_surface(
    basis: &LatticeBasis,
    rho: f64,
    resolution: usize,
    threshold: f64,
) -> Result<SurfaceSample, IsoError> {
    scan(basis, rho, resolution, threshold, |t, cands| {
        Ok(nearest(
            cands.iter().map(|g| (g, eigenvalue(basis, g, t))),
            rho,
        ))
    })
}

/// Same scan, reading the levels off the triangular spectrum of the
/// truncated operator with potential `q`.
pub fn sample_surface_with_potential(
    q: &FourierPotential,
    rho: f64,
    resolution: usize,
    threshold: f64,
) -> Result<SurfaceSample, IsoError> {
    scan(q.basis(), rho, resolution, threshold, |t, cands| {
        let op = TruncatedOperator::build_on(q, t, cands)?;
        let spectrum = op.truncated_spectrum()?;
        // back to lexicographic order for tie-breaking
        let mut levels: Vec<(&IndexVector, f64)> = op.indices().iter().zip(spectrum).collect();
        levels.sort_by(|a, b| a.0.cmp(b.0));
        Ok(nearest(levels.into_iter(), rho))
    })
}
