//! Angle-of-arrival pseudo-spectra over the ULA steering vector.
//!
//! Four estimators: MUSIC, Bartlett (conventional beamformer), MVDR/Capon and
//! Minimum Norm. The convenience functions here build a steering table for a
//! single call; batch pipelines should build [`angle_table`] once and use the
//! table-based functions in [`crate::spectrum`].

use crate::error::Result;
use crate::spectrum::{
    bartlett_spectrum, bartlett_spectrum_cholesky, bartlett_spectrum_lagged, min_norm_spectrum,
    music_spectrum, mvdr_spectrum, Grid, SearchTable, Spectrum,
};
use crate::subspace::{CholeskyFactor, CovarianceMatrix, SubspaceSplit};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use crate::spectrum::peak_search;

/// Degrees; defaults to `0..=180` in 1° steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AngleGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 180.0,
            step: 1.0,
        }
    }
}

impl AngleGrid {
    pub fn grid(&self) -> Result<Grid> {
        let g = Grid::new(self.start, self.stop, self.step)?;
        if self.start < 0.0 || self.stop > 180.0 {
            return Err(crate::Error::InvalidConfig(format!(
                "angle grid [{}, {}] leaves [0, 180] degrees",
                self.start, self.stop
            )));
        }
        Ok(g)
    }
}

/// Steering vectors for every grid angle.
pub fn angle_table(grid: &AngleGrid, n_rx: usize) -> Result<SearchTable> {
    let points = grid.grid()?.points();
    Ok(SearchTable::from_phase_steps(points, n_rx, |deg| {
        PI * deg.to_radians().cos()
    }))
}

pub fn music_theta(split: &SubspaceSplit, grid: &AngleGrid) -> Result<Spectrum> {
    music_spectrum(split, &angle_table(grid, split.dim())?)
}

/// `A^H R A`; with a Cholesky factor `L` of `R` it is evaluated as `||L^H A||^2`.
pub fn bartlett_theta(
    r: &CovarianceMatrix,
    grid: &AngleGrid,
    chol: Option<&CholeskyFactor>,
) -> Result<Spectrum> {
    let table = angle_table(grid, r.dim())?;
    match chol {
        Some(l) => bartlett_spectrum_cholesky(l, &table),
        None => bartlett_spectrum(r, &table),
    }
}

/// Same values as [`bartlett_theta`], computed from the lag sums of `R`.
pub fn bartlett_theta_lagged(r: &CovarianceMatrix, grid: &AngleGrid) -> Result<Spectrum> {
    bartlett_spectrum_lagged(r, &angle_table(grid, r.dim())?)
}

pub fn mvdr_theta(r: &CovarianceMatrix, grid: &AngleGrid, loading: f64) -> Result<Spectrum> {
    mvdr_spectrum(r, &angle_table(grid, r.dim())?, loading)
}

pub fn minnorm_theta(split: &SubspaceSplit, grid: &AngleGrid) -> Result<Spectrum> {
    min_norm_spectrum(split, &angle_table(grid, split.dim())?)
}
