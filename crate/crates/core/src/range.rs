//! Range (BS–UE distance) estimators.
//!
//! Two magnitude-based estimators exploit the `rho^-2` path loss: ISQ (an
//! unscaled inverse square root of summed magnitudes) and LR (a supervised
//! regression on the log of summed magnitudes). Two phase-based estimators
//! run MUSIC and Bartlett over the subcarrier phase vector `B(rho)`.

use crate::channel::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::spectrum::{
    bartlett_spectrum, bartlett_spectrum_cholesky, music_spectrum, Grid, SearchTable, Spectrum,
};
use crate::subspace::{CholeskyFactor, CovarianceMatrix, SubspaceSplit};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Meters; defaults to `0..=1000` in 1 m steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RangeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for RangeGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 1000.0,
            step: 1.0,
        }
    }
}

impl RangeGrid {
    pub fn grid(&self) -> Result<Grid> {
        let g = Grid::new(self.start, self.stop, self.step)?;
        if self.start < 0.0 {
            return Err(Error::InvalidConfig("range grid must start at or above 0 m".into()));
        }
        Ok(g)
    }

    /// Rejects grids that reach the ambiguity period `c / delta_f`.
    pub fn check_unambiguous(&self, delta_f: f64) -> Result<()> {
        let period = SPEED_OF_LIGHT / delta_f;
        if self.stop >= period {
            return Err(Error::InvalidConfig(format!(
                "range grid stop {} m reaches the ambiguity period {:.1} m of the subcarrier spacing",
                self.stop, period
            )));
        }
        Ok(())
    }
}

/// Subcarrier phase vectors for every grid range.
pub fn range_table(grid: &RangeGrid, n_sub: usize, delta_f: f64) -> Result<SearchTable> {
    if n_sub < 2 {
        return Err(Error::InsufficientAperture(
            "range spectra need at least two subcarriers".into(),
        ));
    }
    let points = grid.grid()?.points();
    grid.check_unambiguous(delta_f)?;
    Ok(SearchTable::from_phase_steps(points, n_sub, |rho| {
        -2.0 * PI * rho * delta_f / SPEED_OF_LIGHT
    }))
}

/// `sum_n |h_n|`, rejecting vectors with no energy.
pub fn magnitude_sum(h: &[C64]) -> Result<f64> {
    let s: f64 = h.iter().map(|z| z.norm()).sum();
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::DegenerateInput(
            "CSI magnitudes sum to zero".into(),
        ));
    }
    Ok(s)
}

/// `1 / sqrt(sum_n |h_n|)`: proportional to range, not to scale.
pub fn isq_rho(h: &[C64]) -> Result<f64> {
    Ok(1.0 / magnitude_sum(h)?.sqrt())
}

/// `rho = slope * ln(sum |h|) + intercept`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares of true range on `ln(sum |h|)`.
pub fn lr_fit<'a, I>(training: I) -> Result<LrModel>
where
    I: IntoIterator<Item = (&'a [C64], f64)>,
{
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (h, rho) in training {
        xs.push(magnitude_sum(h)?.ln());
        ys.push(rho);
    }
    fit_line(&xs, &ys)
}

fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LrModel> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Fit(format!("need at least two training pairs, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all regressors are equal".into()));
    }
    let slope = sxy / sxx;
    Ok(LrModel {
        slope,
        intercept: my - slope * mx,
    })
}

/// Predicted range, clamped below at zero.
pub fn lr_rho(model: &LrModel, h: &[C64]) -> Result<f64> {
    let x = magnitude_sum(h)?.ln();
    Ok((model.slope * x + model.intercept).max(0.0))
}

fn check_delta_f(delta_f: f64) -> Result<()> {
    if !(delta_f.is_finite() && delta_f > 0.0) {
        return Err(Error::Domain(format!("subcarrier spacing {delta_f} must be positive")));
    }
    Ok(())
}

pub fn music_rho(split: &SubspaceSplit, grid: &RangeGrid, delta_f: f64) -> Result<Spectrum> {
    check_delta_f(delta_f)?;
    music_spectrum(split, &range_table(grid, split.dim(), delta_f)?)
}

/// `B^H R B`, or `||L^H B||^2` when a Cholesky factor is supplied.
pub fn bartlett_rho(
    r: &CovarianceMatrix,
    grid: &RangeGrid,
    delta_f: f64,
    chol: Option<&CholeskyFactor>,
) -> Result<Spectrum> {
    check_delta_f(delta_f)?;
    let table = range_table(grid, r.dim(), delta_f)?;
    match chol {
        Some(l) => bartlett_spectrum_cholesky(l, &table),
        None => bartlett_spectrum(r, &table),
    }
}
