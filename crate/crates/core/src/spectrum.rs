//! Pseudo-spectra over a 1-D search grid.
//!
//! The angle and range estimators share one structure: a family of unit-modulus
//! geometric search vectors `v(x)_k = z(x)^k` evaluated on a grid, scored
//! against a covariance matrix or a noise subspace. [`SearchTable`] holds the
//! precomputed vectors; the free functions here score them.

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::subspace::{cholesky, CholeskyFactor, CovarianceMatrix, SubspaceSplit};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Null-clamp floor: subspace spectra never exceed `1 / SPECTRUM_EPS`.
pub const SPECTRUM_EPS: f64 = 1e-12;

/// Inclusive, evenly spaced grid `start, start + step, ...` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidConfig("grid bounds must be finite".into()));
        }
        if self.start >= self.stop {
            return Err(Error::InvalidConfig(format!(
                "grid start {} must be below stop {}",
                self.start, self.stop
            )));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidConfig(format!("grid step {} must be positive", self.step)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

/// Sampled pseudo-spectrum with its argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub peak_index: usize,
}

impl Spectrum {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::Domain(format!(
                "spectrum needs matching nonempty grid/values ({} vs {})",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!("spectrum value {bad} is not finite and non-negative")));
        }
        let peak_index = argmax(&values);
        Ok(Self {
            grid,
            values,
            peak_index,
        })
    }

    pub fn peak(&self) -> f64 {
        self.grid[self.peak_index]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "abscissa,value")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{x},{v:e}")?;
        }
        Ok(())
    }
}

/// Relative band below the maximum inside which values count as tied.
///
/// Analytically flat spectra come out of floating point with ulp-level
/// ripple; without a band their "peak" would land on an arbitrary grid point.
pub const PEAK_TIE_TOLERANCE: f64 = 1e-12;

// First value within the tie band of the maximum wins.
fn argmax(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max - PEAK_TIE_TOLERANCE * max.abs();
    values.iter().position(|&v| v >= floor).unwrap_or(0)
}

/// Abscissa of the spectrum peak; ties resolve to the smallest abscissa.
pub fn peak_search(s: &Spectrum) -> f64 {
    s.peak()
}

/// Precomputed search vectors, one row of length `dim` per grid point.
///
/// Row `i` must be the geometric progression `z_i^0, z_i^1, ...` with
/// `|z_i| = 1`; the lag-domain Bartlett evaluation depends on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTable {
    abscissae: Vec<f64>,
    dim: usize,
    vectors: Vec<C64>,
}

impl SearchTable {
    /// Builds the table from the per-point phase increment `step(x)`.
    pub fn from_phase_steps(abscissae: Vec<f64>, dim: usize, step: impl Fn(f64) -> f64) -> Self {
        let mut vectors = Vec::with_capacity(abscissae.len() * dim);
        for &x in &abscissae {
            vectors.extend(crate::channel::phase_ramp(step(x), dim));
        }
        Self {
            abscissae,
            dim,
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn vector(&self, i: usize) -> &[C64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    fn check_dim(&self, n: usize, what: &str) -> Result<()> {
        if n != self.dim {
            return Err(Error::Domain(format!(
                "{what} dimension {n} does not match search-vector length {}",
                self.dim
            )));
        }
        Ok(())
    }

    fn build(&self, values: Vec<f64>) -> Result<Spectrum> {
        Spectrum::new(self.abscissae.clone(), values)
    }
}

/// `1 / ||N^H v||_2` for every search vector.
pub fn music_spectrum(split: &SubspaceSplit, table: &SearchTable) -> Result<Spectrum> {
    table.check_dim(split.dim(), "noise basis")?;
    let p = split.noise_dim();
    if p == 0 {
        return Err(Error::DegenerateSplit("empty noise subspace".into()));
    }
    let n = split.dim();
    // Rows of N^H, contiguous.
    let adjoint: Vec<C64> = (0..p)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| split.noise_basis[(i, j)].conj())
        .collect();
    let values = (0..table.len())
        .map(|t| {
            let v = table.vector(t);
            let mut energy = 0.0;
            for row in adjoint.chunks_exact(n) {
                let proj: C64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                energy += proj.norm_sqr();
            }
            1.0 / energy.sqrt().max(SPECTRUM_EPS)
        })
        .collect();
    table.build(values)
}

/// `v^H R v` evaluated directly.
pub fn bartlett_spectrum(r: &CovarianceMatrix, table: &SearchTable) -> Result<Spectrum> {
    table.check_dim(r.dim(), "covariance")?;
    let n = r.dim();
    let m = r.matrix.as_slice();
    let values = (0..table.len())
        .map(|t| {
            let v = table.vector(t);
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                let rv: C64 = m[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
                acc += v[i].conj() * rv;
            }
            acc.re.max(0.0)
        })
        .collect();
    table.build(values)
}

/// `||L^H v||^2` from a Cholesky factor of the covariance.
pub fn bartlett_spectrum_cholesky(chol: &CholeskyFactor, table: &SearchTable) -> Result<Spectrum> {
    table.check_dim(chol.dim(), "Cholesky factor")?;
    let values = (0..table.len())
        .map(|t| chol.quad_form(table.vector(t)))
        .collect();
    table.build(values)
}

/// `v^H R v` through the lag sums of `R`.
///
/// With `v_k = z^k` and `|z| = 1`, `v^H R v = s_0 + 2 Re sum_{d>0} s_d z^d`
/// where `s_d = sum_m R[m, m + d]`. Cost is `O(N)` per grid point.
pub fn bartlett_spectrum_lagged(r: &CovarianceMatrix, table: &SearchTable) -> Result<Spectrum> {
    table.check_dim(r.dim(), "covariance")?;
    let n = r.dim();
    let lags: Vec<C64> = (0..n)
        .map(|d| (0..n - d).map(|m| r.matrix[(m, m + d)]).sum())
        .collect();
    let s0 = lags[0].re;
    let values = (0..table.len())
        .map(|t| {
            let v = table.vector(t);
            let cross: C64 = lags[1..].iter().zip(&v[1..]).map(|(s, z)| s * z).sum();
            (s0 + 2.0 * cross.re).max(0.0)
        })
        .collect();
    table.build(values)
}

/// `1 / (v^H (R + loading I)^{-1} v)` via Cholesky solves.
pub fn mvdr_spectrum(r: &CovarianceMatrix, table: &SearchTable, loading: f64) -> Result<Spectrum> {
    table.check_dim(r.dim(), "covariance")?;
    let chol = cholesky(&r.matrix, loading)?;
    let values = (0..table.len())
        .map(|t| {
            let q = chol.quad_form_inverse(table.vector(t));
            1.0 / q.max(SPECTRUM_EPS)
        })
        .collect();
    table.build(values)
}

/// Minimum-norm weight `w = U_n U_n^H e_1`.
pub fn min_norm_weight(split: &SubspaceSplit) -> Result<Vec<C64>> {
    let n = split.dim();
    let p = split.noise_dim();
    if p == 0 {
        return Err(Error::DegenerateSplit("empty noise subspace".into()));
    }
    let u = &split.noise_basis;
    let w: Vec<C64> = (0..n)
        .map(|i| (0..p).map(|j| u[(i, j)] * u[(0, j)].conj()).sum())
        .collect();
    // ||w||^2 = w_0 for a projector column; compare against unit scale.
    if crate::linalg::norm_sqr(&w).sqrt() < 1e-12 {
        return Err(Error::DegenerateWeight);
    }
    Ok(w)
}

/// `1 / |w^H v|^2` with the minimum-norm weight.
pub fn min_norm_spectrum(split: &SubspaceSplit, table: &SearchTable) -> Result<Spectrum> {
    table.check_dim(split.dim(), "noise basis")?;
    let w = min_norm_weight(split)?;
    let values = (0..table.len())
        .map(|t| {
            let proj = crate::linalg::dot_h(&w, table.vector(t));
            1.0 / proj.norm_sqr().max(SPECTRUM_EPS)
        })
        .collect();
    table.build(values)
}
