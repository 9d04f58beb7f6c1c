//! Per-UE estimation pipeline: covariance, pseudo-spectrum, peak search and
//! range prediction for a whole dataset.
//!
//! An [`Estimator`] owns the precomputed steering and subcarrier tables, so a
//! batch pays for the trigonometry once. Every UE is independent, which makes
//! the parallel path a plain ordered `par_iter`; serial and parallel runs
//! produce bit-identical results.

use crate::aoa::{angle_table, AngleGrid};
use crate::channel::CsiMatrix;
use crate::chart::Estimate;
use crate::error::{Error, Result};
use crate::range::{isq_rho, lr_fit, lr_rho, range_table, LrModel, RangeGrid};
use crate::spectrum::{
    bartlett_spectrum, bartlett_spectrum_cholesky, bartlett_spectrum_lagged, min_norm_spectrum,
    music_spectrum, mvdr_spectrum, SearchTable, Spectrum,
};
use crate::subspace::{
    antenna_covariance, cholesky, hermitian_eig, split_subspaces, subcarrier_covariance,
    CovarianceMatrix, SplitPolicy,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaAlgo {
    Music,
    Bartlett,
    Mvdr,
    MinNorm,
}

impl ThetaAlgo {
    pub const ALL: [ThetaAlgo; 4] = [ThetaAlgo::Music, ThetaAlgo::Bartlett, ThetaAlgo::Mvdr, ThetaAlgo::MinNorm];

    pub fn name(self) -> &'static str {
        match self {
            ThetaAlgo::Music => "music",
            ThetaAlgo::Bartlett => "bartlett",
            ThetaAlgo::Mvdr => "mvdr",
            ThetaAlgo::MinNorm => "minnorm",
        }
    }

    /// Column label used in the text tables.
    pub fn label(self) -> &'static str {
        match self {
            ThetaAlgo::Music => "MUSIC",
            ThetaAlgo::Bartlett => "Bartlett",
            ThetaAlgo::Mvdr => "MVDR",
            ThetaAlgo::MinNorm => "MinNorm",
        }
    }
}

impl fmt::Display for ThetaAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThetaAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "music" => Ok(ThetaAlgo::Music),
            "bartlett" => Ok(ThetaAlgo::Bartlett),
            "mvdr" | "capon" => Ok(ThetaAlgo::Mvdr),
            "minnorm" => Ok(ThetaAlgo::MinNorm),
            _ => Err(Error::InvalidConfig(format!("unknown angle estimator `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoAlgo {
    Isq,
    Lr,
    Music,
    Bartlett,
}

impl RhoAlgo {
    pub const ALL: [RhoAlgo; 4] = [RhoAlgo::Isq, RhoAlgo::Lr, RhoAlgo::Music, RhoAlgo::Bartlett];

    pub fn name(self) -> &'static str {
        match self {
            RhoAlgo::Isq => "isq",
            RhoAlgo::Lr => "lr",
            RhoAlgo::Music => "music",
            RhoAlgo::Bartlett => "bartlett",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RhoAlgo::Isq => "ISQ",
            RhoAlgo::Lr => "LR",
            RhoAlgo::Music => "MUSIC",
            RhoAlgo::Bartlett => "Bartlett",
        }
    }

    /// True for the phase-based estimators, whose output is a slant range
    /// that the chart corrects for antenna height. ISQ and LR are placed on
    /// the chart as plain radii.
    pub fn is_metric(self) -> bool {
        matches!(self, RhoAlgo::Music | RhoAlgo::Bartlett)
    }

    /// Phase-based estimators need at least two subcarriers.
    pub fn needs_subcarriers(self) -> bool {
        matches!(self, RhoAlgo::Music | RhoAlgo::Bartlett)
    }
}

impl fmt::Display for RhoAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RhoAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "isq" => Ok(RhoAlgo::Isq),
            "lr" => Ok(RhoAlgo::Lr),
            "music" => Ok(RhoAlgo::Music),
            "bartlett" => Ok(RhoAlgo::Bartlett),
            _ => Err(Error::InvalidConfig(format!("unknown range estimator `{s}`"))),
        }
    }
}

/// How Bartlett spectra are evaluated. All three give the same values up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BartlettPath {
    Direct,
    Cholesky,
    #[default]
    Lagged,
}

/// Diagonal loading added before the MVDR Cholesky factorization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loading {
    /// `factor * trace(R) / N`.
    RelativeTrace(f64),
    Absolute(f64),
}

impl Default for Loading {
    fn default() -> Self {
        Loading::RelativeTrace(1e-9)
    }
}

impl Loading {
    pub fn value(self, r: &CovarianceMatrix) -> f64 {
        match self {
            Loading::RelativeTrace(f) => f * r.trace() / r.dim() as f64,
            Loading::Absolute(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub angle_grid: AngleGrid,
    pub range_grid: RangeGrid,
    pub split: SplitPolicy,
    pub mvdr_loading: Loading,
    pub bartlett_path: BartlettPath,
    /// Number of leading UEs (scene order) whose true range trains LR.
    pub lr_training: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            angle_grid: AngleGrid::default(),
            range_grid: RangeGrid::default(),
            split: SplitPolicy::default(),
            mvdr_loading: Loading::default(),
            bartlett_path: BartlettPath::default(),
            lr_training: 256,
        }
    }
}

/// CSI for a set of UEs plus the supervision LR needs.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub csi: Vec<CsiMatrix>,
    /// True ranges of the leading UEs, used only to fit LR.
    pub training_rho: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.csi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.csi.is_empty()
    }
}

/// One UE's angle and range spectra, kept when spectrum capture is on.
#[derive(Debug, Clone, PartialEq)]
pub struct UeSpectra {
    pub theta: Spectrum,
    pub rho: Option<Spectrum>,
}

/// Precomputed search tables for a fixed array and subcarrier layout.
#[derive(Debug, Clone)]
pub struct Estimator {
    cfg: EstimatorConfig,
    n_rx: usize,
    n_sub: usize,
    angles: SearchTable,
    ranges: Option<SearchTable>,
}

impl Estimator {
    pub fn new(cfg: EstimatorConfig, n_rx: usize, n_sub: usize, delta_f: f64) -> Result<Self> {
        if n_rx < 2 {
            return Err(Error::InvalidConfig("angle estimation needs at least two antennas".into()));
        }
        let angles = angle_table(&cfg.angle_grid, n_rx)?;
        cfg.range_grid.grid()?;
        let ranges = if n_sub >= 2 {
            Some(range_table(&cfg.range_grid, n_sub, delta_f)?)
        } else {
            None
        };
        Ok(Self {
            cfg,
            n_rx,
            n_sub,
            angles,
            ranges,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    fn check_shape(&self, csi: &CsiMatrix) -> Result<()> {
        if csi.n_rx() != self.n_rx || csi.n_sub() != self.n_sub {
            return Err(Error::Domain(format!(
                "CSI is {}x{} but the estimator expects {}x{}",
                csi.n_sub(),
                csi.n_rx(),
                self.n_sub,
                self.n_rx
            )));
        }
        Ok(())
    }

    fn bartlett(&self, r: &CovarianceMatrix, table: &SearchTable) -> Result<Spectrum> {
        match self.cfg.bartlett_path {
            BartlettPath::Direct => bartlett_spectrum(r, table),
            BartlettPath::Lagged => bartlett_spectrum_lagged(r, table),
            BartlettPath::Cholesky => {
                bartlett_spectrum_cholesky(&cholesky(&r.matrix, r.default_loading())?, table)
            }
        }
    }

    /// Angle pseudo-spectrum of one UE.
    pub fn theta_spectrum(&self, algo: ThetaAlgo, csi: &CsiMatrix) -> Result<Spectrum> {
        self.check_shape(csi)?;
        let r = antenna_covariance(csi);
        match algo {
            ThetaAlgo::Bartlett => self.bartlett(&r, &self.angles),
            ThetaAlgo::Mvdr => mvdr_spectrum(&r, &self.angles, self.cfg.mvdr_loading.value(&r)),
            ThetaAlgo::Music | ThetaAlgo::MinNorm => {
                let split = split_subspaces(&hermitian_eig(&r.matrix)?, self.cfg.split)?;
                if algo == ThetaAlgo::Music {
                    music_spectrum(&split, &self.angles)
                } else {
                    min_norm_spectrum(&split, &self.angles)
                }
            }
        }
    }

    /// Range pseudo-spectrum of one UE (phase-based estimators only).
    pub fn rho_spectrum(&self, algo: RhoAlgo, csi: &CsiMatrix) -> Result<Spectrum> {
        self.check_shape(csi)?;
        let table = self.ranges.as_ref().ok_or_else(|| {
            Error::InsufficientAperture("range spectra need at least two subcarriers".into())
        })?;
        let r = subcarrier_covariance(csi);
        match algo {
            RhoAlgo::Bartlett => self.bartlett(&r, table),
            RhoAlgo::Music => {
                let split = split_subspaces(&hermitian_eig(&r.matrix)?, self.cfg.split)?;
                music_spectrum(&split, table)
            }
            RhoAlgo::Isq | RhoAlgo::Lr => Err(Error::InvalidConfig(format!(
                "{} does not produce a spectrum",
                algo.label()
            ))),
        }
    }

    pub fn theta(&self, algo: ThetaAlgo, csi: &CsiMatrix) -> Result<f64> {
        Ok(self.theta_spectrum(algo, csi)?.peak())
    }

    /// Range estimate of one UE; `lr` must be supplied for [`RhoAlgo::Lr`].
    pub fn rho(&self, algo: RhoAlgo, csi: &CsiMatrix, lr: Option<&LrModel>) -> Result<f64> {
        match algo {
            RhoAlgo::Isq => isq_rho(&csi.physical_entries()),
            RhoAlgo::Lr => {
                let model = lr.ok_or_else(|| Error::Fit("LR model has not been fitted".into()))?;
                lr_rho(model, &csi.physical_entries())
            }
            RhoAlgo::Music | RhoAlgo::Bartlett => Ok(self.rho_spectrum(algo, csi)?.peak()),
        }
    }

    /// Fits LR on the dataset's leading UEs.
    pub fn fit_lr(&self, data: &Dataset) -> Result<LrModel> {
        let m = self.cfg.lr_training;
        if m > data.len() || m > data.training_rho.len() {
            return Err(Error::InvalidConfig(format!(
                "LR needs {m} training UEs but only {} are labelled",
                data.len().min(data.training_rho.len())
            )));
        }
        let entries: Vec<Vec<_>> = data.csi[..m].iter().map(|h| h.physical_entries()).collect();
        lr_fit(entries.iter().map(Vec::as_slice).zip(data.training_rho[..m].iter().copied()))
    }

    /// Angle estimate for every UE, in dataset order.
    pub fn thetas(&self, algo: ThetaAlgo, data: &Dataset, parallel: bool) -> Result<Vec<f64>> {
        map_ues(&data.csi, parallel, |csi| {
            self.theta(algo, csi).map_err(|e| e.at_ue("aoa", csi.ue_id))
        })
    }

    /// Range estimate for every UE, in dataset order.
    pub fn rhos(&self, algo: RhoAlgo, data: &Dataset, parallel: bool) -> Result<Vec<f64>> {
        let lr = if algo == RhoAlgo::Lr {
            Some(self.fit_lr(data)?)
        } else {
            None
        };
        map_ues(&data.csi, parallel, |csi| {
            self.rho(algo, csi, lr.as_ref()).map_err(|e| e.at_ue("range", csi.ue_id))
        })
    }

    /// Full `(theta, rho)` estimates.
    pub fn estimate(&self, theta: ThetaAlgo, rho: RhoAlgo, data: &Dataset, parallel: bool) -> Result<Vec<Estimate>> {
        let thetas = self.thetas(theta, data, parallel)?;
        let rhos = self.rhos(rho, data, parallel)?;
        Ok(zip_estimates(data, &thetas, &rhos))
    }

    /// Angle and (where defined) range spectra for every UE.
    pub fn spectra(&self, theta: ThetaAlgo, rho: RhoAlgo, data: &Dataset, parallel: bool) -> Result<Vec<UeSpectra>> {
        map_ues(&data.csi, parallel, |csi| {
            let t = self
                .theta_spectrum(theta, csi)
                .map_err(|e| e.at_ue("aoa", csi.ue_id))?;
            let r = if rho.needs_subcarriers() {
                Some(self.rho_spectrum(rho, csi).map_err(|e| e.at_ue("range", csi.ue_id))?)
            } else {
                None
            };
            Ok(UeSpectra { theta: t, rho: r })
        })
    }
}

pub fn zip_estimates(data: &Dataset, thetas: &[f64], rhos: &[f64]) -> Vec<Estimate> {
    data.csi
        .iter()
        .zip(thetas.iter().zip(rhos))
        .map(|(csi, (&theta_deg, &rho))| Estimate {
            ue_id: csi.ue_id,
            theta_deg,
            rho,
        })
        .collect()
}

fn map_ues<T, F>(csi: &[CsiMatrix], parallel: bool, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&CsiMatrix) -> Result<T> + Sync,
{
    if parallel {
        csi.par_iter().map(&f).collect()
    } else {
        csi.iter().map(f).collect()
    }
}
