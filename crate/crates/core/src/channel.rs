//! Single-ray CSI synthesis over a ULA and equally spaced subcarriers.
//!
//! The noiseless channel of one UE is the rank-one outer product
//!
//! ```text
//! H0 = g * rho^-r * exp(-j(2 pi rho / lambda + phi)) * B(rho) A(theta)^T
//! ```
//!
//! with `A` the antenna steering vector, `B` the subcarrier phase vector, `phi`
//! a uniform common phase and `g` the flat fading amplitude of the chosen
//! channel model. Noise is injected after scaling the channel to unit
//! per-entry power; the scale factor rides along on [`CsiMatrix`] so that
//! magnitude-based range estimators can still see the path loss.

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::rng::{substream, Purpose};
use crate::scene::Scene;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    Los,
    Qlos,
    Qnlos,
}

impl ChannelModel {
    pub const ALL: [ChannelModel; 3] = [ChannelModel::Los, ChannelModel::Qlos, ChannelModel::Qnlos];

    pub fn name(self) -> &'static str {
        match self {
            ChannelModel::Los => "LOS",
            ChannelModel::Qlos => "QLOS",
            ChannelModel::Qnlos => "QNLOS",
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(ChannelModel::Los),
            "qlos" => Ok(ChannelModel::Qlos),
            "qnlos" => Ok(ChannelModel::Qnlos),
            other => Err(Error::InvalidConfig(format!("unknown channel model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub carrier_freq: f64,
    pub n_rx: usize,
    pub n_sub: usize,
    /// Total bandwidth; subcarrier spacing is `bandwidth / n_sub`.
    pub bandwidth: f64,
    pub path_loss_exp: f64,
    pub model: ChannelModel,
    /// Per-entry SNR in dB. `None` disables noise.
    pub snr_db: Option<f64>,
    pub rician_k: f64,
    pub rng_seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_freq: 2.0e9,
            n_rx: 32,
            n_sub: 32,
            bandwidth: 312.5e3,
            path_loss_exp: 2.0,
            model: ChannelModel::Los,
            snr_db: Some(0.0),
            rician_k: 10.0,
            rng_seed: 1,
        }
    }
}

impl ChannelParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.n_sub as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 || self.n_sub == 0 {
            return Err(Error::InvalidConfig(format!(
                "n_rx and n_sub must be at least 1 (got {} and {})",
                self.n_rx, self.n_sub
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.carrier_freq) || !positive(self.bandwidth) {
            return Err(Error::InvalidConfig(
                "carrier_freq and bandwidth must be positive".into(),
            ));
        }
        if !self.path_loss_exp.is_finite() || self.path_loss_exp < 0.0 {
            return Err(Error::InvalidConfig("path_loss_exp must be non-negative".into()));
        }
        if !self.rician_k.is_finite() || self.rician_k < 0.0 {
            return Err(Error::InvalidConfig("rician_k must be non-negative".into()));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() || snr == f64::NEG_INFINITY {
                return Err(Error::InvalidConfig(format!("invalid snr_db {snr}")));
            }
        }
        Ok(())
    }
}

/// ULA steering vector with half-wavelength spacing: element `k` is `exp(j pi k cos(theta))`.
pub fn steering_vector(theta_deg: f64, n_rx: usize) -> Result<Vec<C64>> {
    if !(0.0..=180.0).contains(&theta_deg) {
        return Err(Error::Domain(format!("theta {theta_deg} outside [0, 180] degrees")));
    }
    let step = PI * theta_deg.to_radians().cos();
    Ok(phase_ramp(step, n_rx))
}

/// Subcarrier phase vector: element `k` is `exp(-j 2 pi rho k delta_f / c)`.
pub fn subcarrier_vector(rho: f64, n_sub: usize, delta_f: f64) -> Result<Vec<C64>> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::Domain(format!("negative range {rho}")));
    }
    let step = -2.0 * PI * rho * delta_f / SPEED_OF_LIGHT;
    Ok(phase_ramp(step, n_sub))
}

pub(crate) fn phase_ramp(step: f64, n: usize) -> Vec<C64> {
    (0..n).map(|k| C64::from_polar(1.0, step * k as f64)).collect()
}

/// CSI of one UE: `n_sub` rows (subcarriers) by `n_rx` columns (antennas).
///
/// `entries` are what the receiver works with; after noise injection they are
/// at unit signal power. `scale` converts them back to physical amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiMatrix {
    pub ue_id: usize,
    pub entries: CMat,
    pub scale: f64,
}

impl CsiMatrix {
    pub fn new(ue_id: usize, entries: CMat) -> Self {
        Self {
            ue_id,
            entries,
            scale: 1.0,
        }
    }

    pub fn n_sub(&self) -> usize {
        self.entries.rows()
    }

    pub fn n_rx(&self) -> usize {
        self.entries.cols()
    }

    /// Snapshots over the antenna axis (one per subcarrier).
    pub fn antenna_snapshots(&self) -> impl Iterator<Item = &[C64]> {
        (0..self.n_sub()).map(move |s| self.entries.row(s))
    }

    /// Snapshots over the subcarrier axis (one per antenna).
    pub fn subcarrier_snapshots(&self) -> Vec<Vec<C64>> {
        (0..self.n_rx()).map(|a| self.entries.column(a)).collect()
    }

    /// Entries at physical scale, flattened row-major.
    pub fn physical_entries(&self) -> Vec<C64> {
        self.entries.as_slice().iter().map(|&z| z * self.scale).collect()
    }

    pub fn mean_power(&self) -> f64 {
        let n = self.entries.as_slice().len() as f64;
        self.entries.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / n
    }

    pub fn conj(&self) -> CsiMatrix {
        CsiMatrix {
            ue_id: self.ue_id,
            entries: self.entries.conj(),
            scale: self.scale,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.scale.is_finite()
            && self
                .entries
                .as_slice()
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Amplitude factor of the flat fading channel, built from two standard normals.
///
/// LOS ignores the normals. Rayleigh has unit mean square; Rician splits unit
/// power into `K/(K+1)` specular and `1/(K+1)` diffuse.
pub fn fading_gain(model: ChannelModel, rician_k: f64, n1: f64, n2: f64) -> f64 {
    let diffuse = C64::new(n1, n2) / std::f64::consts::SQRT_2;
    match model {
        ChannelModel::Los => 1.0,
        ChannelModel::Qnlos => diffuse.norm(),
        ChannelModel::Qlos => {
            let los = (rician_k / (rician_k + 1.0)).sqrt();
            let nlos = (1.0 / (rician_k + 1.0)).sqrt();
            (C64::new(los, 0.0) + diffuse * nlos).norm()
        }
    }
}

/// Noiseless single-ray CSI for a UE at `(theta, rho)` with fading amplitude
/// `gain` and common phase `phase`.
pub fn noiseless_csi(
    ue_id: usize,
    theta_deg: f64,
    rho: f64,
    params: &ChannelParams,
    gain: f64,
    phase: f64,
) -> Result<CsiMatrix> {
    params.validate()?;
    let a = steering_vector(theta_deg, params.n_rx)?;
    let b = subcarrier_vector(rho, params.n_sub, params.subcarrier_spacing())?;
    let amplitude = gain * rho.powf(-params.path_loss_exp);
    let common = C64::from_polar(
        amplitude,
        -(2.0 * PI * rho / params.wavelength() + phase),
    );
    let entries = CMat::from_fn(params.n_sub, params.n_rx, |s, n| common * b[s] * a[n]);
    Ok(CsiMatrix::new(ue_id, entries))
}

/// Full CSI for one UE of `scene`: geometry, fading, common phase and AWGN.
///
/// All randomness comes from the UE's channel substream, drawn in the same
/// order for every model, so the three models see the same phase and noise.
pub fn generate_csi(scene: &Scene, ue: usize, params: &ChannelParams) -> Result<CsiMatrix> {
    params.validate()?;
    if ue >= scene.n_ue() {
        return Err(Error::Domain(format!("UE index {ue} out of range")));
    }
    let polar = scene.true_polar(ue);
    if polar.rho <= 0.0 {
        return Err(Error::DegenerateInput(format!("UE {ue} coincides with the antenna")));
    }
    let mut rng = substream(params.rng_seed, ue, Purpose::Channel);
    let phase = rng.random::<f64>() * 2.0 * PI;
    let n1: f64 = rng.sample(StandardNormal);
    let n2: f64 = rng.sample(StandardNormal);
    let gain = fading_gain(params.model, params.rician_k, n1, n2);

    let h0 = noiseless_csi(ue, polar.theta_deg, polar.rho, params, gain, phase)?;
    // Mean received power: path loss only, since E[g^2] = 1.
    let reference = polar.rho.powf(-2.0 * params.path_loss_exp);
    add_awgn_with_reference(&h0, params.snr_db, reference, &mut rng)
}

/// Scales `h0` to unit average per-entry power and adds circular Gaussian
/// noise of per-entry power `10^(-snr_db/10)`. `None` adds no noise.
pub fn add_awgn<R: Rng + ?Sized>(h0: &CsiMatrix, snr_db: Option<f64>, rng: &mut R) -> Result<CsiMatrix> {
    let power = h0.mean_power();
    add_awgn_with_reference(h0, snr_db, power, rng)
}

/// As [`add_awgn`], but normalizes by a caller-supplied reference power
/// instead of the matrix's own average power.
pub fn add_awgn_with_reference<R: Rng + ?Sized>(
    h0: &CsiMatrix,
    snr_db: Option<f64>,
    reference_power: f64,
    rng: &mut R,
) -> Result<CsiMatrix> {
    if !h0.is_finite() {
        return Err(Error::DegenerateInput("CSI contains non-finite entries".into()));
    }
    if !(reference_power.is_finite() && reference_power > 0.0) {
        return Err(Error::DegenerateInput(
            "cannot normalize CSI with zero signal power".into(),
        ));
    }
    let norm = reference_power.sqrt();
    let mut entries = h0.entries.scale(1.0 / norm);
    if let Some(snr) = snr_db {
        if snr < f64::INFINITY {
            let sigma = (10f64.powf(-snr / 10.0) / 2.0).sqrt();
            for z in entries.as_mut_slice() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *z += C64::new(re, im) * sigma;
            }
        }
    }
    Ok(CsiMatrix {
        ue_id: h0.ue_id,
        entries,
        scale: h0.scale * norm,
    })
}

const DUMP_MAGIC: &[u8; 4] = b"CSIK";

/// Writes physical-scale CSI: `CSIK`, u32 n_sub, u32 n_rx, u32 reserved, then
/// little-endian f64 `(re, im)` pairs in row-major order.
pub fn write_csi_dump<W: Write>(mut w: W, csi: &CsiMatrix) -> Result<()> {
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidConfig(format!("dimension {v} exceeds u32")))
    };
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&to_u32(csi.n_sub())?.to_le_bytes())?;
    w.write_all(&to_u32(csi.n_rx())?.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for z in csi.physical_entries() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_csi_dump<R: Read>(mut r: R, ue_id: usize) -> Result<CsiMatrix> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != DUMP_MAGIC {
        return Err(Error::Parse("CSI dump: bad magic".into()));
    }
    let field = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (n_sub, n_rx) = (field(4), field(8));
    let mut data = Vec::with_capacity(n_sub * n_rx);
    let mut buf = [0u8; 16];
    for _ in 0..n_sub * n_rx {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        data.push(C64::new(re, im));
    }
    Ok(CsiMatrix::new(ue_id, CMat::from_vec(n_sub, n_rx, data)))
}
