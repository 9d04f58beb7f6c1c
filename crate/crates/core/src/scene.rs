//! Deployment geometry: base station, UE placement and the "VIP" glyph subset.
//!
//! The base station sits at the midpoint of the `y = 0` edge of the service
//! rectangle, `bs_height` meters above the UE plane. Its ULA axis is the +x
//! axis, so every UE has an angle of arrival in `[0°, 180°]`.

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub area_x: f64,
    pub area_y: f64,
    pub n_ue: usize,
    pub n_vip: usize,
    pub bs_height: f64,
    /// Half-width of the uniform jitter applied to glyph points, in meters.
    pub vip_jitter: f64,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            area_x: 1000.0,
            area_y: 500.0,
            n_ue: 2048,
            n_vip: 234,
            bs_height: 8.5,
            vip_jitter: 0.25,
            rng_seed: 1,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.area_x) || !positive(self.area_y) {
            return Err(Error::InvalidConfig(format!(
                "scene area must be positive, got {} x {}",
                self.area_x, self.area_y
            )));
        }
        if self.n_ue == 0 {
            return Err(Error::InvalidConfig("n_ue must be at least 1".into()));
        }
        if self.n_vip > self.n_ue {
            return Err(Error::InvalidConfig(format!(
                "n_vip ({}) exceeds n_ue ({})",
                self.n_vip, self.n_ue
            )));
        }
        if !self.bs_height.is_finite() || self.bs_height < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "bs_height must be finite and non-negative, got {}",
                self.bs_height
            )));
        }
        if !self.vip_jitter.is_finite() || self.vip_jitter < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "vip_jitter must be finite and non-negative, got {}",
                self.vip_jitter
            )));
        }
        Ok(())
    }
}

/// Angle of arrival (degrees, measured from the array axis) and 3-D range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar {
    pub theta_deg: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub bs: Position3,
    pub ues: Vec<Position3>,
    pub vip_indices: Vec<usize>,
    is_vip: Vec<bool>,
}

impl Scene {
    pub fn n_ue(&self) -> usize {
        self.ues.len()
    }

    pub fn bs_height(&self) -> f64 {
        self.bs.z
    }

    pub fn is_vip(&self, ue: usize) -> bool {
        self.is_vip[ue]
    }

    /// Ground-truth angle of arrival and range for one UE.
    ///
    /// Panics if `ue` is out of range.
    pub fn true_polar(&self, ue: usize) -> Polar {
        let p = &self.ues[ue];
        let (dx, dy, dz) = (p.x - self.bs.x, p.y - self.bs.y, p.z - self.bs.z);
        let rho = (dx * dx + dy * dy + dz * dz).sqrt();
        let cos_theta = if rho > 0.0 { (dx / rho).clamp(-1.0, 1.0) } else { 0.0 };
        Polar {
            theta_deg: cos_theta.acos().to_degrees(),
            rho,
        }
    }

    /// UE ground position in the BS frame (BS foot point at the origin, +x along the array).
    pub fn ground_position(&self, ue: usize) -> [f64; 2] {
        let p = &self.ues[ue];
        [p.x - self.bs.x, p.y - self.bs.y]
    }

    /// `ue_id,x,y,z,is_vip`, six fractional digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ue_id,x,y,z,is_vip")?;
        for (i, p) in self.ues.iter().enumerate() {
            writeln!(
                w,
                "{},{:.6},{:.6},{:.6},{}",
                i,
                p.x,
                p.y,
                p.z,
                u8::from(self.is_vip[i])
            )?;
        }
        Ok(())
    }
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let bs = Position3::new(cfg.area_x / 2.0, 0.0, cfg.bs_height);

    // Spread glyph UEs over the whole index range.
    let vip_indices: Vec<usize> = (0..cfg.n_vip).map(|k| k * cfg.n_ue / cfg.n_vip).collect();
    let mut is_vip = vec![false; cfg.n_ue];
    for &i in &vip_indices {
        is_vip[i] = true;
    }
    let glyph_points = glyph_samples(cfg);

    let mut ues = Vec::with_capacity(cfg.n_ue);
    let mut next_glyph = 0;
    for i in 0..cfg.n_ue {
        let mut rng = substream(cfg.rng_seed, i, Purpose::Placement);
        let (x, y) = if is_vip[i] {
            let (gx, gy) = glyph_points[next_glyph];
            next_glyph += 1;
            let j = cfg.vip_jitter;
            let (jx, jy) = if j > 0.0 {
                (rng.random_range(-j..=j), rng.random_range(-j..=j))
            } else {
                (0.0, 0.0)
            };
            (
                (gx + jx).clamp(0.0, cfg.area_x),
                (gy + jy).clamp(0.0, cfg.area_y),
            )
        } else {
            (
                rng.random::<f64>() * cfg.area_x,
                rng.random::<f64>() * cfg.area_y,
            )
        };
        ues.push(Position3::new(x, y, 0.0));
    }

    Ok(Scene {
        bs,
        ues,
        vip_indices,
        is_vip,
    })
}

type Stroke = &'static [(f64, f64)];

// Unit-box polylines (u to the right, v up) for each letter.
const GLYPH_V: &[Stroke] = &[&[(0.0, 1.0), (0.5, 0.0), (1.0, 1.0)]];
const GLYPH_I: &[Stroke] = &[
    &[(0.5, 0.0), (0.5, 1.0)],
    &[(0.2, 0.0), (0.8, 0.0)],
    &[(0.2, 1.0), (0.8, 1.0)],
];
const GLYPH_P: &[Stroke] = &[
    &[(0.0, 0.0), (0.0, 1.0)],
    &[
        (0.0, 1.0),
        (0.65, 1.0),
        (0.9, 0.9),
        (1.0, 0.75),
        (0.9, 0.6),
        (0.65, 0.5),
        (0.0, 0.5),
    ],
];

/// Letter polylines laid out in scene coordinates, centered in the rectangle.
fn glyph_segments(cfg: &SceneConfig) -> Vec<((f64, f64), (f64, f64))> {
    let height = (0.4 * cfg.area_y).min(0.9 * cfg.area_x / 2.4);
    let width = 0.6 * height;
    let gap = 0.3 * height;
    let x0 = cfg.area_x / 2.0 - (3.0 * width + 2.0 * gap) / 2.0;
    let y0 = cfg.area_y / 2.0 - height / 2.0;

    let mut segments = Vec::new();
    for (slot, glyph) in [GLYPH_V, GLYPH_I, GLYPH_P].iter().enumerate() {
        let left = x0 + slot as f64 * (width + gap);
        for stroke in glyph.iter() {
            let to_scene = |(u, v): (f64, f64)| (left + u * width, y0 + v * height);
            for pair in stroke.windows(2) {
                segments.push((to_scene(pair[0]), to_scene(pair[1])));
            }
        }
    }
    segments
}

/// `n_vip` points at equal arc-length spacing along all glyph strokes.
fn glyph_samples(cfg: &SceneConfig) -> Vec<(f64, f64)> {
    if cfg.n_vip == 0 {
        return Vec::new();
    }
    let segments = glyph_segments(cfg);
    let lengths: Vec<f64> = segments
        .iter()
        .map(|((ax, ay), (bx, by))| (bx - ax).hypot(by - ay))
        .collect();
    let total: f64 = lengths.iter().sum();
    let spacing = total / cfg.n_vip as f64;

    let mut out = Vec::with_capacity(cfg.n_vip);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 0..cfg.n_vip {
        let s = (k as f64 + 0.5) * spacing;
        while seg + 1 < segments.len() && s > seg_start + lengths[seg] {
            seg_start += lengths[seg];
            seg += 1;
        }
        let ((ax, ay), (bx, by)) = segments[seg];
        let t = ((s - seg_start) / lengths[seg]).clamp(0.0, 1.0);
        out.push((ax + t * (bx - ax), ay + t * (by - ay)));
    }
    out
}
