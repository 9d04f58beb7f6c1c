//! Chart assembly: per-UE polar estimates mapped into the BS ground frame.

use crate::error::{Error, Result};
use crate::scene::Scene;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One UE's angle and range estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub ue_id: usize,
    pub theta_deg: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub ue_id: usize,
    pub x: f64,
    pub y: f64,
}

/// Maps an angle/range pair to chart coordinates.
///
/// With `metric` set, `rho` is a 3-D slant range in meters and the BS height
/// is removed: `x = rho cos(theta)` is the along-array offset and the
/// remaining ground component is `sqrt(rho^2 sin^2(theta) - h^2)`. Ranges at
/// or below the antenna height collapse to the origin. Without `metric`,
/// `rho` is only proportional to distance and is used as a plain radius.
pub fn polar_to_chart(theta_deg: f64, rho: f64, bs_height: f64, metric: bool) -> [f64; 2] {
    let (sin, cos) = theta_deg.to_radians().sin_cos();
    if !metric {
        return [rho * cos, rho * sin];
    }
    if rho <= bs_height {
        return [0.0, 0.0];
    }
    let lateral = rho * sin;
    let y = (lateral * lateral - bs_height * bs_height).max(0.0).sqrt();
    [rho * cos, y]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub points: Vec<ChartPoint>,
    pub truth: Vec<[f64; 2]>,
    pub vip: Vec<bool>,
}

impl Chart {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn estimated_positions(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.x, p.y]).collect()
    }

    /// `ue_id,true_x,true_y,est_x,est_y,is_vip` with six fractional digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ue_id,true_x,true_y,est_x,est_y,is_vip")?;
        for ((p, t), vip) in self.points.iter().zip(&self.truth).zip(&self.vip) {
            writeln!(
                w,
                "{},{:.6},{:.6},{:.6},{:.6},{}",
                p.ue_id,
                t[0],
                t[1],
                p.x,
                p.y,
                u8::from(*vip)
            )?;
        }
        Ok(())
    }
}

/// Places every UE of `scene` on the chart, in scene order.
pub fn build_chart(estimates: &[Estimate], scene: &Scene, metric_rho: bool) -> Result<Chart> {
    let n = scene.n_ue();
    let mut slot: Vec<Option<&Estimate>> = vec![None; n];
    for e in estimates {
        if e.ue_id >= n {
            return Err(Error::Assembly(format!("estimate for unknown UE {}", e.ue_id)));
        }
        if slot[e.ue_id].replace(e).is_some() {
            return Err(Error::Assembly(format!("duplicate estimate for UE {}", e.ue_id)));
        }
    }
    let h = scene.bs_height();
    let mut points = Vec::with_capacity(n);
    for (ue, e) in slot.into_iter().enumerate() {
        let e = e.ok_or_else(|| Error::Assembly(format!("no estimate for UE {ue}")))?;
        if !(e.theta_deg.is_finite() && e.rho.is_finite()) {
            return Err(Error::Assembly(format!("non-finite estimate for UE {ue}")));
        }
        let [x, y] = polar_to_chart(e.theta_deg, e.rho, h, metric_rho);
        points.push(ChartPoint { ue_id: ue, x, y });
    }
    Ok(Chart {
        points,
        truth: (0..n).map(|i| scene.ground_position(i)).collect(),
        vip: (0..n).map(|i| scene.is_vip(i)).collect(),
    })
}

/// Estimates equal to the scene's ground-truth polar coordinates.
pub fn perfect_estimates(scene: &Scene) -> Vec<Estimate> {
    (0..scene.n_ue())
        .map(|i| {
            let p = scene.true_polar(i);
            Estimate {
                ue_id: i,
                theta_deg: p.theta_deg,
                rho: p.rho,
            }
        })
        .collect()
}
