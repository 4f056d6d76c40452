use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Far-field direction. `elevation` is the polar angle from +z, so the
/// horizontal plane sits at `elevation = π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    /// Wraps the azimuth into `[0, 2π)`; rejects a polar angle outside `[0, π]`.
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !azimuth.is_finite() || !elevation.is_finite() {
            return Err(Error::invalid("direction angles must be finite"));
        }
        if !(0.0..=PI).contains(&elevation) {
            return Err(Error::invalid(format!(
                "elevation {elevation} rad outside [0, π]"
            )));
        }
        Ok(Direction {
            azimuth: wrap_azimuth(azimuth),
            elevation,
        })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    /// Direction of a non-zero cartesian vector.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid("direction vector must be finite and non-zero"));
        }
        let elevation = (v[2] / r).clamp(-1.0, 1.0).acos();
        let azimuth = if v[0] == 0.0 && v[1] == 0.0 {
            0.0
        } else {
            v[1].atan2(v[0])
        };
        Self::new(azimuth, elevation)
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (sp, cp) = self.elevation.sin_cos();
        let (st, ct) = self.azimuth.sin_cos();
        [sp * ct, sp * st, cp]
    }

    /// Cosine of the angle between the two directions, clamped to `[-1, 1]`.
    pub fn cos_angle_to(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0)
    }

    /// Great-circle angle in `[0, π]`. Uses `atan2(|a×b|, a·b)`, which stays
    /// accurate for nearly parallel and nearly antipodal pairs.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        sin.atan2(cos).clamp(0.0, PI)
    }
}

fn wrap_azimuth(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}
