//! Frequency grids, candidate positions and source-direction grids.

use std::f64::consts::{PI, TAU};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::Direction;
use crate::error::{Error, Result};

/// Strictly increasing, non-negative frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid {
    values: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("frequency grid is empty"));
        }
        for (i, &f) in values.iter().enumerate() {
            if !f.is_finite() || f < 0.0 {
                return Err(Error::invalid(format!("frequency #{i} = {f} is not a finite value ≥ 0")));
            }
            if i > 0 && f <= values[i - 1] {
                return Err(Error::invalid(format!(
                    "frequencies must be strictly increasing (#{i} = {f} after {})",
                    values[i - 1]
                )));
            }
        }
        Ok(FrequencyGrid { values })
    }

    /// Linear grid `start, start+step, …` up to and including `stop`.
    pub fn linear(start: f64, step: f64, stop: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start
        {
            return Err(Error::invalid(format!(
                "bad linear grid {start}:{step}:{stop}"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Self::new((0..n).map(|i| start + i as f64 * step).collect())
    }

    /// Parses `start:step:stop`, or a comma-separated list.
    pub fn parse(spec: &str) -> Result<Self> {
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("not a number: {s:?} in frequency spec {spec:?}")))
        };
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            [a, b, c] => Self::linear(num(a)?, num(b)?, num(c)?),
            [list] => Self::new(list.split(',').map(num).collect::<Result<_>>()?),
            _ => Err(Error::invalid(format!("frequency spec {spec:?} is neither start:step:stop nor a list"))),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the exact frequency `f`, if present.
    pub fn index_of(&self, f: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == f)
    }
}

impl Default for FrequencyGrid {
    /// `{0, 100, …, 5000}` Hz, 51 entries.
    fn default() -> Self {
        FrequencyGrid {
            values: (0..=50).map(|i| i as f64 * 100.0).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(g: FrequencyGrid) -> Self {
        g.values
    }
}

/// A microphone position on the head surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub direction: Direction,
    pub radius: f64,
}

impl SurfacePoint {
    pub fn cartesian(&self) -> [f64; 3] {
        let u = self.direction.unit_vector();
        [u[0] * self.radius, u[1] * self.radius, u[2] * self.radius]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePositionSet {
    positions: Vec<SurfacePoint>,
    head_radius: f64,
}

impl CandidatePositionSet {
    pub fn new(positions: Vec<SurfacePoint>, head_radius: f64) -> Result<Self> {
        if !(head_radius.is_finite() && head_radius > 0.0) {
            return Err(Error::invalid(format!("head radius {head_radius} must be > 0")));
        }
        if positions.len() < 2 {
            return Err(Error::invalid("need at least two candidate positions"));
        }
        for (i, p) in positions.iter().enumerate() {
            if !(p.radius.is_finite() && p.radius > 0.0) {
                return Err(Error::invalid(format!("candidate {i} has radius {}", p.radius)));
            }
            for (j, q) in positions[..i].iter().enumerate() {
                if p.direction.angle_to(&q.direction) <= 1e-9 {
                    return Err(Error::invalid(format!("candidates {j} and {i} coincide")));
                }
            }
        }
        Ok(CandidatePositionSet {
            positions,
            head_radius,
        })
    }

    /// `m` points of a Fibonacci lattice on a sphere of radius `head_radius`.
    pub fn fibonacci(m: usize, head_radius: f64) -> Result<Self> {
        let positions = fibonacci_lattice(m)
            .into_iter()
            .map(|direction| SurfacePoint {
                direction,
                radius: head_radius,
            })
            .collect();
        Self::new(positions, head_radius)
    }

    pub fn positions(&self) -> &[SurfacePoint] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn head_radius(&self) -> f64 {
        self.head_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// 36 directions on the horizontal plane, 10° apart in azimuth.
    Horizontal36,
    /// 36 directions on the median (x–z) plane, 10° apart around the full circle.
    Median36,
    /// Fibonacci lattice with the given number of nearly uniform directions.
    SphereUniform(usize),
}

pub fn direction_grid(kind: GridKind) -> Result<Vec<Direction>> {
    match kind {
        GridKind::Horizontal36 => (0..36)
            .map(|j| Direction::new(j as f64 * 10f64.to_radians(), PI / 2.0))
            .collect(),
        GridKind::Median36 => (0..36)
            .map(|j| {
                // angle around the circle, starting at the front (+x) and rising over the top
                let psi = j as f64 * 10f64.to_radians();
                let (s, c) = psi.sin_cos();
                let elevation = s.clamp(-1.0, 1.0).acos();
                let azimuth = if c < -1e-12 { PI } else { 0.0 };
                Direction::new(azimuth, elevation)
            })
            .collect(),
        GridKind::SphereUniform(n) if n >= 4 => Ok(fibonacci_lattice(n)),
        GridKind::SphereUniform(n) => Err(Error::invalid(format!(
            "a uniform sphere grid needs at least 4 directions, got {n}"
        ))),
    }
}

/// Deterministic Fibonacci spherical lattice: `z = 1 − (2i+1)/n`, azimuth
/// advancing by the golden angle.
pub fn fibonacci_lattice(n: usize) -> Vec<Direction> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            Direction {
                azimuth: (i as f64 * golden).rem_euclid(TAU),
                elevation: z.clamp(-1.0, 1.0).acos(),
            }
        })
        .collect()
}

/// A named contiguous block of a database's direction list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

impl DirectionSet {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn indices(&self) -> Vec<usize> {
        self.range().collect()
    }
}

pub const HORIZONTAL_SET: &str = "horizontal";
pub const MEDIAN_SET: &str = "median";
pub const UNIFORM_SET: &str = "uniform";

/// The three-part source grid: 36 horizontal, 36 median, then `uniform`
/// nearly uniform directions (312 in total for `uniform = 240`).
pub fn default_direction_union(uniform: usize) -> Result<(Vec<Direction>, Vec<DirectionSet>)> {
    let mut dirs = direction_grid(GridKind::Horizontal36)?;
    dirs.extend(direction_grid(GridKind::Median36)?);
    dirs.extend(direction_grid(GridKind::SphereUniform(uniform))?);
    let sets = vec![
        DirectionSet { name: HORIZONTAL_SET.into(), start: 0, end: 36 },
        DirectionSet { name: MEDIAN_SET.into(), start: 36, end: 72 },
        DirectionSet { name: UNIFORM_SET.into(), start: 72, end: 72 + uniform },
    ];
    Ok((dirs, sets))
}
