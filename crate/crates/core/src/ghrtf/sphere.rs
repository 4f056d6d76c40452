//! Rigid-sphere scattering surrogate.
//!
//! Total surface pressure on a rigid sphere of radius `a` for a unit plane
//! wave arriving from direction `ŝ`, time dependence `e^{−iωt}`:
//!
//! ```text
//! p(Θ) = Σₙ (2n+1) (−i)ⁿ Pₙ(cos Θ) · i / ((ka)² h′ₙ(ka))
//! ```
//!
//! with `Θ` the angle between the surface point and `ŝ` and `hₙ = jₙ + i yₙ`
//! the outgoing spherical Hankel function. The wave arriving from `ŝ`
//! propagates along `−ŝ`, hence `(−i)ⁿ` rather than `iⁿ`: the side facing the
//! source is the bright side.
//!
//! Only the coefficients depend on `ka`, so [`SphereSeries`] computes them
//! once per frequency and evaluates any number of angles.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::Direction;
use crate::error::{Error, Result};

pub const DEFAULT_HEAD_RADIUS: f64 = 0.0875;
pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// Orders beyond `⌈ka⌉ + 12` are added until a coefficient drops below this.
const COEFFICIENT_FLOOR: f64 = 1e-16;
const EXTRA_ORDER_CAP: usize = 40;

/// Modal coefficients `cₙ = (2n+1)(−i)ⁿ · i / (x² h′ₙ(x))` for one `x = ka`.
#[derive(Debug, Clone)]
pub struct SphereSeries {
    ka: f64,
    coefficients: Vec<Complex64>,
}

impl SphereSeries {
    /// Baseline truncation `⌈ka⌉ + 12`, extended until `|cₙ| < 1e-16`.
    pub fn new(ka: f64) -> Result<Self> {
        check_ka(ka)?;
        let baseline = baseline_order(ka);
        let cap = 2 * ka.ceil() as usize + EXTRA_ORDER_CAP;
        let coeffs = modal_coefficients(ka, cap.max(baseline));
        let mut n = baseline;
        while n < coeffs.len() && coeffs[n].norm() >= COEFFICIENT_FLOOR {
            n += 1;
        }
        if n >= coeffs.len() {
            return Err(Error::Numerical(format!(
                "sphere series at ka = {ka} still has |c_{cap}| = {:e}",
                coeffs[cap].norm()
            )));
        }
        let mut coefficients = coeffs;
        coefficients.truncate(n + 1);
        Ok(SphereSeries { ka, coefficients })
    }

    /// Fixed truncation at order `max_order` (inclusive), no convergence check.
    pub fn with_order(ka: f64, max_order: usize) -> Result<Self> {
        check_ka(ka)?;
        Ok(SphereSeries {
            ka,
            coefficients: modal_coefficients(ka, max_order),
        })
    }

    pub fn ka(&self) -> f64 {
        self.ka
    }

    /// Highest order included.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn evaluate(&self, cos_theta: f64) -> Complex64 {
        if self.ka == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        // Legendre recurrence: (n+1) P_{n+1} = (2n+1) x Pₙ − n P_{n−1}
        let x = cos_theta;
        let mut p_prev = 1.0;
        let mut p = x;
        let mut sum = self.coefficients[0];
        for (n, c) in self.coefficients.iter().enumerate().skip(1) {
            sum += c * p;
            let next = ((2 * n + 1) as f64 * x * p - n as f64 * p_prev) / (n + 1) as f64;
            p_prev = p;
            p = next;
        }
        sum
    }
}

fn check_ka(ka: f64) -> Result<()> {
    if !ka.is_finite() || ka < 0.0 {
        return Err(Error::invalid(format!("ka = {ka} must be finite and ≥ 0")));
    }
    Ok(())
}

pub fn baseline_order(ka: f64) -> usize {
    ka.ceil() as usize + 12
}

fn modal_coefficients(x: f64, max_order: usize) -> Vec<Complex64> {
    if x == 0.0 {
        let mut c = vec![Complex64::new(0.0, 0.0); max_order + 1];
        c[0] = Complex64::new(1.0, 0.0);
        return c;
    }
    let i = Complex64::new(0.0, 1.0);
    let hankel = spherical_hankel(x, max_order + 1);
    let mut minus_i_pow = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(max_order + 1);
    let mut overflowed = false;
    for n in 0..=max_order {
        // h′₀ = −h₁, h′ₙ = h_{n−1} − (n+1)/x · hₙ
        let dh = if n == 0 {
            -hankel[1]
        } else {
            hankel[n - 1] - hankel[n] * ((n + 1) as f64 / x)
        };
        let c = if n == 0 {
            // x²h′₀ = −x²h₁ in closed form, finite even where 1/x² overflows
            let (s, co) = x.sin_cos();
            let x2dh = Complex64::new(x * co - s, co + x * s);
            i / x2dh
        } else if overflowed || !(dh.re.is_finite() && dh.im.is_finite()) {
            // |h′ₙ| beyond f64 range: the true coefficient is far below any floor
            overflowed = true;
            Complex64::new(0.0, 0.0)
        } else {
            minus_i_pow * i * (2 * n + 1) as f64 / (dh * x * x)
        };
        out.push(c);
        minus_i_pow *= -i;
    }
    out
}

/// `hₙ(x) = jₙ(x) + i yₙ(x)` for `n = 0..=max_order` by upward recurrence.
/// The recurrence is dominated by `yₙ`, for which it is stable.
fn spherical_hankel(x: f64, max_order: usize) -> Vec<Complex64> {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let y0 = -c / x;
    let j1 = s / (x * x) - c / x;
    let y1 = -c / (x * x) - s / x;
    let mut h = Vec::with_capacity(max_order + 1);
    h.push(Complex64::new(j0, y0));
    if max_order >= 1 {
        h.push(Complex64::new(j1, y1));
    }
    for n in 1..max_order {
        let next = h[n] * ((2 * n + 1) as f64 / x) - h[n - 1];
        h.push(next);
    }
    h
}

pub fn wavenumber_radius(head_radius: f64, frequency: f64, speed_of_sound: f64) -> f64 {
    2.0 * PI * frequency * head_radius / speed_of_sound
}

fn check_physical(head_radius: f64, frequency: f64, speed_of_sound: f64) -> Result<()> {
    if !(head_radius.is_finite() && head_radius > 0.0) {
        return Err(Error::invalid(format!("head radius {head_radius} must be > 0")));
    }
    if !(frequency.is_finite() && frequency >= 0.0) {
        return Err(Error::invalid(format!("frequency {frequency} must be ≥ 0")));
    }
    if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
        return Err(Error::invalid(format!("speed of sound {speed_of_sound} must be > 0")));
    }
    Ok(())
}

/// GHRTF of a rigid sphere: surface pressure at `mic` for a unit plane wave
/// from `source`, normalized to the free-field pressure at the sphere centre.
/// Exactly `1 + 0i` at 0 Hz.
pub fn sphere_ghrtf(
    head_radius: f64,
    frequency: f64,
    mic: &Direction,
    source: &Direction,
    speed_of_sound: f64,
) -> Result<Complex64> {
    check_physical(head_radius, frequency, speed_of_sound)?;
    if frequency == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let ka = wavenumber_radius(head_radius, frequency, speed_of_sound);
    Ok(SphereSeries::new(ka)?.evaluate(mic.cos_angle_to(source)))
}
