//! Maximum-directivity beamforming and its sensitivity.
//!
//! With steering matrix `A` (L microphones × D directions) the diffuse-field
//! coherence is approximated as `C = (1/D)·A·Aᴴ` and the distortionless
//! maximum-directivity weights for look vector `b` are
//! `w = C⁻¹b / (bᴴC⁻¹b)`. Sensitivity is `T = ‖w‖²`, the reciprocal of the
//! white-noise gain, bounded below by `1/‖b‖²`.
//!
//! All inverses go through the SVD `A = UΣVᴴ`, so that
//! `T = Σ|uᵢᴴb|²/σᵢ⁴ / (Σ|uᵢᴴb|²/σᵢ²)²`.

use nalgebra::Cholesky;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ghrtf::{stack_ghrtf, validate_indices, Direction, GhrtfDatabase};
use crate::linalg::{self, CMatrix, CVector};
use crate::par;

/// Largest accepted condition number of `C + εI`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct BeamformerWeights {
    pub weights: CVector,
    pub look_index: usize,
    pub look_direction: Option<Direction>,
    pub frequency_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    /// `‖w‖²`.
    pub sensitivity: f64,
    /// Same quantity through `(AAᴴ)⁻¹` by Cholesky, as a cross-check.
    pub gram_form: f64,
    /// `−10·log₁₀ T`.
    pub wng_db: f64,
    /// `1/‖b‖²`.
    pub lower_bound: f64,
}

/// `C = (1/D)·A·Aᴴ`. Requires `D ≥ L`.
pub fn coherence_matrix(a: &CMatrix) -> Result<CMatrix> {
    check_steering(a)?;
    let d = a.ncols() as f64;
    Ok((a * a.adjoint()).map(|z| z / d))
}

fn check_steering(a: &CMatrix) -> Result<()> {
    if a.is_empty() {
        return Err(Error::invalid("steering matrix is empty"));
    }
    linalg::ensure_finite(a, "steering matrix")?;
    if a.ncols() < a.nrows() {
        return Err(Error::Precondition(format!(
            "{} directions for {} microphones: D ≥ L is required for a non-singular coherence matrix",
            a.ncols(),
            a.nrows()
        )));
    }
    Ok(())
}

/// SVD of a steering matrix with the checks every routine here needs.
struct SteeringSvd {
    u: CMatrix,
    s: Vec<f64>,
    directions: f64,
}

impl SteeringSvd {
    fn new(a: &CMatrix, regularization: f64) -> Result<Self> {
        check_steering(a)?;
        if !(regularization.is_finite() && regularization >= 0.0) {
            return Err(Error::invalid(format!("regularization {regularization} must be ≥ 0")));
        }
        let t = linalg::thin_svd(a)?;
        let d = a.ncols() as f64;
        let top = t.s[0] * t.s[0] / d + regularization;
        let bottom = t.s[t.s.len() - 1].powi(2) / d + regularization;
        let well_conditioned = top > 0.0 && bottom * MAX_CONDITION >= top;
        if !well_conditioned {
            return Err(Error::Singular(format!(
                "coherence matrix condition number {:.3e} exceeds {MAX_CONDITION:e}; place microphones \
                 at distinct positions, use D ≥ L directions, or add diagonal loading",
                top / bottom
            )));
        }
        Ok(SteeringSvd { u: t.u, s: t.s, directions: d })
    }

    /// `(|uᵢᴴb|²)ᵢ`.
    fn projections(&self, b: &CVector) -> CVector {
        self.u.adjoint() * b
    }

    fn sensitivity(&self, b: &CVector) -> f64 {
        let c = self.projections(b);
        let mut num = 0.0;
        let mut den = 0.0;
        for (ci, &si) in c.iter().zip(&self.s) {
            let p = ci.norm_sqr();
            let s2 = si * si;
            num += p / (s2 * s2);
            den += p / s2;
        }
        num / (den * den)
    }
}

fn look_vector(a: &CMatrix, look_index: usize) -> Result<CVector> {
    if look_index >= a.ncols() {
        return Err(Error::invalid(format!(
            "look index {look_index} out of range ({} directions)",
            a.ncols()
        )));
    }
    let b: CVector = a.column(look_index).into_owned();
    if linalg::norm_sqr(&b) == 0.0 {
        return Err(Error::Degenerate(format!("steering vector {look_index} is zero")));
    }
    Ok(b)
}

/// Maximum-directivity weights towards column `look_index` of `a`.
/// `regularization` adds `εI` to `C`; pass 0 for the plain beamformer.
pub fn md_weights(a: &CMatrix, look_index: usize, regularization: f64) -> Result<BeamformerWeights> {
    let svd = SteeringSvd::new(a, regularization)?;
    let b = look_vector(a, look_index)?;
    let c = svd.projections(&b);
    // C⁻¹ = U · diag(1/(σᵢ²/D + ε)) · Uᴴ
    let scaled = CVector::from_iterator(
        c.len(),
        c.iter()
            .zip(&svd.s)
            .map(|(ci, &si)| ci / (si * si / svd.directions + regularization)),
    );
    let c_inv_b = &svd.u * scaled;
    let denom = b.dotc(&c_inv_b).re;
    Ok(BeamformerWeights {
        weights: c_inv_b.map(|z| z / denom),
        look_index,
        look_direction: None,
        frequency_hz: None,
    })
}

/// `B(Ωⱼ) = wᴴ a(Ωⱼ)` for every column of `a`.
pub fn beampattern(weights: &BeamformerWeights, a: &CMatrix) -> Result<Vec<Complex64>> {
    if weights.weights.len() != a.nrows() {
        return Err(Error::invalid(format!(
            "{} weights for a {}-microphone steering matrix",
            weights.weights.len(),
            a.nrows()
        )));
    }
    Ok(a.column_iter().map(|col| weights.weights.dotc(&col)).collect())
}

/// Sensitivity of the maximum-directivity beamformer looking at column
/// `look_index`, as `‖w‖²` and through the Gram-matrix form.
pub fn sensitivity(a: &CMatrix, look_index: usize) -> Result<SensitivityReport> {
    let w = md_weights(a, look_index, 0.0)?;
    let t = linalg::norm_sqr(&w.weights);
    let b = look_vector(a, look_index)?;
    Ok(SensitivityReport {
        sensitivity: t,
        gram_form: sensitivity_gram_form(a, look_index)?,
        wng_db: -10.0 * t.log10(),
        lower_bound: 1.0 / linalg::norm_sqr(&b),
    })
}

/// `T = bᴴ(AAᴴ)⁻²b / (bᴴ(AAᴴ)⁻¹b)²` with the Gram matrix factored by Cholesky.
pub fn sensitivity_gram_form(a: &CMatrix, look_index: usize) -> Result<f64> {
    check_steering(a)?;
    let b = look_vector(a, look_index)?;
    let gram = a * a.adjoint();
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::Singular("A·Aᴴ is not positive definite".into()))?;
    let y = chol.solve(&b);
    // bᴴ G⁻² b = ‖G⁻¹ b‖² for Hermitian G
    let num = linalg::norm_sqr(&y);
    let den = b.dotc(&y).re;
    Ok(num / (den * den))
}

/// `T = Σ|uᵢᴴb|²/σᵢ⁴ / (Σ|uᵢᴴb|²/σᵢ²)²`.
pub fn sensitivity_svd_form(a: &CMatrix, look_index: usize) -> Result<f64> {
    let svd = SteeringSvd::new(a, 0.0)?;
    Ok(svd.sensitivity(&look_vector(a, look_index)?))
}

/// Mean sensitivity over `look_columns` (indices into `direction_indices`),
/// with the coherence matrix built from all of `direction_indices`.
pub fn average_sensitivity(
    db: &GhrtfDatabase,
    selection: &[usize],
    frequency_index: usize,
    direction_indices: &[usize],
    look_columns: &[usize],
) -> Result<f64> {
    let per_look = sensitivities(db, selection, frequency_index, direction_indices, look_columns)?;
    Ok(per_look.iter().sum::<f64>() / per_look.len() as f64)
}

/// Per-look sensitivities behind [`average_sensitivity`].
pub fn sensitivities(
    db: &GhrtfDatabase,
    selection: &[usize],
    frequency_index: usize,
    direction_indices: &[usize],
    look_columns: &[usize],
) -> Result<Vec<f64>> {
    validate_indices(&[frequency_index], db.num_frequencies(), "frequency")?;
    let f = db.frequencies().values()[frequency_index];
    if f == 0.0 {
        return Err(Error::Degenerate(
            "0 Hz steering matrices have rank one; beamforming is undefined there".into(),
        ));
    }
    validate_indices(look_columns, direction_indices.len(), "look column")?;
    let a = stack_ghrtf(db, selection, &[frequency_index], direction_indices)?;
    let svd = SteeringSvd::new(&a, 0.0)?;
    par::try_map_range(look_columns.len(), |i| {
        let b = look_vector(&a, look_columns[i])?;
        Ok(svd.sensitivity(&b))
    })
}

/// [`md_weights`] on a database slice, with direction and frequency recorded.
pub fn md_weights_for(
    db: &GhrtfDatabase,
    selection: &[usize],
    frequency_index: usize,
    direction_indices: &[usize],
    look_column: usize,
    regularization: f64,
) -> Result<BeamformerWeights> {
    let a = stack_ghrtf(db, selection, &[frequency_index], direction_indices)?;
    let mut w = md_weights(&a, look_column, regularization)?;
    w.look_direction = direction_indices
        .get(look_column)
        .map(|&j| db.directions()[j]);
    w.frequency_hz = Some(db.frequencies().values()[frequency_index]);
    Ok(w)
}
