//! Singular-value spectra and the effective rank.
//!
//! For a matrix with `q` non-negligible singular values `σ₁ ≥ … ≥ σ_q`,
//! the normalized values `σ̄ᵢ = σᵢ / Σσⱼ` form a probability vector. Its
//! Shannon entropy (natural log) is `H = −Σ σ̄ᵢ ln σ̄ᵢ` and the effective
//! rank is `R = exp(H)`, which always lies in `[1, q]`.

use crate::error::{Error, Result};
use crate::ghrtf::{stack_ghrtf, GhrtfDatabase};
use crate::linalg::{self, CMatrix};
use crate::par;

/// Singular values below `RANK_TOLERANCE · σ₁` are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SvdSpectrum {
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    /// `rows × min(rows, cols)`, orthonormal columns.
    pub left_vectors: CMatrix,
    /// `cols × min(rows, cols)`, orthonormal columns.
    pub right_vectors: CMatrix,
    pub rank_q: usize,
}

impl SvdSpectrum {
    /// `U · diag(σ) · Vᴴ`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.left_vectors.clone();
        for (mut col, &s) in us.column_iter_mut().zip(&self.singular_values) {
            col *= num_complex::Complex64::new(s, 0.0);
        }
        us * self.right_vectors.adjoint()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRankReport {
    /// Dimensions ("dim").
    pub effective_rank: f64,
    /// Nats.
    pub entropy: f64,
    pub normalized_singular_values: Vec<f64>,
    pub rank_q: usize,
}

fn check_input(matrix: &CMatrix) -> Result<()> {
    if matrix.is_empty() {
        return Err(Error::invalid("matrix is empty"));
    }
    linalg::ensure_finite(matrix, "matrix")
}

pub fn svd(matrix: &CMatrix) -> Result<SvdSpectrum> {
    check_input(matrix)?;
    let t = linalg::thin_svd(matrix)?;
    let rank_q = numerical_rank(&t.s);
    Ok(SvdSpectrum {
        singular_values: t.s,
        left_vectors: t.u,
        right_vectors: t.v,
        rank_q,
    })
}

/// Count of `σᵢ > RANK_TOLERANCE · σ₁` for a descending slice.
pub fn numerical_rank(singular_values: &[f64]) -> usize {
    match singular_values.first() {
        Some(&s1) if s1 > 0.0 => singular_values
            .iter()
            .take_while(|&&s| s > RANK_TOLERANCE * s1)
            .count(),
        _ => 0,
    }
}

pub fn effective_rank(matrix: &CMatrix) -> Result<EffectiveRankReport> {
    check_input(matrix)?;
    effective_rank_from_singular_values(&linalg::singular_values(matrix)?)
}

/// Effective rank of a spectrum given directly (any order).
pub fn effective_rank_from_singular_values(singular_values: &[f64]) -> Result<EffectiveRankReport> {
    if singular_values.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid("singular values must be finite and non-negative"));
    }
    let mut s = singular_values.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let q = numerical_rank(&s);
    if q == 0 {
        return Err(Error::Degenerate("all singular values are zero".into()));
    }
    let total: f64 = s[..q].iter().sum();
    let normalized: Vec<f64> = s[..q].iter().map(|&x| x / total).collect();
    let entropy: f64 = normalized
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum::<f64>()
        .clamp(0.0, (q as f64).ln());
    // exp(ln q) can land one ulp above q
    let effective_rank = entropy.exp().clamp(1.0, q as f64);
    Ok(EffectiveRankReport {
        effective_rank,
        entropy,
        normalized_singular_values: normalized,
        rank_q: q,
    })
}

/// Diagonal row/column weights, `W₁ · H · W₂`. `None` means identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Weights {
    pub rows: Option<Vec<f64>>,
    pub columns: Option<Vec<f64>>,
}

impl Weights {
    pub fn apply(&self, matrix: &CMatrix) -> Result<CMatrix> {
        let mut out = matrix.clone();
        if let Some(w) = &self.rows {
            if w.len() != matrix.nrows() {
                return Err(Error::invalid(format!(
                    "{} row weights for {} rows",
                    w.len(),
                    matrix.nrows()
                )));
            }
            for (mut row, &x) in out.row_iter_mut().zip(w) {
                row *= num_complex::Complex64::new(x, 0.0);
            }
        }
        if let Some(w) = &self.columns {
            if w.len() != matrix.ncols() {
                return Err(Error::invalid(format!(
                    "{} column weights for {} columns",
                    w.len(),
                    matrix.ncols()
                )));
            }
            for (mut col, &x) in out.column_iter_mut().zip(w) {
                col *= num_complex::Complex64::new(x, 0.0);
            }
        }
        Ok(out)
    }
}

pub fn effective_rank_weighted(matrix: &CMatrix, weights: &Weights) -> Result<EffectiveRankReport> {
    effective_rank(&weights.apply(matrix)?)
}

/// Effective rank of every single-candidate `K′ × D′` GHRTF matrix.
pub fn effective_rank_map(
    db: &GhrtfDatabase,
    frequency_indices: &[usize],
    direction_indices: &[usize],
) -> Result<Vec<f64>> {
    if direction_indices.len() < 2 {
        return Err(Error::invalid("a rank map needs at least two directions"));
    }
    par::try_map_range(db.num_candidates(), |m| {
        let h = stack_ghrtf(db, &[m], frequency_indices, direction_indices)?;
        Ok(effective_rank(&h)?.effective_rank)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_fn(v.len(), v.len(), |i, j| {
            if i == j {
                Complex64::new(v[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn identity_spectrum() {
        let s = svd(&diag(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(s.rank_q, 3);
        for x in &s.singular_values {
            assert!((x - 1.0).abs() < 1e-15);
        }
        let r = effective_rank(&diag(&[1.0, 1.0, 1.0])).unwrap();
        assert!((r.effective_rank - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn diagonal_with_zero() {
        let s = svd(&diag(&[3.0, 2.0, 0.0])).unwrap();
        assert_eq!(s.rank_q, 2);
        assert!((s.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((s.singular_values[1] - 2.0).abs() < 1e-14);
        assert!(s.singular_values[2].abs() < 1e-14);
    }

    #[test]
    fn closed_form_two_one_one() {
        // σ̄ = (1/2, 1/4, 1/4) → H = (3/2) ln 2, R = 2^{3/2}
        let r = effective_rank_from_singular_values(&[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.normalized_singular_values, vec![0.5, 0.25, 0.25]);
        assert!((r.entropy - 1.5 * 2f64.ln()).abs() < 1e-15);
        assert!((r.effective_rank - 2f64.powf(1.5)).abs() < 1e-9);
    }

    #[test]
    fn dominant_value_gives_near_unity() {
        let r = effective_rank_from_singular_values(&[1.0, 1e-12, 1e-12]).unwrap();
        assert!((r.effective_rank - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let err = effective_rank(&CMatrix::zeros(3, 4)).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        assert!(matches!(effective_rank(&CMatrix::zeros(0, 0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn weights_scale_rows_and_columns() {
        let m = CMatrix::from_element(2, 3, Complex64::new(1.0, 1.0));
        let w = Weights {
            rows: Some(vec![2.0, 1.0]),
            columns: Some(vec![1.0, 0.0, 3.0]),
        };
        let out = w.apply(&m).unwrap();
        assert_eq!(out[(0, 2)], Complex64::new(6.0, 6.0));
        assert_eq!(out[(1, 1)], Complex64::new(0.0, 0.0));
        assert!(Weights { rows: Some(vec![1.0]), columns: None }.apply(&m).is_err());
        let identity = effective_rank_weighted(&m, &Weights::default()).unwrap();
        assert_eq!(identity, effective_rank(&m).unwrap());
    }

    #[test]
    fn report_invariants() {
        let r = effective_rank_from_singular_values(&[5.0, 0.3, 2.0, 0.0, 1e-3]).unwrap();
        assert_eq!(r.rank_q, 4);
        let total: f64 = r.normalized_singular_values.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(r.effective_rank >= 1.0 && r.effective_rank <= 4.0);
        assert!((r.effective_rank - r.entropy.exp()).abs() <= 1e-12 * r.effective_rank);
    }
}
