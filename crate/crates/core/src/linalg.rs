//! Thin wrappers over nalgebra's complex SVD and Hermitian eigensolver.
//!
//! Both return their spectra sorted in descending order, which nalgebra does
//! not guarantee on its own.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const MAX_ITERATIONS: usize = 10_000;

pub fn ensure_finite(m: &CMatrix, what: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        let (r, c) = (pos % m.nrows(), pos / m.nrows());
        return Err(Error::invalid(format!(
            "{what} has a non-finite entry at ({r}, {c})"
        )));
    }
    Ok(())
}

/// Thin SVD: `m = U · diag(s) · Vᴴ` with `s` descending.
pub struct ThinSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn thin_svd(m: &CMatrix) -> Result<ThinSvd> {
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, MAX_ITERATIONS)
        .ok_or_else(|| Error::Numerical("SVD iteration did not converge".into()))?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᴴ");
    let order = descending_order(svd.singular_values.as_slice());

    let k = order.len();
    let mut uu = CMatrix::zeros(m.nrows(), k);
    let mut vv = CMatrix::zeros(m.ncols(), k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        s.push(svd.singular_values[src]);
        uu.set_column(dst, &u.column(src));
        // row `src` of Vᴴ is the conjugate of column `src` of V
        let vcol = v_t.row(src).transpose().map(|z| z.conj());
        vv.set_column(dst, &vcol);
    }
    Ok(ThinSvd { u: uu, s, v: vv })
}

/// Singular values only, descending. Skips the singular-vector accumulation.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, MAX_ITERATIONS)
        .ok_or_else(|| Error::Numerical("SVD iteration did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
/// Columns of the returned matrix are the matching unit eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "Hermitian eigensolver needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_ITERATIONS)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let order = descending_order(eig.eigenvalues.as_slice());
    let mut vecs = CMatrix::zeros(m.nrows(), m.ncols());
    let mut vals = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[src]);
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((vals, vecs))
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps equal values in solver order
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// `Σ |z|²` over a column.
pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
