//! Helpers shared by the integration tests: seeded random matrices and a
//! cyclic Jacobi eigensolver used as an independent reference.

#![allow(dead_code)]

use headarray::ghrtf::{
    build_sphere_database, fibonacci_lattice, CandidatePositionSet, FrequencyGrid, GhrtfDatabase,
    DEFAULT_HEAD_RADIUS,
};
use headarray::{CMatrix, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    gaussian(rng, n, n).qr().q()
}

/// Eigenvalues (descending) and eigenvectors of a Hermitian matrix by cyclic
/// Jacobi rotations. Slow and simple on purpose.
pub fn jacobi_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = a[(p, q)];
                let mag = b.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // J = diag(1, e^{-iφ}) on (p, q) followed by a real rotation
                let phase = b / mag;
                let theta = 0.5 * (2.0 * mag).atan2(a[(q, q)].re - a[(p, p)].re);
                let (s, c) = theta.sin_cos();
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                for r in 0..n {
                    let (x, y) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = x * jpp + y * jqp;
                    a[(r, q)] = x * jpq + y * jqq;
                    let (x, y) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = x * jpp + y * jqp;
                    v[(r, q)] = x * jpq + y * jqq;
                }
                for col in 0..n {
                    let (x, y) = (a[(p, col)], a[(q, col)]);
                    a[(p, col)] = jpp.conj() * x + jqp.conj() * y;
                    a[(q, col)] = jpq.conj() * x + jqq.conj() * y;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Singular values from the eigenvalues of the smaller Gram matrix.
pub fn oracle_singular_values(h: &CMatrix) -> Vec<f64> {
    let gram = if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    };
    jacobi_eigen(&gram).0.into_iter().map(|x| x.max(0.0).sqrt()).collect()
}

/// Effective rank computed from scratch: entropy of the normalized spectrum.
pub fn oracle_effective_rank(singular_values: &[f64]) -> f64 {
    let s1 = singular_values.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<f64> = singular_values.iter().copied().filter(|&s| s > 1e-12 * s1).collect();
    let total: f64 = kept.iter().sum();
    let h: f64 = kept.iter().map(|s| s / total).map(|p| -p * p.ln()).sum();
    h.exp()
}

/// Sphere database on Fibonacci candidates and a Fibonacci direction lattice.
pub fn toy_sphere(m: usize, frequencies: &str, directions: usize) -> GhrtfDatabase {
    build_sphere_database(
        DEFAULT_HEAD_RADIUS,
        CandidatePositionSet::fibonacci(m, DEFAULT_HEAD_RADIUS).unwrap(),
        FrequencyGrid::parse(frequencies).unwrap(),
        fibonacci_lattice(directions),
    )
    .unwrap()
}
