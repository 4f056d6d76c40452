//! MUSIC direction finding on a fixed direction grid.
//!
//! Covers snapshot simulation (`p = h(Ω)·s + n` with unit `s` and circular
//! complex Gaussian noise of power `σ = 1/SNR`), the sample covariance, the
//! grid-search estimator, the asymptotic variance expressions, and the
//! nested Monte-Carlo protocol (trials → directions → array realizations).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ghrtf::{stack_ghrtf, validate_indices, GhrtfDatabase};
use crate::linalg::{self, CMatrix, CVector};
use crate::par;

/// Angular-error STD of an uninformed estimator, `√((π²−4)/2)` rad ≈ 98.15°.
pub fn chance_std_radians() -> f64 {
    ((PI * PI - 4.0) / 2.0).sqrt()
}

pub fn chance_std_degrees() -> f64 {
    chance_std_radians().to_degrees()
}

/// Noise power `σ = 10^(−SNR_dB/10)`; `+∞` dB disables the noise.
pub fn noise_power(snr_db: f64) -> Result<f64> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("SNR {snr_db} dB is not usable")));
    }
    Ok(if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    })
}

#[derive(Debug, Clone)]
pub struct SnapshotSet {
    /// `L × N`, one snapshot per column.
    pub snapshots: CMatrix,
    pub frequency_hz: f64,
    pub true_direction_index: usize,
    /// `α/σ` with unit signal amplitude; infinite when noise is off.
    pub snr_linear: f64,
}

/// Draws `n` snapshots `h + noise` into the columns of an `L × n` matrix.
pub fn draw_snapshots<R: rand::Rng + ?Sized>(
    steering: &CVector,
    noise_power: f64,
    n: usize,
    rng: &mut R,
) -> CMatrix {
    let scale = (noise_power / 2.0).sqrt();
    let mut p = CMatrix::zeros(steering.len(), n);
    for t in 0..n {
        for l in 0..steering.len() {
            let mut z = steering[l];
            if scale > 0.0 {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                z += Complex64::new(re * scale, im * scale);
            }
            p[(l, t)] = z;
        }
    }
    p
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_snapshots(
    db: &GhrtfDatabase,
    selection: &[usize],
    frequency_index: usize,
    direction_index: usize,
    snr_db: f64,
    n: usize,
    rng_seed: u64,
) -> Result<SnapshotSet> {
    if n == 0 {
        return Err(Error::invalid("need at least one snapshot"));
    }
    let sigma = noise_power(snr_db)?;
    let h = steering_vector(db, selection, frequency_index, direction_index)?;
    if n < selection.len() + 1 {
        log::warn!(
            "{n} snapshots for {} microphones: the sample covariance is rank deficient",
            selection.len()
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(SnapshotSet {
        snapshots: draw_snapshots(&h, sigma, n, &mut rng),
        frequency_hz: db.frequencies().values()[frequency_index],
        true_direction_index: direction_index,
        snr_linear: if sigma == 0.0 { f64::INFINITY } else { 1.0 / sigma },
    })
}

fn steering_vector(
    db: &GhrtfDatabase,
    selection: &[usize],
    frequency_index: usize,
    direction_index: usize,
) -> Result<CVector> {
    validate_indices(&[frequency_index], db.num_frequencies(), "frequency")?;
    if db.frequencies().values()[frequency_index] == 0.0 {
        return Err(Error::Degenerate(
            "at 0 Hz every direction has the same steering vector".into(),
        ));
    }
    let a = stack_ghrtf(db, selection, &[frequency_index], &[direction_index])?;
    Ok(a.column(0).into_owned())
}

/// `(1/N) Σ p pᴴ` over the snapshot columns; no mean removal.
pub fn sample_covariance(snapshots: &CMatrix) -> Result<CMatrix> {
    if snapshots.ncols() == 0 || snapshots.nrows() == 0 {
        return Err(Error::invalid("no snapshots"));
    }
    let n = snapshots.ncols() as f64;
    Ok((snapshots * snapshots.adjoint()).map(|z| z / n))
}

#[derive(Debug, Clone)]
pub struct MusicEstimate {
    pub index: usize,
    pub pseudospectrum: Vec<f64>,
}

/// Grid-search MUSIC. The pseudospectrum is `aᴴa / ‖Eₙᴴa‖²`, with `Eₙ` the
/// eigenvectors of the `L − d` smallest eigenvalues of `cov`. Ties go to the
/// lowest grid index.
pub fn music_estimate(cov: &CMatrix, steering: &CMatrix, assumed_sources: usize) -> Result<MusicEstimate> {
    let l = cov.nrows();
    if !cov.is_square() || l == 0 {
        return Err(Error::invalid("covariance must be a non-empty square matrix"));
    }
    if steering.nrows() != l {
        return Err(Error::invalid(format!(
            "steering matrix has {} rows for a {l}×{l} covariance",
            steering.nrows()
        )));
    }
    if assumed_sources == 0 || assumed_sources >= l {
        return Err(Error::invalid(format!(
            "assumed source count {assumed_sources} must be in 1..{l}"
        )));
    }
    linalg::ensure_finite(cov, "covariance")?;
    let (_, vecs) = linalg::hermitian_eigen(cov)?;
    let noise = vecs.columns(assumed_sources, l - assumed_sources);
    let projected = noise.adjoint() * steering;
    let pseudospectrum: Vec<f64> = (0..steering.ncols())
        .map(|j| {
            let power: f64 = steering.column(j).iter().map(|z| z.norm_sqr()).sum();
            let leak: f64 = projected.column(j).iter().map(|z| z.norm_sqr()).sum();
            power / leak
        })
        .collect();
    let mut index = 0;
    for (j, &p) in pseudospectrum.iter().enumerate() {
        if p > pseudospectrum[index] {
            index = j;
        }
    }
    Ok(MusicEstimate { index, pseudospectrum })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MusicVarianceReport {
    /// Asymptotic variance for each source, in the order of `source_indices`.
    pub per_source: Vec<f64>,
    /// `c·D/SNR + (c/SNR²)·Σ 1/σᵢ²`.
    pub total: f64,
}

/// Asymptotic MUSIC variance for uncorrelated equal-power sources in the
/// columns `source_indices` of `steering`.
///
/// Per source it evaluates `c·σ·Σᵢ λᵢ/(σ−λᵢ)² |aᴴuᵢ|²` with the covariance
/// eigenvalues `λᵢ = α·σᵢ² + σ` (unit noise power, `α = SNR`); the total is
/// the closed-form sum over sources.
pub fn theoretical_music_variance(
    steering: &CMatrix,
    source_indices: &[usize],
    snr_linear: f64,
    c_constant: f64,
) -> Result<MusicVarianceReport> {
    validate_indices(source_indices, steering.ncols(), "source")?;
    if source_indices.len() >= steering.nrows() {
        return Err(Error::invalid(format!(
            "{} sources need more than {} microphones",
            source_indices.len(),
            steering.nrows()
        )));
    }
    if !(snr_linear.is_finite() && snr_linear > 0.0) {
        return Err(Error::invalid(format!("SNR {snr_linear} must be finite and > 0")));
    }
    let d = source_indices.len();
    let sources = CMatrix::from_fn(steering.nrows(), d, |i, j| steering[(i, source_indices[j])]);
    linalg::ensure_finite(&sources, "steering matrix")?;
    let svd = linalg::thin_svd(&sources)?;
    if svd.s[d - 1] <= crate::rank::RANK_TOLERANCE * svd.s[0] {
        return Err(Error::Numerical(
            "source steering vectors are linearly dependent".into(),
        ));
    }

    let noise = 1.0;
    let alpha = snr_linear * noise;
    let eigenvalues: Vec<f64> = svd.s.iter().map(|s| alpha * s * s + noise).collect();
    let per_source = (0..d)
        .map(|j| {
            let a = sources.column(j);
            c_constant
                * noise
                * eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(i, &lam)| lam / (noise - lam).powi(2) * a.dotc(&svd.u.column(i)).norm_sqr())
                    .sum::<f64>()
        })
        .collect();
    let inv_sq: f64 = svd.s.iter().map(|s| 1.0 / (s * s)).sum();
    let total = c_constant * d as f64 / snr_linear + c_constant / (snr_linear * snr_linear) * inv_sq;
    Ok(MusicVarianceReport { per_source, total })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicProtocol {
    pub trials_per_direction: usize,
    pub snapshots: usize,
    /// Database direction indices used both as true directions and as the search grid.
    pub direction_indices: Vec<usize>,
    /// Upper bound on array realizations per cell; `None` uses all supplied.
    pub realizations: Option<usize>,
    pub assumed_sources: usize,
}

impl MusicProtocol {
    /// 30 trials of 30 snapshots on the given grid, single source.
    pub fn standard(direction_indices: Vec<usize>) -> Self {
        MusicProtocol {
            trials_per_direction: 30,
            snapshots: 30,
            direction_indices,
            realizations: None,
            assumed_sources: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicSweep {
    pub frequency_indices: Vec<usize>,
    pub sizes: Vec<usize>,
    pub snrs_db: Vec<f64>,
    pub array_types: Vec<String>,
}

impl MusicSweep {
    pub fn cell_count(&self) -> usize {
        self.frequency_indices.len() * self.sizes.len() * self.snrs_db.len() * self.array_types.len()
    }
}

/// Array realizations for one `(array type, L)` pair.
pub trait ArraySource: Sync {
    fn realizations(&self, array_type: &str, size: usize) -> Option<&[Vec<usize>]>;
}

impl ArraySource for std::collections::BTreeMap<(String, usize), Vec<Vec<usize>>> {
    fn realizations(&self, array_type: &str, size: usize) -> Option<&[Vec<usize>]> {
        self.get(&(array_type.to_owned(), size)).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicTrialStats {
    pub frequency_hz: f64,
    pub num_mics: usize,
    pub snr_db: f64,
    pub array_type: String,
    /// `√E[δ²]` in degrees, δ the great-circle error.
    pub std_degrees: f64,
    pub trial_count: usize,
    pub seed: u64,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed from a base seed and a path of labels.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |acc, &x| mix(acc ^ mix(x)))
}

pub fn label_hash(s: &str) -> u64 {
    // FNV-1a
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of one sweep cell, a function of the cell's labels only.
pub fn cell_seed(base: u64, frequency_hz: f64, size: usize, snr_db: f64, array_type: &str) -> u64 {
    derive_seed(
        base,
        &[frequency_hz.to_bits(), size as u64, snr_db.to_bits(), label_hash(array_type)],
    )
}

/// Mean squared great-circle error (rad²) of `trials` MUSIC runs for one
/// array, frequency and true direction.
#[allow(clippy::too_many_arguments)]
fn squared_error_sum(
    db: &GhrtfDatabase,
    steering: &CMatrix,
    true_column: usize,
    protocol: &MusicProtocol,
    sigma: f64,
    seed: u64,
) -> Result<f64> {
    let h: CVector = steering.column(true_column).into_owned();
    let truth = db.directions()[protocol.direction_indices[true_column]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..protocol.trials_per_direction {
        let p = draw_snapshots(&h, sigma, protocol.snapshots, &mut rng);
        let cov = sample_covariance(&p)?;
        let est = music_estimate(&cov, steering, protocol.assumed_sources)?;
        let guess = db.directions()[protocol.direction_indices[est.index]];
        sum += truth.angle_to(&guess).powi(2);
    }
    Ok(sum)
}

/// Runs every cell of `sweep`. Each cell's STD averages squared errors over
/// trials, then true directions, then array realizations.
pub fn run_music_monte_carlo(
    db: &GhrtfDatabase,
    arrays: &dyn ArraySource,
    sweep: &MusicSweep,
    protocol: &MusicProtocol,
    rng_seed: u64,
) -> Result<Vec<MusicTrialStats>> {
    if protocol.trials_per_direction == 0 || protocol.snapshots == 0 {
        return Err(Error::invalid("trials and snapshots must be ≥ 1"));
    }
    validate_indices(&protocol.direction_indices, db.num_directions(), "direction")?;
    validate_indices(&sweep.frequency_indices, db.num_frequencies(), "frequency")?;

    let mut out = Vec::with_capacity(sweep.cell_count());
    for &k in &sweep.frequency_indices {
        let f = db.frequencies().values()[k];
        for &size in &sweep.sizes {
            for &snr_db in &sweep.snrs_db {
                let sigma = noise_power(snr_db)?;
                for array_type in &sweep.array_types {
                    let seed = cell_seed(rng_seed, f, size, snr_db, array_type);
                    let std = music_cell(db, arrays, k, size, array_type, sigma, protocol, seed)?;
                    out.push(MusicTrialStats {
                        frequency_hz: f,
                        num_mics: size,
                        snr_db,
                        array_type: array_type.clone(),
                        std_degrees: std.0,
                        trial_count: std.1,
                        seed,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn music_cell(
    db: &GhrtfDatabase,
    arrays: &dyn ArraySource,
    frequency_index: usize,
    size: usize,
    array_type: &str,
    sigma: f64,
    protocol: &MusicProtocol,
    seed: u64,
) -> Result<(f64, usize)> {
    let realizations = arrays.realizations(array_type, size).ok_or_else(|| {
        Error::invalid(format!("no arrays supplied for type {array_type:?} with L = {size}"))
    })?;
    let used = protocol
        .realizations
        .map_or(realizations.len(), |r| r.min(realizations.len()));
    if used == 0 {
        return Err(Error::invalid(format!("no realizations for {array_type:?}, L = {size}")));
    }
    if db.frequencies().values()[frequency_index] == 0.0 {
        return Err(Error::Degenerate("MUSIC is undefined at 0 Hz".into()));
    }
    let steerings = realizations[..used]
        .iter()
        .map(|sel| {
            if sel.len() != size {
                return Err(Error::invalid(format!(
                    "{array_type:?} realization has {} microphones, expected {size}",
                    sel.len()
                )));
            }
            stack_ghrtf(db, sel, &[frequency_index], &protocol.direction_indices)
        })
        .collect::<Result<Vec<_>>>()?;

    let dirs = protocol.direction_indices.len();
    let sums = par::try_map_range(used * dirs, |unit| {
        let (r, j) = (unit / dirs, unit % dirs);
        let s = derive_seed(seed, &[r as u64, j as u64]);
        squared_error_sum(db, &steerings[r], j, protocol, sigma, s)
    })?;
    let trials = used * dirs * protocol.trials_per_direction;
    let mean_sq = sums.iter().sum::<f64>() / trials as f64;
    Ok((mean_sq.sqrt().to_degrees(), trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn chance_level_value() {
        assert!((chance_std_degrees() - 98.155).abs() < 0.001);
    }

    #[test]
    fn covariance_of_one_snapshot() {
        let p = CMatrix::from_column_slice(2, 1, &[c(1.0, 2.0), c(0.0, -1.0)]);
        let cov = sample_covariance(&p).unwrap();
        assert_eq!(cov[(0, 0)], c(5.0, 0.0));
        assert_eq!(cov[(0, 1)], c(1.0, 2.0) * c(0.0, 1.0));
        assert_eq!(cov[(1, 0)], cov[(0, 1)].conj());
        assert!(sample_covariance(&CMatrix::zeros(2, 0)).is_err());
    }

    #[test]
    fn noise_free_covariance_is_rank_one() {
        let h = CVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = draw_snapshots(&h, 0.0, 10, &mut rng);
        let cov = sample_covariance(&p).unwrap();
        assert!((cov - &h * h.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn noise_free_estimate_is_exact() {
        let steering = CMatrix::from_fn(3, 7, |l, j| {
            Complex64::from_polar(1.0 + 0.1 * l as f64, 0.7 * (l * j) as f64)
        });
        for j in 0..7 {
            let h: CVector = steering.column(j).into_owned();
            let cov = &h * h.adjoint();
            let est = music_estimate(&cov, &steering, 1).unwrap();
            assert_eq!(est.index, j);
        }
        let cov = CMatrix::identity(3, 3);
        assert!(music_estimate(&cov, &steering, 3).is_err());
        assert!(music_estimate(&cov, &steering, 0).is_err());
        assert!(music_estimate(&cov, &steering, 1).unwrap().index < 7);
    }

    #[test]
    fn scaling_covariance_keeps_argmax() {
        let steering = CMatrix::from_fn(4, 9, |l, j| Complex64::from_polar(1.0, 0.4 * (l * j) as f64));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h: CVector = steering.column(3).into_owned();
        let cov = sample_covariance(&draw_snapshots(&h, 0.5, 30, &mut rng)).unwrap();
        let a = music_estimate(&cov, &steering, 1).unwrap().index;
        let b = music_estimate(&cov.map(|z| z * 7.5), &steering, 1).unwrap().index;
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_noise_power() {
        let h = CVector::zeros(1);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sigma = 0.37;
        let p = draw_snapshots(&h, sigma, 100_000, &mut rng);
        let var = p.iter().map(|z| z.norm_sqr()).sum::<f64>() / 100_000.0;
        assert!((var - sigma).abs() < 0.02 * sigma, "{var}");
        let re_var = p.iter().map(|z| z.re * z.re).sum::<f64>() / 100_000.0;
        assert!((re_var - sigma / 2.0).abs() < 0.02 * sigma);
    }

    #[test]
    fn white_noise_covariance_converges() {
        let h = CVector::zeros(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 20_000;
        let sigma = 2.0;
        let cov = sample_covariance(&draw_snapshots(&h, sigma, n, &mut rng)).unwrap();
        let bound = 5.0 * sigma / (n as f64).sqrt();
        for i in 0..3 {
            assert!((cov[(i, i)].re - sigma).abs() < bound);
            for j in 0..3 {
                if i != j {
                    assert!(cov[(i, j)].norm() < bound);
                }
            }
        }
    }

    #[test]
    fn variance_limits() {
        let h = CMatrix::from_fn(4, 6, |l, j| Complex64::from_polar(1.0, 0.9 * (l * j) as f64 + 0.1 * l as f64));
        let lo = theoretical_music_variance(&h, &[1, 4], 1e2, 1.0).unwrap();
        let hi = theoretical_music_variance(&h, &[1, 4], 1e8, 1.0).unwrap();
        assert!(hi.total < lo.total);
        // 1/SNR term dominates at high SNR
        assert!((hi.total * 1e8 / 2.0 - 1.0).abs() < 1e-3);
        assert!(theoretical_music_variance(&h, &[0, 1, 2, 3], 10.0, 1.0).is_err());
        assert!(theoretical_music_variance(&h, &[0], 0.0, 1.0).is_err());
    }

    #[test]
    fn seeds_depend_on_labels() {
        let a = cell_seed(1, 400.0, 5, 0.0, "MER");
        assert_eq!(a, cell_seed(1, 400.0, 5, 0.0, "MER"));
        assert_ne!(a, cell_seed(1, 400.0, 5, 0.0, "random"));
        assert_ne!(a, cell_seed(2, 400.0, 5, 0.0, "MER"));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    }

    #[test]
    fn infinite_snr_disables_noise() {
        assert_eq!(noise_power(f64::INFINITY).unwrap(), 0.0);
        assert!((noise_power(10.0).unwrap() - 0.1).abs() < 1e-16);
        assert!(noise_power(f64::NAN).is_err());
    }
}
