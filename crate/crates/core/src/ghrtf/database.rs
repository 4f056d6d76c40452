use num_complex::Complex64;

use super::grid::{CandidatePositionSet, DirectionSet, FrequencyGrid};
use super::sphere::{wavenumber_radius, SphereSeries, DEFAULT_SPEED_OF_SOUND};
use super::Direction;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par;

/// GHRTF coefficients indexed `(candidate m, frequency k, direction j)`,
/// stored m-major, then k, then j. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GhrtfDatabase {
    candidates: CandidatePositionSet,
    frequencies: FrequencyGrid,
    directions: Vec<Direction>,
    values: Vec<Complex64>,
    provenance: String,
    direction_sets: Vec<DirectionSet>,
}

impl GhrtfDatabase {
    pub fn new(
        candidates: CandidatePositionSet,
        frequencies: FrequencyGrid,
        directions: Vec<Direction>,
        values: Vec<Complex64>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::invalid("database needs at least one direction"));
        }
        let expected = candidates.len() * frequencies.len() * directions.len();
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "expected M·K·D = {expected} coefficients, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid(format!("coefficient #{i} is not finite")));
        }
        Ok(GhrtfDatabase {
            candidates,
            frequencies,
            directions,
            values,
            provenance: provenance.into(),
            direction_sets: Vec::new(),
        })
    }

    /// Attaches named direction blocks (e.g. horizontal / median / uniform).
    pub fn with_direction_sets(mut self, sets: Vec<DirectionSet>) -> Result<Self> {
        for s in &sets {
            if s.start >= s.end || s.end > self.directions.len() {
                return Err(Error::invalid(format!(
                    "direction set {:?} = {}..{} is empty or out of range",
                    s.name, s.start, s.end
                )));
            }
        }
        self.direction_sets = sets;
        Ok(self)
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn num_frequencies(&self) -> usize {
        self.frequencies.len()
    }

    pub fn num_directions(&self) -> usize {
        self.directions.len()
    }

    pub fn candidates(&self) -> &CandidatePositionSet {
        &self.candidates
    }

    pub fn frequencies(&self) -> &FrequencyGrid {
        &self.frequencies
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn direction_sets(&self) -> &[DirectionSet] {
        &self.direction_sets
    }

    pub fn direction_set(&self, name: &str) -> Option<&DirectionSet> {
        self.direction_sets.iter().find(|s| s.name == name)
    }

    #[inline]
    pub fn index(&self, m: usize, k: usize, j: usize) -> usize {
        (m * self.frequencies.len() + k) * self.directions.len() + j
    }

    #[inline]
    pub fn value(&self, m: usize, k: usize, j: usize) -> Complex64 {
        self.values[self.index(m, k, j)]
    }

    /// Bit-level equality of every field, including the sign of zeros.
    pub fn bitwise_eq(&self, other: &GhrtfDatabase) -> bool {
        fn bits(z: &Complex64) -> (u64, u64) {
            (z.re.to_bits(), z.im.to_bits())
        }
        self == other
            && self.values.iter().map(bits).eq(other.values.iter().map(bits))
            && self
                .frequencies
                .values()
                .iter()
                .map(|f| f.to_bits())
                .eq(other.frequencies.values().iter().map(|f| f.to_bits()))
    }

    pub fn all_frequency_indices(&self) -> Vec<usize> {
        (0..self.num_frequencies()).collect()
    }

    pub fn all_direction_indices(&self) -> Vec<usize> {
        (0..self.num_directions()).collect()
    }
}

/// Evaluates the rigid-sphere surrogate for every (m, k, j) triple.
pub fn build_sphere_database(
    head_radius: f64,
    candidates: CandidatePositionSet,
    frequencies: FrequencyGrid,
    directions: Vec<Direction>,
) -> Result<GhrtfDatabase> {
    build_sphere_database_with_speed(
        head_radius,
        candidates,
        frequencies,
        directions,
        DEFAULT_SPEED_OF_SOUND,
    )
}

pub fn build_sphere_database_with_speed(
    head_radius: f64,
    candidates: CandidatePositionSet,
    frequencies: FrequencyGrid,
    directions: Vec<Direction>,
    speed_of_sound: f64,
) -> Result<GhrtfDatabase> {
    if !(head_radius.is_finite() && head_radius > 0.0) {
        return Err(Error::invalid(format!("head radius {head_radius} must be > 0")));
    }
    if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
        return Err(Error::invalid(format!("speed of sound {speed_of_sound} must be > 0")));
    }
    let series: Vec<SphereSeries> = frequencies
        .values()
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            SphereSeries::new(wavenumber_radius(head_radius, f, speed_of_sound)).map_err(|e| {
                Error::Numerical(format!("frequency index {k} ({f} Hz): {e}"))
            })
        })
        .collect::<Result<_>>()?;

    let positions = candidates.positions();
    let rows = par::map_slice(positions, |p| {
        let mut row = Vec::with_capacity(series.len() * directions.len());
        for s in &series {
            for d in &directions {
                row.push(s.evaluate(p.direction.cos_angle_to(d)));
            }
        }
        row
    });
    let values: Vec<Complex64> = rows.into_iter().flatten().collect();
    if let Some(pos) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        let per_m = series.len() * directions.len();
        let (m, rest) = (pos / per_m, pos % per_m);
        return Err(Error::Numerical(format!(
            "non-finite coefficient at (m={m}, k={}, j={})",
            rest / directions.len(),
            rest % directions.len()
        )));
    }

    let provenance = format!(
        "rigid-sphere modal series; head_radius_m={head_radius}; speed_of_sound_m_s={speed_of_sound}; \
         truncation=ceil(ka)+12 extended to |c_n|<1e-16; candidates={}; directions={}",
        candidates.len(),
        directions.len()
    );
    GhrtfDatabase::new(candidates, frequencies, directions, values, provenance)
}

/// Stacks the GHRTFs of `selection` into an `(L·K′) × D′` matrix.
///
/// Row `k·L + l` holds microphone `selection[l]` at frequency
/// `frequency_indices[k]` (zero-based form of `i = L(k−1) + l`).
/// With a single frequency this is the narrow-band steering matrix.
pub fn stack_ghrtf(
    db: &GhrtfDatabase,
    selection: &[usize],
    frequency_indices: &[usize],
    direction_indices: &[usize],
) -> Result<CMatrix> {
    validate_selection(selection, db.num_candidates())?;
    validate_indices(frequency_indices, db.num_frequencies(), "frequency")?;
    validate_indices(direction_indices, db.num_directions(), "direction")?;
    let l = selection.len();
    let rows = l * frequency_indices.len();
    Ok(CMatrix::from_fn(rows, direction_indices.len(), |i, j| {
        let (k, mic) = (i / l, i % l);
        db.value(selection[mic], frequency_indices[k], direction_indices[j])
    }))
}

pub(crate) fn validate_selection(selection: &[usize], m: usize) -> Result<()> {
    if selection.is_empty() {
        return Err(Error::invalid("selection is empty"));
    }
    for (i, &s) in selection.iter().enumerate() {
        if s >= m {
            return Err(Error::invalid(format!("candidate index {s} out of range (M = {m})")));
        }
        if selection[..i].contains(&s) {
            return Err(Error::invalid(format!("candidate index {s} selected twice")));
        }
    }
    Ok(())
}

pub(crate) fn validate_indices(indices: &[usize], n: usize, what: &str) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::invalid(format!("no {what} indices given")));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("{what} index {bad} out of range (size {n})")));
    }
    Ok(())
}
