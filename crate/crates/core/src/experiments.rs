//! Sweep drivers: rank maps, placement runs, array design per type,
//! sensitivity ratios and MUSIC sweeps.
//!
//! Every random choice is seeded from the base seed and the labels of the
//! unit of work (size, realization, array type), so results are identical
//! for any thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamformer::average_sensitivity;
use crate::error::{Error, Result};
use crate::ghrtf::GhrtfDatabase;
use crate::music::{derive_seed, label_hash, run_music_monte_carlo, ArraySource, MusicProtocol, MusicSweep, MusicTrialStats};
use crate::par;
use crate::placement::{exhaustive_search, ga_optimize, random_selection, ArraySelection, GaConfig, Target};
use crate::rank::effective_rank_map;

/// How an array of a given size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ArrayType {
    /// Maximum effective rank.
    Mer,
    /// Effective rank as close as possible to `MER − d`.
    MerMinus(u32),
    /// Uniformly random distinct candidates.
    Random,
}

impl ArrayType {
    /// MER, MER-1, MER-5 and random.
    pub const STANDARD: [ArrayType; 4] = [
        ArrayType::Mer,
        ArrayType::MerMinus(1),
        ArrayType::MerMinus(5),
        ArrayType::Random,
    ];
}

impl fmt::Display for ArrayType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrayType::Mer => write!(f, "MER"),
            ArrayType::MerMinus(d) => write!(f, "MER-{d}"),
            ArrayType::Random => write!(f, "random"),
        }
    }
}

impl FromStr for ArrayType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("mer") {
            return Ok(ArrayType::Mer);
        }
        if t.eq_ignore_ascii_case("random") {
            return Ok(ArrayType::Random);
        }
        let upper = t.to_ascii_uppercase();
        if let Some(d) = upper.strip_prefix("MER-") {
            if let Ok(d) = d.parse::<u32>() {
                if d > 0 {
                    return Ok(ArrayType::MerMinus(d));
                }
            }
        }
        Err(Error::invalid(format!(
            "unknown array type {s:?} (expected MER, MER-<d> or random)"
        )))
    }
}

impl TryFrom<String> for ArrayType {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ArrayType> for String {
    fn from(t: ArrayType) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMap {
    pub set: String,
    /// One effective rank per candidate.
    pub values: Vec<f64>,
}

/// Per-candidate effective rank for every named direction set of `db`, or
/// for all directions when the database carries no sets.
pub fn rank_maps(db: &GhrtfDatabase, frequency_indices: &[usize]) -> Result<Vec<RankMap>> {
    let sets: Vec<(String, Vec<usize>)> = if db.direction_sets().is_empty() {
        vec![("all".to_owned(), db.all_direction_indices())]
    } else {
        db.direction_sets()
            .iter()
            .map(|s| (s.name.clone(), s.indices()))
            .collect()
    };
    sets.into_iter()
        .map(|(set, dirs)| {
            Ok(RankMap {
                values: effective_rank_map(db, frequency_indices, &dirs)?,
                set,
            })
        })
        .collect()
}

/// The frequencies and directions whose stacked matrix the designs score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSettings {
    pub frequency_indices: Vec<usize>,
    pub direction_indices: Vec<usize>,
    pub ga: GaConfig,
}

impl DesignSettings {
    pub fn full(db: &GhrtfDatabase) -> Self {
        DesignSettings {
            frequency_indices: db.all_frequency_indices(),
            direction_indices: db.all_direction_indices(),
            ga: GaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRecord {
    pub size: usize,
    pub realization: usize,
    pub seed: u64,
    pub selection: ArraySelection,
    /// 0 for exhaustive search.
    pub generations: usize,
    pub trace: Vec<f64>,
}

/// Runs the GA `realizations` times for each size (or one exhaustive search
/// per size when `exhaustive` is set).
pub fn optimize_sweep(
    db: &GhrtfDatabase,
    sizes: &[usize],
    realizations: usize,
    target: Target,
    design: &DesignSettings,
    exhaustive: bool,
    seed: u64,
) -> Result<Vec<OptimizeRecord>> {
    let mut out = Vec::new();
    for &size in sizes {
        if exhaustive {
            let selection = exhaustive_search(
                db,
                size,
                &design.frequency_indices,
                &design.direction_indices,
                target,
            )?;
            out.push(OptimizeRecord {
                size,
                realization: 0,
                seed,
                trace: vec![selection.fitness],
                selection,
                generations: 0,
            });
            continue;
        }
        let runs = par::try_map_range(realizations, |r| {
            let s = derive_seed(seed, &[size as u64, r as u64]);
            let res = ga_optimize(
                db,
                size,
                &design.frequency_indices,
                &design.direction_indices,
                target,
                &design.ga.clone().with_seed(s),
            )?;
            Ok::<_, Error>(OptimizeRecord {
                size,
                realization: r,
                seed: s,
                selection: res.selection,
                generations: res.generations,
                trace: res.trace,
            })
        })?;
        out.extend(runs);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub array_type: ArrayType,
    pub size: usize,
    pub realization: usize,
    pub seed: u64,
    pub indices: Vec<usize>,
    pub effective_rank: f64,
    pub generations: usize,
}

/// Array realizations keyed by `(type label, size)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignedArrays {
    pub arrays: BTreeMap<(String, usize), Vec<Vec<usize>>>,
    pub records: Vec<DesignRecord>,
}

impl DesignedArrays {
    pub fn get(&self, array_type: ArrayType, size: usize) -> Option<&[Vec<usize>]> {
        self.arrays
            .get(&(array_type.to_string(), size))
            .map(Vec::as_slice)
    }
}

impl ArraySource for DesignedArrays {
    fn realizations(&self, array_type: &str, size: usize) -> Option<&[Vec<usize>]> {
        self.arrays
            .get(&(array_type.to_owned(), size))
            .map(Vec::as_slice)
    }
}

fn design_one(
    db: &GhrtfDatabase,
    types: &[ArrayType],
    size: usize,
    realization: usize,
    design: &DesignSettings,
    seed: u64,
) -> Result<Vec<DesignRecord>> {
    let base = derive_seed(seed, &[size as u64, realization as u64]);
    let run = |target: Target, t: ArrayType| {
        let s = derive_seed(base, &[label_hash(&t.to_string())]);
        let res = ga_optimize(
            db,
            size,
            &design.frequency_indices,
            &design.direction_indices,
            target,
            &design.ga.clone().with_seed(s),
        )?;
        Ok::<_, Error>(DesignRecord {
            array_type: t,
            size,
            realization,
            seed: s,
            indices: res.selection.indices,
            effective_rank: res.selection.effective_rank,
            generations: res.generations,
        })
    };

    let needs_mer = types.iter().any(|t| *t != ArrayType::Random);
    let mer = if needs_mer {
        Some(run(Target::Maximize, ArrayType::Mer)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(types.len());
    for &t in types {
        let rec = match t {
            ArrayType::Mer => mer.clone().expect("MER computed"),
            ArrayType::MerMinus(d) => {
                let goal = mer.as_ref().expect("MER computed").effective_rank - f64::from(d);
                run(Target::TargetRank(goal), t)?
            }
            ArrayType::Random => {
                let s = derive_seed(base, &[label_hash("random")]);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let indices = random_selection(&mut rng, db.num_candidates(), size);
                let problem = crate::placement::Problem::new(
                    db,
                    &design.frequency_indices,
                    &design.direction_indices,
                    Target::Maximize,
                )?;
                DesignRecord {
                    array_type: t,
                    size,
                    realization,
                    seed: s,
                    effective_rank: problem.effective_rank(&indices)?,
                    indices,
                    generations: 0,
                }
            }
        };
        out.push(rec);
    }
    Ok(out)
}

/// Builds `realizations` arrays of every type and size. Each MER−d design
/// targets the effective rank of the MER design of the same realization.
pub fn design_arrays(
    db: &GhrtfDatabase,
    types: &[ArrayType],
    sizes: &[usize],
    realizations: usize,
    design: &DesignSettings,
    seed: u64,
) -> Result<DesignedArrays> {
    if realizations == 0 {
        return Err(Error::invalid("realizations must be ≥ 1"));
    }
    let mut out = DesignedArrays::default();
    for &size in sizes {
        if size == 0 || size > db.num_candidates() {
            return Err(Error::invalid(format!(
                "cannot choose {size} of {} candidates",
                db.num_candidates()
            )));
        }
        let per_run = par::try_map_range(realizations, |r| design_one(db, types, size, r, design, seed))?;
        for rec in per_run.into_iter().flatten() {
            out.arrays
                .entry((rec.array_type.to_string(), size))
                .or_default()
                .push(rec.indices.clone());
            out.records.push(rec);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub frequency_hz: f64,
    pub num_mics: usize,
    pub variant_a: ArrayType,
    pub variant_b: ArrayType,
    /// Mean over realizations of the look-averaged sensitivity.
    pub mean_a: f64,
    pub mean_b: f64,
    /// `10·log10(mean_a / mean_b)`; negative means `variant_a` is more robust.
    pub ratio_db: f64,
}

/// Sensitivity ratios for each `(frequency, size, comparison)`. Frequencies
/// at 0 Hz are skipped. The coherence matrix uses all of
/// `direction_indices`; every one of them is also a look direction.
pub fn sensitivity_sweep(
    db: &GhrtfDatabase,
    arrays: &DesignedArrays,
    sizes: &[usize],
    frequency_indices: &[usize],
    direction_indices: &[usize],
    comparisons: &[(ArrayType, ArrayType)],
) -> Result<Vec<SensitivityRow>> {
    let looks: Vec<usize> = (0..direction_indices.len()).collect();
    let freqs: Vec<usize> = frequency_indices
        .iter()
        .copied()
        .filter(|&k| db.frequencies().values().get(k).is_some_and(|&f| f != 0.0))
        .collect();
    if freqs.len() < frequency_indices.len() {
        log::info!("0 Hz excluded from the sensitivity sweep");
    }

    let mut means: BTreeMap<(ArrayType, usize, usize), f64> = BTreeMap::new();
    let mut mean_of = |t: ArrayType, size: usize, k: usize| -> Result<f64> {
        if let Some(&v) = means.get(&(t, size, k)) {
            return Ok(v);
        }
        let sels = arrays.get(t, size).ok_or_else(|| {
            Error::invalid(format!("no {t} arrays of size {size} were designed"))
        })?;
        let per = par::try_map_range(sels.len(), |r| {
            average_sensitivity(db, &sels[r], k, direction_indices, &looks)
        })?;
        let v = per.iter().sum::<f64>() / per.len() as f64;
        means.insert((t, size, k), v);
        Ok(v)
    };

    let mut rows = Vec::new();
    for &k in &freqs {
        for &size in sizes {
            for &(a, b) in comparisons {
                let mean_a = mean_of(a, size, k)?;
                let mean_b = mean_of(b, size, k)?;
                rows.push(SensitivityRow {
                    frequency_hz: db.frequencies().values()[k],
                    num_mics: size,
                    variant_a: a,
                    variant_b: b,
                    mean_a,
                    mean_b,
                    ratio_db: 10.0 * (mean_a / mean_b).log10(),
                });
            }
        }
    }
    Ok(rows)
}

/// Designs the arrays named in `sweep` and runs the MUSIC Monte-Carlo over them.
pub fn music_sweep(
    db: &GhrtfDatabase,
    sweep: &MusicSweep,
    protocol: &MusicProtocol,
    realizations: usize,
    design: &DesignSettings,
    seed: u64,
) -> Result<(DesignedArrays, Vec<MusicTrialStats>)> {
    let types = sweep
        .array_types
        .iter()
        .map(|s| s.parse::<ArrayType>())
        .collect::<Result<Vec<_>>>()?;
    let arrays = design_arrays(db, &types, &sweep.sizes, realizations, design, seed)?;
    // canonical labels so lookups match however the user spelled them
    let sweep = MusicSweep {
        array_types: types.iter().map(ToString::to_string).collect(),
        ..sweep.clone()
    };
    let stats = run_music_monte_carlo(db, &arrays, &sweep, protocol, seed)?;
    Ok((arrays, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_type_labels_round_trip() {
        for t in ArrayType::STANDARD {
            assert_eq!(t.to_string().parse::<ArrayType>().unwrap(), t);
        }
        assert_eq!("mer-5".parse::<ArrayType>().unwrap(), ArrayType::MerMinus(5));
        assert!("MER-0".parse::<ArrayType>().is_err());
        assert!("best".parse::<ArrayType>().is_err());
        let json = serde_json::to_string(&ArrayType::MerMinus(1)).unwrap();
        assert_eq!(json, "\"MER-1\"");
    }
}
