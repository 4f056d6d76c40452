//! The JSON experiment configuration and its hash.

use std::path::{Path, PathBuf};

use headarray::experiments::{ArrayType, DesignSettings};
use headarray::ghrtf::{FrequencyGrid, GhrtfDatabase, DEFAULT_HEAD_RADIUS, DEFAULT_SPEED_OF_SOUND};
use headarray::placement::GaConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub db: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Maximum worker threads; `None` uses every core.
    pub thread_count: Option<usize>,
    pub gen_db: GenDbConfig,
    pub design: DesignConfig,
    pub rank_map: RankMapConfig,
    pub optimize: OptimizeConfig,
    pub sensitivity: SensitivityConfig,
    pub music: MusicConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDbConfig {
    /// `start:step:stop` or a comma list, in Hz.
    pub frequencies: String,
    pub radius: f64,
    pub candidates: usize,
    pub uniform_directions: usize,
    pub speed_of_sound: f64,
}

impl Default for GenDbConfig {
    fn default() -> Self {
        GenDbConfig {
            frequencies: "0:100:5000".into(),
            radius: DEFAULT_HEAD_RADIUS,
            candidates: 242,
            uniform_directions: 240,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
        }
    }
}

/// The matrix every array design is scored on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    /// Frequencies in Hz; `None` uses every database frequency.
    pub frequencies: Option<String>,
    /// `all` or a comma list of direction-set names.
    pub directions: String,
    pub ga: GaConfig,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            frequencies: None,
            directions: "all".into(),
            ga: GaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankMapConfig {
    pub frequencies: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub sizes: Vec<usize>,
    pub realizations: usize,
    /// Aim for this effective rank instead of the maximum.
    pub target_rank: Option<f64>,
    pub exhaustive: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            sizes: vec![2, 3, 5, 10],
            realizations: 100,
            target_rank: None,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub sizes: Vec<usize>,
    pub realizations: usize,
    /// `None` uses every non-zero database frequency.
    pub frequencies: Option<String>,
    pub directions: String,
    pub array_types: Vec<ArrayType>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            sizes: vec![2, 3, 5, 10],
            realizations: 100,
            frequencies: None,
            directions: "uniform".into(),
            array_types: ArrayType::STANDARD.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MusicConfig {
    pub frequencies: String,
    pub sizes: Vec<usize>,
    pub snrs_db: Vec<f64>,
    pub array_types: Vec<ArrayType>,
    pub realizations: usize,
    pub trials: usize,
    pub snapshots: usize,
    pub directions: String,
}

impl Default for MusicConfig {
    fn default() -> Self {
        MusicConfig {
            frequencies: "100,200,400,800,1600,3200".into(),
            sizes: vec![2, 3, 4, 5, 7, 10],
            snrs_db: vec![-20.0, -10.0, 0.0, 10.0, 20.0, 40.0],
            array_types: ArrayType::STANDARD.to_vec(),
            realizations: 100,
            trials: 30,
            snapshots: 30,
            directions: "uniform".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(format!("reading config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::new(format!("config {}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON with paths and thread count removed,
    /// so it identifies what the results depend on.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.db = None;
        c.output_dir = None;
        c.thread_count = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn db_path(&self) -> Result<PathBuf, CliError> {
        self.db
            .clone()
            .ok_or_else(|| CliError::new("no database given; pass --db PATH"))
    }
}

/// Database indices of the listed frequencies (`None` means all of them).
pub fn frequency_indices(db: &GhrtfDatabase, spec: Option<&str>) -> Result<Vec<usize>, CliError> {
    let Some(spec) = spec else {
        return Ok(db.all_frequency_indices());
    };
    let wanted = FrequencyGrid::parse(spec)?;
    let have = db.frequencies().values();
    wanted
        .values()
        .iter()
        .map(|&f| {
            have.iter()
                .position(|&g| (g - f).abs() <= 1e-9 * f.abs().max(1.0))
                .ok_or_else(|| CliError::new(format!("{f} Hz is not in the database frequency grid")))
        })
        .collect()
}

/// `all` or a comma list of direction-set names, concatenated in order.
pub fn direction_indices(db: &GhrtfDatabase, spec: &str) -> Result<Vec<usize>, CliError> {
    if spec.trim() == "all" {
        return Ok(db.all_direction_indices());
    }
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim) {
        let set = db.direction_set(name).ok_or_else(|| {
            let known: Vec<&str> = db.direction_sets().iter().map(|s| s.name.as_str()).collect();
            CliError::new(format!("unknown direction set {name:?} (database has {known:?} or use \"all\")"))
        })?;
        out.extend(set.indices());
    }
    Ok(out)
}

pub fn design_settings(db: &GhrtfDatabase, design: &DesignConfig) -> Result<DesignSettings, CliError> {
    Ok(DesignSettings {
        frequency_indices: frequency_indices(db, design.frequencies.as_deref())?,
        direction_indices: direction_indices(db, &design.directions)?,
        ga: design.ga.clone(),
    })
}
