//! Microphone-array design on a head-like surface.
//!
//! An array is scored by the effective rank of its stacked generalized HRTF
//! (GHRTF) matrix: the exponential of the Shannon entropy of the normalized
//! singular values. The crate covers the whole pipeline:
//!
//! - [`ghrtf`]: direction grids, the rigid-sphere surrogate, database storage and slicing
//! - [`rank`]: SVD spectra and the effective-rank measure
//! - [`beamformer`]: maximum-directivity weights and sensitivity (inverse white-noise gain)
//! - [`music`]: MUSIC direction finding, asymptotic variance and the Monte-Carlo protocol
//! - [`placement`]: genetic-algorithm and exhaustive subset selection
//! - [`experiments`] and [`report`]: sweep drivers and CSV/JSON/SVG output
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to plain iterators otherwise. Results do not
//! depend on which path is compiled in.

pub mod beamformer;
pub mod error;
pub mod experiments;
pub mod ghrtf;
pub mod linalg;
pub mod music;
pub mod par;
pub mod placement;
pub mod rank;
pub mod report;

pub use error::{Error, Result};
pub use ghrtf::{
    build_sphere_database, direction_grid, load_database, save_database, sphere_ghrtf,
    stack_ghrtf, CandidatePositionSet, Direction, FrequencyGrid, GhrtfDatabase, GridKind,
    SurfacePoint,
};
pub use linalg::{CMatrix, CVector};
pub use placement::ArraySelection;
pub use rank::{effective_rank, svd, EffectiveRankReport, SvdSpectrum};

pub use num_complex::Complex64;
