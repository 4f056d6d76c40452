//! GHRTF databases: direction grids, the rigid-sphere surrogate, storage and
//! stacking into the wide-band matrix `H`.

mod database;
mod direction;
mod grid;
mod io;
mod sphere;

pub use database::{
    build_sphere_database, build_sphere_database_with_speed, stack_ghrtf, GhrtfDatabase,
};
pub(crate) use database::{validate_indices, validate_selection};
pub use direction::Direction;
pub use grid::{
    default_direction_union, direction_grid, fibonacci_lattice, CandidatePositionSet,
    DirectionSet, FrequencyGrid, GridKind, SurfacePoint, HORIZONTAL_SET, MEDIAN_SET, UNIFORM_SET,
};
pub use io::{load_database, parse_database, read_database, save_database, write_database, FORMAT_VERSION};
pub use sphere::{
    baseline_order, sphere_ghrtf, wavenumber_radius, SphereSeries, DEFAULT_HEAD_RADIUS,
    DEFAULT_SPEED_OF_SOUND,
};
