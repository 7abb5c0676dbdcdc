//! Multi-dimensional learned indices (ZM-Index, ML-Index, LISA, Flood,
//! IF-Index) next to classic baselines (STR R-tree, kd-tree, uniform and
//! equal-depth grids, full scan), plus workload generators and a benchmark
//! harness.

pub mod bench;
pub mod error;
pub mod geom;
pub mod grid;
pub mod index;
pub mod pla;
pub mod projection;
pub mod tree;
pub mod workload;
pub mod zorder;

pub use error::{Error, Result};
pub use geom::{Dataset, KnnQuery, Point, PointId, RangeBox, ResultSet};
pub use index::{BuildParams, IndexKind, SpatialIndex};
pub use pla::{build_pla, PlaModel, Segment};
