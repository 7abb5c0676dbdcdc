//! Projection indices: map each point to a 1-D key and learn the key CDF.

pub mod kmeans;
mod lisa;
mod mli;
mod zmi;

pub use lisa::{LisaGrid, LisaIndex};
pub use mli::{auto_partitions, MliIndex};
pub use zmi::ZmiIndex;

pub(crate) use zmi::{grid_bits, z_sorted, UniformCells};
