//! Plane-wave least-squares discretization.

pub mod assembly;
pub mod basis;
pub mod moments;

pub use assembly::{assemble_global, assemble_local, assemble_local_from_pieces, assemble_rhs, BlockMatrix, BlockSystem, LocalSystem, write_vector_market};
pub use basis::{directions, PlaneWaveSpace};
