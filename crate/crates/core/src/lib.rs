//! Landau-de Gennes Q-tensor toolkit: bulk potential, discrete fields on
//! structured grids, gradient-flow relaxation, defect extraction with
//! topological invariants, preset scenarios and numerical identity checks.

pub mod cli;
pub mod config;
pub mod defect;
pub mod field;
pub mod potential;
pub mod qtensor;
pub mod scenario;
pub mod solver;
pub mod verify;

mod reduce;

pub use field::{Domain, EnergyBreakdown, QField};
pub use potential::MaterialParams;
pub use qtensor::QTensor;
