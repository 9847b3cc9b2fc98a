//! Quasi-static phase-field fracture coupled with plasticity, kinematic
//! hardening and viscous dissipation, computed by incremental energy
//! minimization with alternate minimization and backtracking.
//!
//! The numerical core is generic over the floating-point type; the aliases
//! at the crate root fix it to `f64`.

// `!(x > 0)` comparisons deliberately reject NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audit;
pub mod cli_io;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod scalar;
pub mod subsolvers;
pub mod tensor;

pub use error::{Error, Result};
pub use material::Model;
pub use mesh::Side;
pub use scalar::Real;
pub use subsolvers::{BoundaryLoad, PlasticMethod, Prescription, SolveReport};

pub type Mesh = mesh::Mesh<f64>;
pub type MaterialParams = material::MaterialParams<f64>;
pub type State = energy::State<f64>;
pub type EnergyBreakdown = energy::EnergyBreakdown<f64>;
pub type Sym2 = tensor::Sym2<f64>;
