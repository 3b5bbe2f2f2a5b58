//! Interior penalty DG discretisation of `-∇·(a∇u)` with homogeneous
//! Dirichlet conditions imposed weakly.

mod assembly;
mod norm;
mod sparse;
mod tensor;

pub use assembly::{
    assemble_load, assemble_mass, assemble_stiffness, assemble_stiffness_with, default_penalty, discrete_operator_apply,
    scheme_operator_apply, AssemblyOptions, Theta,
};
pub use norm::{dg_energy_norm, dg_energy_norm_with, jump_seminorm};
pub(crate) use norm::weighted_jump_sq;
pub use sparse::SparseOperator;
pub use tensor::{penalty_sigma, CoefficientBounds, DiffusionTensor};
