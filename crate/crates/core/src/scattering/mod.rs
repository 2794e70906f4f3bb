//! The coupled ³S₁–³D₁ example: chain construction, closed-form S-matrix,
//! potential decomposition and an independent coupled-channel solver.

mod decomposition;
mod kvg;
mod numerov;
mod smatrix;

pub use decomposition::{decompose, decompose_potential, reconstruct, PotentialDecomposition};
pub use kvg::{
    build_kvg_chain, build_kvg_chain_unbalanced, intermediate_self_wronskian, kvg_background, self_wronskian,
    KvGParameters,
};
pub use numerov::{asymptotic_angular_momenta, numerical_smatrix, numerical_smatrix_matrix, free_jost, TAIL_TOLERANCE};
pub use smatrix::{closed_form_smatrix, closed_form_smatrix_at, eta_ratio, residue, residue_ratio, SMatrixValue};
