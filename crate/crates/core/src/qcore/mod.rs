//! Dense complex linear algebra and quantum-state primitives.

pub mod eig;
pub mod linalg;
pub mod matrix;
pub mod ops;
pub mod state;

pub use eig::{eigh, eigvalsh, herm_fn};
pub use linalg::{expm as matrix_exponential, solve, Lu};
pub use matrix::{c, ci, cone, czero, CMat};
pub use ops::{partial_trace, partial_trace_mat, tensor_product, unvectorize, vectorize};
pub use state::{
    bloch_ket, fidelity, fidelity_pure, state_tol, von_neumann_entropy, DensityMatrix, Ket,
};
