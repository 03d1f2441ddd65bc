//! Periodic grid, real fields and spectral operators: the discrete Fourier
//! Galerkin space every solver works in.

mod field;
mod grid;
mod ops;

pub use field::{ScalarField, TensorField, VectorField};
pub use grid::TorusGrid;
pub use ops::{
    antisym_grad, apply_symbol, complex_gradient, divergence, divergence_tensor, gradient,
    gradient_potential, grad_laplacian_power, hessian, integrate, laplacian, laplacian_power,
    partial, spectrum, sym_grad, synthesize, vector_gradient, Dealias,
};
#[allow(unused_imports)]
pub(crate) use ops::{is_aliased, resolved_k2, resolved_wavevector};
