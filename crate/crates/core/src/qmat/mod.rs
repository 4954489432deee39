//! Dense complex linear algebra for small Hilbert spaces (dimension ≤ 64).
//!
//! Everything here is a pure function of immutable inputs. The one
//! convention worth remembering: [`su2_rotation`]`(n, θ)` is
//! `exp(iθ n·σ)`, and conjugating `U† σ U` rotates a Bloch vector by `2θ`
//! about `n`.

mod eigen;
mod matrix;
mod operators;

pub use eigen::{herm_eigen, HermEigen};
pub use matrix::{kron, C64, ComplexMatrix, MAX_DIM};
pub use operators::{
    bloch_observable, ket_projector, sigma_x, sigma_y, sigma_z, su2_rotation, Observable, State,
};

/// Hermiticity tolerance for states.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for algebraic identities of observables and projectors.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Precondition tolerance used by [`herm_eigen`].
pub const EIGEN_INPUT_TOL: f64 = 1e-10;
