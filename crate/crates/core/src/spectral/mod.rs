//! Fourier-space state, background profile, interaction kernel and the exact
//! right-hand side of the linearized equation in gliding coordinates.

mod field;
mod grid;
mod profile;
mod rhs;

pub use field::{sample_at, FourierField};
pub use grid::EtaGrid;
pub use profile::{eval_psi_hat, psi_check_sup, BackgroundState, BumpProfile, BumpShape, KernelSpec};
pub use rhs::{force_trace, rhs, ForceTrace};

pub(crate) use rhs::{check_grid, rhs_bands, SparseRows, Stage};
