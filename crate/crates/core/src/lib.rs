//! Single-magnon dynamics in inhomogeneous XXZ chains.
//!
//! A chain of `N` spins with one flipped spin lives in an `N`-dimensional
//! sector where the Hamiltonian `H_s = E₀ - A` is a symmetric tridiagonal
//! matrix. This crate builds that matrix ([`chain`]), diagonalizes it
//! ([`spectral`]), recovers the same spectrum from a closed-form transfer
//! recursion for chains split into equal wells ([`charpoly`]), evolves edge
//! excitations with and without decoherence ([`dynamics`], [`lindblad`]) and
//! runs parameter grids that write CSV ([`sweep`]).

pub mod chain;
pub mod charpoly;
pub mod dynamics;
pub mod error;
pub mod lindblad;
pub mod spectral;
pub mod sweep;

pub use chain::{
    build_direct, build_parametrized, resolved_convention, BarrierLayout, ChainSpec,
    ParametrizedForm, TridiagonalOperator, WellCountConvention,
};
pub use charpoly::{char_poly_eval, det_y, find_roots, RootSpectrum};
pub use dynamics::{
    evolve, superposition_transfer, transfer_time, two_level_fidelities, AmplitudeState,
    FidelityTrace,
};
pub use error::{Error, Result};
pub use lindblad::{lindblad_evolve, DensityMatrix, JumpOperator, LindbladTrace};
pub use spectral::{eigendecompose, energy_gap, spectrum, GapReport, SpectralResult};
