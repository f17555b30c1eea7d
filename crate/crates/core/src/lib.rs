//! Resource theories of quantum channels.
//!
//! Channels are stored as unnormalized Choi matrices
//! `J = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` (input factor first). On top of the channel
//! calculus the crate provides a small semidefinite-programming backend and
//! uses it for diamond norms, max-relative entropies, robustness measures
//! over several free-channel cones, and for verifying the convex-split and
//! catalytic erasure constructions.

pub mod channel;
pub mod conic;
pub mod error;
pub mod free_sets;
pub mod linalg;
pub mod majorization;
pub mod monotones;
pub mod norms;
pub mod protocols;
pub mod report;
pub mod states;

pub use channel::{Channel, ChannelRepr, DensityMatrix, HermitianMatrix};
pub use error::{Error, Result};
pub use states::ExtReal;
