//! Dual accelerated solvers for decentralized, entropy-regularized p-norm
//! regression over the probability simplex.
//!
//! Each of `m` nodes holds `(A_i, b_i)`; nodes talk over a connected graph
//! through a gossip matrix `W`. The crate solves
//!
//! ```text
//! min_{x ∈ Δ_d} (1/m) ||A x - b||_p + θ <x, log x>
//! ```
//!
//! through its smooth dual with two methods:
//!
//! - [`stm`]: Similar Triangles Method on the composite dual, one
//!   communication round per iteration;
//! - [`acrcd`]: randomized two-block accelerated coordinate descent (for
//!   `p = 1`), which splits communication rounds from local computations.
//!
//! [`recovery`] maps dual iterates back to primal points and tracks the
//! duality gap; [`harness`] drives experiments and writes CSV traces.

pub mod acrcd;
pub mod dual;
pub mod error;
pub mod harness;
pub mod network;
pub mod problem;
pub mod prox;
pub mod recovery;
pub mod stm;
pub mod trace;

pub use error::{Error, Result};
