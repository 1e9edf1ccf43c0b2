//! Localmax attention dynamics for interacting token systems.
//!
//! Tokens `x_1, ..., x_n` in `R^d` are updated synchronously by
//!
//! ```text
//! x_i(t+1) = x_i(t) + alpha/(1+alpha) * 1/|C_i| * sum_{j in C_i} (x_j(t) - x_i(t))
//! ```
//!
//! where `C_i` collects the tokens whose alignment `<A x_i, x_j>` is within
//! `delta * ||A x_i||` of the maximum. The crate simulates this dynamics (and
//! the hardmax and softmax dynamics it interpolates between) and provides
//! the tools to study its long-run structure: planar polytope geometry,
//! trajectory diagnostics and a Lyapunov analysis over the induced chain of
//! row-stochastic matrices.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod lyapunov;
pub mod params;
pub mod sampling;
pub mod scenario;
pub mod state;
pub mod trajectory;

pub use dynamics::{
    hardmax_neighborhood, hardmax_step, localmax_step, neighborhood, softmax_step,
    transition_matrix, whiten, TransitionMatrix,
};
pub use error::{CoreError, Result};
pub use params::{
    BetaSchedule, DeltaSchedule, DynamicsKind, Interaction, ModelParams, SoftmaxSettings, SpdMatrix,
};
pub use state::TokenConfiguration;
pub use trajectory::{run, Retention, StopReason, Trajectory};
