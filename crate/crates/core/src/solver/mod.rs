//! Convex reconstruction of the high-resolution cube.
//!
//! Minimizes, over `i ≥ 0`,
//!
//! ```text
//! ‖A_τ i − d‖ + α‖T i − c‖ + β‖K_h i − K_l d‖ + γ‖i‖₁ + δ‖∇₂D i‖₁
//! ```
//!
//! with the three L2 terms either unsquared or squared ([`NormMode`]), using a
//! first-order primal-dual splitting over the stacked operator.

mod config;
mod normalize;
mod objective;
mod pdhg;
mod power;

pub use config::{NormMode, Preset, SolverConfig};
pub use normalize::{collection_efficiency, normalize_ccd, normalize_ccd_to_geometry, CcdNormalization};
pub use objective::{objective, ObjectiveTerms};
pub use pdhg::{initial_estimate, reconstruct, SolveReport};
pub use power::power_iteration;
