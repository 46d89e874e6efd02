//! Online weight learning: the empirical W1 objective against the uniform
//! distribution, its closed-form gradients, Adam, and projection onto the
//! feasible weight set.

mod adam;
mod batch;
mod projection;
mod w1;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use batch::{batch_gradient, BatchState};
pub use projection::project_weights;
pub use w1::{dbeta_dw, dw1_dbeta, empirical_w1, stable_ranks};
