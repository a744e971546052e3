//! Numerical building blocks shared by the model, estimators and simulator.

pub mod ode;
pub mod optim;
pub mod quad;
pub mod special;
