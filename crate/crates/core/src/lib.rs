//! Numerical laboratory for Schwarz and Minkowski-functional symmetrization
//! of plurisubharmonic and convex functions and their Monge-Ampère energies.

pub mod bodies;
pub mod error;
pub mod fields;
pub mod lab;
pub mod profiles;
pub mod symmetrize;
pub mod variational;

pub use bodies::{BalancedLog, BodySpec, ConvexBody};
pub use error::{Error, Result};
