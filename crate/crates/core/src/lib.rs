//! Sub-linear expectations made executable.
//!
//! * [`scenario`]: finite scenario sets, capacities, Choquet integrals, independence and ND checks.
//! * [`gnormal`]: G-normal expectations via the G-heat equation and a control-tree oracle.
//! * [`ineq`]: exponential, Rosenthal and lower-bound calculators and their Monte Carlo checks.
//! * [`sim`]: partial sums under adversarial step choices.
//! * [`limits`]: central limit, law of large numbers and iterated-logarithm runs.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod gnormal;
pub mod ineq;
pub mod limits;
pub mod quadrature;
pub mod scenario;
pub mod sim;
pub mod test_function;

pub use error::{Error, Result};
pub use gnormal::{GParams, PdeGrid, PdeSolution};
pub use scenario::{CapacityKind, CapacityPair, DiscreteDistribution, ScenarioSet};
pub use test_function::TestFunction;
