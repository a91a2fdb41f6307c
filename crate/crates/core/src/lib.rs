//! Cooperative fare design for a transit agency and a mobility-on-demand
//! operator sharing one network.
//!
//! The library evaluates multinomial-logit demand for a fare vector, solves
//! the discount-activation second stage exactly, searches the fare box with
//! SOS2 coordinate descent (plus brute-force and Bayesian-optimization
//! baselines), computes non-cooperative equilibria and splits the allied
//! revenue. The numeric core is generic over [`Scalar`]; the aliases below
//! fix it to `f64` or `f32`.

pub mod allocation;
pub mod bayes;
pub mod bench;
pub mod casegen;
pub mod choice;
pub mod descent;
pub mod error;
pub mod game;
pub mod lp;
pub mod model;
pub mod report;
pub mod scalar;
pub mod second_stage;
pub mod sos2;

pub use error::{GpError, ModelError, PathError, ReportError, SearchError, SolveError};
pub use model::{FareAxis, FareBounds, FareVector, Instance, ObjectiveWeights, OperatorKind};
pub use scalar::Scalar;

pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type FareVector64 = FareVector<f64>;
pub type FareVector32 = FareVector<f32>;
pub type SecondStageSolution64 = second_stage::SecondStageSolution<f64>;
pub type SecondStageSolution32 = second_stage::SecondStageSolution<f32>;
pub type RunReport64 = report::RunReport<f64>;
