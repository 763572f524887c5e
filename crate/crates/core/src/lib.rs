//! Asymptotics and cyclicity of hyperbolic polycycles of planar polynomial
//! vector fields, with an ODE oracle for cross-checking.

pub mod analysis;
pub mod calculus;
pub mod cyclicity;
pub mod error;
pub mod expansion;
pub mod expr;
pub mod field;
pub mod flow;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod quad;
pub mod saddle;
pub mod series;
pub mod tolerances;

pub use analysis::{analyze, PolycycleAnalysis};
pub use error::{Error, ErrorClass, Result};
pub use expansion::{DulacCase, DulacExpansion, Interval, NextTerm};
pub use expr::{parse_expression, Expression};
pub use field::{ParametricField, PlanarField};
pub use model::Model;
pub use poly::BivariatePolynomial;
pub use series::PowerSeries;
pub use tolerances::Tolerances;
