//! Numerical ground truth: integration, corner passages, return maps,
//! coefficient fits and limit-cycle counts.

pub mod cycles;
pub mod dulac;
pub mod fit;
pub mod ode;
pub mod returns;

pub use cycles::{count_limit_cycles, log_grid, CycleScan, FixedPoint, Stability, BISECTION_TOL};
pub use dulac::{integrate_field, numeric_dulac};
pub use fit::{default_grid, dulac_basis, fit_expansion, geometric_grid, FitReport, FitTerm};
pub use ode::{integrate, Crossing, Event, EventRecord, OdeTolerance, State, Trajectory};
pub use returns::{Leg, PolycycleReturn, ReturnMap, SectionReturn};
