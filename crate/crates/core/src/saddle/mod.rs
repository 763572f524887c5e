//! Saddle normalization and the Dulac coefficients of a single corner.

pub mod chart;
pub mod dulac;
pub mod mellin;
pub mod section;
pub mod transition;

pub use chart::{normalize_saddle, LocalChart};
pub use dulac::{dulac_coefficients, dulac_data, DulacData};
pub use mellin::{mellin_hat, SeriesFunction, TaylorFunction};
pub use section::{SectionCurve, SectionPair};
pub use transition::{transition_l, Axis, Transition};
