//! Numerical knobs of an analysis run, adjustable by name.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::OdeTolerance;
use crate::quad::QuadTolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub quad: QuadTolerance,
    pub ode: OdeTolerance,
    /// Absolute threshold for treating a condition quantity as zero.
    pub zero: f64,
    /// Relative finite-difference step for gradients.
    pub gradient_step: f64,
    /// Allowed relative disagreement between steps `h` and `h/2`.
    pub richardson: f64,
    /// Relative bisection width for fixed points.
    pub bisection: f64,
    /// Relative radius of the parameter ball searched for sign witnesses.
    pub probe_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad: QuadTolerance::default(),
            ode: OdeTolerance::default(),
            zero: 1e-9,
            gradient_step: 1e-6,
            richardson: 1e-4,
            bisection: 1e-10,
            probe_radius: 1e-4,
        }
    }
}

pub const TOLERANCE_NAMES: [&str; 11] = [
    "quad_abs",
    "quad_rel",
    "quad_max_subdivisions",
    "ode_abs",
    "ode_rel",
    "ode_max_time",
    "zero",
    "gradient_step",
    "richardson",
    "bisection",
    "probe_radius",
];

impl Tolerances {
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Usage(format!("tolerance {name} must be positive, got {value}")));
        }
        match name {
            "quad_abs" => self.quad.abs = value,
            "quad_rel" => self.quad.rel = value,
            "quad_max_subdivisions" => self.quad.max_subdivisions = value as usize,
            "ode_abs" => self.ode.abs = value,
            "ode_rel" => self.ode.rel = value,
            "ode_max_time" => self.ode.max_time = value,
            "zero" => self.zero = value,
            "gradient_step" => self.gradient_step = value,
            "richardson" => self.richardson = value,
            "bisection" => self.bisection = value,
            "probe_radius" => self.probe_radius = value,
            _ => {
                return Err(Error::Usage(format!(
                    "unknown tolerance `{name}` (known: {})",
                    TOLERANCE_NAMES.join(", ")
                )))
            }
        }
        Ok(())
    }
}
