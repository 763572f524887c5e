//! Numeric first-return maps.

use crate::error::{Error, Result};
use crate::field::PlanarField;
use crate::flow::dulac::{integrate_field, numeric_dulac};
use crate::flow::ode::{Crossing, Event, OdeTolerance, State};
use crate::saddle::{LocalChart, SectionPair};

/// A first-return map on a transverse section parametrized by `s > 0`.
pub trait ReturnMap: Sync {
    fn eval(&self, s: f64) -> Result<f64>;
    /// Integration tolerance behind each evaluation.
    fn tolerance(&self) -> &OdeTolerance;
}

/// One corner passage: the chart and the sections it connects.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub chart: LocalChart,
    pub sections: SectionPair,
}

/// Return map of a polycycle whose consecutive corner sections coincide,
/// realized as the chain of numeric corner passages.
#[derive(Debug, Clone)]
pub struct PolycycleReturn {
    pub legs: Vec<Leg>,
    pub tol: OdeTolerance,
}

impl PolycycleReturn {
    pub fn new(legs: Vec<Leg>, tol: OdeTolerance) -> Result<Self> {
        if legs.is_empty() {
            return Err(Error::Invalid("polycycle return needs at least one corner".into()));
        }
        Ok(Self { legs, tol })
    }

    /// Passage through corner `i` (0-based).
    pub fn dulac(&self, i: usize, s: f64) -> Result<f64> {
        let leg = self
            .legs
            .get(i)
            .ok_or_else(|| Error::Index(format!("corner {i} of {}", self.legs.len())))?;
        numeric_dulac(&leg.chart, &leg.sections, s, &self.tol)
    }
}

impl ReturnMap for PolycycleReturn {
    fn eval(&self, s: f64) -> Result<f64> {
        let mut x = s;
        for i in 0..self.legs.len() {
            x = self.dulac(i, x).map_err(|e| match e {
                Error::Escape(m) => Error::Escape(format!("out of basin at corner {}: {m}", i + 1)),
                other => other,
            })?;
            if !(x > 0.0) {
                return Err(Error::Escape(format!(
                    "out of basin: corner {} returned {x}",
                    i + 1
                )));
            }
        }
        Ok(x)
    }

    fn tolerance(&self) -> &OdeTolerance {
        &self.tol
    }
}

/// Return map of the half-line `origin + s·direction`, `s > 0`, integrated in
/// model coordinates.
#[derive(Debug, Clone)]
pub struct SectionReturn {
    pub field: PlanarField,
    pub origin: [f64; 2],
    pub direction: [f64; 2],
    pub tol: OdeTolerance,
}

impl SectionReturn {
    pub fn new(field: PlanarField, origin: [f64; 2], direction: [f64; 2], tol: OdeTolerance) -> Result<Self> {
        let n = direction[0].hypot(direction[1]);
        if !(n > 0.0) {
            return Err(Error::Invalid("section direction is zero".into()));
        }
        Ok(Self {
            field,
            origin,
            direction: [direction[0] / n, direction[1] / n],
            tol,
        })
    }

    fn point(&self, s: f64) -> State {
        [
            self.origin[0] + s * self.direction[0],
            self.origin[1] + s * self.direction[1],
        ]
    }
}

impl ReturnMap for SectionReturn {
    fn eval(&self, s: f64) -> Result<f64> {
        let p0 = self.point(s);
        let [dx, dy] = self.direction;
        let [ox, oy] = self.origin;
        let g = |p: &State| dx * (p[1] - oy) - dy * (p[0] - ox);
        let along = |p: &State| dx * (p[0] - ox) + dy * (p[1] - oy);
        let v = self.field.eval(p0);
        let flux = dx * v[1] - dy * v[0];
        if flux == 0.0 {
            return Err(Error::Integration(format!(
                "field is tangent to the section at s = {s}"
            )));
        }
        let crossing = if flux > 0.0 { Crossing::Rising } else { Crossing::Falling };
        let forward = |p: &State| along(p) > 0.0;
        let ev = Event {
            g: &g,
            crossing,
            accept: Some(&forward),
        };
        let tr = integrate_field(&self.field, p0, &[ev], &self.tol)?;
        let e = tr
            .event
            .ok_or_else(|| Error::Escape(format!("orbit from s = {s} did not return")))?;
        Ok(along(&e.y))
    }

    fn tolerance(&self) -> &OdeTolerance {
        &self.tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::BivariatePolynomial as BP;

    #[test]
    fn rotation_returns_identity() {
        let f = PlanarField::new(-&BP::y(), BP::x());
        let r = SectionReturn::new(f, [0.0, 0.0], [1.0, 0.0], OdeTolerance::default()).unwrap();
        for s in [0.1, 0.5, 2.0] {
            assert!((r.eval(s).unwrap() - s).abs() < 1e-9);
        }
    }
}
