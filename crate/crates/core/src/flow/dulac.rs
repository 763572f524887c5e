//! Corner transitions measured by integration.
//!
//! The passage is integrated in the logarithmic chart `ξ = ln u`, `η = ln v`,
//! where `ξ̇ = P(eᵘ, eᵛ)` and `η̇ = Q(eᵘ, eᵛ)`. Orbits are unchanged, the
//! saddle is sent to infinity and relative accuracy is kept for orbits
//! arbitrarily close to the separatrices.

use crate::error::{Error, Result};
use crate::field::PlanarField;
use crate::flow::ode::{integrate, Crossing, Event, OdeTolerance, State, Trajectory};
use crate::saddle::{LocalChart, SectionPair};

/// Multiple of the chart footprint beyond which an orbit counts as escaped.
const ESCAPE_FACTOR: f64 = 1e3;

/// Integrate the field in model coordinates.
pub fn integrate_field(
    field: &PlanarField,
    y0: State,
    events: &[Event],
    tol: &OdeTolerance,
) -> Result<Trajectory> {
    let f = |y: &State| field.eval(*y);
    integrate(&f, y0, events, None, tol)
}

fn exit_abscissa(sections: &SectionPair) -> Result<f64> {
    let u = &sections.exit.u;
    if u.iter().skip(1).any(|&c| c != 0.0) {
        return Err(Error::Section(
            "the flow oracle needs an exit section with constant u".into(),
        ));
    }
    let h = u.first().copied().unwrap_or(0.0);
    if !(h > 0.0) {
        return Err(Error::Section(format!("exit abscissa {h} is not positive")));
    }
    Ok(h)
}

/// `D(s)`: the exit parameter reached from `σ₁(s)`.
pub fn numeric_dulac(chart: &LocalChart, sections: &SectionPair, s: f64, tol: &OdeTolerance) -> Result<f64> {
    let [u0, v0] = sections.entry.point(s);
    if !(u0 > 0.0 && v0 > 0.0) {
        return Err(Error::Invalid(format!(
            "σ₁({s}) = ({u0}, {v0}) is not inside the open quadrant"
        )));
    }
    let h_out = exit_abscissa(sections)?;
    if u0 >= h_out {
        return Err(Error::Invalid(format!(
            "σ₁({s}) = ({u0}, {v0}) already lies beyond the exit section u = {h_out}"
        )));
    }
    let target = h_out.ln();
    let f = |y: &State| {
        let (u, v) = (y[0].exp(), y[1].exp());
        [chart.p.eval(u, v), chart.q.eval(u, v)]
    };
    let g = |y: &State| y[0] - target;
    let bound = (ESCAPE_FACTOR * h_out.max(v0).max(1.0)).ln();
    let guard = |y: &State| y[0] < bound && y[1] < bound;
    let events = [Event::new(&g, Crossing::Rising)];
    let y0 = [u0.ln(), v0.ln()];
    let tr = integrate(&f, y0, &events, Some(&guard), tol).map_err(|e| match e {
        Error::Escape(m) => Error::Escape(format!("orbit from σ₁({s}) left the chart: {m}")),
        Error::MaxTime(_) => Error::Escape(format!(
            "orbit from σ₁({s}) did not reach the exit section"
        )),
        other => other,
    })?;
    let v = tr
        .event
        .map(|e| e.y[1].exp())
        .ok_or_else(|| Error::Escape(format!("orbit from σ₁({s}) did not reach the exit section")))?;
    sections.exit_parameter(v)
}
