use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::PlanarField;
use crate::poly::BivariatePolynomial;

const AXIS_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-12;
const DIVISION_TOL: f64 = 1e-12;

/// A saddle moved to the origin with its separatrices on the axes, so the
/// local field reads `u̇ = u P(u,v)`, `v̇ = v Q(u,v)`. The unstable manifold
/// is the `u`-axis and the stable manifold the `v`-axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalChart {
    pub origin: [f64; 2],
    /// Model-space unit vector along the outgoing separatrix (local `u`).
    pub d_out: [f64; 2],
    /// Model-space unit vector along the incoming separatrix (local `v`).
    pub d_in: [f64; 2],
    pub p: BivariatePolynomial,
    pub q: BivariatePolynomial,
    pub n1: u32,
    pub n2: u32,
    pub lambda: f64,
    /// Set when the field had to be reversed to make `u` unstable.
    pub time_reversed: bool,
}

fn axis_unit(d: [f64; 2], what: &str) -> Result<[f64; 2]> {
    let norm = d[0].hypot(d[1]);
    if norm == 0.0 {
        return Err(Error::Geometry(format!("{what} direction is zero")));
    }
    let u = [d[0] / norm, d[1] / norm];
    for k in 0..2 {
        if u[k].abs() < AXIS_TOL && (u[1 - k].abs() - 1.0).abs() < AXIS_TOL {
            let mut out = [0.0; 2];
            out[1 - k] = u[1 - k].signum();
            return Ok(out);
        }
    }
    Err(Error::Geometry(format!(
        "{what} separatrix direction ({}, {}) is not axis-parallel",
        d[0], d[1]
    )))
}

/// Normalize the saddle at `point` whose incoming separatrix leaves the
/// point along `d_in` and outgoing separatrix along `d_out`.
pub fn normalize_saddle(
    field: &PlanarField,
    point: [f64; 2],
    d_in: [f64; 2],
    d_out: [f64; 2],
) -> Result<LocalChart> {
    let d_in = axis_unit(d_in, "incoming")?;
    let d_out = axis_unit(d_out, "outgoing")?;
    if (d_in[0] * d_out[0] + d_in[1] * d_out[1]).abs() > AXIS_TOL {
        return Err(Error::Geometry(
            "incoming and outgoing separatrices are not orthogonal".into(),
        ));
    }
    let (u, v) = (BivariatePolynomial::x(), BivariatePolynomial::y());
    let coord = |k: usize| {
        &(&BivariatePolynomial::constant(point[k]) + &u.scale(d_out[k])) + &v.scale(d_in[k])
    };
    let (xs, ys) = (coord(0), coord(1));
    let fx = field.dx.compose(&xs, &ys);
    let fy = field.dy.compose(&xs, &ys);
    let udot = &fx.scale(d_out[0]) + &fy.scale(d_out[1]);
    let vdot = &fx.scale(d_in[0]) + &fy.scale(d_in[1]);
    let mut p = udot.div_x(DIVISION_TOL).map_err(|_| {
        Error::Geometry(format!(
            "line through ({}, {}) along the incoming separatrix is not invariant",
            point[0], point[1]
        ))
    })?;
    let mut q = vdot.div_y(DIVISION_TOL).map_err(|_| {
        Error::Geometry(format!(
            "line through ({}, {}) along the outgoing separatrix is not invariant",
            point[0], point[1]
        ))
    })?;
    let (p0, q0) = (p.coefficient(0, 0), q.coefficient(0, 0));
    if p0.abs() < EIGEN_TOL || q0.abs() < EIGEN_TOL {
        return Err(Error::Degenerate(format!(
            "eigenvalues {p0} and {q0} at ({}, {})",
            point[0], point[1]
        )));
    }
    if p0 * q0 > 0.0 {
        return Err(Error::Degenerate(format!(
            "equilibrium at ({}, {}) is not a saddle (eigenvalues {p0}, {q0})",
            point[0], point[1]
        )));
    }
    let time_reversed = p0 < 0.0;
    if time_reversed {
        p = -&p;
        q = -&q;
    }
    let lambda = -q.coefficient(0, 0) / p.coefficient(0, 0);
    Ok(LocalChart {
        origin: point,
        d_out,
        d_in,
        p,
        q,
        n1: 0,
        n2: 0,
        lambda,
        time_reversed,
    })
}

impl LocalChart {
    pub fn to_model(&self, u: f64, v: f64) -> [f64; 2] {
        [
            self.origin[0] + u * self.d_out[0] + v * self.d_in[0],
            self.origin[1] + u * self.d_out[1] + v * self.d_in[1],
        ]
    }

    pub fn to_local(&self, pt: [f64; 2]) -> [f64; 2] {
        let d = [pt[0] - self.origin[0], pt[1] - self.origin[1]];
        [
            d[0] * self.d_out[0] + d[1] * self.d_out[1],
            d[0] * self.d_in[0] + d[1] * self.d_in[1],
        ]
    }

    /// Local field `(u P, v Q)`.
    pub fn local_field(&self, u: f64, v: f64) -> [f64; 2] {
        [u * self.p.eval(u, v), v * self.q.eval(u, v)]
    }

    /// Chart of the reversed field: the roles of the separatrices swap.
    pub fn reversed(&self) -> LocalChart {
        let swap = |poly: &BivariatePolynomial| {
            BivariatePolynomial::from_terms(poly.terms().map(|((i, j), c)| ((j, i), -c)))
        };
        LocalChart {
            origin: self.origin,
            d_out: self.d_in,
            d_in: self.d_out,
            p: swap(&self.q),
            q: swap(&self.p),
            n1: self.n2,
            n2: self.n1,
            lambda: 1.0 / self.lambda,
            time_reversed: !self.time_reversed,
        }
    }

    /// Sampled check that `P(u,0) > 0` on `[0, u_max]` and `Q(0,v) < 0` on
    /// `[0, v_max]`.
    pub fn check_footprint(&self, u_max: f64, v_max: f64) -> Result<()> {
        const SAMPLES: usize = 64;
        for k in 0..=SAMPLES {
            let t = k as f64 / SAMPLES as f64;
            let pu = self.p.eval(t * u_max, 0.0);
            if !(pu > 0.0) {
                return Err(Error::Chart(format!(
                    "P(u,0) = {pu} is not positive at u = {}",
                    t * u_max
                )));
            }
            let qv = self.q.eval(0.0, t * v_max);
            if !(qv < 0.0) {
                return Err(Error::Chart(format!(
                    "Q(0,v) = {qv} is not negative at v = {}",
                    t * v_max
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(l: f64) -> PlanarField {
        PlanarField::new(
            BivariatePolynomial::x(),
            BivariatePolynomial::monomial(-l, 0, 1),
        )
    }

    #[test]
    fn linear_saddle_identity_chart() {
        let c = normalize_saddle(&linear(2.0), [0.0, 0.0], [0.0, 1.0], [1.0, 0.0]).unwrap();
        assert_eq!(c.lambda, 2.0);
        assert_eq!(c.p, BivariatePolynomial::constant(1.0));
        assert_eq!(c.q, BivariatePolynomial::constant(-2.0));
        assert!(!c.time_reversed);
    }

    #[test]
    fn swapped_directions_reverse_time() {
        let c = normalize_saddle(&linear(2.0), [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]).unwrap();
        assert!(c.time_reversed);
        assert_eq!(c.lambda, 0.5);
    }

    #[test]
    fn geometry_errors() {
        let f = linear(2.0);
        assert!(matches!(
            normalize_saddle(&f, [0.0, 0.0], [1.0, 1.0], [1.0, 0.0]),
            Err(Error::Geometry(_))
        ));
        // x = 1 is not invariant for this field
        assert!(matches!(
            normalize_saddle(&f, [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]),
            Err(Error::Geometry(_))
        ));
        let node = PlanarField::new(BivariatePolynomial::x(), BivariatePolynomial::y());
        assert!(matches!(
            normalize_saddle(&node, [0.0, 0.0], [0.0, 1.0], [1.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
        let flat = PlanarField::new(BivariatePolynomial::x(), BivariatePolynomial::zero());
        assert!(matches!(
            normalize_saddle(&flat, [0.0, 0.0], [0.0, 1.0], [1.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn round_trip_coordinates() {
        let f = linear(2.0);
        let c = normalize_saddle(&f, [0.0, 0.0], [0.0, 1.0], [1.0, 0.0]).unwrap();
        let pt = c.to_model(0.25, 0.5);
        assert_eq!(c.to_local(pt), [0.25, 0.5]);
        let r = c.reversed();
        assert_eq!(r.lambda, 0.5);
        assert_eq!(r.q.coefficient(0, 0), -1.0);
        assert_eq!(r.p.coefficient(0, 0), 2.0);
    }
}
