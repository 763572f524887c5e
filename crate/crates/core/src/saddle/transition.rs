//! The auxiliary functions `L₁, L₂` (exponentials of regularized integrals
//! along the separatrices) and `M₁, M₂` built from them.

use crate::error::{Error, Result};
use crate::poly::horner;
use crate::quad::{integrate, QuadTolerance};
use crate::saddle::chart::LocalChart;
use crate::saddle::mellin::SeriesFunction;
use crate::series::{ps_div, ps_exp, ps_integrate, radius_estimate, PowerSeries, DEFAULT_ORDER};

/// Internal truncation order for the series part of the evaluation.
pub const SERIES_EVAL_ORDER: usize = 48;
/// Allowed residual of the constant term that must cancel in the integrand.
pub const CANCELLATION_TOL: f64 = 1e-9;

/// `L₁` lives on the stable axis (`u = 0`), `L₂` on the unstable axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Stable,
    Unstable,
}

impl Axis {
    pub fn from_index(which: usize) -> Result<Self> {
        match which {
            1 => Ok(Axis::Stable),
            2 => Ok(Axis::Unstable),
            _ => Err(Error::Index(format!("transition index {which} is not 1 or 2"))),
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// `L` and `M` for one axis of a chart.
///
/// For the stable axis, with `p(t) = P(0,t)`, `q(t) = Q(0,t)`:
/// `L₁(t) = exp ∫₀ᵗ (p/q + 1/λ) dy/y` and `M₁ = L₁ (Pₓ q − p Qₓ)/q²`.
/// The unstable axis swaps the roles of `P` and `Q` and uses `λ`.
#[derive(Debug, Clone)]
pub struct Transition {
    pub axis: Axis,
    num: Vec<f64>,
    den: Vec<f64>,
    cross: Vec<f64>,
    shift: f64,
    log_l: PowerSeries,
    l: PowerSeries,
    m: PowerSeries,
    radius: f64,
    tol: QuadTolerance,
}

impl Transition {
    pub fn new(chart: &LocalChart, axis: Axis, tol: QuadTolerance) -> Result<Self> {
        let (num, den, dnum, dden, shift) = match axis {
            Axis::Stable => (
                chart.p.restrict_x_zero(),
                chart.q.restrict_x_zero(),
                chart.p.deriv_x().restrict_x_zero(),
                chart.q.deriv_x().restrict_x_zero(),
                1.0 / chart.lambda,
            ),
            Axis::Unstable => (
                chart.q.restrict_y_zero(),
                chart.p.restrict_y_zero(),
                chart.q.deriv_y().restrict_y_zero(),
                chart.p.deriv_y().restrict_y_zero(),
                chart.lambda,
            ),
        };
        let cross = poly_sub(&poly_mul(&dnum, &den), &poly_mul(&num, &dden));
        let n = SERIES_EVAL_ORDER;
        let den_s = PowerSeries::new(&den, n);
        let ratio = ps_div(&PowerSeries::new(&num, n), &den_s)?;
        let g = ratio.add(&PowerSeries::constant(shift, n));
        let residual = g.coeff(0);
        if residual.abs() > CANCELLATION_TOL * shift.abs().max(1.0) {
            return Err(Error::Chart(format!(
                "constant term {residual:e} of the transition integrand does not cancel; λ is inconsistent with the chart"
            )));
        }
        let log_l = ps_integrate(&g.shift_down(f64::INFINITY)?);
        let l = ps_exp(&log_l);
        let factor = ps_div(&PowerSeries::new(&cross, n), &den_s.mul(&den_s))?;
        let m = l.mul(&factor);
        let radius = radius_estimate(ratio.coeffs())
            .min(radius_estimate(factor.coeffs()))
            .min(radius_estimate(m.coeffs()));
        Ok(Self {
            axis,
            num,
            den,
            cross,
            shift,
            log_l,
            l,
            m,
            radius,
            tol,
        })
    }

    /// `p/q` on the stable axis, `q/p` on the unstable one.
    pub fn ratio(&self, t: f64) -> f64 {
        horner(&self.num, t) / horner(&self.den, t)
    }

    /// Convergence radius estimate shared by the series of `L` and `M`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn split(&self, t: f64) -> f64 {
        t.signum() * t.abs().min(0.25 * self.radius)
    }

    pub fn log_value(&self, t: f64) -> Result<f64> {
        let t0 = self.split(t);
        let mut v = self.log_l.eval(t0);
        if t0 != t {
            let integrand = |y: f64| (self.ratio(y) + self.shift) / y;
            v += integrate(integrand, t0, t, &self.tol)?;
        }
        Ok(v)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.log_value(t)?.exp())
    }

    pub fn m_value(&self, t: f64) -> Result<f64> {
        let d = horner(&self.den, t);
        Ok(self.value(t)? * horner(&self.cross, t) / (d * d))
    }

    /// Taylor series of `L` at 0.
    pub fn l_series(&self, order: usize) -> PowerSeries {
        self.l.truncate(order)
    }

    pub fn m_series(&self, order: usize) -> PowerSeries {
        self.m.truncate(order)
    }
}

impl SeriesFunction for Transition {
    fn taylor(&self) -> &[f64] {
        self.m.coeffs()
    }
    fn value(&self, x: f64) -> Result<f64> {
        self.m_value(x)
    }
    fn radius(&self) -> f64 {
        self.radius
    }
}

/// Value of `L_which` at `u` together with its Taylor series at 0.
pub fn transition_l(
    chart: &LocalChart,
    which: usize,
    u: f64,
    tol: &QuadTolerance,
) -> Result<(f64, PowerSeries)> {
    let t = Transition::new(chart, Axis::from_index(which)?, *tol)?;
    Ok((t.value(u)?, t.l_series(DEFAULT_ORDER)))
}

/// Pointwise `L` by quadrature only; an independent check on the split scheme.
pub fn transition_l_quadrature(chart: &LocalChart, which: usize, u: f64, tol: &QuadTolerance) -> Result<f64> {
    let t = Transition::new(chart, Axis::from_index(which)?, *tol)?;
    // Kronrod nodes never touch the endpoint, so the removable singularity is not sampled
    let v = integrate(|y| (t.ratio(y) + t.shift) / y, 0.0, u, tol)?;
    Ok(v.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PlanarField;
    use crate::poly::BivariatePolynomial as BP;
    use crate::saddle::chart::normalize_saddle;

    fn chart_of(dx: BP, dy: BP) -> LocalChart {
        normalize_saddle(&PlanarField::new(dx, dy), [0.0, 0.0], [0.0, 1.0], [1.0, 0.0]).unwrap()
    }

    #[test]
    fn linear_saddle_has_trivial_transitions() {
        let c = chart_of(BP::x(), BP::monomial(-2.0, 0, 1));
        for which in [1, 2] {
            let (v, s) = transition_l(&c, which, 0.7, &QuadTolerance::default()).unwrap();
            assert_eq!(v, 1.0);
            assert_eq!(s.coeff(0), 1.0);
            assert!(s.coeffs()[1..].iter().all(|&a| a == 0.0));
        }
    }

    #[test]
    fn series_and_quadrature_agree() {
        // P = 1, Q = −λ(1 + y) gives L₁(u) = (1 + u)^{1/λ}
        let lambda = 1.7;
        let c = chart_of(
            BP::x(),
            &BP::monomial(-lambda, 0, 1) + &BP::monomial(-lambda, 0, 2),
        );
        let tol = QuadTolerance::default();
        for u in [0.05, 0.3, 0.6, 0.95] {
            let (a, _) = transition_l(&c, 1, u, &tol).unwrap();
            let b = transition_l_quadrature(&c, 1, u, &tol).unwrap();
            let exact = (1.0 + u).powf(1.0 / lambda);
            assert!((a - b).abs() < 1e-10, "{u}: {a} vs {b}");
            assert!((a - exact).abs() < 1e-10, "{u}: {a} vs {exact}");
        }
    }

    #[test]
    fn inconsistent_lambda_is_rejected() {
        let mut c = chart_of(BP::x(), BP::monomial(-2.0, 0, 1));
        c.lambda = 3.0;
        assert!(matches!(
            Transition::new(&c, Axis::Stable, QuadTolerance::default()),
            Err(Error::Chart(_))
        ));
    }
}
