//! Truncated univariate power series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 16;

/// `c₀ + c₁t + … + c_K t^K`, exact up to and including order `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    /// Series of order `order` from the given coefficients, padding with
    /// zeros or truncating as needed.
    pub fn new(coeffs: &[f64], order: usize) -> Self {
        let mut c = coeffs.to_vec();
        c.resize(order + 1, 0.0);
        Self { coeffs: c }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        Self::new(&[c], order)
    }

    /// The series `t`.
    pub fn variable(order: usize) -> Self {
        Self::new(&[0.0, 1.0], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(&self.coeffs, order.min(self.order()))
    }

    pub fn eval(&self, t: f64) -> f64 {
        crate::poly::horner(&self.coeffs, t)
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self {
            coeffs: (0..=k).map(|i| self.coeffs[i] + other.coeffs[i]).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self {
            coeffs: (0..=k).map(|i| self.coeffs[i] - other.coeffs[i]).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let coeffs = (0..=k)
            .map(|n| (0..=n).map(|i| self.coeffs[i] * other.coeffs[n - i]).sum())
            .collect();
        Self { coeffs }
    }

    pub fn derivative(&self) -> Self {
        let k = self.order();
        if k == 0 {
            return Self::constant(0.0, 0);
        }
        Self {
            coeffs: (1..=k).map(|i| self.coeffs[i] * i as f64).collect(),
        }
    }

    /// `f(t)/t` for a series whose constant term vanishes (checked against
    /// `tol`); the order drops by one.
    pub fn shift_down(&self, tol: f64) -> Result<Self> {
        if self.coeffs[0].abs() > tol {
            return Err(Error::Series(format!(
                "constant term {} does not vanish (tolerance {tol:e})",
                self.coeffs[0]
            )));
        }
        if self.order() == 0 {
            return Err(Error::Series("cannot divide an order-0 series by t".into()));
        }
        Ok(Self {
            coeffs: self.coeffs[1..].to_vec(),
        })
    }
}

/// `f/g`, requiring `g(0) ≠ 0`.
pub fn ps_div(f: &PowerSeries, g: &PowerSeries) -> Result<PowerSeries> {
    let g0 = g.coeffs[0];
    if g0 == 0.0 {
        return Err(Error::Series("division by a series with zero constant term".into()));
    }
    let k = f.order().min(g.order());
    let mut q = vec![0.0; k + 1];
    for n in 0..=k {
        let mut acc = f.coeffs[n];
        for i in 1..=n {
            acc -= g.coeffs[i] * q[n - i];
        }
        q[n] = acc / g0;
    }
    Ok(PowerSeries { coeffs: q })
}

pub fn ps_exp(f: &PowerSeries) -> PowerSeries {
    let k = f.order();
    let mut g = vec![0.0; k + 1];
    g[0] = f.coeffs[0].exp();
    for n in 1..=k {
        let acc: f64 = (1..=n).map(|j| j as f64 * f.coeffs[j] * g[n - j]).sum();
        g[n] = acc / n as f64;
    }
    PowerSeries { coeffs: g }
}

/// Natural logarithm, requiring a positive constant term.
pub fn ps_log(f: &PowerSeries) -> Result<PowerSeries> {
    let f0 = f.coeffs[0];
    if !(f0 > 0.0) {
        return Err(Error::Series(format!(
            "logarithm needs a positive constant term, got {f0}"
        )));
    }
    let k = f.order();
    let mut h = vec![0.0; k + 1];
    h[0] = f0.ln();
    for n in 1..=k {
        let acc: f64 = (1..n).map(|j| j as f64 * h[j] * f.coeffs[n - j]).sum();
        h[n] = (f.coeffs[n] - acc / n as f64) / f0;
    }
    Ok(PowerSeries { coeffs: h })
}

/// Antiderivative with zero constant term; the order rises by one.
pub fn ps_integrate(f: &PowerSeries) -> PowerSeries {
    let mut c = vec![0.0; f.order() + 2];
    for (i, &a) in f.coeffs.iter().enumerate() {
        c[i + 1] = a / (i + 1) as f64;
    }
    PowerSeries { coeffs: c }
}

/// Generalized binomial coefficient `α(α−1)…(α−k+1)/k!`.
pub fn gbt_coefficient(alpha: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (alpha - i as f64) / (i + 1) as f64)
}

/// Root-test estimate of the convergence radius from the upper half of the
/// coefficients. Returns infinity when they all vanish.
pub fn radius_estimate(coeffs: &[f64]) -> f64 {
    let n = coeffs.len();
    let mut r = f64::INFINITY;
    for (k, &c) in coeffs.iter().enumerate().skip((n / 2).max(1)) {
        if c != 0.0 {
            r = r.min(c.abs().powf(-1.0 / k as f64));
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn geometric_series() {
        let one = PowerSeries::constant(1.0, 3);
        let g = PowerSeries::new(&[1.0, -1.0], 3);
        close(ps_div(&one, &g).unwrap().coeffs(), &[1.0, 1.0, 1.0, 1.0], 0.0);
    }

    #[test]
    fn t_over_one_plus_t() {
        let t = PowerSeries::variable(2);
        let g = PowerSeries::new(&[1.0, 1.0], 2);
        close(ps_div(&t, &g).unwrap().coeffs(), &[0.0, 1.0, -1.0], 0.0);
    }

    #[test]
    fn self_division_is_one() {
        let f = PowerSeries::new(&[2.0, -1.0, 0.5, 3.0], 3);
        close(ps_div(&f, &f).unwrap().coeffs(), &[1.0, 0.0, 0.0, 0.0], 1e-15);
        assert!(ps_div(&f, &PowerSeries::variable(3)).is_err());
    }

    #[test]
    fn exp_log_integrate() {
        let e = ps_exp(&PowerSeries::variable(3));
        close(e.coeffs(), &[1.0, 1.0, 0.5, 1.0 / 6.0], 1e-16);
        let i = ps_integrate(&PowerSeries::new(&[1.0, 2.0], 1));
        close(i.coeffs(), &[0.0, 1.0, 1.0], 0.0);
        let f = PowerSeries::new(&[0.0, 1.0, 1.0], 6);
        let back = ps_log(&ps_exp(&f)).unwrap();
        close(back.coeffs(), f.coeffs(), 1e-15);
        assert!(ps_log(&f).is_err());
    }

    #[test]
    fn truncation_order_bookkeeping() {
        let a = PowerSeries::constant(1.0, 5);
        let b = PowerSeries::constant(1.0, 3);
        assert_eq!(a.mul(&b).order(), 3);
        assert_eq!(a.add(&b).order(), 3);
        assert_eq!(ps_div(&a, &b).unwrap().order(), 3);
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(gbt_coefficient(0.5, 2), -0.125);
        assert_eq!(gbt_coefficient(3.0, 2), 3.0);
        assert_eq!(gbt_coefficient(-1.0, 3), -1.0);
        assert_eq!(gbt_coefficient(0.7, 0), 1.0);
        let inv = ps_div(
            &PowerSeries::constant(1.0, 3),
            &PowerSeries::new(&[1.0, 1.0], 3),
        )
        .unwrap();
        assert_eq!(inv.coeff(3), gbt_coefficient(-1.0, 3));
    }

    #[test]
    fn radius_of_geometric_series() {
        let c: Vec<f64> = (0..40).map(|k| 2f64.powi(k)).collect();
        assert!((radius_estimate(&c) - 0.5).abs() < 1e-12);
        assert!(radius_estimate(&[1.0, 2.0, 0.0, 0.0]).is_infinite());
    }
}
