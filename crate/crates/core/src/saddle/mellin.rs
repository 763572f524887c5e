//! Incomplete Mellin transform: the smooth solution of `x f̂' − α f̂ = f`.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::poly::horner;
use crate::quad::{integrate, QuadTolerance};

/// Distance from a nonnegative integer below which `α` is treated as a pole.
pub const MELLIN_POLE_BAND: f64 = 1e-6;

/// A function known both through Taylor coefficients at 0 and pointwise.
pub trait SeriesFunction {
    /// `f⁽ⁱ⁾(0)/i!` for `i = 0..N`.
    fn taylor(&self) -> &[f64];
    fn value(&self, x: f64) -> Result<f64>;
    /// Convergence radius of the Taylor series (infinite for entire functions).
    fn radius(&self) -> f64 {
        f64::INFINITY
    }
}

/// Adapter from coefficients plus a closure.
pub struct TaylorFunction<F> {
    pub coeffs: Vec<f64>,
    pub f: F,
    pub radius: f64,
}

impl<F: Fn(f64) -> f64> SeriesFunction for TaylorFunction<F> {
    fn taylor(&self) -> &[f64] {
        &self.coeffs
    }
    fn value(&self, x: f64) -> Result<f64> {
        Ok((self.f)(x))
    }
    fn radius(&self) -> f64 {
        self.radius
    }
}

struct Reflected<'a>(&'a dyn SeriesFunction, Vec<f64>);

impl SeriesFunction for Reflected<'_> {
    fn taylor(&self) -> &[f64] {
        &self.1
    }
    fn value(&self, x: f64) -> Result<f64> {
        self.0.value(-x)
    }
    fn radius(&self) -> f64 {
        self.0.radius()
    }
}

/// Taylor order used for the subtraction: one more than the minimum needed.
pub fn taylor_order(alpha: f64) -> usize {
    (alpha.ceil() + 2.0).max(0.0) as usize
}

pub fn check_pole(alpha: f64) -> Result<()> {
    let nearest = alpha.round();
    if nearest >= 0.0 && (alpha - nearest).abs() <= MELLIN_POLE_BAND {
        return Err(Error::Pole {
            exponent: alpha,
            pole: nearest,
            band: MELLIN_POLE_BAND,
        });
    }
    Ok(())
}

/// `f̂(α, x) = Σ_{i<k} f⁽ⁱ⁾(0)/(i!(i−α)) xⁱ + |x|^α ∫₀ˣ (f − T^{k−1}f)(s) |s|^{−α} ds/s`.
///
/// Near 0 the remainder integral is summed term by term from the series;
/// the rest uses adaptive quadrature.
pub fn mellin_hat(f: &dyn SeriesFunction, alpha: f64, x: f64, tol: &QuadTolerance) -> Result<f64> {
    check_pole(alpha)?;
    let c = f.taylor();
    if c.is_empty() {
        return Err(Error::Series("no Taylor coefficients supplied".into()));
    }
    if x == 0.0 {
        return Ok(-c[0] / alpha);
    }
    if x < 0.0 {
        let flipped: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(i, a)| if i % 2 == 1 { -a } else { *a })
            .collect();
        return mellin_hat(&Reflected(f, flipped), alpha, -x, tol);
    }
    let k = taylor_order(alpha);
    if c.len() < k + 8 {
        return Err(Error::Series(format!(
            "need more than {} Taylor coefficients for α = {alpha}",
            k + 8
        )));
    }
    let head: f64 = (0..k)
        .map(|i| c[i] * x.powi(i as i32) / (i as f64 - alpha))
        .sum();
    let x0 = x.min(0.25 * f.radius());
    let tail: f64 = (k..c.len())
        .map(|i| c[i] * x0.powf(i as f64 - alpha) / (i as f64 - alpha))
        .sum();
    let far = if x0 < x {
        let taylor = &c[..k];
        let failure = RefCell::new(None);
        let v = integrate(
            |s| match f.value(s) {
                Ok(fs) => (fs - horner(taylor, s)) * s.powf(-alpha - 1.0),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            x0,
            x,
            tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        v?
    } else {
        0.0
    };
    Ok(head + x.powf(alpha) * (tail + far))
}
