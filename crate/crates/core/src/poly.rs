use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial in two variables with real coefficients, stored sparsely by
/// exponent pair `(i, j)` for the monomial `x^i y^j`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BivariatePolynomial {
    terms: BTreeMap<(u32, u32), f64>,
}

impl BivariatePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn x() -> Self {
        Self::monomial(1.0, 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(1.0, 0, 1)
    }

    pub fn monomial(c: f64, i: u32, j: u32) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), f64)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for ((i, j), c) in terms {
            p.add_term(i, j, c);
        }
        p
    }

    fn add_term(&mut self, i: u32, j: u32, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry((i, j)).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&(i, j));
        }
    }

    pub fn coefficient(&self, i: u32, j: u32) -> f64 {
        self.terms.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(i, j)| i + j).max().unwrap_or(0)
    }

    /// Constant value if the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&(0, 0)).copied(),
            _ => None,
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        // Horner in y for each power of x would need regrouping; the sparse
        // sums here are short enough that direct powers are fine.
        self.terms
            .iter()
            .map(|(&(i, j), &c)| c * x.powi(i as i32) * y.powi(j as i32))
            .sum()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_terms(self.terms().map(|(e, c)| (e, c * k)))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut result = Self::constant(1.0);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = &result * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn deriv_x(&self) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|&((i, _), _)| i > 0)
                .map(|((i, j), c)| ((i - 1, j), c * i as f64)),
        )
    }

    pub fn deriv_y(&self) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|&((_, j), _)| j > 0)
                .map(|((i, j), c)| ((i, j - 1), c * j as f64)),
        )
    }

    /// Substitute polynomials for both variables.
    pub fn compose(&self, xs: &Self, ys: &Self) -> Self {
        let dx = self.terms.keys().map(|k| k.0).max().unwrap_or(0);
        let dy = self.terms.keys().map(|k| k.1).max().unwrap_or(0);
        let xp: Vec<Self> = (0..=dx).map(|k| xs.pow(k)).collect();
        let yp: Vec<Self> = (0..=dy).map(|k| ys.pow(k)).collect();
        let mut out = Self::zero();
        for (&(i, j), &c) in &self.terms {
            let t = (&xp[i as usize] * &yp[j as usize]).scale(c);
            out = &out + &t;
        }
        out
    }

    /// Exact division by `x`. Terms free of `x` must be negligible relative to
    /// the largest coefficient (`rel_tol`); they are dropped.
    pub fn div_x(&self, rel_tol: f64) -> Result<Self> {
        self.div_var(true, rel_tol)
    }

    /// Exact division by `y`, see [`div_x`](Self::div_x).
    pub fn div_y(&self, rel_tol: f64) -> Result<Self> {
        self.div_var(false, rel_tol)
    }

    fn div_var(&self, by_x: bool, rel_tol: f64) -> Result<Self> {
        let scale = self.max_abs_coefficient().max(1.0);
        let mut out = Self::zero();
        for ((i, j), c) in self.terms() {
            let k = if by_x { i } else { j };
            if k == 0 {
                if c.abs() > rel_tol * scale {
                    let var = if by_x { "x" } else { "y" };
                    return Err(Error::Geometry(format!(
                        "polynomial is not divisible by {var} (term x^{i} y^{j} with coefficient {c})"
                    )));
                }
                continue;
            }
            if by_x {
                out.add_term(i - 1, j, c);
            } else {
                out.add_term(i, j - 1, c);
            }
        }
        Ok(out)
    }

    /// Coefficients of `t ↦ p(0, t)` in increasing degree.
    pub fn restrict_x_zero(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.degree() as usize + 1];
        for ((i, j), c) in self.terms() {
            if i == 0 {
                v[j as usize] += c;
            }
        }
        v
    }

    /// Coefficients of `t ↦ p(t, 0)` in increasing degree.
    pub fn restrict_y_zero(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.degree() as usize + 1];
        for ((i, j), c) in self.terms() {
            if j == 0 {
                v[i as usize] += c;
            }
        }
        v
    }
}

impl Add for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn add(self, rhs: Self) -> BivariatePolynomial {
        let mut out = self.clone();
        for ((i, j), c) in rhs.terms() {
            out.add_term(i, j, c);
        }
        out
    }
}

impl Sub for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn sub(self, rhs: Self) -> BivariatePolynomial {
        let mut out = self.clone();
        for ((i, j), c) in rhs.terms() {
            out.add_term(i, j, -c);
        }
        out
    }
}

impl Mul for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn mul(self, rhs: Self) -> BivariatePolynomial {
        let mut out = BivariatePolynomial::zero();
        for ((i1, j1), c1) in self.terms() {
            for ((i2, j2), c2) in rhs.terms() {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn neg(self) -> BivariatePolynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for BivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(i, j), &c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            match i {
                0 => {}
                1 => write!(f, "*x")?,
                _ => write!(f, "*x^{i}")?,
            }
            match j {
                0 => {}
                1 => write!(f, "*y")?,
                _ => write!(f, "*y^{j}")?,
            }
        }
        Ok(())
    }
}

/// Evaluate a univariate polynomial given by increasing-degree coefficients.
pub fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Coefficients of the derivative of a univariate polynomial.
pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}
