use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{instantiate, parse_expression, Expression};
use crate::poly::BivariatePolynomial;

/// Polynomial vector field `(ẋ, ẏ)` at a fixed parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarField {
    pub dx: BivariatePolynomial,
    pub dy: BivariatePolynomial,
}

impl PlanarField {
    pub fn new(dx: BivariatePolynomial, dy: BivariatePolynomial) -> Self {
        Self { dx, dy }
    }

    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        [self.dx.eval(p[0], p[1]), self.dy.eval(p[0], p[1])]
    }

    pub fn negated(&self) -> Self {
        Self {
            dx: -&self.dx,
            dy: -&self.dy,
        }
    }
}

/// Vector field whose components are expressions in named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricField {
    pub params: Vec<String>,
    pub dot_x: Expression,
    pub dot_y: Expression,
}

impl ParametricField {
    pub fn parse(params: &[String], dot_x: &str, dot_y: &str) -> Result<Self> {
        let names: Vec<&str> = params.iter().map(String::as_str).collect();
        Ok(Self {
            params: params.to_vec(),
            dot_x: parse_expression(dot_x, &names)?,
            dot_y: parse_expression(dot_y, &names)?,
        })
    }

    /// Instantiate at a parameter vector given in declaration order.
    pub fn at(&self, mu: &[f64]) -> Result<PlanarField> {
        if mu.len() != self.params.len() {
            return Err(Error::Invalid(format!(
                "expected {} parameter values, got {}",
                self.params.len(),
                mu.len()
            )));
        }
        let binding: HashMap<String, f64> =
            self.params.iter().cloned().zip(mu.iter().copied()).collect();
        self.instantiate(&binding)
    }

    pub fn instantiate(&self, binding: &HashMap<String, f64>) -> Result<PlanarField> {
        Ok(PlanarField {
            dx: instantiate(&self.dot_x, binding)?,
            dy: instantiate(&self.dot_y, binding)?,
        })
    }
}
