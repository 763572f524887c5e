use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{derivative, horner};

const JET_ZERO_TOL: f64 = 1e-14;

/// Curve `s ↦ (u(s), v(s))` in local coordinates with polynomial components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionCurve {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl SectionCurve {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Self {
        Self { u, v }
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        [horner(&self.u, s), horner(&self.v, s)]
    }

    fn component(&self, j: usize) -> &[f64] {
        if j == 1 {
            &self.u
        } else {
            &self.v
        }
    }

    /// `k`-th derivative at `s = 0` of component `j` (1 = u, 2 = v).
    pub fn jet(&self, j: usize, k: usize) -> f64 {
        let c = self.component(j).get(k).copied().unwrap_or(0.0);
        c * (1..=k).map(|i| i as f64).product::<f64>()
    }

    /// The curve reparametrized by `s ↦ c s`.
    pub fn rescaled(&self, c: f64) -> Self {
        let scale = |p: &[f64]| {
            p.iter()
                .enumerate()
                .map(|(k, a)| a * c.powi(k as i32))
                .collect()
        };
        Self {
            u: scale(&self.u),
            v: scale(&self.v),
        }
    }

    /// Coordinates swapped, for the reversed-field chart.
    pub fn swapped(&self) -> Self {
        Self {
            u: self.v.clone(),
            v: self.u.clone(),
        }
    }
}

/// Entry section `σ₁` transverse to the stable axis and exit section `σ₂`
/// transverse to the unstable axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionPair {
    pub entry: SectionCurve,
    pub exit: SectionCurve,
}

impl SectionPair {
    /// `σ₁(s) = (s, h_in)`, `σ₂(s) = (h_out, s)`.
    pub fn straight(h_in: f64, h_out: f64) -> Self {
        Self {
            entry: SectionCurve::new(vec![0.0, 1.0], vec![h_in]),
            exit: SectionCurve::new(vec![h_out], vec![0.0, 1.0]),
        }
    }

    /// `σ_ijk`: `k`-th derivative at 0 of component `j` of section `i`.
    pub fn sigma(&self, i: usize, j: usize, k: usize) -> f64 {
        match i {
            1 => self.entry.jet(j, k),
            _ => self.exit.jet(j, k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Section(m));
        if self.sigma(1, 1, 0).abs() > JET_ZERO_TOL || !(self.sigma(1, 2, 0) > 0.0) {
            return bad("entry section must start on the positive stable axis".into());
        }
        if self.sigma(2, 2, 0).abs() > JET_ZERO_TOL || !(self.sigma(2, 1, 0) > 0.0) {
            return bad("exit section must start on the positive unstable axis".into());
        }
        if !(self.sigma(1, 1, 1) > 0.0) {
            return bad(format!(
                "entry section must point into the quadrant (σ₁₁₁ = {})",
                self.sigma(1, 1, 1)
            ));
        }
        if !(self.sigma(2, 2, 1) > 0.0) {
            return bad(format!(
                "exit section must point into the quadrant (σ₂₂₁ = {})",
                self.sigma(2, 2, 1)
            ));
        }
        Ok(())
    }

    pub fn with_entry_rescaled(&self, c: f64) -> Self {
        Self {
            entry: self.entry.rescaled(c),
            exit: self.exit.clone(),
        }
    }

    /// Sections for the reversed-field chart.
    pub fn reversed(&self) -> Self {
        Self {
            entry: self.exit.swapped(),
            exit: self.entry.swapped(),
        }
    }

    /// Parameter `t` on the exit section with `v(t) = v`, by Newton iteration
    /// from the linear guess.
    pub fn exit_parameter(&self, v: f64) -> Result<f64> {
        let c = &self.exit.v;
        if c.len() <= 2 {
            return Ok(v / self.sigma(2, 2, 1));
        }
        let dc = derivative(c);
        let mut t = v / self.sigma(2, 2, 1);
        for _ in 0..60 {
            let f = horner(c, t) - v;
            let df = horner(&dc, t);
            if df <= 0.0 {
                break;
            }
            let step = f / df;
            t -= step;
            if step.abs() <= 1e-15 * t.abs().max(f64::MIN_POSITIVE) {
                return Ok(t);
            }
        }
        Err(Error::Section(format!(
            "could not invert the exit section at v = {v}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jets_of_straight_sections() {
        let s = SectionPair::straight(0.5, 0.5);
        assert_eq!(s.sigma(1, 1, 1), 1.0);
        assert_eq!(s.sigma(1, 2, 0), 0.5);
        assert_eq!(s.sigma(1, 1, 2), 0.0);
        assert_eq!(s.sigma(2, 1, 0), 0.5);
        assert_eq!(s.sigma(2, 2, 1), 1.0);
        s.validate().unwrap();
    }

    #[test]
    fn factorial_in_jets() {
        let c = SectionCurve::new(vec![0.0, 1.0, 3.0], vec![1.0]);
        assert_eq!(c.jet(1, 2), 6.0);
    }

    #[test]
    fn validation_rejects_wrong_orientation() {
        let mut s = SectionPair::straight(0.5, 0.5);
        s.entry.u = vec![0.0, -1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn curved_exit_inversion() {
        let s = SectionPair {
            entry: SectionCurve::new(vec![0.0, 1.0], vec![1.0]),
            exit: SectionCurve::new(vec![1.0], vec![0.0, 2.0, 1.0]),
        };
        let t = s.exit_parameter(0.3).unwrap();
        assert!((2.0 * t + t * t - 0.3).abs() < 1e-15);
    }
}
