//! Dulac-type expansions `s^λ (Δ₀₀ + next term + remainder)`.

use serde::{Deserialize, Serialize};

use crate::calculus::compensator;

/// Half-width of the band around `λ = 1` treated as resonant.
pub const AT_ONE_BAND: f64 = 1e-9;

/// Open interval of admissible remainder orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_nonempty(&self) -> bool {
        self.lo < self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DulacCase {
    BelowOne,
    AboveOne,
    AtOne,
}

pub fn classify(lambda: f64) -> DulacCase {
    if (lambda - 1.0).abs() <= AT_ONE_BAND {
        DulacCase::AtOne
    } else if lambda < 1.0 {
        DulacCase::BelowOne
    } else {
        DulacCase::AboveOne
    }
}

/// The term following `Δ₀₀` inside the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NextTerm {
    /// `c · s`
    Linear { coefficient: f64 },
    /// `c · s^λ`
    SelfPower { coefficient: f64 },
    /// `(linear + (1 + α ω(s; α)) self_power) · s` with `α = 1 − λ`;
    /// depends on `s` through the compensator.
    Compensated { linear: f64, self_power: f64 },
    /// `c · s^e` for an exponent not tied to `λ` or 1.
    Monomial { exponent: f64, coefficient: f64 },
    LeadingOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DulacExpansion {
    pub lambda: f64,
    pub delta00: f64,
    pub case: DulacCase,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub next: NextTerm,
    pub ell: Interval,
}

/// `Δ₁₀ = λ Δ₀₀ S₁`
pub fn delta10_from(lambda: f64, delta00: f64, s1: f64) -> f64 {
    lambda * delta00 * s1
}

/// `Δ₀₁ = −Δ₀₀² S₂`
pub fn delta01_from(delta00: f64, s2: f64) -> f64 {
    -delta00 * delta00 * s2
}

/// Remainder-order interval of a single corner map.
pub fn corner_ell(lambda: f64) -> Interval {
    match classify(lambda) {
        DulacCase::BelowOne => Interval::new(lambda, (2.0 * lambda).min(1.0)),
        DulacCase::AboveOne => Interval::new(1.0, lambda.min(2.0)),
        DulacCase::AtOne => Interval::new(1.0, 2.0),
    }
}

impl DulacExpansion {
    /// Corner map from its hyperbolicity ratio, `Δ₀₀` and the second-order
    /// quantities `S₁`, `S₂` (either may be unavailable near a pole).
    pub fn from_saddle(lambda: f64, delta00: f64, s1: Option<f64>, s2: Option<f64>) -> Self {
        let case = classify(lambda);
        let next = match case {
            DulacCase::BelowOne => s2.map_or(NextTerm::LeadingOnly, |s2| NextTerm::SelfPower {
                coefficient: delta01_from(delta00, s2),
            }),
            DulacCase::AboveOne => s1.map_or(NextTerm::LeadingOnly, |s1| NextTerm::Linear {
                coefficient: delta10_from(lambda, delta00, s1),
            }),
            DulacCase::AtOne => match (s1, s2) {
                (Some(s1), Some(s2)) => NextTerm::Compensated {
                    linear: delta10_from(lambda, delta00, s1),
                    self_power: delta01_from(delta00, s2),
                },
                _ => NextTerm::LeadingOnly,
            },
        };
        let ell = if next == NextTerm::LeadingOnly {
            Interval::new(0.0, lambda.min(1.0))
        } else {
            corner_ell(lambda)
        };
        Self {
            lambda,
            delta00,
            case,
            s1,
            s2,
            next,
            ell,
        }
    }

    /// Corner map given directly by its Dulac coefficients.
    pub fn from_coefficients(
        lambda: f64,
        delta00: f64,
        delta10: Option<f64>,
        delta01: Option<f64>,
    ) -> Self {
        let s1 = delta10.map(|d| d / (lambda * delta00));
        let s2 = delta01.map(|d| -d / (delta00 * delta00));
        Self::from_saddle(lambda, delta00, s1, s2)
    }

    /// Dulac-type map produced by composition or inversion.
    pub fn composite(lambda: f64, delta00: f64, next: NextTerm, ell: Interval) -> Self {
        Self {
            lambda,
            delta00,
            case: classify(lambda),
            s1: None,
            s2: None,
            next,
            ell,
        }
    }

    pub fn delta10(&self) -> Option<f64> {
        if let Some(s1) = self.s1 {
            return Some(delta10_from(self.lambda, self.delta00, s1));
        }
        match self.next {
            NextTerm::Linear { coefficient } => Some(coefficient),
            NextTerm::Compensated { linear, .. } => Some(linear),
            _ => None,
        }
    }

    pub fn delta01(&self) -> Option<f64> {
        if let Some(s2) = self.s2 {
            return Some(delta01_from(self.delta00, s2));
        }
        match self.next {
            NextTerm::SelfPower { coefficient } => Some(coefficient),
            NextTerm::Compensated { self_power, .. } => Some(self_power),
            _ => None,
        }
    }

    /// `S₁`, read back from `Δ₁₀` when not stored.
    pub fn s1_value(&self) -> Option<f64> {
        self.s1
            .or_else(|| self.delta10().map(|d| d / (self.lambda * self.delta00)))
    }

    /// `S₂`, read back from `Δ₀₁` when not stored.
    pub fn s2_value(&self) -> Option<f64> {
        self.s2
            .or_else(|| self.delta01().map(|d| -d / (self.delta00 * self.delta00)))
    }

    /// Upper edge of the remainder order when only the leading term is kept.
    pub fn leading_ell_hi(&self) -> f64 {
        match self.next {
            NextTerm::LeadingOnly => self.ell.hi,
            NextTerm::Linear { .. } | NextTerm::Compensated { .. } => 1.0,
            NextTerm::SelfPower { .. } => self.lambda,
            NextTerm::Monomial { exponent, .. } => exponent,
        }
    }

    /// Exponent and coefficient of the next term when it is a single monomial.
    pub fn second_term(&self) -> Option<(f64, f64)> {
        match self.next {
            NextTerm::Linear { coefficient } => Some((1.0, coefficient)),
            NextTerm::SelfPower { coefficient } => Some((self.lambda, coefficient)),
            NextTerm::Monomial {
                exponent,
                coefficient,
            } => Some((exponent, coefficient)),
            NextTerm::Compensated { .. } | NextTerm::LeadingOnly => None,
        }
    }

    /// The bracket `Δ₀₀ + next(s)` without the remainder.
    pub fn bracket(&self, s: f64) -> f64 {
        let next = match self.next {
            NextTerm::Linear { coefficient } => coefficient * s,
            NextTerm::SelfPower { coefficient } => coefficient * s.powf(self.lambda),
            NextTerm::Monomial {
                exponent,
                coefficient,
            } => coefficient * s.powf(exponent),
            NextTerm::Compensated { linear, self_power } => {
                let alpha = 1.0 - self.lambda;
                (linear + (1.0 + alpha * compensator(s, alpha)) * self_power) * s
            }
            NextTerm::LeadingOnly => 0.0,
        };
        self.delta00 + next
    }

    /// Two-term truncation `s^λ (Δ₀₀ + next(s))`.
    pub fn eval_truncated(&self, s: f64) -> f64 {
        s.powf(self.lambda) * self.bracket(s)
    }
}
