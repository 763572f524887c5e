//! Composition and inversion of Dulac-type maps at second order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{classify, DulacCase, DulacExpansion, Interval, NextTerm, AT_ONE_BAND};

/// Which second-order rule governs `d₂ ∘ d₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositionCase {
    /// Only the leading coefficient is available.
    LeadingOnly,
    AboveAbove,
    BelowBelow,
    /// `λ₁ > 1 > λ₂`; the next term depends on `λ₁λ₂` versus 1.
    AboveBelow,
    BelowAbove,
    /// At least one input already carries a general monomial next term.
    Monomial,
}

pub fn composition_case(d1: &DulacExpansion, d2: &DulacExpansion) -> CompositionCase {
    use NextTerm::*;
    if d1.case == DulacCase::AtOne || d2.case == DulacCase::AtOne {
        return CompositionCase::LeadingOnly;
    }
    match (d1.next, d2.next) {
        (LeadingOnly, _) | (_, LeadingOnly) | (Compensated { .. }, _) | (_, Compensated { .. }) => {
            CompositionCase::LeadingOnly
        }
        (Linear { .. }, Linear { .. }) => CompositionCase::AboveAbove,
        (SelfPower { .. }, SelfPower { .. }) => CompositionCase::BelowBelow,
        (Linear { .. }, SelfPower { .. }) => CompositionCase::AboveBelow,
        (SelfPower { .. }, Linear { .. }) => CompositionCase::BelowAbove,
        _ => CompositionCase::Monomial,
    }
}

/// Leading coefficient `Υ₀ = a₁^{λ₂} a₂` of `d₂ ∘ d₁`.
pub fn upsilon0(d1: &DulacExpansion, d2: &DulacExpansion) -> f64 {
    d1.delta00.powf(d2.lambda) * d2.delta00
}

/// `d₂ ∘ d₁` (apply `d1` first).
///
/// Writing `dᵢ(s) = s^{λᵢ}(aᵢ + cᵢ s^{eᵢ} + …)`, the composition carries the
/// two candidate next terms `λ₂a₁^{λ₂−1}a₂c₁ s^{e₁}` and `a₁^{λ₂+e₂}c₂ s^{λ₁e₂}`.
/// The smaller exponent wins; equal exponents add, except for the resonance
/// `e₁ = 1 = λ₁λ₂` which keeps both coefficients behind the compensator.
pub fn compose_pair(d1: &DulacExpansion, d2: &DulacExpansion) -> DulacExpansion {
    let lambda = d1.lambda * d2.lambda;
    let lead = upsilon0(d1, d2);
    let case = composition_case(d1, d2);
    let leading_only = || {
        let hi = d1.leading_ell_hi().min(d1.lambda * d2.leading_ell_hi());
        DulacExpansion::composite(lambda, lead, NextTerm::LeadingOnly, Interval::new(0.0, hi))
    };
    if case == CompositionCase::LeadingOnly {
        return leading_only();
    }
    let Some([(x1, from1), (x2, from2)]) = second_order_candidates(d1, d2) else {
        return leading_only();
    };
    let l1 = d1.lambda;

    let mut hi = d1.ell.hi.min(l1 * d2.ell.hi).min(2.0 * x1.min(x2)).min(x1 + x2);
    let resonant = case == CompositionCase::AboveBelow && (lambda - 1.0).abs() <= AT_ONE_BAND;
    let next = if resonant {
        NextTerm::Compensated {
            linear: from1,
            self_power: from2,
        }
    } else if (x1 - x2).abs() <= AT_ONE_BAND * x1.max(1.0) {
        monomial(lambda, x1, from1 + from2)
    } else if x1 < x2 {
        hi = hi.min(x2);
        monomial(lambda, x1, from1)
    } else {
        hi = hi.min(x1);
        monomial(lambda, x2, from2)
    };
    let lo = if resonant { 1.0 } else { x1.min(x2) };
    DulacExpansion::composite(lambda, lead, next, Interval::new(lo, hi))
}

/// The two candidate next terms of `d₂ ∘ d₁` as `(exponent, coefficient)`:
/// the one carried over from `d₁` and the one produced by `d₂`.
pub fn second_order_candidates(d1: &DulacExpansion, d2: &DulacExpansion) -> Option<[(f64, f64); 2]> {
    let (e1, c1) = d1.second_term()?;
    let (e2, c2) = d2.second_term()?;
    let (a1, a2, l1, l2) = (d1.delta00, d2.delta00, d1.lambda, d2.lambda);
    Some([
        (e1, l2 * a1.powf(l2 - 1.0) * a2 * c1),
        (l1 * e2, a1.powf(l2 + e2) * c2),
    ])
}

/// Tag a monomial next term with the named variant when it matches one.
fn monomial(lambda: f64, exponent: f64, coefficient: f64) -> NextTerm {
    if exponent == 1.0 {
        NextTerm::Linear { coefficient }
    } else if exponent == lambda {
        NextTerm::SelfPower { coefficient }
    } else {
        NextTerm::Monomial {
            exponent,
            coefficient,
        }
    }
}

/// Fold `compose_pair` over a corner list: `d_n ∘ … ∘ d_1`.
pub fn compose_chain(ds: &[DulacExpansion]) -> Option<DulacExpansion> {
    let (first, rest) = ds.split_first()?;
    Some(rest.iter().fold(first.clone(), |acc, d| compose_pair(&acc, d)))
}

/// The inverse map, with `ρ = 1/λ`, `Ω₀₀ = Δ₀₀^{−ρ}` and
/// `Ω₁₀ = −ρΔ₀₀^{−(2+ρ)}Δ₀₁` below one, `Ω₀₁ = −ρΔ₀₀^{−(1+2ρ)}Δ₁₀` above one.
pub fn inverse_dulac(d: &DulacExpansion) -> Result<DulacExpansion> {
    let rho = 1.0 / d.lambda;
    let a = d.delta00;
    let omega00 = a.powf(-rho);
    match classify(d.lambda) {
        DulacCase::AtOne => Err(Error::Invalid(format!(
            "inverse at λ = {} is inside the resonant band",
            d.lambda
        ))),
        DulacCase::BelowOne => {
            let omega10 = match d.next {
                NextTerm::SelfPower { .. } => d.delta01().map(|d01| -rho * a.powf(-(2.0 + rho)) * d01),
                _ => None,
            };
            Ok(DulacExpansion::from_coefficients(rho, omega00, omega10, None))
        }
        DulacCase::AboveOne => {
            let omega01 = match d.next {
                NextTerm::Linear { .. } => d.delta10().map(|d10| -rho * a.powf(-(1.0 + 2.0 * rho)) * d10),
                _ => None,
            };
            Ok(DulacExpansion::from_coefficients(rho, omega00, None, omega01))
        }
    }
}
