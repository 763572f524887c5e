//! Return-map and displacement-map expansions of a polycycle.

use serde::{Deserialize, Serialize};

use crate::calculus::compensator;
use crate::calculus::products::{a_product, a_star, lambda_product, BlockPattern, PolycycleSpec};
use crate::error::{Error, Result};
use crate::expansion::{Interval, AT_ONE_BAND};

/// Second term of `R(s) = s^r (A₁,ₙ + …)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReturnNext {
    /// `𝒜 s^{Λ₀,ₘ}`
    A { exponent: f64, value: f64 },
    /// `ℬ s`
    B { value: f64 },
    /// `𝒞 s^r`
    C { value: f64 },
    /// `(ℬ + (1 + αω(s;α))𝒞) s` with `α = 1 − r`.
    AOmega { b: f64, c: f64, alpha: f64 },
    LeadingOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnExpansion {
    pub r: f64,
    pub a1n: f64,
    pub pattern: String,
    pub block: BlockPattern,
    pub next: ReturnNext,
    pub ell: Interval,
    /// Why only the leading term was emitted, when that happens.
    pub flag: Option<String>,
}

impl ReturnExpansion {
    pub fn bracket(&self, s: f64) -> f64 {
        let next = match self.next {
            ReturnNext::A { exponent, value } => value * s.powf(exponent),
            ReturnNext::B { value } => value * s,
            ReturnNext::C { value } => value * s.powf(self.r),
            ReturnNext::AOmega { b, c, alpha } => (b + (1.0 + alpha * compensator(s, alpha)) * c) * s,
            ReturnNext::LeadingOnly => 0.0,
        };
        self.a1n + next
    }

    pub fn eval_truncated(&self, s: f64) -> f64 {
        s.powf(self.r) * self.bracket(s)
    }

    /// `𝒜` when the expansion is of the below-then-above kind.
    pub fn script_a(&self) -> Option<f64> {
        match self.next {
            ReturnNext::A { value, .. } => Some(value),
            _ => None,
        }
    }
}

fn s1_of(spec: &PolycycleSpec, i: usize) -> Result<f64> {
    spec.corner(i)?
        .s1_value()
        .ok_or_else(|| Error::MissingCoefficient(format!("S₁ of corner {i}")))
}

fn s2_of(spec: &PolycycleSpec, i: usize) -> Result<f64> {
    spec.corner(i)?
        .s2_value()
        .ok_or_else(|| Error::MissingCoefficient(format!("S₂ of corner {i}")))
}

/// `𝒜 = Λₘ,ₙ A₁,ₘ A₁,ₙ (S₁^{m+1} − S₂^m)`
pub fn script_a(spec: &PolycycleSpec, m: usize) -> Result<f64> {
    let n = spec.n();
    Ok(lambda_product(spec, m, n)?
        * a_product(spec, 1, m)?
        * a_product(spec, 1, n)?
        * (s1_of(spec, m + 1)? - s2_of(spec, m)?))
}

/// `ℬ = r A₁,ₙ S₁¹`
pub fn script_b(spec: &PolycycleSpec) -> Result<f64> {
    Ok(spec.graphic_number() * a_product(spec, 1, spec.n())? * s1_of(spec, 1)?)
}

/// `𝒞 = −A₁,ₙ² S₂ⁿ`
pub fn script_c(spec: &PolycycleSpec) -> Result<f64> {
    let a = a_product(spec, 1, spec.n())?;
    Ok(-a * a * s2_of(spec, spec.n())?)
}

fn min_partial_exponent(spec: &PolycycleSpec) -> Result<f64> {
    let mut m = 1.0f64;
    for i in 1..=spec.n() {
        m = m.min(lambda_product(spec, 0, i)?);
    }
    Ok(m)
}

/// Return-map expansion in the given corner order.
pub fn return_expansion(spec: &PolycycleSpec) -> Result<ReturnExpansion> {
    let n = spec.n();
    let r = spec.graphic_number();
    let a1n = a_product(spec, 1, n)?;
    let block = spec.block_pattern();
    let leading = |flag: &str| -> Result<ReturnExpansion> {
        Ok(ReturnExpansion {
            r,
            a1n,
            pattern: spec.pattern_string(),
            block,
            next: ReturnNext::LeadingOnly,
            ell: Interval::new(0.0, min_partial_exponent(spec)?),
            flag: Some(flag.to_string()),
        })
    };
    let (next, ell) = match block {
        BlockPattern::HasAtOne => return leading("a corner ratio lies in the resonant band around 1"),
        BlockPattern::Interleaved => return leading("interleaved sign pattern has no second-order formula"),
        BlockPattern::BelowAbove { m } => {
            let l0m = lambda_product(spec, 0, m)?;
            (
                ReturnNext::A {
                    exponent: l0m,
                    value: script_a(spec, m)?,
                },
                Interval::new(l0m, r.min(2.0 * l0m).min(1.0)),
            )
        }
        BlockPattern::AllAbove => (
            ReturnNext::B {
                value: script_b(spec)?,
            },
            Interval::new(1.0, spec.corners[0].lambda.min(2.0)),
        ),
        BlockPattern::AllBelow => {
            let upper = if n == 1 { 1.0 } else { lambda_product(spec, 0, n - 1)? };
            (
                ReturnNext::C {
                    value: script_c(spec)?,
                },
                Interval::new(r, upper.min(2.0 * r)),
            )
        }
        BlockPattern::AboveBelow { m } => {
            if (r - 1.0).abs() <= AT_ONE_BAND {
                (
                    ReturnNext::AOmega {
                        b: script_b(spec)?,
                        c: script_c(spec)?,
                        alpha: 1.0 - r,
                    },
                    Interval::new(1.0, lambda_product(spec, 0, m)?.min(2.0)),
                )
            } else if r > 1.0 {
                (
                    ReturnNext::B {
                        value: script_b(spec)?,
                    },
                    Interval::new(1.0, r.min(2.0)),
                )
            } else {
                (
                    ReturnNext::C {
                        value: script_c(spec)?,
                    },
                    Interval::new(r, (2.0 * r).min(1.0)),
                )
            }
        }
    };
    Ok(ReturnExpansion {
        r,
        a1n,
        pattern: spec.pattern_string(),
        block,
        next,
        ell,
        flag: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplacementCase {
    ResonantOne,
    NotOne,
}

/// Leading data of `𝒟(s) = D_m∘…∘D_1(s) − D_{m+1}⁻¹∘…∘D_n⁻¹(s)` for corners
/// `1..=m` above one and the rest below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementExpansion {
    pub m: usize,
    pub lambda_0m: f64,
    pub lambda_mn_inv: f64,
    pub alpha: f64,
    pub a1m: f64,
    pub a_star: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    /// `Λ₀,ₘ S₁¹`, the linear coefficient of `U(s)`.
    pub u1: f64,
    pub case: DisplacementCase,
    pub ell: Interval,
}

impl DisplacementExpansion {
    pub fn psi(&self) -> [f64; 3] {
        [self.psi1, self.psi2, self.psi3]
    }

    /// `s^{Λₘ,ₙ⁻¹} U(s) (Ψ₁ω(s;α) + Ψ₂ + Ψ₃s)` with `U = 1 + Λ₀,ₘS₁¹s`.
    pub fn eval_truncated(&self, s: f64) -> f64 {
        let inner = self.psi1 * compensator(s, self.alpha) + self.psi2 + self.psi3 * s;
        s.powf(self.lambda_mn_inv) * (1.0 + self.u1 * s) * inner
    }
}

/// Displacement expansion; the corner order must be above-then-below.
pub fn displacement_expansion(spec: &PolycycleSpec) -> Result<DisplacementExpansion> {
    let m = match spec.block_pattern() {
        BlockPattern::AboveBelow { m } => m,
        other => {
            return Err(Error::Pattern(format!(
                "displacement needs corners above one followed by corners below one, got {} ({other:?})",
                spec.pattern_string()
            )))
        }
    };
    let n = spec.n();
    let lambda_0m = lambda_product(spec, 0, m)?;
    let lambda_mn_inv = 1.0 / lambda_product(spec, m, n)?;
    let alpha = lambda_mn_inv - lambda_0m;
    let a1m = a_product(spec, 1, m)?;
    let a_star = a_star(spec, m + 1, n)?;
    let s1 = s1_of(spec, 1)?;
    let s2 = s2_of(spec, n)?;
    let r = spec.graphic_number();
    let (case, ell) = if (r - 1.0).abs() <= AT_ONE_BAND {
        let hi = spec.corners[0]
            .lambda
            .min(1.0 / spec.corners[n - 1].lambda)
            .min(2.0);
        (DisplacementCase::ResonantOne, Interval::new(1.0, hi))
    } else {
        (
            DisplacementCase::NotOne,
            Interval::new(lambda_0m.max(lambda_mn_inv), (lambda_0m + 1.0).min(lambda_mn_inv + 1.0)),
        )
    };
    Ok(DisplacementExpansion {
        m,
        lambda_0m,
        lambda_mn_inv,
        alpha,
        a1m,
        a_star,
        psi1: alpha * a1m,
        psi2: a1m - a_star,
        psi3: a_star * (lambda_0m * s1 - lambda_mn_inv * s2),
        u1: lambda_0m * s1,
        case,
        ell,
    })
}

/// Rotate to an above-then-below order, returning the rotation used.
pub fn displacement_expansion_rotated(spec: &PolycycleSpec) -> Result<(usize, DisplacementExpansion)> {
    let k = spec
        .find_rotation(|p| matches!(p, BlockPattern::AboveBelow { .. }))
        .ok_or_else(|| {
            Error::Pattern(format!(
                "no relabeling of {} puts corners above one before corners below one",
                spec.pattern_string()
            ))
        })?;
    Ok((k, displacement_expansion(&spec.rotated(k))?))
}
