//! Corner lists and the products `Λ`, `A`, `B`, `C`, `A*`, `B*` over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{DulacCase, DulacExpansion};

/// How the corner ratios sit relative to 1 along the traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BlockPattern {
    AllBelow,
    AllAbove,
    /// Corners `1..=m` below one, the rest above.
    BelowAbove { m: usize },
    /// Corners `1..=m` above one, the rest below.
    AboveBelow { m: usize },
    Interleaved,
    HasAtOne,
}

/// Corner maps in traversal order; index 1 is the first corner after the
/// base section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolycycleSpec {
    pub corners: Vec<DulacExpansion>,
}

impl PolycycleSpec {
    pub fn new(corners: Vec<DulacExpansion>) -> Result<Self> {
        if corners.is_empty() {
            return Err(Error::Invalid("a polycycle needs at least one corner".into()));
        }
        Ok(Self { corners })
    }

    pub fn n(&self) -> usize {
        self.corners.len()
    }

    /// Corner `i`, 1-based.
    pub fn corner(&self, i: usize) -> Result<&DulacExpansion> {
        if i == 0 || i > self.n() {
            return Err(Error::Index(format!("corner {i} outside 1..={}", self.n())));
        }
        Ok(&self.corners[i - 1])
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.corners.iter().map(|d| d.lambda).collect()
    }

    /// `r = Π λᵢ`
    pub fn graphic_number(&self) -> f64 {
        self.corners.iter().map(|d| d.lambda).product()
    }

    /// `-`, `+` or `0` per corner.
    pub fn pattern_string(&self) -> String {
        self.corners
            .iter()
            .map(|d| match d.case {
                DulacCase::BelowOne => '-',
                DulacCase::AboveOne => '+',
                DulacCase::AtOne => '0',
            })
            .collect()
    }

    pub fn block_pattern(&self) -> BlockPattern {
        let cases: Vec<DulacCase> = self.corners.iter().map(|d| d.case).collect();
        if cases.contains(&DulacCase::AtOne) {
            return BlockPattern::HasAtOne;
        }
        let first = cases[0];
        let m = cases.iter().take_while(|&&c| c == first).count();
        if m == cases.len() {
            return match first {
                DulacCase::BelowOne => BlockPattern::AllBelow,
                _ => BlockPattern::AllAbove,
            };
        }
        if cases[m..].iter().any(|&c| c == first) {
            return BlockPattern::Interleaved;
        }
        match first {
            DulacCase::BelowOne => BlockPattern::BelowAbove { m },
            _ => BlockPattern::AboveBelow { m },
        }
    }

    /// The same polycycle with corner `k + 1` moved to the front.
    pub fn rotated(&self, k: usize) -> Self {
        let mut corners = self.corners.clone();
        corners.rotate_left(k % self.n());
        Self { corners }
    }

    /// Smallest rotation whose pattern satisfies `accept`.
    pub fn find_rotation(&self, accept: impl Fn(BlockPattern) -> bool) -> Option<usize> {
        (0..self.n()).find(|&k| accept(self.rotated(k).block_pattern()))
    }
}

fn check_range(spec: &PolycycleSpec, lo: usize, hi: usize, what: &str, i: usize, k: usize) -> Result<()> {
    if i < lo || k > spec.n() || i > k + hi {
        return Err(Error::Index(format!(
            "{what}: indices ({i}, {k}) out of range for {} corners",
            spec.n()
        )));
    }
    Ok(())
}

/// `Λ_{i,k} = Π_{j=i+1}^{k} λ_j`, with the empty product equal to 1.
pub fn lambda_product(spec: &PolycycleSpec, i: usize, k: usize) -> Result<f64> {
    check_range(spec, 0, 0, "Λ", i, k)?;
    Ok(spec.corners[i..k].iter().map(|d| d.lambda).product())
}

/// `A_{j,k} = Π_{i=j}^{k} (Δ₀₀ⁱ)^{Λ_{i,k}}`; `A_{j,j−1} = 1`.
pub fn a_product(spec: &PolycycleSpec, j: usize, k: usize) -> Result<f64> {
    check_range(spec, 1, 1, "A", j, k)?;
    let mut acc = 1.0;
    for i in j..=k {
        acc *= spec.corners[i - 1].delta00.powf(lambda_product(spec, i, k)?);
    }
    Ok(acc)
}

/// `B_{j,k} = Λ_{j,k} (Δ₁₀ʲ/Δ₀₀ʲ) A_{j,k}`
pub fn b_product(spec: &PolycycleSpec, j: usize, k: usize) -> Result<f64> {
    check_range(spec, 1, 0, "B", j, k)?;
    let d = &spec.corners[j - 1];
    let d10 = d
        .delta10()
        .ok_or_else(|| Error::MissingCoefficient(format!("Δ₁₀ of corner {j}")))?;
    Ok(lambda_product(spec, j, k)? * d10 / d.delta00 * a_product(spec, j, k)?)
}

/// `C_{j,k} = A_{j,k−1}^{2λ_k} Δ₀₁ᵏ`
pub fn c_product(spec: &PolycycleSpec, j: usize, k: usize) -> Result<f64> {
    check_range(spec, 1, 0, "C", j, k)?;
    let d = &spec.corners[k - 1];
    let d01 = d
        .delta01()
        .ok_or_else(|| Error::MissingCoefficient(format!("Δ₀₁ of corner {k}")))?;
    Ok(a_product(spec, j, k - 1)?.powf(2.0 * d.lambda) * d01)
}

/// `A*_{j,k} = Π_{i=0}^{k−j} (Δ₀₀^{k−i})^{−1/Λ_{j−1,k−i}}`, the leading
/// coefficient of `D_j⁻¹ ∘ … ∘ D_k⁻¹`.
pub fn a_star(spec: &PolycycleSpec, j: usize, k: usize) -> Result<f64> {
    check_range(spec, 1, 0, "A*", j, k)?;
    let mut acc = 1.0;
    for i in 0..=(k - j) {
        let e = -1.0 / lambda_product(spec, j - 1, k - i)?;
        acc *= spec.corners[k - i - 1].delta00.powf(e);
    }
    Ok(acc)
}

/// `B*_{j,k} = −Λ_{j−1,k}⁻¹ Δ₀₁ᵏ/(Δ₀₀ᵏ)² A*_{j,k}`
pub fn b_star(spec: &PolycycleSpec, j: usize, k: usize) -> Result<f64> {
    check_range(spec, 1, 0, "B*", j, k)?;
    let d = &spec.corners[k - 1];
    let d01 = d
        .delta01()
        .ok_or_else(|| Error::MissingCoefficient(format!("Δ₀₁ of corner {k}")))?;
    Ok(-d01 / (lambda_product(spec, j - 1, k)? * d.delta00 * d.delta00) * a_star(spec, j, k)?)
}
